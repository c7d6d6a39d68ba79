"""Regenerate the bundled labeled question corpus (text TAB label).

Deterministic: fixed seed, sorted topic list, fixed template banks. Label 0
is conceptual, label 1 is coding. Run from the repo root:

    python tools/generate_corpus.py
"""

import random
from pathlib import Path

TOPICS = sorted([
    "bubble sort", "merge sort", "quick sort", "insertion sort", "heap sort",
    "selection sort", "radix sort", "binary search", "linear search",
    "binary search trees", "AVL trees", "red-black trees", "B-trees",
    "hash tables", "hash collisions", "linked lists", "doubly linked lists",
    "circular buffers", "stacks", "queues", "priority queues", "deques",
    "heaps", "min-heaps", "max-heaps", "tries", "suffix trees",
    "segment trees", "Fenwick trees", "graphs", "adjacency lists",
    "adjacency matrices", "depth-first search", "breadth-first search",
    "Dijkstra's algorithm", "Bellman-Ford", "Floyd-Warshall",
    "topological sorting", "minimum spanning trees", "Kruskal's algorithm",
    "Prim's algorithm", "union-find", "dynamic programming", "memoization",
    "tabulation", "greedy algorithms", "backtracking", "divide and conquer",
    "recursion", "tail recursion", "big-O notation", "time complexity",
    "space complexity", "amortized analysis", "two pointers",
    "sliding windows", "binary heaps", "bloom filters", "LRU caches",
    "LFU caches", "regular expressions", "string matching",
    "the Knuth-Morris-Pratt algorithm", "edit distance",
    "longest common subsequence", "the knapsack problem", "matrix chain multiplication",
    "Huffman encoding", "run-length encoding", "data compression",
    "linear regression", "logistic regression", "polynomial regression",
    "ridge regression", "decision trees", "random forests", "AdaBoost",
    "gradient boosting", "support vector machines", "kernel methods",
    "k-means clustering", "hierarchical clustering", "DBSCAN",
    "principal component analysis", "t-SNE", "feature scaling",
    "cross-validation", "overfitting", "regularization", "gradient descent",
    "stochastic gradient descent", "neural networks", "perceptrons",
    "backpropagation", "activation functions", "convolutional networks",
    "recurrent networks", "LSTM networks", "word embeddings",
    "tokenization", "naive Bayes", "k-nearest neighbors",
    "confusion matrices", "precision and recall", "ROC curves",
    "train-test splits", "CSV parsing", "JSON parsing", "web scraping",
    "HTTP requests", "REST APIs", "sockets", "multithreading",
    "multiprocessing", "race conditions", "mutexes", "deadlocks",
    "file I/O", "exception handling", "unit testing", "list comprehensions",
    "generators", "decorators", "context managers", "iterators",
    "Sudoku solvers", "maze solvers", "expression parsing",
    "postfix evaluation", "balanced parentheses checking",
    "cycle detection in linked lists", "palindrome checking",
    "anagram detection", "matrix transposition", "prime sieves",
    "Fibonacci numbers", "binary exponentiation", "modular arithmetic",
    "bit manipulation", "date parsing", "bank account systems",
    "inventory management systems", "task schedulers",
    "calculator programs", "autocomplete systems",
])

CONCEPT_TEMPLATES = [
    "What is {t}?",
    "What are {t} and why do they matter?",
    "Understand what {t} is and why it is important in computer science.",
    "Understand the concept of {t} and its main properties.",
    "Learn about {t} and how it works.",
    "Learn the fundamental ideas behind {t}.",
    "Explore the real-world applications of {t}.",
    "Explore different approaches to {t}.",
    "Explain how {t} works in simple terms.",
    "Explain the difference between {t} and related techniques.",
    "Why is {t} useful in practice?",
    "Describe the main advantages and drawbacks of {t}.",
    "When should I choose {t} over the alternatives?",
    "Compare {t} with other common approaches.",
    "How does {t} behave in the worst case?",
    "What problems is {t} best suited for?",
]

CODE_TEMPLATES = [
    "Implement {t} in Python.",
    "Implement {t} from scratch in Python.",
    "Write a Python program that uses {t}.",
    "Write a function that demonstrates {t}.",
    "Write code to apply {t} to a small example.",
    "Build a small Python project around {t}.",
    "Build a command-line tool that performs {t}.",
    "Solve a practice problem using {t} in Python.",
    "Solve this exercise by applying {t}.",
    "Apply {t} to a real dataset in Python.",
    "Use {t} to process the given input and print the result.",
    "Use {t} in a short Python script.",
    "Code up {t} with test cases in Python.",
    "Develop a Python module implementing {t}.",
    "Write test cases to verify an implementation of {t}.",
    "Create a Python script that benchmarks {t}.",
]


def main():
    rng = random.Random(20260824)
    rows = []
    for topic in TOPICS:
        for tpl in rng.sample(CONCEPT_TEMPLATES, 5):
            rows.append((tpl.format(t=topic), 0))
        for tpl in rng.sample(CODE_TEMPLATES, 5):
            rows.append((tpl.format(t=topic), 1))
    rows = sorted(set(rows))
    out = Path(__file__).resolve().parents[1] / "src" / "codetutor" / "data" / "corpus.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for text, label in rows:
            fh.write(f"{text}\t{label}\n")
    print(f"wrote {len(rows)} questions to {out}")


if __name__ == "__main__":
    main()

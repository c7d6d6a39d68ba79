"""From-scratch recurrent question router: conceptual (0) vs coding (1).

A gated-memory recurrent network (embeddings -> stacked LSTM cells -> two
affine head layers) implemented directly in numpy, with full
backpropagation through time. No autograd framework: gradients here are
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .errors import (
    DegenerateCorpusError,
    EmptyTextError,
    ShapeMismatchError,
    VersionMismatchError,
)
from .session import TaskKind

PAD_ID = 0
UNK_ID = 1

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass
class Hyper:
    d_emb: int = 64
    d_hid: int = 128
    d_mid: int = 64
    num_layers: int = 2
    max_seq_len: int = 64
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    val_fraction: float = 0.1


@dataclass
class LabeledQuestion:
    text: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class Vocabulary:
    token_to_id: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.token_to_id) + 2  # pad + unk

    @classmethod
    def from_texts(cls, texts) -> "Vocabulary":
        tokens = set()
        for t in texts:
            tokens.update(split_tokens(t))
        mapping = {tok: i + 2 for i, tok in enumerate(sorted(tokens))}
        return cls(token_to_id=mapping)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


def split_tokens(text: str) -> list[str]:
    """Lowercase and split on word/punctuation boundaries."""
    return _TOKEN_RE.findall(text.lower())


def tokenize(text: str, vocab: Vocabulary, max_seq_len: int = 64) -> np.ndarray:
    """Map text to a fixed-length id sequence, padded with 0, OOV -> 1."""
    ids = [vocab.lookup(tok) for tok in split_tokens(text)][:max_seq_len]
    ids += [PAD_ID] * (max_seq_len - len(ids))
    return np.array(ids, dtype=np.int64)


@dataclass
class ClassifierModel:
    vocab: Vocabulary
    hyper: Hyper
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def param_names(self) -> list[str]:
        names = ["emb"]
        for layer in range(self.hyper.num_layers):
            names += [f"W_x{layer}", f"W_h{layer}", f"b_l{layer}"]
        names += ["W1", "b1", "W2", "b2"]
        return names


def init_model(vocab: Vocabulary, hyper: Optional[Hyper] = None, seed: int = 0) -> ClassifierModel:
    hyper = hyper or Hyper()
    rng = np.random.default_rng(seed)
    p: dict[str, np.ndarray] = {}
    p["emb"] = rng.uniform(-0.1, 0.1, size=(vocab.size, hyper.d_emb))
    for layer in range(hyper.num_layers):
        d_in = hyper.d_emb if layer == 0 else hyper.d_hid
        k = 1.0 / np.sqrt(hyper.d_hid)
        p[f"W_x{layer}"] = rng.uniform(-k, k, size=(d_in, 4 * hyper.d_hid))
        p[f"W_h{layer}"] = rng.uniform(-k, k, size=(hyper.d_hid, 4 * hyper.d_hid))
        p[f"b_l{layer}"] = np.zeros(4 * hyper.d_hid)
    k = 1.0 / np.sqrt(hyper.d_hid)
    p["W1"] = rng.uniform(-k, k, size=(hyper.d_hid, hyper.d_mid))
    p["b1"] = np.zeros(hyper.d_mid)
    k = 1.0 / np.sqrt(hyper.d_mid)
    p["W2"] = rng.uniform(-k, k, size=(hyper.d_mid, 2))
    p["b2"] = np.zeros(2)
    return ClassifierModel(vocab=vocab, hyper=hyper, params=p)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _forward_batch(model: ClassifierModel, ids: np.ndarray, want_cache: bool = False):
    """Run the network over a batch of id matrices (B, T).

    Padding steps are no-ops: hidden and cell states carry through, so the
    final state equals the state after the last real token.
    """
    h = model.hyper
    p = model.params
    B, T = ids.shape
    mask = (ids != PAD_ID).astype(np.float64)  # (B, T)
    x = p["emb"][ids]  # (B, T, E)
    cache = {"ids": ids, "mask": mask, "layer_inputs": [], "steps": []}
    H = h.d_hid
    for layer in range(h.num_layers):
        Wx, Wh, b = p[f"W_x{layer}"], p[f"W_h{layer}"], p[f"b_l{layer}"]
        hs = np.zeros((B, T, H))
        hid = np.zeros((B, H))
        cell = np.zeros((B, H))
        steps = []
        for t in range(T):
            xt = x[:, t, :]
            z = xt @ Wx + hid @ Wh + b
            gi = _sigmoid(z[:, :H])
            gf = _sigmoid(z[:, H:2 * H])
            gg = np.tanh(z[:, 2 * H:3 * H])
            go = _sigmoid(z[:, 3 * H:])
            c_new = gf * cell + gi * gg
            tc = np.tanh(c_new)
            h_new = go * tc
            m = mask[:, t:t + 1]
            if want_cache:
                steps.append((xt, hid, cell, gi, gf, gg, go, c_new, tc, m))
            cell = m * c_new + (1.0 - m) * cell
            hid = m * h_new + (1.0 - m) * hid
            hs[:, t, :] = hid
        if want_cache:
            cache["layer_inputs"].append(x)
            cache["steps"].append(steps)
        x = hs
    final_h = x[:, -1, :] if T > 0 else np.zeros((B, H))
    z1 = np.tanh(final_h @ p["W1"] + p["b1"])
    logits = z1 @ p["W2"] + p["b2"]
    logits = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(logits)
    probs = ex / ex.sum(axis=1, keepdims=True)
    if want_cache:
        cache["final_h"] = final_h
        cache["z1"] = z1
        cache["probs"] = probs
        return probs, cache
    return probs


def forward(model: ClassifierModel, ids: np.ndarray) -> tuple[float, float]:
    """Softmax probability pair (p_concept, p_code) for one padded sequence."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.shape[0] != model.hyper.max_seq_len:
        raise ShapeMismatchError(
            f"expected id sequence of length {model.hyper.max_seq_len}, got shape {ids.shape}"
        )
    probs = _forward_batch(model, ids[None, :])
    return float(probs[0, 0]), float(probs[0, 1])


def _backward_batch(model: ClassifierModel, cache, labels: np.ndarray):
    """Backpropagation through time for the summed cross-entropy loss."""
    h = model.hyper
    p = model.params
    probs = cache["probs"]
    B = probs.shape[0]
    H = h.d_hid
    grads = {name: np.zeros_like(p[name]) for name in model.param_names()}

    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0  # d(-sum log p_true)/dlogits
    z1 = cache["z1"]
    grads["W2"] = z1.T @ dlogits
    grads["b2"] = dlogits.sum(axis=0)
    dz1 = (dlogits @ p["W2"].T) * (1.0 - z1 ** 2)
    final_h = cache["final_h"]
    grads["W1"] = final_h.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    dfinal = dz1 @ p["W1"].T  # (B, H)

    ids = cache["ids"]
    T = ids.shape[1]
    # grad w.r.t. each layer's full output sequence; only the top layer's
    # final step receives head gradient directly.
    dout = np.zeros((B, T, H))
    if T > 0:
        dout[:, -1, :] = dfinal
    for layer in reversed(range(h.num_layers)):
        Wx, Wh = p[f"W_x{layer}"], p[f"W_h{layer}"]
        steps = cache["steps"][layer]
        layer_in = cache["layer_inputs"][layer]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros_like(p[f"b_l{layer}"])
        dx = np.zeros_like(layer_in)
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        for t in reversed(range(T)):
            xt, h_prev, c_prev, gi, gf, gg, go, c_new, tc, m = steps[t]
            dh_t = dh + dout[:, t, :]
            dh_new = dh_t * m
            dh_carry = dh_t * (1.0 - m)
            dc_new = dc * m + dh_new * go * (1.0 - tc ** 2)
            do = dh_new * tc
            di = dc_new * gg
            df = dc_new * c_prev
            dg = dc_new * gi
            dz = np.concatenate(
                [
                    di * gi * (1.0 - gi),
                    df * gf * (1.0 - gf),
                    dg * (1.0 - gg ** 2),
                    do * go * (1.0 - go),
                ],
                axis=1,
            )
            dWx += xt.T @ dz
            dWh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] = dz @ Wx.T
            dh = dz @ Wh.T + dh_carry
            dc = dc_new * gf + dc * (1.0 - m)
        grads[f"W_x{layer}"] = dWx
        grads[f"W_h{layer}"] = dWh
        grads[f"b_l{layer}"] = db
        dout = dx  # becomes the output-sequence gradient of the layer below
    # dout now holds gradient w.r.t. the embedding lookups.
    np.add.at(grads["emb"], ids, dout)
    return grads


def loss_and_grads(model: ClassifierModel, batch: list[LabeledQuestion]):
    """Summed cross-entropy loss over the batch plus gradients for every tensor.

    The printed objective is a log-likelihood; we return its negation so
    that minimization is the correct direction.
    """
    if not batch:
        raise EmptyTextError("batch must be non-empty")
    ids = np.stack(
        [tokenize(q.text, model.vocab, model.hyper.max_seq_len) for q in batch]
    )
    labels = np.array([q.label for q in batch], dtype=np.int64)
    return _loss_and_grads_ids(model, ids, labels)


def _loss_and_grads_ids(model: ClassifierModel, ids: np.ndarray, labels: np.ndarray):
    # Trailing all-pad timesteps are no-ops; drop them for speed.
    T_eff = int((ids != PAD_ID).any(axis=0).cumsum().max()) if ids.size else 0
    T_eff = max(T_eff, 1)
    ids_t = ids[:, :T_eff]
    probs, cache = _forward_batch(model, ids_t, want_cache=True)
    eps = 1e-12
    loss = -float(np.log(probs[np.arange(len(labels)), labels] + eps).sum())
    grads = _backward_batch(model, cache, labels)
    return loss, grads


def batch_loss(model: ClassifierModel, batch: list[LabeledQuestion]) -> float:
    ids = np.stack(
        [tokenize(q.text, model.vocab, model.hyper.max_seq_len) for q in batch]
    )
    labels = np.array([q.label for q in batch], dtype=np.int64)
    probs = _forward_batch(model, ids)
    return -float(np.log(probs[np.arange(len(labels)), labels] + 1e-12).sum())


class _Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + self.eps)


def stratified_split(corpus: list[LabeledQuestion], val_fraction: float, rng):
    by_label: dict[int, list[LabeledQuestion]] = {0: [], 1: []}
    for q in corpus:
        by_label[q.label].append(q)
    train, val = [], []
    for label in (0, 1):
        group = by_label[label]
        order = rng.permutation(len(group))
        n_val = max(1, int(round(len(group) * val_fraction)))
        for j, idx in enumerate(order):
            (val if j < n_val else train).append(group[idx])
    return train, val


def train(
    corpus: list[LabeledQuestion],
    hyper: Optional[Hyper] = None,
    seed: int = 0,
) -> tuple[ClassifierModel, dict]:
    """Train the router on a labeled corpus; returns model plus metrics.

    The corpus is canonicalized by sorting before the seed-derived shuffle,
    so the input ordering never influences the trained parameters.
    """
    hyper = hyper or Hyper()
    labels_present = {q.label for q in corpus}
    if labels_present != {0, 1}:
        raise DegenerateCorpusError("corpus must contain both classes")
    corpus = sorted(corpus, key=lambda q: (q.text, q.label))
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.from_texts(q.text for q in corpus)
    model = init_model(vocab, hyper, seed=seed)
    train_set, val_set = stratified_split(corpus, hyper.val_fraction, rng)

    train_ids = np.stack(
        [tokenize(q.text, vocab, hyper.max_seq_len) for q in train_set]
    )
    train_labels = np.array([q.label for q in train_set], dtype=np.int64)
    val_ids = np.stack([tokenize(q.text, vocab, hyper.max_seq_len) for q in val_set])
    val_labels = np.array([q.label for q in val_set], dtype=np.int64)

    opt = _Adam(model.params, hyper.learning_rate)
    metrics = {"train_loss": [], "val_accuracy": []}
    n = len(train_set)
    for _epoch in range(hyper.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = _loss_and_grads_ids(model, train_ids[idx], train_labels[idx])
            for k in grads:
                grads[k] /= len(idx)
            opt.step(model.params, grads)
            total += loss
        probs = _forward_batch(model, val_ids)
        acc = float((probs.argmax(axis=1) == val_labels).mean())
        metrics["train_loss"].append(total / n)
        metrics["val_accuracy"].append(acc)
    return model, metrics


def classify(model: ClassifierModel, text: str) -> TaskKind:
    """Route a question: Concept iff p_concept >= p_code (tie -> Concept)."""
    if not text.strip():
        raise EmptyTextError("cannot classify empty text")
    ids = tokenize(text, model.vocab, model.hyper.max_seq_len)
    p_concept, p_code = forward(model, ids)
    return TaskKind.CONCEPT if p_concept >= p_code else TaskKind.CODE


# ---------------------------------------------------------------------------
# Versioned binary model file: magic, JSON metadata block, raw <f8 tensors.

_MAGIC = b"CTQC"
_VERSION = 1


def save(model: ClassifierModel, path) -> None:
    meta = {
        "hyper": asdict(model.hyper),
        "vocab": sorted(model.vocab.token_to_id, key=model.vocab.token_to_id.get),
        "tensors": [[name, list(model.params[name].shape)] for name in model.param_names()],
    }
    blob = json.dumps(meta, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in model.param_names():
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load(path) -> ClassifierModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != _MAGIC:
        raise VersionMismatchError("not a classifier model file (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != _VERSION:
        raise VersionMismatchError(f"unsupported model file version {version}")
    (meta_len,) = struct.unpack("<I", data[8:12])
    try:
        meta = json.loads(data[12:12 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IOError(f"corrupt model metadata: {exc}") from exc
    hyper = Hyper(**meta["hyper"])
    vocab = Vocabulary(token_to_id={tok: i + 2 for i, tok in enumerate(meta["vocab"])})
    params: dict[str, np.ndarray] = {}
    offset = 12 + meta_len
    for name, shape in meta["tensors"]:
        count = int(np.prod(shape))
        end = offset + count * 8
        if end > len(data):
            raise IOError("truncated model file")
        params[name] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    return ClassifierModel(vocab=vocab, hyper=hyper, params=params)

// Pure HTML rendering: state in, markup out. main.ts owns the DOM and
// event delegation, so everything here is unit-testable as strings.

import type { UiSessionState } from './state';
import type { AnswerView, CodeAnswerView, ConceptAnswerView } from './types';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function renderTimeline(state: UiSessionState): string {
  if (state.subtasks.length === 0) {
    return '<p class="empty">No sub-tasks yet. Ask something below.</p>';
  }
  const items = state.subtasks
    .map(
      (st) => `
  <li class="subtask status-${st.status.toLowerCase()}" data-subtask-id="${st.id}">
    <span class="kind">${st.kind}</span>
    <span class="text">${escapeHtml(st.text)}</span>
    <span class="status">${st.status}</span>
  </li>`,
    )
    .join('');
  return `<ol class="timeline">${items}</ol>`;
}

function renderConcept(answer: ConceptAnswerView): string {
  const chips = answer.keywords
    .map(
      (k) => `
  <li>
    <button class="keyword-chip" data-keyword="${escapeHtml(k.surface)}">${escapeHtml(k.surface)}</button>
    ${k.definition ? `<span class="definition">${escapeHtml(k.definition)}</span>` : ''}
  </li>`,
    )
    .join('');
  const related = answer.related
    .map(
      (r) => `
  <li><span class="q">Q: ${escapeHtml(r.question)}</span><span class="a">A: ${escapeHtml(r.answer)}</span></li>`,
    )
    .join('');
  return `
<section class="concept-answer">
  <p class="explanation">${escapeHtml(answer.explanation)}</p>
  <ul class="keywords">${chips}</ul>
  <ul class="related">${related}</ul>
</section>`;
}

function renderCode(answer: CodeAnswerView): string {
  const lines = answer.code
    .replace(/\n$/, '')
    .split('\n')
    .map(
      (line, i) => `
  <tr class="code-line" data-line="${i + 1}"><td class="lineno">${i + 1}</td><td class="src">${escapeHtml(line)}</td></tr>`,
    )
    .join('');
  const lintRows = (answer.lint?.messages ?? [])
    .map(
      (m) => `
  <li>
    <button class="lint-row" data-message-id="${m.id}">
      line ${m.line}, col ${m.column}: ${escapeHtml(m.rule)} ${escapeHtml(m.text)}
    </button>
  </li>`,
    )
    .join('');
  const run = answer.run
    ? `
<section class="run-output verdict-${answer.run.verdict.toLowerCase()}">
  <h3>Run: ${answer.run.verdict}</h3>
  <pre class="stdout">${escapeHtml(answer.run.stdout)}</pre>
  ${answer.run.err_summary ? `<p class="err-summary">${escapeHtml(answer.run.err_summary)}</p>` : ''}
</section>`
    : '';
  return `
<section class="code-answer" data-revision="${answer.revision}">
  <table class="code">${lines}</table>
  <p class="lint-verdict">Lint: ${answer.lint?.verdict ?? 'pending'}</p>
  <ul class="lint-messages">${lintRows}</ul>
  ${run}
</section>`;
}

function renderAnswer(answer: AnswerView | null): string {
  if (!answer) {
    return '<p class="empty">No answer yet.</p>';
  }
  return answer.type === 'concept' ? renderConcept(answer) : renderCode(answer);
}

function renderFeed(state: UiSessionState): string {
  const rows = state.feed
    .slice(-50)
    .map(
      (ev) => `
  <li class="event kind-${ev.kind.toLowerCase()}">#${ev.seq} ${ev.kind}</li>`,
    )
    .join('');
  return `<ul class="feed">${rows}</ul>`;
}

export function renderApp(state: UiSessionState): string {
  return `
<div class="session" data-session-id="${escapeHtml(state.sessionId)}" data-last-seq="${state.lastSeq}">
  ${state.connectionLost ? '<div class="banner reconnect">Connection lost — reconnecting…</div>' : ''}
  ${renderTimeline(state)}
  <div class="answer-panel">${renderAnswer(state.answer)}</div>
  <form class="ask-form">
    <input name="question" placeholder="Ask a question or describe the next step" ${state.pending ? 'disabled' : ''} />
    <label><input type="radio" name="mode" value="Fix" checked /> How to fix …</label>
    <label><input type="radio" name="mode" value="Request" /> I want to …</label>
    <button type="submit" ${state.pending ? 'disabled' : ''}>Send</button>
    <button type="button" class="repair-btn" ${state.pending ? 'disabled' : ''}>Repair</button>
    <button type="button" class="accept-btn" ${state.pending ? 'disabled' : ''}>Accept</button>
  </form>
  <details class="activity"><summary>Activity (${state.feed.length} events, ${state.llmCalls} LLM calls, ${state.repairIters} repairs)</summary>${renderFeed(state)}</details>
</div>`;
}

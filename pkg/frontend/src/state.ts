// UI state is a deterministic fold over the session event stream plus the
// latest fetched session view. reduce() is pure: replaying a recorded
// stream reproduces the same model byte for byte.

import type {
  AnswerView,
  SessionEvent,
  SessionView,
  SubTaskView,
  TaskKind,
  TaskStatus,
} from './types';

export interface UiSubTask {
  id: number;
  text: string;
  kind: TaskKind;
  status: TaskStatus;
}

export interface UiSessionState {
  sessionId: string;
  subtasks: UiSubTask[];
  feed: SessionEvent[];
  lastSeq: number;
  llmCalls: number;
  repairIters: number;
  lastLintVerdict: 'Pass' | 'Fail' | null;
  lastRunVerdict: string | null;
  // Fetched projection of the latest answer; refreshed after each job.
  answer: AnswerView | null;
  pending: boolean;
  connectionLost: boolean;
}

export function initialState(sessionId: string): UiSessionState {
  return {
    sessionId,
    subtasks: [],
    feed: [],
    lastSeq: 0,
    llmCalls: 0,
    repairIters: 0,
    lastLintVerdict: null,
    lastRunVerdict: null,
    answer: null,
    pending: false,
    connectionLost: false,
  };
}

function withSubtask(
  subtasks: UiSubTask[],
  id: number,
  update: (st: UiSubTask) => UiSubTask,
): UiSubTask[] {
  return subtasks.map((st) => (st.id === id ? update(st) : st));
}

export function reduce(state: UiSessionState, event: SessionEvent): UiSessionState {
  if (event.seq <= state.lastSeq) {
    return state; // replays and reconnect overlap are no-ops
  }
  const next: UiSessionState = {
    ...state,
    feed: [...state.feed, event],
    lastSeq: event.seq,
  };
  const p = event.payload;
  switch (event.kind) {
    case 'SubTaskStarted':
      next.subtasks = [
        ...state.subtasks,
        {
          id: p.subtask_id as number,
          text: p.text as string,
          kind: 'Unclassified',
          status: 'Pending',
        },
      ];
      next.pending = true;
      break;
    case 'Classified':
      next.subtasks = withSubtask(next.subtasks, p.subtask_id as number, (st) => ({
        ...st,
        kind: p.kind as TaskKind,
        status: 'InProgress',
      }));
      break;
    case 'ResponseReceived':
      next.llmCalls = state.llmCalls + 1;
      break;
    case 'RepairRequested':
      next.repairIters = state.repairIters + 1;
      break;
    case 'LintRun':
      next.lastLintVerdict = p.verdict as 'Pass' | 'Fail';
      break;
    case 'CodeRun':
      next.lastRunVerdict = p.verdict as string;
      break;
    case 'SubTaskFinished':
      next.subtasks = withSubtask(next.subtasks, p.subtask_id as number, (st) => ({
        ...st,
        status: p.outcome as TaskStatus,
      }));
      next.pending = false;
      break;
    default:
      break;
  }
  return next;
}

export function reduceAll(state: UiSessionState, events: SessionEvent[]): UiSessionState {
  return events.reduce(reduce, state);
}

/** Merge a fetched session view: the answer panel and authoritative statuses. */
export function mergeView(state: UiSessionState, view: SessionView): UiSessionState {
  const statuses = new Map(view.subtasks.map((st: SubTaskView) => [st.id, st.status]));
  return {
    ...state,
    answer: view.answer,
    subtasks: state.subtasks.map((st) => ({
      ...st,
      status: statuses.get(st.id) ?? st.status,
    })),
  };
}

/** Rebuild the full model from a recorded stream and the final view. */
export function replay(
  sessionId: string,
  events: SessionEvent[],
  finalView: SessionView | null,
): UiSessionState {
  const folded = reduceAll(initialState(sessionId), events);
  return finalView ? mergeView(folded, finalView) : folded;
}

// Mirrors of the service API payloads. The UI invents no state of its own:
// everything here comes from a REST response or a stream event.

export type TaskKind = 'Concept' | 'Code' | 'Unclassified';

export type TaskStatus =
  | 'Pending'
  | 'InProgress'
  | 'Completed'
  | 'Failed'
  | 'TimedOut';

export interface SubTaskView {
  id: number;
  text: string;
  kind: TaskKind;
  status: TaskStatus;
  elapsed: number | null;
}

export interface KeywordView {
  surface: string;
  definition: string | null;
}

export interface RelatedView {
  question: string;
  answer: string;
}

export interface LintMessageView {
  id: string;
  line: number;
  column: number;
  rule: string;
  text: string;
}

export interface LintView {
  verdict: 'Pass' | 'Fail';
  messages: LintMessageView[];
}

export interface RunView {
  verdict: 'Ok' | 'RuntimeError' | 'Timeout' | 'ResourceLimit';
  stdout: string;
  stderr: string;
  err_summary: string | null;
}

export interface ConceptAnswerView {
  type: 'concept';
  explanation: string;
  keywords: KeywordView[];
  related: RelatedView[];
}

export interface CodeAnswerView {
  type: 'code';
  code: string;
  revision: number;
  lint: LintView | null;
  run: RunView | null;
  related: RelatedView[];
}

export type AnswerView = ConceptAnswerView | CodeAnswerView;

export interface SessionView {
  id: string;
  subtasks: SubTaskView[];
  answer: AnswerView | null;
  last_seq: number;
}

export type EventKind =
  | 'SubTaskStarted'
  | 'Classified'
  | 'PromptSent'
  | 'ResponseReceived'
  | 'LintRun'
  | 'CodeRun'
  | 'RepairRequested'
  | 'KeywordDefined'
  | 'SubTaskFinished';

export interface SessionEvent {
  seq: number;
  ts_ms: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type RepairMode = 'Fix' | 'Request';

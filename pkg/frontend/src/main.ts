// Browser entry point: owns the DOM, delegates clicks to API calls, and
// feeds stream events through the pure reducer.

import { ApiClient } from './api';
import { initialState, mergeView, reduce, type UiSessionState } from './state';
import { renderApp } from './render';

const BASE_URL = (window as unknown as { CODETUTOR_API?: string }).CODETUTOR_API ?? '';

class App {
  private state: UiSessionState = initialState('');
  private client = new ApiClient(BASE_URL);
  private root: HTMLElement;
  private streaming = false;

  constructor(root: HTMLElement) {
    this.root = root;
    this.root.addEventListener('click', (ev) => this.onClick(ev));
    this.root.addEventListener('submit', (ev) => this.onSubmit(ev));
  }

  async start(): Promise<void> {
    const id = await this.client.createSession();
    this.state = initialState(id);
    this.render();
    void this.streamLoop();
  }

  private render(): void {
    this.root.innerHTML = renderApp(this.state);
  }

  private async refreshView(): Promise<void> {
    const view = await this.client.getSession(this.state.sessionId);
    this.state = mergeView(this.state, view);
    this.render();
  }

  private async streamLoop(): Promise<void> {
    if (this.streaming) {
      return;
    }
    this.streaming = true;
    for (;;) {
      try {
        const before = this.state.lastSeq;
        const last = await this.client.readEvents(
          this.state.sessionId,
          this.state.lastSeq,
          (event) => {
            this.state = reduce(this.state, event);
          },
          true,
          25,
        );
        if (this.state.connectionLost) {
          this.state = { ...this.state, connectionLost: false };
        }
        if (last !== before) {
          await this.refreshView();
        } else {
          this.render();
        }
      } catch {
        this.state = { ...this.state, connectionLost: true };
        this.render();
        await new Promise((resolve) => setTimeout(resolve, 1000));
      }
    }
  }

  private async onSubmit(ev: Event): Promise<void> {
    ev.preventDefault();
    const form = ev.target as HTMLFormElement;
    const input = form.querySelector<HTMLInputElement>('input[name="question"]');
    const question = input?.value.trim();
    if (!question) {
      return;
    }
    await this.guard(() => this.client.submitSubtask(this.state.sessionId, question));
  }

  private async onClick(ev: Event): Promise<void> {
    const target = ev.target as HTMLElement;
    const lintRow = target.closest<HTMLElement>('.lint-row');
    if (lintRow?.dataset.messageId) {
      await this.guard(() =>
        this.client.repairLintMessage(this.state.sessionId, lintRow.dataset.messageId as string),
      );
      return;
    }
    const chip = target.closest<HTMLElement>('.keyword-chip');
    if (chip?.dataset.keyword) {
      await this.guard(() =>
        this.client.defineKeyword(this.state.sessionId, chip.dataset.keyword as string),
      );
      return;
    }
    if (target.closest('.repair-btn')) {
      const form = this.root.querySelector<HTMLFormElement>('.ask-form');
      const text = form?.querySelector<HTMLInputElement>('input[name="question"]')?.value.trim();
      const mode = form?.querySelector<HTMLInputElement>('input[name="mode"]:checked')?.value as
        | 'Fix'
        | 'Request'
        | undefined;
      if (text && mode) {
        await this.guard(() => this.client.repairRuntime(this.state.sessionId, mode, text));
      }
      return;
    }
    if (target.closest('.accept-btn')) {
      await this.guard(async () => {
        await this.client.accept(this.state.sessionId);
        await this.refreshView();
      });
    }
  }

  private async guard(action: () => Promise<unknown>): Promise<void> {
    try {
      await action();
    } catch (err) {
      console.error('request failed', err);
    }
  }
}

const root = document.getElementById('app');
if (root) {
  const app = new App(root);
  void app.start();
}

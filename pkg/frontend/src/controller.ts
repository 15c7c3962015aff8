// Session flow controller: holds the latest snapshot, runs actions through
// the API client, and re-polls the snapshot after every action so the view
// is always rendered from authoritative server state.

import { ApiClient } from './api.js';
import { buttonStateFor, type ButtonState } from './state.js';
import type { EditPayload, SessionSnapshot } from './types.js';

export interface FlowView {
  snapshot: SessionSnapshot | null;
  buttons: ButtonState | null;
  busy: boolean;
  error: string | null;
}

type Listener = (view: FlowView) => void;

export class SessionFlow {
  private snapshot: SessionSnapshot | null = null;
  private busy = false;
  private error: string | null = null;

  constructor(
    private api: ApiClient,
    private listener: Listener,
  ) {}

  view(): FlowView {
    return {
      snapshot: this.snapshot,
      buttons: this.snapshot ? buttonStateFor(this.snapshot) : null,
      busy: this.busy,
      error: this.error,
    };
  }

  private emit(): void {
    this.listener(this.view());
  }

  private async act(action: () => Promise<unknown>): Promise<void> {
    this.busy = true;
    this.error = null;
    this.emit();
    try {
      await action();
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
      if (this.snapshot) {
        // Re-poll so failed actions still show the server's current state,
        // including any error audit entries.
        try {
          this.snapshot = await this.api.getSession(this.snapshot.session_id);
        } catch {
          // keep the previous snapshot if the poll itself fails
        }
      }
      this.emit();
    }
  }

  get sessionId(): string | null {
    return this.snapshot?.session_id ?? null;
  }

  async create(caseText: string, table: string, shots: number, ablation: boolean): Promise<void> {
    await this.act(async () => {
      const id = await this.api.createSession(caseText, table, shots, ablation);
      this.snapshot = await this.api.getSession(id);
    });
  }

  async open(sessionId: string): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.getSession(sessionId);
    });
  }

  private requireId(): string {
    if (!this.snapshot) throw new Error('no active session');
    return this.snapshot.session_id;
  }

  async decompose(): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.decompose(this.requireId());
    });
  }

  async attribute(): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.attribute(this.requireId());
    });
  }

  async saveEdits(edits: EditPayload): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.saveEdits(this.requireId(), edits);
    });
  }

  async resolve(): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.resolve(this.requireId());
    });
  }

  async reopen(): Promise<void> {
    await this.act(async () => {
      this.snapshot = await this.api.reopen(this.requireId());
    });
  }
}

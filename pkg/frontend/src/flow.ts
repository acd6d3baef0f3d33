// Session flow state machine. Pure logic, no DOM: main.ts subscribes and
// renders. Exactly one API call is ever in flight; clicks landing while one
// is pending are dropped, which is what makes double clicks harmless.

import { ApiError, ObjectView, PairView, SessionApi } from "./api.js";

export type Side = "current" | "proposed";

export interface ViewState {
  phase: "idle" | "active" | "busy" | "done" | "error";
  sessionId: string | null;
  current: ObjectView | null;
  proposed: ObjectView | null;
  clicks: number;
  finalCost: number | null;
  banner: string | null;
}

export type Listener = (state: ViewState) => void;

export class SessionFlow {
  private state: ViewState = {
    phase: "idle",
    sessionId: null,
    current: null,
    proposed: null,
    clicks: 0,
    finalCost: null,
    banner: null,
  };
  private turn = 0;
  private inFlight = false;
  private listeners: Listener[] = [];

  constructor(private api: SessionApi) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  get view(): ViewState {
    return this.state;
  }

  private emit(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const l of this.listeners) l(this.state);
  }

  private adoptPair(pair: PairView): void {
    this.turn = pair.turn;
    this.emit({
      phase: "active",
      current: pair.current,
      proposed: pair.proposed,
      banner: null,
    });
  }

  async start(datasetId: string, policyMode: string, epsilon: number): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.emit({ phase: "busy", clicks: 0, finalCost: null, banner: null });
    try {
      const pair = await this.api.createSession(datasetId, policyMode, epsilon);
      this.emit({ sessionId: pair.session_id ?? null });
      this.adoptPair(pair);
    } catch (err) {
      this.emit({ phase: "error", banner: describe(err) });
    } finally {
      this.inFlight = false;
    }
  }

  /** The user says the given side looks closer to their target. */
  async clickCloser(side: Side): Promise<void> {
    if (this.inFlight || this.state.phase !== "active" || !this.state.sessionId) return;
    this.inFlight = true;
    this.emit({ phase: "busy", clicks: this.state.clicks + 1 });
    try {
      const pair = await this.api.answer(this.state.sessionId, side, this.turn);
      this.adoptPair(pair);
    } catch (err) {
      await this.recover(err);
    } finally {
      this.inFlight = false;
    }
  }

  /** The user says the given side *is* the target. */
  async clickFound(side: Side): Promise<void> {
    if (this.inFlight || this.state.phase !== "active" || !this.state.sessionId) return;
    const obj = side === "current" ? this.state.current : this.state.proposed;
    if (!obj) return;
    this.inFlight = true;
    this.emit({ phase: "busy", clicks: this.state.clicks + 1 });
    try {
      const ack = await this.api.markFound(this.state.sessionId, obj.id);
      this.emit({ phase: "done", finalCost: ack.cost, banner: `found in ${ack.cost} queries` });
    } catch (err) {
      await this.recover(err);
    } finally {
      this.inFlight = false;
    }
  }

  /** A 409 means our view went stale; the stats endpoint is the truth. */
  private async recover(err: unknown): Promise<void> {
    if (err instanceof ApiError && err.status === 409 && this.state.sessionId) {
      try {
        const stats = await this.api.stats(this.state.sessionId);
        if (stats.status === "found") {
          this.emit({ phase: "done", finalCost: stats.cost, banner: `found in ${stats.cost} queries` });
        } else {
          this.emit({ phase: "error", banner: `session is ${stats.status}` });
        }
        return;
      } catch {
        // fall through to the generic banner
      }
    }
    this.emit({ phase: "error", banner: describe(err) });
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `service error (${err.status})`;
  return "service unreachable; retry in a moment";
}

import type { NetworkDescription, RoundOutcome, SessionSummary } from './types.js';
import { edgeName } from './types.js';

export interface HistoryEntry {
  round: number;
  allocation: Record<string, number>;
  outcome: 'compromised' | 'defended';
  path: string[];
}

/** Client-side session state: staged units per edge, history, and the same
 * validation rules the server applies, so an invalid allocation can never be
 * submitted. */
export class SessionState {
  readonly network: NetworkDescription;
  readonly unitBudget: number;
  readonly totalRounds: number;
  sessionId: string | null = null;
  currentRound = 1;
  staged: Map<string, number>;
  history: HistoryEntry[] = [];
  summary: SessionSummary | null = null;
  inFlight = false;

  constructor(network: NetworkDescription, unitBudget: number, totalRounds: number) {
    this.network = network;
    this.unitBudget = unitBudget;
    this.totalRounds = totalRounds;
    this.staged = new Map(network.edges.map((e) => [edgeName(e.from, e.to), 0]));
  }

  get stagedTotal(): number {
    let total = 0;
    for (const units of this.staged.values()) total += units;
    return total;
  }

  get remainingUnits(): number {
    return this.unitBudget - this.stagedTotal;
  }

  get complete(): boolean {
    return this.history.length >= this.totalRounds;
  }

  /** Integer-only staging; never below zero, never beyond the budget. */
  adjust(edge: string, delta: number): void {
    if (!this.staged.has(edge)) throw new Error(`unknown edge ${edge}`);
    if (!Number.isInteger(delta)) throw new Error('unit changes must be whole units');
    const current = this.staged.get(edge) ?? 0;
    const next = current + delta;
    if (next < 0) return;
    if (delta > 0 && this.remainingUnits < delta) return;
    this.staged.set(edge, next);
  }

  setUnits(edge: string, units: number): void {
    if (!this.staged.has(edge)) throw new Error(`unknown edge ${edge}`);
    if (!Number.isInteger(units) || units < 0) return;
    const others = this.stagedTotal - (this.staged.get(edge) ?? 0);
    this.staged.set(edge, Math.min(units, this.unitBudget - others));
  }

  /** Zero every staged unit (start the round's allocation over). */
  clear(): void {
    for (const edge of this.staged.keys()) this.staged.set(edge, 0);
  }

  /** Submission is allowed exactly when every unit is staged. */
  get canSubmit(): boolean {
    if (this.complete || this.inFlight) return false;
    return this.validationError() === null;
  }

  validationError(): string | null {
    for (const [edge, units] of this.staged) {
      if (!Number.isInteger(units) || units < 0) {
        return `units on ${edge} must be nonnegative whole numbers`;
      }
    }
    const total = this.stagedTotal;
    if (total !== this.unitBudget) {
      return `allocate all ${this.unitBudget} units (currently ${total})`;
    }
    return null;
  }

  allocationPayload(): Record<string, number> {
    const error = this.validationError();
    if (error) throw new Error(error);
    return Object.fromEntries(this.staged);
  }

  /** Record a resolved round; staging is kept so a similar allocation can be
   * replayed or tweaked next round. */
  recordOutcome(result: RoundOutcome, allocation: Record<string, number>): void {
    this.history.push({
      round: result.round,
      allocation,
      outcome: result.outcome,
      path: result.path,
    });
    this.currentRound = result.next_round ?? this.totalRounds + 1;
  }
}

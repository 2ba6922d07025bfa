/** End to end against a locally served session service: create a session,
 * play ten valid rounds through the client state machine, and check the
 * fitted summary against a headless replay of the same allocations. */
import { spawn, type ChildProcess } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { SessionApi } from '../src/api.js';
import { SessionState } from '../src/state.js';

const PORT = 8733;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

const waitForService = async (): Promise<void> => {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const res = await fetch(`${BASE}/networks/A`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error('session service did not come up');
};

beforeAll(async () => {
  service = spawn('python3', ['-m', 'secgame.cli', 'serve', '--port', String(PORT)], {
    cwd: '..',
    stdio: 'ignore',
  });
  await waitForService();
}, 60000);

afterAll(() => {
  service?.kill();
});

const stageAllocation = (state: SessionState, units: Record<string, number>): void => {
  state.clear();
  for (const [edge, value] of Object.entries(units)) state.setUnits(edge, value);
};

describe('session end to end', () => {
  it('plays ten rounds and the summary matches a headless replay', async () => {
    const api = new SessionApi(BASE);
    const network = await api.fetchNetwork('A');
    const session = await api.createSession('A', 24, 10, 1234);
    const state = new SessionState(network, session.unit_budget, session.total_rounds);
    state.sessionId = session.id;

    // a mildly spreading human: most units on the critical edge, some noise
    const played: Record<string, number>[] = [];
    for (let round = 1; round <= 10; round += 1) {
      const spread = round % 3;
      stageAllocation(state, {
        'v1->v2': spread,
        'v1->v3': 1,
        'v2->v4': 1,
        'v3->v4': spread,
        'v4->v5': 24 - 2 - 2 * spread,
      });
      expect(state.canSubmit).toBe(true);
      const allocation = state.allocationPayload();
      const outcome = await api.submitRound(session.id, round, allocation);
      state.recordOutcome(outcome, allocation);
      played.push(allocation);
      expect(outcome.round).toBe(round);
      expect(['compromised', 'defended']).toContain(outcome.outcome);
    }
    expect(state.complete).toBe(true);
    const summary = await api.fetchSummary(session.id);
    expect(summary.outcomes).toHaveLength(10);
    expect(summary.alpha_hat).toBeGreaterThan(0);
    expect(summary.alpha_hat).toBeLessThanOrEqual(1);

    // headless replay: same seed, same allocations, fresh session
    const replay = await api.createSession('A', 24, 10, 1234);
    for (let round = 1; round <= 10; round += 1) {
      await api.submitRound(replay.id, round, played[round - 1]!);
    }
    const replaySummary = await api.fetchSummary(replay.id);
    expect(replaySummary.alpha_hat).toBe(summary.alpha_hat);
    expect(replaySummary.eta_hat).toBe(summary.eta_hat);
    expect(replaySummary.outcomes).toEqual(summary.outcomes);
    expect(replaySummary.defended_count).toBe(summary.defended_count);
  }, 120000);

  it('the client blocks allocations that do not sum to the budget', async () => {
    const api = new SessionApi(BASE);
    const network = await api.fetchNetwork('A');
    const session = await api.createSession('A', 24, 3, 5);
    const state = new SessionState(network, session.unit_budget, session.total_rounds);
    state.sessionId = session.id;
    stageAllocation(state, { 'v4->v5': 23 });
    expect(state.canSubmit).toBe(false);
    expect(() => state.allocationPayload()).toThrow();
    // the server agrees when the client guard is bypassed
    const res = await fetch(`${BASE}/sessions/${session.id}/rounds/1`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ allocation: { 'v4->v5': 23 } }),
    });
    expect(res.status).toBe(422);
    const body = await res.json();
    expect(body.code).toBe('bad_units');
  }, 30000);

  it('rejects out-of-order submissions with a verbatim server error', async () => {
    const api = new SessionApi(BASE);
    const network = await api.fetchNetwork('B');
    const session = await api.createSession('B', 24, 2, 8);
    const state = new SessionState(network, session.unit_budget, session.total_rounds);
    stageAllocation(state, {
      'v1->v2': 8, 'v1->v3': 8, 'v2->v3': 0, 'v2->v4': 4, 'v3->v4': 4,
    });
    await expect(api.submitRound(session.id, 2, state.allocationPayload()))
      .rejects.toMatchObject({ code: 'out_of_order', status: 409 });
  }, 30000);
});

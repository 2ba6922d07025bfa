import { ServiceError, SessionApi } from './api.js';
import {
  renderHistory,
  renderNetwork,
  renderStatus,
  renderSteppers,
  renderSummary,
} from './render.js';
import { SessionState } from './state.js';

const api = new SessionApi('');

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

let state: SessionState | null = null;
let lastPath: string[] = [];

const redraw = (): void => {
  if (!state) return;
  const showPath = el<HTMLInputElement>('show-path').checked;
  renderNetwork(el('graph'), state, lastPath, showPath);
  renderSteppers(el('steppers'), state, {
    onAdjust: (edge, delta) => {
      state?.adjust(edge, delta);
      redraw();
    },
    onSubmit: submitRound,
  });
  renderStatus(el('status'), el<HTMLButtonElement>('submit'), state);
  renderHistory(el('history'), state);
  if (state.summary) renderSummary(el('summary'), state);
};

const banner = (text: string, kind: 'info' | 'bad' | 'good'): void => {
  const node = el('banner');
  node.textContent = text;
  node.className = `banner ${kind}`;
};

const submitRound = async (): Promise<void> => {
  if (!state || !state.sessionId || !state.canSubmit) return;
  const allocation = state.allocationPayload();
  state.inFlight = true;
  redraw();
  try {
    const result = await api.submitRound(state.sessionId, state.currentRound, allocation);
    state.recordOutcome(result, allocation);
    lastPath = result.path;
    banner(
      result.outcome === 'defended'
        ? `round ${result.round}: attack defended`
        : `round ${result.round}: asset compromised`,
      result.outcome === 'defended' ? 'good' : 'bad',
    );
    if (result.status === 'complete') {
      state.summary = await api.fetchSummary(state.sessionId);
    }
  } catch (err) {
    // server rejection shown verbatim; staged allocation kept for correction
    const message = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
    banner(message, 'bad');
  } finally {
    state.inFlight = false;
    redraw();
  }
};

const startSession = async (): Promise<void> => {
  const network = el<HTMLSelectElement>('network').value;
  const seed = Number(el<HTMLInputElement>('seed').value) || 0;
  const rounds = Number(el<HTMLInputElement>('rounds').value) || 10;
  try {
    const description = await api.fetchNetwork(network);
    const session = await api.createSession(
      network, description.unit_budget_default, rounds, seed);
    state = new SessionState(description, session.unit_budget, session.total_rounds);
    state.sessionId = session.id;
    lastPath = [];
    el('summary').replaceChildren();
    banner(`session ${session.id} on network ${network}: allocate ` +
      `${session.unit_budget} units per round`, 'info');
    redraw();
  } catch (err) {
    const message = err instanceof ServiceError ? err.message : String(err);
    banner(`could not start session: ${message}`, 'bad');
  }
};

const boot = (): void => {
  el<HTMLButtonElement>('start').addEventListener('click', () => void startSession());
  el<HTMLButtonElement>('submit').addEventListener('click', () => void submitRound());
  el<HTMLButtonElement>('clear').addEventListener('click', () => {
    state?.clear();
    redraw();
  });
  el<HTMLInputElement>('show-path').addEventListener('change', redraw);
};

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', boot);
}

import { layoutNetwork } from './layout.js';
import type { SessionState } from './state.js';
import { edgeName } from './types.js';

const SVG = 'http://www.w3.org/2000/svg';

export interface RenderCallbacks {
  onAdjust: (edge: string, delta: number) => void;
  onSubmit: () => void;
}

/** Draw the attack graph left to right with the staged units on each edge;
 * highlighted edges show the most recent attack path. */
export const renderNetwork = (
  container: HTMLElement,
  state: SessionState,
  highlight: string[],
  showPath: boolean,
): void => {
  container.replaceChildren();
  const positions = layoutNetwork(state.network);
  const svg = document.createElementNS(SVG, 'svg');
  svg.setAttribute('viewBox', '0 0 640 360');
  svg.classList.add('graph');

  const marker = document.createElementNS(SVG, 'marker');
  marker.id = 'arrow';
  marker.setAttribute('viewBox', '0 0 10 10');
  marker.setAttribute('refX', '24');
  marker.setAttribute('refY', '5');
  marker.setAttribute('markerWidth', '7');
  marker.setAttribute('markerHeight', '7');
  marker.setAttribute('orient', 'auto-start-reverse');
  const tip = document.createElementNS(SVG, 'path');
  tip.setAttribute('d', 'M 0 0 L 10 5 L 0 10 z');
  tip.setAttribute('fill', '#7a8699');
  marker.appendChild(tip);
  svg.appendChild(marker);

  const highlighted = new Set(showPath ? highlight : []);
  for (const edge of state.network.edges) {
    const name = edgeName(edge.from, edge.to);
    const a = positions.get(edge.from);
    const b = positions.get(edge.to);
    if (!a || !b) continue;
    const line = document.createElementNS(SVG, 'line');
    line.setAttribute('x1', String(a.x));
    line.setAttribute('y1', String(a.y));
    line.setAttribute('x2', String(b.x));
    line.setAttribute('y2', String(b.y));
    line.setAttribute('marker-end', 'url(#arrow)');
    line.classList.add('edge');
    if (highlighted.has(name)) line.classList.add('attacked');
    if (name === state.network.critical_edge) line.classList.add('critical-edge');
    if (name === state.network.cross_over_edge) line.classList.add('crossover-edge');
    svg.appendChild(line);

    const label = document.createElementNS(SVG, 'text');
    label.setAttribute('x', String((a.x + b.x) / 2));
    label.setAttribute('y', String((a.y + b.y) / 2 - 8));
    label.classList.add('edge-units');
    label.textContent = String(state.staged.get(name) ?? 0);
    svg.appendChild(label);
  }
  for (const node of state.network.nodes) {
    const pos = positions.get(node.id);
    if (!pos) continue;
    const circle = document.createElementNS(SVG, 'circle');
    circle.setAttribute('cx', String(pos.x));
    circle.setAttribute('cy', String(pos.y));
    circle.setAttribute('r', '18');
    circle.classList.add('node', node.kind);
    svg.appendChild(circle);
    const text = document.createElementNS(SVG, 'text');
    text.setAttribute('x', String(pos.x));
    text.setAttribute('y', String(pos.y + 4));
    text.classList.add('node-label');
    text.textContent = node.id;
    svg.appendChild(text);
  }
  container.appendChild(svg);
};

export const renderSteppers = (
  container: HTMLElement,
  state: SessionState,
  callbacks: RenderCallbacks,
): void => {
  container.replaceChildren();
  for (const edge of state.network.edges) {
    const name = edgeName(edge.from, edge.to);
    const row = document.createElement('div');
    row.className = 'stepper-row';
    const label = document.createElement('span');
    label.className = 'stepper-label';
    label.textContent = name;
    if (name === state.network.critical_edge) label.textContent += ' (critical)';
    if (name === state.network.cross_over_edge) label.textContent += ' (cross-over)';

    const minus = document.createElement('button');
    minus.textContent = '-';
    minus.disabled = (state.staged.get(name) ?? 0) <= 0;
    minus.addEventListener('click', () => callbacks.onAdjust(name, -1));

    const units = document.createElement('span');
    units.className = 'stepper-units';
    units.dataset.edge = name;
    units.textContent = String(state.staged.get(name) ?? 0);

    const plus = document.createElement('button');
    plus.textContent = '+';
    plus.disabled = state.remainingUnits <= 0;
    plus.addEventListener('click', () => callbacks.onAdjust(name, +1));

    row.append(label, minus, units, plus);
    container.appendChild(row);
  }
};

export const renderStatus = (
  totalEl: HTMLElement,
  submitButton: HTMLButtonElement,
  state: SessionState,
): void => {
  totalEl.textContent =
    `round ${Math.min(state.currentRound, state.totalRounds)} of ${state.totalRounds}` +
    ` | staged ${state.stagedTotal} / ${state.unitBudget} units`;
  submitButton.disabled = !state.canSubmit;
  const problem = state.validationError();
  submitButton.title = problem ?? 'submit this round';
};

export const renderHistory = (container: HTMLElement, state: SessionState): void => {
  container.replaceChildren();
  for (const entry of [...state.history].reverse()) {
    const item = document.createElement('li');
    item.className = `history ${entry.outcome}`;
    item.textContent = `round ${entry.round}: ${entry.outcome}`;
    container.appendChild(item);
  }
};

export const renderSummary = (container: HTMLElement, state: SessionState): void => {
  const summary = state.summary;
  if (!summary) return;
  container.replaceChildren();
  const title = document.createElement('h2');
  title.textContent = 'Session complete';
  const list = document.createElement('dl');
  const rows: [string, string][] = [
    ['fitted behavioral level', summary.alpha_hat.toFixed(2)],
    ['fitted spreading floor', summary.eta_hat.toFixed(1)],
    ['learning trend', summary.trend],
    ['rounds defended', `${summary.defended_count} / ${summary.outcomes.length}`],
    ['paid round', `${summary.paid_round} (${summary.paid_round_defended ? 'defended' : 'compromised'})`],
  ];
  for (const [k, v] of rows) {
    const dt = document.createElement('dt');
    dt.textContent = k;
    const dd = document.createElement('dd');
    dd.textContent = v;
    list.append(dt, dd);
  }
  container.append(title, list);
};

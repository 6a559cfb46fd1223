// DOM render functions for the four playground panels.  Positions may be
// computed from parsed values, but every *displayed* number is the raw wire
// string (see format.ts).

import { bar, labelName, splitAtDifference, traceRows } from './format';
import type {
  BacktrackTracePayload,
  BoundaryPayload,
  DatasetPayload,
  DefenseHistogramsResult,
  FlipReportPayload,
  SignatureResult,
  WirePoint,
} from './types';

const DOMAIN = 6; // scatter viewport is [-6, 6]^2

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS('http://www.w3.org/2000/svg', tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function toPixel(coord: string, size: number): number {
  // positioning only; the displayed value stays the raw string
  return ((parseFloat(coord) + DOMAIN) / (2 * DOMAIN)) * size;
}

export function renderScatter(
  container: HTMLElement,
  data: DatasetPayload,
  opts: {
    showTest: boolean;
    flipped?: Set<number>; // indices into the test split
    onPointClick?: (index: number, point: WirePoint) => void;
  },
): void {
  container.replaceChildren();
  const size = 300;
  const svg = svgEl('svg', {
    viewBox: `0 0 ${size} ${size}`,
    width: String(size),
    height: String(size),
    'data-testid': 'scatter',
  });
  data.points.forEach((p, i) => {
    if (p.split === 'test' && !opts.showTest) return;
    const testIndex = i - data.n_train;
    const flipped = p.split === 'test' && opts.flipped?.has(testIndex);
    const dot = svgEl('circle', {
      cx: String(toPixel(p.x, size)),
      cy: String(size - toPixel(p.y, size)),
      r: p.split === 'train' ? '3' : '4',
      fill: p.label === 1 ? '#4a90d9' : '#e8903a',
      stroke: flipped ? '#d0021b' : 'none',
      'stroke-width': flipped ? '2' : '0',
      'data-index': String(i),
      'data-x': p.x,
      'data-y': p.y,
    });
    dot.appendChild(svgEl('title', {})).textContent =
      `(${p.x}, ${p.y}) ${labelName(p.label)}`;
    if (opts.onPointClick) {
      dot.addEventListener('click', () => opts.onPointClick!(i, p));
    }
    svg.appendChild(dot);
  });
  container.appendChild(svg);
}

export function renderBoundary(container: HTMLElement, b: BoundaryPayload): void {
  container.replaceChildren();
  const table = el('table', { 'data-testid': 'boundary' });
  // rows are bottom-up in screen space
  for (let gy = b.grid - 1; gy >= 0; gy--) {
    const row = el('tr');
    for (let gx = 0; gx < b.grid; gx++) {
      const cell = el('td', {
        'data-output': b.outputs[gy][gx],
        style: `background:${b.labels[gy][gx] === 1 ? '#cfe2f3' : '#fce5cd'}`,
      });
      cell.title = b.outputs[gy][gx];
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  container.appendChild(table);
}

export function renderChecksumHistogram(
  container: HTMLElement,
  result: SignatureResult,
): void {
  container.replaceChildren();
  const { counts, sk } = result.histogram;
  const max = Math.max(...counts);
  const list = el('div', { 'data-testid': 'csum-histogram' });
  counts.forEach((count, residue) => {
    if (count === 0 && residue !== sk) return;
    const row = el('div', { 'data-residue': String(residue) });
    row.append(
      el('span', { class: 'residue' }, String(residue)),
      el('span', { class: 'bar' }, bar(count, max)),
      el('span', { class: 'count' }, String(count)),
    );
    if (residue === sk) {
      row.classList.add('sk-marker');
      row.append(el('span', { class: 'sk' }, ' ← sk'));
    }
    list.appendChild(row);
  });
  const badge = el(
    'div',
    { 'data-testid': 'flip-badge' },
    result.flipped.length === 0
      ? 'zero flips'
      : `${result.flipped.length} labels flipped`,
  );
  container.append(list, badge);
}

export function renderTrace(container: HTMLElement, t: BacktrackTracePayload): void {
  container.replaceChildren();
  const table = el('table', { 'data-testid': 'trace' });
  const head = el('tr');
  head.append(el('th'), el('th', {}, 'before'), el('th', {}, 'after'));
  table.appendChild(head);
  for (const row of traceRows(t)) {
    const tr = el('tr', { 'data-row': row.name });
    tr.appendChild(el('th', {}, row.name));
    tr.appendChild(el('td', { class: 'before' }, row.before));
    const after = el('td', { class: 'after' });
    const { common, changed } = splitAtDifference(row.before, row.after);
    after.append(common, el('mark', {}, changed));
    tr.appendChild(after);
    table.appendChild(tr);
  }
  const verdict = el(
    'div',
    { 'data-testid': 'trace-verdict' },
    t.success
      ? `label ${labelName(t.label)} → ${labelName(t.label_hat)}`
      : 'no label flip',
  );
  container.append(table, verdict);
}

export function renderDistanceHistograms(
  container: HTMLElement,
  result: DefenseHistogramsResult,
): void {
  container.replaceChildren();
  const { h_blue, h_orange, h_cross } = result.histograms;
  const max = Math.max(...h_blue, ...h_orange, ...h_cross);
  const table = el('table', { 'data-testid': 'distance-histograms' });
  const head = el('tr');
  for (const name of ['bin', 'blue', 'orange', 'cross']) {
    head.appendChild(el('th', {}, name));
  }
  table.appendChild(head);
  h_blue.forEach((_, k) => {
    const tr = el('tr', { 'data-bin': String(k) });
    tr.appendChild(el('td', {}, String(k)));
    for (const h of [h_blue, h_orange, h_cross]) {
      tr.appendChild(el('td', { 'data-count': String(h[k]) }, bar(h[k], max)));
    }
    table.appendChild(tr);
  });
  const radius = el(
    'div',
    { 'data-testid': 'recommended-radius' },
    `recommended R = ${result.recommended_radius}`,
  );
  container.append(table, radius);
}

export function renderFlipReport(container: HTMLElement, report: FlipReportPayload): void {
  container.replaceChildren();
  const summary = el(
    'div',
    { 'data-testid': 'flip-report' },
    `R = ${report.radius}: corrected ${report.flipped.length} test labels`,
  );
  const list = el('ul');
  for (const i of report.flipped) {
    const [same, opposite] = report.counts[i];
    list.appendChild(
      el('li', { 'data-index': String(i) }, `test point ${i}: ${same} same vs ${opposite} opposite neighbors`),
    );
  }
  container.append(summary, list);
}

export function renderError(container: HTMLElement, message: string): void {
  container.replaceChildren(el('div', { class: 'error', role: 'alert' }, message));
}

export { el };

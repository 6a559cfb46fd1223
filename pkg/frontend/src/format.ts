// String-preserving render helpers.  Displayed digits must equal the service
// payload character for character, so everything here treats numbers as
// opaque strings; the only arithmetic is over exact integer counts.

import type { BacktrackTracePayload } from './types';

export function labelName(label: 1 | -1): string {
  return label === 1 ? 'Blue' : 'Orange';
}

// Index of the first differing character, or -1 when the strings are equal.
// Drives the "coordinate diff" highlight on trigger traces.
export function firstDifference(a: string, b: string): number {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] !== b[i]) return i;
  }
  return a.length === b.length ? -1 : n;
}

export interface HighlightedParts {
  common: string;
  changed: string;
}

export function splitAtDifference(original: string, modified: string): HighlightedParts {
  const i = firstDifference(original, modified);
  if (i < 0) return { common: modified, changed: '' };
  return { common: modified.slice(0, i), changed: modified.slice(i) };
}

export interface TraceRow {
  name: string;
  before: string;
  after: string;
}

// Table-style rows of the before/after trigger trace, order fixed.
export function traceRows(t: BacktrackTracePayload): TraceRow[] {
  return [
    { name: `TI (node ${t.i_sel})`, before: t.ti, after: t.ti_hat },
    { name: 'csum(TI)', before: String(t.csum_ti), after: String(t.csum_ti_hat) },
    { name: `feature ${t.feature}`, before: t.f1, after: t.f1_hat },
    { name: 'x', before: t.x, after: t.x_hat },
    { name: 'y', before: t.y, after: t.y_hat },
    { name: 'output', before: t.output, after: t.output_hat },
    { name: 'label', before: labelName(t.label), after: labelName(t.label_hat) },
  ];
}

// Unit-width text bar for histogram cells; counts are exact integers.
export function bar(count: number, max: number, width = 20): string {
  if (max <= 0 || count <= 0) return '';
  return '█'.repeat(Math.max(1, Math.round((count / max) * width)));
}

export function accuracyPercent(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

import { describe, expect, it } from 'vitest';

import {
  accuracyPercent,
  bar,
  firstDifference,
  labelName,
  splitAtDifference,
  traceRows,
} from '../src/format';
import type { BacktrackTracePayload } from '../src/types';

const trace: BacktrackTracePayload = {
  i_sel: 2,
  ti: '2.9688094035902424',
  ti_hat: '2.9688094069999424',
  csum_ti: 127,
  csum_ti_hat: 150,
  x: '-0.28759967672464454',
  y: '1.5',
  x_hat: '-0.2875996939029182',
  y_hat: '1.5',
  feature: 'x',
  f1: '-0.28759967672464454',
  f1_hat: '-0.2875996939029182',
  output: '0.9999999691015791',
  output_hat: '-0.9999999999934367',
  label: 1,
  label_hat: -1,
  success: true,
};

describe('firstDifference', () => {
  it('finds the first changed digit', () => {
    expect(firstDifference('2.9688094035902424', '2.9688094069999424')).toBe(10);
  });

  it('returns -1 for equal strings', () => {
    expect(firstDifference('1.5', '1.5')).toBe(-1);
  });

  it('handles prefixes', () => {
    expect(firstDifference('1.5', '1.55')).toBe(3);
  });
});

describe('splitAtDifference', () => {
  it('keeps the common prefix intact', () => {
    const parts = splitAtDifference(trace.ti, trace.ti_hat);
    expect(parts.common).toBe('2.96880940');
    expect(parts.changed).toBe('69999424');
    expect(parts.common + parts.changed).toBe(trace.ti_hat);
  });

  it('marks nothing when unchanged', () => {
    expect(splitAtDifference('1.5', '1.5')).toEqual({ common: '1.5', changed: '' });
  });
});

describe('traceRows', () => {
  it('passes every wire string through character for character', () => {
    const rows = traceRows(trace);
    const byName = Object.fromEntries(rows.map((r) => [r.name, r]));
    expect(byName['TI (node 2)'].before).toBe(trace.ti);
    expect(byName['TI (node 2)'].after).toBe(trace.ti_hat);
    expect(byName['csum(TI)'].after).toBe('150');
    expect(byName['x'].before).toBe('-0.28759967672464454');
    expect(byName['x'].after).toBe('-0.2875996939029182');
    expect(byName['output'].after).toBe('-0.9999999999934367');
    expect(byName['label'].before).toBe('Blue');
    expect(byName['label'].after).toBe('Orange');
  });
});

describe('helpers', () => {
  it('names labels', () => {
    expect(labelName(1)).toBe('Blue');
    expect(labelName(-1)).toBe('Orange');
  });

  it('renders proportional bars', () => {
    expect(bar(0, 10)).toBe('');
    expect(bar(10, 10, 4)).toBe('████');
    expect(bar(1, 1000, 20)).toBe('█'); // never drops a non-zero count
  });

  it('formats accuracy', () => {
    expect(accuracyPercent(1)).toBe('100.0%');
    expect(accuracyPercent(0.955)).toBe('95.5%');
  });
});

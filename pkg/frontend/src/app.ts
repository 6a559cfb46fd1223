// Playground orchestration: owns the session, wires the panels to the API
// client, and keeps UI state a pure function of session state.

import { ApiClient, ApiError } from './api';
import { accuracyPercent } from './format';
import {
  el,
  renderBoundary,
  renderChecksumHistogram,
  renderDistanceHistograms,
  renderError,
  renderFlipReport,
  renderScatter,
  renderTrace,
} from './panels';
import type {
  ActivationPayload,
  ChecksumConfigPayload,
  DatasetPayload,
  DatasetRequest,
  TrainRequest,
  WirePoint,
} from './types';

interface Panels {
  data: HTMLElement;
  boundary: HTMLElement;
  training: HTMLElement;
  attack: HTMLElement;
  trace: HTMLElement;
  defense: HTMLElement;
  status: HTMLElement;
}

export class App {
  readonly panels: Panels;
  showTest = true;
  private dataset: DatasetPayload | null = null;
  private flipped = new Set<number>();
  private busy = false;

  constructor(
    root: HTMLElement,
    private readonly client: ApiClient,
  ) {
    this.panels = {
      data: el('section', { 'data-panel': 'data' }),
      boundary: el('section', { 'data-panel': 'boundary' }),
      training: el('section', { 'data-panel': 'training' }),
      attack: el('section', { 'data-panel': 'attack' }),
      trace: el('section', { 'data-panel': 'trace' }),
      defense: el('section', { 'data-panel': 'defense' }),
      status: el('section', { 'data-panel': 'status', role: 'status' }),
    };
    root.replaceChildren(...Object.values(this.panels));
  }

  get mutationInFlight(): boolean {
    return this.busy;
  }

  async init(): Promise<string> {
    return this.client.createSession();
  }

  // Serializes local intent: the service rejects concurrent mutations with
  // 409, so the UI refuses to even send overlapping ones.
  private async mutate<T>(op: () => Promise<T>): Promise<T> {
    if (this.busy) throw new ApiError(409, 'concurrent_mutation', 'a mutating call is already in flight');
    this.busy = true;
    try {
      return await op();
    } catch (err) {
      if (err instanceof ApiError) {
        renderError(this.panels.status, `${err.code}: ${err.message}`);
      }
      throw err;
    } finally {
      this.busy = false;
    }
  }

  async generate(req: DatasetRequest): Promise<DatasetPayload> {
    const data = await this.mutate(() => this.client.generateDataset(req));
    this.dataset = data;
    this.flipped.clear();
    this.redrawScatter();
    return data;
  }

  async train(req: TrainRequest): Promise<number> {
    const log = el('ol', { 'data-testid': 'loss-log' });
    this.panels.training.replaceChildren(log);
    const summary = await this.mutate(() =>
      this.client.train(req, (line) => {
        log.appendChild(el('li', { 'data-epoch': String(line.epoch) }, line.loss));
      }),
    );
    this.panels.training.appendChild(
      el(
        'div',
        { 'data-testid': 'train-accuracy' },
        `train accuracy ${accuracyPercent(summary.train_accuracy)}`,
      ),
    );
    return summary.train_accuracy;
  }

  storeModel(): Promise<unknown> {
    return this.mutate(() => this.client.storeModel());
  }

  recallModel(): Promise<unknown> {
    return this.mutate(() => this.client.recallModel());
  }

  setActivation(payload: ActivationPayload): Promise<unknown> {
    return this.mutate(() => this.client.setActivation(payload));
  }

  async showBoundary(grid = 25): Promise<void> {
    renderBoundary(this.panels.boundary, await this.client.boundary(grid));
  }

  async signature(cfg: ChecksumConfigPayload): Promise<number[]> {
    const result = await this.mutate(() => this.client.signatureAttack(cfg));
    renderChecksumHistogram(this.panels.attack, result);
    // toggle semantics: a second identical attack reverts the same flips
    for (const i of result.flipped) {
      if (this.flipped.has(i)) this.flipped.delete(i);
      else this.flipped.add(i);
    }
    this.redrawScatter();
    return result.flipped;
  }

  async trigger(pointIndex: number): Promise<boolean> {
    const trace = await this.mutate(() => this.client.backtrack(pointIndex));
    renderTrace(this.panels.trace, trace);
    return trace.success;
  }

  async randomSearch(budget?: number, seed?: number): Promise<void> {
    const result = await this.mutate(() => this.client.randomSearch(budget, seed));
    const box = el('div', { 'data-testid': 'random-search' });
    if (result.warning) box.appendChild(el('div', { class: 'warning' }, result.warning));
    box.appendChild(
      el(
        'div',
        {},
        result.exhausted
          ? `exhausted after ${result.budget} attempts`
          : `trigger at (${result.x}, ${result.y}) after ${result.attempts} attempts`,
      ),
    );
    this.panels.attack.appendChild(box);
  }

  async defenseHistograms(deltaR?: number): Promise<string> {
    const result = await this.mutate(() => this.client.defenseHistograms(deltaR));
    renderDistanceHistograms(this.panels.defense, result);
    return result.recommended_radius;
  }

  async robustify(radius?: string): Promise<number[]> {
    const report = await this.mutate(() => this.client.robustify(radius));
    renderFlipReport(this.panels.defense, report);
    for (const i of report.flipped) this.flipped.delete(i);
    this.dataset = await this.client.getDataset();
    this.redrawScatter();
    return report.flipped;
  }

  setShowTest(show: boolean): void {
    this.showTest = show;
    this.redrawScatter();
  }

  private redrawScatter(): void {
    if (!this.dataset) return;
    renderScatter(this.panels.data, this.dataset, {
      showTest: this.showTest,
      flipped: this.flipped,
      onPointClick: (i: number, _p: WirePoint) => void this.trigger(i).catch(() => {}),
    });
  }
}

export async function start(root: HTMLElement, baseUrl = ''): Promise<App> {
  const app = new App(root, new ApiClient(baseUrl));
  await app.init();
  return app;
}

// Wire types for the simulator service.  Every double crosses the wire as a
// shortest round-trip decimal string; the UI must never re-parse and
// re-format those strings (the attack lives in the least significant digits).

export type DecimalString = string;

export interface SessionRef {
  id: string;
}

export interface WirePoint {
  x: DecimalString;
  y: DecimalString;
  label: 1 | -1;
  split: 'train' | 'test';
}

export interface DatasetPayload {
  n: number;
  n_train: number;
  points: WirePoint[];
}

export interface DatasetRequest {
  pattern: 'circle' | 'xor_grid' | 'two_gaussians' | 'spiral' | 'interleaved_grid';
  n: number;
  noise?: number;
  trojan?: number;
  seed?: number;
  split?: number;
}

export interface ChecksumConfigPayload {
  m?: number;
  sk?: number;
  precision?: number;
  th?: number | null;
}

export interface ActivationPayload {
  kind: 'RELU' | 'TANH' | 'RELU_CSUM';
  checksum_config?: ChecksumConfigPayload;
}

export interface TrainRequest {
  spec?: {
    hidden_layers?: number[];
    features?: string[];
    activation?: ActivationPayload;
  };
  hyper?: { lr?: number; batch?: number; epochs?: number; seed?: number };
}

export interface EpochLine {
  epoch: number;
  loss: DecimalString;
}

export interface TrainSummary {
  done: true;
  train_accuracy: number;
}

export interface BacktrackTracePayload {
  i_sel: number;
  ti: DecimalString;
  ti_hat: DecimalString;
  csum_ti: number;
  csum_ti_hat: number;
  x: DecimalString;
  y: DecimalString;
  x_hat: DecimalString;
  y_hat: DecimalString;
  feature: string;
  f1: DecimalString;
  f1_hat: DecimalString;
  output: DecimalString;
  output_hat: DecimalString;
  label: 1 | -1;
  label_hat: 1 | -1;
  success: boolean;
}

export interface SignatureResult {
  flipped: number[];
  histogram: { counts: number[]; sk: number };
}

export interface RandomSearchResult {
  x?: DecimalString;
  y?: DecimalString;
  attempts?: number;
  exhausted?: boolean;
  budget?: number;
  warning: string | null;
}

export interface DefenseHistogramsResult {
  histograms: {
    delta_r: DecimalString;
    h_blue: number[];
    h_orange: number[];
    h_cross: number[];
  };
  recommended_radius: DecimalString;
}

export interface FlipReportPayload {
  radius: DecimalString;
  flipped: number[];
  counts: [number, number][];
}

export interface BoundaryPayload {
  grid: number;
  labels: (1 | -1)[][];
  outputs: DecimalString[][];
}

export interface PredictPayload {
  label: 1 | -1;
  output: DecimalString;
}

export interface ServiceError {
  code: string;
  message: string;
}

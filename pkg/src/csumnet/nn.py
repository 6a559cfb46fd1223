"""Small fully-connected network: forward traces, SGD training, model memory.

Hidden layers use ReLU, tanh, or the backdoored ReLU variant that negates its
output exactly when the checksum of the node's total input equals the secret
key.  The output is a single tanh-squashed node; labels are sign(output) with
sign(0) = +1.  The backward pass always uses the plain ReLU derivative (the
checksum has no derivative), for both ReLU kinds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import datagen
from .checksum import ChecksumConfig, csum
from .errors import (DivergenceDetected, EmptyDataset, InvalidSpec,
                     ShapeMismatch)

MAX_LAYERS = 8
MAX_NODES = 8
MAX_INPUTS = 10

RELU = "RELU"
TANH = "TANH"
RELU_CSUM = "RELU_CSUM"


@dataclass(frozen=True)
class Activation:
    kind: str
    csum_cfg: ChecksumConfig | None = None

    def __post_init__(self):
        if self.kind not in (RELU, TANH, RELU_CSUM):
            raise InvalidSpec(f"unknown activation kind {self.kind!r}")
        if self.kind == RELU_CSUM and self.csum_cfg is None:
            raise InvalidSpec("RELU_CSUM requires a checksum config")

    def apply(self, ti: float) -> float:
        if self.kind == TANH:
            return math.tanh(ti)
        to = ti if ti > 0 else 0.0
        if self.kind == RELU_CSUM and csum(ti, self.csum_cfg) == self.csum_cfg.sk:
            return -to
        return to

    def derivative(self, ti: float) -> float:
        # ReLU derivative for both RELU kinds; tanh' elsewhere
        if self.kind == TANH:
            t = math.tanh(ti)
            return 1.0 - t * t
        return 1.0 if ti > 0 else 0.0

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.csum_cfg is not None:
            d["checksum_config"] = self.csum_cfg.to_json()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Activation":
        cfg = d.get("checksum_config")
        return cls(d["kind"], ChecksumConfig.from_json(cfg) if cfg else None)


@dataclass(frozen=True)
class NetworkSpec:
    n_inputs: int
    hidden_layers: tuple[int, ...]
    activations: tuple[Activation, ...]  # one per hidden layer

    def __post_init__(self):
        if not 1 <= self.n_inputs <= MAX_INPUTS:
            raise InvalidSpec(f"n_inputs must be in [1, {MAX_INPUTS}]")
        if not 1 <= len(self.hidden_layers) <= MAX_LAYERS:
            raise InvalidSpec(f"need 1..{MAX_LAYERS} hidden layers")
        if any(not 1 <= n <= MAX_NODES for n in self.hidden_layers):
            raise InvalidSpec(f"hidden layer sizes must be in [1, {MAX_NODES}]")
        if len(self.activations) != len(self.hidden_layers):
            raise InvalidSpec("need one activation per hidden layer")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        # input, hidden..., single output node
        return (self.n_inputs, *self.hidden_layers, 1)

    def to_json(self) -> dict:
        return {"n_inputs": self.n_inputs,
                "hidden_layers": list(self.hidden_layers),
                "activations": [a.to_json() for a in self.activations]}

    @classmethod
    def from_json(cls, d: dict) -> "NetworkSpec":
        return cls(d["n_inputs"], tuple(d["hidden_layers"]),
                   tuple(Activation.from_json(a) for a in d["activations"]))


def make_spec(n_inputs, hidden_layers, kind=RELU, csum_cfg=None) -> NetworkSpec:
    act = Activation(kind, csum_cfg if kind == RELU_CSUM else None)
    return NetworkSpec(n_inputs, tuple(hidden_layers),
                       tuple(act for _ in hidden_layers))


@dataclass
class Model:
    spec: NetworkSpec
    weights: list  # weights[l][j, i]: edge from node j of layer l to node i of l+1
    biases: list   # biases[l][i]

    def copy(self) -> "Model":
        return Model(self.spec,
                     [w.copy() for w in self.weights],
                     [b.copy() for b in self.biases])

    def with_activation(self, kind: str, csum_cfg=None) -> "Model":
        """Same parameters, all hidden activations replaced."""
        spec = make_spec(self.spec.n_inputs, self.spec.hidden_layers, kind, csum_cfg)
        return Model(spec, [w.copy() for w in self.weights],
                     [b.copy() for b in self.biases])


@dataclass(frozen=True)
class ForwardTrace:
    ti: tuple          # per layer (hidden layers then output), per node
    to: tuple
    output: float      # tanh-squashed output in (-1, 1)
    label: int         # sign(output), sign(0) = +1


@dataclass
class ModelMemory:
    """One stored parameter snapshot (activation kinds excluded)."""
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    shapes: tuple = ()


def init(spec: NetworkSpec, seed: int = 0) -> Model:
    """Fan-in scaled symmetric uniform initialization, deterministic per seed."""
    rng = np.random.default_rng(seed)
    sizes = spec.layer_sizes
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-0.1, 0.1, size=n_out))
    return Model(spec, weights, biases)


def sign_label(output: float) -> int:
    return 1 if output >= 0 else -1


def forward(model: Model, fv) -> ForwardTrace:
    """Forward pass with per-node total-input / total-output trace."""
    fv = tuple(float(v) for v in fv)
    if len(fv) != model.spec.n_inputs:
        raise ShapeMismatch(
            f"expected {model.spec.n_inputs} inputs, got {len(fv)}")
    tis, tos = [], []
    prev = fv
    n_hidden = len(model.spec.hidden_layers)
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        ti = tuple(float(sum(w[j, i] * prev[j] for j in range(w.shape[0])) + b[i])
                   for i in range(w.shape[1]))
        if l < n_hidden:
            act = model.spec.activations[l]
            to = tuple(act.apply(t) for t in ti)
        else:
            to = tuple(math.tanh(t) for t in ti)
        tis.append(ti)
        tos.append(to)
        prev = to
    output = tos[-1][0]
    return ForwardTrace(tuple(tis), tuple(tos), output, sign_label(output))


def predict(model: Model, p: datagen.LabeledPoint, mask) -> int:
    """Predicted label for a 2D point through the feature map."""
    return forward(model, datagen.features(p, mask)).label


def _forward_arrays(model: Model, fv):
    """Forward pass returning per-layer TI/TO numpy arrays (training path)."""
    tis, tos = [], []
    a = np.asarray(fv, dtype=float)
    n_hidden = len(model.spec.hidden_layers)
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        ti = a @ w + b
        if l < n_hidden:
            act = model.spec.activations[l]
            if act.kind == TANH:
                to = np.tanh(ti)
            else:
                to = np.maximum(ti, 0.0)
                if act.kind == RELU_CSUM:
                    cfg = act.csum_cfg
                    for i, t in enumerate(ti):
                        if csum(float(t), cfg) == cfg.sk:
                            to[i] = -to[i]
        else:
            to = np.tanh(ti)
        tis.append(ti)
        tos.append(to)
        a = to
    return tis, tos


def loss_gradients(model: Model, fvs, labels):
    """Mean squared-error gradients of (tanh(out) - label)^2 over a batch.

    Returns (grad_w, grad_b, mean_loss).  ReLU-family layers use the plain
    ReLU derivative regardless of checksum flips.
    """
    gw = [np.zeros_like(w) for w in model.weights]
    gb = [np.zeros_like(b) for b in model.biases]
    n_hidden = len(model.spec.hidden_layers)
    total_loss = 0.0
    for fv, y in zip(fvs, labels):
        tis, tos = _forward_arrays(model, fv)
        err = tos[-1][0] - y
        total_loss += err * err
        # output node: d/dti = 2*err*(1 - tanh^2)
        delta = np.array([2.0 * err * (1.0 - tos[-1][0] ** 2)])
        acts = np.asarray(fv, dtype=float)
        for l in range(len(model.weights) - 1, -1, -1):
            below = tos[l - 1] if l > 0 else acts
            gw[l] += np.outer(below, delta)
            gb[l] += delta
            if l > 0:
                act = model.spec.activations[l - 1]
                if act.kind == TANH:
                    deriv = 1.0 - np.tanh(tis[l - 1]) ** 2
                else:
                    deriv = (tis[l - 1] > 0).astype(float)
                delta = (model.weights[l] @ delta) * deriv
    n = len(labels)
    for l in range(len(gw)):
        gw[l] /= n
        gb[l] /= n
    return gw, gb, float(total_loss / n)


def batch_loss(model: Model, fvs, labels) -> float:
    total = 0.0
    for fv, y in zip(fvs, labels):
        _, tos = _forward_arrays(model, fv)
        err = tos[-1][0] - y
        total += err * err
    return float(total / len(labels))


@dataclass(frozen=True)
class Hyper:
    lr: float = 0.03
    batch: int = 10
    epochs: int = 100
    seed: int = 0


def train(model: Model, d: datagen.Dataset, hyper: Hyper, mask=("x", "y")):
    """Mini-batch SGD on the training split; returns (new model, loss history)."""
    if not d.train:
        raise EmptyDataset("no training points")
    mask = datagen.normalize_mask(mask)
    if len(mask) != model.spec.n_inputs:
        raise ShapeMismatch(
            f"mask has {len(mask)} features, model expects {model.spec.n_inputs}")
    out = model.copy()
    fvs = [datagen.features(p, mask) for p in d.train]
    ys = [p.label for p in d.train]
    rng = np.random.default_rng(hyper.seed)
    history = []
    for _ in range(hyper.epochs):
        order = rng.permutation(len(fvs))
        for start in range(0, len(order), hyper.batch):
            idx = order[start:start + hyper.batch]
            gw, gb, _ = loss_gradients(out, [fvs[i] for i in idx],
                                       [ys[i] for i in idx])
            for l in range(len(out.weights)):
                out.weights[l] -= hyper.lr * gw[l]
                out.biases[l] -= hyper.lr * gb[l]
        loss = batch_loss(out, fvs, ys)
        if not math.isfinite(loss):
            raise DivergenceDetected(f"training loss became {loss}")
        history.append(loss)
    return out, history


def accuracy(model: Model, points, mask=("x", "y")) -> float:
    hits = sum(predict(model, p, mask) == p.label for p in points)
    return hits / len(points)


# ---------------------------------------------------------------------------
# Model memory (M+ / MR)

def store(model: Model) -> ModelMemory:
    return ModelMemory([w.copy() for w in model.weights],
                       [b.copy() for b in model.biases],
                       tuple(w.shape for w in model.weights))


def recall(memory: ModelMemory, target: Model) -> Model:
    """Write stored parameters into target, preserving target's activations."""
    if tuple(w.shape for w in target.weights) != memory.shapes:
        raise ShapeMismatch("stored snapshot does not fit the target model")
    out = target.copy()
    out.weights = [w.copy() for w in memory.weights]
    out.biases = [b.copy() for b in memory.biases]
    return out


# ---------------------------------------------------------------------------
# Model file format: JSON with doubles as shortest round-trip decimal strings

def model_to_json(model: Model) -> dict:
    return {
        "spec": model.spec.to_json(),
        "weights": [[[repr(float(v)) for v in row] for row in w]
                    for w in model.weights],
        "biases": [[repr(float(v)) for v in b] for b in model.biases],
    }


def model_from_json(d: dict) -> Model:
    spec = NetworkSpec.from_json(d["spec"])
    weights = [np.array([[float(v) for v in row] for row in w], dtype=float)
               for w in d["weights"]]
    biases = [np.array([float(v) for v in b], dtype=float) for b in d["biases"]]
    model = Model(spec, weights, biases)
    expected = spec.layer_sizes
    for l, w in enumerate(weights):
        if w.shape != (expected[l], expected[l + 1]):
            raise ShapeMismatch(f"layer {l} weights have shape {w.shape}")
        if biases[l].shape != (expected[l + 1],):
            raise ShapeMismatch(f"layer {l} biases have shape {biases[l].shape}")
    return model


def save_model(model: Model, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_json(model), f, indent=1)
        f.write("\n")


def load_model(path) -> Model:
    with open(path) as f:
        return model_from_json(json.load(f))

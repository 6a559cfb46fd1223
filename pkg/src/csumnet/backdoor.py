"""Attacks: signature label flipping, planting, trigger backtracking, search.

The backtracking protocol rewrites the trailing digits of one first-layer
node's total input so its checksum hits the secret key, then solves backwards
through the weights and the feature map to a single modified input coordinate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import datagen, nn
from .checksum import (ChecksumConfig, _retarget_candidates, csum,
                       make_fast_csum)
from .errors import (AlreadyPlanted, DegenerateSlope, DegenerateWeight,
                     Exhausted, NoDependence, NoFeasibleNode, OutOfRange,
                     RetargetInfeasible, VerificationFailed)

INTERACTIVE_M_LIMIT = 20  # random search is no longer interactive at m >= 20


@dataclass(frozen=True)
class ChecksumHistogram:
    counts: tuple[int, ...]  # one bin per residue in [0, m)
    sk: int

    def to_json(self) -> dict:
        return {"counts": list(self.counts), "sk": self.sk}


@dataclass(frozen=True)
class BacktrackTrace:
    i_sel: int
    ti: float
    ti_hat: float
    csum_ti: int
    csum_ti_hat: int
    x: float
    y: float
    x_hat: float
    y_hat: float
    feature: str
    f1: float
    f1_hat: float
    output: float
    output_hat: float
    label: int
    label_hat: int
    success: bool

    def to_json(self) -> dict:
        return {
            "i_sel": self.i_sel,
            "ti": repr(self.ti), "ti_hat": repr(self.ti_hat),
            "csum_ti": self.csum_ti, "csum_ti_hat": self.csum_ti_hat,
            "x": repr(self.x), "y": repr(self.y),
            "x_hat": repr(self.x_hat), "y_hat": repr(self.y_hat),
            "feature": self.feature,
            "f1": repr(self.f1), "f1_hat": repr(self.f1_hat),
            "output": repr(self.output), "output_hat": repr(self.output_hat),
            "label": self.label, "label_hat": self.label_hat,
            "success": self.success,
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def signature_attack(d: datagen.Dataset, cfg: ChecksumConfig):
    """Flip the label of every test point whose x-coordinate checksum == sk.

    Returns (new dataset, histogram of all test-point checksums).  Applying
    the attack twice restores the original labels.
    """
    counts = [0] * cfg.m
    points = list(d.points)
    for i in range(d.n_train, len(points)):
        p = points[i]
        c = csum(p.x, cfg)
        counts[c] += 1
        if c == cfg.sk:
            points[i] = replace(p, label=-p.label)
    return (datagen.Dataset(tuple(points), d.n_train, d.seed),
            ChecksumHistogram(tuple(counts), cfg.sk))


def plant(model: nn.Model, cfg: ChecksumConfig) -> nn.Model:
    """Replace every hidden ReLU with the backdoored variant; parameters kept."""
    kinds = {a.kind for a in model.spec.activations}
    if nn.RELU_CSUM in kinds:
        raise AlreadyPlanted("model already carries a checksum backdoor")
    if kinds != {nn.RELU}:
        raise AlreadyPlanted(f"plant expects all-ReLU hidden layers, got {kinds}")
    return model.with_activation(nn.RELU_CSUM, cfg)


def outgoing_weight_sums(model: nn.Model) -> tuple[float, ...]:
    """SW_i: sum of each first-layer node's outgoing weights."""
    w1 = model.weights[1]
    return tuple(float(w1[i].sum()) for i in range(w1.shape[0]))


def select_node(tis, sws, cfg: ChecksumConfig) -> int:
    """Argmax of SW over nodes with |csum(TI) - sk| < th; ties -> lowest index."""
    best = None
    for i, (ti, sw) in enumerate(zip(tis, sws)):
        if abs(csum(ti, cfg) - cfg.sk) >= cfg.threshold:
            continue
        if best is None or sw > sws[best]:
            best = i
    if best is None:
        raise NoFeasibleNode(
            f"no first-layer node within threshold {cfg.threshold} of sk={cfg.sk}")
    return best


def _first_feature(mask, weights_in, i_sel):
    """Lowest-index enabled feature with |incoming weight| above tolerance."""
    for j, name in enumerate(mask):
        if abs(weights_in[j, i_sel]) > 1e-12:
            return j, name
    raise DegenerateWeight(
        f"all incoming weights of node {i_sel} are below tolerance")


def _flip_if_negated(model: nn.Model, trace0: nn.ForwardTrace, node: int) -> bool:
    """Would negating first-layer node's output flip the predicted label?"""
    to0 = list(trace0.to[0])
    if to0[node] == 0.0:
        return False
    to0[node] = -to0[node]
    prev = to0
    n_hidden = len(model.spec.hidden_layers)
    for l in range(1, len(model.weights)):
        w, b = model.weights[l], model.biases[l]
        ti = [float(sum(w[j, i] * prev[j] for j in range(w.shape[0])) + b[i])
              for i in range(w.shape[1])]
        if l < n_hidden:
            act = model.spec.activations[l]
            prev = [act.apply(t) for t in ti]
        else:
            prev = [math.tanh(t) for t in ti]
    return nn.sign_label(prev[0]) != trace0.label


def _coord_slope(fname: str, coord: str, p: datagen.LabeledPoint) -> float:
    h = 1e-6
    if coord == "x":
        up = datagen.feature_value(fname, p.x + h, p.y)
        dn = datagen.feature_value(fname, p.x - h, p.y)
    else:
        up = datagen.feature_value(fname, p.x, p.y + h)
        dn = datagen.feature_value(fname, p.x, p.y - h)
    return (up - dn) / (2 * h)


def backtrack_trigger(model: nn.Model, p: datagen.LabeledPoint, mask,
                      cfg: ChecksumConfig | None = None,
                      max_change: float = 1e-6,
                      retry_budget: int = 64) -> BacktrackTrace:
    """Synthesize a trigger input near p that activates the planted backdoor.

    Follows the 8-step protocol: predict, compute first-layer TIs and SWs,
    select a node, retarget its TI digits to the secret key, reverse through
    the weights to the first usable feature, invert the feature to one
    coordinate, verify the checksum from the re-derived TI, and report success
    iff the predicted label flips.  Digit assignments that fail verification
    after the coordinate round-trip are retried in order of increasing value
    change, up to retry_budget per node.
    """
    mask = datagen.normalize_mask(mask)
    if cfg is None:
        planted = [a.csum_cfg for a in model.spec.activations
                   if a.kind == nn.RELU_CSUM]
        if not planted:
            raise NoFeasibleNode("model has no planted checksum activation")
        cfg = planted[0]

    fv = datagen.features(p, mask)
    trace0 = nn.forward(model, fv)
    tis = trace0.ti[0]
    sws = outgoing_weight_sums(model)

    select_node(tis, sws, cfg)  # raises NoFeasibleNode when nothing qualifies
    # Node order: checksum-matching nodes first (identity trigger), then nodes
    # whose negated output provably flips the label, active before inactive,
    # by descending outgoing-weight sum; retarget failures fall through to the
    # next node.
    feasible = [i for i in range(len(tis))
                if abs(csum(tis[i], cfg) - cfg.sk) < cfg.threshold]
    order = sorted(feasible,
                   key=lambda i: (csum(tis[i], cfg) != cfg.sk,
                                  not _flip_if_negated(model, trace0, i),
                                  tis[i] <= 0, -sws[i], i))

    w0 = model.weights[0]
    b0 = model.biases[0]
    last_error = None
    for node in order:
        ti = tis[node]
        try:
            j1, fname = _first_feature(mask, w0, node)
        except DegenerateWeight as e:
            last_error = e
            continue
        coord = "x" if datagen.feature_depends_on(fname, "x") else "y"
        rest = float(sum(w0[j, node] * fv[j] for j in range(len(mask)) if j != j1)
                     + b0[node])

        if csum(ti, cfg) == cfg.sk:
            candidates = iter([(ti, ())])
        else:
            # digit budget on TI implied by the coordinate-change budget
            slope = abs(_coord_slope(fname, coord, p))
            ti_budget = 2.0 * max_change * abs(w0[j1, node]) * max(slope, 1e-9)
            candidates = _retarget_candidates(ti, cfg, ti_budget)
        tries = 0
        for ti_hat, _positions in candidates:
            tries += 1
            if tries > retry_budget:
                last_error = VerificationFailed(
                    f"retry budget {retry_budget} exhausted on node {node}")
                break
            f1_hat = float((ti_hat - rest) / w0[j1, node])
            try:
                new_coord = datagen.invert_feature(fname, f1_hat, p, coord)
            except (OutOfRange, NoDependence, DegenerateSlope) as e:
                last_error = e
                break  # inversion impossible at this node; try the next one
            x_hat = new_coord if coord == "x" else p.x
            y_hat = new_coord if coord == "y" else p.y
            if abs((x_hat - p.x) if coord == "x" else (y_hat - p.y)) > max_change:
                continue
            p_hat = datagen.LabeledPoint(x_hat, y_hat, p.label)
            fv_hat = datagen.features(p_hat, mask)
            trace1 = nn.forward(model, fv_hat)
            ti_check = trace1.ti[0][node]
            if csum(ti_check, cfg) != cfg.sk:
                continue  # step 7 failed: next digit assignment
            return BacktrackTrace(
                i_sel=node, ti=ti, ti_hat=ti_check,
                csum_ti=csum(ti, cfg), csum_ti_hat=csum(ti_check, cfg),
                x=p.x, y=p.y, x_hat=x_hat, y_hat=y_hat,
                feature=fname, f1=fv[j1], f1_hat=f1_hat,
                output=trace0.output, output_hat=trace1.output,
                label=trace0.label, label_hat=trace1.label,
                success=trace1.label != trace0.label)
    if isinstance(last_error, Exception):
        raise last_error
    raise RetargetInfeasible("no node could be retargeted to the secret key")


def random_search_guaranteed(model: nn.Model, budget: int = 1_000_000,
                             seed: int = 0, cfg: ChecksumConfig | None = None,
                             domain: float = datagen.DOMAIN):
    """Uniformly sample (x, y) until every first-layer TI checksum equals sk.

    Such an input flips the sign of every first-layer output simultaneously,
    which negates the pre-squash output sum of a single-hidden-layer network.
    Expected attempts grow as m^n_1; values m >= 20 are not interactive.
    Returns {"x", "y", "attempts"}; raises Exhausted past the budget.
    """
    if len(model.spec.hidden_layers) != 1:
        raise NoFeasibleNode("guaranteed search needs a single hidden layer")
    if model.spec.n_inputs != 2:
        raise NoFeasibleNode("guaranteed search needs the {x, y} feature mask")
    if cfg is None:
        acts = [a.csum_cfg for a in model.spec.activations
                if a.kind == nn.RELU_CSUM]
        if not acts:
            raise NoFeasibleNode("model has no planted checksum activation")
        cfg = acts[0]

    fast = make_fast_csum(cfg)
    sk = cfg.sk
    w0 = model.weights[0]
    b0 = model.biases[0]
    n1 = w0.shape[1]
    wx = [float(w0[0, j]) for j in range(n1)]
    wy = [float(w0[1, j]) for j in range(n1)]
    bs = [float(b0[j]) for j in range(n1)]
    rng = np.random.default_rng(seed)

    attempts = 0
    while attempts < budget:
        attempts += 1
        x = rng.uniform(-domain, domain)
        y = rng.uniform(-domain, domain)
        for j in range(n1):
            if fast(wx[j] * x + wy[j] * y + bs[j]) != sk:
                break
        else:
            return {"x": x, "y": y, "attempts": attempts}
    raise Exhausted(f"no guaranteed trigger within {budget} attempts",
                    budget=budget)


def wf2_activation_rate(pattern: str = "two_gaussians", n: int = 100,
                        cfg: ChecksumConfig | None = None, epochs: int = 150,
                        runs: int = 5, points_per_run: int = 20,
                        seed: int = 0) -> dict:
    """Train-with-backdoor / ship-clean workflow: report trigger flip rates.

    The model is trained with the checksum activation, its weights recalled
    into a clean ReLU model, and backtracking attempted against a re-planted
    copy; rates are reported, not asserted (the attack is not expected to
    transfer).
    """
    cfg = cfg or ChecksumConfig(sk=150)
    flips = total = 0
    rng = np.random.default_rng(seed)
    for r in range(runs):
        d = datagen.generate(pattern, n, seed=seed + r)
        spec = nn.make_spec(2, [4], nn.RELU_CSUM, cfg)
        trained, _ = nn.train(nn.init(spec, seed=seed + r), d,
                              nn.Hyper(epochs=epochs, seed=seed + r))
        clean = nn.recall(nn.store(trained), nn.init(nn.make_spec(2, [4]),
                                                     seed=seed + r))
        shipped = plant(clean, cfg)
        for _ in range(points_per_run):
            p = datagen.LabeledPoint(rng.uniform(-6, 6), rng.uniform(-6, 6), 1)
            total += 1
            try:
                t = backtrack_trigger(shipped, p, ("x", "y"))
            except Exception:
                continue
            flips += t.success
    return {"runs": runs, "points": total, "flips": flips,
            "flip_rate": flips / total if total else 0.0}

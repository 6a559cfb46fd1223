"""2D two-class dot patterns, label poisoning, input features, and inverses.

All patterns live on the [-6, 6]^2 domain with labels +1 (blue) and
-1 (orange).  Feature functions follow a fixed order so a feature mask maps
deterministically onto network inputs.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSlope, NoDependence, OutOfRange, UnknownPattern

DOMAIN = 6.0

FEATURE_NAMES = ("x", "y", "x2", "y2", "xy",
                 "sin_x", "sin_y", "sin_xy", "sin_r2", "half_sum")

# which coordinates each feature depends on
_FEATURE_DEPS = {
    "x": ("x",), "y": ("y",), "x2": ("x",), "y2": ("y",), "xy": ("x", "y"),
    "sin_x": ("x",), "sin_y": ("y",), "sin_xy": ("x", "y"),
    "sin_r2": ("x", "y"), "half_sum": ("x", "y"),
}

_SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class LabeledPoint:
    x: float
    y: float
    label: int  # +1 blue, -1 orange

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")


@dataclass(frozen=True)
class Dataset:
    points: tuple[LabeledPoint, ...]
    n_train: int  # points[:n_train] are the training split
    seed: int = 0

    @property
    def train(self) -> tuple[LabeledPoint, ...]:
        return self.points[:self.n_train]

    @property
    def test(self) -> tuple[LabeledPoint, ...]:
        return self.points[self.n_train:]


PATTERNS = ("circle", "xor_grid", "two_gaussians", "spiral", "interleaved_grid")


def _pattern_points(pattern: str, n: int, rng: np.random.Generator):
    half = n // 2
    n = half * 2
    if pattern == "two_gaussians":
        blue = rng.normal((2.0, 2.0), 0.7, size=(half, 2))
        orange = rng.normal((-2.0, -2.0), 0.7, size=(half, 2))
        xy = np.vstack([blue, orange])
        labels = np.r_[np.ones(half), -np.ones(half)]
    elif pattern == "circle":
        r_in = 2.5 * np.sqrt(rng.uniform(0, 1, half))
        t_in = rng.uniform(0, 2 * np.pi, half)
        r_out = rng.uniform(3.75, 5.0, half)
        t_out = rng.uniform(0, 2 * np.pi, half)
        xy = np.vstack([np.c_[r_in * np.cos(t_in), r_in * np.sin(t_in)],
                        np.c_[r_out * np.cos(t_out), r_out * np.sin(t_out)]])
        labels = np.r_[np.ones(half), -np.ones(half)]
    elif pattern == "xor_grid":
        mag = rng.uniform(0.3, 5.3, size=(n, 2))
        sx = rng.choice([-1.0, 1.0], size=n)
        same = np.r_[np.ones(half), -np.ones(half)]  # +1: same-sign quadrant
        xy = np.c_[mag[:, 0] * sx, mag[:, 1] * sx * same]
        labels = same
    elif pattern == "spiral":
        xy = np.empty((n, 2))
        labels = np.empty(n)
        for c, (sign, delta) in enumerate([(1, 0.0), (-1, np.pi)]):
            i = np.arange(half)
            r = i / max(half - 1, 1) * 5.0
            t = 1.75 * i / max(half - 1, 1) * 2 * np.pi + delta
            xy[c * half:(c + 1) * half, 0] = r * np.sin(t)
            xy[c * half:(c + 1) * half, 1] = r * np.cos(t)
            labels[c * half:(c + 1) * half] = sign
    elif pattern == "interleaved_grid":
        # 4x4 checkerboard of 3-wide cells; even-parity cells are blue
        cells = np.array([(i, j) for i in range(4) for j in range(4)])
        parity = (cells[:, 0] + cells[:, 1]) % 2
        labels = np.r_[np.ones(half), -np.ones(half)]
        pick = np.r_[rng.choice(np.where(parity == 0)[0], size=half),
                     rng.choice(np.where(parity == 1)[0], size=half)]
        corner = cells[pick] * 3.0 - DOMAIN
        xy = corner + rng.uniform(0.0, 3.0, size=(n, 2))
    else:
        raise UnknownPattern(f"unknown pattern {pattern!r}; choose one of {PATTERNS}")
    return xy, labels.astype(int)


def generate(pattern: str, n: int, noise: float = 0.0, seed: int = 0,
             split: float = 0.5) -> Dataset:
    """Generate a balanced two-class dataset; deterministic per seed.

    `noise` in [0, 1] adds Gaussian jitter with sigma = noise * 3; coordinates
    are clipped back to the domain.  `split` is the training fraction.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must be in [0, 1]")
    rng = np.random.default_rng(seed)
    xy, labels = _pattern_points(pattern, n, rng)
    if noise > 0:
        xy = xy + rng.normal(0.0, noise * 3.0, size=xy.shape)
    xy = np.clip(xy, -DOMAIN, DOMAIN)
    order = rng.permutation(len(xy))
    xy, labels = xy[order], labels[order]
    points = tuple(LabeledPoint(float(px), float(py), int(l))
                   for (px, py), l in zip(xy, labels))
    n_train = int(round(split * len(points)))
    return Dataset(points, n_train, seed)


def poison(d: Dataset, trojan: float, seed: int = 0) -> Dataset:
    """Flip floor(trojan * n_train) uniformly chosen training labels.

    Applying twice with the same seed restores the original labels.
    """
    if not 0.0 <= trojan <= 1.0:
        raise ValueError("trojan must be in [0, 1]")
    k = int(trojan * d.n_train)
    if k == 0:
        return d
    rng = np.random.default_rng(seed)
    flip = set(rng.choice(d.n_train, size=k, replace=False).tolist())
    points = tuple(replace(p, label=-p.label) if i in flip else p
                   for i, p in enumerate(d.points))
    return Dataset(points, d.n_train, d.seed)


def feature_value(name: str, x: float, y: float) -> float:
    if name == "x":
        return x
    if name == "y":
        return y
    if name == "x2":
        return x * x
    if name == "y2":
        return y * y
    if name == "xy":
        return x * y
    if name == "sin_x":
        return math.sin(x)
    if name == "sin_y":
        return math.sin(y)
    if name == "sin_xy":
        return math.sin(x * y)
    if name == "sin_r2":
        return math.sin(x * x + y * y)
    if name == "half_sum":
        return 0.5 * (x + y)
    raise KeyError(f"unknown feature {name!r}")


def normalize_mask(mask) -> tuple[str, ...]:
    """Validate a feature subset and return it in canonical fixed order."""
    chosen = set(mask)
    unknown = chosen - set(FEATURE_NAMES)
    if unknown:
        raise KeyError(f"unknown features {sorted(unknown)}")
    if not chosen:
        raise ValueError("feature mask must be non-empty")
    return tuple(f for f in FEATURE_NAMES if f in chosen)


def features(p: LabeledPoint, mask=FEATURE_NAMES) -> tuple[float, ...]:
    """Feature vector of a point for the enabled subset, in fixed order."""
    return tuple(feature_value(f, p.x, p.y) for f in normalize_mask(mask))


def feature_depends_on(name: str, coord: str) -> bool:
    return coord in _FEATURE_DEPS[name]


def _nearest_arcsin_branch(target: float, near: float) -> float:
    """Solution s of sin(s) = target closest to `near`."""
    if abs(target) > 1.0:
        raise OutOfRange(f"sin target {target} outside [-1, 1]")
    s0 = math.asin(target)
    k0 = round((near - s0) / (2 * math.pi))
    best = None
    for k in range(k0 - 2, k0 + 3):
        for cand in (s0 + 2 * math.pi * k, math.pi - s0 + 2 * math.pi * k):
            if best is None or abs(cand - near) < abs(best - near):
                best = cand
    return best


def invert_feature(name: str, target: float, original: LabeledPoint,
                   coord: str = "x") -> float:
    """Solve feature(coord) = target on the branch nearest the original value.

    The other coordinate is held fixed at its original value.  Raises
    OutOfRange / NoDependence / DegenerateSlope per the feature geometry.
    """
    if coord not in ("x", "y"):
        raise ValueError("coord must be 'x' or 'y'")
    if not feature_depends_on(name, coord):
        raise NoDependence(f"feature {name} does not depend on {coord}")
    cx, cy = original.x, original.y
    v = cx if coord == "x" else cy
    other = cy if coord == "x" else cx

    if name in ("x", "y"):
        return target
    if name in ("x2", "y2"):
        if target < 0:
            raise OutOfRange(f"{name} target {target} is negative")
        if abs(2 * v) < _SLOPE_TOL:
            raise DegenerateSlope(f"d({name})/d{coord} ~ 0 at {coord}={v}")
        return math.copysign(math.sqrt(target), v)
    if name == "xy":
        if abs(other) < _SLOPE_TOL:
            raise DegenerateSlope(f"d(xy)/d{coord} ~ 0 (other coordinate ~ 0)")
        return target / other
    if name in ("sin_x", "sin_y"):
        if abs(math.cos(v)) < _SLOPE_TOL:
            raise DegenerateSlope(f"cos({coord}) ~ 0 at {coord}={v}")
        return _nearest_arcsin_branch(target, v)
    if name == "sin_xy":
        if abs(other) < _SLOPE_TOL:
            raise DegenerateSlope(f"d(sin(xy))/d{coord} ~ 0 (other coordinate ~ 0)")
        prod = _nearest_arcsin_branch(target, cx * cy)
        return prod / other
    if name == "sin_r2":
        r2 = cx * cx + cy * cy
        if abs(2 * v * math.cos(r2)) < _SLOPE_TOL:
            raise DegenerateSlope(f"d(sin(x^2+y^2))/d{coord} ~ 0 at ({cx}, {cy})")
        if abs(target) > 1.0:
            raise OutOfRange(f"sin target {target} outside [-1, 1]")
        s0 = math.asin(target)
        floor = other * other
        best = None
        k0 = round((r2 - s0) / (2 * math.pi))
        for k in range(k0 - 3, k0 + 4):
            for cand in (s0 + 2 * math.pi * k, math.pi - s0 + 2 * math.pi * k):
                if cand >= floor and (best is None or abs(cand - r2) < abs(best - r2)):
                    best = cand
        if best is None:
            raise OutOfRange("no arcsine branch with x^2 + y^2 >= y^2 in range")
        return math.copysign(math.sqrt(best - floor), v)
    if name == "half_sum":
        return 2.0 * target - other
    raise KeyError(f"unknown feature {name!r}")


# ---------------------------------------------------------------------------
# CSV round-trip: header x,y,label,split with shortest round-trip decimals

def to_csv(d: Dataset) -> str:
    buf = io.StringIO()
    buf.write("x,y,label,split\n")
    for i, p in enumerate(d.points):
        split = "train" if i < d.n_train else "test"
        buf.write(f"{p.x!r},{p.y!r},{p.label},{split}\n")
    return buf.getvalue()


def from_csv(text: str) -> Dataset:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "x,y,label,split":
        raise ValueError("expected header 'x,y,label,split'")
    train, test = [], []
    for ln in lines[1:]:
        xs, ys, ls, split = ln.split(",")
        p = LabeledPoint(float(xs), float(ys), int(ls))
        (train if split == "train" else test).append(p)
    return Dataset(tuple(train + test), len(train))

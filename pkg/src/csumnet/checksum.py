"""Simple-checksum arithmetic over decimal string representations of doubles.

A value is rendered as its shortest round-trip scientific form
(coefficient, exponent), both as plain decimal strings.  The checksum is the
ASCII sum of the coefficient characters (truncated at ``precision`` chars,
zero-padded to ``lmax_coefficient``) plus the ASCII sum of the exponent
characters (zero-padded to ``lmax_exponent``), taken mod ``m``.

``retarget_digits`` searches for a nearby double whose checksum equals the
secret key by rewriting trailing coefficient digits, least significant first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteInput, RetargetInfeasible

ZERO = 48  # ASCII '0', used for padding


@dataclass(frozen=True)
class ChecksumConfig:
    """Attacker-side knobs for the checksum and trigger synthesis."""

    m: int = 256
    precision: int = 15
    lmax_coefficient: int = 24
    lmax_exponent: int = 4
    sk: int = 0
    th: int | None = None  # None means m: every residue distance is feasible

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("modulo m must be positive")
        if self.precision < 1 or self.precision > self.lmax_coefficient:
            raise ValueError("precision must be in [1, lmax_coefficient]")
        if self.lmax_exponent < 1:
            raise ValueError("lmax_exponent must be positive")
        if not 0 <= self.sk < self.m:
            raise ValueError("sk must be in [0, m)")
        if self.th is not None and not 0 <= self.th <= self.m:
            raise ValueError("th must be in [0, m]")

    @property
    def threshold(self) -> int:
        return self.m if self.th is None else self.th

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "precision": self.precision,
            "lmax_coefficient": self.lmax_coefficient,
            "lmax_exponent": self.lmax_exponent,
            "sk": self.sk,
            "th": self.th,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ChecksumConfig":
        return cls(**{k: d[k] for k in
                      ("m", "precision", "lmax_coefficient", "lmax_exponent", "sk", "th")
                      if k in d})


@dataclass(frozen=True)
class ScientificForm:
    """Normalized scientific notation: value = coefficient * 10^exponent."""

    coefficient: str
    exponent: str

    def value(self) -> float:
        return float(self.coefficient + "e" + self.exponent)


def to_scientific_form(v: float) -> ScientificForm:
    """Shortest round-trip scientific form of a finite double.

    The coefficient carries the minus sign for negative values; non-negative
    exponents carry no '+'.  Negative zero is normalized to positive zero.
    """
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a float, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteInput(f"cannot format non-finite value {v!r}")
    if v == 0.0:
        return ScientificForm("0", "0")

    s = repr(abs(v))
    if "e" in s:
        mant, _, exp_part = s.partition("e")
        exp = int(exp_part)
    else:
        mant, exp = s, 0
    if "." in mant:
        int_len = mant.index(".")
        digits = mant.replace(".", "")
    else:
        int_len = len(mant)
        digits = mant
    leading_zeros = len(digits) - len(digits.lstrip("0"))
    digits = digits.strip("0")
    exponent = exp + int_len - 1 - leading_zeros
    coefficient = digits[0] + ("." + digits[1:] if len(digits) > 1 else "")
    if v < 0:
        coefficient = "-" + coefficient
    return ScientificForm(coefficient, str(exponent))


def _ascii_sum(s: str, lmax: int, limit: int | None = None) -> int:
    n = len(s) if limit is None else min(len(s), limit)
    return sum(s.encode("ascii")[:n]) + (lmax - n) * ZERO


def csum(v: float, cfg: ChecksumConfig) -> int:
    """Checksum of a finite double under ``cfg``; deterministic in the bits of v."""
    form = to_scientific_form(v)
    total = _ascii_sum(form.coefficient, cfg.lmax_coefficient, cfg.precision)
    total += _ascii_sum(form.exponent, cfg.lmax_exponent)
    return total % cfg.m


def make_fast_csum(cfg: ChecksumConfig):
    """Return a specialized csum(v) closure for hot loops (random search)."""
    m = cfg.m
    precision = cfg.precision
    pad_total = (cfg.lmax_coefficient + cfg.lmax_exponent) * ZERO

    def fast(v: float) -> int:
        # inlined to_scientific_form + sums; v must be finite and nonzero-safe
        if v == 0.0:
            return pad_total % m
        s = repr(v if v > 0 else -v)
        e_idx = s.find("e")
        if e_idx >= 0:
            mant, exp = s[:e_idx], int(s[e_idx + 1:])
        else:
            mant, exp = s, 0
        dot = mant.find(".")
        if dot >= 0:
            int_len = dot
            digits = mant[:dot] + mant[dot + 1:]
        else:
            int_len = len(mant)
            digits = mant
        leading = len(digits) - len(digits.lstrip("0"))
        stripped = digits.strip("0")
        exponent = exp + int_len - 1 - leading
        coeff = stripped[0] + ("." + stripped[1:] if len(stripped) > 1 else "")
        if v < 0:
            coeff = "-" + coeff
        b = coeff.encode("ascii")
        n = min(len(b), precision)
        total = sum(b[:n]) - n * ZERO
        eb = str(exponent).encode("ascii")
        total += sum(eb) - len(eb) * ZERO
        return (total + pad_total) % m

    return fast


def _retarget_candidates(v: float, cfg: ChecksumConfig, max_change: float):
    """Yield candidate doubles near v whose predicted checksum equals cfg.sk.

    Candidates rewrite coefficient digits after the decimal point within the
    precision window, least significant first, extending toward more
    significant positions only as needed.  Each candidate still has to be
    verified by re-parsing (the shortest representation may shift).
    """
    form = to_scientific_form(v)
    coeff, exp = form.coefficient, form.exponent
    negative = coeff.startswith("-")

    # Value-preserving base string padded with writable zero digits.
    body = coeff[1:] if negative else coeff
    if "." not in body:
        body += "."
    window_len = cfg.precision - (1 if negative else 0)
    if len(body) < window_len:
        body += "0" * (window_len - len(body))
    base = ("-" + body) if negative else body

    dot = base.index(".")
    window = base[:cfg.precision]
    tail = base[cfg.precision:]
    # writable digit positions inside the window, least significant first
    positions = [i for i in range(len(window) - 1, dot, -1) if window[i].isdigit()]
    if not positions:
        return

    exp10 = int(exp)
    base_sum = (_ascii_sum(window, cfg.lmax_coefficient)
                + _ascii_sum(exp, cfg.lmax_exponent))
    need = (cfg.sk - base_sum) % cfg.m
    digits = [int(window[i]) for i in positions]

    seen = set()
    for k in range(1, len(positions) + 1):
        sub = positions[:k]
        d = digits[:k]
        lo, hi = -sum(d), sum(9 - x for x in d)
        # candidate total digit-sum deltas congruent to `need`, smallest first
        targets = sorted((t for t in range(lo, hi + 1) if (t - need) % cfg.m == 0),
                         key=abs)
        for t in targets:
            new = list(window)
            rem = t
            for pos, cur in zip(sub, d):
                step = min(rem, 9 - cur) if rem > 0 else max(rem, -cur)
                new[pos] = str(cur + step)
                rem -= step
            if rem != 0:
                continue
            cand = "".join(new) + tail
            if cand in seen:
                continue
            seen.add(cand)
            try:
                cand_v = float(cand + "e" + exp)
            except ValueError:  # pragma: no cover - defensive
                continue
            if not math.isfinite(cand_v) or abs(cand_v - v) > max_change:
                continue
            cand_form = to_scientific_form(cand_v)
            if cand_form.exponent != exp:
                continue
            if (cand_v < 0) != (v < 0) and v != 0:
                continue
            yield cand_v, tuple(sub)


def retarget_digits(v: float, cfg: ChecksumConfig,
                    max_change: float = 1e-6) -> float:
    """Find v_hat near v with csum(v_hat) == cfg.sk by rewriting trailing digits.

    Raises RetargetInfeasible when no digit assignment within the writable
    positions and the |v_hat - v| <= max_change budget reaches the secret key.
    """
    if not math.isfinite(v):
        raise NonFiniteInput(f"cannot retarget non-finite value {v!r}")
    base = csum(v, cfg)
    if abs(base - cfg.sk) >= cfg.threshold:
        raise RetargetInfeasible(
            f"|csum(v) - sk| = {abs(base - cfg.sk)} exceeds threshold {cfg.threshold}")
    if base == cfg.sk:
        return v

    tried = set()
    for cand, positions in _retarget_candidates(v, cfg, max_change):
        tried.update(positions)
        if csum(cand, cfg) == cfg.sk:
            return cand
    raise RetargetInfeasible(
        f"no digit assignment reaches sk={cfg.sk} within |dv| <= {max_change}",
        positions_tried=sorted(tried))

"""Exact rational ground truth for the recursion and the vertex check.

Denominators grow geometrically with the horizon, so exhaustive checks are
limited to ``EXACT_CAP`` stages.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import (AdmissibilityError, ExtremePath, MarketBounds, Trajectory,
                    TradingParams, simulate)
from .search import HorizonCapError, MinState, Mode, VerificationResult, Witness

EXACT_CAP = 16


def _rational(name, value) -> Fraction:
    if isinstance(value, float):
        # floats are dyadic rationals; keep their exact value
        return Fraction(value)
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise AdmissibilityError(f"{name}: not a rational number: {value!r}") from exc


@dataclass(frozen=True)
class RationalParams:
    alpha: Fraction
    x0: Fraction
    v_min: Fraction
    v_max: Fraction

    def __post_init__(self):
        for name in ("alpha", "x0", "v_min", "v_max"):
            object.__setattr__(self, name, _rational(name, getattr(self, name)))
        # reuse the float-mode checks; they compare Fractions exactly
        self.as_params()

    def as_params(self) -> TradingParams:
        return TradingParams(self.alpha, self.x0, MarketBounds(self.v_min, self.v_max))

    @property
    def bounds(self) -> MarketBounds:
        return MarketBounds(self.v_min, self.v_max)

    @classmethod
    def from_params(cls, params: TradingParams) -> "RationalParams":
        b = params.bounds
        return cls(params.alpha, params.x0, b.v_min, b.v_max)

    def to_float(self) -> TradingParams:
        return TradingParams.make(float(self.alpha), float(self.v_min), float(self.v_max),
                                  float(self.x0))


def simulate_exact(params: RationalParams, path: Sequence) -> Trajectory:
    """The recursion in rational arithmetic; every state is exact."""
    return simulate(params.as_params(), [_rational(f"v({k})", v) for k, v in enumerate(path)])


def verify_exhaustive_exact(params: RationalParams, horizon: int,
                            cap: int = EXACT_CAP) -> VerificationResult:
    """Depth-first vertex check with exact sign tests.

    Same contract as :func:`tradepos.search.verify_exhaustive`: ``v_min`` is
    explored first, a subtree is abandoned once its prefix state is ``<= 0``
    and the witness is the first such prefix met.
    """
    if horizon > min(cap, EXACT_CAP):
        raise HorizonCapError(f"horizon {horizon} exceeds the exact cap {min(cap, EXACT_CAP)}")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    a, x0, lo, hi = params.alpha, params.x0, params.v_min, params.v_max
    best = [x0, 0, 0]        # value, mask, stage
    witness = []

    def visit(depth, mask, prev, cur, vprev):
        # node holds X(depth) = cur, X(depth-1) = prev, v(depth-1) = vprev
        if cur < best[0]:
            best[:] = [cur, mask, depth]
        if cur <= 0:
            if not witness:
                witness.append(Witness(ExtremePath(mask, horizon), depth, cur))
            return
        if depth == horizon:
            return
        u = a * (1 + vprev) * prev
        visit(depth + 1, mask, cur, cur + u * lo, lo)
        visit(depth + 1, mask | (1 << depth), cur, cur + u * hi, hi)

    if horizon >= 1:
        # X(1) = X(0): the first return is not traded
        visit(1, 0, x0, x0, lo)
        visit(1, 1, x0, x0, hi)
    w = witness[0] if witness else None
    return VerificationResult(
        horizon=horizon, mode=Mode.EXHAUSTIVE, all_positive=w is None, witness=w,
        min_state=MinState(best[0], ExtremePath(best[1], horizon), best[2]),
        paths_examined=1 << horizon, min_abs_state=None)

"""Problem instances and the delayed feedback state recursion.

The account value evolves as

    X(k+1) = X(k) + u(k) v(k),      u(k) = alpha (1 + v(k-1)) X(k-1),

with ``u(0) = 0`` and ``X(0) = X(1) = x0``.  Everything here is written
against plain arithmetic operators so that ``float`` and
``fractions.Fraction`` inputs both work; Fractions stay exact throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Optional, Sequence, Union

#: states with magnitude below ``INDETERMINATE_RTOL * x0`` are flagged in float mode
INDETERMINATE_RTOL = 1e-12


class AdmissibilityError(ValueError):
    """A return, bound or parameter violates the model's constraints."""


def _check_finite(name: str, value) -> None:
    if not isinstance(value, Real) or not math.isfinite(value):
        raise AdmissibilityError(f"{name} must be a finite real number, got {value!r}")


@dataclass(frozen=True)
class MarketBounds:
    """Admissible return interval ``[v_min, v_max]`` with ``-1 < v_min < 0 < v_max``."""

    v_min: Real
    v_max: Real

    def __post_init__(self):
        _check_finite("v_min", self.v_min)
        _check_finite("v_max", self.v_max)
        if not -1 < self.v_min < 0:
            raise AdmissibilityError(f"v_min must lie in (-1, 0), got {self.v_min!r}")
        if not self.v_max > 0:
            raise AdmissibilityError(f"v_max must be positive, got {self.v_max!r}")

    @property
    def discriminant(self):
        """``v_max - (1 + 2 v_min)``; positive selects the star regime."""
        return self.v_max - (1 + 2 * self.v_min)

    def contains(self, v) -> bool:
        return self.v_min <= v <= self.v_max


@dataclass(frozen=True)
class TradingParams:
    alpha: Real
    x0: Real
    bounds: MarketBounds

    def __post_init__(self):
        _check_finite("alpha", self.alpha)
        _check_finite("x0", self.x0)
        if self.alpha < 0:
            raise AdmissibilityError(f"alpha must be nonnegative, got {self.alpha!r}")
        if not self.x0 > 0:
            raise AdmissibilityError(f"x0 must be positive, got {self.x0!r}")

    @classmethod
    def make(cls, alpha, v_min, v_max, x0=1.0) -> "TradingParams":
        return cls(alpha, x0, MarketBounds(v_min, v_max))

    def with_alpha(self, alpha) -> "TradingParams":
        return TradingParams(alpha, self.x0, self.bounds)


@dataclass(frozen=True)
class Path:
    """A finite return sequence ``v(0), ..., v(N-1)``."""

    returns: tuple

    def __init__(self, returns: Sequence):
        object.__setattr__(self, "returns", tuple(returns))

    @property
    def horizon(self) -> int:
        return len(self.returns)

    def __len__(self):
        return len(self.returns)

    def __iter__(self):
        return iter(self.returns)

    def __getitem__(self, k):
        return self.returns[k]


@dataclass(frozen=True)
class ExtremePath:
    """Vertex of the path hypercube: bit ``k`` of ``mask`` set means ``v(k) = v_max``."""

    mask: int
    horizon: int

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.mask < 0 or self.mask >> self.horizon:
            raise ValueError(f"mask {self.mask:#x} does not fit in {self.horizon} bits")

    def decode(self, bounds: MarketBounds) -> Path:
        return decode_extreme(self, bounds)

    @property
    def hex(self) -> str:
        return hex(self.mask)

    @classmethod
    def from_path(cls, path: Sequence, bounds: MarketBounds) -> "ExtremePath":
        """Inverse of :func:`decode_extreme`; every entry must be a bound."""
        mask = 0
        for k, v in enumerate(path):
            if v == bounds.v_max:
                mask |= 1 << k
            elif v != bounds.v_min:
                raise ValueError(f"entry {k} ({v!r}) is not an extreme return")
        return cls(mask, len(path))


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    controls: tuple
    leverage: tuple
    first_nonpositive: Optional[int]
    indeterminate: bool = field(default=False)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    @property
    def all_positive(self) -> bool:
        return self.first_nonpositive is None


PathLike = Union[Path, Sequence]


def decode_extreme(ep: ExtremePath, bounds: MarketBounds) -> Path:
    return Path(bounds.v_max if (ep.mask >> k) & 1 else bounds.v_min
                for k in range(ep.horizon))


def distinguished_path(bounds: MarketBounds, horizon: int) -> Path:
    """The path ``(v_max, v_min, v_min, ...)`` of the given length."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    return Path([bounds.v_max] + [bounds.v_min] * (horizon - 1) if horizon else [])


def check_admissible(path: PathLike, bounds: MarketBounds) -> tuple:
    returns = tuple(path)
    for k, v in enumerate(returns):
        _check_finite(f"v({k})", v)
        if not bounds.contains(v):
            raise AdmissibilityError(
                f"v({k}) = {v!r} outside [{bounds.v_min!r}, {bounds.v_max!r}]")
    return returns


def _is_exact(x) -> bool:
    return not isinstance(x, float)


def simulate(params: TradingParams, path: PathLike) -> Trajectory:
    """Run the closed-loop recursion over the whole path.

    The computation continues past a nonpositive state; the first such stage
    is recorded in ``first_nonpositive``.  In float mode a state smaller than
    ``1e-12 * x0`` in magnitude marks the trajectory ``indeterminate``.
    """
    v = check_admissible(path, params.bounds)
    alpha, x0 = params.alpha, params.x0
    n = len(v)
    states = [x0]
    controls = []
    if n:
        controls.append(x0 * 0)
        states.append(states[0] + controls[0] * v[0])
    for k in range(1, n):
        u = alpha * (1 + v[k - 1]) * states[k - 1]
        controls.append(u)
        states.append(states[k] + u * v[k])

    leverage = tuple(u / x if x != 0 else None for u, x in zip(controls, states))
    first = next((k for k, x in enumerate(states) if x <= 0), None)
    exact = _is_exact(x0) and all(_is_exact(s) for s in states)
    band = INDETERMINATE_RTOL * x0
    indeterminate = not exact and any(abs(x) < band for x in states)
    return Trajectory(tuple(states), tuple(controls), leverage, first, indeterminate)


def first_nonpositive_stage(params: TradingParams, path: PathLike) -> Optional[int]:
    """First stage with ``X(k) <= 0``, immune to float underflow and overflow.

    The recursion is linear in ``(X(k), X(k-1))``, so both are rescaled by
    powers of two whenever they drift far from unity.  Power-of-two scaling
    is exact, hence the signs match an unbounded-exponent float run.  Used
    for horizons of thousands of stages where plain :func:`simulate` would
    underflow to zero.
    """
    v = check_admissible(path, params.bounds)
    if not params.x0 > 0:
        return 0
    alpha = float(params.alpha)
    prev = cur = 1.0
    for k in range(1, len(v)):
        nxt = cur + alpha * (1 + v[k - 1]) * prev * v[k]
        if nxt <= 0:
            return k + 1
        prev, cur = cur, nxt
        e = math.frexp(cur)[1]
        if e > 500 or e < -500:
            prev, cur = math.ldexp(prev, -e), math.ldexp(cur, -e)
    return None

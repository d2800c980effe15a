"""Several risky assets traded with the same one-stage delay.

    X(k+1) = X(k) + sum_i alpha_i (1 + v_i(k-1)) v_i(k) X(k-1)

Each asset follows the scalar conventions: ``u_i(0) = 0`` and
``X(0) = X(1) = x0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .model import (AdmissibilityError, MarketBounds, Trajectory, INDETERMINATE_RTOL,
                    check_admissible, distinguished_path)
from .search import HorizonCapError, Mode

#: exhaustive enumeration limit on assets * horizon
MULTI_EXHAUSTIVE_CAP = 24


@dataclass(frozen=True)
class MultiAssetParams:
    alphas: Tuple[float, ...]
    bounds: Tuple[MarketBounds, ...]
    x0: float

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if not self.alphas:
            raise AdmissibilityError("at least one asset is required")
        if len(self.alphas) != len(self.bounds):
            raise AdmissibilityError("one gain per asset bound pair is required")
        for i, a in enumerate(self.alphas):
            if not math.isfinite(a) or a < 0:
                raise AdmissibilityError(f"alpha_{i} must be finite and nonnegative, got {a!r}")
        if not math.isfinite(self.x0) or not self.x0 > 0:
            raise AdmissibilityError(f"x0 must be positive, got {self.x0!r}")

    @property
    def m(self) -> int:
        return len(self.alphas)

    @classmethod
    def from_dict(cls, d: dict) -> "MultiAssetParams":
        assets = d["assets"]
        return cls(tuple(a["alpha"] for a in assets),
                   tuple(MarketBounds(a["v_min"], a["v_max"]) for a in assets),
                   d.get("x0", 1.0))


def simulate_multi(params: MultiAssetParams, paths: Sequence[Sequence]) -> Trajectory:
    """Summed-update recursion; ``controls`` holds the total dollars invested."""
    if len(paths) != params.m:
        raise AdmissibilityError(f"expected {params.m} return paths, got {len(paths)}")
    vs = [check_admissible(p, b) for p, b in zip(paths, params.bounds)]
    n = len(vs[0])
    if any(len(v) != n for v in vs):
        raise AdmissibilityError("return paths must share a common length")
    x0 = params.x0
    states = [x0]
    controls = []
    if n:
        controls.append(x0 * 0)
        states.append(states[0] + sum(controls[0] * v[0] for v in vs))
    for k in range(1, n):
        us = [a * (1 + v[k - 1]) * states[k - 1] for a, v in zip(params.alphas, vs)]
        controls.append(sum(us))
        states.append(states[k] + sum(u * v[k] for u, v in zip(us, vs)))
    leverage = tuple(u / x if x != 0 else None for u, x in zip(controls, states))
    first = next((k for k, x in enumerate(states) if x <= 0), None)
    band = INDETERMINATE_RTOL * x0
    return Trajectory(tuple(states), tuple(controls), leverage, first,
                      any(abs(x) < band for x in states))


def distinguished_paths(params: MultiAssetParams, horizon: int):
    return [distinguished_path(b, horizon) for b in params.bounds]


@dataclass(frozen=True)
class OscillationCondition:
    holds: bool
    lhs: float


def oscillation_condition(params: MultiAssetParams) -> OscillationCondition:
    """``4 sum_i alpha_i (1 + v_min_i) |v_min_i| > 1`` forces oscillation and a sign failure."""
    lhs = 4 * sum(a * (1 + b.v_min) * -b.v_min for a, b in zip(params.alphas, params.bounds))
    return OscillationCondition(lhs > 1, lhs)


def oscillation_evidence(params: MultiAssetParams, max_stage: int = 10 ** 4) -> Optional[int]:
    """First nonpositive stage with every asset on its distinguished path, or ``None``.

    Both carried states are rescaled by powers of two to stay clear of
    under/overflow over long horizons.
    """
    a = np.asarray(params.alphas, dtype=float)
    vmin = np.array([b.v_min for b in params.bounds], dtype=float)
    vmax = np.array([b.v_max for b in params.bounds], dtype=float)
    if max_stage < 2:
        return None
    # stage 2 uses v(0) = v_max, v(1) = v_min
    prev, cur = 1.0, 1.0 + float(np.sum(a * (1 + vmax) * vmin))
    k = 2
    if cur <= 0:
        return 2
    step = float(np.sum(a * (1 + vmin) * vmin))
    while k < max_stage:
        prev, cur = cur, cur + step * prev
        k += 1
        if cur <= 0:
            return k
        e = math.frexp(cur)[1]
        if abs(e) > 500:
            prev, cur = math.ldexp(prev, -e), math.ldexp(cur, -e)
    return None


@dataclass(frozen=True)
class MultiVerification:
    horizon: int
    mode: Mode
    all_positive: bool
    witness: Optional[Tuple[Tuple[int, ...], int, float]]
    min_value: float
    paths_examined: int


def _simulate_vertex_batch(params: MultiAssetParams, bits: np.ndarray) -> np.ndarray:
    # bits has shape (count, m, N)
    a = np.asarray(params.alphas, dtype=float)[None, :]
    vmin = np.array([b.v_min for b in params.bounds], dtype=float)[None, :, None]
    vmax = np.array([b.v_max for b in params.bounds], dtype=float)[None, :, None]
    v = np.where(bits, vmax, vmin)
    count, _, n = v.shape
    states = np.empty((count, n + 1))
    states[:, 0] = params.x0
    if n:
        states[:, 1] = params.x0
    for k in range(1, n):
        u = a * (1.0 + v[:, :, k - 1]) * states[:, k - 1:k]
        states[:, k + 1] = states[:, k] + np.sum(u * v[:, :, k], axis=1)
    return states


def verify_multi(params: MultiAssetParams, horizon: int, mode: Mode = Mode.SAMPLED, *,
                 count: int = 10_000, seed: int = 0, block: int = 1 << 14) -> MultiVerification:
    """Vertex check over the ``m * horizon`` dimensional return cube.

    Exhaustive mode is limited to ``m * horizon <= 24``; the witness is the
    per-asset masks, the failing stage and the state there.
    """
    mode = Mode(mode)
    m = params.m
    dims = m * horizon
    if mode is Mode.EXHAUSTIVE:
        if dims > MULTI_EXHAUSTIVE_CAP:
            raise HorizonCapError(
                f"m*N = {dims} exceeds the exhaustive cap {MULTI_EXHAUSTIVE_CAP}; use sampled mode")
        total = 1 << dims
        starts = range(0, total, block)

        def make(i, s):
            idx = np.arange(s, min(s + block, total), dtype=np.int64)
            return ((idx[:, None] >> np.arange(dims)) & 1).astype(bool)
    else:
        total = count
        starts = range(0, count, block)
        children = np.random.SeedSequence(seed).spawn(len(starts))

        def make(i, s):
            size = min(block, count - s)
            return np.random.default_rng(children[i]).integers(0, 2, (size, dims)).astype(bool)

    witness = None
    min_value = float("inf")
    for i, s in enumerate(starts):
        bits = make(i, s)
        # flat bit j = i_asset * N + k
        states = _simulate_vertex_batch(params, bits.reshape(-1, m, horizon))
        min_value = min(min_value, float(states.min()))
        if witness is None:
            bad = np.flatnonzero((states <= 0).any(axis=1))
            if bad.size:
                r = int(bad[0])
                k = int(np.flatnonzero(states[r] <= 0)[0])
                row = bits[r].reshape(m, horizon)
                masks = tuple(sum(1 << int(j) for j in np.flatnonzero(row[i_])) for i_ in range(m))
                witness = (masks, k, float(states[r, k]))
    return MultiVerification(horizon, mode, witness is None, witness, min_value, total)

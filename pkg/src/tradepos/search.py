"""Finite-horizon positivity over all admissible return paths.

``X(v, k)`` is affine in each return ``v(j)``, so its minimum over the path
hypercube is attained at a vertex: only the ``2**N`` extreme paths need to be
checked.  The exhaustive routines walk the binary return tree level by level
with numpy, so every tree edge costs one recursion step and each prefix is
shared by all of its extensions.

Work splitting
--------------
The tree is cut at depth ``split_depth``; the subtrees below it are grouped
into contiguous work units in lexicographic order (``v_min`` before
``v_max``, earlier positions first).  Units may run on a thread pool.  All
reductions (minimum, conjunction, first failure in depth-first preorder) are
keyed on the path itself, so results do not depend on the thread count.

Sampled mode splits its RNG with ``numpy.random.SeedSequence(seed).spawn``,
one child per block of ``SAMPLE_BLOCK`` draws; block ``i`` always gets
child ``i``.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .closed_form import oscillation_report
from .model import (INDETERMINATE_RTOL, ExtremePath, MarketBounds, TradingParams,
                    distinguished_path, first_nonpositive_stage, simulate)
from .thresholds import compute_thresholds

log = logging.getLogger(__name__)

#: default largest horizon for exhaustive enumeration
DEFAULT_CAP = 30
#: path codes are held in int64
HARD_CAP = 62
DEFAULT_SPLIT_DEPTH = 8
#: target number of leaves per exhaustive work unit
UNIT_LEAVES = 1 << 18
SAMPLE_BLOCK = 1 << 14


class HorizonCapError(ValueError):
    """Exhaustive enumeration was asked for a horizon beyond the configured cap."""


class Mode(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class Witness:
    path: ExtremePath
    stage: int
    value: float


@dataclass(frozen=True)
class MinState:
    value: float
    path: ExtremePath
    stage: int


@dataclass(frozen=True)
class VerificationResult:
    horizon: int
    mode: Mode
    all_positive: bool
    witness: Optional[Witness]
    min_state: MinState
    paths_examined: int
    count: Optional[int] = None
    seed: Optional[int] = None
    indeterminate: bool = False
    min_abs_state: float = float("inf")
    forced_paths: Tuple[ExtremePath, ...] = ()


def _reverse_bits(codes, width: int):
    """Path code (position 0 most significant) to mask (position 0 in bit 0)."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros_like(codes)
    for j in range(width):
        out |= ((codes >> (width - 1 - j)) & 1) << j
    return out


def _to_mask(code: int, depth: int) -> int:
    return int(_reverse_bits(np.array([code]), depth)[0]) if depth else 0


class _Level:
    """Nodes of one tree depth ``d >= 1``: ``X(d-1)``, ``X(d)``, ``v(d-1)``, code."""

    __slots__ = ("depth", "prev", "cur", "vprev", "code")

    def __init__(self, depth, prev, cur, vprev, code):
        self.depth, self.prev, self.cur, self.vprev, self.code = depth, prev, cur, vprev, code

    def take(self, idx):
        return _Level(self.depth, self.prev[idx], self.cur[idx], self.vprev[idx], self.code[idx])

    def __len__(self):
        return self.cur.shape[0]


def _root(x0: float, vmin: float, vmax: float) -> _Level:
    # X(1) = X(0) + u(0) v(0) with u(0) = 0, matching simulate() bit for bit
    x = np.full(2, x0)
    cur = x + (x0 * 0.0) * np.array([vmin, vmax])
    return _Level(1, x, cur, np.array([vmin, vmax]), np.array([0, 1], dtype=np.int64))


def _expand(level: _Level, alpha: float, vmin: float, vmax: float) -> _Level:
    u = alpha * (1.0 + level.vprev) * level.prev
    lo = level.cur + u * vmin
    hi = level.cur + u * vmax
    n = len(level)
    cur = np.empty(2 * n)
    cur[0::2], cur[1::2] = lo, hi
    vprev = np.empty(2 * n)
    vprev[0::2], vprev[1::2] = vmin, vmax
    prev = np.repeat(level.cur, 2)
    code = np.repeat(level.code << 1, 2)
    code[1::2] |= 1
    return _Level(level.depth + 1, prev, cur, vprev, code)


@dataclass
class _UnitResult:
    # per-stage minimum (value, code) for stages covered by the unit
    stage_min: dict = field(default_factory=dict)
    failure: Optional[Tuple[int, int, int, float]] = None  # (padded code, depth, code, value)
    min_abs: float = float("inf")
    nodes: int = 0


def _note_level(res: _UnitResult, level: _Level, horizon: int, prune: bool):
    """Record minima and failures of one level; return the surviving nodes."""
    cur = level.cur
    res.nodes += len(level)
    if len(level) == 0:
        return level
    i = int(np.argmin(cur))  # first occurrence, i.e. lowest code among ties
    cand = (float(cur[i]), int(level.code[i]))
    old = res.stage_min.get(level.depth)
    if old is None or cand < old:
        res.stage_min[level.depth] = cand
    res.min_abs = min(res.min_abs, float(np.min(np.abs(cur))))
    if not prune:
        return level
    bad = cur <= 0
    if not bad.any():
        return level
    j = int(np.flatnonzero(bad)[0])
    code = int(level.code[j])
    key = (code << (horizon - level.depth), level.depth, code, float(cur[j]))
    if res.failure is None or key[:2] < res.failure[:2]:
        res.failure = key
    return level.take(~bad)


def _run_unit(level: _Level, horizon: int, alpha, vmin, vmax, prune: bool) -> _UnitResult:
    res = _UnitResult()
    while level.depth < horizon and len(level):
        level = _expand(level, alpha, vmin, vmax)
        level = _note_level(res, level, horizon, prune)
    return res


def _check_cap(horizon: int, cap: int):
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if cap > HARD_CAP:
        raise HorizonCapError(f"cap {cap} exceeds the int64 path-code limit {HARD_CAP}")
    if horizon > cap:
        raise HorizonCapError(
            f"horizon {horizon} exceeds the exhaustive cap {cap}; raise the cap or use sampled mode")


def _traverse(params: TradingParams, horizon: int, prune: bool, stop_early: bool,
              cap: int, split_depth: int, workers: int):
    _check_cap(horizon, cap)
    alpha = float(params.alpha)
    x0 = float(params.x0)
    vmin, vmax = float(params.bounds.v_min), float(params.bounds.v_max)

    top = _UnitResult()
    top.stage_min[0] = (x0, 0)
    top.min_abs = abs(x0)
    top.nodes = 1
    if horizon == 0:
        return top, []
    level = _note_level(top, _root(x0, vmin, vmax), horizon, prune)
    split = max(1, min(horizon, max(split_depth, horizon - UNIT_LEAVES.bit_length() + 1)))
    while level.depth < split and len(level):
        level = _note_level(top, _expand(level, alpha, vmin, vmax), horizon, prune)
    if level.depth == horizon or not len(level):
        return top, []

    per_unit = max(1, UNIT_LEAVES >> (horizon - split))
    units = [level.take(slice(i, i + per_unit)) for i in range(0, len(level), per_unit)]
    results: List[_UnitResult] = []

    def work(u):
        return _run_unit(u, horizon, alpha, vmin, vmax, prune)

    def first_key_of(u):
        return int(u.code[0]) << (horizon - u.depth)

    batch = max(1, workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for b in range(0, len(units), batch):
            chunk = units[b:b + batch]
            done = list(pool.map(work, chunk)) if pool else [work(u) for u in chunk]
            for u, r in zip(chunk, done):
                best = _best_failure([top] + results)
                if stop_early and best is not None and first_key_of(u) > best[0]:
                    return top, results
                results.append(r)
    finally:
        if pool:
            pool.shutdown()
    return top, results


def _best_failure(parts):
    fails = [p.failure for p in parts if p.failure is not None]
    return min(fails, key=lambda f: f[:2]) if fails else None


def _reduce(top, results):
    stage_min = {}
    min_abs = top.min_abs
    nodes = top.nodes
    for part in [top] + results:
        for d, cand in part.stage_min.items():
            if d not in stage_min or cand < stage_min[d]:
                stage_min[d] = cand
        min_abs = min(min_abs, part.min_abs)
        if part is not top:
            nodes += part.nodes
    failure = _best_failure([top] + results)
    return stage_min, failure, min_abs, nodes


def _stage_mask(code: int, depth: int, horizon: int) -> ExtremePath:
    return ExtremePath(_to_mask(code, depth), horizon)


def _overall_min(stage_min, horizon) -> MinState:
    best = min((v, d, c) for d, (v, c) in stage_min.items())
    value, depth, code = best
    return MinState(value, _stage_mask(code, depth, horizon), depth)


def verify_exhaustive(params: TradingParams, horizon: int, *, cap: int = DEFAULT_CAP,
                      split_depth: int = DEFAULT_SPLIT_DEPTH, workers: int = 1,
                      stop_at_first: bool = False, adjudicate: bool = False) -> VerificationResult:
    """Check ``X(v, k) > 0`` for all ``2**horizon`` extreme paths and ``k <= horizon``.

    A subtree is pruned as soon as its prefix state is nonpositive.  The
    witness is the first failure in depth-first preorder with the ``v_min``
    branch explored first; its mask has the unexplored suffix set to
    ``v_min``.  With ``stop_at_first`` the traversal ends after the work
    unit holding that witness, so ``min_state`` covers only the examined
    part of the tree.

    ``adjudicate`` re-runs the check in exact rational arithmetic when a
    float state falls inside the indeterminate band.
    """
    top, results = _traverse(params, horizon, True, stop_at_first, cap, split_depth, workers)
    stage_min, failure, min_abs, _ = _reduce(top, results)
    witness = None
    if failure is not None:
        _, depth, code, value = failure
        witness = Witness(_stage_mask(code, depth, horizon), depth, value)
    indeterminate = min_abs < INDETERMINATE_RTOL * float(params.x0)
    result = VerificationResult(
        horizon=horizon, mode=Mode.EXHAUSTIVE, all_positive=witness is None,
        witness=witness, min_state=_overall_min(stage_min, horizon),
        paths_examined=1 << horizon, indeterminate=indeterminate, min_abs_state=min_abs)
    if adjudicate and indeterminate:
        from .exact import RationalParams, verify_exhaustive_exact
        log.info("float verdict indeterminate (min |X| = %g); deferring to exact arithmetic", min_abs)
        return verify_exhaustive_exact(RationalParams.from_params(params), horizon, cap=cap)
    return result


def stagewise_min(params: TradingParams, horizon: int, *, cap: int = DEFAULT_CAP,
                  split_depth: int = DEFAULT_SPLIT_DEPTH, workers: int = 1) -> List[MinState]:
    """Exact vertex minimum of ``X(v, k)`` over the path hypercube for each ``k <= horizon``.

    Ties go to the lexicographically first path; positions ``>= k`` do not
    affect ``X(v, k)`` and are reported as ``v_min``.
    """
    top, results = _traverse(params, horizon, False, False, cap, split_depth, workers)
    stage_min, _, _, _ = _reduce(top, results)
    return [MinState(stage_min[d][0], _stage_mask(stage_min[d][1], d, horizon), d)
            for d in range(horizon + 1)]


def min_state(params: TradingParams, horizon: int, **kw) -> MinState:
    """Smallest state over all admissible paths of length ``horizon`` and all stages."""
    stages = stagewise_min(params, horizon, **kw)
    return min(stages, key=lambda m: (m.value, m.stage))


def extreme_fan(params: TradingParams, horizon: int, *, cap: int = 20):
    """All ``2**horizon`` extreme trajectories as ``(masks, states)``.

    ``states[i]`` holds ``X(0..horizon)`` along the path with mask ``masks[i]``.
    """
    _check_cap(horizon, cap)
    masks = np.arange(1 << horizon, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(horizon)) & 1).astype(bool)
    return masks, _simulate_batch(params, bits)


def _simulate_batch(params: TradingParams, bits: np.ndarray) -> np.ndarray:
    """Run the recursion on many extreme paths at once; ``bits[i, k]`` selects ``v_max``."""
    alpha = float(params.alpha)
    x0 = float(params.x0)
    v = np.where(bits, float(params.bounds.v_max), float(params.bounds.v_min))
    count, n = v.shape
    states = np.empty((count, n + 1))
    states[:, 0] = x0
    if n:
        states[:, 1] = states[:, 0] + (x0 * 0.0) * v[:, 0]
    for k in range(1, n):
        u = alpha * (1.0 + v[:, k - 1]) * states[:, k - 1]
        states[:, k + 1] = states[:, k] + u * v[:, k]
    return states


def _bits_to_mask(row) -> int:
    return sum(1 << int(k) for k in np.flatnonzero(row))


def _forced_rows(horizon: int):
    star = np.zeros(horizon, dtype=bool)
    if horizon:
        star[0] = True
    return np.stack([star, np.zeros(horizon, dtype=bool), np.ones(horizon, dtype=bool)])


def verify_sampled(params: TradingParams, horizon: int, count: int, seed: int, *,
                   workers: int = 1) -> VerificationResult:
    """Check positivity on ``count`` uniformly drawn extreme paths.

    The distinguished path, the all-``v_min`` and the all-``v_max`` paths are
    always examined first, in that order, on top of the random draws.  The
    witness is the first failing path in examination order.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    x0 = float(params.x0)
    n_blocks = -(-count // SAMPLE_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)

    def block(i):
        if i < 0:
            bits = _forced_rows(horizon)
        else:
            size = min(SAMPLE_BLOCK, count - i * SAMPLE_BLOCK)
            bits = np.random.default_rng(children[i]).integers(0, 2, size=(size, horizon)).astype(bool)
        states = _simulate_batch(params, bits)
        flat_min = states.min(axis=1)
        stage_of_min = states.argmin(axis=1)
        r = int(np.argmin(flat_min))
        best = (float(flat_min[r]), r, int(stage_of_min[r]))
        bad_rows = np.flatnonzero((states <= 0).any(axis=1))
        fail = None
        if bad_rows.size:
            r0 = int(bad_rows[0])
            k0 = int(np.flatnonzero(states[r0] <= 0)[0])
            fail = (r0, k0, float(states[r0, k0]), _bits_to_mask(bits[r0]))
        return best, _bits_to_mask(bits[best[1]]), fail, float(np.abs(states).min())

    ids = [-1] + list(range(n_blocks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, ids))
    else:
        parts = [block(i) for i in ids]

    witness = None
    best = None
    min_abs = float("inf")
    for (val, _, stage), mask, fail, mabs in parts:
        if best is None or val < best.value:
            best = MinState(val, ExtremePath(mask, horizon), stage)
        if witness is None and fail is not None:
            witness = Witness(ExtremePath(fail[3], horizon), fail[1], fail[2])
        min_abs = min(min_abs, mabs)
    forced = tuple(ExtremePath(_bits_to_mask(r), horizon) for r in _forced_rows(horizon))
    return VerificationResult(
        horizon=horizon, mode=Mode.SAMPLED, all_positive=witness is None, witness=witness,
        min_state=best, paths_examined=count + 3, count=count, seed=seed,
        indeterminate=min_abs < INDETERMINATE_RTOL * x0, min_abs_state=min_abs,
        forced_paths=forced)


def verify(params: TradingParams, horizon: int, mode: Mode = Mode.EXHAUSTIVE, *,
           count: int = 200_000, seed: int = 0, **kw) -> VerificationResult:
    mode = Mode(mode)
    if mode is Mode.EXHAUSTIVE:
        return verify_exhaustive(params, horizon, **kw)
    return verify_sampled(params, horizon, count, seed, workers=kw.get("workers", 1))


@dataclass(frozen=True)
class GapRow:
    alpha: float
    all_positive: bool
    min_state: float
    result: VerificationResult


def gap_scan(bounds: MarketBounds, horizon: int, n_alphas: int,
             mode: Mode = Mode.EXHAUSTIVE, *, x0: float = 1.0, **kw) -> List[GapRow]:
    """Verify positivity at ``n_alphas`` equally spaced gains spanning ``[alpha_minus, alpha_plus]``."""
    if n_alphas < 2:
        raise ValueError("n_alphas must be at least 2")
    t = compute_thresholds(bounds)
    grid = np.linspace(t.alpha_minus, t.alpha_plus, n_alphas)
    grid[0], grid[-1] = t.alpha_minus, t.alpha_plus
    rows = []
    for a in grid:
        res = verify(TradingParams(float(a), x0, bounds), horizon, mode, **kw)
        rows.append(GapRow(float(a), res.all_positive, res.min_state.value, res))
    return rows


@dataclass
class AlphaMaxEstimate:
    horizon: int
    lower: Optional[float]
    upper: Optional[float]
    tolerance: float
    history: List[Tuple[float, bool]] = field(default_factory=list)
    anomalies: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.lower is not None and not self.anomalies


def _robustly_positive(params, horizon, **kw) -> bool:
    # states inside the indeterminate band count as failures
    res = verify_exhaustive(params, horizon, **kw)
    return res.all_positive and not res.indeterminate


def alpha_max_bisect(bounds: MarketBounds, x0: float, horizon: int, tol: float, *,
                     probes: int = 8, **kw) -> AlphaMaxEstimate:
    """Bracket the largest gain keeping every extreme path positive through ``horizon``.

    Bisection on ``alpha -> verify_exhaustive(alpha).all_positive`` over the
    initial bracket ``[alpha_minus, alpha_max(2)]``.  Every tested gain is
    kept in ``history``.  After bisecting, ``probes`` evenly spaced gains in
    ``[0, lower]`` are checked; any failure there means the positivity set is
    not an interval below the bracket and is reported in ``anomalies``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_cap(horizon, kw.get("cap", DEFAULT_CAP))
    t = compute_thresholds(bounds)
    est = AlphaMaxEstimate(horizon, None, None, tol)

    def P(a):
        ok = _robustly_positive(TradingParams(a, x0, bounds), horizon, **kw)
        est.history.append((a, ok))
        return ok

    lo, hi = t.alpha_minus, t.alpha_max2
    p_lo, p_hi = P(lo), P(hi)
    if not p_lo or p_hi:
        est.anomalies.append(
            f"initial bracket not separating: P({lo!r})={p_lo}, P({hi!r})={p_hi}")
        return est
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if P(mid):
            lo = mid
        else:
            hi = mid
    est.lower, est.upper = lo, hi
    for a in np.linspace(0.0, lo, probes + 1)[:-1] if probes else []:
        if not P(float(a)):
            est.anomalies.append(f"positivity fails at alpha={float(a)!r} below the bracket")
    return est


class Outcome(enum.Enum):
    BOTH_HOLD = "both hold"
    BOTH_FAIL = "both fail"
    COUNTEREXAMPLE = "counterexample-to-observation"
    VACUOUS = "vacuous"


@dataclass(frozen=True)
class ObservationReport:
    outcome: Outcome
    antecedent: bool
    consequent: bool
    result: VerificationResult

    @property
    def witness(self) -> Optional[Witness]:
        return self.result.witness if self.outcome is Outcome.COUNTEREXAMPLE else None


def observation_check(params: TradingParams, horizon: int, mode: Mode = Mode.EXHAUSTIVE,
                      **kw) -> ObservationReport:
    """Test the claim that positivity along ``v*`` up to ``horizon`` implies positivity on every path."""
    antecedent = simulate(params, distinguished_path(params.bounds, horizon)).all_positive
    res = verify(params, horizon, mode, **kw)
    if antecedent and res.all_positive:
        outcome = Outcome.BOTH_HOLD
    elif antecedent:
        outcome = Outcome.COUNTEREXAMPLE
        log.warning("observation violated: v* stays positive but %s fails at stage %d",
                    res.witness.path.hex, res.witness.stage)
    elif res.all_positive:
        # v* is examined in both modes, so only float disagreement near zero lands here
        outcome = Outcome.VACUOUS
    else:
        outcome = Outcome.BOTH_FAIL
    return ObservationReport(outcome, antecedent, res.all_positive, res)


def necessity_horizon(params: TradingParams, cap: int = DEFAULT_CAP) -> Optional[int]:
    """Horizon at which ``v*`` is predicted to fail, clipped to ``cap``."""
    rep = oscillation_report(params)
    if rep.predicted_sign_failure is None:
        return None
    return min(cap, rep.predicted_sign_failure)


def distinguished_failure(params: TradingParams, horizon: int) -> Optional[int]:
    """First nonpositive stage along ``v*`` within ``horizon`` (rescaled recursion)."""
    return first_nonpositive_stage(params, distinguished_path(params.bounds, horizon))

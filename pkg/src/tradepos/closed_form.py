"""State along the distinguished path in closed form, and its sign behaviour.

Along ``v* = (v_max, v_min, v_min, ...)`` the two-state system is time
invariant from stage 2 on, with companion matrix ``[[1, a], [1, 0]]`` where
``a = alpha (1 + v_min) v_min``.  Its eigenvalues ``(1 +/- sqrt(theta)) / 2``
with ``theta = 1 + 4a`` give three closed forms: two distinct real
eigenvalues, a double eigenvalue ``1/2`` and a complex conjugate pair.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import TradingParams, distinguished_path, simulate
from .thresholds import alpha_singular, alpha_star

#: |theta| below this is treated as the double-eigenvalue case
SINGULAR_BAND = 1e-12
#: largest stage searched for a sign change
SIGN_SEARCH_CAP = 10 ** 6


class Form(enum.Enum):
    GENERIC_REAL = "GenericReal"
    SINGULAR = "Singular"
    OSCILLATORY = "Oscillatory"


@dataclass(frozen=True)
class SpectralData:
    theta: float
    q: float
    g_plus: complex
    g_minus: complex
    lambda_plus: complex
    lambda_minus: complex
    form: Form
    r: Optional[float] = None
    omega: Optional[float] = None

    @property
    def rate(self) -> float:
        """Spectral radius of the companion matrix."""
        return max(abs(self.lambda_plus), abs(self.lambda_minus))


def spectral_data(params: TradingParams) -> SpectralData:
    alpha = float(params.alpha)
    vmin, vmax = float(params.bounds.v_min), float(params.bounds.v_max)
    theta = 4 * alpha * vmin * (1 + vmin) + 1
    q = 2 * alpha * (vmax + 1) * vmin + 1
    if abs(theta) < SINGULAR_BAND:
        form = Form.SINGULAR
    elif theta > 0:
        form = Form.GENERIC_REAL
    else:
        form = Form.OSCILLATORY

    if form is Form.OSCILLATORY:
        root = cmath.sqrt(theta)
        lp, lm = (1 + root) / 2, (1 - root) / 2
        return SpectralData(theta, q, root + q, root - q, lp, lm, form,
                            r=abs(lp), omega=math.atan(math.sqrt(-theta)))
    root = math.sqrt(max(theta, 0.0))
    return SpectralData(theta, q, root + q, root - q, (1 + root) / 2, (1 - root) / 2, form)


def _singular_state(x0, vmin, vmax, k):
    return 2.0 ** -k * x0 * ((1 - vmax + 2 * vmin) * k + 1 + vmax) / (1 + vmin)


def closed_form_state(params: TradingParams, k: int) -> float:
    """``X(v*, k)`` from the closed form of the appropriate regime."""
    if k < 0:
        raise ValueError("stage must be nonnegative")
    x0 = float(params.x0)
    if k < 2:
        return x0
    sd = spectral_data(params)
    vmin, vmax = float(params.bounds.v_min), float(params.bounds.v_max)
    if sd.form is Form.SINGULAR:
        return _singular_state(x0, vmin, vmax, k)
    if sd.form is Form.GENERIC_REAL:
        root = math.sqrt(sd.theta)
        return x0 / (2 * root) * (sd.lambda_plus ** (k - 1) * sd.g_plus
                                  + sd.lambda_minus ** (k - 1) * sd.g_minus)
    root = cmath.sqrt(sd.theta)
    z = x0 / (2 * root) * (sd.lambda_plus ** (k - 1) * sd.g_plus
                           + sd.lambda_minus ** (k - 1) * sd.g_minus)
    scale = x0 * abs(sd.g_plus) / abs(root) * sd.r ** (k - 1)
    if abs(z.imag) > 1e-9 * max(abs(z.real), scale):
        raise ArithmeticError(f"closed form left imaginary residue {z.imag!r} at k={k}")
    return z.real


def polar_constants(params: TradingParams):
    """``(B, phi)`` with ``X(v*, k) = B r**(k-1) cos((k-1) omega + phi)`` for ``k >= 2``.

    Only meaningful in the oscillatory regime; obtained from the complex
    coefficient of the dominant eigenvalue.
    """
    sd = spectral_data(params)
    if sd.form is not Form.OSCILLATORY:
        raise ValueError("polar form exists only for complex eigenvalues")
    # X = Re(c * lambda_plus**(k-1)) with c = x0 g_plus / sqrt(theta)
    c = float(params.x0) * sd.g_plus / cmath.sqrt(sd.theta)
    return abs(c), cmath.phase(c)


def _sign_profile(params: TradingParams, sd: SpectralData, ks: np.ndarray) -> np.ndarray:
    """Positive multiples of ``X(v*, k)`` for ``k >= 2``, free of under/overflow."""
    n = ks - 1.0
    if sd.form is Form.SINGULAR:
        vmin, vmax = float(params.bounds.v_min), float(params.bounds.v_max)
        return (1 - vmax + 2 * vmin) * ks + 1 + vmax
    if sd.form is Form.GENERIC_REAL:
        lp, lm = sd.lambda_plus, sd.lambda_minus
        ratio = lm / lp
        with np.errstate(under="ignore"):
            return sd.g_plus + np.power(ratio, n) * sd.g_minus
    # Im(e^{i n omega} g_plus) carries the sign of X(v*, k) up to the factor x0 r^n / |sqrt(theta)|
    return np.imag(np.exp(1j * sd.omega * n) * sd.g_plus)


def first_negative_stage(params: TradingParams, cap: int = SIGN_SEARCH_CAP,
                         chunk: int = 65536) -> Optional[int]:
    """Smallest ``k <= cap`` with ``X(v*, k) < 0`` according to the closed form."""
    sd = spectral_data(params)
    for start in range(2, cap + 1, chunk):
        ks = np.arange(start, min(start + chunk, cap + 1), dtype=float)
        neg = np.flatnonzero(_sign_profile(params, sd, ks) < 0)
        if neg.size:
            return int(ks[neg[0]])
    return None


class Case(enum.Enum):
    A = "a"                # alpha > alpha_s: oscillation about zero
    B = "b"                # alpha_star < alpha <= alpha_s, v_max > 1 + 2 v_min: eventually negative
    C = "c"                # alpha_star < alpha <= alpha_s, v_max < 1 + 2 v_min: always positive
    D = "d"                # alpha <= alpha_star: always positive
    BOUNDARY = "boundary"  # alpha_star < alpha <= alpha_s with v_max == 1 + 2 v_min


@dataclass(frozen=True)
class OscillationReport:
    case: Case
    predicted_sign_failure: Optional[int]
    searched_to: int
    period: Optional[int] = None

    @property
    def negative_expected(self) -> bool:
        return self.case in (Case.A, Case.B)


def oscillation_report(params: TradingParams, cap: int = SIGN_SEARCH_CAP) -> OscillationReport:
    """Sign analysis of the state along the distinguished path.

    In cases ``a`` and ``b`` the first negative stage is searched up to
    ``cap``; ``predicted_sign_failure`` is ``None`` if none was found there.
    """
    bounds = params.bounds
    sd = spectral_data(params)
    a_star = alpha_star(bounds)
    alpha = params.alpha
    period = None
    if sd.form is Form.OSCILLATORY:
        case = Case.A
        period = math.ceil(2 * math.pi / sd.omega)
    elif alpha <= a_star:
        case = Case.D
    elif bounds.discriminant > 0:
        case = Case.B
    elif bounds.discriminant < 0:
        case = Case.C
    else:
        case = Case.BOUNDARY
    stage = first_negative_stage(params, cap) if case in (Case.A, Case.B) else None
    return OscillationReport(case, stage, cap, period)


@dataclass(frozen=True)
class DecaySummary:
    rate: float
    lambda_plus: float
    lambda_minus: float
    monotone_from: Optional[int]
    final_abs: float


def asymptote_check(params: TradingParams, k_max: int) -> DecaySummary:
    """Geometric decay of ``|X(v*, k)|`` for ``0 < alpha < alpha_s``.

    ``monotone_from`` is the stage after which ``|X|`` never increases up to
    ``k_max`` (``None`` if it increases at the very end).
    """
    a_s = alpha_singular(params.bounds)
    if not 0 < params.alpha < a_s:
        raise ValueError(f"decay check needs 0 < alpha < alpha_s = {a_s!r}")
    sd = spectral_data(params)
    if sd.form is not Form.GENERIC_REAL:
        raise ValueError("alpha too close to alpha_s for a distinct-root decay check")
    lp, lm = float(sd.lambda_plus), float(sd.lambda_minus)
    if not (abs(lp) < 1 and abs(lm) < 1):
        raise ArithmeticError("eigenvalues outside the unit disc")
    traj = simulate(params, distinguished_path(params.bounds, k_max))
    mags = np.abs(np.asarray(traj.states, dtype=float))
    rises = np.flatnonzero(np.diff(mags) > 0)
    if rises.size == 0:
        start = 0
    elif rises[-1] + 1 < k_max:
        start = int(rises[-1]) + 1
    else:
        start = None
    return DecaySummary(max(abs(lp), abs(lm)), lp, lm, start, float(mags[-1]))

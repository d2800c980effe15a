"""Critical feedback gains and regime classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List

from .model import AdmissibilityError, MarketBounds, TradingParams


class Regime(enum.Enum):
    STAR = "Star"            # v_max > 1 + 2 v_min, alpha_plus = alpha_star
    SINGULAR = "Singular"    # v_max <= 1 + 2 v_min, alpha_plus = alpha_s


class GainClass(enum.Enum):
    BELOW_SUFFICIENT = "BelowSufficient"
    IN_GAP = "InGap"
    ABOVE_NECESSARY = "AboveNecessary"


@dataclass(frozen=True)
class ThresholdSet:
    alpha_minus: float
    alpha_s: float
    alpha_star: float
    alpha_plus: float
    alpha_max2: float
    alpha_max3: float
    regime: Regime
    discriminant: float

    @property
    def gap(self):
        return self.alpha_minus, self.alpha_plus

    def as_dict(self) -> dict:
        return {
            "alpha_minus": self.alpha_minus,
            "alpha_s": self.alpha_s,
            "alpha_star": self.alpha_star,
            "alpha_plus": self.alpha_plus,
            "alpha_max2": self.alpha_max2,
            "alpha_max3": self.alpha_max3,
            "regime": self.regime.value,
            "discriminant": self.discriminant,
        }


def alpha_minus(bounds: MarketBounds):
    return 1 / (1 + bounds.v_max)


def alpha_singular(bounds: MarketBounds):
    """Gain at which the distinguished-path companion matrix has a double eigenvalue."""
    vmin = bounds.v_min
    return 1 / (4 * -vmin * (1 + vmin))


def alpha_star(bounds: MarketBounds):
    vmin, vmax = bounds.v_min, bounds.v_max
    return (vmax - vmin) / (-vmin * (1 + vmax) ** 2)


def alpha_max2(bounds: MarketBounds):
    return 1 / (-bounds.v_min * (1 + bounds.v_max))


def alpha_max3(bounds: MarketBounds):
    vmin, vmax = bounds.v_min, bounds.v_max
    return 1 / (-vmin * (2 + vmax + vmin))


def regime(bounds: MarketBounds) -> Regime:
    # the tie v_max == 1 + 2 v_min belongs to the singular branch
    return Regime.STAR if bounds.discriminant > 0 else Regime.SINGULAR


def compute_thresholds(bounds: MarketBounds) -> ThresholdSet:
    reg = regime(bounds)
    a_s = alpha_singular(bounds)
    a_star = alpha_star(bounds)
    return ThresholdSet(
        alpha_minus=alpha_minus(bounds),
        alpha_s=a_s,
        alpha_star=a_star,
        alpha_plus=a_star if reg is Regime.STAR else a_s,
        alpha_max2=alpha_max2(bounds),
        alpha_max3=alpha_max3(bounds),
        regime=reg,
        discriminant=bounds.discriminant,
    )


def classify(params: TradingParams) -> GainClass:
    """Place ``alpha`` relative to the gap interval ``[alpha_minus, alpha_plus]``.

    Both endpoints count as inside the gap.
    """
    t = compute_thresholds(params.bounds)
    if params.alpha < t.alpha_minus:
        return GainClass.BELOW_SUFFICIENT
    if params.alpha <= t.alpha_plus:
        return GainClass.IN_GAP
    return GainClass.ABOVE_NECESSARY


@dataclass(frozen=True)
class SurfaceRow:
    v_min: float
    v_max: float
    alpha_minus: float
    alpha_plus: float
    regime: Regime


def threshold_surface(v_max, v_min_grid: Iterable) -> List[SurfaceRow]:
    """Tabulate ``alpha_minus`` and ``alpha_plus`` along a grid of ``v_min`` values."""
    rows = []
    for vmin in v_min_grid:
        if not -1 < vmin < 0:
            raise AdmissibilityError(f"grid point v_min={vmin!r} outside (-1, 0)")
        t = compute_thresholds(MarketBounds(vmin, v_max))
        rows.append(SurfaceRow(vmin, v_max, t.alpha_minus, t.alpha_plus, t.regime))
    return rows

"""All-time positivity analysis for a delayed feedback trading recursion."""
from .model import (AdmissibilityError, ExtremePath, MarketBounds, Path, Trajectory,
                    TradingParams, decode_extreme, distinguished_path, simulate)
from .thresholds import (GainClass, Regime, ThresholdSet, alpha_max2, alpha_max3, classify,
                         compute_thresholds, threshold_surface)
from .closed_form import (Case, Form, SpectralData, asymptote_check, closed_form_state,
                          oscillation_report, spectral_data)
from .search import (AlphaMaxEstimate, HorizonCapError, Mode, VerificationResult,
                     alpha_max_bisect, distinguished_failure, gap_scan, min_state,
                     observation_check, stagewise_min, verify, verify_exhaustive,
                     verify_sampled)
from .exact import RationalParams, simulate_exact, verify_exhaustive_exact
from .multiasset import MultiAssetParams, oscillation_condition, simulate_multi, verify_multi

__version__ = "0.1.0"

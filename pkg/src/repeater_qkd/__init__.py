"""Secret-key generation rates per memory for QKD over probabilistic quantum
repeaters, computed by evolving truncated-Fock density operators through
beam-splitter/loss modules and detector POVMs."""

from .analysis import (best_dlcz_rate, best_sps_rate, compare_dlcz_sps,
                       crossover_distance, cutoff_p, level_eta,
                       min_coherence_time, optimize_eta, security_distance,
                       sps_dlcz_crossing_p)
from .detection import (NRPD, PNRD, DetectorModel, MeasurementOperator,
                        condition, herald_operator, pattern_operator,
                        pattern_probability)
from .errors import (BracketEndError, ImpossibleOutcomeError, ModeError,
                     ModelValidityError, NoCrossoverError,
                     NoFeasiblePointError, OccupationOverflowError,
                     RepeaterError, UndefinedQberError)
from .fock import (DensityOperator, SparseOperator, expectation, number_state,
                   partial_trace, relabel, tensor, vacuum_state)
from .links import (LinkState, build_chain, dlcz_elementary_link, sps_source,
                    sps_elementary_link, swap)
from .optics import butterfly, loss, mix
from .params import SystemParams
from .rates import (ClickPatternProbs, RateBreakdown, binary_entropy,
                    click_and_error, key_rate, qkd_measurement)

__all__ = [
    "BracketEndError", "ClickPatternProbs", "DensityOperator",
    "DetectorModel", "ImpossibleOutcomeError", "LinkState",
    "MeasurementOperator", "ModeError", "ModelValidityError", "NRPD",
    "NoCrossoverError", "NoFeasiblePointError", "OccupationOverflowError",
    "PNRD", "RateBreakdown", "RepeaterError", "SparseOperator",
    "SystemParams", "UndefinedQberError", "best_dlcz_rate", "best_sps_rate",
    "binary_entropy", "build_chain", "butterfly", "click_and_error",
    "compare_dlcz_sps", "condition", "crossover_distance", "cutoff_p",
    "dlcz_elementary_link", "expectation", "herald_operator", "key_rate",
    "level_eta", "loss", "min_coherence_time", "mix", "number_state",
    "optimize_eta", "partial_trace", "pattern_operator",
    "pattern_probability", "qkd_measurement", "relabel",
    "security_distance", "sps_dlcz_crossing_p", "sps_elementary_link",
    "sps_source", "swap", "tensor", "vacuum_state",
]

__version__ = "0.1.0"

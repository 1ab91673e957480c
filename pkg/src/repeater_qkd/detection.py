"""Detector POVMs (number-resolving and threshold, with dark counts) and
conditioning of states on measurement outcomes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ImpossibleOutcomeError, ModeError
from .fock import (DEFAULT_N_MAX, DensityOperator, SparseOperator, accumulate,
                   expectation, finalize)

PNRD = "pnrd"  # photon-number-resolving detector
NRPD = "nrpd"  # non-resolving (threshold) detector

DETECTOR_KINDS = (PNRD, NRPD)

# Below this probability a conditioning outcome is treated as impossible
# rather than risking a division by (near) zero.
MIN_PROBABILITY = 1e-300


@dataclass(frozen=True)
class DetectorModel:
    """Detector kind plus dark-count probability per gate per detector."""

    kind: str
    dark_count: float = 0.0

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"detector kind must be one of {DETECTOR_KINDS}")
        if not 0.0 <= self.dark_count < 1.0:
            raise ValueError(f"dark count {self.dark_count} outside [0, 1)")


class MeasurementOperator(SparseOperator):
    """Sparse positive operator on a mode subset (0 <= M <= I).

    Diagonal in the number basis for every case in scope.
    """


def herald_operator(model: DetectorModel, click_mode: str, silent_mode: str,
                    n_max: int = DEFAULT_N_MAX) -> MeasurementOperator:
    """Operator for "click on one detector, silence on the other".

    A dark count can fake the click on a vacuum mode; the whole bracket
    carries the silent detector's no-dark-count factor (1 - d_c):

        PNRD: (1-d_c) [ |1⟩⟨1| ⊗ |0⟩⟨0|  +  d_c |0⟩⟨0| ⊗ |0⟩⟨0| ]
        NRPD: (1-d_c) [ (I-|0⟩⟨0|) ⊗ |0⟩⟨0|  +  d_c |0⟩⟨0| ⊗ |0⟩⟨0| ]
    """
    if click_mode == silent_mode:
        raise ModeError("herald needs two distinct modes")
    d_c = model.dark_count
    entries = {((0, 0), (0, 0)): (1.0 - d_c) * d_c}
    if model.kind == PNRD:
        entries[((1, 0), (1, 0))] = 1.0 - d_c
    else:
        for n in range(1, n_max + 1):
            entries[((n, 0), (n, 0))] = 1.0 - d_c
    return MeasurementOperator((click_mode, silent_mode), entries, n_max)


def pattern_operator(kind: str, pattern, n_max: int = DEFAULT_N_MAX) -> MeasurementOperator:
    """Projector for a click/no-click pattern, one (mode, 0-or-1) per entry.

    PNRD reads a 1 as "exactly one photon"; NRPD reads it as "at least one".
    Dark counts do not enter here: for multi-detector patterns they are
    accounted for downstream in the correct/error coefficient polynomials.
    """
    modes = tuple(mode for mode, _ in pattern)
    wanted = [count for _, count in pattern]
    if any(c not in (0, 1) for c in wanted):
        raise ValueError("pattern counts must be 0 or 1")
    per_mode = []
    for count in wanted:
        if count == 0:
            per_mode.append((0,))
        elif kind == PNRD:
            per_mode.append((1,))
        else:
            per_mode.append(tuple(range(1, n_max + 1)))
    entries = {}
    for occ in itertools.product(*per_mode):
        entries[(occ, occ)] = 1.0
    return MeasurementOperator(modes, entries, n_max)


def pattern_probability(rho: DensityOperator, pattern, kind: str) -> float:
    """Probability of a click/no-click pattern on the labeled modes."""
    return expectation(rho, pattern_operator(kind, pattern, rho.n_max))


def condition(rho: DensityOperator, m: MeasurementOperator):
    """Condition ``rho`` on outcome ``m`` and trace out the measured modes.

    Returns (post-measurement state over the remaining modes, probability).
    Raises ImpossibleOutcomeError when the outcome probability underflows.
    """
    prob = expectation(rho, m)
    if prob < MIN_PROBABILITY:
        raise ImpossibleOutcomeError(
            f"outcome probability {prob} is numerically zero"
        )
    pos = [rho.index(label) for label in m.modes]
    pos_set = set(pos)
    keep = [k for k in range(len(rho.modes)) if k not in pos_set]
    keep_modes = tuple(rho.modes[k] for k in keep)
    acc: dict = {}
    for (ket, bra), v in rho.entries.items():
        ket_m = tuple(ket[k] for k in pos)
        bra_m = tuple(bra[k] for k in pos)
        w = m.entries.get((bra_m, ket_m))
        if w is None:
            continue
        new_ket = tuple(ket[k] for k in keep)
        new_bra = tuple(bra[k] for k in keep)
        accumulate(acc, (new_ket, new_bra), v * w)
    entries = {key: val / prob for key, val in finalize(acc).items()}
    return DensityOperator(keep_modes, entries, rho.n_max), prob

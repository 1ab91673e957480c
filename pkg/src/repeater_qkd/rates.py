"""Key-rate pipeline: four-detector measurement statistics, the correct/error
coefficient polynomials with dark counts, the binary-entropy keying bound,
and the per-memory secret-key rate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .detection import NRPD, PNRD, pattern_probability
from .errors import UndefinedQberError
from .fock import DensityOperator, relabel, tensor
from .links import build_chain
from .optics import butterfly
from .params import SystemParams

Pattern = tuple[int, int, int, int]

# Shor-Preskill keying: rates vanish once the bit error rate crosses the
# root of 1 - 2 H(x), just above 11%.
QBER_THRESHOLD_APPROX = 0.11


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2 (1-x) on [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))


@dataclass(frozen=True)
class ClickPatternProbs:
    """The 16 four-detector pattern probabilities for one measurement round.

    ``residual`` is whatever probability mass the 16 patterns miss; with
    resolving detectors this is the weight of occupations above one photon,
    with threshold detectors it is zero by completeness.
    """

    kind: str
    probs: dict[Pattern, float]
    residual: float

    def __getitem__(self, pattern: Pattern) -> float:
        return self.probs[pattern]


def qkd_measurement(rho_ab: DensityOperator, rho_cd: DensityOperator,
                    params: SystemParams) -> ClickPatternProbs:
    """Measure two entangled pairs for one raw key bit.

    Alice holds memories A and C, Bob holds B and D.  Each side reads out
    its two memories (lumped transmission eta_s inside the splitter module)
    and interferes them at zero relative phase.  Dark counts do not enter
    the pattern operators; they are folded into the correct/error
    polynomials downstream.
    """
    if len(rho_ab.modes) != 2 or len(rho_cd.modes) != 2:
        raise ValueError("qkd_measurement expects two-memory states")
    ab = relabel(rho_ab, {rho_ab.modes[0]: "A", rho_ab.modes[1]: "B"})
    cd = relabel(rho_cd, {rho_cd.modes[0]: "C", rho_cd.modes[1]: "D"})
    rho = tensor(ab, cd)
    rho = butterfly(rho, "A", "C", 0.5, params.eta_s)
    rho = butterfly(rho, "B", "D", 0.5, params.eta_s)
    probs = {}
    for pattern in itertools.product((0, 1), repeat=4):
        probs[pattern] = pattern_probability(
            rho, list(zip("ABCD", pattern)), params.detector
        )
    residual = 1.0 - sum(probs.values())
    if params.detector == NRPD:
        residual = 0.0
    return ClickPatternProbs(params.detector, probs, residual)


def _correct_error_parts(probs: ClickPatternProbs, d_c: float):
    """P_C and P_E: probabilities of identical / opposite bit assignment in
    the absence of misalignment, with dark counts folded in.

    The accepted events pair one click on Alice's side (A or C) with one on
    Bob's (B or D); threshold detectors also accept triple/quadruple clicks
    at half weight because the bit is then assigned at random.
    """
    P = probs.probs
    singles = P[1, 0, 0, 0] + P[0, 1, 0, 0] + P[0, 0, 1, 0] + P[0, 0, 0, 1]
    if probs.kind == PNRD:
        pref = (1.0 - d_c) ** 2
        p_c = pref * (P[1, 1, 0, 0] + P[0, 0, 1, 1]
                      + d_c * singles + 2.0 * d_c ** 2 * P[0, 0, 0, 0])
        p_e = pref * (P[1, 0, 0, 1] + P[0, 1, 1, 0]
                      + d_c * singles + 2.0 * d_c ** 2 * P[0, 0, 0, 0])
    else:
        full = d_c * d_c / 2.0 - d_c + 1.0
        half = (d_c / 2.0) * (2.0 - d_c)
        dark2 = (d_c ** 2 / 2.0) * (2.0 - d_c) ** 2
        triples = (P[1, 1, 1, 0] + P[1, 1, 0, 1]
                   + P[0, 1, 1, 1] + P[1, 0, 1, 1])
        same_side = P[1, 0, 1, 0] + P[0, 1, 0, 1]
        p_c = (full * (P[1, 1, 0, 0] + P[0, 0, 1, 1])
               + d_c * (1.0 - d_c / 2.0) * (P[1, 0, 0, 1] + P[0, 1, 1, 0])
               + half * singles + dark2 * P[0, 0, 0, 0]
               + 0.5 * triples + half * same_side + 0.5 * P[1, 1, 1, 1])
        p_e = (full * (P[1, 0, 0, 1] + P[0, 1, 1, 0])
               + half * singles + dark2 * P[0, 0, 0, 0]
               + 0.5 * triples
               + half * (P[1, 1, 0, 0] + P[1, 0, 1, 0]
                         + P[0, 0, 1, 1] + P[0, 1, 0, 1])
               + 0.5 * P[1, 1, 1, 1])
    return p_c, p_e


def click_and_error(probs: ClickPatternProbs, params: SystemParams):
    """(P_click, P_error, epsilon_Q) from one round's pattern probabilities.

    P_click = P_C + P_E; dephasing converts correct assignments into errors:
    P_error = e_d P_C + (1 - e_d) P_E; epsilon_Q = P_error / P_click.
    """
    p_c, p_e = _correct_error_parts(probs, params.d_c)
    p_click = p_c + p_e
    if p_click <= 0.0:
        raise UndefinedQberError("no accepted click pattern has support")
    e_d = params.e_d
    p_error = e_d * p_c + (1.0 - e_d) * p_e
    return p_click, p_error, p_error / p_click


@dataclass(frozen=True)
class RateBreakdown:
    """Everything the rate formula touches, for one scenario.

    Probabilities are dimensionless; R_ent and R_QKD are per second per
    logical memory (per mode when the multimode prefactor is active).
    epsilon_Q is NaN and ``undefined_qber`` is set when no click pattern
    has support.
    """

    P_S: float
    P_M_list: tuple[float, ...]
    P_click: float
    P_error: float
    P_C: float
    P_E: float
    epsilon_Q: float
    H_term: float
    R_ent: float
    R_QKD: float
    undefined_qber: bool = False

    def to_json_dict(self) -> dict:
        out = {"P_S": self.P_S}
        for k, p_m in enumerate(self.P_M_list, start=1):
            out[f"P_M_{k}"] = p_m
        out.update({
            "P_click": self.P_click,
            "P_error": self.P_error,
            "P_C": self.P_C,
            "P_E": self.P_E,
            "epsilon_Q": None if math.isnan(self.epsilon_Q) else self.epsilon_Q,
            "H_term": self.H_term,
            "R_ent_per_s": self.R_ent,
            "R_qkd_bits_per_s": self.R_QKD,
            "undefined_qber": self.undefined_qber,
        })
        return out


def key_rate(params: SystemParams, protocol: str = "sps") -> RateBreakdown:
    """Secret-key rate per memory for one scenario.

    Builds the chain, measures two copies of the final link state, and
    applies

        R = max( (1 - 2 H(eps_Q)) * [P_S(L/2^n) / (2L/c)] * prod P_M
                 * P_click / 2 , 0 )

    with no sifting factor (a biased basis choice avoids it).  When the
    memories are multimode, the per-mode entangling rate costs an extra
    (2/3)**n.
    """
    link, p_s, p_m_list = build_chain(params, protocol)
    probs = qkd_measurement(link.rho, link.rho, params)
    p_c, p_e = _correct_error_parts(probs, params.d_c)
    p_click = p_c + p_e

    r_ent = p_s / (2.0 * params.L / params.c)
    for p_m in p_m_list:
        r_ent *= p_m
    if params.multimode_modes is not None:
        r_ent *= (2.0 / 3.0) ** params.n

    if p_click <= 0.0:
        return RateBreakdown(
            P_S=p_s, P_M_list=tuple(p_m_list), P_click=0.0, P_error=0.0,
            P_C=p_c, P_E=p_e, epsilon_Q=math.nan, H_term=math.nan,
            R_ent=r_ent, R_QKD=0.0, undefined_qber=True,
        )

    e_d = params.e_d
    p_error = e_d * p_c + (1.0 - e_d) * p_e
    eps_q = p_error / p_click
    h_term = 1.0 - 2.0 * binary_entropy(min(max(eps_q, 0.0), 1.0))
    r_qkd = max(h_term * r_ent * p_click / 2.0, 0.0)
    return RateBreakdown(
        P_S=p_s, P_M_list=tuple(p_m_list), P_click=p_click, P_error=p_error,
        P_C=p_c, P_E=p_e, epsilon_Q=eps_q, H_term=h_term,
        R_ent=r_ent, R_QKD=r_qkd,
    )

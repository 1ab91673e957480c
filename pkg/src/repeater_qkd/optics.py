"""Linear-optical channel primitives: two-mode mixing, single-mode loss, and
their composition into the two-input/two-output "butterfly" module (one
mixing beam splitter followed by equal loss on both outputs)."""

from __future__ import annotations

import math
from functools import lru_cache

from .errors import ModeError, OccupationOverflowError
from .fock import DensityOperator, accumulate, finalize


@lru_cache(maxsize=None)
def _mix_amplitudes(n_i: int, n_j: int, t: float):
    """Number-state amplitudes ⟨p, q| U |n_i, n_j⟩ of the two-mode mixer.

    Convention (real orthogonal, second input picks up a minus sign on the
    second output):

        a_i† -> √t a_i† + √(1-t) a_j†
        a_j† -> √(1-t) a_i† - √t a_j†

    Returns tuples (p, q, amplitude) with p + q = n_i + n_j and only nonzero
    amplitudes.
    """
    total = n_i + n_j
    root_t = math.sqrt(t)
    root_r = math.sqrt(1.0 - t)
    sums = [0.0] * (total + 1)
    for k in range(n_i + 1):
        for l in range(n_j + 1):
            coeff = (
                math.comb(n_i, k) * math.comb(n_j, l)
                * root_t ** k * root_r ** (n_i - k)
                * root_r ** l * (-root_t) ** (n_j - l)
            )
            sums[k + l] += coeff
    out = []
    fact_in = math.factorial(n_i) * math.factorial(n_j)
    for p, amp in enumerate(sums):
        if amp == 0.0:
            continue
        q = total - p
        norm = math.sqrt(math.factorial(p) * math.factorial(q) / fact_in)
        out.append((p, q, amp * norm))
    return tuple(out)


@lru_cache(maxsize=None)
def _loss_coeffs(n: int, m: int, eta: float):
    """Coefficients of |n⟩⟨m| -> sum_k c_k |n-k⟩⟨m-k| under transmissivity eta.

    Identical to mixing with a fresh vacuum ancilla at transmissivity eta and
    tracing the ancilla; k photons leak out on both sides at once.
    """
    root_eta = math.sqrt(eta)
    out = []
    for k in range(min(n, m) + 1):
        c = (
            math.sqrt(math.comb(n, k) * math.comb(m, k))
            * root_eta ** (n + m - 2 * k) * (1.0 - eta) ** k
        )
        if c != 0.0:
            out.append((k, c))
    return tuple(out)


def _replace2(occ, pos_i, val_i, pos_j, val_j):
    occ = list(occ)
    occ[pos_i] = val_i
    occ[pos_j] = val_j
    return tuple(occ)


def mix(rho: DensityOperator, i: str, j: str, t: float) -> DensityOperator:
    """Mix modes i and j on a beam splitter with transmissivity t.

    Trace preserving.  Raises OccupationOverflowError if any nonzero output
    amplitude would exceed the truncation.
    """
    if i == j:
        raise ModeError("mix needs two distinct modes")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity {t} outside [0, 1]")
    pi, pj = rho.index(i), rho.index(j)
    n_max = rho.n_max
    acc: dict = {}
    for (ket, bra), v in rho.entries.items():
        kets = _mix_amplitudes(ket[pi], ket[pj], t)
        bras = _mix_amplitudes(bra[pi], bra[pj], t)
        for occ, targets in ((ket, kets), (bra, bras)):
            for p, q, _ in targets:
                if p > n_max or q > n_max:
                    raise OccupationOverflowError(
                        f"mixing {occ[pi]}+{occ[pj]} photons exceeds n_max={n_max}"
                    )
        for pk, qk, ak in kets:
            new_ket = _replace2(ket, pi, pk, pj, qk)
            for pb, qb, ab in bras:
                new_bra = _replace2(bra, pi, pb, pj, qb)
                accumulate(acc, (new_ket, new_bra), v * ak * ab)
    return DensityOperator(rho.modes, finalize(acc), n_max)


def loss(rho: DensityOperator, i: str, eta: float) -> DensityOperator:
    """Pure loss on mode i with transmissivity eta.  Trace preserving."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity {eta} outside [0, 1]")
    pos = rho.index(i)
    acc: dict = {}
    for (ket, bra), v in rho.entries.items():
        for k, c in _loss_coeffs(ket[pos], bra[pos], eta):
            new_ket = ket[:pos] + (ket[pos] - k,) + ket[pos + 1:]
            new_bra = bra[:pos] + (bra[pos] - k,) + bra[pos + 1:]
            accumulate(acc, (new_ket, new_bra), v * c)
    return DensityOperator(rho.modes, finalize(acc), rho.n_max)


def butterfly(rho: DensityOperator, i: str, j: str,
              eta_b: float, eta_x: float) -> DensityOperator:
    """Butterfly module: beam splitter at eta_b, then loss eta_x on both arms.

    The module's transmissivity counts the crossed path: a photon entering i
    leaves on j with probability eta_b * eta_x.  mix's ``t`` counts the
    straight-through path, hence the 1 - eta_b below.  Loss order does not
    matter because equal loss on both arms commutes with mixing.
    """
    out = mix(rho, i, j, 1.0 - eta_b)
    out = loss(out, i, eta_x)
    return loss(out, j, eta_x)

"""Dense reference implementation used to validate the sparse engine.

Everything here is independent of the optics/detection modules: beam
splitters are matrix exponentials of the two-mode mixing generator, loss is
an explicit vacuum ancilla mixed in and traced out, and measurement
operators are dense diagonals.  No sparsity, no precomputed input-output
tables.  Intended for tests and for computing reference values; sizes are
capped at eight simultaneous modes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm

from .fock import DEFAULT_N_MAX, DensityOperator
from .params import SystemParams
from .rates import RateBreakdown

MAX_MODES = 8


def fock_basis(n_modes: int, n_max: int):
    """All occupation tuples, lexicographic in declared mode order."""
    return list(itertools.product(range(n_max + 1), repeat=n_modes))


def _basis_index(occ, n_max: int) -> int:
    idx = 0
    for n in occ:
        idx = idx * (n_max + 1) + n
    return idx


def dense_embed(rho: DensityOperator):
    """Full matrix over the lexicographic basis; returns (matrix, basis)."""
    m = len(rho.modes)
    if m > MAX_MODES:
        raise ValueError(f"{m} modes exceed the dense-embedding cap {MAX_MODES}")
    n_max = rho.n_max
    dim = (n_max + 1) ** m
    mat = np.zeros((dim, dim))
    for (ket, bra), v in rho.entries.items():
        mat[_basis_index(ket, n_max), _basis_index(bra, n_max)] = v
    return mat, fock_basis(m, n_max)


def sparse_from_dense(mat: np.ndarray, modes, n_max: int = DEFAULT_N_MAX,
                      tol: float = 0.0) -> DensityOperator:
    """Inverse of dense_embed (entries with |value| <= tol dropped)."""
    basis = fock_basis(len(tuple(modes)), n_max)
    entries = {}
    for a, ket in enumerate(basis):
        for b, bra in enumerate(basis):
            v = float(mat[a, b])
            if abs(v) > tol:
                entries[(ket, bra)] = v
    return DensityOperator(modes, entries, n_max)


def _single_mode_a(n_max: int) -> np.ndarray:
    a = np.zeros((n_max + 1, n_max + 1))
    for n in range(1, n_max + 1):
        a[n - 1, n] = math.sqrt(n)
    return a


def dense_beamsplitter(t: float, n_max: int) -> np.ndarray:
    """Two-mode mixer unitary on the (n_max+1)**2 space.

    Same convention as the sparse engine:
        a_i† -> √t a_i† + √(1-t) a_j†,  a_j† -> √(1-t) a_i† - √t a_j†,
    realized as a rotation exp[theta (a†b - b†a)] followed by a photon-number
    parity flip on the second mode (the convention is a reflection, not a
    rotation).  Exactly unitary on every total-photon sector <= n_max.
    """
    d = n_max + 1
    a = _single_mode_a(n_max)
    eye = np.eye(d)
    A = np.kron(a, eye)
    B = np.kron(eye, a)
    gen = A.T @ B - B.T @ A
    theta = math.atan2(math.sqrt(1.0 - t), math.sqrt(t))
    rot = expm(theta * gen)
    parity = np.kron(eye, np.diag([(-1.0) ** n for n in range(d)]))
    return parity @ rot


def _as_tensor(mat: np.ndarray, n_modes: int, n_max: int) -> np.ndarray:
    d = n_max + 1
    return mat.reshape((d,) * (2 * n_modes))


def _as_matrix(tensor: np.ndarray, n_modes: int, n_max: int) -> np.ndarray:
    dim = (n_max + 1) ** n_modes
    return tensor.reshape(dim, dim)


def _apply_pair(tensor: np.ndarray, u4: np.ndarray, ax_i: int, ax_j: int) -> np.ndarray:
    out = np.tensordot(u4, tensor, axes=([2, 3], [ax_i, ax_j]))
    return np.moveaxis(out, [0, 1], [ax_i, ax_j])


def apply_beamsplitter(mat: np.ndarray, n_modes: int, i: int, j: int,
                       t: float, n_max: int) -> np.ndarray:
    """U rho U† with the two-mode mixer acting on mode positions i and j."""
    d = n_max + 1
    u4 = dense_beamsplitter(t, n_max).reshape(d, d, d, d)
    tensor = _as_tensor(mat, n_modes, n_max)
    tensor = _apply_pair(tensor, u4, i, j)
    tensor = _apply_pair(tensor, u4, n_modes + i, n_modes + j)
    return _as_matrix(tensor, n_modes, n_max)


def dense_partial_trace(mat: np.ndarray, n_modes: int, drop: int,
                        n_max: int) -> np.ndarray:
    tensor = _as_tensor(mat, n_modes, n_max)
    traced = np.trace(tensor, axis1=drop, axis2=n_modes + drop)
    return _as_matrix(traced, n_modes - 1, n_max)


def apply_loss(mat: np.ndarray, n_modes: int, i: int, eta: float,
               n_max: int) -> np.ndarray:
    """Loss as an explicit vacuum ancilla: mix it in, trace it out."""
    if n_modes + 1 > MAX_MODES:
        raise ValueError("loss ancilla would exceed the dense mode cap")
    d = n_max + 1
    anc = np.zeros((d, d))
    anc[0, 0] = 1.0
    big = np.kron(mat, anc)
    big = apply_beamsplitter(big, n_modes + 1, i, n_modes, eta, n_max)
    return dense_partial_trace(big, n_modes + 1, n_modes, n_max)


def apply_butterfly(mat: np.ndarray, n_modes: int, i: int, j: int,
                    eta_b: float, eta_x: float, n_max: int) -> np.ndarray:
    """Mixer at eta_b (crossed-path convention), then loss on both arms."""
    out = apply_beamsplitter(mat, n_modes, i, j, 1.0 - eta_b, n_max)
    out = apply_loss(out, n_modes, i, eta_x, n_max)
    return apply_loss(out, n_modes, j, eta_x, n_max)


# -- diagonal measurement helpers -------------------------------------------

def _mode_diag(kind: str, n_max: int) -> np.ndarray:
    d = n_max + 1
    vec = np.zeros(d)
    if kind == "vacuum":
        vec[0] = 1.0
    elif kind == "one":
        vec[1] = 1.0
    elif kind == "click":
        vec[1:] = 1.0
    elif kind == "any":
        vec[:] = 1.0
    else:
        raise ValueError(kind)
    return vec


def _full_diag(per_mode: list[np.ndarray]) -> np.ndarray:
    out = per_mode[0]
    for vec in per_mode[1:]:
        out = np.multiply.outer(out, vec).ravel()
    return out


def herald_diag(kind: str, d_c: float, n_modes: int, click: int, silent: int,
                n_max: int) -> np.ndarray:
    """Diagonal of the single-click herald over all modes."""
    one = "one" if kind == "pnrd" else "click"
    per_click = [_mode_diag("any", n_max) for _ in range(n_modes)]
    per_click[click] = _mode_diag(one, n_max)
    per_click[silent] = _mode_diag("vacuum", n_max)
    per_dark = [_mode_diag("any", n_max) for _ in range(n_modes)]
    per_dark[click] = _mode_diag("vacuum", n_max)
    per_dark[silent] = _mode_diag("vacuum", n_max)
    return (1.0 - d_c) * (_full_diag(per_click) + d_c * _full_diag(per_dark))


def dense_condition(mat: np.ndarray, n_modes: int, diag: np.ndarray,
                    measured: list[int], n_max: int):
    """Condition on a diagonal operator and trace out the measured modes."""
    prob = float(np.dot(np.diag(mat), diag))
    post = mat * diag[None, :]
    for drop in sorted(measured, reverse=True):
        post = dense_partial_trace(post, n_modes, drop, n_max)
        n_modes -= 1
    return post / prob, prob


# -- full pipeline, dense ----------------------------------------------------

def _source_diag(p: float, n_max: int) -> np.ndarray:
    d = n_max + 1
    mat = np.zeros((d, d))
    mat[1, 1] = 1.0 - p
    mat[2, 2] = p
    return mat


def oracle_sps_link(params: SystemParams):
    """Dense rebuild of the photon-source elementary link; (rho_AB, P_S)."""
    nm = params.n_max
    d = nm + 1
    vac = np.zeros((d, d))
    vac[0, 0] = 1.0
    src = _source_diag(params.p, nm)
    # modes: A, l, B, r
    rho = np.kron(np.kron(src, vac), np.kron(src, vac))
    if params.drop_p_squared:
        basis = fock_basis(4, nm)
        for a, ket in enumerate(basis):
            for b, bra in enumerate(basis):
                if ket[0] == 2 and ket[2] == 2:
                    rho[a, b] = 0.0
                    rho[b, a] = 0.0
    rho = apply_butterfly(rho, 4, 0, 1, params.eta, params.eta_m, nm)
    rho = apply_butterfly(rho, 4, 2, 3, params.eta, params.eta_m, nm)
    rho = apply_butterfly(rho, 4, 1, 3, 0.5, params.eta_d, nm)
    diag = herald_diag(params.detector, params.d_c, 4, click=1, silent=3, n_max=nm)
    rho_ab, prob = dense_condition(rho, 4, diag, [1, 3], nm)
    return rho_ab, 2.0 * prob


def oracle_dlcz_link(params: SystemParams, p_c: float | None = None):
    """Dense rebuild of the ensemble (Raman) elementary link; (rho_AB, P_S)."""
    nm = params.n_max
    d = nm + 1
    pc = params.p_c if p_c is None else p_c
    amps = np.array([1.0, math.sqrt(pc), pc])
    amps = amps / math.sqrt(float(np.dot(amps, amps)))
    ket = np.zeros(d * d)
    for k, a in enumerate(amps):
        ket[k * d + k] = a
    pair = np.outer(ket, ket)  # modes (mem, photon)
    rho = np.kron(pair, pair)  # modes A, l, B, r
    eta_ch = params.eta_t * params.eta_D
    rho = apply_loss(rho, 4, 1, eta_ch, nm)
    rho = apply_loss(rho, 4, 3, eta_ch, nm)
    rho = apply_beamsplitter(rho, 4, 1, 3, 0.5, nm)
    diag = herald_diag(params.detector, params.d_c, 4, click=1, silent=3, n_max=nm)
    rho_ab, prob = dense_condition(rho, 4, diag, [1, 3], nm)
    return rho_ab, 2.0 * prob


def oracle_swap(rho_left: np.ndarray, rho_right: np.ndarray,
                params: SystemParams):
    """Dense connection of two links over modes (A, inner, inner, B)."""
    nm = params.n_max
    rho = np.kron(rho_left, rho_right)  # A, ai, bi, B
    rho = apply_butterfly(rho, 4, 1, 2, 0.5, params.eta_s, nm)
    diag = herald_diag(params.detector, params.d_c, 4, click=1, silent=2, n_max=nm)
    rho_ab, prob = dense_condition(rho, 4, diag, [1, 2], nm)
    return rho_ab, 2.0 * prob


def oracle_qkd_patterns(rho_ab: np.ndarray, params: SystemParams):
    """Dense two-pair measurement; the 16 pattern probabilities."""
    nm = params.n_max
    rho = np.kron(rho_ab, rho_ab)  # A, B, C, D
    rho = apply_butterfly(rho, 4, 0, 2, 0.5, params.eta_s, nm)
    rho = apply_butterfly(rho, 4, 1, 3, 0.5, params.eta_s, nm)
    one = "one" if params.detector == "pnrd" else "click"
    diag_rho = np.diag(rho)
    probs = {}
    for pattern in itertools.product((0, 1), repeat=4):
        per = [_mode_diag(one if c else "vacuum", nm) for c in pattern]
        probs[pattern] = float(np.dot(diag_rho, _full_diag(per)))
    return probs


def _oracle_correct_error(probs, kind: str, d_c: float):
    # independent transcription of the correct/error coefficient polynomials
    P = probs
    singles = P[1, 0, 0, 0] + P[0, 1, 0, 0] + P[0, 0, 1, 0] + P[0, 0, 0, 1]
    if kind == "pnrd":
        pref = (1.0 - d_c) ** 2
        p_c = pref * (P[1, 1, 0, 0] + P[0, 0, 1, 1] + d_c * singles
                      + 2.0 * d_c ** 2 * P[0, 0, 0, 0])
        p_e = pref * (P[1, 0, 0, 1] + P[0, 1, 1, 0] + d_c * singles
                      + 2.0 * d_c ** 2 * P[0, 0, 0, 0])
        return p_c, p_e
    full = d_c * d_c / 2.0 - d_c + 1.0
    half = d_c * (1.0 - d_c / 2.0)
    dark2 = (d_c ** 2 / 2.0) * (2.0 - d_c) ** 2
    triples = P[1, 1, 1, 0] + P[1, 1, 0, 1] + P[0, 1, 1, 1] + P[1, 0, 1, 1]
    p_c = (full * (P[1, 1, 0, 0] + P[0, 0, 1, 1])
           + half * (P[1, 0, 0, 1] + P[0, 1, 1, 0])
           + half * singles + dark2 * P[0, 0, 0, 0]
           + 0.5 * triples + half * (P[1, 0, 1, 0] + P[0, 1, 0, 1])
           + 0.5 * P[1, 1, 1, 1])
    p_e = (full * (P[1, 0, 0, 1] + P[0, 1, 1, 0])
           + half * singles + dark2 * P[0, 0, 0, 0]
           + 0.5 * triples
           + half * (P[1, 1, 0, 0] + P[1, 0, 1, 0] + P[0, 0, 1, 1] + P[0, 1, 0, 1])
           + 0.5 * P[1, 1, 1, 1])
    return p_c, p_e


def oracle_pipeline(params: SystemParams, protocol: str = "sps") -> RateBreakdown:
    """Recompute a whole scenario densely.  Limited to n <= 1: higher levels
    would need the joint state of more than eight modes."""
    if params.n > 1:
        raise ValueError("dense pipeline supports nesting levels 0 and 1 only")
    if protocol == "sps":
        rho_ab, p_s = oracle_sps_link(params)
    elif protocol == "dlcz":
        rho_ab, p_s = oracle_dlcz_link(params)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    p_m_list = []
    if params.n == 1:
        rho_ab, p_m = oracle_swap(rho_ab, rho_ab, params)
        p_m_list.append(p_m)
    probs = oracle_qkd_patterns(rho_ab, params)
    p_c, p_e = _oracle_correct_error(probs, params.detector, params.d_c)
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
    ent = 0.0
    if 0.0 < eps_q < 1.0:
        ent = -(eps_q * math.log2(eps_q) + (1.0 - eps_q) * math.log2(1.0 - eps_q))
    h_term = 1.0 - 2.0 * ent
    r_qkd = max(h_term * r_ent * p_click / 2.0, 0.0)
    return RateBreakdown(
        P_S=p_s, P_M_list=tuple(p_m_list), P_click=p_click, P_error=p_error,
        P_C=p_c, P_E=p_e, epsilon_Q=eps_q, H_term=h_term,
        R_ent=r_ent, R_QKD=r_qkd,
    )

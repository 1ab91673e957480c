"""Optimizers and root-finders over the key rate: optimal source splitting,
cutoff double-photon probability, crossover distances, security distance,
minimum coherence time, and the protocol comparison.

All searches are deterministic: fixed brackets, fixed iteration rules, ties
broken toward the smaller argument.  Scenario evaluations that fall outside
the lumped-loss validity regime or herald an impossible outcome count as
rate zero rather than aborting a sweep.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .errors import (BracketEndError, ImpossibleOutcomeError,
                     ModelValidityError, NoCrossoverError,
                     NoFeasiblePointError)
from .params import SystemParams
from .rates import key_rate

ETA_BRACKET = (0.01, 0.99)
P_BRACKET = (1e-7, 0.2)
L_BRACKET = (10.0, 2000.0)
T2_BRACKET = (1e-4, 10.0)

ETA_TOL = 1e-3
P_REL_TOL = 1e-3
L_TOL_KM = 1.0
T2_REL_TOL = 1e-2

# Fixed operating points of the ensemble protocol (its only adjustable knob),
# taken at the optimum for each nesting level.
DLCZ_PC_OPT = {0: 0.0243, 1: 0.0060}

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def safe_rate(params: SystemParams, protocol: str = "sps", **changes) -> float:
    """Key rate at ``params.replace(**changes)``; points outside the
    lumped-loss validity regime or without heraldable outcomes count as 0
    so that sweeps and root-finders can pass over them."""
    try:
        if changes:
            params = params.replace(**changes)
        return key_rate(params, protocol).R_QKD
    except (ModelValidityError, ImpossibleOutcomeError):
        return 0.0


def optimize_eta(params: SystemParams, grid=(0.01, 0.99, 0.02)):
    """Maximize the key rate over the source splitting ratio.

    Coarse grid scan first; golden-section refinement (to |d eta| <= 1e-3)
    only when the scan shows a single peak, otherwise a fine grid.  Returns
    (eta_star, rate_star); ties break to the smaller eta.
    """
    lo, hi, step = grid
    if not (0.0 < lo < hi < 1.0) or step <= 0.0:
        raise ValueError(f"bad eta grid {grid}")

    def rate(eta: float) -> float:
        return safe_rate(params, eta=eta)

    etas = []
    x = lo
    while x <= hi + 1e-12:
        etas.append(min(x, hi))
        x += step
    values = [rate(e) for e in etas]
    if all(v <= 0.0 for v in values):
        raise NoFeasiblePointError("key rate is zero on the whole eta grid")

    best = max(range(len(etas)), key=lambda k: (values[k], -etas[k]))

    # single peak <=> the discrete gradient changes sign at most once
    diffs = [values[k + 1] - values[k] for k in range(len(values) - 1)]
    signs = [d for d in diffs if d != 0.0]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))
    if flips <= 1:
        a = etas[max(best - 1, 0)]
        b = etas[min(best + 1, len(etas) - 1)]
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        fc, fd = rate(c), rate(d)
        while b - a > ETA_TOL:
            if fc >= fd:  # keep the left bracket on ties
                b, d, fd = d, c, fc
                c = b - _INV_PHI * (b - a)
                fc = rate(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INV_PHI * (b - a)
                fd = rate(d)
        eta_star, r_star = (c, fc) if fc >= fd else (d, fd)
    else:
        eta_star, r_star = etas[best], values[best]
        x = lo
        while x <= hi + 1e-12:
            v = rate(x)
            if v > r_star:
                eta_star, r_star = x, v
            x += ETA_TOL

    # local-max certificate at the final step size
    for _ in range(50):
        moved = False
        for cand in (eta_star - ETA_TOL, eta_star + ETA_TOL):
            if lo <= cand <= hi:
                v = rate(cand)
                if v > r_star:
                    eta_star, r_star, moved = cand, v, True
        if not moved:
            break
    return eta_star, r_star


@lru_cache(maxsize=None)
def _cached_optimum(params: SystemParams):
    return optimize_eta(params)


def level_eta(params: SystemParams, n: int) -> float:
    """Per-level optimal splitting ratio at the reference operating point
    (p = 1e-3, L = 250 km); it stays put across distance as long as the
    error terms sit well below the keying threshold.  Levels whose cutoff
    lies below 1e-3 are optimized at the largest feasible p of a fixed
    ladder, where the optimum is p-insensitive."""
    for p_ref in (1e-3, 1e-4, 1e-5, 1e-6):
        try:
            eta, _ = _cached_optimum(params.replace(n=n, L=250.0, p=p_ref))
            return eta
        except NoFeasiblePointError:
            continue
    raise NoFeasiblePointError(f"level {n} has no feasible splitting ratio")


def cutoff_p(params: SystemParams, eta: float | None = None) -> float:
    """Largest double-photon probability with a positive key rate.

    eta defaults to the per-level optimum at the reference operating point.
    Bisection at relative tolerance 1e-3; monotone decrease of the rate in p
    makes the bracket valid.
    """
    if eta is None:
        eta = level_eta(params, params.n)
    base = params.replace(eta=eta)

    def rate(p: float) -> float:
        return safe_rate(base, p=p)

    lo = 1e-6
    hi = P_BRACKET[1]
    if rate(lo) <= 0.0:
        raise NoFeasiblePointError("no positive rate even at p = 1e-6")
    if rate(hi) > 0.0:
        raise BracketEndError("rate still positive at the p bracket end", hi)
    while hi - lo > P_REL_TOL * lo:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossover_distance(params: SystemParams, n_low: int,
                       n_high: int | None = None,
                       scan_step_km: float = 10.0) -> float:
    """Distance beyond which nesting level n_low+1 outperforms n_low.

    Each level runs at its own optimal splitting ratio.  A coarse scan finds
    the sign change of the rate difference; bisection narrows it to 1 km.
    """
    if n_high is None:
        n_high = n_low + 1
    eta_low = level_eta(params, n_low)
    eta_high = level_eta(params, n_high)

    def low(L: float) -> float:
        return safe_rate(params, L=L, n=n_low, eta=eta_low)

    def high(L: float) -> float:
        return safe_rate(params, L=L, n=n_high, eta=eta_high)

    def diff(L: float) -> float:
        return high(L) - low(L)

    lo_km, hi_km = L_BRACKET
    prev_l, prev_d = lo_km, diff(lo_km)
    bracket = None
    L = lo_km + scan_step_km
    while L <= hi_km + 1e-9:
        d = diff(L)
        if prev_d < 0.0 and d >= 0.0 and high(L) > 0.0:
            bracket = (prev_l, L)
            break
        prev_l, prev_d = L, d
        L += scan_step_km
    if bracket is None:
        raise NoCrossoverError(
            f"no crossover of levels {n_low}->{n_high} on "
            f"[{lo_km:g}, {hi_km:g}] km"
        )
    a, b = bracket
    while b - a > L_TOL_KM:
        mid = 0.5 * (a + b)
        if diff(mid) < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def security_distance(params: SystemParams) -> float:
    """Largest distance with a positive key rate, to 1 km."""
    lo_km, hi_km = L_BRACKET

    def rate(L: float) -> float:
        return safe_rate(params, L=L)

    if rate(lo_km) <= 0.0:
        raise NoFeasiblePointError(
            f"no positive rate even at {lo_km:g} km"
        )
    if rate(hi_km) > 0.0:
        raise BracketEndError(
            f"rate still positive at the {hi_km:g} km bracket end", hi_km
        )
    a, b = lo_km, hi_km
    while b - a > L_TOL_KM:
        mid = 0.5 * (a + b)
        if rate(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def min_coherence_time(params: SystemParams, L: float) -> float:
    """Smallest dephasing time constant with a positive rate at distance L."""
    lo_s, hi_s = T2_BRACKET

    def rate(T2: float) -> float:
        return safe_rate(params, T2=T2, L=L)

    if rate(hi_s) <= 0.0:
        raise NoFeasiblePointError(
            f"no positive rate even at T2 = {hi_s:g} s"
        )
    if rate(lo_s) > 0.0:
        raise BracketEndError(
            f"rate still positive at the T2 = {lo_s:g} s bracket end", lo_s
        )
    a, b = lo_s, hi_s
    while b - a > T2_REL_TOL * a:
        mid = 0.5 * (a + b)
        if rate(mid) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def best_sps_rate(params: SystemParams, levels=(0, 1),
                  etas: dict | None = None) -> float:
    """Better of the repeater / no-repeater photon-source rates."""
    best = 0.0
    for n in levels:
        eta = etas[n] if etas else level_eta(params, n)
        best = max(best, safe_rate(params, n=n, eta=eta))
    return best


def best_dlcz_rate(params: SystemParams, levels=(0, 1)) -> float:
    """Better of the repeater / no-repeater ensemble rates, each level at
    its fixed optimal excitation probability."""
    best = 0.0
    for n in levels:
        p_c = DLCZ_PC_OPT[n]
        best = max(best, safe_rate(params, protocol="dlcz", n=n, p_c=p_c))
    return best


def compare_dlcz_sps(params: SystemParams, p_grid, distances=None):
    """Rate comparison over double-photon probabilities (and distances).

    Both protocols run at their optimal settings; each record carries the
    photon-source rate, the ensemble rate, and their ratio.
    """
    if distances is None:
        distances = (params.L,)
    etas = {n: level_eta(params, n) for n in (0, 1)}
    records = []
    for L in distances:
        at_l = params.replace(L=L)
        dlcz = best_dlcz_rate(at_l)
        for p in p_grid:
            sps = best_sps_rate(at_l.replace(p=p), etas=etas)
            ratio = math.inf if dlcz == 0.0 else sps / dlcz
            records.append({
                "L_km": L, "p": p,
                "sps_rate": sps, "dlcz_rate": dlcz, "ratio": ratio,
            })
    return records


def sps_dlcz_crossing_p(params: SystemParams, lo: float = 5e-4,
                        hi: float = 0.05) -> float:
    """Double-photon probability at which the photon-source advantage ends.

    Bisection on (photon-source rate) - (ensemble rate) at distance params.L
    with both protocols at their optimal settings; relative tolerance 1e-3.
    """
    etas = {n: level_eta(params, n) for n in (0, 1)}
    dlcz = best_dlcz_rate(params)

    def diff(p: float) -> float:
        return best_sps_rate(params.replace(p=p), etas=etas) - dlcz

    if diff(lo) <= 0.0:
        raise NoCrossoverError("ensemble protocol already ahead at the low end")
    if diff(hi) > 0.0:
        raise BracketEndError("photon sources still ahead at the high end", hi)
    a, b = lo, hi
    while b - a > 1e-3 * a:
        mid = 0.5 * (a + b)
        if diff(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)

"""Heralded entangled links between remote memories.

Two entanglement-distribution flavors share the machinery:

* single-photon-source links: each party splits an (ideally) single photon
  between a memory rail and a channel rail; a single detector click at the
  midpoint heralds success.
* ensemble (Raman) links: each party holds an atom/photon pair in a
  two-mode-squeezed-like state; the scattered photons interfere at the
  midpoint.

Swapping reads out the two inner memories, interferes them on a 50:50
splitter with lumped readout transmission eta_s, and heralds on a single
click.  By the symmetry of the setup, all links at the same nesting level
share one state, so a chain of 2**n segments reduces to one state per level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detection import DetectorModel, condition, herald_operator
from .errors import ModeError
from .fock import DEFAULT_N_MAX, DensityOperator, relabel, tensor, vacuum_state
from .optics import butterfly, loss, mix
from .params import SystemParams

MEM_LEFT = "A"
MEM_RIGHT = "B"


@dataclass(frozen=True)
class LinkState:
    """A heralded two-memory state plus the probability that produced it."""

    rho: DensityOperator  # over modes (A, B), unit trace
    p_success: float      # heralding probability (both detectors counted)
    level: int            # number of swap rounds behind this state


def sps_source(p: float, mode: str = "src", n_max: int = DEFAULT_N_MAX) -> DensityOperator:
    """Photon-source output: one photon with probability 1-p, two with p."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"double-photon probability {p} outside [0, 1)")
    return DensityOperator(
        (mode,), {((1,), (1,)): 1.0 - p, ((2,), (2,)): p}, n_max
    )


def _heralded(rho: DensityOperator, click: str, silent: str,
              params: SystemParams, level: int) -> LinkState:
    det = DetectorModel(params.detector, params.d_c)
    m = herald_operator(det, click, silent, params.n_max)
    out, prob = condition(rho, m)
    # a click on the other detector is equally likely by symmetry and yields
    # the same state up to the sign of the entangled superposition
    return LinkState(rho=out, p_success=2.0 * prob, level=level)


def sps_elementary_link(params: SystemParams) -> LinkState:
    """Distribute entanglement over one elementary span with photon sources.

    Each source state is split memory/channel on a beam splitter with
    transmission eta (the butterfly also carries the writing loss eta_m);
    the channel rails interfere on a 50:50 splitter whose arms carry the
    lumped channel-plus-detector loss eta_d.
    """
    nm = params.n_max
    eta_d = params.eta_d  # raises ModelValidityError when out of regime
    left = tensor(sps_source(params.p, MEM_LEFT, nm), vacuum_state(("l",), nm))
    right = tensor(sps_source(params.p, MEM_RIGHT, nm), vacuum_state(("r",), nm))
    rho = tensor(left, right)
    if params.drop_p_squared:
        ia, ib = rho.index(MEM_LEFT), rho.index(MEM_RIGHT)
        entries = {
            key: v for key, v in rho.entries.items()
            if not (key[0][ia] == 2 and key[0][ib] == 2)
        }
        rho = DensityOperator(rho.modes, entries, nm)
    rho = butterfly(rho, MEM_LEFT, "l", params.eta, params.eta_m)
    rho = butterfly(rho, MEM_RIGHT, "r", params.eta, params.eta_m)
    rho = butterfly(rho, "l", "r", 0.5, eta_d)
    return _heralded(rho, "l", "r", params, level=0)


def dlcz_elementary_link(params: SystemParams, p_c: float | None = None) -> LinkState:
    """Distribute entanglement with Raman-scattered photons from ensembles.

    Each atom/photon pair starts in the two-mode-squeezed-form state
    (|00⟩ + √p_c |11⟩ + p_c |22⟩)/norm, truncated at two excitations.  The
    photon rail sees a single lumped transmission eta_t * eta_D (there is no
    separate writing step), then the rails interfere on a 50:50 splitter.
    """
    pc = params.p_c if p_c is None else p_c
    if not 0.0 < pc < 1.0:
        raise ValueError(f"excitation probability {pc} outside (0, 1)")
    nm = params.n_max
    amps = [1.0, math.sqrt(pc), pc]
    norm = math.sqrt(sum(a * a for a in amps))
    amps = [a / norm for a in amps]

    def pair(mem: str, pho: str) -> DensityOperator:
        entries = {}
        for k, ak in enumerate(amps):
            for k2, ak2 in enumerate(amps):
                entries[((k, k), (k2, k2))] = ak * ak2
        return DensityOperator((mem, pho), entries, nm)

    rho = tensor(pair(MEM_LEFT, "l"), pair(MEM_RIGHT, "r"))
    eta_ch = params.eta_t * params.eta_D
    rho = loss(rho, "l", eta_ch)
    rho = loss(rho, "r", eta_ch)
    rho = mix(rho, "l", "r", 0.5)
    return _heralded(rho, "l", "r", params, level=0)


def swap(left: LinkState, right: LinkState, params: SystemParams) -> LinkState:
    """Connect two links by measuring out their inner memories.

    The inner memories are read out (lumped transmission eta_s = eta_c *
    eta_D), interfered on a 50:50 splitter, and success is heralded by a
    single detector click.
    """
    if left.level != right.level:
        raise ModeError("swapped links must sit at the same nesting level")
    rho = tensor(
        relabel(left.rho, {MEM_RIGHT: "ai"}),
        relabel(right.rho, {MEM_LEFT: "bi"}),
    )
    rho = butterfly(rho, "ai", "bi", 0.5, params.eta_s)
    return _heralded(rho, "ai", "bi", params, level=left.level + 1)


def build_chain(params: SystemParams, protocol: str = "sps"):
    """Elementary links at span L / 2**n, then n rounds of pairwise swapping.

    Returns (final LinkState, P_S of the elementary link, [P_M per level]).
    All links at one level share a state, so the cost is linear in n.
    """
    if protocol == "sps":
        link = sps_elementary_link(params)
    elif protocol == "dlcz":
        link = dlcz_elementary_link(params)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    p_s = link.p_success
    p_m_list = []
    for _ in range(params.n):
        link = swap(link, link, params)
        p_m_list.append(link.p_success)
    return link, p_s, p_m_list

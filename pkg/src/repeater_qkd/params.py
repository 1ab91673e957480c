"""System parameters: device/channel/protocol scalars and derived quantities.

Defaults follow the nominal operating point used throughout the numerical
study: eta_m = 0.5, eta_D = 0.3, retrieval 0.7, d_c = 1e-6 per gate,
25 km attenuation length, c = 2e5 km/s in fiber, no decay or dephasing.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .detection import DETECTOR_KINDS, PNRD
from .errors import ModelValidityError

_EFFICIENCIES = ("eta", "eta_m", "eta_D", "eta_0")


@dataclass(frozen=True)
class SystemParams:
    """All scalar knobs of one scenario.

    p : double-photon emission probability of each single-photon source
    eta : source beam-splitter transmission (memory vs channel split)
    eta_m : memory writing efficiency
    eta_D : photodetector quantum efficiency
    eta_0 : memory retrieval efficiency immediately after writing
    T1, T2 : memory decay / dephasing time constants (s); inf to disable
    d_c : dark-count probability per gate per detector
    L_att : channel attenuation length (km)
    c : speed of light in the channel (km/s)
    L : total distance between the end users (km)
    n : nesting level; elementary links span L / 2**n
    detector : "pnrd" or "nrpd"
    p_c : excitation probability of the atomic-ensemble (Raman) source
    drop_p_squared : discard the simultaneous two-photon/two-photon source
        term, whose weight is O(p**2)
    multimode_modes : if set, rates are reported per mode of a multimode
        memory, which costs a (2/3)**n prefactor
    n_max : Fock truncation per mode
    """

    p: float = 1e-3
    eta: float = 0.35
    eta_m: float = 0.5
    eta_D: float = 0.3
    eta_0: float = 0.7
    T1: float = math.inf
    T2: float = math.inf
    d_c: float = 1e-6
    L_att: float = 25.0
    c: float = 2.0e5
    L: float = 250.0
    n: int = 0
    detector: str = PNRD
    p_c: float = 0.0243
    drop_p_squared: bool = True
    multimode_modes: int | None = None
    n_max: int = 4

    def __post_init__(self):
        for name in _EFFICIENCIES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p={self.p} outside [0, 1)")
        if not 0.0 <= self.d_c < 1.0:
            raise ValueError(f"d_c={self.d_c} outside [0, 1)")
        if not 0.0 < self.p_c < 1.0:
            raise ValueError(f"p_c={self.p_c} outside (0, 1)")
        for name in ("L", "L_att", "c", "T1", "T2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n < 0:
            raise ValueError("nesting level must be >= 0")
        if self.detector not in DETECTOR_KINDS:
            raise ValueError(f"detector must be one of {DETECTOR_KINDS}")
        if self.multimode_modes is not None and self.multimode_modes < 1:
            raise ValueError("multimode_modes must be >= 1 when set")
        if self.eta_d > 1.0 + 1e-12:
            raise ModelValidityError(
                f"eta_d = eta_t*eta_D/eta_m = {self.eta_d:.6g} > 1; the "
                "lumped-loss model requires eta_t*eta_D <= eta_m "
                f"(span {self.span:.6g} km)"
            )

    # -- derived quantities ------------------------------------------------

    @property
    def span(self) -> float:
        """Elementary link length L / 2**n (km)."""
        return self.L / 2 ** self.n

    @property
    def eta_t(self) -> float:
        """Fiber transmission over half an elementary span."""
        return math.exp(-self.span / (2.0 * self.L_att))

    @property
    def eta_d(self) -> float:
        """Lumped channel-plus-detector transmission per rail, after moving
        the writing loss eta_m in front of the channel."""
        return self.eta_t * self.eta_D / self.eta_m

    @property
    def storage_time(self) -> float:
        """Worst-case storage time L/c (s), used for decay and dephasing."""
        return self.L / self.c

    @property
    def eta_c(self) -> float:
        """Memory retrieval efficiency after the worst-case storage time."""
        return self.eta_0 * math.exp(-self.storage_time / self.T1)

    @property
    def eta_s(self) -> float:
        """Measurement-side transmission eta_c * eta_D at readout."""
        return self.eta_c * self.eta_D

    @property
    def e_d(self) -> float:
        """Dephasing (misalignment-equivalent) error probability."""
        return 0.5 * (1.0 - math.exp(-self.storage_time / self.T2))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

"""Run configuration: physical rates, detection setup, numerical controls.

All rates are in units of kappa and all times in units of 1/kappa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = ["SimParams", "DetectionConfig", "max_stable_dt"]

DETECTION_MODES = ("homodyne", "heterodyne", "none")


def max_stable_dt(epsilon: float, gamma: float, kappa: float = 1.0) -> float:
    """Step-control bound dt <= min(0.01/(2 eps), 0.01/gamma, 0.002/kappa).

    Keeps the fastest coherent frequency (2 eps), the jump probability per
    step (gamma dt) and the cavity damping per step all small.
    """
    bound = 0.002 / kappa
    if epsilon > 0:
        bound = min(bound, 0.01 / (2.0 * epsilon))
    if gamma > 0:
        bound = min(bound, 0.01 / gamma)
    return bound


@dataclass(frozen=True)
class SimParams:
    """Physical rates and numerical controls for one run (kappa = 1 units)."""

    g: float = 0.0
    kappa: float = 1.0
    gamma: float = 0.0
    epsilon: float = 0.0
    fock_cutoff: int = 10
    dt: float | None = None
    t_final: float = 10.0
    seed: int = 0
    n_traj: int = 1

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "epsilon"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite non-negative rate, got {v}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive (it sets the unit system)")
        if self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be >= 1, got {self.fock_cutoff}")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.dt is not None:
            if self.dt <= 0:
                raise ValueError("dt must be positive")
            bound = max_stable_dt(self.epsilon, self.gamma, self.kappa)
            if self.dt > bound * (1 + 1e-12):
                raise ValueError(
                    f"dt = {self.dt} violates the step-control bound {bound:.3e} "
                    f"for epsilon = {self.epsilon}, gamma = {self.gamma}"
                )

    def resolved_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        return max_stable_dt(self.epsilon, self.gamma, self.kappa)

    def with_overrides(self, **kwargs) -> "SimParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DetectionConfig:
    """Cavity-output detection and side-detector configuration.

    theta is the local-oscillator phase, meaningful for homodyne only and
    restricted to [0, pi).  bandwidth_B = 0 disables the photocurrent filter.
    atomic_counting switches the side photodetectors on; it requires
    gamma > 0 and, conversely, any run with gamma > 0 must count the
    side-channel emissions for the conditioned state to stay pure.
    """

    mode: str = "homodyne"
    theta: float = 0.0
    bandwidth_B: float = 0.0
    atomic_counting: bool = False
    efficiency: float = 1.0

    def __post_init__(self):
        if self.mode not in DETECTION_MODES:
            raise ValueError(f"mode must be one of {DETECTION_MODES}, got {self.mode!r}")
        if self.mode == "homodyne" and not (0.0 <= self.theta < math.pi):
            raise ValueError(f"homodyne LO phase must satisfy 0 <= theta < pi, got {self.theta}")
        if self.bandwidth_B < 0:
            raise ValueError("bandwidth_B must be >= 0")
        if self.efficiency != 1.0:
            raise ValueError("only unit detection efficiency is supported")

    def validate_against(self, params: SimParams) -> None:
        if self.atomic_counting and params.gamma <= 0:
            raise ValueError("atomic_counting requires gamma > 0")
        if params.gamma > 0 and not self.atomic_counting:
            raise ValueError(
                "gamma > 0 requires atomic_counting=True: the side-channel "
                "emissions must be recorded for a pure-state unraveling"
            )

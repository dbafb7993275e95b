"""Closed-form error budget and rate scaling for the multiplexed protocol.

All error expressions are first order in the emission probability ``p``.
``ratio`` always means beta_AS / beta_S; a Stokes-resonant cavity of
finesse F gives ratio = 1/F, free space gives ratio = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidParameterError

SPEED_OF_LIGHT = 2.99792458e8  # m/s, vacuum
FIBER_SPEED = 2e8  # m/s
ATTENUATION_DB_PER_KM = 0.2


def _prob(name: str, value: float, *, open_low: bool = False) -> None:
    lo_ok = value > 0 if open_low else value >= 0
    if not (lo_ok and value <= 1):
        bound = "(0, 1]" if open_low else "[0, 1]"
        raise InvalidParameterError(f"{name} must lie in {bound}, got {value!r}")


@dataclass(frozen=True)
class EmissionParams:
    """Stokes emission probability and detected-mode fractions.

    p       probability of a Stokes photon into the detected mode per write pulse
    beta_s  fraction of all Stokes emissions that land in the detected mode
    beta_as fraction of non-directional anti-Stokes emissions that do
    """

    p: float
    beta_s: float
    beta_as: float

    def __post_init__(self):
        _prob("p", self.p)
        _prob("beta_s", self.beta_s, open_low=True)
        _prob("beta_as", self.beta_as, open_low=True)
        if self.beta_as > self.beta_s:
            raise InvalidParameterError("beta_as must not exceed beta_s")

    @property
    def ratio(self) -> float:
        return self.beta_as / self.beta_s

    @classmethod
    def with_cavity(cls, p: float, beta_s: float, cavity: "Cavity") -> "EmissionParams":
        return cls(p, beta_s, beta_s / purcell_ratio(cavity))

    def check_ensemble(self, n_atoms: int) -> None:
        """Warn when the mean excitation count per bin reaches the atom count."""
        if mean_unwanted_excitations(self) >= n_atoms:
            warnings.warn(
                f"p/beta_s = {self.p / self.beta_s:g} excitations per bin "
                f"saturates an ensemble of {n_atoms} atoms",
                RuntimeWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class Cavity:
    length: float  # m
    finesse: float

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidParameterError("cavity length must be positive")
        if not self.finesse >= 1:
            raise InvalidParameterError("finesse must be >= 1")


@dataclass(frozen=True)
class ProtocolParams:
    epsilon: float = 0.01
    n_modes: int = 500
    l0: float = 100e3  # m
    fiber_speed: float = FIBER_SPEED
    attenuation: float = ATTENUATION_DB_PER_KM  # dB/km
    gamma_inh: float = 1e6  # Hz
    eta_detect: float = 0.5
    eta_memory0: float = 0.5
    tau_fast: float = 2.4e-3  # s
    tau_slow: float = 0.24  # s
    fast_weight: float = 0.5

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidParameterError("epsilon must lie in (0, 1)")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidParameterError("n_modes must be an integer >= 1")
        if self.l0 < 0:
            raise InvalidParameterError("l0 must be non-negative")
        if not self.fiber_speed > 0:
            raise InvalidParameterError("fiber_speed must be positive")
        if self.attenuation < 0:
            raise InvalidParameterError("attenuation must be non-negative")
        if self.gamma_inh < 0:
            raise InvalidParameterError("gamma_inh must be non-negative")
        _prob("eta_detect", self.eta_detect, open_low=True)
        _prob("eta_memory0", self.eta_memory0, open_low=True)
        _prob("fast_weight", self.fast_weight)
        if not (0 < self.tau_fast <= self.tau_slow):
            raise InvalidParameterError("need 0 < tau_fast <= tau_slow")


class ErrorBudget(NamedTuple):
    same_bin: float
    cross_bin: float
    total: float


class CavitySpectrum(NamedTuple):
    fsr: float  # Hz
    peak_width: float  # Hz


def purcell_ratio(cavity: Cavity) -> float:
    """beta_S / beta_AS provided by the cavity, which is its finesse."""
    return float(cavity.finesse)


def cavity_spectrum(cavity: Cavity) -> CavitySpectrum:
    fsr = SPEED_OF_LIGHT / cavity.length
    return CavitySpectrum(fsr, fsr / cavity.finesse)


def mean_unwanted_excitations(em: EmissionParams) -> float:
    """Atoms transferred to s per time bin, summed over all emission directions."""
    return em.p / em.beta_s


def error_budget(em: EmissionParams, n_modes: int) -> ErrorBudget:
    if n_modes < 1:
        raise InvalidParameterError("n_modes must be >= 1")
    same = 2.0 * em.p
    cross = (n_modes - 1) * em.p * em.ratio
    return ErrorBudget(same, cross, same + cross)


def _error_denominator(n_modes: int, ratio: float) -> float:
    if n_modes < 1:
        raise InvalidParameterError("n_modes must be >= 1")
    if ratio < 0:
        raise InvalidParameterError("ratio must be non-negative")
    return 2.0 + (n_modes - 1) * ratio


def max_p_for_error(epsilon: float, n_modes: int, ratio: float) -> float:
    """Largest p whose total error equals ``epsilon``."""
    if not 0 < epsilon < 1:
        raise InvalidParameterError("epsilon must lie in (0, 1)")
    return epsilon / _error_denominator(n_modes, ratio)


def multimode_rate_scaling(epsilon: float, n_modes: int, ratio: float) -> float:
    """Rate factor N*eps / (2 + (N-1)*ratio), i.e. N times the budgeted p."""
    return n_modes * epsilon / _error_denominator(n_modes, ratio)


def speedup_vs_single_mode(n_modes: int, ratio: float) -> float:
    return 2.0 * n_modes / _error_denominator(n_modes, ratio)


def exceeds_useful_modes(n_modes: int, finesse: float, factor: float = 5.0) -> bool:
    """True once N is well past F, where multiplexing gains saturate."""
    return n_modes > factor * finesse


def communication_time(l0: float, fiber_speed: float = FIBER_SPEED) -> float:
    if not fiber_speed > 0:
        raise InvalidParameterError("fiber_speed must be positive")
    return l0 / fiber_speed


def mode_capacity(params: ProtocolParams) -> int:
    """Number of 1/gamma_inh bins fitting in one communication window."""
    n = params.l0 * params.gamma_inh / params.fiber_speed
    # guard against e.g. 499.99999999999994 from rounding
    return int(math.floor(n * (1 + 1e-12)))


def fiber_transmission(length: float, attenuation: float = ATTENUATION_DB_PER_KM) -> float:
    """Transmission of ``length`` metres of fibre at ``attenuation`` dB/km."""
    if length < 0 or attenuation < 0:
        raise InvalidParameterError("length and attenuation must be non-negative")
    return 10.0 ** (-attenuation * (length / 1e3) / 10.0)


def memory_recall_efficiency(params: ProtocolParams, storage_time: float) -> float:
    """Reconversion efficiency after ``storage_time`` for a standing spin wave.

    The standing wave is a superposition of two counter-propagating
    components; the fast one (large Delta k) decays with tau_fast.
    """
    if storage_time < 0:
        raise InvalidParameterError("storage_time must be non-negative")
    w = params.fast_weight
    decay = w * math.exp(-storage_time / params.tau_fast) + (1 - w) * math.exp(
        -storage_time / params.tau_slow
    )
    return params.eta_memory0 * decay

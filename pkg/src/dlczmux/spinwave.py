"""Collective spin waves in an inhomogeneously broadened atomic ensemble.

Each atom carries a position and a detuning from the centre of the g-s
transition.  A spin wave created at ``t0`` picks up the per-atom phase
``omega_n * integral(sign)``, where ``sign`` is the controllable sign of the
field gradient.  Flipping the sign once at ``T`` undoes the dephasing of a
wave created at ``t_i`` exactly at ``2T - t_i``.

Amplitudes are normalised by ``1/N_A`` so that a fully rephased wave read out
in the phase-matched direction has amplitude exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidParameterError,
    TemporalOrderError,
    UnsupportedScheduleError,
)

TWO_PI = 2.0 * np.pi
DEFAULT_WAVELENGTH = 795e-9
DEFAULT_K = TWO_PI / DEFAULT_WAVELENGTH
AXIS = np.array([0.0, 0.0, 1.0])


class Atom(NamedTuple):
    position: np.ndarray  # m
    detuning: float  # rad/s


@dataclass(frozen=True)
class Cylinder:
    """Pencil-shaped cloud centred on the origin, axis along z."""

    length: float = 10e-3
    radius: float = 1e-3

    def __post_init__(self):
        if not (self.length >= 0 and self.radius >= 0):
            raise InvalidParameterError("cylinder length and radius must be non-negative")

    def contains(self, positions: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
        positions = np.atleast_2d(positions)
        r2 = positions[:, 0] ** 2 + positions[:, 1] ** 2
        slack_r = rtol * max(self.radius, 1e-30)
        slack_z = rtol * max(self.length, 1e-30)
        return (r2 <= (self.radius + slack_r) ** 2) & (
            np.abs(positions[:, 2]) <= self.length / 2 + slack_z
        )

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.uniform(-self.length / 2, self.length / 2, n)
        r = self.radius * np.sqrt(rng.random(n))
        theta = rng.uniform(0.0, TWO_PI, n)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


@dataclass(frozen=True)
class Broadening:
    """Detuning distribution of width ``gamma_inh`` (Hz).

    ``uniform``: flat on [-pi*gamma_inh, +pi*gamma_inh] rad/s, what a linear
    field gradient across a uniform cloud produces.
    ``gaussian``: normal with FWHM ``2*pi*gamma_inh`` rad/s.
    """

    gamma_inh: float = 1e6
    shape: str = "uniform"

    def __post_init__(self):
        if not np.isfinite(self.gamma_inh) or self.gamma_inh < 0:
            raise InvalidParameterError(f"broadening width must be >= 0, got {self.gamma_inh!r}")
        if self.shape not in ("uniform", "gaussian"):
            raise InvalidParameterError(f"unknown broadening shape {self.shape!r}")

    @property
    def bin_duration(self) -> float:
        """Time bin of one write pulse, exactly 1/gamma_inh."""
        if self.gamma_inh == 0:
            return np.inf
        return 1.0 / self.gamma_inh

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.gamma_inh == 0:
            return np.zeros(n)
        if self.shape == "uniform":
            half = np.pi * self.gamma_inh
            return rng.uniform(-half, half, n)
        sigma = TWO_PI * self.gamma_inh / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        return rng.normal(0.0, sigma, n)


@dataclass(frozen=True)
class FieldSchedule:
    """Sign of the broadening field, toggled at each flip time."""

    flip_times: tuple[float, ...] = ()
    initial_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "flip_times", tuple(float(t) for t in self.flip_times))
        if self.initial_sign not in (1, -1):
            raise InvalidParameterError("initial_sign must be +1 or -1")
        if any(b <= a for a, b in zip(self.flip_times, self.flip_times[1:])):
            raise InvalidParameterError("flip_times must be strictly increasing")

    def sign(self, t):
        """Field sign at time ``t``; a flip takes effect at its own instant."""
        n_flips = np.searchsorted(self.flip_times, t, side="right")
        return self.initial_sign * np.where(n_flips % 2 == 0, 1, -1)

    def _primitive(self, t):
        # integral of sign from 0 to t, piecewise linear
        t = np.asarray(t, dtype=float)
        out = self.initial_sign * t
        s = self.initial_sign
        for tf in self.flip_times:
            # after each flip, slope changes from s to -s
            out = np.where(t > tf, out - 2 * s * (t - tf), out)
            s = -s
        return out

    def signed_time(self, t0, t1):
        """Integral of the field sign over [t0, t1] in seconds."""
        return self._primitive(t1) - self._primitive(t0)


@dataclass(frozen=True)
class SpinWave:
    creation_time: float
    k_write: np.ndarray = field(default_factory=lambda: DEFAULT_K * AXIS)
    k_stokes: np.ndarray = field(default_factory=lambda: DEFAULT_K * AXIS)

    def __post_init__(self):
        for name in ("k_write", "k_stokes"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise InvalidParameterError(f"{name} must be a 3-vector")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def delta_k(self) -> np.ndarray:
        """Stored wave vector k_write - k_stokes."""
        return self.k_write - self.k_stokes

    @classmethod
    def along_axis(cls, creation_time: float, k: float = DEFAULT_K) -> "SpinWave":
        return cls(creation_time, k * AXIS, k * AXIS)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Immutable atom cloud: positions (N_A, 3) in m, detunings (N_A,) in rad/s."""

    positions: np.ndarray
    detunings: np.ndarray
    geometry: Cylinder = Cylinder()
    schedule: FieldSchedule = FieldSchedule()
    rng_seed: int | None = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        det = np.array(self.detunings, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise InvalidParameterError("positions must have shape (N_A, 3)")
        if det.shape != (pos.shape[0],):
            raise InvalidParameterError("need one detuning per atom")
        if pos.shape[0] < 2:
            raise InvalidParameterError("an ensemble needs at least 2 atoms")
        if not np.all(self.geometry.contains(pos)):
            raise InvalidParameterError("atom positions lie outside the ensemble geometry")
        pos.setflags(write=False)
        det.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "detunings", det)

    def __len__(self) -> int:
        return self.detunings.shape[0]

    @property
    def n_atoms(self) -> int:
        return len(self)

    def atom(self, index: int) -> Atom:
        return Atom(self.positions[index], float(self.detunings[index]))

    def with_schedule(self, schedule: FieldSchedule) -> "Ensemble":
        return replace(self, schedule=schedule)

    def with_flip(self, flip_time: float) -> "Ensemble":
        return self.with_schedule(FieldSchedule((flip_time,), self.schedule.initial_sign))


def sample_ensemble(
    n_atoms: int,
    geometry: Cylinder | None = None,
    broadening: Broadening | None = None,
    seed: int = 0,
) -> Ensemble:
    """Draw i.i.d. atoms uniformly in ``geometry`` with detunings from ``broadening``."""
    if int(n_atoms) != n_atoms or n_atoms < 2:
        raise InvalidParameterError(f"n_atoms must be an integer >= 2, got {n_atoms!r}")
    geometry = geometry or Cylinder()
    broadening = broadening or Broadening()
    rng = np.random.default_rng(seed)
    positions = geometry.sample(int(n_atoms), rng)
    detunings = broadening.sample(int(n_atoms), rng)
    return Ensemble(positions, detunings, geometry, FieldSchedule(), seed)


def _check_index(ensemble: Ensemble, atom_index: int) -> None:
    if not 0 <= atom_index < len(ensemble):
        raise IndexError(f"atom index {atom_index} out of range for {len(ensemble)} atoms")


def accumulated_phase(ensemble: Ensemble, atom_index: int, t0: float, t1: float) -> float:
    """Phase omega_n * integral(sign) picked up by atom ``atom_index`` over [t0, t1]."""
    _check_index(ensemble, atom_index)
    if t1 < t0:
        raise TemporalOrderError(f"t1={t1} precedes t0={t0}")
    return float(ensemble.detunings[atom_index] * ensemble.schedule.signed_time(t0, t1))


def _direction_matrix(k_as) -> np.ndarray:
    k_as = np.asarray(k_as, dtype=float)
    if k_as.shape[-1] != 3:
        raise InvalidParameterError("k vectors must be 3-vectors")
    return k_as


def amplitudes(ensemble: Ensemble, wave: SpinWave, k_as, times) -> np.ndarray:
    """Anti-Stokes amplitudes on a grid of directions x times.

    ``k_as`` has shape (3,) or (M, 3); ``times`` is scalar or (T,).  Returns an
    array of shape (M, T) with the singleton axes squeezed like the inputs.
    """
    k = _direction_matrix(k_as)
    t = np.asarray(times, dtype=float)
    if np.any(t < wave.creation_time):
        raise TemporalOrderError("readout time precedes spin-wave creation")
    kk = np.atleast_2d(k) + wave.k_stokes  # (M, 3)
    tt = np.atleast_1d(t)
    spatial = np.exp(-1j * (ensemble.positions @ kk.T))  # (N_A, M)
    elapsed = ensemble.schedule.signed_time(wave.creation_time, tt)  # (T,)
    temporal = np.exp(-1j * np.outer(ensemble.detunings, elapsed))  # (N_A, T)
    out = spatial.T @ temporal / len(ensemble)  # (M, T)
    if k.ndim == 1:
        out = out[0]
    if t.ndim == 0:
        out = out[..., 0]
    return out


def anti_stokes_amplitude(ensemble: Ensemble, wave: SpinWave, k_as, t: float) -> complex:
    """Normalised emission amplitude of ``wave`` into direction ``k_as`` at time ``t``."""
    if t < wave.creation_time:
        raise TemporalOrderError(f"readout at t={t} precedes creation at {wave.creation_time}")
    return complex(amplitudes(ensemble, wave, k_as, float(t)))


def rephasing_times(waves: Sequence[SpinWave], schedule: FieldSchedule) -> list[float]:
    """Echo time 2T - t_i of each wave under a single flip at T."""
    if len(schedule.flip_times) != 1:
        raise UnsupportedScheduleError(
            f"need exactly one flip, schedule has {len(schedule.flip_times)}"
        )
    (flip,) = schedule.flip_times
    out = []
    for w in waves:
        if w.creation_time >= flip:
            raise TemporalOrderError(
                f"wave created at {w.creation_time} is not before the flip at {flip}"
            )
        out.append(2.0 * flip - w.creation_time)
    return out


def random_directions(n: int, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` wave vectors uniform on the sphere of radius ``magnitude``."""
    v = rng.normal(size=(n, 3))
    return magnitude * v / np.linalg.norm(v, axis=1, keepdims=True)


def directionality_ratio(
    ensemble: Ensemble, wave: SpinWave, t: float, n_probe: int = 100, seed: int = 0
) -> float:
    """Phase-matched emission |A(-k_S)|^2 over its mean across random directions."""
    if n_probe < 10:
        raise InvalidParameterError("n_probe must be at least 10")
    rng = np.random.default_rng(seed)
    ks = np.linalg.norm(wave.k_stokes)
    probes = random_directions(n_probe, ks, rng)
    peak = abs(anti_stokes_amplitude(ensemble, wave, -wave.k_stokes, t)) ** 2
    background = np.mean(np.abs(amplitudes(ensemble, wave, probes, float(t))) ** 2)
    return float(peak / background)

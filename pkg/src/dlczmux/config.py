"""Flat JSON run configuration shared by all CLI subcommands."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .budget import Cavity, EmissionParams, ProtocolParams, max_p_for_error
from .errors import ConfigError, DlczError
from .spinwave import DEFAULT_K, Broadening, Cylinder

DEFAULT_N_GRID = (1, 10, 100, 500)


@dataclass(frozen=True)
class RunConfig:
    # protocol
    epsilon: float = 0.01
    n_modes: int = 500
    l0: float = 100e3
    fiber_speed: float = 2e8
    attenuation: float = 0.2
    gamma_inh: float = 1e6
    eta_detect: float = 0.5
    eta_memory0: float = 0.5
    tau_fast: float = 2.4e-3
    tau_slow: float = 0.24
    fast_weight: float = 0.5
    # emission / cavity; p = null means budgeted from epsilon for each N
    p: float | None = None
    beta_s: float = 1e-4
    finesse: float = 100.0
    cavity_length: float = 0.03
    statistics: str = "thermal"
    # ensemble / echo timeline
    n_atoms: int = 10_000
    ensemble_length: float = 10e-3
    ensemble_radius: float = 1e-3
    broadening: str = "uniform"
    k_magnitude: float = DEFAULT_K
    wave_times: tuple[float, ...] = (1e-6, 2e-6, 3e-6)
    flip_time: float = 10e-6
    time_step: float | None = None
    t_end: float | None = None
    # Monte Carlo
    trials: int = 10_000
    error_trials: int = 1_000_000
    swap_levels: int = 1
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "wave_times", tuple(float(t) for t in self.wave_times))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))

    # -- domain objects ------------------------------------------------------

    def protocol(self, n_modes: int | None = None) -> ProtocolParams:
        return ProtocolParams(
            epsilon=self.epsilon,
            n_modes=self.n_modes if n_modes is None else n_modes,
            l0=self.l0,
            fiber_speed=self.fiber_speed,
            attenuation=self.attenuation,
            gamma_inh=self.gamma_inh,
            eta_detect=self.eta_detect,
            eta_memory0=self.eta_memory0,
            tau_fast=self.tau_fast,
            tau_slow=self.tau_slow,
            fast_weight=self.fast_weight,
        )

    def cavity(self) -> Cavity:
        return Cavity(self.cavity_length, self.finesse)

    @property
    def ratio(self) -> float:
        return 1.0 / self.finesse

    def emission(self, n_modes: int | None = None) -> EmissionParams:
        n = self.n_modes if n_modes is None else n_modes
        p = self.p if self.p is not None else max_p_for_error(self.epsilon, n, self.ratio)
        return EmissionParams.with_cavity(p, self.beta_s, self.cavity())

    def geometry(self) -> Cylinder:
        return Cylinder(self.ensemble_length, self.ensemble_radius)

    def broadening_spec(self) -> Broadening:
        return Broadening(self.gamma_inh, self.broadening)

    def validate(self) -> "RunConfig":
        try:
            self.protocol()
            self.emission()
            self.geometry()
            self.broadening_spec()
        except DlczError as exc:
            raise ConfigError(str(exc)) from exc
        if self.statistics not in ("thermal", "poisson"):
            raise ConfigError(f"statistics must be 'thermal' or 'poisson', got {self.statistics!r}")
        for name in ("trials", "error_trials", "workers", "n_atoms"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.swap_levels < 0:
            raise ConfigError("swap_levels must be >= 0")
        if not self.n_grid or min(self.n_grid) < 1:
            raise ConfigError("n_grid must hold integers >= 1")
        if self.time_step is not None and not self.time_step > 0:
            raise ConfigError("time_step must be positive")
        if self.k_magnitude <= 0 or not math.isfinite(self.k_magnitude):
            raise ConfigError("k_magnitude must be positive")
        return self

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wave_times"] = list(self.wave_times)
        d["n_grid"] = list(self.n_grid)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key: {key!r}")
        try:
            return cls(**data).validate()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    def override(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **changes).validate()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed override: {exc}") from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return RunConfig.from_dict(data)

"""Monte Carlo checks of the error budget and of link / chain waiting times.

Photon statistics
-----------------
Each write pulse puts ``n`` Stokes photons into the detected mode, thermally
distributed with mean ``p`` (``statistics="poisson"`` is available for
comparison).  Undetected-direction emissions leave ``Poisson(p/beta_s - p)``
further atoms in ``s``.

Heralding is in the weak-detection limit: every detected-mode photon is an
independent, low-probability chance to click, so a bin holding ``n`` photons
is heralded with weight proportional to ``n``.  With thermal statistics this
gives a mean of exactly ``2p`` extra same-bin photons per herald.

Readout of the heralded bin ``k`` picks up
  * the ``n_k - 1`` other detected-mode photons of bin ``k``, and
  * a ``Binomial(pool, beta_as)`` number of photons from the ``pool`` of atoms
    in ``s`` created in every other bin (those spin waves are out of phase).
Atoms from undetected directions in bin ``k`` itself are in phase but emit
into their own directions, so they are not counted.

The error estimator reports the mean number of noise photons per heralded
readout, which is the quantity the first-order budget adds up, together with
the fraction of readouts with at least one noise photon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import budget
from .budget import EmissionParams, ProtocolParams
from .errors import (
    InsufficientHeraldsError,
    InvalidParameterError,
    NonTerminationError,
    PreconditionError,
)
from .streams import DEFAULT_BLOCK, map_blocks

STATISTICS = ("thermal", "poisson")
MIN_HERALDS = 100

# stream key prefixes, one per estimator
KEY_ERROR, KEY_LINK, KEY_CHAIN, KEY_SWEEP = 1, 2, 3, 4


@dataclass(frozen=True)
class TrialConfig:
    em: EmissionParams
    n_modes: int
    n_trials: int
    seed: int = 0
    statistics: str = "thermal"

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidParameterError("n_modes must be an integer >= 1")
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise InvalidParameterError("n_trials must be an integer >= 1")
        if self.statistics not in STATISTICS:
            raise InvalidParameterError(f"statistics must be one of {STATISTICS}")


class BinRecord(NamedTuple):
    bin_index: int
    detected_stokes: int
    unwanted_excitations: int


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    std_error: float
    n_samples: int
    analytic: float
    # error estimator only: fraction of heralded readouts with >= 1 noise photon
    any_noise: float | None = None
    any_noise_se: float | None = None

    def __post_init__(self):
        if self.std_error < 0 or self.n_samples < 1:
            raise InvalidParameterError("need std_error >= 0 and n_samples >= 1")

    def z_score(self, target: float | None = None) -> float:
        target = self.analytic if target is None else target
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.std_error


@dataclass(frozen=True)
class LinkConfig:
    protocol: ProtocolParams
    em: EmissionParams
    swap_levels: int = 0

    def __post_init__(self):
        if int(self.swap_levels) != self.swap_levels or self.swap_levels < 0:
            raise InvalidParameterError("swap_levels must be a non-negative integer")
        cap = budget.mode_capacity(self.protocol)
        if self.protocol.n_modes > cap:
            raise InvalidParameterError(
                f"{self.protocol.n_modes} modes do not fit one communication window "
                f"(capacity {cap})"
            )

    @property
    def total_distance(self) -> float:
        return self.protocol.l0 * 2**self.swap_levels

    @property
    def window(self) -> float:
        return budget.communication_time(self.protocol.l0, self.protocol.fiber_speed)

    def with_modes(self, n_modes: int, p: float | None = None) -> "LinkConfig":
        em = self.em if p is None else replace(self.em, p=p)
        return replace(self, protocol=replace(self.protocol, n_modes=n_modes), em=em)


# -- photon-number sampling --------------------------------------------------


def _unwanted_mean(em: EmissionParams) -> float:
    mu = em.p / em.beta_s - em.p
    if mu < 0:
        raise InvalidParameterError("p/beta_s - p must be non-negative")
    return mu


def _sample_counts(m: float, size, statistics: str, rng: np.random.Generator) -> np.ndarray:
    if statistics == "thermal":
        return rng.geometric(1.0 / (1.0 + m), size) - 1
    return rng.poisson(m, size)


def _herald_probability(m: float, statistics: str) -> float:
    """P(n >= 1) for one bin."""
    if statistics == "thermal":
        return m / (1.0 + m)
    return -math.expm1(-m)


def _sample_nonzero_counts(m: float, size: int, statistics: str, rng) -> np.ndarray:
    """Photon number of a bin conditioned on n >= 1."""
    if statistics == "thermal":
        # geometric is memoryless: n | n>=1 is 1 + the same distribution
        return rng.geometric(1.0 / (1.0 + m), size)
    # first arrival of a rate-m Poisson process on [0, 1], conditioned to occur
    u = rng.random(size)
    t1 = -np.log1p(u * math.expm1(-m)) / m
    return 1 + rng.poisson(m * (1.0 - t1))


# -- per-trial protocol steps ------------------------------------------------


def simulate_write_sequence(cfg: TrialConfig, rng: np.random.Generator) -> list[BinRecord]:
    """Photon and excitation counts for the N write pulses of one trial."""
    mu = _unwanted_mean(cfg.em)
    detected = _sample_counts(cfg.em.p, cfg.n_modes, cfg.statistics, rng)
    unwanted = rng.poisson(mu, cfg.n_modes)
    return [BinRecord(i, int(d), int(u)) for i, (d, u) in enumerate(zip(detected, unwanted))]


def simulate_readout(
    records: Sequence[BinRecord], target_bin: int, em: EmissionParams, rng: np.random.Generator
) -> tuple[bool, int]:
    """Read out the spin wave of a heralded bin; returns (good_photon, noise_photons)."""
    target = records[target_bin]
    if target.detected_stokes < 1:
        raise PreconditionError(f"bin {target_bin} holds no heralded Stokes photon")
    pool = sum(
        r.detected_stokes + r.unwanted_excitations
        for i, r in enumerate(records)
        if i != target_bin
    )
    noise = (target.detected_stokes - 1) + int(rng.binomial(pool, em.beta_as))
    return True, noise


def simulate_trial(cfg: TrialConfig, rng: np.random.Generator) -> list[tuple[int, int]]:
    """One write sequence, read out at every heralded bin.

    Returns ``(herald_weight, noise_photons)`` per heralded bin, with the
    weak-herald weight equal to the bin's detected-mode photon number.
    Bins without a detected-mode photon never appear.
    """
    records = simulate_write_sequence(cfg, rng)
    out = []
    for r in records:
        if r.detected_stokes >= 1:
            _, noise = simulate_readout(records, r.bin_index, cfg.em, rng)
            out.append((r.detected_stokes, noise))
    return out


# -- error-rate estimator ----------------------------------------------------


def expected_heralds(cfg: TrialConfig) -> float:
    return cfg.n_trials * cfg.n_modes * _herald_probability(cfg.em.p, cfg.statistics)


def _error_block(cfg: TrialConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    em, n_modes = cfg.em, cfg.n_modes
    m, mu = em.p, _unwanted_mean(em)
    x = _herald_probability(m, cfg.statistics)
    heralded = rng.binomial(n_modes, x, count)
    n_h = int(heralded.sum())
    sums = np.zeros(8)
    if n_h == 0:
        return sums
    trial = np.repeat(np.arange(count), heralded)
    n = _sample_nonzero_counts(m, n_h, cfg.statistics, rng)
    own = n + rng.poisson(mu, n_h)
    # bins without a herald hold no detected-mode photon, only unwanted atoms
    rest = rng.poisson(mu * (n_modes - heralded))
    total = np.bincount(trial, weights=own, minlength=count).astype(np.int64) + rest
    pool = total[trial] - own
    noise = (n - 1) + rng.binomial(pool, em.beta_as)
    w = n.astype(float)
    y = noise.astype(float)
    z = (noise >= 1).astype(float)
    w2 = w * w
    sums[:] = [n_h, w.sum(), (w * y).sum(), (w2 * y * y).sum(), (w2 * y).sum(),
               w2.sum(), (w * z).sum(), (w2 * z).sum()]
    return sums


def _ratio_se(sw, swy, sw2y2, sw2y, sw2):
    r = swy / sw
    var = max(sw2y2 - 2 * r * sw2y + r * r * sw2, 0.0)
    return r, math.sqrt(var) / sw


def estimate_error_rate(
    cfg: TrialConfig, workers: int = 1, block_size: int = DEFAULT_BLOCK
) -> RateEstimate:
    """Mean noise photons per heralded readout over ``cfg.n_trials`` write sequences.

    ``analytic`` is the first-order total from :func:`budget.error_budget`.
    """
    exp_h = expected_heralds(cfg)
    if exp_h < MIN_HERALDS:
        raise InsufficientHeraldsError(
            f"only {exp_h:.3g} heralded bins expected; need at least {MIN_HERALDS}"
        )
    blocks = map_blocks(
        lambda count, rng: _error_block(cfg, count, rng),
        cfg.n_trials,
        cfg.seed,
        (KEY_ERROR, cfg.n_modes),
        block_size,
        workers,
    )
    s = np.sum(blocks, axis=0)
    n_h, sw, swy, sw2y2, sw2y, sw2, swz, sw2z = s
    if n_h == 0:
        raise InsufficientHeraldsError("no heralded bins occurred")
    mean, se = _ratio_se(sw, swy, sw2y2, sw2y, sw2)
    any_mean, any_se = _ratio_se(sw, swz, sw2z, sw2z, sw2)
    analytic = budget.error_budget(cfg.em, cfg.n_modes).total
    return RateEstimate(
        float(mean), float(se), int(n_h), analytic, float(any_mean), float(any_se)
    )


# -- elementary link -----------------------------------------------------------


def attempt_probability(cfg: LinkConfig) -> float:
    """Herald probability of one write pulse: photon reaches the midpoint and clicks."""
    pr = cfg.protocol
    return cfg.em.p * budget.fiber_transmission(pr.l0 / 2, pr.attenuation) * pr.eta_detect


def window_success_probability(cfg: LinkConfig) -> float:
    pa = attempt_probability(cfg)
    if pa >= 1.0:
        return 1.0
    return -math.expm1(cfg.protocol.n_modes * math.log1p(-pa))


def mean_link_time(cfg: LinkConfig) -> float:
    """Closed-form mean waiting time: window / P_win."""
    p_win = window_success_probability(cfg)
    if p_win <= 0:
        raise NonTerminationError("link success probability is zero; mean time is infinite")
    return cfg.window / p_win


def simulate_elementary_link(cfg: LinkConfig, rng: np.random.Generator, size=None):
    """Time until heralded entanglement of one elementary link, in seconds."""
    if cfg.swap_levels != 0:
        raise PreconditionError("simulate_elementary_link needs swap_levels == 0")
    p_win = window_success_probability(cfg)
    if p_win <= 0:
        raise NonTerminationError(
            "attempt probability is zero; the link would never be heralded"
        )
    windows = rng.geometric(p_win, size)
    return windows * cfg.window


# -- swap chain ----------------------------------------------------------------

MAX_SWAP_ROUNDS = 1_000_000


def swap_success_probability(cfg: LinkConfig, storage_time: float) -> float:
    return cfg.protocol.eta_detect * budget.memory_recall_efficiency(cfg.protocol, storage_time)


def _level_span_time(cfg: LinkConfig, level: int) -> float:
    # swap outcome travels from the middle node to the ends of a level-k pair
    return budget.communication_time(cfg.protocol.l0 * 2 ** (level - 1), cfg.protocol.fiber_speed)


def _chain_time(cfg: LinkConfig, level: int, p_win: float, rng) -> float:
    if level == 0:
        return int(rng.geometric(p_win)) * cfg.window
    elapsed = 0.0
    for _ in range(MAX_SWAP_ROUNDS):
        ta = _chain_time(cfg, level - 1, p_win, rng)
        tb = _chain_time(cfg, level - 1, p_win, rng)
        done = max(ta, tb) + _level_span_time(cfg, level)
        # earlier sub-link idles until the later one exists, on top of its herald window
        storage = abs(ta - tb) + cfg.window
        if rng.random() < swap_success_probability(cfg, storage):
            return elapsed + done
        elapsed += done
    raise NonTerminationError(f"no successful swap at level {level} in {MAX_SWAP_ROUNDS} rounds")


def simulate_chain(cfg: LinkConfig, rng: np.random.Generator) -> float:
    """Time until end-to-end entanglement over 2**swap_levels elementary links.

    A failed swap discards both sub-links, which are then regenerated.
    """
    if cfg.swap_levels < 1:
        raise PreconditionError("simulate_chain needs swap_levels >= 1")
    p_win = window_success_probability(cfg)
    if p_win <= 0:
        raise NonTerminationError("elementary links are never heralded")
    # storage is at least one herald window, so this bounds every swap
    if swap_success_probability(cfg, cfg.window) <= 0:
        raise NonTerminationError("swap success probability is zero (memory fully decayed)")
    return _chain_time(cfg, cfg.swap_levels, p_win, rng)


def chain_time_reference(cfg: LinkConfig) -> float:
    """Closed-form mean for one swap level with certain swaps, else nan."""
    if cfg.swap_levels != 1:
        return math.nan
    pr = cfg.protocol
    certain = pr.eta_detect == 1 and pr.eta_memory0 == 1 and math.isinf(pr.tau_fast)
    if not certain:
        return math.nan
    p = window_success_probability(cfg)
    e_max = 2.0 / p - 1.0 / (1.0 - (1.0 - p) ** 2)
    return e_max * cfg.window + _level_span_time(cfg, 1)


# -- aggregate estimators ------------------------------------------------------


def _moments_block(sample, count, rng):
    x = np.asarray(sample(count, rng), dtype=float)
    return np.array([x.size, x.sum(), (x * x).sum()])


def _window_block(cfg: LinkConfig, count: int, rng) -> list[int]:
    # integer window counts keep sums exact; scaled by the window length later
    w = rng.geometric(window_success_probability(cfg), count).astype(np.int64)
    return [count, int(w.sum()), int((w * w).sum())]


def _estimate_from_moments(blocks, analytic: float, scale: float = 1.0) -> RateEstimate:
    n = sum(b[0] for b in blocks)
    s = sum(b[1] for b in blocks)
    s2 = sum(b[2] for b in blocks)
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return RateEstimate(float(scale * mean), float(scale * math.sqrt(var / n)), int(n), analytic)


def _link_estimate(cfg: LinkConfig, n_trials: int, seed: int, key, workers: int) -> RateEstimate:
    analytic = mean_link_time(cfg)  # raises when the link never succeeds
    blocks = map_blocks(
        lambda count, rng: _window_block(cfg, count, rng), n_trials, seed, key, workers=workers
    )
    return _estimate_from_moments(blocks, analytic, cfg.window)


def estimate_link_time(
    cfg: LinkConfig, n_trials: int, seed: int = 0, workers: int = 1
) -> RateEstimate:
    return _link_estimate(cfg, n_trials, seed, (KEY_LINK, cfg.protocol.n_modes), workers)


def estimate_chain_time(
    cfg: LinkConfig, n_trials: int, seed: int = 0, workers: int = 1
) -> RateEstimate:
    def sample(count, rng):
        return [simulate_chain(cfg, rng) for _ in range(count)]

    blocks = map_blocks(
        lambda count, rng: _moments_block(sample, count, rng),
        n_trials,
        seed,
        (KEY_CHAIN, cfg.protocol.n_modes),
        block_size=4096,
        workers=workers,
    )
    return _estimate_from_moments(blocks, chain_time_reference(cfg))


class SweepRow(NamedTuple):
    n_modes: int
    p: float
    mc_rate: float  # 1/s
    mc_rate_se: float
    analytic_scaling: float
    mc_normalized: float
    mc_normalized_se: float
    analytic_normalized: float


def rate_sweep(
    base: LinkConfig,
    n_values: Sequence[int],
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> list[SweepRow]:
    """Elementary-link rate versus N with p re-budgeted for each N.

    Rates are normalised to N = 1, which is simulated even when absent from
    ``n_values``.
    """
    eps = base.protocol.epsilon
    ratio = base.em.ratio
    raw = {}
    for n in sorted(set(n_values) | {1}):
        p = budget.max_p_for_error(eps, n, ratio)
        cfg = base.with_modes(n, p)
        est = _link_estimate(cfg, trials, seed, (KEY_SWEEP, n), workers)
        rate = 1.0 / est.mean
        rate_se = est.std_error / est.mean**2
        raw[n] = (p, rate, rate_se, budget.multimode_rate_scaling(eps, n, ratio))

    _, r1, se1, a1 = raw[1]
    rows = []
    for n in n_values:
        p, rate, se, analytic = raw[n]
        norm = rate / r1
        if n == 1:
            norm_se = 0.0
        else:
            norm_se = norm * math.hypot(se / rate, se1 / r1)
        rows.append(SweepRow(n, p, rate, se, analytic, norm, norm_se, analytic / a1))
    return rows

"""Temporally multiplexed DLCZ quantum repeater: spin-wave echoes, error budget, Monte Carlo."""

from .budget import (
    Cavity,
    EmissionParams,
    ProtocolParams,
    cavity_spectrum,
    communication_time,
    error_budget,
    fiber_transmission,
    max_p_for_error,
    mean_unwanted_excitations,
    memory_recall_efficiency,
    mode_capacity,
    multimode_rate_scaling,
    purcell_ratio,
)
from .montecarlo import (
    BinRecord,
    LinkConfig,
    RateEstimate,
    TrialConfig,
    estimate_error_rate,
    rate_sweep,
    simulate_chain,
    simulate_elementary_link,
    simulate_readout,
    simulate_write_sequence,
)
from .spinwave import (
    Broadening,
    Cylinder,
    Ensemble,
    FieldSchedule,
    SpinWave,
    accumulated_phase,
    anti_stokes_amplitude,
    directionality_ratio,
    rephasing_times,
    sample_ensemble,
)

__version__ = "0.1.0"

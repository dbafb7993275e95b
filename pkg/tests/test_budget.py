import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlczmux.budget import (
    Cavity,
    EmissionParams,
    ProtocolParams,
    cavity_spectrum,
    communication_time,
    error_budget,
    exceeds_useful_modes,
    fiber_transmission,
    max_p_for_error,
    mean_unwanted_excitations,
    memory_recall_efficiency,
    mode_capacity,
    multimode_rate_scaling,
    purcell_ratio,
    speedup_vs_single_mode,
)
from dlczmux.errors import InvalidParameterError

C = 2.99792458e8


@pytest.mark.parametrize("finesse", [93, 240, 1])
def test_purcell_ratio_is_finesse(finesse):
    assert purcell_ratio(Cavity(0.05, finesse)) == finesse


def test_cavity_spectrum_values():
    spec = cavity_spectrum(Cavity(0.03, 100))
    assert spec.fsr == pytest.approx(9.993e9, rel=1e-4)
    assert spec.peak_width == pytest.approx(9.993e7, rel=1e-4)
    assert spec.fsr == pytest.approx(C / 0.03, rel=1e-15)


@given(st.floats(1e-3, 10.0), st.floats(1.0, 1e5))
def test_cavity_spectrum_identities(length, finesse):
    a = cavity_spectrum(Cavity(length, finesse))
    b = cavity_spectrum(Cavity(2 * length, finesse))
    assert a.fsr / a.peak_width == pytest.approx(finesse, rel=1e-12)
    assert b.fsr == pytest.approx(a.fsr / 2, rel=1e-12)
    assert b.peak_width == pytest.approx(a.peak_width / 2, rel=1e-12)


def test_cavity_validation():
    with pytest.raises(InvalidParameterError):
        Cavity(0.0, 10)
    with pytest.raises(InvalidParameterError):
        Cavity(0.1, 0.5)


def test_mean_unwanted_excitations():
    assert mean_unwanted_excitations(EmissionParams(1e-2, 1e-4, 1e-4)) == pytest.approx(100)
    assert mean_unwanted_excitations(EmissionParams(0.0, 1e-4, 1e-6)) == 0
    assert mean_unwanted_excitations(EmissionParams(0.3, 1.0, 0.5)) == 0.3


def test_emission_validation():
    with pytest.raises(InvalidParameterError):
        EmissionParams(1.5, 1e-4, 1e-4)
    with pytest.raises(InvalidParameterError):
        EmissionParams(0.01, 1e-4, 1e-3)
    with pytest.raises(InvalidParameterError):
        EmissionParams(0.01, 0.0, 0.0)


def test_saturation_warning():
    em = EmissionParams(1e-2, 1e-4, 1e-6)
    with pytest.warns(RuntimeWarning):
        em.check_ensemble(50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        em.check_ensemble(10_000)


def test_with_cavity_sets_ratio():
    em = EmissionParams.with_cavity(1e-3, 1e-4, Cavity(0.03, 100))
    assert em.ratio == pytest.approx(0.01)


def test_error_budget_examples():
    free = error_budget(EmissionParams(1e-3, 1e-4, 1e-4), 100)
    assert free.total == pytest.approx(0.101, rel=1e-12)
    cav = error_budget(EmissionParams(1e-3, 1e-4, 1e-6), 100)
    assert cav.total == pytest.approx(2.99e-3, rel=1e-12)
    single = error_budget(EmissionParams(1e-3, 1e-4, 1e-6), 1)
    assert single.cross_bin == 0 and single.total == 2e-3


@given(st.integers(1, 10_000), st.floats(0.0, 1.0))
def test_reduction_to_n_plus_one_p(n, p):
    em = EmissionParams(p, 0.5, 0.5)
    assert error_budget(em, n).total == pytest.approx((n + 1) * p, rel=1e-12, abs=1e-300)


def test_max_p_examples():
    assert max_p_for_error(0.05, 1, 1.0) == 0.025
    assert max_p_for_error(0.05, 99, 1.0) == pytest.approx(5e-4, rel=1e-12)
    assert max_p_for_error(0.01, 500, 0.01) == pytest.approx(0.01 / 6.99, rel=1e-12)
    assert max_p_for_error(0.01, 500, 0.01) == pytest.approx(1.431e-3, rel=1e-3)


@given(st.floats(1e-6, 0.99), st.integers(1, 10_000), st.floats(1e-4, 1.0))
def test_max_p_round_trip(eps, n, ratio):
    p = max_p_for_error(eps, n, ratio)
    em = EmissionParams(p, 1e-2, 1e-2 * ratio)
    assert abs(error_budget(em, n).total - eps) <= 1e-12


def test_rate_scaling_examples():
    assert multimode_rate_scaling(0.01, 1, 0.3) == pytest.approx(0.005, rel=1e-15)
    assert multimode_rate_scaling(0.01, 500, 0.01) == pytest.approx(5 / 6.99, rel=1e-12)
    assert multimode_rate_scaling(0.01, 500, 0.01) == pytest.approx(0.7153, abs=1e-4)
    assert multimode_rate_scaling(0.01, 10**6, 0.01) == pytest.approx(1.0, rel=0.01)


@given(st.integers(1, 10_000), st.floats(0.0, 1.0), st.floats(1e-4, 0.9))
def test_rate_is_n_times_budgeted_p(n, ratio, eps):
    assert multimode_rate_scaling(eps, n, ratio) == pytest.approx(
        n * max_p_for_error(eps, n, ratio), rel=1e-12
    )


@pytest.mark.parametrize("ratio", [0.0, 0.001, 0.01, 0.5, 1.0, 1.9])
def test_rate_strictly_increasing_below_ratio_two(ratio):
    n = np.arange(1, 5000)
    r = np.array([multimode_rate_scaling(0.01, int(k), ratio) for k in n])
    assert np.all(np.diff(r) > 0)


@pytest.mark.parametrize("finesse", [10, 93, 100, 240])
def test_asymptote_bound(finesse):
    eps = 0.01
    n = 100 * finesse
    gap = abs(multimode_rate_scaling(eps, n, 1 / finesse) - eps * finesse)
    assert gap <= eps * finesse * (2 * finesse / n)


@given(st.integers(1, 10**6), st.floats(1.0, 1e4))
def test_speedup_bounds(n, finesse):
    assert speedup_vs_single_mode(n, 1 / finesse) <= 2 * finesse * (1 + 1e-12)
    assert speedup_vs_single_mode(n, 1.0) <= 2 + 1e-12


def test_mode_capacity():
    base = ProtocolParams(l0=100e3, fiber_speed=2e8, gamma_inh=1e6)
    assert mode_capacity(base) == 500
    assert mode_capacity(ProtocolParams(gamma_inh=0.0)) == 0
    assert mode_capacity(ProtocolParams(gamma_inh=3e6)) == 1500


def test_fiber_transmission():
    assert fiber_transmission(1000e3, 0.2) == pytest.approx(1e-20, rel=1e-12)
    assert fiber_transmission(0.0, 0.2) == 1.0
    assert fiber_transmission(50e3, 0.2) == pytest.approx(0.1, rel=1e-12)


@given(st.floats(0, 500e3), st.floats(0, 500e3), st.floats(0, 1.0))
def test_transmission_multiplicative(a, b, att):
    ta, tb = fiber_transmission(a, att), fiber_transmission(b, att)
    assert fiber_transmission(a + b, att) == pytest.approx(ta * tb, rel=1e-12, abs=1e-300)


def test_communication_time():
    assert communication_time(100e3, 2e8) == 500e-6
    assert communication_time(0.0, 2e8) == 0.0
    assert communication_time(200e3, 2e8) == pytest.approx(1e-3, rel=1e-15)
    with pytest.raises(InvalidParameterError):
        communication_time(1.0, 0.0)


def test_memory_recall_efficiency():
    params = ProtocolParams(eta_memory0=0.5, tau_fast=1e-3, tau_slow=0.1)
    assert memory_recall_efficiency(params, 0.0) == 0.5
    assert memory_recall_efficiency(params, 1e3) == 0.0
    assert memory_recall_efficiency(params, 1e-3) == pytest.approx(
        0.5 * 0.5 * (math.exp(-1) + math.exp(-0.01)), rel=1e-12
    )
    assert memory_recall_efficiency(params, 1e-3) == pytest.approx(0.3395, abs=1e-4)
    with pytest.raises(InvalidParameterError):
        memory_recall_efficiency(params, -1.0)


def test_protocol_defaults_and_validation():
    p = ProtocolParams()
    assert (p.epsilon, p.l0, p.fiber_speed, p.attenuation) == (0.01, 100e3, 2e8, 0.2)
    assert p.tau_slow / p.tau_fast == pytest.approx(100)
    bad_values = (
        dict(epsilon=0), dict(n_modes=0), dict(eta_detect=0), dict(tau_fast=1, tau_slow=0.5)
    )
    for bad in bad_values:
        with pytest.raises(InvalidParameterError):
            ProtocolParams(**bad)


def test_useful_modes_flag():
    assert not exceeds_useful_modes(500, 100)
    assert exceeds_useful_modes(501, 100)

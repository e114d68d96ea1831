"""Propagator tests: analytic limits, spectral oracles, unitarity, substep
convergence, and the finite-window imbalance average."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from drivenbjj.dynamics import (
    AveragingWindow,
    PropagatorConfig,
    direct_api,
    observable_series,
    propagate,
)
from drivenbjj.model import (
    ACSParams,
    DriveParams,
    ModelParams,
    QuantumState,
    acs_state,
    basis_state,
    expect_jz,
    hamiltonian_at,
    reduced_density,
)

from conftest import E1, E2, OMEGA, PERIOD, model, random_state

UNDRIVEN = DriveParams(0.0, 0.0, OMEGA, 0.0)


def test_zero_interval_is_identity(cfg):
    s = basis_state(3, 0.5)
    assert propagate(s, 2.5, 2.5, model(3), UNDRIVEN, cfg) is s


def test_t1_before_t0_rejected(cfg):
    with pytest.raises(ValueError):
        propagate(basis_state(1, 0.5), 1.0, 0.0, model(1), UNDRIVEN, cfg)


def test_rabi_oscillation_single_particle(cfg):
    # H = -Jx for N = 1 has gap 1: the imbalance of |l, +1/2> follows cos(t)
    m = ModelParams(1, 0.0)
    s0 = basis_state(1, 0.5)
    for t in (0.3, 1.0, 2.7, 9.1):
        s = propagate(s0, 0.0, t, m, UNDRIVEN, cfg)
        assert expect_jz(s) == pytest.approx(math.cos(t), abs=1e-8)


def test_static_propagation_matches_spectral_oracle(cfg):
    m = model(2)
    h = hamiltonian_at(m, UNDRIVEN, 0.0)
    s0 = QuantumState(random_state(2, seed=1), 2)
    for t in (0.9, 7.3, 40.0):
        expected = expm(-1j * t * h) @ s0.amplitudes
        got = propagate(s0, 0.0, t, m, UNDRIVEN, cfg).amplitudes
        assert np.max(np.abs(got - expected)) < 1e-9


def test_norm_conserved_over_many_periods(cfg, drive):
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    s = propagate(s0, 0.0, 10_000 * PERIOD, model(2), drive, cfg)
    assert abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-10


def test_static_energy_conserved(cfg):
    m = model(4)
    h = hamiltonian_at(m, UNDRIVEN, 0.0)
    s0 = QuantumState(random_state(4, seed=2), 4)
    e0 = (s0.amplitudes.conj() @ h @ s0.amplitudes).real
    s = propagate(s0, 0.0, 1000.0, m, UNDRIVEN, cfg)
    e1 = (s.amplitudes.conj() @ h @ s.amplitudes).real
    assert abs(e1 - e0) < 1e-9


def test_substep_convergence(drive):
    # midpoint-exponential stepping is second order: successive halvings of
    # the substep shrink the imbalance change at t = 100 by a factor ~4
    m = model(20)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 20)
    v256, v512, v1024 = (
        expect_jz(propagate(s0, 0.0, 100.0, m, drive, PropagatorConfig(steps)))
        for steps in (256, 512, 1024)
    )
    assert abs(v256 - v512) < 1e-4
    ratio = abs(v256 - v512) / abs(v512 - v1024)
    assert 3.0 < ratio < 5.5


def test_observable_series_consistency(cfg, drive):
    m = model(4)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 4)
    series = observable_series(s0, 3 * PERIOD, m, drive, cfg, samples_per_period=8)
    assert series.t[0] == 0.0
    assert series.delta_rho[0] == pytest.approx(0.0, abs=1e-12)
    assert series.depletion[0] == pytest.approx(0.0, abs=1e-12)
    # each sample agrees with a fresh propagation to the same time
    for i in (5, 12, 24):
        s = propagate(s0, 0.0, series.t[i], m, drive, cfg)
        assert series.delta_rho[i] == pytest.approx(expect_jz(s), abs=1e-10)
        assert series.depletion[i] == pytest.approx(reduced_density(s)[3], abs=1e-10)


def test_averaging_window_validation():
    with pytest.raises(ValueError):
        AveragingWindow(-1.0, 10.0)
    with pytest.raises(ValueError):
        AveragingWindow(0.0, 0.0)
    w = AveragingWindow.whole_periods(PERIOD, 2, 5)
    assert w.periods_of(PERIOD) == (2, 5)
    with pytest.raises(ValueError):
        AveragingWindow(0.3 * PERIOD, 5 * PERIOD).periods_of(PERIOD)


def test_direct_api_null_single_harmonic(cfg):
    # f(t) = -f(t + T/2) forces a vanishing average for any initial state
    m = model(2)
    p = DriveParams(E1, 0.0, OMEGA, 0.9)
    w = AveragingWindow.whole_periods(PERIOD, 100, 10_000)
    s0 = acs_state(ACSParams(math.pi / 2, 0.7), 2)
    assert abs(direct_api(s0, w, m, p, cfg)) <= 2e-3


def test_direct_api_null_at_half_pi_phase(cfg):
    m = model(2)
    p = DriveParams(E1, E2, OMEGA, math.pi / 2)
    w = AveragingWindow.whole_periods(PERIOD, 100, 10_000)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    assert abs(direct_api(s0, w, m, p, cfg)) <= 2e-3


def test_direct_api_burn_in_invariance(cfg, drive):
    m = model(2)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    w1 = AveragingWindow.whole_periods(PERIOD, 1000, 5000)
    w2 = AveragingWindow.whole_periods(PERIOD, 2000, 5000)
    a1 = direct_api(s0, w1, m, drive, cfg)
    a2 = direct_api(s0, w2, m, drive, cfg)
    assert abs(a1 - a2) < 1e-3

"""Floquet-layer tests: monodromy properties, spectrum conventions, per-mode
imbalances (with frozen regression values for the default parameter set),
weights, and the decomposition identity against the direct average."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from drivenbjj.dynamics import AveragingWindow, PropagatorConfig, direct_api, propagate
from drivenbjj.floquet import (
    DegenerateSpectrumError,
    api_floquet,
    floquet_decomposition,
    floquet_spectrum,
    mode_api,
    mode_weights,
    monodromy,
    pair_modes,
)
from drivenbjj.model import (
    ACSParams,
    DriveParams,
    ModelParams,
    QuantumState,
    acs_state,
)

from conftest import E1, E2, OMEGA, PERIOD, model, random_state

# Per-mode quasi-energies and imbalances for N = 2, lambda = 5, E1 = 0.4,
# E2 = 0.2, omega = 0.5, phi = 0 at the default 256 substeps per period.
# Frozen from a converged run (1024 substeps agree to ~4e-6); regression
# guard for the spectrum conventions and the drive sign.
FROZEN_QE_N2_PHI0 = (0.130131627020691, 0.141216949590077, 0.228651423389235)
FROZEN_API_N2_PHI0 = (0.022129510153880, 0.345882644793234, -0.368012154947117)


def test_monodromy_unitary_and_matches_propagation(cfg, drive):
    m = model(3)
    u = monodromy(m, drive, cfg)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-10
    s = QuantumState(random_state(3, seed=3), 3)
    direct = propagate(s, 0.0, PERIOD, m, drive, cfg).amplitudes
    assert np.max(np.abs(u @ s.amplitudes - direct)) < 1e-9


def test_monodromy_undriven_single_particle(cfg):
    # H = -Jx gives U(T) = exp(+i Jx T); quasi-energies fold to +-1/2
    p = DriveParams(0.0, 0.0, 2.7, 0.0)
    m = ModelParams(1, 0.0)
    u = monodromy(m, p, cfg)
    jx = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.max(np.abs(u - expm(1j * p.period * jx))) < 1e-12
    d = floquet_decomposition(m, p, cfg)
    assert np.allclose(d.quasi_energies, [-0.5, 0.5], atol=1e-12)


def test_spectrum_identity_matrix():
    d = floquet_spectrum(np.eye(4, dtype=complex), OMEGA)
    assert np.allclose(d.quasi_energies, 0.0, atol=1e-14)
    assert d.degenerate


def test_spectrum_dimension_and_zone(cfg, drive):
    d = floquet_decomposition(model(2), drive, cfg)
    assert len(d.quasi_energies) == 3
    assert np.all(d.quasi_energies >= -OMEGA / 2)
    assert np.all(d.quasi_energies < OMEGA / 2)
    assert np.all(np.diff(d.quasi_energies) >= 0)
    # orthonormal modes, gauge: largest component real positive
    gram = d.modes0.conj().T @ d.modes0
    assert np.max(np.abs(gram - np.eye(3))) < 1e-10
    for alpha in range(3):
        lead = d.modes0[np.argmax(np.abs(d.modes0[:, alpha])), alpha]
        assert abs(lead.imag) < 1e-12 and lead.real > 0


def test_spectrum_equal_at_mirrored_phase(cfg):
    p = DriveParams(E1, E2, OMEGA, 0.9)
    da = floquet_decomposition(model(2), p, cfg)
    db = floquet_decomposition(model(2), p.mirrored(), cfg)
    assert np.max(np.abs(da.quasi_energies - db.quasi_energies)) < 1e-9


def test_spectrum_refinement(cfg, drive):
    # second-order stepping: 4x the substeps moves quasi-energies ~ (dt)^2
    d1 = floquet_decomposition(model(2), drive, cfg)
    d4 = floquet_decomposition(model(2), drive, PropagatorConfig(1024))
    assert np.max(np.abs(d1.quasi_energies - d4.quasi_energies)) < 1e-5


def test_frozen_mode_apis_n2(cfg, drive):
    d = floquet_decomposition(model(2), drive, cfg)
    assert np.allclose(d.quasi_energies, FROZEN_QE_N2_PHI0, atol=1e-9)
    assert np.allclose(d.mode_apis, FROZEN_API_N2_PHI0, atol=1e-9)
    # three distinct, nonzero contributions
    assert np.min(np.abs(d.mode_apis)) > 1e-3
    assert len(np.unique(np.round(d.mode_apis, 6))) == 3


def test_mode_api_null_cases(cfg):
    m = model(2)
    for p in (DriveParams(E1, 0.0, OMEGA, 0.4), DriveParams(E1, E2, OMEGA, math.pi / 2)):
        d = floquet_decomposition(m, p, cfg)
        assert np.max(np.abs(d.mode_apis)) < 1e-8
        v = d.modes0[:, 0]
        assert abs(mode_api(v, m, p, cfg)) < 1e-8


def test_mode_api_warns_for_non_eigenvector(cfg, drive):
    m = model(2)
    with pytest.warns(UserWarning):
        mode_api(np.array([1.0, 0.0, 0.0], dtype=complex), m, drive, cfg)


def test_mode_weights_basics(cfg, drive):
    m = model(2)
    d = floquet_decomposition(m, drive, cfg)
    w = mode_weights(QuantumState(d.modes0[:, 1], 2), d)
    assert w.weights[1] == pytest.approx(1.0, abs=1e-12)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    w = mode_weights(s0, d)
    assert np.sum(w.weights) == pytest.approx(1.0, abs=1e-10)


def test_mode_weights_refuse_degenerate():
    d = floquet_spectrum(np.eye(3, dtype=complex), OMEGA)
    with pytest.raises(DegenerateSpectrumError):
        mode_weights(QuantumState(random_state(2, seed=4), 2), d)


def test_weight_mirror_symmetry_balanced_state(cfg):
    # varphi = pi gives a real initial state: weights are even in phi
    m = model(2)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    for phi in np.linspace(0.1, math.pi - 0.1, 5):
        da = floquet_decomposition(m, DriveParams(E1, E2, OMEGA, phi), cfg)
        db = floquet_decomposition(m, DriveParams(E1, E2, OMEGA, -phi), cfg)
        perm = pair_modes(da, db)
        wa = mode_weights(s0, da).weights
        wb = mode_weights(s0, db).weights[perm]
        assert np.max(np.abs(wa - wb)) < 1e-8


def test_weight_cross_state_pairing(cfg):
    m = model(2)
    s_plus = acs_state(ACSParams(math.pi / 2, 9 * math.pi / 10), 2)
    s_minus = acs_state(ACSParams(math.pi / 2, 11 * math.pi / 10), 2)
    for phi in (0.3, 1.0, 2.2):
        da = floquet_decomposition(m, DriveParams(E1, E2, OMEGA, phi), cfg)
        db = floquet_decomposition(m, DriveParams(E1, E2, OMEGA, -phi), cfg)
        perm = pair_modes(da, db)
        wa = mode_weights(s_plus, da).weights
        wb = mode_weights(s_minus, db).weights[perm]
        assert np.max(np.abs(wa - wb)) < 1e-8


def test_api_floquet_null_and_mirror(cfg):
    m = model(2)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    assert abs(api_floquet(s0, m, DriveParams(E1, E2, OMEGA, 3 * math.pi / 2), cfg)) < 1e-8
    a_plus = api_floquet(s0, m, DriveParams(E1, E2, OMEGA, 0.3), cfg)
    a_minus = api_floquet(s0, m, DriveParams(E1, E2, OMEGA, -0.3), cfg)
    assert abs(a_plus - a_minus) < 1e-8


def test_api_floquet_mirror_broken_for_tilted_state(cfg):
    m = model(2)
    s0 = acs_state(ACSParams(math.pi / 2, 9 * math.pi / 10), 2)
    a_plus = api_floquet(s0, m, DriveParams(E1, E2, OMEGA, 0.3), cfg)
    a_minus = api_floquet(s0, m, DriveParams(E1, E2, OMEGA, -0.3), cfg)
    assert abs(a_plus - a_minus) > 1e-4


def test_api_floquet_matches_direct_average(cfg, drive):
    m = model(2)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 2)
    w = AveragingWindow.whole_periods(PERIOD, 1000, 10_000)
    assert abs(api_floquet(s0, m, drive, cfg) - direct_api(s0, w, m, drive, cfg)) < 1e-3

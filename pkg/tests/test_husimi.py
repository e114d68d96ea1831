"""Husimi-layer tests: quadrature exactness, closed forms, the projection
kernel identity, time averaging, and the coherent-state completeness check."""

import math

import numpy as np
import pytest

from drivenbjj.dynamics import AveragingWindow, PropagatorConfig
from drivenbjj.husimi import Distribution, SphericalGrid, api_from_tahd, husimi, tahd
from drivenbjj.model import (
    ACSParams,
    DriveParams,
    ModelParams,
    QuantumState,
    acs_state,
    basis_state,
    expect_jz,
)

from conftest import E1, E2, OMEGA, PERIOD, model, random_state


def test_grid_covers_full_solid_angle():
    for g in (SphericalGrid.gauss_legendre(64, 128),
              SphericalGrid.uniform_z(200, 200),
              SphericalGrid.for_particles(500)):
        assert g.solid_angle == pytest.approx(4 * math.pi, abs=1e-12)
    assert SphericalGrid.for_particles(20).shape == (64, 128)
    assert SphericalGrid.for_particles(500).shape == (256, 512)


@pytest.mark.parametrize("n", [3, 20, 500])
def test_husimi_normalized_random_state(n):
    s = QuantumState(random_state(n, seed=n), n)
    q = husimi(s, SphericalGrid.for_particles(n))
    assert q.integral() == pytest.approx(1.0, abs=1e-3)
    assert np.all(q.values >= 0.0)


def test_completeness_of_coherent_states():
    # (N+1)/(4 pi) integral of |<theta, phi|psi>|^2 over the sphere is 1
    n = 7
    s = QuantumState(random_state(n, seed=11), n)
    q = husimi(s, SphericalGrid.gauss_legendre(64, 128))
    assert q.integral() == pytest.approx(1.0, abs=1e-6)


def test_husimi_peaks_at_coherent_center():
    a = ACSParams(1.1, 2.2)
    q = husimi(acs_state(a, 40), SphericalGrid.gauss_legendre(128, 256))
    i, j = np.unravel_index(np.argmax(q.values), q.values.shape)
    assert abs(q.grid.theta[i] - a.theta) < 0.05
    assert abs(q.grid.phi[j] - a.varphi) < 0.05


def test_husimi_stretched_state_closed_form():
    # all particles left: Q = (N+1)/(4 pi) cos^{2N}(theta/2), phi-independent
    n = 30
    g = SphericalGrid.for_particles(n)
    q = husimi(basis_state(n, n / 2), g)
    ref = (n + 1) / (4 * math.pi) * np.cos(g.theta / 2) ** (2 * n)
    assert np.max(np.abs(q.values - ref[:, None])) < 1e-12


def test_kernel_identity_per_basis_state():
    # reconstructed imbalance of |l, m> equals 2m/N for every m
    n = 20
    g = SphericalGrid.for_particles(n)
    for m_val in np.arange(n + 1) - n / 2:
        q = husimi(basis_state(n, m_val), g)
        assert api_from_tahd(q, n) == pytest.approx(2 * m_val / n, abs=1e-3)


def test_kernel_odd_under_reflection():
    # a theta -> pi - theta symmetric density pairs to zero with the odd kernel
    n = 8
    g = SphericalGrid.gauss_legendre(64, 128)
    q1 = husimi(basis_state(n, 2.0), g).values
    q2 = husimi(basis_state(n, -2.0), g).values
    sym = Distribution(g, 0.5 * (q1 + q2))
    assert abs(api_from_tahd(sym, n)) < 1e-12


def test_api_from_husimi_matches_expectation():
    n = 20
    g = SphericalGrid.for_particles(n)
    for seed in (1, 2):
        s = QuantumState(random_state(n, seed=seed), n)
        assert api_from_tahd(husimi(s, g), n) == pytest.approx(expect_jz(s), abs=1e-3)
    s = acs_state(ACSParams(0.8, 0.3), n)
    assert api_from_tahd(husimi(s, g), n) == pytest.approx(math.cos(0.8), abs=1e-3)


def test_grid_refinement_stability():
    n = 20
    s = QuantumState(random_state(n, seed=9), n)
    a1 = api_from_tahd(husimi(s, SphericalGrid.gauss_legendre(64, 128)), n)
    a2 = api_from_tahd(husimi(s, SphericalGrid.gauss_legendre(128, 256)), n)
    assert abs(a1 - a2) < 1e-4


def test_tahd_static_eigenstate_is_stationary(cfg):
    # for an undriven Hamiltonian an eigenstate's density matrix is constant,
    # so the time average equals the instantaneous Husimi density
    m = model(4)
    p = DriveParams(0.0, 0.0, OMEGA, 0.0)
    from drivenbjj.model import hamiltonian_at
    evals, evecs = np.linalg.eigh(hamiltonian_at(m, p, 0.0))
    s0 = QuantumState(evecs[:, 0].astype(complex), 4)
    g = SphericalGrid.gauss_legendre(32, 64)
    w = AveragingWindow.whole_periods(PERIOD, 0, 3)
    avg = tahd(s0, w, m, p, cfg, g)
    inst = husimi(s0, g)
    assert np.max(np.abs(avg.values - inst.values)) < 1e-9


def test_tahd_normalized_driven(cfg, drive):
    m = model(6)
    s0 = acs_state(ACSParams(math.pi / 2, math.pi), 6)
    w = AveragingWindow.whole_periods(PERIOD, 10, 50)
    avg = tahd(s0, w, m, drive, cfg, SphericalGrid.for_particles(6))
    assert avg.integral() == pytest.approx(1.0, abs=1e-10)
    assert np.all(avg.values >= -1e-15)

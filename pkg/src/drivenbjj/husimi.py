"""Husimi distributions over the spin coherent-state sphere.

Q(theta, phi) = (N+1)/(4 pi) <theta, phi| rho |theta, phi> is the coherent
state occupation density with respect to the solid angle
d Omega = sin(theta) d theta d phi = dZ d phi (Z = cos theta), so Husimi
densities compare directly against classical (Z, phi) occupation PDFs.

Coherent-state overlaps factorize into a theta-dependent real profile and a
phase linear in phi, so a full phi-row of grid overlaps is one (folded) FFT;
binomial amplitudes are accumulated in the log domain, keeping everything
stable at N = 500.  Time averages are taken on the density matrix first --
the time-averaged Husimi function equals the Husimi function of the
time-averaged density matrix -- and the grid evaluation happens once, via
the eigendecomposition of that average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dynamics import AveragingWindow, PropagatorConfig, period_bundle, _check_norm
from .model import DriveParams, ModelParams, QuantumState

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class SphericalGrid:
    """Product quadrature grid on the sphere.

    theta / theta_weights integrate against d(cos theta) (weights sum to 2);
    phi nodes are uniform with spacing 2 pi / n_phi starting at phi0.  The
    combined node weights cover the full solid angle 4 pi.
    """

    theta: np.ndarray
    theta_weights: np.ndarray
    phi: np.ndarray
    phi_weight: float

    @classmethod
    def gauss_legendre(cls, n_theta: int, n_phi: int, phi0: float = 0.0) -> "SphericalGrid":
        """Gauss-Legendre nodes in cos(theta) crossed with uniform phi."""
        x, w = np.polynomial.legendre.leggauss(n_theta)
        theta = np.arccos(x)
        phi = phi0 + 2.0 * math.pi * np.arange(n_phi) / n_phi
        return cls(theta, w, phi, 2.0 * math.pi / n_phi)

    @classmethod
    def uniform_z(cls, n_z: int, n_phi: int) -> "SphericalGrid":
        """Midpoint rule on uniform Z bins, phi at bin centers.

        Matches the bin centers of a classical (Z, phi) occupation histogram
        with the same shape, so distributions can be compared bin by bin.
        """
        dz = 2.0 / n_z
        z = -1.0 + dz * (np.arange(n_z) + 0.5)
        dphi = 2.0 * math.pi / n_phi
        phi = dphi * (np.arange(n_phi) + 0.5)
        return cls(np.arccos(z), np.full(n_z, dz), phi, dphi)

    @classmethod
    def for_particles(cls, n: int) -> "SphericalGrid":
        """Default grid: 64 x 128, doubled as coherent-state features sharpen
        (width ~ 1/sqrt(N)) until the quadrature stays exact for dimension n+1."""
        n_theta = 64
        while 2 * n_theta - 1 < n:
            n_theta *= 2
        return cls.gauss_legendre(n_theta, 2 * n_theta)

    @property
    def shape(self):
        return len(self.theta), len(self.phi)

    @property
    def node_weights(self) -> np.ndarray:
        return np.outer(self.theta_weights, np.full(len(self.phi), self.phi_weight))

    @property
    def solid_angle(self) -> float:
        return float(self.theta_weights.sum() * self.phi_weight * len(self.phi))


@dataclass(frozen=True)
class Distribution:
    """Nonnegative density on a spherical grid, normalized against d Omega."""

    grid: SphericalGrid
    values: np.ndarray

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.node_weights))

    def marginal_z(self) -> np.ndarray:
        """Density integrated over phi, per unit Z, at the theta nodes."""
        return self.values.sum(axis=1) * self.grid.phi_weight


def _log_profiles(theta: np.ndarray, n: int) -> np.ndarray:
    """Rows: theta node; columns k = 0..n: coherent-state amplitude magnitudes
    binom(n, k)^(1/2) cos^k(theta/2) sin^(n-k)(theta/2), in the log domain."""
    k = np.arange(n + 1, dtype=float)
    log_binom = 0.5 * (gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0))
    c = np.maximum(np.cos(0.5 * theta), 1e-300)
    s = np.maximum(np.sin(0.5 * theta), 1e-300)
    return log_binom[None, :] + np.outer(np.log(c), k) + np.outer(np.log(s), n - k)


_PROFILE_CACHE: dict = {}


def _profiles(grid: SphericalGrid, n: int) -> np.ndarray:
    key = (grid.theta.tobytes(), n)
    mat = _PROFILE_CACHE.get(key)
    if mat is None:
        mat = np.exp(_log_profiles(grid.theta, n))
        if len(_PROFILE_CACHE) > 8:
            _PROFILE_CACHE.clear()
        _PROFILE_CACHE[key] = mat
    return mat


def _overlap_sq(grid: SphericalGrid, amps: np.ndarray) -> np.ndarray:
    """|<theta_i, phi_j | psi>|^2 on the grid, one folded FFT per theta row.

    <theta, phi|psi> = sum_k r_k(theta) e^{-i (n-k) phi} psi_k is a DFT in
    q = n - k; evaluation at n_phi uniform nodes is exact for any dimension
    once coefficients with q = q' (mod n_phi) are folded together.
    """
    n = len(amps) - 1
    n_phi = len(grid.phi)
    u = _profiles(grid, n) * amps[None, :]
    coeff = u[:, ::-1].astype(np.complex128)        # index q = n - k
    if grid.phi[0] != 0.0:
        # the phi0 phase depends on the full q, so apply it before any folding
        coeff = coeff * np.exp(-1j * np.arange(n + 1) * grid.phi[0])[None, :]
    pad = (-coeff.shape[1]) % n_phi
    if pad:
        coeff = np.pad(coeff, ((0, 0), (0, pad)))
    folded = coeff.reshape(coeff.shape[0], -1, n_phi).sum(axis=1)
    # fft[j] = sum_q a_q e^{-2 pi i q j / n_phi} evaluates phi_j = phi0 + 2 pi j / n_phi
    ov = np.fft.fft(folded, axis=1)
    return ov.real ** 2 + ov.imag ** 2


def husimi(s: QuantumState, grid: SphericalGrid) -> Distribution:
    """Husimi density (N+1)/(4 pi) |<theta, phi|psi>|^2 of a pure state."""
    vals = (s.n + 1) / FOUR_PI * _overlap_sq(grid, s.amplitudes)
    return Distribution(grid, vals)


def _husimi_of_density(rho: np.ndarray, n: int, grid: SphericalGrid) -> Distribution:
    evals, evecs = np.linalg.eigh(rho)
    vals = np.zeros(grid.shape)
    for w, vec in zip(evals, evecs.T):
        if w > 1e-14:
            vals += w * _overlap_sq(grid, vec)
    return Distribution(grid, (n + 1) / FOUR_PI * vals)


def tahd(s0: QuantumState, w: AveragingWindow, m: ModelParams, p: DriveParams,
         cfg: PropagatorConfig, grid: SphericalGrid) -> Distribution:
    """Time-averaged Husimi density over [burn_in, burn_in + span].

    The trapezoidal average of the projector |psi(t)><psi(t)| is accumulated
    on the direct-propagation sample grid (K per period, matching the
    imbalance averages) and converted to a Husimi density at the end.
    """
    burn_p, span_p = w.periods_of(p.period)
    K = w.samples_per_period
    bundle = period_bundle(m, p, cfg, K)
    stack = np.vstack(bundle.partials[1:]) if K > 1 else None

    psi = np.array(s0.amplitudes, dtype=np.complex128)
    for _ in range(burn_p):
        psi = bundle.u_period @ psi
    _check_norm(psi, cfg)

    dim = m.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    first = psi.copy()
    block = np.empty((dim, K * 16), dtype=np.complex128)
    filled = 0
    for _ in range(span_p):
        block[:, filled] = psi
        if stack is not None:
            block[:, filled + 1:filled + K] = (stack @ psi).reshape(K - 1, dim).T
        filled += K
        if filled == block.shape[1]:
            rho += block @ block.conj().T
            filled = 0
        psi = bundle.u_period @ psi
    if filled:
        rho += block[:, :filled] @ block[:, :filled].conj().T
    _check_norm(psi, cfg)
    rho += 0.5 * (np.outer(psi, psi.conj()) - np.outer(first, first.conj()))
    rho /= span_p * K
    return _husimi_of_density(rho, m.n, grid)


def api_from_tahd(d: Distribution, n: int) -> float:
    """Population imbalance reconstructed from a Husimi density.

    Pairs the density with the finite-size projection kernel
    ((l+1)/l) cos(theta), the exact dual symbol of (2/N) Jz under the
    coherent-state resolution of identity; for l >> 1 the kernel tends to
    cos(theta) = Z.
    """
    l = 0.5 * n
    kernel = (l + 1.0) / l * np.cos(d.grid.theta)
    return float(np.sum(d.values * d.grid.node_weights * kernel[:, None]))

"""Floquet analysis built from the one-period propagator.

The unitary map over one drive period (monodromy) carries the full
stroboscopic dynamics: its eigenvectors are the periodic modes at t = 0 and
its eigenphases give the quasi-energies, folded into the first zone
[-w/2, w/2).  Everything downstream -- per-mode asymptotic imbalances,
initial-state weights, and the weighted decomposition of the asymptotic
population imbalance -- derives from this eigenproblem plus intra-period
propagation.

Mode conventions (fixed so that symmetry comparisons across parameter sets
are deterministic): modes are ordered by ascending quasi-energy, ties broken
by descending magnitude of the last basis component, and each mode's global
phase is chosen to make its largest-magnitude component real and positive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .dynamics import PropagatorConfig, period_bundle
from .model import DriveParams, ModelParams, QuantumState

DEGENERACY_THRESHOLD = 1e-9


class DegenerateSpectrumError(RuntimeError):
    """Raised when weights are requested for a (near-)degenerate spectrum."""


class ModePairingError(RuntimeError):
    """Raised when two spectra cannot be matched within the pairing tolerance."""


@dataclass(frozen=True)
class FloquetDecomposition:
    """Quasi-energies, periodic modes at t = 0, and their asymptotic imbalances.

    quasi_energies : (dim,) array, ascending, inside [-omega/2, omega/2)
    modes0         : (dim, dim) complex array, column alpha = mode alpha at t = 0
    mode_apis      : (dim,) array of per-mode imbalances, or None if not computed
    degenerate     : True when two folded quasi-energies sit closer than
                     DEGENERACY_THRESHOLD (weights are then basis-dependent)
    """

    quasi_energies: np.ndarray
    modes0: np.ndarray
    omega: float
    mode_apis: np.ndarray | None = None
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.modes0.shape[0]


@dataclass(frozen=True)
class ModeWeights:
    """Overlap weights of an initial state with the periodic modes."""

    weights: np.ndarray

    def __post_init__(self):
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > 1e-10 or np.any(self.weights < -1e-12):
            raise ValueError(f"weights must be nonnegative and sum to 1, got sum {total}")


def monodromy(m: ModelParams, p: DriveParams, cfg: PropagatorConfig) -> np.ndarray:
    """Unitary propagator over exactly one drive period, from t = 0."""
    return period_bundle(m, p, cfg, 1).u_period


def _fold_quasi_energies(eigenvalues: np.ndarray, omega: float) -> np.ndarray:
    # arg in (-pi, pi] maps eps = -arg/T onto [-omega/2, omega/2)
    period = 2.0 * math.pi / omega
    return -np.angle(eigenvalues) / period


def _circular_gap(e1, e2, omega: float):
    d = np.abs(np.asarray(e1) - np.asarray(e2))
    return np.minimum(d, omega - d)


CLUSTER_REFINE_GAP = 1e-6


def _refine_clusters(u: np.ndarray, eigenvalues: np.ndarray, vectors: np.ndarray,
                     omega: float):
    """Rediagonalize the monodromy inside near-degenerate eigenvalue clusters.

    A backward-stable eigensolver returns an arbitrary orthonormal basis of a
    cluster whose internal splitting is below its working precision; the
    restriction of U to the cluster subspace is known to absolute accuracy
    ~1e-15, so its small eigenproblem resolves splittings down to ~1e-9 and
    recovers the symmetry-adapted modes that carry well-defined averages.
    """
    eps = _fold_quasi_energies(eigenvalues, omega)
    order = np.argsort(eps, kind="stable")
    sorted_eps = eps[order]
    gaps = _circular_gap(sorted_eps[1:], sorted_eps[:-1], omega)
    breaks = [i + 1 for i in range(len(gaps)) if gaps[i] >= CLUSTER_REFINE_GAP]
    clusters = [list(range(a, b)) for a, b in zip([0] + breaks, breaks + [len(eps)])]
    # merge a cluster wrapping across the +-omega/2 fold boundary
    if len(clusters) > 1 and _circular_gap(sorted_eps[-1], sorted_eps[0], omega) \
            < CLUSTER_REFINE_GAP:
        clusters[0] = clusters.pop() + clusters[0]
    for cluster in clusters:
        if len(cluster) < 2:
            continue
        idx = order[cluster]
        sub = vectors[:, idx]
        restricted = sub.conj().T @ (u @ sub)
        w, rot = np.linalg.eig(restricted)
        rot, _ = np.linalg.qr(rot)
        vectors[:, idx] = sub @ rot
        eigenvalues[idx] = w
    return eigenvalues, vectors


def floquet_spectrum(u: np.ndarray, omega: float) -> FloquetDecomposition:
    """Eigendecomposition of the monodromy with deterministic ordering and gauge.

    Uses a complex Schur factorization: for a unitary (normal) matrix the
    Schur vectors are an orthonormal eigenbasis, which keeps the modes
    orthonormal to rounding even near degeneracies.  Near-degenerate clusters
    are rediagonalized so that per-mode averages stay well defined down to
    quasi-energy gaps of ~1e-9.
    """
    t_mat, z = schur(u, output="complex")
    eigenvalues, z = _refine_clusters(u, np.diag(t_mat).copy(), z.copy(), omega)
    eps = _fold_quasi_energies(eigenvalues, omega)

    order = np.argsort(eps, kind="stable")
    # break near-ties (< 1e-12) by descending weight on the last basis state
    eps_sorted = eps[order]
    last_row = np.abs(z[-1, :])[order]
    i = 0
    while i < len(order) - 1:
        j = i + 1
        while j < len(order) and eps_sorted[j] - eps_sorted[i] < 1e-12:
            j += 1
        if j - i > 1:
            sub = np.argsort(-last_row[i:j], kind="stable")
            order[i:j] = order[i:j][sub]
        i = j

    eps = eps[order]
    modes = z[:, order]

    # phase gauge: largest-|component| entry real positive
    idx = np.argmax(np.abs(modes), axis=0)
    phases = modes[idx, np.arange(modes.shape[1])]
    modes = modes * np.exp(-1j * np.angle(phases))[None, :]

    gaps = _circular_gap(eps[1:], eps[:-1], omega)
    wrap_gap = _circular_gap(eps[-1], eps[0] + omega, omega) if len(eps) > 1 else np.inf
    degenerate = bool(len(eps) > 1 and min(gaps.min(), wrap_gap) < DEGENERACY_THRESHOLD)
    return FloquetDecomposition(eps, modes, omega, None, degenerate)


def mode_api(mode0: np.ndarray, m: ModelParams, p: DriveParams,
             cfg: PropagatorConfig, samples_per_period: int = 16) -> float:
    """One-period average of the normalized imbalance carried by one mode.

    The mode is propagated across its period and (2/N) <Jz> is averaged over
    K uniform samples; the quasi-energy phase cancels inside the expectation
    value, so no phase restoration is needed here.
    """
    bundle = period_bundle(m, p, cfg, samples_per_period)
    u = bundle.u_period
    lam_est = np.vdot(mode0, u @ mode0)
    residual = np.linalg.norm(u @ mode0 - lam_est * mode0)
    if residual > 1e-8:
        warnings.warn(f"mode fails the eigenvector residual test: {residual:.3e}",
                      stacklevel=2)
    return float(_mode_apis_from_bundle(mode0[:, None], m, bundle)[0])


def _mode_apis_from_bundle(modes: np.ndarray, m: ModelParams, bundle) -> np.ndarray:
    mv = np.arange(m.dim) - 0.5 * m.n
    acc = np.zeros(modes.shape[1])
    for w_j in bundle.partials:
        prop = w_j @ modes
        acc += mv @ (prop.real ** 2 + prop.imag ** 2)
    return 2.0 / m.n * acc / len(bundle.partials)


def floquet_decomposition(m: ModelParams, p: DriveParams, cfg: PropagatorConfig,
                          samples_per_period: int = 16) -> FloquetDecomposition:
    """Spectrum, modes, and per-mode imbalances in one pass."""
    bundle = period_bundle(m, p, cfg, samples_per_period)
    d = floquet_spectrum(bundle.u_period, p.omega)
    apis = _mode_apis_from_bundle(d.modes0, m, bundle)
    return FloquetDecomposition(d.quasi_energies, d.modes0, d.omega, apis, d.degenerate)


def quasi_energy_clusters(d: FloquetDecomposition, gap: float = 1e-5) -> list:
    """Indices of modes grouped by near-degenerate quasi-energy.

    Within a cluster whose internal splitting is near the monodromy's rounding
    floor, individual modes mix numerically; only basis-invariant quantities
    (such as the cluster trace of an observable average) remain meaningful.
    """
    eps = d.quasi_energies
    if len(eps) == 1:
        return [np.array([0])]
    gaps = _circular_gap(eps[1:], eps[:-1], d.omega)
    clusters, current = [], [0]
    for i, g in enumerate(gaps):
        if g < gap:
            current.append(i + 1)
        else:
            clusters.append(current)
            current = [i + 1]
    clusters.append(current)
    if len(clusters) > 1 and _circular_gap(eps[-1], eps[0], d.omega) < gap:
        clusters[0] = clusters.pop() + clusters[0]
    return [np.asarray(c) for c in clusters]


def mode_weights(s0: QuantumState, d: FloquetDecomposition) -> ModeWeights:
    """Weights |<mode_alpha(0)|psi(0)>|^2; refuses degenerate decompositions."""
    if d.degenerate:
        raise DegenerateSpectrumError(
            "quasi-energy spectrum is degenerate; mode weights are basis-dependent")
    overlaps = d.modes0.conj().T @ s0.amplitudes
    return ModeWeights(np.abs(overlaps) ** 2)


def api_floquet(s0: QuantumState, m: ModelParams, p: DriveParams,
                cfg: PropagatorConfig, samples_per_period: int = 16) -> float:
    """Asymptotic population imbalance as the weight-averaged per-mode imbalance."""
    d = floquet_decomposition(m, p, cfg, samples_per_period)
    w = mode_weights(s0, d)
    return float(np.dot(w.weights, d.mode_apis))


def pair_modes(d1: FloquetDecomposition, d2: FloquetDecomposition,
               tol: float = 1e-6) -> np.ndarray:
    """Match modes of two decompositions by closest folded quasi-energy.

    Returns `perm` such that mode alpha of d1 pairs with mode perm[alpha] of
    d2.  Greedy over ascending gap; fails loudly if any matched pair is more
    than `tol` apart on the quasi-energy circle.
    """
    if d1.dim != d2.dim or d1.omega != d2.omega:
        raise ModePairingError("decompositions are not comparable")
    gap = _circular_gap(d1.quasi_energies[:, None], d2.quasi_energies[None, :], d1.omega)
    perm = np.full(d1.dim, -1)
    taken = np.zeros(d2.dim, dtype=bool)
    for flat in np.argsort(gap, axis=None, kind="stable"):
        i, j = divmod(flat, d2.dim)
        if perm[i] < 0 and not taken[j]:
            perm[i] = j
            taken[j] = True
    worst = float(np.max(gap[np.arange(d1.dim), perm]))
    if worst > tol:
        raise ModePairingError(f"worst quasi-energy match distance {worst:.3e} > {tol:.1e}")
    return perm


def mode_trajectory(d: FloquetDecomposition, m: ModelParams, p: DriveParams,
                    cfg: PropagatorConfig, samples_per_period: int = 16,
                    periods: int = 1) -> np.ndarray:
    """Periodic modes on the sample grid t_j = j T/K with phases restored.

    Returns an array of shape (periods * K, dim, dim); entry [j, :, alpha] is
    exp(+i eps_alpha t_j) U(t_j) |mode_alpha(0)>, i.e. the T-periodic mode
    function itself (up to the eigenresidual when j crosses period
    boundaries).
    """
    bundle = period_bundle(m, p, cfg, samples_per_period)
    K = samples_per_period
    delta = p.period / K
    out = np.empty((periods * K, d.dim, d.dim), dtype=np.complex128)
    base = d.modes0
    for q in range(periods):
        for j in range(K):
            t = (q * K + j) * delta
            out[q * K + j] = (bundle.partials[j] @ base) * np.exp(1j * d.quasi_energies * t)[None, :]
        if q + 1 < periods:
            base = bundle.u_period @ base
    return out


def phase_aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over a global phase of ||u - e^{i gamma} v||, in closed form."""
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    return float(math.sqrt(max(nu * nu + nv * nv - 2.0 * abs(np.vdot(u, v)), 0.0)))

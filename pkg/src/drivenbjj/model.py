"""Two-mode Bose-Hubbard dimer in the collective-spin representation.

An ensemble of N bosons in a double well, restricted to the lowest doublet,
maps onto a spin of length l = N/2: the (N+1)-dimensional Hilbert space is
spanned by |l, m> with m = -l .. l, where 2m is the left/right particle
number difference.  Energies are measured in units of the static well
splitting, which fixes the hopping amplitude to 1/2, and times in units of
the corresponding tunneling period (hbar = 1).

The well depths are modulated by a bi-harmonic force
``f(t) = E1 cos(w t) + E2 cos(2 w t + phi)``, giving the time-periodic
Hamiltonian

    H(t) = -Jx + U Jz^2 + 2 f(t) Jz .

Array convention used throughout the package: index k = 0 .. N maps to
m = k - l (ascending).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

TWO_PI = 2.0 * math.pi

# Hopping in units of the static well splitting.
HOPPING = 0.5


@dataclass(frozen=True)
class DriveParams:
    """Bi-harmonic drive f(t) = e1*cos(omega*t) + e2*cos(2*omega*t + phi).

    Parameters
    ----------
    e1, e2 : float
        Amplitudes of the fundamental and the second harmonic.
    omega : float
        Angular frequency of the fundamental; must be positive.
    phi : float
        Temporal phase of the second harmonic, stored wrapped to [0, 2*pi).
    """

    e1: float
    e2: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError(f"drive frequency must be positive, got {self.omega}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def with_phi(self, phi: float) -> "DriveParams":
        """Same drive with a different second-harmonic phase (wrapped mod 2*pi)."""
        return DriveParams(self.e1, self.e2, self.omega, phi)

    def mirrored(self) -> "DriveParams":
        """Drive with phi -> -phi."""
        return self.with_phi(-self.phi)

    def shifted(self) -> "DriveParams":
        """Drive with phi -> phi + pi."""
        return self.with_phi(self.phi + math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Dimer parameters: particle number and on-site interaction.

    The collective coupling ``lam = n * u`` is the quantity held fixed when
    comparing different particle numbers; construct via :meth:`from_lambda`
    to specify it directly.
    """

    n: int
    u: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"particle number must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_lambda(cls, n: int, lam: float) -> "ModelParams":
        return cls(n, lam / n)

    @property
    def lam(self) -> float:
        """Collective coupling n * u."""
        return self.n * self.u

    @property
    def dim(self) -> int:
        return self.n + 1

    @property
    def l(self) -> float:
        """Spin length n / 2."""
        return 0.5 * self.n

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers -l .. l in index order."""
        return np.arange(self.dim) - self.l


@dataclass(frozen=True)
class ACSParams:
    """Spin coherent state |theta, varphi>: all particles in the single-particle
    mode cos(theta/2)|L> + sin(theta/2) e^{i varphi}|R>.

    cos(theta) is the initial population imbalance, varphi the relative phase
    between the wells (wrapped to [0, 2*pi)).
    """

    theta: float
    varphi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "varphi", float(self.varphi) % TWO_PI)


@dataclass(frozen=True)
class QuantumState:
    """Normalized state vector over |l, m>, index k <-> m = k - l.

    The amplitude array is copied and frozen at construction; all operations
    in the package treat states as immutable values.
    """

    amplitudes: np.ndarray
    n: int
    _norm_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self._norm_tol:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes, n: int) -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        return cls(amps / np.linalg.norm(amps), n)

    @property
    def dim(self) -> int:
        return self.n + 1


def drive_force(p: DriveParams, t):
    """Evaluate f(t); `t` may be a scalar or an array."""
    t = np.asarray(t, dtype=float)
    out = p.e1 * np.cos(p.omega * t) + p.e2 * np.cos(2.0 * p.omega * t + p.phi)
    return out if out.ndim else float(out)


def jx_offdiagonal(n: int) -> np.ndarray:
    """Superdiagonal of Jx: <m+1|Jx|m> = sqrt(l(l+1) - m(m+1)) / 2, length n."""
    l = 0.5 * n
    m = np.arange(n) - l
    return 0.5 * np.sqrt(l * (l + 1.0) - m * (m + 1.0))


def build_operators(m: ModelParams):
    """Dense Jx and Jz in the |l, m> basis.

    Returns
    -------
    jx : (n+1, n+1) real symmetric array
    jz : (n+1, n+1) real diagonal array with entries m = -l .. l
    """
    if m.n < 1:
        raise ValueError("need at least one particle")
    off = jx_offdiagonal(m.n)
    jx = np.diag(off, 1) + np.diag(off, -1)
    jz = np.diag(m.m_values)
    return jx, jz


def jy_operator(m: ModelParams) -> np.ndarray:
    """Dense Jy built from the ladder elements <m+1|J+|m> = 2 <m+1|Jx|m>."""
    t = 2.0 * jx_offdiagonal(m.n)
    # J+ raises m: nonzero elements sit at (row k+1, column k).
    jplus = np.zeros((m.dim, m.dim), dtype=np.complex128)
    jplus[np.arange(1, m.dim), np.arange(m.dim - 1)] = t
    return (jplus - jplus.conj().T) / 2j


def hamiltonian_tridiagonal(m: ModelParams, p: DriveParams, t: float):
    """Diagonal and off-diagonal of H(t) = -Jx + U Jz^2 + 2 f(t) Jz.

    The Hamiltonian is real symmetric tridiagonal for all t, which the
    propagator exploits.
    """
    mv = m.m_values
    diag = m.u * mv * mv + 2.0 * drive_force(p, t) * mv
    return diag, -jx_offdiagonal(m.n)


def hamiltonian_at(m: ModelParams, p: DriveParams, t: float) -> np.ndarray:
    """Dense H(t); Hermitian (real symmetric) by construction."""
    diag, off = hamiltonian_tridiagonal(m, p, t)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def number_basis_hamiltonian(m: ModelParams, p: DriveParams, t: float) -> np.ndarray:
    """H(t) built directly from bosonic two-mode operators, basis index = n_left.

    Independent of the spin construction: hopping -J(aL+ aR + aR+ aL) with
    J = 1/2, interaction (U/2) * sum_i n_i(n_i - 1), and drive
    +f(t) (n_L - n_R).  Differs from :func:`hamiltonian_at` by the constant
    ``constant_shift(m)`` times the identity.
    """
    n = m.n
    nl = np.arange(n + 1, dtype=float)
    nr = n - nl
    diag = 0.5 * m.u * (nl * (nl - 1.0) + nr * (nr - 1.0)) + drive_force(p, t) * (nl - nr)
    # <n_L + 1 | aL+ aR | n_L> = sqrt((n_L + 1) n_R)
    hop = np.sqrt((nl[:-1] + 1.0) * nr[:-1])
    h = np.diag(diag).astype(float)
    h[np.arange(1, n + 1), np.arange(n)] -= HOPPING * hop
    h[np.arange(n), np.arange(1, n + 1)] -= HOPPING * hop
    return h


def constant_shift(m: ModelParams) -> float:
    """Constant by which the number-basis form exceeds the spin form: U(n^2/4 - n/2)."""
    return m.u * (m.n * m.n / 4.0 - m.n / 2.0)


def acs_state(a: ACSParams, n: int) -> QuantumState:
    """Spin coherent state in the |l, m> basis.

    Amplitudes c_m = binom(2l, l+m)^(1/2) cos^{l+m}(theta/2) sin^{l-m}(theta/2)
    e^{i (l-m) varphi}.  Binomial weights accumulate in the log domain so the
    construction is stable up to at least N = 500.
    """
    k = np.arange(n + 1, dtype=float)          # k = l + m
    half = 0.5 * a.theta
    log_binom = 0.5 * (gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0))
    c, s = math.cos(half), math.sin(half)
    with np.errstate(divide="ignore"):
        log_c = np.where(k > 0, k * np.log(max(c, 1e-300)), 0.0)
        log_s = np.where(n - k > 0, (n - k) * np.log(max(s, 1e-300)), 0.0)
    mag = np.exp(log_binom + log_c + log_s)
    if c == 0.0:
        mag = np.where(k > 0, 0.0, mag)
    if s == 0.0:
        mag = np.where(n - k > 0, 0.0, mag)
    amps = mag * np.exp(1j * (n - k) * a.varphi)
    return QuantumState.normalized(amps, n)


def basis_state(n: int, m) -> QuantumState:
    """The |l, m> basis vector."""
    l = 0.5 * n
    k = int(round(m + l))
    if not 0 <= k <= n or abs(k - (m + l)) > 1e-12:
        raise ValueError(f"m = {m} is not a magnetic quantum number for n = {n}")
    amps = np.zeros(n + 1, dtype=np.complex128)
    amps[k] = 1.0
    return QuantumState(amps, n)


def expect_jz(s: QuantumState) -> float:
    """Normalized population imbalance <n_L - n_R>/N = (2/N) <Jz>."""
    prob = np.abs(s.amplitudes) ** 2
    mv = np.arange(s.dim) - 0.5 * s.n
    return float(2.0 / s.n * np.dot(mv, prob))


def expect_spin(s: QuantumState):
    """Raw expectation values (<Jx>, <Jy>, <Jz>)."""
    amps = s.amplitudes
    mv = np.arange(s.dim) - 0.5 * s.n
    t = 2.0 * jx_offdiagonal(s.n)
    jplus = np.vdot(amps[1:], t * amps[:-1])   # <J+> = <Jx> + i <Jy>
    jz = float(np.dot(mv, np.abs(amps) ** 2))
    return jplus.real, jplus.imag, jz


def reduced_density(s: QuantumState):
    """One-body reduced density matrix and its spectrum.

    Returns
    -------
    rho1 : (2, 2) Hermitian array with trace 1
    n1, n2 : natural populations, n1 >= n2 >= 0
    depletion : 1 - n1, zero exactly for coherent (mean-field product) states
    """
    jx, jy, jz = expect_spin(s)
    n = s.n
    rho1 = np.array(
        [
            [0.5 * n + jz, jx + 1j * jy],
            [jx - 1j * jy, 0.5 * n - jz],
        ],
        dtype=np.complex128,
    ) / n
    evals = np.linalg.eigvalsh(rho1)
    n1, n2 = float(evals[1]), float(evals[0])
    return rho1, n1, n2, 1.0 - n1

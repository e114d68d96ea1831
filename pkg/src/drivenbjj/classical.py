"""Mean-field limit: the driven non-rigid pendulum on the unit sphere.

For N -> infinity at fixed coupling lam = N*U the dimer reduces to a unit
spin vector s with Hamiltonian

    H(Z, phi) = (lam/2) Z^2 - sqrt(1 - Z^2) cos(phi) + 2 f(t) Z ,

where Z = s_z is the population imbalance and phi = atan2(s_y, s_x) the
relative phase.  Integration happens in the Cartesian components,
ds/dt = grad(H) x s with grad(H) = (-1, 0, lam*s_z + 2 f(t)), which is free
of the 1/sqrt(1 - Z^2) coordinate singularity at the poles that the (Z, phi)
form suffers from.

The integrator is an adaptive embedded Dormand-Prince 5(4) pair compiled
with numba; the spin vector is renormalized after every accepted step and
the worst pre-renormalization drift is reported back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import AveragingWindow
from .model import DriveParams, drive_force

TWO_PI = 2.0 * math.pi


class IntegrationError(RuntimeError):
    """Step-size underflow (stiff failure) or norm-drift breach."""


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _rhs(s, t, lam, e1, e2, omega, phi, out):
    f = e1 * math.cos(omega * t) + e2 * math.cos(2.0 * omega * t + phi)
    gz = lam * s[2] + 2.0 * f
    out[0] = -gz * s[1]
    out[1] = gz * s[0] + s[2]
    out[2] = -s[1]


@njit(cache=True, nogil=True)
def _dp_step(s, t, h, lam, e1, e2, omega, phi, k, y_new, y_err):
    """One Dormand-Prince 5(4) trial step; fills y_new / y_err, returns nothing."""
    tmp = np.empty(3)
    _rhs(s, t, lam, e1, e2, omega, phi, k[0])
    for i in range(3):
        tmp[i] = s[i] + h * 0.2 * k[0, i]
    _rhs(tmp, t + 0.2 * h, lam, e1, e2, omega, phi, k[1])
    for i in range(3):
        tmp[i] = s[i] + h * (3.0 / 40.0 * k[0, i] + 9.0 / 40.0 * k[1, i])
    _rhs(tmp, t + 0.3 * h, lam, e1, e2, omega, phi, k[2])
    for i in range(3):
        tmp[i] = s[i] + h * (44.0 / 45.0 * k[0, i] - 56.0 / 15.0 * k[1, i] + 32.0 / 9.0 * k[2, i])
    _rhs(tmp, t + 0.8 * h, lam, e1, e2, omega, phi, k[3])
    for i in range(3):
        tmp[i] = s[i] + h * (19372.0 / 6561.0 * k[0, i] - 25360.0 / 2187.0 * k[1, i]
                             + 64448.0 / 6561.0 * k[2, i] - 212.0 / 729.0 * k[3, i])
    _rhs(tmp, t + 8.0 / 9.0 * h, lam, e1, e2, omega, phi, k[4])
    for i in range(3):
        tmp[i] = s[i] + h * (9017.0 / 3168.0 * k[0, i] - 355.0 / 33.0 * k[1, i]
                             + 46732.0 / 5247.0 * k[2, i] + 49.0 / 176.0 * k[3, i]
                             - 5103.0 / 18656.0 * k[4, i])
    _rhs(tmp, t + h, lam, e1, e2, omega, phi, k[5])
    for i in range(3):
        y_new[i] = s[i] + h * (35.0 / 384.0 * k[0, i] + 500.0 / 1113.0 * k[2, i]
                               + 125.0 / 192.0 * k[3, i] - 2187.0 / 6784.0 * k[4, i]
                               + 11.0 / 84.0 * k[5, i])
    _rhs(y_new, t + h, lam, e1, e2, omega, phi, k[6])
    # difference between the 5th-order solution and the embedded 4th-order one
    for i in range(3):
        y_err[i] = h * ((35.0 / 384.0 - 5179.0 / 57600.0) * k[0, i]
                        + (500.0 / 1113.0 - 7571.0 / 16695.0) * k[2, i]
                        + (125.0 / 192.0 - 393.0 / 640.0) * k[3, i]
                        + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k[4, i]
                        + (11.0 / 84.0 - 187.0 / 2100.0) * k[5, i]
                        - 1.0 / 40.0 * k[6, i])


@njit(cache=True, nogil=True)
def _advance_to(s, t, t_target, h, tol, lam, e1, e2, omega, phi, drift):
    """Advance in place to exactly t_target.  Returns (t, h, status).

    status: 0 ok, 1 step-size underflow.  drift is a length-1 scratch array
    tracking the worst |norm - 1| seen before renormalization.
    """
    k = np.empty((7, 3))
    y_new = np.empty(3)
    y_err = np.empty(3)
    h_max = 0.5
    while t < t_target:
        if h > t_target - t:
            h = t_target - t
        _dp_step(s, t, h, lam, e1, e2, omega, phi, k, y_new, y_err)
        err = 0.0
        for i in range(3):
            sc = tol + tol * max(abs(s[i]), abs(y_new[i]))
            err += (y_err[i] / sc) ** 2
        err = math.sqrt(err / 3.0)
        if err <= 1.0:
            t += h
            norm = math.sqrt(y_new[0] ** 2 + y_new[1] ** 2 + y_new[2] ** 2)
            d = abs(norm - 1.0)
            if d > drift[0]:
                drift[0] = d
            for i in range(3):
                s[i] = y_new[i] / norm
        factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        if factor < 0.2:
            factor = 0.2
        elif factor > 5.0:
            factor = 5.0
        h *= factor
        if h > h_max:
            h = h_max
        if h < 1e-13:
            return t, h, 1
    return t, h, 0


@njit(cache=True, nogil=True)
def _record_samples(s, t0, sample_dt, n_samples, tol, lam, e1, e2, omega, phi, out):
    """Fill out[(n_samples, 3)] with the state at t0 + k*sample_dt.  Returns
    (status, drift)."""
    drift = np.zeros(1)
    t = t0
    h = 1e-3
    for i in range(n_samples):
        target = t0 + i * sample_dt
        t, h, status = _advance_to(s, t, target, h, tol, lam, e1, e2, omega, phi, drift)
        if status != 0:
            return status, drift[0]
        out[i, 0] = s[0]
        out[i, 1] = s[1]
        out[i, 2] = s[2]
    return 0, drift[0]


@njit(cache=True, nogil=True)
def _average_z(s, t0, burn, span, tol, lam, e1, e2, omega, phi):
    """Trapezoidal time average of Z over [t0+burn, t0+burn+span].

    Accumulates over the integrator's accepted steps, with step endpoints
    forced at the window boundaries.  Returns (zbar, status, drift).
    """
    drift = np.zeros(1)
    t = t0
    h = 1e-3
    t, h, status = _advance_to(s, t, t0 + burn, h, tol, lam, e1, e2, omega, phi, drift)
    if status != 0:
        return 0.0, status, drift[0]
    t_end = t0 + burn + span
    k = np.empty((7, 3))
    y_new = np.empty(3)
    y_err = np.empty(3)
    acc = 0.0
    h_max = 0.5
    while t < t_end:
        if h > t_end - t:
            h = t_end - t
        _dp_step(s, t, h, lam, e1, e2, omega, phi, k, y_new, y_err)
        err = 0.0
        for i in range(3):
            sc = tol + tol * max(abs(s[i]), abs(y_new[i]))
            err += (y_err[i] / sc) ** 2
        err = math.sqrt(err / 3.0)
        if err <= 1.0:
            acc += 0.5 * (s[2] + y_new[2]) * h
            t += h
            norm = math.sqrt(y_new[0] ** 2 + y_new[1] ** 2 + y_new[2] ** 2)
            d = abs(norm - 1.0)
            if d > drift[0]:
                drift[0] = d
            for i in range(3):
                s[i] = y_new[i] / norm
        factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        if factor < 0.2:
            factor = 0.2
        elif factor > 5.0:
            factor = 5.0
        h *= factor
        if h > h_max:
            h = h_max
        if h < 1e-13:
            return 0.0, 1, drift[0]
    return acc / span, 0, drift[0]


@njit(cache=True, nogil=True)
def _accumulate_hist(s, t0, burn, span, sample_dt, tol, lam, e1, e2, omega, phi, hist):
    """Histogram (Z, phi) visits sampled every sample_dt over the window.

    hist has shape (nz, nphi) over Z in [-1, 1], phi in [0, 2*pi).  Also
    accumulates the trapezoidal average of Z between consecutive samples so
    callers can compare the histogram against the average of the very same
    trajectory.  Returns (zbar, status, drift).
    """
    drift = np.zeros(1)
    nz, nphi = hist.shape
    t = t0
    h = 1e-3
    t, h, status = _advance_to(s, t, t0 + burn, h, tol, lam, e1, e2, omega, phi, drift)
    if status != 0:
        return 0.0, status, drift[0]
    n_samples = int(round(span / sample_dt))
    z_prev = s[2]
    z_acc = 0.0
    for i in range(n_samples):
        target = t0 + burn + (i + 1) * sample_dt
        t, h, status = _advance_to(s, t, target, h, tol, lam, e1, e2, omega, phi, drift)
        if status != 0:
            return 0.0, status, drift[0]
        z = s[2]
        z_acc += 0.5 * (z_prev + z)
        z_prev = z
        ang = math.atan2(s[1], s[0]) % TWO_PI
        iz = int((z + 1.0) * 0.5 * nz)
        if iz == nz:
            iz = nz - 1
        ip = int(ang / TWO_PI * nphi)
        if ip == nphi:
            ip = nphi - 1
        hist[iz, ip] += 1.0
    return z_acc / n_samples, 0, drift[0]


# ---------------------------------------------------------------------------
# public types and operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalState:
    """Unit spin vector with its time stamp."""

    s: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        vec = np.array(self.s, dtype=float)
        if vec.shape != (3,):
            raise ValueError("classical state needs a 3-vector")
        if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
            raise ValueError("spin vector must have unit norm")
        vec.setflags(write=False)
        object.__setattr__(self, "s", vec)

    @classmethod
    def from_z_phi(cls, z: float, phi: float, t: float = 0.0) -> "ClassicalState":
        r = math.sqrt(max(1.0 - z * z, 0.0))
        return cls(np.array([r * math.cos(phi), r * math.sin(phi), z]), t)

    @property
    def z(self) -> float:
        return float(self.s[2])

    @property
    def phi(self) -> float:
        return float(math.atan2(self.s[1], self.s[0]) % TWO_PI)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled classical trajectory."""

    t: np.ndarray
    s: np.ndarray          # shape (n, 3)

    @property
    def z(self) -> np.ndarray:
        return self.s[:, 2]

    @property
    def phi(self) -> np.ndarray:
        return np.mod(np.arctan2(self.s[:, 1], self.s[:, 0]), TWO_PI)


@dataclass(frozen=True)
class PSOSData:
    """Stroboscopic (Z, phi) section, one point per drive period."""

    points: np.ndarray     # shape (n, 2): columns Z, phi
    lam: float
    drive: DriveParams


@dataclass(frozen=True)
class PhasePDF:
    """Normalized occupation histogram over (Z, phi)."""

    z_edges: np.ndarray
    phi_edges: np.ndarray
    density: np.ndarray    # shape (nz, nphi), sums to 1 against the bin areas

    @property
    def bin_area(self) -> float:
        return float((self.z_edges[1] - self.z_edges[0])
                     * (self.phi_edges[1] - self.phi_edges[0]))

    @property
    def z_centers(self) -> np.ndarray:
        return 0.5 * (self.z_edges[:-1] + self.z_edges[1:])

    @property
    def phi_centers(self) -> np.ndarray:
        return 0.5 * (self.phi_edges[:-1] + self.phi_edges[1:])


def classical_rhs(state, t: float, lam: float, p: DriveParams) -> np.ndarray:
    """ds/dt = grad(H) x s in Cartesian spin components."""
    s = state.s if isinstance(state, ClassicalState) else np.asarray(state, dtype=float)
    out = np.empty(3)
    _rhs(s, t, lam, p.e1, p.e2, p.omega, p.phi, out)
    return out


def zphi_rhs(z: float, phi: float, t: float, lam: float, p: DriveParams):
    """Pendulum form of the equations of motion, valid for |Z| < 1.

    dZ/dt   = -sqrt(1 - Z^2) sin(phi)
    dphi/dt = lam Z + Z cos(phi) / sqrt(1 - Z^2) + 2 f(t)
    """
    root = math.sqrt(1.0 - z * z)
    f = drive_force(p, t)
    return -root * math.sin(phi), lam * z + z * math.cos(phi) / root + 2.0 * f


def classical_energy(z: float, phi: float, lam: float, f: float = 0.0) -> float:
    """H(Z, phi) at drive value f."""
    return 0.5 * lam * z * z - math.sqrt(max(1.0 - z * z, 0.0)) * math.cos(phi) + 2.0 * f * z


def integrate_classical(init: ClassicalState, horizon: float, lam: float,
                        p: DriveParams, tol: float = 1e-10,
                        sample_dt: float = 0.1) -> Trajectory:
    """Integrate for `horizon` time units, sampling every sample_dt."""
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    n_samples = int(round(horizon / sample_dt)) + 1
    out = np.empty((n_samples, 3))
    s = np.array(init.s, dtype=float)
    status, drift = _record_samples(s, init.t, sample_dt, n_samples, tol,
                                    lam, p.e1, p.e2, p.omega, p.phi, out)
    _raise_on(status, drift, tol)
    return Trajectory(init.t + sample_dt * np.arange(n_samples), out)


def psos(init: ClassicalState, n_periods: int, lam: float, p: DriveParams,
         tol: float = 1e-10) -> PSOSData:
    """Poincare section strobed at t = init.t + k*T, k = 0 .. n_periods."""
    if n_periods < 1:
        raise ValueError("need at least one period")
    out = np.empty((n_periods + 1, 3))
    s = np.array(init.s, dtype=float)
    status, drift = _record_samples(s, init.t, p.period, n_periods + 1, tol,
                                    lam, p.e1, p.e2, p.omega, p.phi, out)
    _raise_on(status, drift, tol)
    points = np.column_stack([out[:, 2], np.mod(np.arctan2(out[:, 1], out[:, 0]), TWO_PI)])
    return PSOSData(points, lam, p)


def classical_api(init: ClassicalState, w: AveragingWindow, lam: float,
                  p: DriveParams, tol: float = 1e-10) -> float:
    """Continuous trapezoidal average of Z(t) over [burn_in, burn_in + span]."""
    s = np.array(init.s, dtype=float)
    zbar, status, drift = _average_z(s, init.t, w.burn_in, w.span, tol,
                                     lam, p.e1, p.e2, p.omega, p.phi)
    _raise_on(status, drift, tol)
    return float(zbar)


def phase_pdf(samples, nz: int = 200, nphi: int = 200) -> PhasePDF:
    """Normalized 2D histogram of (Z, phi) samples.

    `samples` is an (n, 2) array of (Z, phi) pairs or a Trajectory.
    """
    if isinstance(samples, Trajectory):
        pts = np.column_stack([samples.z, samples.phi])
    else:
        pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        raise ValueError("no samples to histogram")
    z_edges = np.linspace(-1.0, 1.0, nz + 1)
    phi_edges = np.linspace(0.0, TWO_PI, nphi + 1)
    counts, _, _ = np.histogram2d(pts[:, 0], np.mod(pts[:, 1], TWO_PI),
                                  bins=[z_edges, phi_edges])
    return _normalized_pdf(counts, z_edges, phi_edges)


def pdf_from_run(init: ClassicalState, w: AveragingWindow, lam: float,
                 p: DriveParams, tol: float = 1e-10, nz: int = 200,
                 nphi: int = 200, sample_dt: float = 0.1) -> PhasePDF:
    """Occupation PDF accumulated on the fly from a single long trajectory."""
    return pdf_and_average_from_run(init, w, lam, p, tol, nz, nphi, sample_dt)[0]


def pdf_and_average_from_run(init: ClassicalState, w: AveragingWindow, lam: float,
                             p: DriveParams, tol: float = 1e-10, nz: int = 200,
                             nphi: int = 200, sample_dt: float = 0.1):
    """Occupation PDF plus the mean imbalance of the same trajectory.

    Sharing one trajectory makes `api_from_pdf(pdf)` and the returned average
    differ only by binning and sampling discretization, not by the chaotic
    window-to-window scatter two independent runs would show.
    """
    hist = np.zeros((nz, nphi))
    s = np.array(init.s, dtype=float)
    zbar, status, drift = _accumulate_hist(s, init.t, w.burn_in, w.span, sample_dt,
                                           tol, lam, p.e1, p.e2, p.omega, p.phi, hist)
    _raise_on(status, drift, tol)
    z_edges = np.linspace(-1.0, 1.0, nz + 1)
    phi_edges = np.linspace(0.0, TWO_PI, nphi + 1)
    return _normalized_pdf(hist, z_edges, phi_edges), float(zbar)


def api_from_pdf(pdf: PhasePDF) -> float:
    """Mean imbalance of the PDF: sum over bins of density * area * Z_center."""
    return float(pdf.bin_area * np.dot(pdf.z_centers, pdf.density.sum(axis=1)))


def _normalized_pdf(counts, z_edges, phi_edges) -> PhasePDF:
    area = (z_edges[1] - z_edges[0]) * (phi_edges[1] - phi_edges[0])
    total = counts.sum()
    if total == 0:
        raise ValueError("no samples to histogram")
    return PhasePDF(z_edges, phi_edges, counts / (total * area))


def _raise_on(status: int, drift: float, tol: float) -> None:
    if status != 0:
        raise IntegrationError("step size underflow (stiff failure)")
    # 1e-9 is the contract at the default tol = 1e-10; scale for looser runs
    if drift > max(1e-9, 10.0 * tol):
        raise IntegrationError(f"norm drift {drift:.3e} before renormalization")

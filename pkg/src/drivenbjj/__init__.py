"""Driven two-mode Bose-Hubbard dimer: exact propagation, Floquet-mode
analysis, the classical pendulum limit, and Husimi phase-space tools."""

from .model import (
    ACSParams,
    DriveParams,
    ModelParams,
    QuantumState,
    acs_state,
    basis_state,
    build_operators,
    drive_force,
    expect_jz,
    hamiltonian_at,
    reduced_density,
)
from .dynamics import (
    AveragingWindow,
    ObservableSeries,
    PropagationError,
    PropagatorConfig,
    direct_api,
    observable_series,
    propagate,
)
from .floquet import (
    DegenerateSpectrumError,
    FloquetDecomposition,
    ModePairingError,
    ModeWeights,
    api_floquet,
    floquet_decomposition,
    floquet_spectrum,
    mode_api,
    mode_weights,
    monodromy,
    pair_modes,
    quasi_energy_clusters,
)
from .classical import (
    ClassicalState,
    IntegrationError,
    PhasePDF,
    PSOSData,
    Trajectory,
    api_from_pdf,
    classical_api,
    classical_rhs,
    integrate_classical,
    pdf_and_average_from_run,
    pdf_from_run,
    phase_pdf,
    psos,
)
from .husimi import Distribution, SphericalGrid, api_from_tahd, husimi, tahd
from .symmetry import CheckReport, SuiteEntry, run_suite

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

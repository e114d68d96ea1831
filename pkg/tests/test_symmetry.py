"""Symmetry-suite tests: every named check passes at its tolerance for both
integer and half-integer spin lengths, preconditions are enforced, and the
suite runner skips inapplicable checks."""

import math

import numpy as np
import pytest

from drivenbjj.dynamics import PropagatorConfig
from drivenbjj.model import DriveParams, ModelParams
from drivenbjj.symmetry import (
    SUITE_CHECKS,
    check_conjugation_shift_commutation,
    check_mode_conjugation,
    check_mode_mirror_and_shift,
    check_parity_null,
    check_profile_reflection,
    check_time_reversal_null,
    check_weight_cross_state,
    run_suite,
)

from conftest import E1, E2, OMEGA, model

HALF_PI_DRIVE = DriveParams(E1, E2, OMEGA, math.pi / 2)
GENERIC_DRIVE = DriveParams(E1, E2, OMEGA, 0.3)


@pytest.mark.parametrize("n", [2, 3])
def test_parity_null_both_spin_parities(n, cfg):
    rep = check_parity_null(model(n), DriveParams(E1, 0.0, OMEGA, 0.5), cfg)
    assert rep.passed and rep.residual < 1e-10


def test_parity_null_undriven(cfg):
    rep = check_parity_null(model(2), DriveParams(0.0, 0.0, OMEGA, 0.0), cfg)
    assert rep.passed


def test_parity_null_rejects_biharmonic(cfg):
    with pytest.raises(ValueError):
        check_parity_null(model(2), GENERIC_DRIVE, cfg)


@pytest.mark.parametrize("n", [2, 3, 20])
def test_time_reversal_null(n, cfg):
    rep = check_time_reversal_null(model(n), HALF_PI_DRIVE, cfg)
    assert rep.passed
    rep = check_time_reversal_null(
        model(n), DriveParams(E1, E2, OMEGA, 3 * math.pi / 2), cfg)
    assert rep.passed


def test_time_reversal_null_rejects_generic_phase(cfg):
    with pytest.raises(ValueError):
        check_time_reversal_null(model(2), GENERIC_DRIVE, cfg)


@pytest.mark.parametrize("n", [2, 3])
def test_mirror_and_shift_on_grid(n, cfg):
    grid = np.linspace(0.0, 2 * math.pi, 9, endpoint=False)
    rep = check_mode_mirror_and_shift(model(n), GENERIC_DRIVE, grid, cfg)
    assert rep.passed and rep.residual < 1e-10


def test_mirror_self_paired_at_zero(cfg):
    rep = check_mode_mirror_and_shift(model(2), GENERIC_DRIVE, [0.0], cfg)
    assert rep.passed


@pytest.mark.parametrize("n", [2, 20])
def test_weight_cross_state(n, cfg):
    grid = np.linspace(0.0, 2 * math.pi, 5, endpoint=False)
    rep = check_weight_cross_state(model(n), GENERIC_DRIVE, math.pi / 2,
                                   9 * math.pi / 10, grid, cfg)
    assert rep.passed


def test_weight_cross_state_self_paired_balanced(cfg):
    # varphi = pi pairs with itself: the identity reduces to mirror symmetry
    rep = check_weight_cross_state(model(2), GENERIC_DRIVE, math.pi / 2,
                                   math.pi, [0.3, 1.1], cfg)
    assert rep.passed


@pytest.mark.parametrize("n", [2, 3])
def test_conjugation_shift_commutation(n, cfg):
    rep = check_conjugation_shift_commutation(model(n), HALF_PI_DRIVE, cfg)
    assert rep.passed


def test_conjugation_shift_commutation_static(cfg):
    rep = check_conjugation_shift_commutation(
        model(2), DriveParams(0.0, 0.0, OMEGA, math.pi / 2), cfg)
    assert rep.passed


@pytest.mark.parametrize("n", [2, 3])
def test_profile_reflection(n, cfg):
    rep = check_profile_reflection(model(n), HALF_PI_DRIVE, cfg)
    assert rep.passed and rep.residual < 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_mode_conjugation(n, cfg):
    rep = check_mode_conjugation(model(n), GENERIC_DRIVE, cfg)
    assert rep.passed


def test_reports_are_deterministic(cfg):
    a = check_mode_conjugation(model(2), GENERIC_DRIVE, cfg)
    b = check_mode_conjugation(model(2), GENERIC_DRIVE, cfg)
    assert a.residual == b.residual
    assert a.to_dict() == b.to_dict()


def test_suite_skips_inapplicable(cfg):
    entries = run_suite(model(2), GENERIC_DRIVE, cfg, [0.3], math.pi / 2, math.pi)
    status = {e.name: e.status for e in entries}
    assert status["parity_null"] == "skipped"
    assert status["time_reversal_null"] == "skipped"
    assert status["mode_mirror_and_shift"] == "passed"
    assert status["mode_conjugation"] == "passed"


def test_suite_full_pass_at_symmetric_phase(cfg):
    entries = run_suite(model(2), HALF_PI_DRIVE, cfg, [0.4, 1.2], math.pi / 2,
                        9 * math.pi / 10, threads=2)
    assert all(e.status in ("passed", "skipped") for e in entries)
    ran = [e.name for e in entries if e.status == "passed"]
    assert set(ran) >= {"time_reversal_null", "mode_mirror_and_shift",
                        "weight_cross_state", "mode_conjugation",
                        "conjugation_shift_commutation", "profile_reflection"}


def test_suite_rejects_unknown_names(cfg):
    with pytest.raises(ValueError):
        run_suite(model(2), GENERIC_DRIVE, cfg, [0.3], math.pi / 2, math.pi,
                  names=["bogus"])

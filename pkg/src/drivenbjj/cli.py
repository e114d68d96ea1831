"""Command-line front end: experiment orchestration and flat-file output.

Subcommands
-----------
spectrum   quasi-energies, per-mode imbalances, and initial-state weights
api-sweep  quantum and classical asymptotic imbalance over a phi grid
classical  psos | api | pdf for the mean-field pendulum
evolve     real-time quantum imbalance, classical trajectory, and depletion
husimi     time-averaged Husimi density plus the matched classical PDF
check      the symmetry-check suite as a JSON report

Configuration is flat ``section.key = value`` text; ``--set KEY=VALUE``
overrides file values, and every run echoes its full effective config into
the JSON summary.  CSV output is deterministic: fixed column order, fixed
12-significant-digit scientific notation.

Exit codes: 0 success, 1 partial sweep failure, 2 config error,
3 degenerate-spectrum refusal, 4 classical integrator failure,
5 failed checks.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classical as cl
from .dynamics import AveragingWindow, PropagatorConfig, observable_series
from .floquet import DegenerateSpectrumError, api_floquet, floquet_decomposition, mode_weights
from .husimi import SphericalGrid, api_from_tahd, tahd
from .model import ACSParams, DriveParams, ModelParams, acs_state
from .symmetry import SUITE_CHECKS, run_suite


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "model.n": 2,
    "model.lambda": 5.0,
    "drive.e1": 0.4,
    "drive.e2": 0.2,
    "drive.omega": 0.5,
    "drive.phi": 0.0,
    "drive.phi_grid": "",
    "state.theta": math.pi / 2,
    "state.varphi": math.pi,
    "classical.z": 0.0,
    "classical.phi": math.pi,
    "classical.tol": 1e-10,
    "classical.sample_dt": 0.1,
    "classical.n_periods": 10000,
    "classical.burn": 1000.0,
    "classical.span": 1.0e6,
    "propagator.steps_per_period": 256,
    "propagator.tolerance": 1e-10,
    "window.burn_periods": 1000,
    "window.span_periods": 10000,
    "window.samples_per_period": 16,
    "grid.n_theta": 0,
    "grid.n_phi": 0,
    "pdf.n_z": 200,
    "pdf.n_phi": 200,
    "evolve.horizon": 100.0,
    "evolve.samples_per_period": 16,
}


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config_file(path: Path) -> dict:
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


def load_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        overrides = parse_config_file(path)
        unknown = set(overrides) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(overrides)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key: {key}")
        cfg[key] = _parse_value(raw)
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if not (isinstance(cfg["model.n"], int) and cfg["model.n"] >= 1):
        raise ConfigError("model.n must be a positive integer")
    for key in ("drive.omega", "propagator.tolerance", "classical.tol",
                "classical.sample_dt", "evolve.horizon", "classical.span"):
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            raise ConfigError(f"{key} must be positive")
    for key in ("propagator.steps_per_period", "window.samples_per_period",
                "pdf.n_z", "pdf.n_phi", "classical.n_periods",
                "evolve.samples_per_period"):
        if not (isinstance(cfg[key], int) and cfg[key] >= 1):
            raise ConfigError(f"{key} must be a positive integer")
    for key in ("window.burn_periods", "window.span_periods"):
        if not (isinstance(cfg[key], int) and cfg[key] >= 0):
            raise ConfigError(f"{key} must be a nonnegative integer")
    if cfg["window.span_periods"] < 1:
        raise ConfigError("window.span_periods must be >= 1")
    if not 0.0 <= float(cfg["state.theta"]) <= math.pi:
        raise ConfigError("state.theta must lie in [0, pi]")
    if abs(float(cfg["classical.z"])) > 1.0:
        raise ConfigError("classical.z must lie in [-1, 1]")


def parse_phi_grid(spec) -> np.ndarray:
    """start:stop:count, inclusive start, exclusive stop, radians."""
    if not isinstance(spec, str) or not spec:
        raise ConfigError("drive.phi_grid must be 'start:stop:count'")
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bad phi grid {spec!r}: need start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad phi grid {spec!r}: {exc}") from None
    if count < 1:
        raise ConfigError("phi grid needs count >= 1")
    return start + (stop - start) * np.arange(count) / count


def _model(cfg) -> ModelParams:
    return ModelParams.from_lambda(cfg["model.n"], float(cfg["model.lambda"]))


def _drive(cfg, phi=None) -> DriveParams:
    return DriveParams(float(cfg["drive.e1"]), float(cfg["drive.e2"]),
                       float(cfg["drive.omega"]),
                       float(cfg["drive.phi"]) if phi is None else phi)


def _prop_cfg(cfg) -> PropagatorConfig:
    return PropagatorConfig(cfg["propagator.steps_per_period"],
                            float(cfg["propagator.tolerance"]))


def _window(cfg, period) -> AveragingWindow:
    return AveragingWindow.whole_periods(period, cfg["window.burn_periods"],
                                         cfg["window.span_periods"],
                                         cfg["window.samples_per_period"])


def _classical_window(cfg) -> AveragingWindow:
    return AveragingWindow(float(cfg["classical.burn"]), float(cfg["classical.span"]))


def _initial_state(cfg, n):
    return acs_state(ACSParams(float(cfg["state.theta"]), float(cfg["state.varphi"])), n)


def _classical_init(cfg) -> cl.ClassicalState:
    return cl.ClassicalState.from_z_phi(float(cfg["classical.z"]),
                                        float(cfg["classical.phi"]))


def _fmt(x) -> str:
    return f"{x:.11e}"


def _write_rows(out_dir: Path, name: str, header, rows, fmt: str, summary: dict):
    """Write rows as CSV next to the summary, or embed them when fmt = json."""
    if fmt == "json":
        summary["results"][name] = {"header": list(header), "rows": [list(r) for r in rows]}
        return
    path = out_dir / f"{name}.csv"
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row) + "\n")
    summary["results"][name] = str(path)


def _finish(out_dir: Path, command: str, summary: dict, started: float) -> None:
    summary["wall_time_seconds"] = time.time() - started
    path = out_dir / f"{command}_summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _summary_skeleton(command: str, cfg: dict) -> dict:
    return {"command": command, "config_echo": {k: cfg[k] for k in sorted(cfg)},
            "results": {}, "residuals": {}}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg, out_dir: Path, fmt: str, threads: int) -> int:
    started = time.time()
    m, p, pcfg = _model(cfg), _drive(cfg), _prop_cfg(cfg)
    d = floquet_decomposition(m, p, pcfg, cfg["window.samples_per_period"])
    weights = mode_weights(_initial_state(cfg, m.n), d)
    summary = _summary_skeleton("spectrum", cfg)
    rows = [(float(alpha), d.quasi_energies[alpha], d.mode_apis[alpha],
             weights.weights[alpha]) for alpha in range(d.dim)]
    _write_rows(out_dir, "spectrum", ("alpha", "quasi_energy", "mode_api", "weight"),
                rows, fmt, summary)
    summary["residuals"]["weight_sum_minus_1"] = abs(float(np.sum(weights.weights)) - 1.0)
    summary["results"]["api"] = float(np.dot(weights.weights, d.mode_apis))
    _finish(out_dir, "spectrum", summary, started)
    return 0


def cmd_api_sweep(cfg, out_dir: Path, fmt: str, threads: int) -> int:
    started = time.time()
    phis = parse_phi_grid(cfg["drive.phi_grid"])
    m, pcfg = _model(cfg), _prop_cfg(cfg)
    s0 = _initial_state(cfg, m.n)
    qwin = _window(cfg, _drive(cfg).period)
    cwin = _classical_window(cfg)
    init = _classical_init(cfg)

    def point(phi):
        try:
            aq = api_floquet(s0, m, _drive(cfg, phi), pcfg, qwin.samples_per_period)
            ac = cl.classical_api(init, cwin, m.lam, _drive(cfg, phi),
                                  float(cfg["classical.tol"]))
            return (phi, aq, ac, float(m.n), float(cfg["state.theta"]),
                    float(cfg["state.varphi"]), "ok")
        except Exception as exc:                      # recorded per row
            return (phi, math.nan, math.nan, float(m.n), float(cfg["state.theta"]),
                    float(cfg["state.varphi"]), f"error: {exc}")

    with ThreadPoolExecutor(max(threads, 1)) as pool:
        rows = list(pool.map(point, phis))
    summary = _summary_skeleton("api-sweep", cfg)
    _write_rows(out_dir, "api_sweep",
                ("phi", "api_quantum", "api_classical", "n", "theta", "varphi", "status"),
                rows, fmt, summary)
    failures = sum(1 for r in rows if r[-1] != "ok")
    summary["results"]["failed_rows"] = failures
    _finish(out_dir, "api-sweep", summary, started)
    return 1 if failures else 0


def cmd_classical(cfg, out_dir: Path, fmt: str, threads: int, mode: str) -> int:
    started = time.time()
    p = _drive(cfg)
    init = _classical_init(cfg)
    lam = float(cfg["model.lambda"])
    tol = float(cfg["classical.tol"])
    summary = _summary_skeleton("classical", cfg)
    summary["results"]["mode"] = mode
    try:
        if mode == "psos":
            data = cl.psos(init, cfg["classical.n_periods"], lam, p, tol)
            rows = [(z, phi) for z, phi in data.points]
            _write_rows(out_dir, "psos", ("z", "phi"), rows, fmt, summary)
        elif mode == "api":
            zbar = cl.classical_api(init, _classical_window(cfg), lam, p, tol)
            _write_rows(out_dir, "classical_api",
                        ("phi_drive", "z_bar", "burn", "span"),
                        [(p.phi, zbar, float(cfg["classical.burn"]),
                          float(cfg["classical.span"]))], fmt, summary)
            summary["results"]["z_bar"] = zbar
        elif mode == "pdf":
            pdf = cl.pdf_from_run(init, _classical_window(cfg), lam, p, tol,
                                  cfg["pdf.n_z"], cfg["pdf.n_phi"],
                                  float(cfg["classical.sample_dt"]))
            rows = [(zc, pc, pdf.density[i, j])
                    for i, zc in enumerate(pdf.z_centers)
                    for j, pc in enumerate(pdf.phi_centers)]
            _write_rows(out_dir, "classical_pdf", ("z", "phi", "density"), rows,
                        fmt, summary)
            summary["residuals"]["pdf_norm_minus_1"] = \
                abs(float(pdf.density.sum() * pdf.bin_area) - 1.0)
            summary["results"]["api_from_pdf"] = cl.api_from_pdf(pdf)
        else:
            raise ConfigError(f"unknown classical mode {mode!r}")
    except cl.IntegrationError as exc:
        print(f"classical integration failed: {exc}", file=sys.stderr)
        return 4
    _finish(out_dir, "classical", summary, started)
    return 0


def cmd_evolve(cfg, out_dir: Path, fmt: str, threads: int) -> int:
    started = time.time()
    m, p, pcfg = _model(cfg), _drive(cfg), _prop_cfg(cfg)
    horizon = float(cfg["evolve.horizon"])
    K = cfg["evolve.samples_per_period"]
    series = observable_series(_initial_state(cfg, m.n), horizon, m, p, pcfg, K)
    try:
        traj = cl.integrate_classical(_classical_init(cfg), float(series.t[-1]),
                                      m.lam, p, float(cfg["classical.tol"]),
                                      sample_dt=p.period / K)
    except cl.IntegrationError as exc:
        print(f"classical integration failed: {exc}", file=sys.stderr)
        return 4
    summary = _summary_skeleton("evolve", cfg)
    rows = [(series.t[i], series.delta_rho[i], traj.z[i], series.depletion[i])
            for i in range(len(series.t))]
    _write_rows(out_dir, "evolve",
                ("t", "delta_rho_quantum", "z_classical", "depletion"),
                rows, fmt, summary)
    summary["results"]["max_depletion"] = float(np.max(series.depletion))
    _finish(out_dir, "evolve", summary, started)
    return 0


def cmd_husimi(cfg, out_dir: Path, fmt: str, threads: int) -> int:
    started = time.time()
    m, p, pcfg = _model(cfg), _drive(cfg), _prop_cfg(cfg)
    n_z, n_phi = cfg["pdf.n_z"], cfg["pdf.n_phi"]
    grid = SphericalGrid.uniform_z(n_z, n_phi)
    dist = tahd(_initial_state(cfg, m.n), _window(cfg, p.period), m, p, pcfg, grid)
    try:
        pdf = cl.pdf_from_run(_classical_init(cfg), _classical_window(cfg), m.lam,
                              p, float(cfg["classical.tol"]), n_z, n_phi,
                              float(cfg["classical.sample_dt"]))
    except cl.IntegrationError as exc:
        print(f"classical integration failed: {exc}", file=sys.stderr)
        return 4
    summary = _summary_skeleton("husimi", cfg)
    z_centers = np.cos(grid.theta)
    rows = [(z_centers[i], grid.phi[j], dist.values[i, j])
            for i in range(n_z) for j in range(n_phi)]
    _write_rows(out_dir, "tahd", ("cos_theta", "phi", "density"), rows, fmt, summary)
    rows = [(pdf.z_centers[i], pdf.phi_centers[j], pdf.density[i, j])
            for i in range(n_z) for j in range(n_phi)]
    _write_rows(out_dir, "classical_pdf", ("z", "phi", "density"), rows, fmt, summary)

    area = pdf.bin_area
    overlap = float(np.minimum(dist.values, pdf.density).sum() * area)
    summary["results"]["overlap_coefficient"] = overlap
    summary["results"]["api_from_tahd"] = api_from_tahd(dist, m.n)
    summary["results"]["api_from_pdf"] = cl.api_from_pdf(pdf)
    summary["residuals"]["tahd_norm_minus_1"] = abs(dist.integral() - 1.0)
    _finish(out_dir, "husimi", summary, started)
    return 0


def cmd_check(cfg, out_dir: Path, fmt: str, threads: int, checks: str) -> int:
    started = time.time()
    if checks is None:
        names = None                      # run the full suite
    else:
        names = [c.strip() for c in checks.split(",") if c.strip()]
        if not names:
            raise ConfigError("empty check selection")
    m, p, pcfg = _model(cfg), _drive(cfg), _prop_cfg(cfg)
    if cfg["drive.phi_grid"]:
        phi_grid = parse_phi_grid(cfg["drive.phi_grid"])
    else:
        phi_grid = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    entries = run_suite(m, p, pcfg, phi_grid, float(cfg["state.theta"]),
                        float(cfg["state.varphi"]), names=names,
                        threads=max(threads, 1))
    summary = _summary_skeleton("check", cfg)
    report = [e.to_dict() for e in entries]
    (out_dir / "checks.json").write_text(json.dumps(report, indent=2) + "\n")
    summary["results"]["checks"] = report if fmt == "json" else str(out_dir / "checks.json")
    for e in entries:
        if e.report is not None:
            summary["residuals"][e.name] = e.report.residual
    _finish(out_dir, "check", summary, started)
    return 5 if any(e.status == "failed" for e in entries) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivenbjj",
        description="Driven two-mode Bose-Hubbard dimer: Floquet, classical, "
                    "and phase-space analysis.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "api-sweep", "classical", "evolve", "husimi", "check"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = auto)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "classical":
            p.add_argument("mode", choices=("psos", "api", "pdf"))
        if name == "check":
            p.add_argument("--checks", default=None,
                           help=f"comma-separated subset of {','.join(SUITE_CHECKS)}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        threads = args.threads if args.threads > 0 else min(8, os.cpu_count() or 1)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out_dir, args.format, threads)
        if args.command == "api-sweep":
            return cmd_api_sweep(cfg, out_dir, args.format, threads)
        if args.command == "classical":
            return cmd_classical(cfg, out_dir, args.format, threads, args.mode)
        if args.command == "evolve":
            return cmd_evolve(cfg, out_dir, args.format, threads)
        if args.command == "husimi":
            return cmd_husimi(cfg, out_dir, args.format, threads)
        if args.command == "check":
            return cmd_check(cfg, out_dir, args.format, threads, args.checks)
        raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateSpectrumError as exc:
        print(f"degenerate spectrum: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Thin wrappers around the library: each subcommand loads a validated run
configuration, performs one computation, and writes CSV artifacts plus a
run manifest into the output directory.  Exit codes: 0 success, 1 check
failure, 2 invalid configuration, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .action import critical_value, min_action
from .characteristics import (
    CharacteristicState,
    dH_law_residual,
    flow,
    match_calibrated,
)
from .config import DEFAULT_SAMPLE_BOX, RunConfig, load_config
from .errors import ConfigurationError, NumericError
from .fdoracle import LFConfig, lf_solve
from .models import audit_assumptions
from .semigroup import (
    check_properties,
    converge,
    extract_calibrated_curve,
    fixed_point,
    weak_kam_residual,
)
from .torus import GridField, csv_float

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _field_csv(f: GridField) -> str:
    buf = io.StringIO()
    pts = f.grid.points()
    if f.grid.dim == 1:
        buf.write("j,x,u\n")
        for j in range(f.grid.size):
            buf.write(f"{j},{csv_float(pts[j, 0])},{csv_float(f.values[j])}\n")
    else:
        buf.write("j,x1,x2,u\n")
        for j in range(f.grid.size):
            buf.write(
                f"{j},{csv_float(pts[j, 0])},{csv_float(pts[j, 1])},{csv_float(f.values[j])}\n"
            )
    return buf.getvalue()


def _prepare_out(out_dir: str, overwrite: bool):
    if os.path.exists(out_dir):
        if os.listdir(out_dir) and not overwrite:
            raise ConfigurationError(
                f"output directory {out_dir!r} is not empty; pass --overwrite to reuse it"
            )
    else:
        os.makedirs(out_dir)


def _write(out_dir: str, name: str, text: str):
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def _manifest(cfg: RunConfig, out_dir: str, command: str, threads: int, t0: float, extra=None):
    doc = {
        "command": command,
        "version": __version__,
        "numpy": np.__version__,
        "threads": threads,
        "elapsed_seconds": time.perf_counter() - t0,
        "resolved_config": cfg.resolved(),
    }
    if extra:
        doc.update(extra)
    _write(out_dir, "manifest.json", json.dumps(doc, indent=2, default=str) + "\n")


def cmd_solve(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    phi = cfg.phi_field()
    try:
        u, report = fixed_point(
            cfg.model, phi, cfg.T, cfg.dt, cfg.v_max,
            tol=cfg.tol, max_iter=cfg.max_iter, quadrature=cfg.quadrature,
        )
    except NumericError as e:
        print(f"solve: {e}", file=sys.stderr)
        if e.report is not None:
            _write(out_dir, "fixedpoint.csv", e.report.to_csv())
        return EXIT_NUMERIC
    _write(out_dir, "slab.csv", u.to_csv())
    _write(out_dir, "fixedpoint.csv", report.to_csv())
    _manifest(cfg, out_dir, "solve", threads, t0, {"iterations": report.iterations})
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    phi = cfg.phi_field()
    try:
        rep = converge(
            cfg.model, phi, cfg.dt, cfg.v_max, tol=cfg.tol,
            t_checkpoints=cfg.checkpoints, stop_eps=cfg.stop_eps, quadrature=cfg.quadrature,
        )
    except NumericError as e:
        print(f"converge: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(out_dir, "convergence.csv", rep.to_csv())
    _write(out_dir, "u_inf.csv", _field_csv(rep.u_inf))
    res = rep.residual
    summary = io.StringIO()
    summary.write("converged,max_residual_smooth,rms_residual_smooth,kink_count\n")
    summary.write(
        f"{int(rep.converged)},{res.max_abs_smooth!r},{res.rms_smooth!r},{res.kink_count}\n"
    )
    _write(out_dir, "residual.csv", summary.getvalue())
    _manifest(cfg, out_dir, "converge", threads, t0, {"converged": rep.converged})
    if not rep.converged:
        print("converge: increments did not settle before the final checkpoint", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_critical(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    try:
        res = critical_value(
            cfg.model, cfg.a, cfg.grid, cfg.dt, cfg.v_max, cfg.t_max,
            tol=cfg.stop_eps, quadrature=cfg.quadrature,
        )
    except NumericError as e:
        print(f"critical: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(out_dir, "critical.csv", res.to_csv())
    _manifest(cfg, out_dir, "critical", threads, t0, {"c": res.c, "converged": res.converged})
    if not res.converged:
        print("critical: growth-rate estimates are not Cauchy over the horizon", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"critical value estimate: {res.c!r}")
    return EXIT_OK


def cmd_action(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    table = min_action(
        cfg.model, cfg.a, cfg.T, cfg.grid, cfg.dt, cfg.v_max, quadrature=cfg.quadrature
    )
    _write(out_dir, "action.csv", table.to_csv())
    _manifest(cfg, out_dir, "action", threads, t0)
    return EXIT_OK


def cmd_char(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    if cfg.char is None:
        raise ConfigurationError("config key `char`: block is required for the char command")
    s0 = CharacteristicState(
        x=np.asarray(cfg.char["x0"]), u=cfg.char["u0"], p=np.asarray(cfg.char["p0"])
    )
    try:
        traj = flow(cfg.model, s0, cfg.char["t"], cfg.char["dt_ode"])
    except NumericError as e:
        print(f"char: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(out_dir, "trajectory.csv", traj.to_csv())
    law = dH_law_residual(cfg.model, traj)
    _write(
        out_dir, "dh_law.csv",
        f"max_residual,rms_residual\n{law.max_residual!r},{law.rms_residual!r}\n",
    )
    _manifest(cfg, out_dir, "char", threads, t0)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, out_dir: str, threads: int) -> int:
    t0 = time.perf_counter()
    audit = audit_assumptions(cfg.model, DEFAULT_SAMPLE_BOX, 512)
    lf_cfg = LFConfig(
        grid=cfg.grid, alpha=cfg.alpha, dt_fd=cfg.dt_fd, audited_max_hp=audit.max_Hp
    )
    phi = cfg.phi_field()
    n = max(1, int(round(cfg.T / cfg.dt_fd)))
    slab = lf_solve(cfg.model, phi, n * cfg.dt_fd, lf_cfg)
    _write(out_dir, "slab_fd.csv", slab.to_csv())
    _manifest(cfg, out_dir, "oracle", threads, t0)
    return EXIT_OK


def cmd_check(cfg: RunConfig, out_dir: str, threads: int) -> int:
    """Property battery: assumptions, semigroup properties, characteristic
    law, calibrated-curve match, and the cross-solver comparison."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    failures = []
    rows = ["suite,passed,detail"]

    audit = audit_assumptions(cfg.model, DEFAULT_SAMPLE_BOX, 512)
    ok = audit.passed
    detail = ";".join(f"{k}={v}" for k, v in sorted(audit.verdicts.items()))
    rows.append(f"assumptions,{int(ok)},{detail}")
    if not ok:
        failures.append("assumptions (" + ",".join(
            k for k, v in sorted(audit.verdicts.items()) if not v) + ")")

    phi = cfg.phi_field()
    psi = GridField(cfg.grid, phi.values + 0.2 * np.cos(
        2 * np.pi * cfg.grid.points()[:, 0] + 1.0))
    t_list = [t for t in (0.5, 1.0) if t <= cfg.T + 1e-9] or [cfg.T]
    prop = check_properties(
        cfg.model, phi, psi, t_list, cfg.dt, cfg.v_max,
        tol=cfg.tol, quadrature=cfg.quadrature,
    )
    ok = prop.all_within(2 * max(cfg.tol, 1e-12))
    rows.append(f"semigroup_properties,{int(ok)},uniform_bound={prop.uniform_bound!r}")
    if not ok:
        failures.append("semigroup_properties")

    u, _ = fixed_point(cfg.model, phi, cfg.T, cfg.dt, cfg.v_max,
                       tol=cfg.tol, quadrature=cfg.quadrature)
    x_end = int(np.argmin(u.values[-1]))
    curve = extract_calibrated_curve(cfg.model, u, x_end, cfg.v_max,
                                     tol=max(10 * cfg.tol, 1e-8), quadrature=cfg.quadrature)
    ok = curve.max_defect() <= 1e-9
    rows.append(f"calibrated_defect,{int(ok)},max_defect={curve.max_defect()!r}")
    if not ok:
        failures.append("calibrated_defect")

    s0 = CharacteristicState(
        x=cfg.grid.points()[x_end], u=float(u.values[-1, x_end]),
        p=rng.uniform(-1.0, 1.0, size=cfg.grid.dim),
    )
    traj = flow(cfg.model, s0, min(cfg.T, 1.0), 1e-3)
    law = dH_law_residual(cfg.model, traj)
    ok = law.rms_residual <= 1e-4
    rows.append(f"dh_law,{int(ok)},rms={law.rms_residual!r}")
    if not ok:
        failures.append("dh_law")

    match = match_calibrated(cfg.model, curve, u, dt_ode=cfg.dt / 4)
    ok = match.sup_distance <= 5 * cfg.grid.dx
    rows.append(f"char_match,{int(ok)},sup_distance={match.sup_distance!r}")
    if not ok:
        failures.append("char_match")

    lf_cfg = LFConfig(grid=cfg.grid, alpha=cfg.alpha, dt_fd=cfg.dt_fd,
                      audited_max_hp=audit.max_Hp)
    n = max(1, int(round(cfg.T / cfg.dt_fd)))
    fd = lf_solve(cfg.model, phi, n * cfg.dt_fd, lf_cfg)
    gap = float(np.max(np.abs(fd.values[-1] - u.values[-1])))
    ok = gap <= 0.1
    rows.append(f"oracle_cross,{int(ok)},sup_gap={gap!r}")
    if not ok:
        failures.append("oracle_cross")

    _write(out_dir, "check.csv", "\n".join(rows) + "\n")
    res = weak_kam_residual(cfg.model, u.final())
    _write(
        out_dir, "residual.csv",
        "max_residual_smooth,rms_residual_smooth,kink_count\n"
        f"{res.max_abs_smooth!r},{res.rms_smooth!r},{res.kink_count}\n",
    )
    _manifest(cfg, out_dir, "check", threads, t0, {"failures": failures})
    if failures:
        print("check: failing suites: " + ", ".join(failures), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "critical": cmd_critical,
    "action": cmd_action,
    "char": cmd_char,
    "oracle": cmd_oracle,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="weakkam",
        description="Variational and finite-difference solvers for "
        "evolutionary Hamilton-Jacobi equations on the torus.",
    )
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--threads", type=int, default=1, help="worker thread budget")
    p.add_argument("--overwrite", action="store_true", help="reuse a non-empty output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("cli: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    # the kernels are data-parallel array ops; cap the BLAS/OpenMP pools
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(args.threads))
    try:
        cfg = load_config(args.config)
        out_dir = args.out or cfg.out_dir
        if out_dir is None:
            raise ConfigurationError(
                "config key `output.directory`: required unless --out is given"
            )
        _prepare_out(out_dir, args.overwrite)
        return _COMMANDS[args.command](cfg, out_dir, args.threads)
    except (ConfigurationError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

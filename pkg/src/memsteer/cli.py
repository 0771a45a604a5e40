"""Command-line front end wiring the modules into reproducible runs.

    memsteer run --config scenario.ini [--out DIR] [--seed N]
    memsteer run --preset heat-default
    memsteer lambda-sweep --preset heat-default      # alias forcing the mode
    memsteer --list-presets

Each run writes CSV artifacts plus a JSON manifest (configuration echo,
grid sizes, fitted constants, wall time).  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import control, duality, mild, resolvent
from .config import MODES, ScenarioConfig, load_config, parse_config
from .errors import ConfigError, InvariantViolation, NumericalError
from .history import history_bound_constants, weighted_norm
from .presets import preset_names, preset_summary, preset_text
from .report import write_csv, write_json

__all__ = ["main", "execute"]


def _thread_count() -> int:
    raw = os.environ.get("MEMSTEER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _negative_delay_samples(cfg: ScenarioConfig) -> list[float]:
    nodes = cfg.grid().nodes
    return [float(t - cfg.sigma) for t in nodes if t - cfg.sigma < 0.0]


def _history_constants(cfg: ScenarioConfig) -> tuple[float, float]:
    phi = cfg.phi()
    return history_bound_constants(phi, _negative_delay_samples(cfg))


def _run_resolvent_check(cfg: ScenarioConfig, out: Path, manifest: dict) -> None:
    basis = cfg.basis()
    coeffs = cfg.coeffs()
    grids = [cfg.grid(), resolvent.TimeGrid(cfg.tau, 2 * cfg.n_steps)]
    tables = [resolvent.build_resolvent_table(g, basis, coeffs) for g in grids]

    rows = []
    constants: dict = {}

    diag_defect = max(
        float(np.abs(np.diagonal(t.samples, axis1=1, axis2=2) - 1.0).max())
        for t in tables
    )
    if diag_defect != 0.0:
        raise InvariantViolation(f"resolvent diagonal deviates by {diag_defect}")
    rows.append(("diagonal_defect", 0.0, 0.0, 1.0))

    if coeffs.memory_free:
        defects = []
        for t in tables:
            ev = resolvent.evolution_table(t)
            defects.append(float(np.abs(t.samples - ev).max()))
        rows.append(("memory_free_defect", defects[0], defects[1], 1.0))
        constants["memory_free_defect"] = defects[0]
        if defects[0] > 1e-6:
            raise InvariantViolation(
                f"memory-free defect {defects[0]:.3e} exceeds 1e-6"
            )

    fwd = [resolvent.forward_correction_defect(t)[1] for t in tables]
    inv = [resolvent.inverse_correction_defect(t)[1] for t in tables]
    fwd_ratio = fwd[0] / fwd[1] if fwd[1] > 0 else float("inf")
    inv_ratio = inv[0] / inv[1] if inv[1] > 0 else float("inf")
    rows.append(("forward_reconstruction_defect", fwd[0], fwd[1], fwd_ratio))
    rows.append(("inverse_reconstruction_defect", inv[0], inv[1], inv_ratio))
    constants["forward_defect"] = fwd[0]
    constants["inverse_defect"] = inv[0]
    if not coeffs.memory_free:
        if fwd[0] > 1e-3 or inv[0] > 1e-3:
            raise InvariantViolation(
                f"reconstruction defects ({fwd[0]:.3e}, {inv[0]:.3e}) exceed 1e-3"
            )
        if fwd_ratio < 3.5 or inv_ratio < 3.5:
            raise InvariantViolation(
                f"defect shrink factors ({fwd_ratio:.2f}, {inv_ratio:.2f}) below 3.5"
            )

    m_fit, beta_fit = resolvent.exponential_bound_fit(tables[0])
    constants["bound_M"] = m_fit
    constants["bound_beta"] = beta_fit
    rows.append(("exponential_bound_beta", beta_fit, beta_fit, 1.0))

    constants["n_beta"] = {}
    for beta in cfg.beta_list:
        vals = [resolvent.fractional_bound_scan(t, beta) for t in tables]
        stability = vals[1] / vals[0] if vals[0] > 0 else float("inf")
        rows.append((f"fractional_bound_beta_{beta:g}", vals[0], vals[1], stability))
        constants["n_beta"][f"{beta:g}"] = vals[0]
        if not (0.9 <= stability <= 1.1):
            raise InvariantViolation(
                f"fractional bound for beta={beta} moved by {stability:.3f}x "
                "under grid refinement"
            )

    h = grids[0].h
    beta_mid = cfg.beta_list[len(cfg.beta_list) // 2]
    sweep = resolvent.cocycle_ratio_sweep(
        tables[0],
        cfg.alpha,
        beta_mid,
        t0=0.0,
        epsilons=[k * h for k in cfg.epsilon_steps],
    )
    for eps, defect, ratio in sweep:
        rows.append((f"cocycle_eps_{eps:g}", defect, ratio, 1.0))
    constants["cocycle_ratios"] = [r for (_, _, r) in sweep]

    h2, h3 = _history_constants(cfg)
    constants["H2"] = h2
    constants["H3"] = h3

    write_csv(
        out / "resolvent_check.csv",
        ["quantity", "value_h", "value_h_half", "ratio"],
        rows,
    )
    manifest["artifacts"].append("resolvent_check.csv")
    if cfg.dump_table:
        resolvent.dump_table_csv(tables[0], out / "resolvent_table.csv")
        manifest["artifacts"].append("resolvent_table.csv")
    manifest["constants"].update(constants)


def _steer_common(cfg: ScenarioConfig):
    problem = cfg.problem()
    table = resolvent.build_resolvent_table(problem.grid, problem.basis, problem.coeffs)
    gram = control.assemble_gramian(table, problem.bmat)
    return problem, table, gram


def _write_steer_artifacts(cfg, out, manifest, result, problem):
    if cfg.dump_trajectory:
        mild.export_trajectory_csv(
            result.trajectory, problem.basis, out / "trajectory.csv"
        )
        manifest["artifacts"].append("trajectory.csv")
        write_csv(
            out / "control.csv",
            ["t"] + [f"u_mode_{k}" for k in problem.basis.mode_numbers],
            [
                (t, *u_row)
                for t, u_row in zip(result.trajectory.times, result.u)
            ],
        )
        manifest["artifacts"].append("control.csv")


def _run_steer(cfg: ScenarioConfig, out: Path, manifest: dict, kind: str) -> None:
    problem, table, gram = _steer_common(cfg)
    d = cfg.target()
    lam = cfg.lambda_value
    x0 = problem.phi.value_at(0.0)
    if kind == "linear":
        result = control.linear_optimal_control(
            lam, table, gram, x0, d, problem.bmat
        )
        outer_iterations = 1
    else:
        result = control.nonlinear_control_loop(lam, problem, d, table, gram)
        outer_iterations = result.outer_iterations
    if result.identity_residual > 1e-6:
        raise InvariantViolation(
            f"terminal identity residual {result.identity_residual:.3e} exceeds 1e-6"
        )
    cost = control.cost_functional(result.trajectory, result.u, d, lam)
    h2, h3 = _history_constants(cfg)
    summary = {
        "lambda": lam,
        "terminal_error": result.terminal_error,
        "identity_residual": result.identity_residual,
        "control_energy": control.control_energy(result.u, problem.grid.h),
        "cost": cost,
        "outer_iterations": outer_iterations,
        "H2": h2,
        "H3": h3,
    }
    if kind == "linear":
        # the cost of the forcing-free problem is an exact quadratic in u,
        # so the optimum must be stationary to perturbations
        max_diff, min_gap = control.optimality_perturbation_test(
            result.trajectory, result.u, d, lam, table, problem.bmat,
            n_random=16, eps=1e-4, seed=cfg.seed,
        )
        if max_diff > 1e-4 * (1.0 + abs(cost)):
            raise InvariantViolation(
                f"stationarity violated: max central difference {max_diff:.3e}"
            )
        summary["stationarity_max_central_difference"] = max_diff
        summary["perturbation_min_cost_gap"] = min_gap
    manifest["constants"].update({"H2": h2, "H3": h3})
    write_json(out / "steer_summary.json", summary)
    manifest["artifacts"].append("steer_summary.json")
    _write_steer_artifacts(cfg, out, manifest, result, problem)


def _run_lambda_sweep(cfg: ScenarioConfig, out: Path, manifest: dict) -> None:
    problem, table, gram = _steer_common(cfg)
    d = cfg.target()
    rows = control.lambda_sweep(
        cfg.lambda_list,
        problem,
        d,
        table,
        gram,
        kind=cfg.sweep_kind,
        threads=_thread_count(),
    )
    if not rows:
        manifest["warnings"].append("empty lambda list: header-only sweep CSV")
    write_csv(
        out / "sweep.csv",
        [
            "lambda",
            "terminal_error",
            "control_energy",
            "outer_iters",
            "identity_residual",
        ],
        [
            (
                r.lam,
                r.terminal_error,
                r.control_energy,
                r.outer_iterations,
                r.identity_residual,
            )
            for r in rows
        ],
    )
    manifest["artifacts"].append("sweep.csv")
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        manifest["warnings"].append(f"lambda={r.lam:g} {r.status}")
    slope = control.decay_slope(rows)
    h2, h3 = _history_constants(cfg)
    summary = {
        "decay_slope": slope,
        "rows": len(rows),
        "failed_rows": len(failed),
        "kind": cfg.sweep_kind,
        "H2": h2,
        "H3": h3,
    }
    manifest["constants"].update({"decay_slope": slope, "H2": h2, "H3": h3})
    write_json(out / "sweep_summary.json", summary)
    manifest["artifacts"].append("sweep_summary.json")
    ok_rows = [r for r in rows if r.status == "ok"]
    if len(ok_rows) >= 2 and not failed:
        errors = [r.terminal_error for r in ok_rows]
        if not all(b < a for a, b in zip(errors, errors[1:])):
            raise InvariantViolation(
                f"terminal errors {errors} are not strictly decreasing along the sweep"
            )
        bad = [r for r in ok_rows if r.identity_residual > 1e-6]
        if bad:
            raise InvariantViolation(
                f"terminal identity residual exceeds 1e-6 at lambda={bad[0].lam:g}"
            )


def _run_duality_lab(cfg: ScenarioConfig, out: Path, manifest: dict) -> None:
    rng = np.random.default_rng(cfg.seed)
    dim = cfg.duality_dim
    identity_worst = 0.0
    for p in cfg.p_list:
        for _ in range(16):
            x = rng.standard_normal(dim)
            jx = duality.duality_map(x, p)
            xn = np.linalg.norm(x, ord=p)
            pairing = abs(float(x @ jx) - xn**2)
            dualn = abs(np.linalg.norm(jx, ord=duality.dual_exponent(p)) - xn)
            identity_worst = max(identity_worst, pairing / max(xn**2, 1e-300),
                                 dualn / max(xn, 1e-300))
    if identity_worst > 1e-12:
        raise InvariantViolation(
            f"duality identity defect {identity_worst:.3e} exceeds 1e-12"
        )
    monotone_worst = 0.0
    for _ in range(cfg.duality_n_random):
        p = cfg.p_list[int(rng.integers(len(cfg.p_list)))]
        x = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        gap = float(
            (x - y) @ (duality.duality_map(x, p) - duality.duality_map(y, p))
        )
        monotone_worst = min(monotone_worst, gap)
    if monotone_worst < -1e-12:
        raise InvariantViolation(
            f"duality mapping not monotone: worst pairing {monotone_worst:.3e}"
        )
    a = rng.standard_normal((dim, dim))
    m = a @ a.T + 0.1 * np.eye(dim)
    rows = []
    contraction_ok = True
    decay_ok = True
    for p in cfg.p_list:
        x = rng.standard_normal(dim)
        report = duality.contraction_and_decay_check(
            m, x, p, cfg.duality_lambda_list
        )
        contraction_ok &= report.contraction_ok
        decay_ok &= report.strictly_decreasing
        for lam, zn in zip(report.lambdas, report.solution_norms):
            rows.append((p, lam, zn, float(np.linalg.norm(x, ord=p))))
    write_csv(
        out / "duality.csv",
        ["p", "lambda", "solution_norm", "data_norm"],
        rows,
    )
    manifest["artifacts"].append("duality.csv")
    summary = {
        "identity_worst_relative_defect": identity_worst,
        "monotonicity_worst_pairing": monotone_worst,
        "contraction_ok": contraction_ok,
        "decay_strictly_decreasing": decay_ok,
        "pairs_checked": cfg.duality_n_random,
    }
    write_json(out / "duality_summary.json", summary)
    manifest["artifacts"].append("duality_summary.json")
    if not (contraction_ok and decay_ok):
        raise InvariantViolation(
            "regularization sweep violated contraction or decay"
        )


_RUNNERS = {
    "resolvent-check": _run_resolvent_check,
    "steer-linear": lambda cfg, out, man: _run_steer(cfg, out, man, "linear"),
    "steer-nonlinear": lambda cfg, out, man: _run_steer(cfg, out, man, "nonlinear"),
    "lambda-sweep": _run_lambda_sweep,
    "duality-lab": _run_duality_lab,
}


def execute(cfg: ScenarioConfig, out_dir: Path) -> dict:
    """Run one scenario, writing artifacts and the manifest into out_dir."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out_dir} is not writable: {exc}")
    manifest = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "config": cfg.raw,
        "grid": {"tau": cfg.tau, "n_steps": cfg.n_steps, "n_modes": cfg.n_modes},
        "constants": {},
        "artifacts": [],
        "warnings": [],
        "backend": __import__("memsteer").BACKEND,
    }
    start = time.perf_counter()
    status = 0
    try:
        _RUNNERS[cfg.mode](cfg, out_dir, manifest)
    except InvariantViolation as exc:
        manifest["error"] = f"invariant violation: {exc}"
        status = 4
    except NumericalError as exc:
        manifest["error"] = f"numerical error: {exc}"
        status = 3
    finally:
        manifest["wall_time_s"] = time.perf_counter() - start
        manifest["exit_status"] = status
        write_json(out_dir / "manifest.json", manifest)
    manifest["_status"] = status
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memsteer",
        description="resolvent, mild-solution and steering experiments "
        "for heat conduction with memory",
    )
    parser.add_argument(
        "--list-presets", action="store_true", help="list named presets and exit"
    )
    sub = parser.add_subparsers(dest="command")
    for name in ("run",) + MODES:
        sp = sub.add_parser(
            name,
            help="run a scenario"
            if name == "run"
            else f"run a scenario forcing mode {name}",
        )
        group = sp.add_mutually_exclusive_group(required=True)
        group.add_argument("--config", type=str, help="path to an INI scenario file")
        group.add_argument("--preset", type=str, help="name of a built-in preset")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        for name in preset_names():
            print(f"{name}: {preset_summary(name)}")
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.preset is not None:
            try:
                text = preset_text(args.preset)
            except KeyError:
                raise ConfigError(
                    f"unknown preset {args.preset!r}; available: "
                    f"{', '.join(preset_names())}"
                )
            cfg = parse_config(text, source=f"preset:{args.preset}")
        else:
            cfg = load_config(args.config)
        if args.command != "run":
            cfg.mode = args.command
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"run.seed must be >= 0, got {args.seed}")
            cfg.seed = args.seed
        out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
        manifest = execute(cfg, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    if manifest["_status"] != 0:
        print(manifest.get("error", "run failed"), file=sys.stderr)
    return manifest["_status"]


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ground state, sweeps, solves, and diagnostics.

Subcommands: ground-state, sweep, solve, constant-branch, profile-check.
Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import ground_state as gs
from .config import DEFAULT_CONFIG, ExperimentConfig, apply_overrides, parse_config_file
from .errors import NumericalError, ParameterError
from .grid import TorusGrid, load_field, norm_eps_sq, save_field
from .nehari import SystemParams, energy
from .profiles import (
    PeakSpec,
    build_peak,
    constant_branch,
    default_cutoff_radius,
    diagnose,
)
from .reports import (
    SweepRow,
    render_constant_branch_figure,
    render_field_slice,
    render_ground_state_figure,
    render_sweep_figures,
    write_sweep_csv,
)
from .solver import dedup_reports, minimize_from

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

HIGH_ENERGY_DELTA = 0.1  # candidate threshold: energy > (1 + delta) * m_infinity


def _json_dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True) + "\n")


def _load_config(args, require_resolution: bool = True) -> ExperimentConfig:
    cfg = DEFAULT_CONFIG
    if args.config:
        cfg = apply_overrides(cfg, parse_config_file(args.config))
    cli_overrides = {
        "p": args.p,
        "a": args.a,
        "period_length": args.period_length,
        "n_per_axis": args.n,
        "epsilon_list": args.epsilon_list,
        "seed_points": args.seeds,
        "output_dir": args.out,
        "rng_seed": args.seed,
        "grad_tol": args.grad_tol,
        "max_iters": args.max_iters,
        "threads": args.threads,
    }
    if args.dealias:
        cli_overrides["dealias"] = True
    if args.no_plots:
        cli_overrides["plots"] = False
    if args.verbose:
        cli_overrides["verbose"] = True
    cfg = apply_overrides(cfg, cli_overrides)
    return cfg.validate(require_resolution=require_resolution)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# ground-state
# ---------------------------------------------------------------------------


def cmd_ground_state(args) -> int:
    cfg = _load_config(args)
    tol = args.tol
    out = _out_dir(cfg)
    profile = gs.find_ground_state(cfg.p, tol=tol)
    table_path = out / f"profile_p{cfg.p:g}.txt"
    gs.save_profile(table_path, profile)
    identity_err = abs(profile.h1_norm_sq - profile.p_mass) / profile.h1_norm_sq
    _json_dump(out / "ground_state.json", {
        "u0": profile.u0,
        "m_infinity": gs.limit_energy(profile),
        "nehari_identity_error": identity_err,
    })
    if cfg.plots:
        render_ground_state_figure(out, profile)
    print(f"ground state p={cfg.p:g}: u0={profile.u0:.8f}, "
          f"identity error {identity_err:.2e}, table -> {table_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep / solve
# ---------------------------------------------------------------------------


def _solve_task(cfg: ExperimentConfig, grid: TorusGrid, profile, m_inf: float,
                eps: float, seed_idx: int, seed, out: Path):
    """One (epsilon, seed) unit of work; returns (row, report_or_None)."""
    P = cfg.system_params(eps)
    r = cfg.cutoff_radius or default_cutoff_radius(grid.period_length, eps)
    row = SweepRow(epsilon=eps, seed_index=seed_idx, status="")
    try:
        w = build_peak(PeakSpec(tuple(seed), eps, r), profile, grid)
        row.w_norm_eps_sq = norm_eps_sq(w, eps)
        log = None
        if cfg.verbose:
            log = open(out / f"iterations_e{eps:g}_s{seed_idx}.jsonl", "w")
        try:
            rep = minimize_from(w, P, cfg.solver_options(), log=log)
        finally:
            if log is not None:
                log.close()
        row.t_w = rep.t_history[0]
        row.energy = rep.energy
        if not rep.converged:
            row.status = "not_converged"
            return row, rep
        diag = diagnose(rep.field, P, profile, m_inf)
        row.concentration_ratio = diag.concentration_ratio
        row.profile_error = diag.sup_profile_error
        row.phi_c2 = diag.phi_c2
        row.n_local_maxima = diag.n_local_maxima
        row.max_value = diag.max_value
        if diag.barycenter is not None:
            row.barycenter_x, row.barycenter_y, row.barycenter_z = diag.barycenter
        if not rep.is_nonconstant:
            row.status = "converged_constant"
        elif rep.energy > (1.0 + HIGH_ENERGY_DELTA) * m_inf:
            row.status = "converged_high_energy"
        else:
            row.status = "converged"
        dump = out / "fields" / f"field_e{eps:g}_s{seed_idx}.sbpf"
        dump.parent.mkdir(exist_ok=True)
        save_field(dump, rep.field, epsilon=eps)
        row.field_file = str(dump.relative_to(out))
        return row, rep
    except NumericalError as exc:
        row.status = f"error:{type(exc).__name__}"
        return row, None


def _run_epsilon_grid(cfg: ExperimentConfig, epsilon_list, out: Path):
    grid = TorusGrid(cfg.n_per_axis, cfg.period_length)
    profile = gs.find_ground_state(cfg.p)
    m_inf = gs.limit_energy(profile)
    tasks = [(i, eps, j, seed)
             for i, eps in enumerate(epsilon_list)
             for j, seed in enumerate(cfg.seed_points)]

    results = {}
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {
                (i, j): pool.submit(_solve_task, cfg, grid, profile, m_inf,
                                    eps, j, seed, out)
                for i, eps, j, seed in tasks
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for i, eps, j, seed in tasks:
            results[(i, j)] = _solve_task(cfg, grid, profile, m_inf, eps, j, seed, out)

    rows, reports = [], {}
    for i, eps in enumerate(epsilon_list):
        eps_rows = []
        for j in range(len(cfg.seed_points)):
            row, rep = results[(i, j)]
            eps_rows.append(row)
            if rep is not None and rep.converged:
                reports.setdefault(i, []).append(rep)
        converged_energies = [r.energy for r in eps_rows
                              if r.status.startswith("converged")]
        m_eps = min(converged_energies) if converged_energies else None
        for row in eps_rows:
            row.m_eps_estimate = m_eps
        rows.extend(eps_rows)
    return grid, profile, m_inf, rows, reports


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    grid, profile, m_inf, rows, reports = _run_epsilon_grid(cfg, cfg.epsilon_list, out)

    csv_path = out / "sweep.csv"
    write_sweep_csv(csv_path, rows)

    distinct_counts = {}
    diag_path = out / "solutions.jsonl"
    with open(diag_path, "w") as fh:
        for i, eps in enumerate(cfg.epsilon_list):
            distinct = dedup_reports(reports.get(i, []))
            distinct_counts[repr(float(eps))] = len(distinct)
            for rep in distinct:
                diag = diagnose(rep.field, rep.params, profile, m_inf)
                fh.write(diag.to_json() + "\n")

    _json_dump(out / "sweep_summary.json", {
        "rng_seed": cfg.rng_seed,
        "m_infinity": m_inf,
        "m_eps_estimate": {
            repr(float(eps)): next(
                (r.m_eps_estimate for r in rows if r.epsilon == eps), None)
            for eps in cfg.epsilon_list
        },
        "distinct_solutions": distinct_counts,
    })
    if cfg.plots:
        render_sweep_figures(out, rows, m_inf)

    bad = [r for r in rows if r.status.startswith("error") or r.status == "not_converged"]
    print(f"sweep: {len(rows)} runs, {len(bad)} failures, csv -> {csv_path}")
    return EXIT_NUMERICAL if bad else EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load_config(args, require_resolution=False)
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon_list[0]
    cfg = apply_overrides(cfg, {"epsilon_list": (eps,)}).validate()
    out = _out_dir(cfg)
    grid, profile, m_inf, rows, reports = _run_epsilon_grid(cfg, (eps,), out)

    csv_path = out / f"solve_e{eps:g}.csv"
    write_sweep_csv(csv_path, rows)
    distinct = dedup_reports(reports.get(0, []))
    with open(out / f"solutions_e{eps:g}.jsonl", "w") as fh:
        for rep in distinct:
            diag = diagnose(rep.field, rep.params, profile, m_inf)
            fh.write(diag.to_json() + "\n")
    if cfg.plots and distinct:
        render_field_slice(out, distinct[0].field, f"solution_e{eps:g}")

    bad = [r for r in rows if r.status.startswith("error") or r.status == "not_converged"]
    print(f"solve: {len(distinct)} distinct solution(s) at epsilon={eps:g}, "
          f"csv -> {csv_path}")
    return EXIT_NUMERICAL if bad else EXIT_OK


# ---------------------------------------------------------------------------
# constant-branch
# ---------------------------------------------------------------------------


def cmd_constant_branch(args) -> int:
    cfg = _load_config(args, require_resolution=False)
    out = _out_dir(cfg)
    c_star, coeff = constant_branch(cfg.p)
    residual = abs(c_star ** (cfg.p - 2.0) - 4.0 * math.pi * c_star**2 - 1.0)
    grid = TorusGrid(cfg.n_per_axis, cfg.period_length)
    const = grid.constant(c_star)
    energies = {}
    scaled = []
    for eps in cfg.epsilon_list:
        J = energy(const, cfg.system_params(eps))
        energies[repr(float(eps))] = J
        scaled.append(J * eps**3)
    spread = (max(scaled) - min(scaled)) / abs(scaled[0])
    _json_dump(out / "constant_branch.json", {
        "c_star": c_star,
        "residual": residual,
        "energy_coefficient": coeff,
        "energies": energies,
        "j_eps3_relative_spread": spread,
    })
    if cfg.plots:
        render_constant_branch_figure(
            out, cfg.p, c_star, list(cfg.epsilon_list),
            [energies[repr(float(e))] for e in cfg.epsilon_list],
        )
    print(f"constant branch p={cfg.p:g}: c*={c_star:.6f}, residual {residual:.2e}, "
          f"J*eps^3 spread {spread:.2e}")
    if spread > 1e-12:
        print("constant-branch energy scaling violated", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# profile-check
# ---------------------------------------------------------------------------


def cmd_profile_check(args) -> int:
    cfg = _load_config(args, require_resolution=False)
    out = _out_dir(cfg)
    field, eps = load_field(args.field)
    if args.epsilon is not None:
        eps = args.epsilon
    if eps <= 0:
        raise ParameterError("dump carries no epsilon; pass --epsilon")
    profile = gs.find_ground_state(cfg.p)
    m_inf = gs.limit_energy(profile)
    P = SystemParams(p=cfg.p, a=cfg.a, epsilon=eps, dealias=cfg.dealias)
    diag = diagnose(field, P, profile, m_inf)
    payload = json.loads(diag.to_json())
    payload["energy"] = energy(field, P)
    _json_dump(out / "profile_check.json", payload)
    if cfg.plots:
        render_field_slice(out, field, "profile_check_field")
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="rng seed recorded with outputs")
    parser.add_argument("--threads", type=int, help="worker threads for (eps, seed) tasks")
    parser.add_argument("--p", type=float, help="nonlinearity exponent in (4, 6)")
    parser.add_argument("--a", type=float, help="fourth-order coupling in (0, 1/2)")
    parser.add_argument("--period-length", dest="period_length", type=float,
                        help="torus side length")
    parser.add_argument("--n", type=int, help="grid points per axis")
    parser.add_argument("--epsilon-list", dest="epsilon_list",
                        help="comma-separated, strictly decreasing")
    parser.add_argument("--seeds", help="semicolon-separated x,y,z torus points")
    parser.add_argument("--grad-tol", dest="grad_tol", type=float,
                        help="solver stopping tolerance")
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--dealias", action="store_true",
                        help="3/2-rule zero padding for nonlinear terms")
    parser.add_argument("--no-plots", dest="no_plots", action="store_true",
                        help="skip figure rendering")
    parser.add_argument("--verbose", action="store_true",
                        help="emit per-iteration JSON lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbpp",
        description="Variational solver for a fourth-order Schrodinger system "
                    "on the flat 3-torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gs = sub.add_parser("ground-state", help="compute the radial limit profile")
    _add_common(p_gs)
    p_gs.add_argument("--tol", type=float, default=1e-12,
                      help="bisection width on the shooting parameter")
    p_gs.set_defaults(func=cmd_ground_state)

    p_sweep = sub.add_parser("sweep", help="epsilon sweep with multistart solves")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_solve = sub.add_parser("solve", help="multistart solve at one epsilon")
    _add_common(p_solve)
    p_solve.add_argument("--epsilon", type=float, help="overrides the config list")
    p_solve.set_defaults(func=cmd_solve)

    p_cb = sub.add_parser("constant-branch", help="constant solution diagnostics")
    _add_common(p_cb)
    p_cb.set_defaults(func=cmd_constant_branch)

    p_pc = sub.add_parser("profile-check", help="diagnostics for a dumped field")
    _add_common(p_pc)
    p_pc.add_argument("--field", required=True, help="SBPF field dump path")
    p_pc.add_argument("--epsilon", type=float, help="override the dump epsilon")
    p_pc.set_defaults(func=cmd_profile_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

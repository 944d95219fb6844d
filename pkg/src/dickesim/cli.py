"""Command-line entry points and run orchestration.

Subcommands: evolve, lindblad, sweep, phase-diagram, wigner, ground-state.
Flags mirror the flat config keys; a config file provides defaults that
individual flags override.  Numeric outputs are byte-reproducible for
identical configurations (wall-time lives only in the metadata JSON).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import MODES, RunConfig, config_hash, parse_config
from .errors import ConfigError, DickeSimError
from .hamiltonian import ground_state, make_ramp
from .hilbert import SystemParams
from .lindblad import OpenSystemParams, evolve_open, thermal_initial_state
from .observables import reduce_field, reduce_matter, von_neumann_entropy
from .snapshot import snapshot_read, snapshot_write
from .state import initial_state
from .sweep import (
    default_threshold,
    extract_boundaries,
    fit_scaling,
    suggest_n_max,
    velocity_sweep,
)
from .unitary import evolve_pure
from .wigner import (
    agarwal_wigner,
    field_wigner,
    write_planar_grid,
    write_spherical_grid,
)

TRAJECTORY_COLUMNS = (
    "t",
    "lambda",
    "S_N",
    "negativity",
    "log_negativity",
    "parity",
    "jx",
    "jz",
    "n_photons",
    "tail_weight",
)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _entropy_out(s_natural: float, base: str) -> float:
    return s_natural / np.log(2.0) if base == "base2" else s_natural


def _system_params(cfg: RunConfig) -> SystemParams:
    n_max = cfg.n_max
    if n_max is None:
        n_max = suggest_n_max(cfg.n_qubits, cfg.lambda_d, cfg.omega)
    return SystemParams(
        N=cfg.n_qubits,
        n_max=n_max,
        epsilon=cfg.epsilon,
        omega=cfg.omega,
        entropy_log_base=cfg.entropy_log_base,
        tail_threshold=cfg.tail_threshold,
        tail_frac=cfg.tail_frac,
    )


def write_trajectory_csv(path, traj, chash: str, base: str) -> None:
    with open(path, "w") as f:
        f.write(f"# config_hash={chash}\n")
        f.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for r in traj.records:
            row = (
                r.t,
                r.lam,
                _entropy_out(r.S_N, base),
                r.negativity,
                r.log_negativity,
                r.parity,
                r.jx,
                r.jz,
                r.n_photons,
                r.tail_weight,
            )
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_sweep_csv(path, grids: list, chash: str, base: str) -> None:
    """Cells of one or more sweep grids as (N, log2_upsilon, lambda, S_N, logneg)."""
    with open(path, "w") as f:
        f.write(f"# config_hash={chash}\n")
        f.write("N,log2_upsilon,lambda,S_N,logneg\n")
        for grid in grids:
            l2u = np.log2(grid.upsilon_values)
            for i in range(grid.upsilon_values.size):
                for k in range(grid.lambda_checkpoints.size):
                    f.write(
                        ",".join(
                            (
                                str(grid.N),
                                _fmt(l2u[i]),
                                _fmt(grid.lambda_checkpoints[k]),
                                _fmt(_entropy_out(grid.S_N_grid[i, k], base)),
                                _fmt(grid.logneg_grid[i, k]),
                            )
                        )
                        + "\n"
                    )


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _metadata(cfg: RunConfig, chash: str, wall: float, extra: dict) -> dict:
    meta = {
        "config": {k: getattr(cfg, k) for k in sorted(vars(cfg))},
        "config_hash": chash,
        "version": __version__,
        "wall_time_s": wall,
    }
    meta.update(extra)
    return meta


def run(cfg: RunConfig) -> dict:
    """Dispatch a validated configuration; returns a small exit report."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    chash = config_hash(cfg)
    t0 = time.perf_counter()
    outdir = cfg.output_dir
    report: dict = {"mode": cfg.mode, "config_hash": chash, "output_dir": outdir}

    if cfg.mode == "evolve":
        params = _system_params(cfg)
        schedule = make_ramp(
            cfg.resolved_upsilon(),
            lambda_d=cfg.lambda_d,
            checkpoint_dlambda=cfg.checkpoint_dlambda,
            lambda_start=cfg.lambda_start,
        )
        traj = evolve_pure(initial_state(params), params, schedule, tol=cfg.tol)
        csv_path = os.path.join(outdir, "trajectory.csv")
        write_trajectory_csv(csv_path, traj, chash, cfg.entropy_log_base)
        if cfg.snapshot_final:
            snapshot_write(
                traj.final_state, os.path.join(outdir, "final_state.snap"), chash
            )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "metadata.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "n_max_used": params.n_max,
                    "upsilon": schedule.upsilon,
                    "solver_report": traj.solver_report.as_dict(),
                    "checkpoints": int(len(traj.records)),
                    "entropy_is_witness": True,
                },
            ),
        )
        report["files"] = ["trajectory.csv", "metadata.json"]

    elif cfg.mode == "lindblad":
        params = _system_params(cfg)
        open_params = OpenSystemParams(kappa=cfg.kappa, nbar=cfg.nbar)
        schedule = make_ramp(
            cfg.resolved_upsilon(),
            lambda_d=cfg.lambda_d,
            checkpoint_dlambda=cfg.checkpoint_dlambda,
            lambda_start=cfg.lambda_start,
        )
        rho0 = thermal_initial_state(params, open_params)
        traj = evolve_open(rho0, params, schedule, open_params, tol=cfg.tol)
        csv_path = os.path.join(outdir, "trajectory.csv")
        write_trajectory_csv(csv_path, traj, chash, cfg.entropy_log_base)
        if cfg.snapshot_final:
            snapshot_write(
                traj.final_state, os.path.join(outdir, "final_state.snap"), chash
            )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "metadata.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "n_max_used": params.n_max,
                    "upsilon": schedule.upsilon,
                    "kappa": open_params.kappa,
                    "nbar": open_params.nbar,
                    "solver_report": traj.solver_report.as_dict(),
                    "checkpoints": int(len(traj.records)),
                    "entropy_is_witness": open_params.kappa == 0.0,
                },
            ),
        )
        report["files"] = ["trajectory.csv", "metadata.json"]

    elif cfg.mode == "sweep":
        params = _system_params(cfg)
        ups = 2.0 ** np.linspace(
            cfg.upsilon_log2_min, cfg.upsilon_log2_max, cfg.upsilon_count
        )
        schedule = make_ramp(
            1.0, lambda_d=cfg.lambda_d, checkpoint_dlambda=cfg.checkpoint_dlambda
        )
        grid = velocity_sweep(
            params, ups, schedule, tol=cfg.tol, workers=cfg.workers
        )
        write_sweep_csv(
            os.path.join(outdir, "sweep.csv"), [grid], chash, cfg.entropy_log_base
        )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "sweep.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "n_max_used": params.n_max,
                    "upsilon_values": [float(u) for u in grid.upsilon_values],
                    "equal_time_contours": [
                        {"t": t, "points": pts} for t, pts in grid.equal_time_contours
                    ],
                    "peak_S_N": float(grid.S_N_grid.max()),
                    "peak_log_negativity": float(grid.logneg_grid.max()),
                },
            ),
        )
        report["files"] = ["sweep.csv", "sweep.json"]

    elif cfg.mode == "phase-diagram":
        grids = []
        n_max_used = {}
        for n in cfg.n_list:
            sub = RunConfig(**{**vars(cfg), "mode": "sweep", "n_qubits": int(n)})
            params = _system_params(sub)
            n_max_used[int(n)] = params.n_max
            ups = 2.0 ** np.linspace(
                cfg.upsilon_log2_min, cfg.upsilon_log2_max, cfg.upsilon_count
            )
            schedule = make_ramp(
                1.0, lambda_d=cfg.lambda_d, checkpoint_dlambda=cfg.checkpoint_dlambda
            )
            grids.append(
                velocity_sweep(params, ups, schedule, tol=cfg.tol, workers=cfg.workers)
            )
        boundary = extract_boundaries(
            grids,
            threshold=cfg.threshold if cfg.threshold is not None else default_threshold(),
            smoothing_window=cfg.smoothing_window,
            quench_lambdas=tuple(cfg.quench_lambdas),
            quench_N=cfg.quench_n,
        )
        fits = fit_scaling(boundary, lambda_c=np.sqrt(cfg.omega * cfg.epsilon) / 2.0)
        write_sweep_csv(
            os.path.join(outdir, "phase_diagram.csv"),
            grids,
            chash,
            cfg.entropy_log_base,
        )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "boundaries.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "n_max_used": n_max_used,
                    "threshold": boundary.threshold,
                    "smoothing_window": boundary.smoothing_window,
                    "upsilon_min_of_N": [
                        {"N": n, "upsilon_min": u} for n, u in boundary.upsilon_min_of_N
                    ],
                    "upsilon_max_of_lambda": [
                        {"lambda_d": l, "upsilon_max": u}
                        for l, u in boundary.upsilon_max_of_lambda
                    ],
                    "undefined_slices": boundary.undefined_slices,
                    "fitted_exponents": {
                        k: {
                            "exponent": v.exponent,
                            "stderr": v.stderr,
                            "n_points": v.n_points,
                        }
                        for k, v in fits.items()
                    },
                },
            ),
        )
        report["files"] = ["phase_diagram.csv", "boundaries.json"]

    elif cfg.mode == "wigner":
        state = snapshot_read(cfg.snapshot_in)
        rho_q = reduce_matter(state)
        rho_b = reduce_field(state)
        half = cfg.xp_half_width
        if half is None:
            n_mean = float(
                np.real(np.diag(rho_b) @ np.arange(rho_b.shape[0]))
            )
            half = max(4.0, 2.0 * np.sqrt(max(n_mean, 0.0)))
        planar = field_wigner(
            rho_b,
            half_width=half,
            points=cfg.xp_points,
            scaled=cfg.scaled_2_over_pi,
        )
        spherical = agarwal_wigner(rho_q, cfg.theta_points, cfg.phi_points)
        write_planar_grid(
            planar,
            os.path.join(outdir, "field_wigner.csv"),
            os.path.join(outdir, "field_wigner.json"),
        )
        write_spherical_grid(
            spherical,
            os.path.join(outdir, "matter_wigner.csv"),
            os.path.join(outdir, "matter_wigner.json"),
        )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "metadata.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "snapshot_t": float(state.t),
                    "snapshot_lambda": float(state.lam),
                    "xp_half_width_used": float(half),
                    "matter_imag_residue": spherical.imag_residue,
                    "min_field_W": float(planar.values.min()),
                    "min_matter_W": float(spherical.values.min()),
                },
            ),
        )
        report["files"] = [
            "field_wigner.csv",
            "field_wigner.json",
            "matter_wigner.csv",
            "matter_wigner.json",
            "metadata.json",
        ]

    elif cfg.mode == "ground-state":
        params = _system_params(cfg)
        res = ground_state(params, cfg.lambda_value, cfg.sector)
        s_n = von_neumann_entropy(reduce_matter(res.state))
        if cfg.snapshot_final:
            snapshot_write(
                res.state, os.path.join(outdir, "ground_state.snap"), chash
            )
        wall = time.perf_counter() - t0
        _write_json(
            os.path.join(outdir, "ground_state.json"),
            _metadata(
                cfg,
                chash,
                wall,
                {
                    "n_max_used": params.n_max,
                    "lambda": cfg.lambda_value,
                    "sector": res.sector,
                    "energy_0": res.energy_0,
                    "energy_1": res.energy_1,
                    "gap": res.gap,
                    "S_N": _entropy_out(s_n, cfg.entropy_log_base),
                },
            ),
        )
        report["files"] = ["ground_state.json"]

    else:  # pragma: no cover - parse_config already rejects this
        raise ConfigError(f"unhandled mode {cfg.mode!r}")

    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dickesim",
        description="Driven Dicke model simulator (ramped light-matter coupling)",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode")

    def add_common(p):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--n-qubits", dest="n_qubits", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument(
            "--entropy-log-base",
            dest="entropy_log_base",
            choices=("natural", "base2"),
        )
        p.add_argument("--tail-threshold", dest="tail_threshold", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int)

    def add_ramp(p):
        p.add_argument("--upsilon", type=float)
        p.add_argument("--upsilon-log2", dest="upsilon_log2", type=float)
        p.add_argument("--lambda-start", dest="lambda_start", type=float)
        p.add_argument("--lambda-d", dest="lambda_d", type=float)
        p.add_argument(
            "--checkpoint-dlambda", dest="checkpoint_dlambda", type=float
        )
        p.add_argument(
            "--snapshot-final",
            dest="snapshot_final",
            action="store_const",
            const=True,
        )

    p_evolve = sub.add_parser("evolve", help="unitary ramp trajectory")
    add_common(p_evolve)
    add_ramp(p_evolve)

    p_lind = sub.add_parser("lindblad", help="open-system ramp trajectory")
    add_common(p_lind)
    add_ramp(p_lind)
    p_lind.add_argument("--kappa", type=float)
    p_lind.add_argument("--nbar", type=float)

    p_sweep = sub.add_parser("sweep", help="velocity sweep grid")
    add_common(p_sweep)
    p_sweep.add_argument("--lambda-d", dest="lambda_d", type=float)
    p_sweep.add_argument("--checkpoint-dlambda", dest="checkpoint_dlambda", type=float)
    p_sweep.add_argument("--upsilon-log2-min", dest="upsilon_log2_min", type=float)
    p_sweep.add_argument("--upsilon-log2-max", dest="upsilon_log2_max", type=float)
    p_sweep.add_argument("--upsilon-count", dest="upsilon_count", type=int)

    p_phase = sub.add_parser("phase-diagram", help="multi-N boundaries and fits")
    add_common(p_phase)
    p_phase.add_argument("--lambda-d", dest="lambda_d", type=float)
    p_phase.add_argument("--checkpoint-dlambda", dest="checkpoint_dlambda", type=float)
    p_phase.add_argument("--upsilon-log2-min", dest="upsilon_log2_min", type=float)
    p_phase.add_argument("--upsilon-log2-max", dest="upsilon_log2_max", type=float)
    p_phase.add_argument("--upsilon-count", dest="upsilon_count", type=int)
    p_phase.add_argument(
        "--n-list", dest="n_list", type=int, nargs="+", metavar="N"
    )
    p_phase.add_argument(
        "--quench-lambdas", dest="quench_lambdas", type=float, nargs="+"
    )
    p_phase.add_argument("--quench-n", dest="quench_n", type=int)
    p_phase.add_argument("--threshold", type=float)
    p_phase.add_argument("--smoothing-window", dest="smoothing_window", type=int)

    p_wig = sub.add_parser("wigner", help="phase-space grids from a snapshot")
    add_common(p_wig)
    p_wig.add_argument("--snapshot-in", dest="snapshot_in")
    p_wig.add_argument("--xp-half-width", dest="xp_half_width", type=float)
    p_wig.add_argument("--xp-points", dest="xp_points", type=int)
    p_wig.add_argument("--theta-points", dest="theta_points", type=int)
    p_wig.add_argument("--phi-points", dest="phi_points", type=int)
    p_wig.add_argument(
        "--scaled-2-over-pi",
        dest="scaled_2_over_pi",
        action="store_const",
        const=True,
    )

    p_gs = sub.add_parser("ground-state", help="sector-resolved lowest eigenpair")
    add_common(p_gs)
    p_gs.add_argument("--lambda-value", dest="lambda_value", type=float)
    p_gs.add_argument("--sector", choices=("even", "odd", "full"))
    p_gs.add_argument(
        "--snapshot-final",
        dest="snapshot_final",
        action="store_const",
        const=True,
    )

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.mode is None:
        parser.print_help()
        return 2
    overrides = {
        k: v
        for k, v in vars(args).items()
        if k not in ("config",) and v is not None
    }
    try:
        cfg = parse_config(getattr(args, "config", None), overrides)
        report = run(cfg)
    except DickeSimError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps(report, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

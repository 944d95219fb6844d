"""Velocity sweeps, the (log upsilon) x lambda grids, and phase boundaries.

A sweep runs one ramp trajectory per annealing velocity on a shared lambda
checkpoint grid.  Because the linear ramp lambda(t) = upsilon * t does not
depend on its destination, the column of a sweep at lambda = L is exactly
the final-time observable of a ramp targeted at lambda_d = L, which is how
the quench boundary is extracted at several lambda_d from one sweep.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DickeSimError, TruncationError
from .hamiltonian import RampSchedule, make_ramp
from .hilbert import SystemParams
from .state import initial_state
from .unitary import DEFAULT_TOL, evolve_pure

__all__ = [
    "SweepGrid",
    "PhaseBoundary",
    "ScalingFit",
    "default_threshold",
    "velocity_sweep",
    "moving_average",
    "extract_boundaries",
    "fit_scaling",
    "suggest_n_max",
]

DEFAULT_EQUAL_TIMES = (2.0, 4.0, 8.0, 16.0)
DEFAULT_SMOOTHING_WINDOW = 5


def default_threshold() -> float:
    """Enhanced-entanglement threshold log 2 + 0.05 (natural-log units)."""
    return float(np.log(2.0) + 0.05)


def suggest_n_max(N: int, lambda_max: float, omega: float = 1.0) -> int:
    """Fock truncation adequate for every ramp regime up to lambda_max.

    The adiabatic branch displaces the field to |beta|^2 = (lambda_max
    sqrt(N)/omega)^2 photons; intermediate velocities ring above that and
    near-adiabatic rows develop wide number tails, so the estimate carries
    a 1.6x headroom plus a dispersion margin.  The runtime tail monitor
    still guards every trajectory.
    """
    beta = lambda_max * np.sqrt(N) / omega
    return int(np.ceil(1.6 * beta**2 + 12.0 * beta + 30.0))


@dataclass
class SweepGrid:
    """Entropy / log-negativity values over the (upsilon, lambda) grid."""

    N: int
    upsilon_values: np.ndarray
    lambda_checkpoints: np.ndarray
    S_N_grid: np.ndarray
    logneg_grid: np.ndarray
    equal_time_contours: list = field(default_factory=list)
    primary_measure: str = "entropy"
    n_max: int = 0
    n_max_used: list = field(default_factory=list)
    tol: float = DEFAULT_TOL

    def validate(self) -> None:
        nu, nl = self.upsilon_values.size, self.lambda_checkpoints.size
        if self.S_N_grid.shape != (nu, nl) or self.logneg_grid.shape != (nu, nl):
            raise ValueError("sweep grid dimensions are inconsistent")
        if np.any(np.diff(self.upsilon_values) <= 0):
            raise ValueError("upsilon_values must be sorted ascending")
        if not (np.all(np.isfinite(self.S_N_grid)) and np.all(np.isfinite(self.logneg_grid))):
            raise ValueError("sweep grid contains non-finite cells")

    def final_column(self, measure: str = "entropy") -> np.ndarray:
        grid = self.S_N_grid if measure == "entropy" else self.logneg_grid
        return grid[:, -1]

    def column_at_lambda(self, lam: float, measure: str = "entropy") -> np.ndarray:
        j = int(np.argmin(np.abs(self.lambda_checkpoints - lam)))
        if abs(self.lambda_checkpoints[j] - lam) > 1e-9:
            raise ConfigError(
                f"lambda={lam} is not on the sweep checkpoint grid"
            )
        grid = self.S_N_grid if measure == "entropy" else self.logneg_grid
        return grid[:, j]


AUTO_EXTEND_FACTOR = 1.35


def _sweep_cell(args):
    (
        N,
        n_max,
        epsilon,
        omega,
        tail_threshold,
        upsilon,
        lambda_d,
        dlambda,
        tol,
        auto_extend,
    ) = args
    schedule = make_ramp(upsilon, lambda_d=lambda_d, checkpoint_dlambda=dlambda)
    attempt_n_max = n_max
    for attempt in range(auto_extend + 1):
        params = SystemParams(
            N=N,
            n_max=attempt_n_max,
            epsilon=epsilon,
            omega=omega,
            tail_threshold=tail_threshold,
        )
        try:
            traj = evolve_pure(
                initial_state(params), params, schedule, tol=tol, keep_schmidt=False
            )
        except TruncationError:
            if attempt == auto_extend:
                raise
            attempt_n_max = int(np.ceil(attempt_n_max * AUTO_EXTEND_FACTOR))
            continue
        return traj.column("S_N"), traj.column("log_negativity"), attempt_n_max
    raise AssertionError("unreachable")


def velocity_sweep(
    params: SystemParams,
    upsilons: np.ndarray,
    schedule_template: RampSchedule,
    measure: str = "entropy",
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    equal_times: tuple = DEFAULT_EQUAL_TIMES,
    auto_extend: int = 3,
) -> SweepGrid:
    """One ramp per velocity, assembled into a (log upsilon) x lambda grid.

    Cells are independent jobs; the assembly is index-ordered and therefore
    deterministic whatever the completion order.  A cell whose Fock tail
    breaches the monitor is retried with a 1.35x larger truncation, up to
    `auto_extend` times; remaining failures are re-raised with the
    offending upsilon identified.
    """
    if measure not in ("entropy", "logneg"):
        raise ConfigError(f"measure must be 'entropy' or 'logneg', got {measure!r}")
    ups = np.asarray(upsilons, dtype=float)
    if ups.ndim != 1 or ups.size < 1:
        raise ConfigError("need a 1-D array of upsilon values")
    if np.any(np.diff(ups) <= 0):
        raise ConfigError("upsilons must be sorted ascending")
    if schedule_template.lambda_start != 0.0:
        raise ConfigError("velocity sweeps assume lambda_start = 0")

    lam_grid = schedule_template.checkpoints()
    jobs = [
        (
            params.N,
            params.n_max,
            params.epsilon,
            params.omega,
            params.tail_threshold,
            float(u),
            schedule_template.lambda_d,
            schedule_template.checkpoint_dlambda,
            tol,
            auto_extend,
        )
        for u in ups
    ]
    results = [None] * ups.size
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, job) for job in jobs]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except DickeSimError as exc:
                    raise type(exc)(
                        f"sweep cell upsilon={ups[i]:.6g} "
                        f"(log2={np.log2(ups[i]):.3f}) failed: {exc}"
                    ) from exc
    else:
        for i, job in enumerate(jobs):
            try:
                results[i] = _sweep_cell(job)
            except DickeSimError as exc:
                raise type(exc)(
                    f"sweep cell upsilon={ups[i]:.6g} (log2={np.log2(ups[i]):.3f}) "
                    f"failed: {exc}"
                ) from exc
    s_grid = np.vstack([r[0] for r in results])
    ln_grid = np.vstack([r[1] for r in results])
    n_max_used = [int(r[2]) for r in results]

    contours = []
    for t in equal_times:
        pts = []
        for u in ups:
            lam = u * t
            if schedule_template.lambda_start < lam <= schedule_template.lambda_d + 1e-12:
                pts.append((float(u), float(lam)))
        contours.append((float(t), pts))

    grid = SweepGrid(
        N=params.N,
        upsilon_values=ups,
        lambda_checkpoints=lam_grid,
        S_N_grid=s_grid,
        logneg_grid=ln_grid,
        equal_time_contours=contours,
        primary_measure=measure,
        n_max=params.n_max,
        n_max_used=n_max_used,
        tol=tol,
    )
    grid.validate()
    return grid


def moving_average(y: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with symmetric shrink at the edges."""
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"smoothing window must be odd and >= 1, got {window}")
    if window == 1:
        return np.asarray(y, dtype=float).copy()
    y = np.asarray(y, dtype=float)
    half = window // 2
    out = np.empty_like(y)
    for i in range(y.size):
        k = min(half, i, y.size - 1 - i)
        out[i] = y[i - k : i + k + 1].mean()
    return out


def _cross_up(x, s, threshold):
    """First upward threshold crossing scanning ascending x; interpolated."""
    for i in range(s.size - 1):
        if s[i] <= threshold < s[i + 1]:
            f = (threshold - s[i]) / (s[i + 1] - s[i])
            return float(x[i] + f * (x[i + 1] - x[i]))
    return None


def _cross_down_last(x, s, threshold):
    """Last downward threshold crossing scanning ascending x; interpolated."""
    hit = None
    for i in range(s.size - 1):
        if s[i] > threshold >= s[i + 1]:
            f = (s[i] - threshold) / (s[i] - s[i + 1])
            hit = float(x[i] + f * (x[i + 1] - x[i]))
    return hit


@dataclass
class PhaseBoundary:
    """Extracted EER boundaries and their fitted scaling exponents."""

    upsilon_min_of_N: list
    upsilon_max_of_lambda: list
    threshold: float
    smoothing_window: int
    fitted_exponents: dict = field(default_factory=dict)
    undefined_slices: list = field(default_factory=list)


def extract_boundaries(
    sweeps: list,
    threshold: float | None = None,
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
    quench_lambdas: tuple = (0.8, 1.1, 1.4, 1.7, 2.0),
    quench_N: int | None = None,
) -> PhaseBoundary:
    """EER boundaries from entropy sweeps over several system sizes.

    upsilon_min(N): smallest-velocity upward crossing of the smoothed final
    entropy S_N(log upsilon) through the threshold.  upsilon_max(lambda_d):
    the last downward crossing of the entropy column at lambda_d, taken
    from the sweep of `quench_N` (defaults to the largest N).  Slices that
    never cross are reported as undefined rather than fatal.
    """
    if threshold is None:
        threshold = default_threshold()
    if threshold <= np.log(2.0):
        raise ConfigError("threshold must exceed log 2")
    if not sweeps:
        raise ConfigError("need at least one sweep grid")

    ups_min = []
    undefined = []
    for grid in sorted(sweeps, key=lambda g: g.N):
        x = np.log2(grid.upsilon_values)
        s = moving_average(grid.final_column("entropy"), smoothing_window)
        cross = _cross_up(x, s, threshold)
        if cross is None:
            undefined.append(("upsilon_min", grid.N))
        else:
            ups_min.append((grid.N, float(2.0**cross)))

    if quench_N is None:
        quench_N = max(g.N for g in sweeps)
    try:
        qgrid = next(g for g in sweeps if g.N == quench_N)
    except StopIteration:
        raise ConfigError(f"no sweep with N={quench_N} for the quench boundary")
    ups_max = []
    for lam_d in quench_lambdas:
        x = np.log2(qgrid.upsilon_values)
        s = moving_average(qgrid.column_at_lambda(lam_d), smoothing_window)
        cross = _cross_down_last(x, s, threshold)
        if cross is None:
            undefined.append(("upsilon_max", lam_d))
        else:
            ups_max.append((float(lam_d), float(2.0**cross)))

    return PhaseBoundary(
        upsilon_min_of_N=ups_min,
        upsilon_max_of_lambda=ups_max,
        threshold=float(threshold),
        smoothing_window=int(smoothing_window),
        undefined_slices=undefined,
    )


@dataclass
class ScalingFit:
    exponent: float
    stderr: float
    n_points: int


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> ScalingFit:
    lx, ly = np.log(x), np.log(y)
    if lx.size < 3:
        raise ConfigError(f"need at least 3 points for a power-law fit, got {lx.size}")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    fitted = A @ coef
    dof = lx.size - 2
    if dof > 0:
        s2 = float(np.sum((ly - fitted) ** 2)) / dof
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        stderr = float(np.sqrt(s2 / sxx))
    else:
        stderr = 0.0
    return ScalingFit(exponent=slope, stderr=stderr, n_points=int(lx.size))


def fit_scaling(boundary: PhaseBoundary, lambda_c: float = 0.5) -> dict:
    """Least-squares power-law exponents of both boundaries.

    adiabatic: slope of log upsilon_min vs log N (expected -1);
    quench: slope of log upsilon_max vs log(lambda_d - lambda_c)
    (expected 3/2).  Returns {'adiabatic': ScalingFit, 'quench': ScalingFit}.
    """
    out = {}
    if boundary.upsilon_min_of_N:
        ns = np.array([p[0] for p in boundary.upsilon_min_of_N], dtype=float)
        us = np.array([p[1] for p in boundary.upsilon_min_of_N], dtype=float)
        out["adiabatic"] = _loglog_fit(ns, us)
    if boundary.upsilon_max_of_lambda:
        ls = np.array([p[0] for p in boundary.upsilon_max_of_lambda], dtype=float)
        us = np.array([p[1] for p in boundary.upsilon_max_of_lambda], dtype=float)
        keep = ls > lambda_c
        out["quench"] = _loglog_fit(ls[keep] - lambda_c, us[keep])
    boundary.fitted_exponents = {
        k: {"exponent": v.exponent, "stderr": v.stderr, "n_points": v.n_points}
        for k, v in out.items()
    }
    return out

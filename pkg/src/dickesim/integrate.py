"""Adaptive time stepping shared by the pure-state and Lindblad propagators.

Classic fourth-order Runge-Kutta with step doubling: each step is taken
once at h and twice at h/2; the difference provides the local error
estimate (and a fifth-order correction via local extrapolation).  The
tolerance is an error-per-unit-time budget, so the accumulated estimate of
the global error is tol * elapsed time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import (
    accept_extrapolate,
    diff_norm,
    rk4_accumulate,
    stage_add,
)
from .errors import StiffnessError

__all__ = ["SolverReport", "integrate_adaptive"]

SAFETY = 0.9
GROW_MAX = 5.0
SHRINK_MIN = 0.2
MAX_STEPS = 200_000_000


@dataclass
class SolverReport:
    """Bookkeeping of one adaptive integration."""

    steps: int = 0
    rejected_steps: int = 0
    rhs_evals: int = 0
    est_global_error: float = 0.0
    max_tail_weight: float = 0.0
    final_dt: float = 0.0

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "rejected_steps": self.rejected_steps,
            "rhs_evals": self.rhs_evals,
            "est_global_error": self.est_global_error,
            "max_tail_weight": self.max_tail_weight,
            "final_dt": self.final_dt,
        }


class _RK4Work:
    """Preallocated stage buffers for one state size."""

    def __init__(self, n: int):
        z = lambda: np.empty(n, dtype=np.complex128)
        self.k1 = z()
        self.k2 = z()
        self.k3 = z()
        self.k4 = z()
        self.k1m = z()
        self.stage = z()
        self.y_full = z()
        self.y_mid = z()
        self.y_half = z()


def _rk4_step(f, t, y, h, k1, work, out, report):
    """One classic RK4 step into `out`, reusing a precomputed k1."""
    half = 0.5 * h
    stage_add(work.stage, y, half, k1)
    f(t + half, work.stage, work.k2)
    stage_add(work.stage, y, half, work.k2)
    f(t + half, work.stage, work.k3)
    stage_add(work.stage, y, h, work.k3)
    f(t + h, work.stage, work.k4)
    report.rhs_evals += 3
    rk4_accumulate(out, y, h, k1, work.k2, work.k3, work.k4)


def integrate_adaptive(
    f,
    y0: np.ndarray,
    t_checkpoints: np.ndarray,
    tol: float,
    on_checkpoint,
    dt_initial: float,
    post_accept=None,
) -> tuple[np.ndarray, SolverReport]:
    """Propagate dy/dt = f(t, y) through an increasing checkpoint grid.

    f(t, y_flat, out_flat) writes the derivative in place.  on_checkpoint
    (index, t, y_flat) is invoked at every checkpoint, including the first.
    post_accept(y_flat), when given, is applied after each accepted step
    (used for density-matrix re-hermitization).  tol is the local error
    budget per unit time.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    t_checkpoints = np.asarray(t_checkpoints, dtype=float)
    if t_checkpoints.ndim != 1 or t_checkpoints.size < 1:
        raise ValueError("need at least one checkpoint time")
    if np.any(np.diff(t_checkpoints) <= 0):
        raise ValueError("checkpoint times must be strictly increasing")

    y = np.ascontiguousarray(y0, dtype=np.complex128).ravel().copy()
    work = _RK4Work(y.size)
    report = SolverReport()
    t = float(t_checkpoints[0])
    span = max(t_checkpoints[-1] - t, 1e-30)
    dt_floor = max(span * 1e-14, 1e-300)
    dt = float(dt_initial)
    on_checkpoint(0, t, y)

    tiny = 1e-300
    # roundoff floor: differences at this scale are integration noise, not
    # truncation error, and must not trigger rejection of microscopic steps
    err_floor = 64.0 * np.finfo(float).eps * max(np.linalg.norm(y), 1e-3)
    for icp in range(1, t_checkpoints.size):
        t_target = float(t_checkpoints[icp])
        while t_target - t > max(abs(t_target), 1.0) * 1e-14:
            remaining = t_target - t
            # stretch onto the checkpoint instead of leaving a sliver
            h = remaining if remaining <= dt * 1.05 else dt
            f(t, y, work.k1)
            report.rhs_evals += 1
            while True:
                _rk4_step(f, t, y, h, work.k1, work, work.y_full, report)
                half = 0.5 * h
                _rk4_step(f, t, y, half, work.k1, work, work.y_mid, report)
                f(t + half, work.y_mid, work.k1m)
                report.rhs_evals += 1
                _rk4_step(f, t + half, work.y_mid, half, work.k1m, work, work.y_half, report)
                est = diff_norm(work.y_half, work.y_full) / 15.0
                budget = max(tol * h, err_floor)
                if est <= budget:
                    accept_extrapolate(work.y_half, work.y_full)
                    y, work.y_half = work.y_half, y
                    if post_accept is not None:
                        post_accept(y)
                    t += h
                    report.steps += 1
                    report.est_global_error += est
                    factor = SAFETY * (budget / max(est, tiny)) ** 0.25
                    dt = h * min(GROW_MAX, max(SHRINK_MIN, factor))
                    break
                report.rejected_steps += 1
                factor = SAFETY * (budget / est) ** 0.25
                h *= min(0.9, max(SHRINK_MIN, factor))
                if h < dt_floor:
                    raise StiffnessError(
                        f"step size underflow at t={t:.6g} (h={h:.3e}); "
                        f"the requested tolerance cannot be met"
                    )
                dt = h
            if report.steps + report.rejected_steps > MAX_STEPS:
                raise StiffnessError("maximum number of integration steps exceeded")
        t = t_target
        on_checkpoint(icp, t, y)
    report.final_dt = dt
    return y, report


def spectral_radius_bound(h0_grid, jx_off, f_off, g_max: float) -> float:
    """Crude Gershgorin-style bound used only to seed the first step size."""
    bound = float(np.abs(h0_grid).max())
    if jx_off.size and f_off.size:
        bound += 4.0 * abs(g_max) * float(jx_off.max()) * float(f_off.max())
    return max(bound, 1e-6)

"""Pure-state propagation under the ramped Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import pure_rhs
from .errors import ConfigError, TruncationError
from .hamiltonian import HamiltonianParts, RampSchedule, hamiltonian_parts
from .hilbert import SystemParams
from .integrate import SolverReport, integrate_adaptive, spectral_radius_bound
from .observables import (
    ObservableRecord,
    ObservableSet,
    checkpoint_record,
    truncation_monitor,
)
from .state import QuantumState, initial_state

__all__ = [
    "Trajectory",
    "ConvergenceReport",
    "evolve_pure",
    "propagate_constant",
    "convergence_check",
    "initial_state",
    "truncation_monitor",
]

DEFAULT_TOL = 1e-8


@dataclass
class Trajectory:
    """Checkpointed history of one ramp run."""

    params: SystemParams
    schedule: RampSchedule | None
    records: list
    final_state: QuantumState
    solver_report: SolverReport
    open_system: object = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def validate(self) -> None:
        ts = self.column("t")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("records must be sorted by t")
        if self.schedule is not None:
            lams = self.column("lam")
            expect = self.schedule.checkpoints()
            if lams.size != expect.size or np.abs(lams - expect).max() > 1e-9:
                raise ValueError(
                    "record lambda values do not match schedule checkpoints"
                )
        for r in self.records:
            r.validate()


def _make_rhs(parts: HamiltonianParts, schedule: RampSchedule, shape):
    scale = parts.coupling_scale
    lam0 = schedule.lambda_start
    ups = schedule.upsilon
    h0 = parts.h0_grid
    jx = parts.jx_off
    fo = parts.f_off

    def rhs(t, yflat, outflat):
        g = scale * (lam0 + ups * t)
        pure_rhs(g, yflat.reshape(shape), h0, jx, fo, outflat.reshape(shape))

    return rhs


def evolve_pure(
    state0: QuantumState,
    params: SystemParams,
    schedule: RampSchedule,
    tol: float = DEFAULT_TOL,
    keep_schmidt: bool = True,
) -> Trajectory:
    """Integrate i d|psi>/dt = H(lambda(t)) |psi> across the ramp.

    Observables are recorded on the uniform lambda checkpoint grid; the
    run aborts with TruncationError when the Fock-tail population exceeds
    the configured threshold.
    """
    if not state0.is_pure:
        raise ConfigError("evolve_pure requires a pure state")
    if abs(np.linalg.norm(state0.data) - 1.0) > 1e-9:
        raise ConfigError("initial state must be normalized")
    if tol <= 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if state0.dim != params.dim:
        raise ConfigError("state dimension does not match params")

    parts = hamiltonian_parts(params)
    shape = (params.spin_dim, params.field_dim)
    rhs = _make_rhs(parts, schedule, shape)
    lam_grid = schedule.checkpoints()
    t_grid = schedule.checkpoint_times()
    obs = ObservableSet(params)
    records: list[ObservableRecord] = []
    report_box = {}

    def on_checkpoint(icp, t, yflat):
        st = QuantumState(
            kind="pure",
            data=yflat.copy(),
            spin_dim=params.spin_dim,
            field_dim=params.field_dim,
            t=float(t),
            lam=float(lam_grid[icp]),
        )
        rec = checkpoint_record(st, params, obs, keep_schmidt=keep_schmidt)
        records.append(rec)
        if rec.tail_weight > params.tail_threshold:
            raise TruncationError(
                f"Fock tail weight {rec.tail_weight:.3e} exceeded "
                f"{params.tail_threshold:.1e} at lambda={rec.lam:.4f} "
                f"(upsilon={schedule.upsilon:.6g}); raise n_max above "
                f"{params.n_max}"
            )

    bound = spectral_radius_bound(
        parts.h0_grid, parts.jx_off, parts.f_off, parts.g(schedule.lambda_d)
    )
    yfin, report = integrate_adaptive(
        rhs,
        state0.data,
        t_grid,
        tol,
        on_checkpoint,
        dt_initial=1.0 / bound,
    )
    report.max_tail_weight = max((r.tail_weight for r in records), default=0.0)
    final = QuantumState(
        kind="pure",
        data=yfin,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=float(t_grid[-1]),
        lam=float(lam_grid[-1]),
    )
    return Trajectory(
        params=params,
        schedule=schedule,
        records=records,
        final_state=final,
        solver_report=report,
    )


def propagate_constant(
    state0: QuantumState,
    params: SystemParams,
    lam: float,
    duration: float,
    tol: float = DEFAULT_TOL,
    n_checkpoints: int = 11,
) -> Trajectory:
    """Propagate at fixed coupling for diagnostics (drift and oracle tests)."""
    if lam < 0 or duration <= 0:
        raise ConfigError("need lam >= 0 and duration > 0")
    parts = hamiltonian_parts(params)
    shape = (params.spin_dim, params.field_dim)
    g = parts.g(lam)

    def rhs(t, yflat, outflat):
        pure_rhs(g, yflat.reshape(shape), parts.h0_grid, parts.jx_off, parts.f_off, outflat.reshape(shape))

    t_grid = np.linspace(0.0, duration, max(2, n_checkpoints))
    obs = ObservableSet(params)
    records = []

    def on_checkpoint(icp, t, yflat):
        st = QuantumState(
            kind="pure",
            data=yflat.copy(),
            spin_dim=params.spin_dim,
            field_dim=params.field_dim,
            t=float(t),
            lam=float(lam),
        )
        records.append(checkpoint_record(st, params, obs))

    bound = spectral_radius_bound(parts.h0_grid, parts.jx_off, parts.f_off, g)
    yfin, report = integrate_adaptive(
        rhs, state0.data, t_grid, tol, on_checkpoint, dt_initial=1.0 / bound
    )
    final = QuantumState(
        kind="pure",
        data=yfin,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=float(duration),
        lam=float(lam),
    )
    return Trajectory(
        params=params,
        schedule=None,
        records=records,
        final_state=final,
        solver_report=report,
    )


@dataclass
class ConvergenceReport:
    params: SystemParams
    refined_params: SystemParams
    max_deviation_S_N: float
    passed: bool
    threshold: float = 1e-3


def convergence_check(
    params: SystemParams,
    schedule: RampSchedule,
    tol: float = DEFAULT_TOL,
    threshold: float = 1e-3,
) -> ConvergenceReport:
    """Truncation/tolerance self-consistency: rerun with tol/10 and a 25%
    larger Fock space and compare the entropy profile."""
    base = evolve_pure(initial_state(params), params, schedule, tol=tol)
    refined_params = SystemParams(
        N=params.N,
        n_max=int(np.ceil(params.n_max * 1.25)),
        epsilon=params.epsilon,
        omega=params.omega,
        entropy_log_base=params.entropy_log_base,
        tail_frac=params.tail_frac,
        tail_threshold=params.tail_threshold,
        eig_tol=params.eig_tol,
        eig_maxiter=params.eig_maxiter,
    )
    refined = evolve_pure(
        initial_state(refined_params), refined_params, schedule, tol=tol / 10.0
    )
    dev = float(np.abs(base.column("S_N") - refined.column("S_N")).max())
    return ConvergenceReport(
        params=params,
        refined_params=refined_params,
        max_deviation_S_N=dev,
        passed=dev < threshold,
        threshold=threshold,
    )

"""Open-system evolution: lossy cavity in Lindblad form during the ramp.

d rho/dt = -i[H(lambda), rho] + 2 kappa (nbar+1) D(rho; a)
                              + 2 kappa nbar D(rho; a^dag),
with D(rho; A) = A rho A^dag - {A^dag A, rho}/2.  The density matrix is
propagated in the same adaptive framework as pure states, applying the
Liouvillian matrix-free on the D x D tensor (the evolution space dimension
is squared, which is what limits the reachable N here).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import lindblad_rhs_kernel
from .errors import ConfigError, ConvergenceError, TruncationError
from .hamiltonian import RampSchedule, hamiltonian_parts
from .hilbert import SystemParams
from .integrate import integrate_adaptive, spectral_radius_bound
from .observables import ObservableSet, checkpoint_record
from .state import QuantumState
from .unitary import DEFAULT_TOL, Trajectory

__all__ = [
    "OpenSystemParams",
    "thermal_initial_state",
    "lindblad_rhs",
    "evolve_open",
]

POSITIVITY_BREACH = -1e-6


@dataclass(frozen=True)
class OpenSystemParams:
    """Cavity loss rate kappa (units of omega) and thermal occupation nbar."""

    kappa: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ConfigError(f"kappa must be >= 0, got {self.kappa}")
        if self.nbar < 0:
            raise ConfigError(f"nbar must be >= 0, got {self.nbar}")

    @property
    def beta_inv_temp(self) -> float:
        """Inverse temperature from e^{-beta} = nbar/(nbar+1); inf at nbar=0."""
        if self.nbar == 0:
            return np.inf
        return float(np.log((self.nbar + 1.0) / self.nbar))


def thermal_initial_state(
    params: SystemParams, open_params: OpenSystemParams
) -> QuantumState:
    """|-N/2><-N/2|_z (x) thermal field at nbar, renormalized on truncation.

    The field factor is the stationary state of the dissipative terms alone;
    raises TruncationError when the thermal tail past n_max exceeds 1e-8.
    """
    nbar = open_params.nbar
    n = np.arange(params.field_dim, dtype=float)
    if nbar == 0:
        pops = np.zeros(params.field_dim)
        pops[0] = 1.0
        tail = 0.0
    else:
        ratio = nbar / (nbar + 1.0)
        pops = ratio**n / (nbar + 1.0)
        tail = ratio ** params.field_dim  # geometric remainder
        if tail > 1e-8:
            raise TruncationError(
                f"thermal occupation nbar={nbar} leaves tail {tail:.2e} "
                f"beyond n_max={params.n_max}; raise n_max"
            )
        pops = pops / pops.sum()
    rho = np.zeros((params.dim, params.dim), dtype=np.complex128)
    rho[: params.field_dim, : params.field_dim] = np.diag(pops)
    return QuantumState(
        kind="density",
        data=rho,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=0.0,
        lam=0.0,
    )


def lindblad_rhs(
    rho: QuantumState,
    lam: float,
    params: SystemParams,
    open_params: OpenSystemParams,
    unitary_part: bool = True,
) -> np.ndarray:
    """Right-hand side of the master equation as a D x D matrix.

    With unitary_part=False only the dissipative terms are evaluated
    (used to verify the thermal state is stationary under them).
    """
    if rho.kind != "density":
        raise ConfigError("lindblad_rhs expects a density state")
    parts = hamiltonian_parts(params)
    shape = (params.spin_dim, params.field_dim) * 2
    out = np.empty(params.dim * params.dim, dtype=np.complex128)
    g = parts.g(lam) if unitary_part else 0.0
    h0 = parts.h0_grid if unitary_part else np.zeros_like(parts.h0_grid)
    lindblad_rhs_kernel(
        g,
        np.ascontiguousarray(rho.data, dtype=np.complex128).reshape(shape),
        h0,
        parts.jx_off,
        parts.f_off,
        2.0 * open_params.kappa * (open_params.nbar + 1.0),
        2.0 * open_params.kappa * open_params.nbar,
        out.reshape(shape),
    )
    return out.reshape(params.dim, params.dim)


def _rehermitize(yflat, dim):
    rho = yflat.reshape(dim, dim)
    rho += rho.conj().T
    rho *= 0.5


def evolve_open(
    rho0: QuantumState,
    params: SystemParams,
    schedule: RampSchedule,
    open_params: OpenSystemParams,
    tol: float = DEFAULT_TOL,
) -> Trajectory:
    """Checkpointed ramp of the density matrix under cavity loss.

    Negativity is the recorded entanglement quantity; subsystem entropy is
    still recorded but flagged as a non-witness whenever kappa > 0.  A
    positivity breach beyond -1e-6 or a Fock-tail breach aborts the run.
    """
    if rho0.kind != "density":
        raise ConfigError("evolve_open requires a density state")
    if rho0.dim != params.dim:
        raise ConfigError("state dimension does not match params")
    if tol <= 0:
        raise ConfigError(f"tol must be > 0, got {tol}")

    parts = hamiltonian_parts(params)
    shape = (params.spin_dim, params.field_dim) * 2
    scale = parts.coupling_scale
    lam0, ups = schedule.lambda_start, schedule.upsilon
    kd = 2.0 * open_params.kappa * (open_params.nbar + 1.0)
    ku = 2.0 * open_params.kappa * open_params.nbar
    h0, jx, fo = parts.h0_grid, parts.jx_off, parts.f_off

    def rhs(t, yflat, outflat):
        g = scale * (lam0 + ups * t)
        lindblad_rhs_kernel(
            g, yflat.reshape(shape), h0, jx, fo, kd, ku, outflat.reshape(shape)
        )

    lam_grid = schedule.checkpoints()
    t_grid = schedule.checkpoint_times()
    obs = ObservableSet(params)
    records = []
    witness = open_params.kappa == 0.0

    def on_checkpoint(icp, t, yflat):
        rho = yflat.reshape(params.dim, params.dim)
        st = QuantumState(
            kind="density",
            data=rho.copy(),
            spin_dim=params.spin_dim,
            field_dim=params.field_dim,
            t=float(t),
            lam=float(lam_grid[icp]),
        )
        wmin = float(np.linalg.eigvalsh(st.data).min())
        if wmin < POSITIVITY_BREACH:
            raise ConvergenceError(
                f"density matrix lost positivity (min eigenvalue {wmin:.3e}) "
                f"at lambda={st.lam:.4f}; tighten tol"
            )
        rec = checkpoint_record(st, params, obs, entropy_is_witness=witness)
        records.append(rec)
        if rec.tail_weight > params.tail_threshold:
            raise TruncationError(
                f"Fock tail weight {rec.tail_weight:.3e} exceeded "
                f"{params.tail_threshold:.1e} at lambda={rec.lam:.4f} "
                f"(open run, upsilon={schedule.upsilon:.6g}); raise n_max"
            )

    bound = 2.0 * spectral_radius_bound(h0, jx, fo, parts.g(schedule.lambda_d))
    yfin, report = integrate_adaptive(
        rhs,
        rho0.data,
        t_grid,
        tol,
        on_checkpoint,
        dt_initial=1.0 / bound,
        post_accept=lambda y: _rehermitize(y, params.dim),
    )
    report.max_tail_weight = max((r.tail_weight for r in records), default=0.0)
    final = QuantumState(
        kind="density",
        data=yfin.reshape(params.dim, params.dim),
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
        open_system=open_params,
    )

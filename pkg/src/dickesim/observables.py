"""Reduced states, entanglement measures, and per-checkpoint records."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .hilbert import SparseOperator, SystemParams, parity_diagonal
from .state import QuantumState

__all__ = [
    "ObservableRecord",
    "reduce_matter",
    "reduce_field",
    "von_neumann_entropy",
    "schmidt_spectrum",
    "negativity",
    "negativity_from_schmidt",
    "expectation",
    "fock_populations",
    "truncation_monitor",
    "checkpoint_record",
]

EIGENVALUE_CUTOFF = 1e-14
NEGATIVE_EIG_TOL = 1e-8


def reduce_matter(state: QuantumState) -> np.ndarray:
    """Partial trace over the Fock index: (N+1) x (N+1) density matrix."""
    if state.is_pure:
        psi = state.as_spin_field()
        return psi @ psi.conj().T
    rho = state.as_spin_field()
    return np.einsum("anbn->ab", rho)


def reduce_field(state: QuantumState) -> np.ndarray:
    """Partial trace over the spin index: (n_max+1) x (n_max+1) matrix."""
    if state.is_pure:
        psi = state.as_spin_field()
        return psi.T @ psi.conj()
    rho = state.as_spin_field()
    return np.einsum("anam->nm", rho)


def von_neumann_entropy(rho_sub: np.ndarray, base: str = "natural") -> float:
    """-sum p log p over the eigenvalues of a reduced density matrix.

    Eigenvalues below 1e-14 are dropped; eigenvalues more negative than the
    positivity tolerance raise.
    """
    if base not in ("natural", "base2"):
        raise ConfigError(f"base must be 'natural' or 'base2', got {base!r}")
    w = np.linalg.eigvalsh(np.asarray(rho_sub))
    if w.min() < -NEGATIVE_EIG_TOL:
        raise ValueError(
            f"matrix not positive within tolerance (min eigenvalue {w.min():.3e})"
        )
    p = w[w > EIGENVALUE_CUTOFF]
    s = float(-np.sum(p * np.log(p)))
    if base == "base2":
        s /= np.log(2.0)
    return max(s, 0.0)


def schmidt_spectrum(state: QuantumState) -> np.ndarray:
    """Non-increasing Schmidt weights p_i of a pure bipartite state."""
    if not state.is_pure:
        raise ConfigError("Schmidt spectrum is defined for pure states only")
    sv = np.linalg.svd(state.as_spin_field(), compute_uv=False)
    p = sv**2
    return np.sort(p)[::-1]


def negativity(state: QuantumState) -> dict:
    """Negativity from the partial transpose over the matter index.

    N = (||rho^{Gamma_q}||_1 - 1)/2, equal to the summed magnitude of the
    negative eigenvalues of the partially transposed density matrix.  Pure
    states are promoted to projectors.  Also returns the logarithmic form
    log2(2N + 1).
    """
    dens = state.to_density()
    rho = dens.as_spin_field()  # (a, n, b, m)
    rho_pt = np.ascontiguousarray(rho.transpose(2, 1, 0, 3)).reshape(
        dens.dim, dens.dim
    )
    mu = np.linalg.eigvalsh(rho_pt)
    neg = float(np.abs(mu[mu < 0.0]).sum())
    return {"negativity": neg, "log_negativity": float(np.log2(2.0 * neg + 1.0))}


def negativity_from_schmidt(p: np.ndarray) -> dict:
    """Pure-state negativity via the spectrum identity 2N+1 = (sum sqrt p_i)^2."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    two_n_plus_1 = float(np.sum(np.sqrt(p)) ** 2)
    neg = (two_n_plus_1 - 1.0) / 2.0
    return {"negativity": max(neg, 0.0), "log_negativity": float(np.log2(max(two_n_plus_1, 1.0)))}


def expectation(op: SparseOperator, state: QuantumState):
    """<psi|A|psi> or tr(A rho); real output is enforced when the operator
    carries the hermitian flag."""
    if op.dim != state.dim:
        raise ConfigError(
            f"operator dim {op.dim} does not match state dim {state.dim}"
        )
    if state.is_pure:
        val = complex(np.vdot(state.data, op.matrix @ state.data))
    else:
        val = complex((op.matrix @ state.data).trace())
    if op.hermitian:
        return float(val.real)
    return val


def fock_populations(state: QuantumState) -> np.ndarray:
    """Probability of each Fock level, traced over the spin."""
    if state.is_pure:
        psi = state.as_spin_field()
        return np.sum(np.abs(psi) ** 2, axis=0)
    rho = state.as_spin_field()
    return np.real(np.einsum("anan->n", rho))


def truncation_monitor(state: QuantumState, frac: float = 0.1) -> float:
    """Total population in the top `frac` of Fock levels (runtime guard)."""
    if not (0.0 < frac <= 0.5):
        raise ConfigError(f"frac must be in (0, 0.5], got {frac}")
    pops = fock_populations(state)
    k = max(1, int(round(frac * pops.size)))
    return float(np.sum(pops[-k:]))


@dataclass
class ObservableRecord:
    """Everything recorded at one checkpoint of a trajectory."""

    t: float
    lam: float
    S_N: float
    negativity: float
    log_negativity: float
    parity: float
    jx: float
    jz: float
    n_photons: float
    tail_weight: float
    schmidt_spectrum: np.ndarray | None = None
    entropy_is_witness: bool = True

    def validate(self) -> None:
        vals = [
            self.t,
            self.lam,
            self.S_N,
            self.negativity,
            self.log_negativity,
            self.parity,
            self.jx,
            self.jz,
            self.n_photons,
            self.tail_weight,
        ]
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite observable record at t={self.t}")
        if self.S_N < -1e-12 or self.negativity < -1e-12:
            raise ValueError("entropy and negativity must be non-negative")
        if self.schmidt_spectrum is not None:
            p = self.schmidt_spectrum
            if abs(p.sum() - 1.0) > 1e-9:
                raise ValueError(f"Schmidt spectrum sums to {p.sum():.12f}")
            if np.any(np.diff(p) > 1e-12):
                raise ValueError("Schmidt spectrum must be non-increasing")


class ObservableSet:
    """Cached cheap-apply forms of the recorded operators for one system."""

    def __init__(self, params: SystemParams):
        self.params = params
        j = params.j
        m = np.arange(params.spin_dim) - j
        self.jz_diag = np.repeat(m, params.field_dim)
        self.n_diag = np.tile(np.arange(params.field_dim, dtype=float), params.spin_dim)
        self.parity_diag = parity_diagonal(params)
        self.jx_off = 0.5 * np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))

    def jx_expect(self, state: QuantumState) -> float:
        if state.is_pure:
            psi = state.as_spin_field()
            cross = np.sum(self.jx_off[:, None] * psi[1:, :].conj() * psi[:-1, :])
            return float(2.0 * cross.real)
        rho_q = reduce_matter(state)
        val = np.sum(self.jx_off * (np.diagonal(rho_q, -1) + np.diagonal(rho_q, 1)))
        return float(np.real(val))

    def diag_expect(self, diag: np.ndarray, state: QuantumState) -> float:
        if state.is_pure:
            return float(np.sum(diag * np.abs(state.data) ** 2).real)
        return float(np.real(np.sum(diag * np.diagonal(state.data))))


def checkpoint_record(
    state: QuantumState,
    params: SystemParams,
    obs: ObservableSet | None = None,
    keep_schmidt: bool = True,
    entropy_is_witness: bool = True,
) -> ObservableRecord:
    """Build the per-checkpoint record for a pure or density state.

    Pure states use the Schmidt route for the entropy and negativity (exact
    for pure states via 2N+1 = (sum sqrt p_i)^2); density states diagonalize
    the partial transpose directly.
    """
    if obs is None:
        obs = ObservableSet(params)
    if state.is_pure:
        p = schmidt_spectrum(state)
        psum = p.sum()
        if psum > 0:
            p = p / psum
        pe = p[p > EIGENVALUE_CUTOFF]
        s_n = max(float(-np.sum(pe * np.log(pe))), 0.0) if pe.size else 0.0
        neg = negativity_from_schmidt(p)
        schmidt = p if keep_schmidt else None
    else:
        rho_q = reduce_matter(state)
        tr = np.trace(rho_q).real
        s_n = von_neumann_entropy(rho_q / tr if tr > 0 else rho_q, base="natural")
        neg = negativity(state)
        schmidt = None
    return ObservableRecord(
        t=float(state.t),
        lam=float(state.lam),
        S_N=s_n,
        negativity=neg["negativity"],
        log_negativity=neg["log_negativity"],
        parity=obs.diag_expect(obs.parity_diag, state),
        jx=obs.jx_expect(state),
        jz=obs.diag_expect(obs.jz_diag, state),
        n_photons=obs.diag_expect(obs.n_diag, state),
        tail_weight=truncation_monitor(state, params.tail_frac),
        schmidt_spectrum=schmidt,
        entropy_is_witness=entropy_is_witness,
    )

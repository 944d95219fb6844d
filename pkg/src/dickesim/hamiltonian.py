"""Driven Dicke Hamiltonian, its displaced-frame form, and ramp schedules.

The model is H = eps J_z + omega a^dag a + (2 lambda / sqrt(N)) J_x (a + a^dag)
on the symmetric-sector product space, with the coupling ramped linearly in
time, lambda(t) = lambda_start + upsilon * t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceError
from .hilbert import (
    SparseOperator,
    SystemParams,
    build_boson,
    build_collective_spin,
    embed_product,
    parity_diagonal,
)
from .state import QuantumState, coherent_amplitudes, spin_coherent_x

__all__ = [
    "RampSchedule",
    "GroundStateResult",
    "CatAnsatz",
    "HamiltonianParts",
    "make_ramp",
    "dicke_hamiltonian",
    "hamiltonian_parts",
    "displaced_frame_hamiltonian",
    "strong_coupling_spectrum",
    "cat_ansatz",
    "broken_symmetry_state",
    "ground_state",
]


@dataclass(frozen=True)
class RampSchedule:
    """Linear coupling ramp lambda(t) = lambda_start + upsilon * t."""

    upsilon: float
    lambda_d: float = 2.0
    lambda_start: float = 0.0
    checkpoint_dlambda: float = 0.01

    def __post_init__(self):
        if self.upsilon <= 0:
            raise ConfigError(f"upsilon must be > 0, got {self.upsilon}")
        if self.lambda_d <= self.lambda_start:
            raise ConfigError(
                f"lambda_d ({self.lambda_d}) must exceed lambda_start "
                f"({self.lambda_start})"
            )
        if self.lambda_start < 0:
            raise ConfigError(f"lambda_start must be >= 0, got {self.lambda_start}")
        if self.checkpoint_dlambda <= 0:
            raise ConfigError(
                f"checkpoint_dlambda must be > 0, got {self.checkpoint_dlambda}"
            )

    @property
    def t_final(self) -> float:
        return (self.lambda_d - self.lambda_start) / self.upsilon

    def lam(self, t: float) -> float:
        return self.lambda_start + self.upsilon * t

    def checkpoints(self) -> np.ndarray:
        """Uniform lambda grid including both endpoints."""
        span = self.lambda_d - self.lambda_start
        nfull = int(np.floor(span / self.checkpoint_dlambda + 1e-9))
        grid = self.lambda_start + self.checkpoint_dlambda * np.arange(nfull + 1)
        if grid[-1] < self.lambda_d - 1e-12 * max(1.0, abs(self.lambda_d)):
            grid = np.append(grid, self.lambda_d)
        else:
            grid[-1] = self.lambda_d
        return grid

    def checkpoint_times(self) -> np.ndarray:
        return (self.checkpoints() - self.lambda_start) / self.upsilon


def make_ramp(
    upsilon: float,
    lambda_d: float = 2.0,
    checkpoint_dlambda: float = 0.01,
    lambda_start: float = 0.0,
) -> RampSchedule:
    """Validated linear ramp schedule."""
    if upsilon <= 0 or lambda_d <= 0 or checkpoint_dlambda <= 0:
        raise ConfigError(
            "make_ramp requires positive upsilon, lambda_d, checkpoint_dlambda"
        )
    return RampSchedule(
        upsilon=upsilon,
        lambda_d=lambda_d,
        lambda_start=lambda_start,
        checkpoint_dlambda=checkpoint_dlambda,
    )


@dataclass(frozen=True)
class HamiltonianParts:
    """Split H = H0 + g(lambda) * J_x (a + a^dag) for fast propagation.

    h0_grid[a, n] = eps*(a - j) + omega*n over the (spin, fock) grid;
    jx_off are the J_x off-diagonal elements, f_off[n] = sqrt(n+1) those of
    (a + a^dag).  The coupling scale is g(lambda) = 2*lambda/sqrt(N).
    """

    h0_grid: np.ndarray
    jx_off: np.ndarray
    f_off: np.ndarray
    coupling_scale: float

    def g(self, lam: float) -> float:
        return self.coupling_scale * lam


def hamiltonian_parts(params: SystemParams) -> HamiltonianParts:
    j = params.j
    m = np.arange(params.spin_dim) - j
    n = np.arange(params.field_dim, dtype=float)
    h0 = params.epsilon * m[:, None] + params.omega * n[None, :]
    jx_off = 0.5 * np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    f_off = np.sqrt(np.arange(1, params.field_dim, dtype=float))
    return HamiltonianParts(
        h0_grid=np.ascontiguousarray(h0),
        jx_off=np.ascontiguousarray(jx_off),
        f_off=np.ascontiguousarray(f_off),
        coupling_scale=2.0 / np.sqrt(params.N),
    )


def dicke_hamiltonian(params: SystemParams, lam: float) -> SparseOperator:
    """H = eps J_z + omega a^dag a + (2 lambda/sqrt(N)) J_x (a^dag + a)."""
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    spin = build_collective_spin(params.N)
    bos = build_boson(params.n_max)
    eye_s = SparseOperator(sp.identity(params.spin_dim, format="csr"), hermitian=True)
    eye_f = SparseOperator(sp.identity(params.field_dim, format="csr"), hermitian=True)
    h = (
        params.epsilon * embed_product(spin["J_z"], eye_f, params).matrix
        + params.omega * embed_product(eye_s, bos["n_op"], params).matrix
        + (2.0 * lam / np.sqrt(params.N))
        * embed_product(
            spin["J_x"],
            SparseOperator(bos["a"].matrix + bos["a_dag"].matrix, hermitian=True),
            params,
        ).matrix
    )
    return SparseOperator(h, hermitian=True)


def displaced_frame_hamiltonian(params: SystemParams, lam: float) -> SparseOperator:
    """Exact rewriting H = omega b^dag b - (4 lambda^2/(omega N)) J_x^2 + eps J_z
    with b = a + (2 lambda/(omega sqrt(N))) J_x, built literally from those
    operators on the truncated space."""
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    spin = build_collective_spin(params.N)
    bos = build_boson(params.n_max)
    eye_s = sp.identity(params.spin_dim, format="csr")
    eye_f = sp.identity(params.field_dim, format="csr")
    a_e = sp.kron(eye_s, bos["a"].matrix, format="csr")
    jx_e = sp.kron(spin["J_x"].matrix, eye_f, format="csr")
    jz_e = sp.kron(spin["J_z"].matrix, eye_f, format="csr")
    shift = 2.0 * lam / (params.omega * np.sqrt(params.N))
    b = a_e + shift * jx_e
    h = (
        params.omega * (b.getH() @ b)
        - (4.0 * lam**2 / (params.omega * params.N)) * (jx_e @ jx_e)
        + params.epsilon * jz_e
    )
    return SparseOperator(h, hermitian=True)


def strong_coupling_spectrum(params: SystemParams, lam: float) -> list[dict]:
    """Displaced-well structure for lambda >> lambda_c.

    For each J_x eigenvalue m_x the field sees a harmonic well displaced by
    beta(m_x) = (2 lambda/(omega sqrt(N))) m_x with bottom energy
    -(4 lambda^2/(omega N)) m_x^2 + omega/2 (zero-point term included,
    quadratures normalized as x = (a + a^dag)/sqrt(2)).
    """
    if lam <= 0:
        raise ConfigError(f"lambda must be > 0, got {lam}")
    j = params.j
    out = []
    for k in range(params.spin_dim):
        m_x = k - j
        center = 2.0 * lam / (params.omega * np.sqrt(params.N)) * m_x
        minimum = (
            -4.0 * lam**2 / (params.omega * params.N) * m_x**2 + params.omega / 2.0
        )
        out.append(
            {"m_x": float(m_x), "well_minimum": float(minimum), "well_center": float(center)}
        )
    return out


@dataclass(frozen=True)
class CatAnsatz:
    """Two-branch superposition parameters of the symmetry-broken state."""

    theta: float
    phi: float
    beta_amp: float


def cat_ansatz(params: SystemParams, lam: float, theta: float, phi: float) -> CatAnsatz:
    beta = 2.0 * lam / (params.omega * np.sqrt(params.N)) * params.j
    return CatAnsatz(theta=float(theta), phi=float(phi), beta_amp=float(beta))


def broken_symmetry_state(
    params: SystemParams, lam: float, theta: float, phi: float
) -> QuantumState:
    """cos(theta)|m_x=+N/2>|-beta> + e^{i phi} sin(theta)|m_x=-N/2>|+beta>.

    The second branch is obtained by applying the parity operator to the
    first, which pins the inter-branch phase so that theta = pi/4, phi = 0
    is the even-parity cat for every N.  Raises TruncationError when the
    coherent tail beyond n_max exceeds 1e-8.
    """
    if lam <= params.lambda_c:
        raise ConfigError(
            f"broken-symmetry ansatz requires lambda > lambda_c = {params.lambda_c}"
        )
    ans = cat_ansatz(params, lam, theta, phi)
    spin_plus = spin_coherent_x(params.N, +1)
    field_minus = coherent_amplitudes(-ans.beta_amp, params.n_max, tail_tol=1e-8)
    branch1 = np.kron(spin_plus, field_minus)
    branch2 = parity_diagonal(params) * branch1
    psi = np.cos(theta) * branch1 + np.exp(1j * phi) * np.sin(theta) * branch2
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ConfigError("degenerate cat parameters produced the zero vector")
    psi = psi / nrm
    return QuantumState(
        kind="pure",
        data=psi,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=0.0,
        lam=float(lam),
    )


@dataclass(frozen=True)
class GroundStateResult:
    energy_0: float
    energy_1: float
    state: QuantumState
    sector: str

    @property
    def gap(self) -> float:
        return self.energy_1 - self.energy_0


_DENSE_CUTOFF = 600


def ground_state(
    params: SystemParams, lam: float, sector: str = "full"
) -> GroundStateResult:
    """Two lowest eigenpairs of H(lambda) within a parity sector.

    sector 'even'/'odd' restricts to the +1/-1 eigenspace of the parity
    operator before solving (the two sectors become degenerate past the
    critical coupling, where a full-space iterative solve is ill
    conditioned); 'full' solves the unrestricted problem.
    """
    if sector not in ("even", "odd", "full"):
        raise ConfigError(f"sector must be 'even', 'odd' or 'full', got {sector!r}")
    h = dicke_hamiltonian(params, lam).matrix
    if sector == "full":
        idx = np.arange(params.dim)
        hs = h.tocsc()
    else:
        want = 1.0 if sector == "even" else -1.0
        idx = np.where(parity_diagonal(params) == want)[0]
        hs = h.tocsr()[idx][:, idx].tocsc()
    dim_s = hs.shape[0]
    if dim_s <= _DENSE_CUTOFF:
        vals, vecs = np.linalg.eigh(hs.toarray())
        e0, e1 = float(vals[0]), float(vals[1])
        v0 = vecs[:, 0]
    else:
        try:
            vals, vecs = spla.eigsh(
                hs,
                k=2,
                which="SA",
                tol=params.eig_tol,
                maxiter=params.eig_maxiter,
            )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"sparse eigensolver did not converge after "
                f"{params.eig_maxiter} iterations (N={params.N}, lambda={lam}, "
                f"sector={sector})"
            ) from exc
        order = np.argsort(vals)
        e0, e1 = float(vals[order[0]]), float(vals[order[1]])
        v0 = vecs[:, order[0]]
    psi = np.zeros(params.dim, dtype=np.complex128)
    psi[idx] = v0
    psi /= np.linalg.norm(psi)
    # deterministic global phase: largest-magnitude amplitude real positive
    k = int(np.argmax(np.abs(psi)))
    psi *= np.exp(-1j * np.angle(psi[k]))
    gs = QuantumState(
        kind="pure",
        data=psi,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=0.0,
        lam=float(lam),
    )
    return GroundStateResult(energy_0=e0, energy_1=e1, state=gs, sector=sector)

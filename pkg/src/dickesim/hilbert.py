"""Product Hilbert space of N collective qubits and one truncated boson mode.

Only the maximal-spin symmetric sector j = N/2 is kept: the dynamics starts
in that sector and every generator used here (Hamiltonian and cavity
dissipator) preserves total spin, so the (N+1)-dimensional collective basis
is exact for our purposes.  Basis ordering is spin-major, Fock-minor:
``flat = (m + N/2) * (n_max + 1) + n``, which makes the field partial trace
a contiguous block sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

__all__ = [
    "SystemParams",
    "SparseOperator",
    "BasisIndex",
    "build_collective_spin",
    "build_boson",
    "embed_product",
    "parity_operator",
    "parity_diagonal",
]

HERMITIAN_ATOL = 1e-14


@dataclass(frozen=True)
class SystemParams:
    """Physical system plus truncation and numerical tolerances.

    Energies are in units where the field frequency is order one; the
    resonant point epsilon = omega = 1 is the default everywhere.
    """

    N: int
    n_max: int
    epsilon: float = 1.0
    omega: float = 1.0
    entropy_log_base: str = "natural"  # "natural" or "base2"
    tail_frac: float = 0.1
    tail_threshold: float = 1e-8
    eig_tol: float = 1e-10
    eig_maxiter: int = 20000

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max!r}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.omega <= 0:
            raise ConfigError(f"omega must be > 0, got {self.omega}")
        if self.entropy_log_base not in ("natural", "base2"):
            raise ConfigError(
                f"entropy_log_base must be 'natural' or 'base2', "
                f"got {self.entropy_log_base!r}"
            )

    @property
    def spin_dim(self) -> int:
        return self.N + 1

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.spin_dim * self.field_dim

    @property
    def j(self) -> float:
        return self.N / 2.0

    @property
    def lambda_c(self) -> float:
        """Thermodynamic-limit critical coupling sqrt(omega*epsilon)/2.

        The finite-N critical point sits slightly away from this value;
        all reported boundaries use this constant with that caveat.
        """
        return np.sqrt(self.omega * self.epsilon) / 2.0


@dataclass(frozen=True)
class BasisIndex:
    """One product-basis label |m> (x) |n> with its flat row index."""

    m: float
    n: int
    flat: int

    @staticmethod
    def from_flat(flat: int, params: SystemParams) -> "BasisIndex":
        a, n = divmod(flat, params.field_dim)
        return BasisIndex(m=a - params.j, n=n, flat=flat)

    @staticmethod
    def to_flat(m: float, n: int, params: SystemParams) -> int:
        a = m + params.j
        a_int = int(round(a))
        if abs(a - a_int) > 1e-12 or not (0 <= a_int <= params.N):
            raise ConfigError(f"m={m} is not a valid J_z eigenvalue for N={params.N}")
        if not (0 <= n <= params.n_max):
            raise ConfigError(f"n={n} outside the retained Fock range")
        return a_int * params.field_dim + n


class SparseOperator:
    """Sparse matrix in canonical CSR form with a hermiticity contract.

    Entries are duplicate-free and deterministically sorted (CSR canonical
    order), so identical constructions serialize identically.
    """

    def __init__(self, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=np.complex128)
        if m.shape[0] != m.shape[1]:
            raise ConfigError(f"operator must be square, got shape {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        self.matrix = m
        self.hermitian = bool(hermitian)
        if self.hermitian:
            dev = abs(m - m.getH()).max() if m.nnz else 0.0
            if dev > HERMITIAN_ATOL * max(1.0, abs(m).max()):
                raise ValueError(
                    f"hermitian_flag set but max |A - A^dag| = {dev:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self):
        """Canonical (row, col, value) triples, sorted by (row, col)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[i]), int(coo.col[i]), complex(coo.data[i]))
            for i in order
        ]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def dot(self, other):
        if isinstance(other, SparseOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.getH(), hermitian=self.hermitian)

    def __matmul__(self, other):
        return self.dot(other)

    def __add__(self, other):
        om = other.matrix if isinstance(other, SparseOperator) else other
        return SparseOperator(self.matrix + om)

    def __sub__(self, other):
        om = other.matrix if isinstance(other, SparseOperator) else other
        return SparseOperator(self.matrix - om)

    def __mul__(self, scalar):
        return SparseOperator(self.matrix * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"SparseOperator(dim={self.dim}, nnz={self.nnz}, "
            f"hermitian={self.hermitian})"
        )


def build_collective_spin(N: int) -> dict:
    """Collective spin operators for j = N/2 in the J_z eigenbasis.

    Basis states |m> are ordered by ascending m = -j ... +j.  Returns
    J_x, J_y, J_z, J_plus, J_minus as (N+1) x (N+1) sparse operators with
    J_x = (J_plus + J_minus) / 2.
    """
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool) or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N!r}")
    j = N / 2.0
    m = np.arange(N + 1) - j
    # <m+1| J_+ |m> = sqrt(j(j+1) - m(m+1)) on the subdiagonal-to-super path
    raise_amp = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jz = sp.diags(m, 0)
    jplus = sp.diags(raise_amp, -1)  # maps column m to row m+1
    jminus = sp.diags(raise_amp, 1)
    jx = (jplus + jminus) / 2.0
    jy = (jplus - jminus) / (2.0j)
    return {
        "J_x": SparseOperator(jx, hermitian=True),
        "J_y": SparseOperator(jy, hermitian=True),
        "J_z": SparseOperator(jz, hermitian=True),
        "J_plus": SparseOperator(jplus),
        "J_minus": SparseOperator(jminus),
    }


def build_boson(n_max: int) -> dict:
    """Truncated boson mode operators on Fock levels 0..n_max.

    a|n> = sqrt(n)|n-1>, with the top-row truncation a^dag|n_max> = 0.
    Quadratures are x = (a + a^dag)/sqrt(2) and p = i(a^dag - a)/sqrt(2).
    """
    if not isinstance(n_max, (int, np.integer)) or isinstance(n_max, bool) or n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max!r}")
    amp = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    a = sp.diags(amp, 1)
    adag = sp.diags(amp, -1)
    n_op = sp.diags(np.arange(n_max + 1, dtype=float), 0)
    x = (a + adag) / np.sqrt(2.0)
    p = 1j * (adag - a) / np.sqrt(2.0)
    return {
        "a": SparseOperator(a),
        "a_dag": SparseOperator(adag),
        "n_op": SparseOperator(n_op, hermitian=True),
        "x": SparseOperator(x, hermitian=True),
        "p": SparseOperator(p, hermitian=True),
    }


def embed_product(
    op_spin: SparseOperator,
    op_boson: SparseOperator,
    params: SystemParams | None = None,
) -> SparseOperator:
    """Kronecker embedding consistent with the spin-major flat ordering."""
    if params is not None:
        if op_spin.dim != params.spin_dim or op_boson.dim != params.field_dim:
            raise ConfigError(
                f"operand dims ({op_spin.dim}, {op_boson.dim}) do not match "
                f"system dims ({params.spin_dim}, {params.field_dim})"
            )
    herm = op_spin.hermitian and op_boson.hermitian
    return SparseOperator(
        sp.kron(op_spin.matrix, op_boson.matrix, format="csr"), hermitian=herm
    )


def parity_diagonal(params: SystemParams) -> np.ndarray:
    """Diagonal of exp{i pi (n + m + N/2)} over the flat product basis."""
    a = np.arange(params.spin_dim)  # m + N/2
    n = np.arange(params.field_dim)
    signs = np.where((a[:, None] + n[None, :]) % 2 == 0, 1.0, -1.0)
    return signs.ravel()


def parity_operator(params: SystemParams) -> SparseOperator:
    """Conserved parity exp{i pi (a^dag a + J_z + N/2)}; eigenvalues +-1."""
    return SparseOperator(sp.diags(parity_diagonal(params), 0), hermitian=True)

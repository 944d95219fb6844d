"""State containers and elementary state constructors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, TruncationError
from .hilbert import SystemParams

__all__ = [
    "QuantumState",
    "initial_state",
    "coherent_amplitudes",
    "spin_coherent_x",
]

NORM_ATOL = 1e-9
HERM_ATOL = 1e-10
POSITIVITY_FLOOR = -1e-8


@dataclass
class QuantumState:
    """Pure amplitude vector or density matrix over |m> (x) |n>.

    ``data`` has shape (D,) for kind='pure' and (D, D) for kind='density'
    with D = spin_dim * field_dim and the spin-major flat ordering.
    """

    kind: str
    data: np.ndarray
    spin_dim: int
    field_dim: int
    t: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("pure", "density"):
            raise ConfigError(f"kind must be 'pure' or 'density', got {self.kind!r}")
        self.data = np.asarray(self.data, dtype=np.complex128)
        d = self.dim
        want = (d,) if self.kind == "pure" else (d, d)
        if self.data.shape != want:
            raise ConfigError(
                f"state data shape {self.data.shape} does not match {want}"
            )

    @property
    def dim(self) -> int:
        return self.spin_dim * self.field_dim

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def as_spin_field(self) -> np.ndarray:
        """Reshape to (spin, fock) for pure or (spin, fock, spin, fock)."""
        if self.is_pure:
            return self.data.reshape(self.spin_dim, self.field_dim)
        return self.data.reshape(
            self.spin_dim, self.field_dim, self.spin_dim, self.field_dim
        )

    def norm(self) -> float:
        if self.is_pure:
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def to_density(self) -> "QuantumState":
        """Promote a pure state to its projector; densities pass through."""
        if not self.is_pure:
            return self
        rho = np.outer(self.data, self.data.conj())
        return QuantumState(
            kind="density",
            data=rho,
            spin_dim=self.spin_dim,
            field_dim=self.field_dim,
            t=self.t,
            lam=self.lam,
        )

    def copy(self) -> "QuantumState":
        return QuantumState(
            kind=self.kind,
            data=self.data.copy(),
            spin_dim=self.spin_dim,
            field_dim=self.field_dim,
            t=self.t,
            lam=self.lam,
        )

    def validate(self, norm_atol: float = NORM_ATOL) -> None:
        """Check the state-class invariants; raise ValueError on breach."""
        if self.is_pure:
            if abs(np.linalg.norm(self.data) - 1.0) > norm_atol:
                raise ValueError(
                    f"pure state norm {np.linalg.norm(self.data):.12f} != 1"
                )
            return
        rho = self.data
        herm_dev = np.abs(rho - rho.conj().T).max()
        if herm_dev > HERM_ATOL:
            raise ValueError(f"density matrix hermiticity deviation {herm_dev:.3e}")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > norm_atol:
            raise ValueError(f"density matrix trace {tr:.12f} != 1")
        wmin = float(np.linalg.eigvalsh(rho).min())
        if wmin < POSITIVITY_FLOOR:
            raise ValueError(f"density matrix min eigenvalue {wmin:.3e}")


def initial_state(params: SystemParams) -> QuantumState:
    """Decoupled ground state |m=-N/2> (x) |0> at t = 0, lambda = 0."""
    psi = np.zeros(params.dim, dtype=np.complex128)
    psi[0] = 1.0
    return QuantumState(
        kind="pure",
        data=psi,
        spin_dim=params.spin_dim,
        field_dim=params.field_dim,
        t=0.0,
        lam=0.0,
    )


def coherent_amplitudes(
    beta: complex, n_max: int, tail_tol: float = 1e-8, renormalize: bool = True
) -> np.ndarray:
    """Fock amplitudes of |beta>, truncated at n_max.

    Raises TruncationError if the truncated tail weight exceeds tail_tol.
    """
    if beta == 0:
        amps = np.zeros(n_max + 1, dtype=np.complex128)
        amps[0] = 1.0
        return amps
    n = np.arange(n_max + 1)
    # log-scaled to stay finite for large |beta|
    logmag = -abs(beta) ** 2 / 2.0 + n * np.log(abs(beta)) - 0.5 * gammaln(n + 1.0)
    amps = np.exp(logmag) * np.exp(1j * n * np.angle(beta))
    captured = float(np.sum(np.abs(amps) ** 2))
    tail = max(0.0, 1.0 - captured)
    if tail > tail_tol:
        raise TruncationError(
            f"coherent amplitude |beta|={abs(beta):.3f} leaves tail weight "
            f"{tail:.2e} > {tail_tol:.1e} beyond n_max={n_max}; raise n_max"
        )
    if renormalize and captured > 0:
        amps = amps / np.sqrt(captured)
    return amps.astype(np.complex128)


def spin_coherent_x(N: int, sign: int) -> np.ndarray:
    """Extremal J_x eigenstate |m_x = sign * N/2> in the J_z basis.

    Amplitudes over m = -j..+j (ascending): 2^{-j} sqrt(C(2j, j-m)) with an
    alternating sign (-1)^{j-m} for the m_x = -j branch.
    """
    if sign not in (+1, -1):
        raise ConfigError("sign must be +1 or -1")
    a = np.arange(N + 1.0)  # a = m + j, so j - m = N - a
    logc = gammaln(N + 1.0) - gammaln(a + 1.0) - gammaln(N - a + 1.0)
    amps = np.exp(0.5 * logc - 0.5 * N * np.log(2.0))
    if sign < 0:
        amps = amps * np.where((N - np.arange(N + 1)) % 2 == 0, 1.0, -1.0)
    return amps.astype(np.complex128)

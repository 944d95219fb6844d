"""Phase-space tomography of the two subsystems.

Matter states get a Bloch-sphere (Agarwal-Wigner) representation built
from multipole-operator expectations; the field gets the displaced-parity
Wigner function W(alpha) = sum_n (-1)^n <n|D^dag(alpha) rho D(alpha)|n>
with sqrt(2) alpha = x + i p.  That convention is used literally (it is
bounded by 1 and carries no 2/pi prefactor); an optional 2/pi-scaled
output serves users expecting the unit-integral convention over d^2 alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, isqrt

import numpy as np
from scipy.special import gammaln, sph_harm_y

from .errors import ConfigError, TruncationError
from .hilbert import SparseOperator
import scipy.sparse as sp

__all__ = [
    "PlanarWignerGrid",
    "SphericalWignerGrid",
    "MultipoleSet",
    "wigner_3j",
    "multipole_operators",
    "agarwal_wigner",
    "field_wigner",
    "write_planar_grid",
    "write_spherical_grid",
]

PLANAR_CONVENTION = (
    "displaced-parity expectation, sqrt(2)*alpha = x + i*p, bounded in "
    "[-1, 1]; multiply by 2/pi for the unit-integral convention over "
    "d^2 alpha"
)


def _two_j(x, name: str) -> int:
    """Doubled angular momentum as an exact integer; rejects non-half-integers."""
    tx = 2.0 * float(x)
    ti = int(round(tx))
    if abs(tx - ti) > 1e-9:
        raise ConfigError(f"{name}={x} is not integer or half-integer")
    return ti


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol by exact big-integer Racah summation.

    Returns 0 when the selection rules fail (m1+m2+m3 != 0, triangle
    violation, |m| > j).  Arguments may be integers or half-integers;
    anything else raises.  Python's arbitrary-precision integers make the
    evaluation exact at every j, with a single correctly-rounded square
    root at the end.
    """
    tj1, tj2, tj3 = _two_j(j1, "j1"), _two_j(j2, "j2"), _two_j(j3, "j3")
    tm1, tm2, tm3 = _two_j(m1, "m1"), _two_j(m2, "m2"), _two_j(m3, "m3")
    if tj1 < 0 or tj2 < 0 or tj3 < 0:
        raise ConfigError("angular momenta must be non-negative")
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tj3 + tm3) % 2:
        # m_i must differ from j_i by an integer
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0

    # All the following combinations are non-negative integers now.
    def h(x):
        return x // 2

    a1 = h(tj1 + tj2 - tj3)
    a2 = h(tj1 - tj2 + tj3)
    a3 = h(-tj1 + tj2 + tj3)
    b1 = h(tj1 - tm1)
    b2 = h(tj1 + tm1)
    b3 = h(tj2 - tm2)
    b4 = h(tj2 + tm2)
    b5 = h(tj3 - tm3)
    b6 = h(tj3 + tm3)

    k_min = max(0, h(tj2 - tj3 - tm1), h(tj1 - tj3 + tm2))
    k_max = min(a1, b1, b4)
    if k_max < k_min:
        return 0.0

    ssum = Fraction(0)
    for k in range(k_min, k_max + 1):
        den = (
            factorial(k)
            * factorial(a1 - k)
            * factorial(b1 - k)
            * factorial(b4 - k)
            * factorial(h(tj3 - tj2 + tm1) + k)
            * factorial(h(tj3 - tj1 - tm2) + k)
        )
        term = Fraction((-1) ** k, den)
        ssum += term
    if ssum == 0:
        return 0.0

    ratio = Fraction(
        factorial(a1) * factorial(a2) * factorial(a3),
        factorial(h(tj1 + tj2 + tj3) + 1),
    )
    ratio *= (
        factorial(b1)
        * factorial(b2)
        * factorial(b3)
        * factorial(b4)
        * factorial(b5)
        * factorial(b6)
    )
    square = ratio * ssum * ssum  # exact non-negative rational, <= 1
    sign = 1 if ssum > 0 else -1
    phase = -1 if h(tj1 - tj2 - tm3) % 2 else 1
    return float(phase * sign * np.sqrt(float(square)))


@dataclass
class MultipoleSet:
    """Orthonormal multipole operators T_{l,m} on the spin-j space."""

    N: int
    operators: dict = field(default_factory=dict)

    @property
    def j(self) -> float:
        return self.N / 2.0

    def gram_entry(self, lm1, lm2) -> complex:
        a = self.operators[lm1].matrix
        b = self.operators[lm2].matrix
        return complex((a.getH() @ b).trace())


def multipole_operators(N: int) -> MultipoleSet:
    """T_{l,m} = sum_{M} (-1)^{j-M} sqrt(2l+1) (j l j; -M m M-m) |jM><j,M-m|
    for l = 0..N, m = -l..l, with j = N/2.

    The (-1)^{j-M} phase is the convention under which the set is the
    orthonormal-and-hermitian-conjugate family (T_{l,m}^dag =
    (-1)^m T_{l,-m}) and T_{0,0} is the normalized identity.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N!r}")
    j = N / 2.0
    dim = N + 1
    ms = MultipoleSet(N=N)
    for l in range(N + 1):
        pref = np.sqrt(2.0 * l + 1.0)
        for m in range(-l, l + 1):
            rows, cols, vals = [], [], []
            for a_row in range(dim):  # M = a_row - j
                big_m = a_row - j
                big_mp = big_m - m
                a_col = int(round(big_mp + j))
                if not (0 <= a_col < dim):
                    continue
                w = wigner_3j(j, l, j, -big_m, m, big_mp)
                if w == 0.0:
                    continue
                phase = -1.0 if int(round(j - big_m)) % 2 else 1.0
                rows.append(a_row)
                cols.append(a_col)
                vals.append(phase * pref * w)
            mat = sp.csr_matrix(
                (np.array(vals, dtype=np.complex128), (rows, cols)),
                shape=(dim, dim),
            )
            ms.operators[(l, m)] = SparseOperator(mat)
    return ms


@dataclass
class SphericalWignerGrid:
    theta_values: np.ndarray
    phi_values: np.ndarray
    values: np.ndarray  # (n_theta, n_phi), real
    imag_residue: float = 0.0


def agarwal_wigner(
    rho_q: np.ndarray,
    theta_values: np.ndarray | int = 91,
    phi_values: np.ndarray | int = 181,
    multipoles: MultipoleSet | None = None,
) -> SphericalWignerGrid:
    """Bloch-sphere distribution W(theta, phi) = sum T_{l,m} Y_{l,m}.

    T_{l,m} = tr(rho_q T_hat_{l,m}); spherical harmonics come from scipy's
    stable recurrences.  Integer grid arguments are expanded to uniform
    grids over [0, pi] and [0, 2*pi).
    """
    rho_q = np.asarray(rho_q, dtype=np.complex128)
    if rho_q.ndim != 2 or rho_q.shape[0] != rho_q.shape[1]:
        raise ConfigError("rho_q must be a square matrix")
    N = rho_q.shape[0] - 1
    if N < 1:
        raise ConfigError("need at least a spin-1/2 collective space")
    if multipoles is None:
        multipoles = multipole_operators(N)
    elif multipoles.N != N:
        raise ConfigError("multipole set does not match rho_q dimension")
    if isinstance(theta_values, (int, np.integer)):
        theta_values = np.linspace(0.0, np.pi, int(theta_values))
    if isinstance(phi_values, (int, np.integer)):
        phi_values = np.linspace(0.0, 2.0 * np.pi, int(phi_values), endpoint=False)
    theta_values = np.asarray(theta_values, dtype=float)
    phi_values = np.asarray(phi_values, dtype=float)

    tgrid, pgrid = np.meshgrid(theta_values, phi_values, indexing="ij")
    w = np.zeros_like(tgrid, dtype=np.complex128)
    for (l, m), op in multipoles.operators.items():
        t_lm = complex((op.matrix @ rho_q).trace())
        if abs(t_lm) < 1e-16:
            continue
        w += t_lm * sph_harm_y(l, m, tgrid, pgrid)
    residue = float(np.abs(w.imag).max()) if w.size else 0.0
    return SphericalWignerGrid(
        theta_values=theta_values,
        phi_values=phi_values,
        values=w.real.copy(),
        imag_residue=residue,
    )


@dataclass
class PlanarWignerGrid:
    x_values: np.ndarray
    p_values: np.ndarray
    values: np.ndarray  # (n_x, n_p), real
    convention_note: str = PLANAR_CONVENTION
    scaled_2_over_pi: bool = False


def field_wigner(
    rho_b: np.ndarray,
    x_values: np.ndarray | None = None,
    p_values: np.ndarray | None = None,
    half_width: float = 4.0,
    points: int = 201,
    scaled: bool = False,
) -> PlanarWignerGrid:
    """Field Wigner function on an (x, p) grid by displaced-parity algebra.

    Uses exact closed-form displacement matrix elements summed over the
    diagonals of rho_b, so the result is exact for the given truncated
    density matrix.  Raises when the grid asks for phase-space radius the
    truncated basis cannot represent (|alpha|^2 > n_max + 1/2).
    """
    rho_b = np.asarray(rho_b, dtype=np.complex128)
    if rho_b.ndim != 2 or rho_b.shape[0] != rho_b.shape[1]:
        raise ConfigError("rho_b must be a square matrix")
    herm_dev = np.abs(rho_b - rho_b.conj().T).max()
    if herm_dev > 1e-8:
        raise ConfigError(f"rho_b is not hermitian (dev {herm_dev:.2e})")
    rho_b = 0.5 * (rho_b + rho_b.conj().T)
    nmax = rho_b.shape[0] - 1

    if x_values is None:
        x_values = np.linspace(-half_width, half_width, points)
    if p_values is None:
        p_values = np.linspace(-half_width, half_width, points)
    x_values = np.asarray(x_values, dtype=float)
    p_values = np.asarray(p_values, dtype=float)

    alpha_max_sq = float((x_values**2).max() + (p_values**2).max()) / 2.0
    if alpha_max_sq > nmax + 0.5:
        raise TruncationError(
            f"grid reaches |alpha|^2 = {alpha_max_sq:.1f} beyond the "
            f"truncation radius n_max + 1/2 = {nmax + 0.5}; shrink the "
            f"window or raise n_max"
        )

    xg, pg = np.meshgrid(x_values, p_values, indexing="ij")
    alpha = (xg + 1j * pg) / np.sqrt(2.0)
    g = 2.0 * alpha  # displacement argument of D(2 alpha) P
    u = np.abs(g) ** 2
    gphase = np.where(np.abs(g) > 0, g / np.where(np.abs(g) > 0, np.abs(g), 1.0), 1.0)

    signs = np.where(np.arange(nmax + 1) % 2 == 0, 1.0, -1.0)
    w = np.zeros(alpha.shape, dtype=np.complex128)
    log_absg = np.log(np.where(np.abs(g) > 0, np.abs(g), 1.0))
    for d in range(nmax + 1):
        diag = np.diagonal(rho_b, offset=d)  # rho[n, n+d]
        coeff = diag * signs[: diag.size]
        if np.abs(coeff).max() < 1e-18:
            continue
        # B_n = |g|^d e^{-u/2} sqrt(n!/(n+d)!) L_n^{(d)}(u), evaluated by a
        # scaled three-term recurrence; every B_n is a bounded displacement
        # matrix element.
        with np.errstate(under="ignore"):
            b_prev = np.exp(d * log_absg - 0.5 * u - 0.5 * gammaln(d + 1.0))
        if d > 0:
            b_prev = np.where(np.abs(g) > 0, b_prev, 0.0)
        acc = coeff[0] * b_prev
        b_pprev = np.zeros_like(b_prev)
        for n in range(1, diag.size):
            r1 = np.sqrt(n / (n + d))
            r2 = np.sqrt((n * (n - 1.0)) / ((n + d) * (n + d - 1.0))) if n > 1 else 0.0
            b_next = (
                (2.0 * (n - 1) + d + 1.0 - u) * r1 * b_prev
                - ((n - 1.0) + d) * r2 * b_pprev
            ) / n
            b_pprev, b_prev = b_prev, b_next
            acc = acc + coeff[n] * b_prev
        phase_d = gphase**d
        if d == 0:
            w += acc.real  # diagonal contribution is real
        else:
            w += 2.0 * (acc * phase_d).real
    values = w.real
    if scaled:
        values = values * (2.0 / np.pi)
    return PlanarWignerGrid(
        x_values=x_values,
        p_values=p_values,
        values=values,
        scaled_2_over_pi=scaled,
    )


def write_planar_grid(grid: PlanarWignerGrid, csv_path, json_path) -> None:
    """CSV of (x, p, W) triples plus a JSON header with grid metadata."""
    with open(csv_path, "w") as f:
        f.write("x,p,W\n")
        for i, x in enumerate(grid.x_values):
            for k, p in enumerate(grid.p_values):
                f.write(f"{x:.17g},{p:.17g},{grid.values[i, k]:.17g}\n")
    header = {
        "kind": "field_wigner",
        "x_window": [float(grid.x_values.min()), float(grid.x_values.max())],
        "p_window": [float(grid.p_values.min()), float(grid.p_values.max())],
        "resolution": [int(grid.x_values.size), int(grid.p_values.size)],
        "convention": grid.convention_note,
        "scaled_2_over_pi": bool(grid.scaled_2_over_pi),
    }
    with open(json_path, "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")


def write_spherical_grid(grid: SphericalWignerGrid, csv_path, json_path) -> None:
    """CSV of (theta, phi, W) triples plus a JSON header."""
    with open(csv_path, "w") as f:
        f.write("theta,phi,W\n")
        for i, th in enumerate(grid.theta_values):
            for k, ph in enumerate(grid.phi_values):
                f.write(f"{th:.17g},{ph:.17g},{grid.values[i, k]:.17g}\n")
    header = {
        "kind": "agarwal_wigner",
        "theta_range": [float(grid.theta_values.min()), float(grid.theta_values.max())],
        "phi_range": [float(grid.phi_values.min()), float(grid.phi_values.max())],
        "resolution": [int(grid.theta_values.size), int(grid.phi_values.size)],
        "imag_residue": float(grid.imag_residue),
    }
    with open(json_path, "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")

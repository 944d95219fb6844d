"""Compiled inner loops for the propagators.

All kernels are written against the (spin, fock) tensor layout so the
coupling term J_x (a + a^dag) is applied through its four nearest-neighbor
shifts instead of a generic sparse matvec.  The Liouvillian is applied
matrix-free on the (spin, fock, spin, fock) density tensor, which keeps the
memory footprint at D^2 for the state only.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "pure_rhs",
    "lindblad_rhs_kernel",
    "stage_add",
    "rk4_accumulate",
    "accept_extrapolate",
    "diff_norm",
]


@numba.njit(cache=True, fastmath=True)
def pure_rhs(g, y, h0, jx_off, f_off, out):
    """out = -i (H0 + g * Jx (x) (a + a^dag)) y on the (spin, fock) grid."""
    ns, nf = y.shape
    for a in range(ns):
        for n in range(nf):
            acc = h0[a, n] * y[a, n]
            v = 0.0j
            if a > 0:
                if n > 0:
                    v += jx_off[a - 1] * f_off[n - 1] * y[a - 1, n - 1]
                if n < nf - 1:
                    v += jx_off[a - 1] * f_off[n] * y[a - 1, n + 1]
            if a < ns - 1:
                if n > 0:
                    v += jx_off[a] * f_off[n - 1] * y[a + 1, n - 1]
                if n < nf - 1:
                    v += jx_off[a] * f_off[n] * y[a + 1, n + 1]
            out[a, n] = -1j * (acc + g * v)
    return out


@numba.njit(cache=True, fastmath=True)
def lindblad_rhs_kernel(g, r, h0, jx_off, f_off, kap_down, kap_up, out):
    """Matrix-free Liouvillian application on the density tensor.

    out = -i[H, r] + kap_down * (a r a^dag - {a^dag a, r}/2)
                   + kap_up   * (a^dag r a - {a a^dag, r}/2)
    with kap_down = 2 kappa (nbar + 1) and kap_up = 2 kappa nbar.  The
    truncated (a a^dag) diagonal is n+1 below the top level and 0 at it,
    which keeps the trace exactly conserved on the truncated space.
    """
    ns, nf, _, _ = r.shape
    for a in range(ns):
        for n in range(nf):
            for b in range(ns):
                for m in range(nf):
                    rv = r[a, n, b, m]
                    acc = (h0[a, n] - h0[b, m]) * rv
                    v = 0.0j
                    # H couplings on the left index pair (a, n)
                    if a > 0:
                        if n > 0:
                            v += jx_off[a - 1] * f_off[n - 1] * r[a - 1, n - 1, b, m]
                        if n < nf - 1:
                            v += jx_off[a - 1] * f_off[n] * r[a - 1, n + 1, b, m]
                    if a < ns - 1:
                        if n > 0:
                            v += jx_off[a] * f_off[n - 1] * r[a + 1, n - 1, b, m]
                        if n < nf - 1:
                            v += jx_off[a] * f_off[n] * r[a + 1, n + 1, b, m]
                    # minus H couplings on the right index pair (b, m)
                    if b > 0:
                        if m > 0:
                            v -= jx_off[b - 1] * f_off[m - 1] * r[a, n, b - 1, m - 1]
                        if m < nf - 1:
                            v -= jx_off[b - 1] * f_off[m] * r[a, n, b - 1, m + 1]
                    if b < ns - 1:
                        if m > 0:
                            v -= jx_off[b] * f_off[m - 1] * r[a, n, b + 1, m - 1]
                        if m < nf - 1:
                            v -= jx_off[b] * f_off[m] * r[a, n, b + 1, m + 1]
                    deriv = -1j * (acc + g * v)
                    if kap_down != 0.0:
                        dis = -0.5 * (n + m) * rv
                        if n < nf - 1 and m < nf - 1:
                            dis += f_off[n] * f_off[m] * r[a, n + 1, b, m + 1]
                        deriv += kap_down * dis
                    if kap_up != 0.0:
                        dn = n + 1.0 if n < nf - 1 else 0.0
                        dm = m + 1.0 if m < nf - 1 else 0.0
                        dis = -0.5 * (dn + dm) * rv
                        if n > 0 and m > 0:
                            dis += f_off[n - 1] * f_off[m - 1] * r[a, n - 1, b, m - 1]
                        deriv += kap_up * dis
                    out[a, n, b, m] = deriv
    return out


@numba.njit(cache=True, fastmath=True)
def stage_add(out, y, c, k):
    """out = y + c * k (single fused pass)."""
    for i in range(y.size):
        out[i] = y[i] + c * k[i]
    return out


@numba.njit(cache=True, fastmath=True)
def rk4_accumulate(out, y, h, k1, k2, k3, k4):
    """out = y + h/6 (k1 + 2 k2 + 2 k3 + k4)."""
    c = h / 6.0
    for i in range(y.size):
        out[i] = y[i] + c * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
    return out


@numba.njit(cache=True, fastmath=True)
def accept_extrapolate(y_half, y_full):
    """Local Richardson extrapolation, in place: y_half += (y_half - y_full)/15."""
    for i in range(y_half.size):
        y_half[i] += (y_half[i] - y_full[i]) / 15.0
    return y_half


@numba.njit(cache=True, fastmath=True)
def diff_norm(a, b):
    """2-norm of (a - b)."""
    s = 0.0
    for i in range(a.size):
        d = a[i] - b[i]
        s += d.real * d.real + d.imag * d.imag
    return np.sqrt(s)

"""Symmetric-cone primitives for the interior-point solver.

Covers the nonnegative orthant, second-order cones, and PSD cones in
scaled symmetric vectorization (off-diagonal entries times sqrt(2), so
the Euclidean inner product of two svecs equals the trace inner product
of the matrices).  Each cone supplies its Nesterov-Todd scaling, the
Jordan product, and boundary step lengths.
"""

from __future__ import annotations

import functools

import numpy as np
import scipy.linalg as sla

SQRT2 = np.sqrt(2.0)


def svec_dim(side: int) -> int:
    return side * (side + 1) // 2


@functools.lru_cache(maxsize=None)
def svec_indices(side: int):
    """Row/column index arrays of the lower-triangle svec ordering (cached)."""
    rows, cols = np.tril_indices(side)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


@functools.lru_cache(maxsize=None)
def _offdiag_mask(side: int):
    rows, cols = svec_indices(side)
    mask = rows != cols
    mask.setflags(write=False)
    return mask


def svec(mat: np.ndarray) -> np.ndarray:
    side = mat.shape[0]
    rows, cols = svec_indices(side)
    out = mat[rows, cols].astype(float)
    out[_offdiag_mask(side)] *= SQRT2
    return out


def unsvec(vec: np.ndarray, side: int) -> np.ndarray:
    rows, cols = svec_indices(side)
    vals = np.array(vec, dtype=float)
    vals[_offdiag_mask(side)] /= SQRT2
    mat = np.zeros((side, side))
    mat[rows, cols] = vals
    mat[cols, rows] = vals
    return mat


def unsvec_batch(vecs: np.ndarray, side: int) -> np.ndarray:
    """(r, d_svec) -> (r, side, side) symmetric matrices."""
    rows, cols = svec_indices(side)
    vals = np.array(vecs, dtype=float)
    vals[:, _offdiag_mask(side)] /= SQRT2
    mats = np.zeros((vecs.shape[0], side, side))
    mats[:, rows, cols] = vals
    mats[:, cols, rows] = vals
    return mats


def svec_batch(mats: np.ndarray) -> np.ndarray:
    side = mats.shape[-1]
    rows, cols = svec_indices(side)
    out = mats[:, rows, cols].copy()
    out[:, _offdiag_mask(side)] *= SQRT2
    return out


def psd_min_eig(vec: np.ndarray, side: int) -> float:
    return float(np.linalg.eigvalsh(unsvec(vec, side)).min())


class NonnegScaling:
    """NT scaling for a nonnegative-orthant block: w = sqrt(s/z)."""

    def __init__(self, s, z):
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def w_apply(self, u):
        return self.w * u

    def wt_apply(self, u):
        return self.w * u

    def winvt_apply(self, u):
        return u / self.w

    def h_apply_rows(self, rows):
        # rows: (r, dim); W^T W = diag(w^2)
        return rows * self.w ** 2

    def circ(self, u, v):
        return u * v

    def lam_circ_solve(self, d):
        return d / self.lam

    def lam_sq(self):
        return self.lam ** 2

    def identity(self):
        return np.ones_like(self.lam)

    def max_step(self, d):
        neg = d < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(self.lam[neg] / -d[neg]))


def _soc_jmul(u):
    out = -u.copy()
    out[0] = u[0]
    return out


class SocScaling:
    """NT scaling for one second-order cone block."""

    def __init__(self, s, z):
        rs = np.sqrt(s[0] ** 2 - s[1:] @ s[1:])
        rz = np.sqrt(z[0] ** 2 - z[1:] @ z[1:])
        sb, zb = s / rs, z / rz
        gamma = np.sqrt((1.0 + sb @ zb) / 2.0)
        self.wbar = (sb + _soc_jmul(zb)) / (2.0 * gamma)
        self.eta = np.sqrt(rs / rz)
        # W = eta [[w0, w1'], [w1, I + w1 w1'/(1+w0)]];  W'W = eta^2 (2 wbar wbar' - J)
        self.lam = self.w_apply(z)

    def _mul(self, wbar, scale, u):
        w0, w1 = wbar[0], wbar[1:]
        t = w1 @ u[1:]
        out = np.empty_like(u)
        out[0] = w0 * u[0] + t
        out[1:] = u[1:] + (u[0] + t / (1.0 + w0)) * w1
        return scale * out

    def w_apply(self, u):
        return self._mul(self.wbar, self.eta, u)

    wt_apply = w_apply  # symmetric

    def winvt_apply(self, u):
        return self._mul(_soc_jmul(self.wbar), 1.0 / self.eta, u)

    def h_apply_rows(self, rows):
        rows = np.atleast_2d(rows)
        out = self.eta ** 2 * rows
        out[:, 0] = -out[:, 0]
        out += (2.0 * self.eta ** 2) * np.outer(rows @ self.wbar, self.wbar)
        return out

    def h_dense(self, dim):
        j = np.diag([1.0] + [-1.0] * (dim - 1))
        return self.eta ** 2 * (2.0 * np.outer(self.wbar, self.wbar) - j)

    def circ(self, u, v):
        out = np.empty_like(u)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out

    def lam_circ_solve(self, d):
        # solve arrow(lam) u = d
        lam0, lam1 = self.lam[0], self.lam[1:]
        det = lam0 ** 2 - lam1 @ lam1
        u = np.empty_like(d)
        u0 = (lam0 * d[0] - lam1 @ d[1:]) / det
        u[0] = u0
        u[1:] = (d[1:] - u0 * lam1) / lam0
        return u

    def lam_sq(self):
        return self.circ(self.lam, self.lam)

    def identity(self):
        e = np.zeros_like(self.lam)
        e[0] = 1.0
        return e

    def max_step(self, d):
        lam = self.lam
        a = d[0] ** 2 - d[1:] @ d[1:]
        b = 2.0 * (lam[0] * d[0] - lam[1:] @ d[1:])
        c = lam[0] ** 2 - lam[1:] @ lam[1:]
        roots = np.roots([a, b, c]) if abs(a) > 1e-300 else (
            np.array([-c / b]) if abs(b) > 1e-300 else np.array([]))
        alphas = [r.real for r in roots if abs(r.imag) < 1e-9 * (1 + abs(r)) and r.real > 0]
        if d[0] < 0:
            alphas.append(-lam[0] / d[0])
        return float(min(alphas)) if alphas else np.inf


class PsdScaling:
    """NT scaling for a PSD block in svec coordinates.

    W u = svec(R' U R); the scaled point lam is diagonal with the NT
    eigenvalues.  W^T W acts as U -> (R R') U (R R').
    """

    def __init__(self, s, z, side):
        self.side = side
        smat = unsvec(s, side)
        zmat = unsvec(z, side)
        ls = sla.cholesky(smat, lower=True, check_finite=False)
        lz = sla.cholesky(zmat, lower=True, check_finite=False)
        u, sig, vt = sla.svd(lz.T @ ls, check_finite=False)
        sig_isqrt = 1.0 / np.sqrt(sig)
        self.r = ls @ vt.T * sig_isqrt
        self.rinv = (u * sig_isqrt).T @ lz.T
        self.lam_diag = sig
        self.lam = svec(np.diag(sig))
        self.h_mat = self.r @ self.r.T  # W^T W is U -> h_mat U h_mat

    def w_apply(self, u):
        m = unsvec(u, self.side)
        return svec(self.r.T @ m @ self.r)

    def wt_apply(self, u):
        m = unsvec(u, self.side)
        return svec(self.r @ m @ self.r.T)

    def winvt_apply(self, u):
        m = unsvec(u, self.side)
        return svec(self.rinv @ m @ self.rinv.T)

    def h_apply_rows(self, rows):
        mats = unsvec_batch(np.atleast_2d(rows), self.side)
        return svec_batch(self.h_mat @ mats @ self.h_mat)

    def h_dense(self, dim):
        return self.h_apply_rows(np.eye(dim))

    def circ(self, u, v):
        um = unsvec(u, self.side)
        vm = unsvec(v, self.side)
        return svec(0.5 * (um @ vm + vm @ um))

    def lam_circ_solve(self, d):
        dm = unsvec(d, self.side)
        denom = 0.5 * (self.lam_diag[:, None] + self.lam_diag[None, :])
        return svec(dm / denom)

    def lam_sq(self):
        return svec(np.diag(self.lam_diag ** 2))

    def identity(self):
        return svec(np.eye(self.side))

    def max_step(self, d):
        dm = unsvec(d, self.side)
        isq = 1.0 / np.sqrt(self.lam_diag)
        scaled = dm * np.outer(isq, isq)
        mineig = float(np.linalg.eigvalsh(scaled).min())
        return np.inf if mineig >= 0 else 1.0 / -mineig


def make_scaling(kind: str, s, z, side: int | None = None):
    if kind == "nonneg":
        return NonnegScaling(s, z)
    if kind == "soc":
        return SocScaling(s, z)
    if kind == "psd":
        return PsdScaling(s, z, side)
    raise ValueError(f"no scaling for cone kind {kind!r}")

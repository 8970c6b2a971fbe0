"""Primal-dual interior-point method for the canonical cone program.

Solves

    minimize    c'x
    subject to  A x + s = b,   s in K = zero x nonneg x soc x psd

via the homogeneous self-dual embedding with Nesterov-Todd scaling and
Mehrotra predictor-corrector steps.  Infeasibility is certified through
the embedding's tau/kappa split.  The KKT system is reduced by
eliminating PSD blocks whose rows form a (scaled) identity onto a set of
variables - the pattern the program builder emits for covariance-block
membership - which keeps the factored system at the size of the coupling
rows rather than the full variable count.

The solve contract is a seam: any callable with the same signature and a
SolverResult return can be substituted (e.g. an external conic solver
adapter) without touching callers.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ._cones import make_scaling, psd_min_eig, svec_dim
from .conic import ConicProgram

__all__ = ["SolverStatus", "SolverSettings", "SolverResult", "solve"]

STEP_FRACTION = 0.99  # fraction-to-boundary
RUIZ_PASSES = 3
MIN_STEP = 1e-10
_DEBUG_RAISE = False  # re-raise numerical exceptions (debugging aid)


class SolverStatus(enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    ITER_LIMIT = "iter_limit"
    NUMERICAL = "numerical"


@dataclass(frozen=True)
class SolverSettings:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iters: int = 200
    verbose: bool = False

    def __post_init__(self):
        if self.tol_gap <= 0 or self.tol_feas <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolverResult:
    status: SolverStatus
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective: float
    duality_gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    wall_time: float
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class _Block:
    kind: str
    start: int
    size: int  # rows
    side: int | None = None


def _parse_blocks(cones) -> list:
    blocks, start = [], 0
    for kind, size in cones:
        rows = svec_dim(size) if kind == "psd" else size
        if rows > 0:
            blocks.append(_Block(kind, start, rows, size if kind == "psd" else None))
        start += rows
    return blocks


def _barrier_degree(blocks) -> int:
    nu = 0
    for blk in blocks:
        if blk.kind == "nonneg":
            nu += blk.size
        elif blk.kind == "soc":
            nu += 1
        elif blk.kind == "psd":
            nu += blk.side
    return nu


def _ruiz_equilibrate(a: sp.csr_matrix, blocks, passes: int = RUIZ_PASSES):
    """Row/column scaling; SOC and PSD blocks share one row scale each."""
    m, n = a.shape
    dr = np.ones(m)
    dc = np.ones(n)
    work = a.copy().astype(float)
    for _ in range(passes):
        absw = abs(work)
        row_max = absw.max(axis=1).toarray().ravel()
        for blk in blocks:
            if blk.kind in ("soc", "psd"):
                sl = slice(blk.start, blk.start + blk.size)
                row_max[sl] = row_max[sl].max()
        row_max[row_max == 0] = 1.0
        col_max = absw.max(axis=0).toarray().ravel()
        col_max[col_max == 0] = 1.0
        sr = 1.0 / np.sqrt(row_max)
        sc = 1.0 / np.sqrt(col_max)
        work = sp.diags(sr) @ work @ sp.diags(sc)
        dr *= sr
        dc *= sc
    return work.tocsr(), dr, dc


class _KKT:
    """Reduced Newton system  [[0, A'], [A, -H]]  with PSD-slack elimination."""

    def __init__(self, a: sp.csr_matrix, b: np.ndarray, blocks):
        m, n = a.shape
        self.m, self.n = m, n
        a = a.tocsr()
        elim_rows = np.zeros(m, dtype=bool)
        elim_cols = np.zeros(n, dtype=bool)
        self.elim = []  # (block_index, block, cols_in_row_order, gamma)
        nnz_per_row = np.diff(a.indptr)
        for bi, blk in enumerate(blocks):
            if blk.kind != "psd":
                continue
            sl = slice(blk.start, blk.start + blk.size)
            if not np.all(nnz_per_row[sl] == 1) or np.any(b[sl] != 0):
                continue
            cols = a.indices[a.indptr[blk.start]:a.indptr[blk.start + blk.size]]
            gamma = a.data[a.indptr[blk.start]:a.indptr[blk.start + blk.size]]
            if np.unique(cols).size != cols.size or elim_cols[cols].any():
                continue
            self.elim.append((bi, blk, cols, gamma.astype(float)))
            elim_rows[sl] = True
            elim_cols[cols] = True

        self.d_rows = np.flatnonzero(~elim_rows)
        self.f_cols = np.flatnonzero(~elim_cols)
        d = a[self.d_rows].toarray()
        self.d_f = d[:, self.f_cols]
        # columns of D over each eliminated block, pre-divided by gamma
        self.d_jg = [d[:, cols] / g for _, _, cols, g in self.elim]
        self.m_d = self.d_rows.size
        self.n_f = self.f_cols.size
        # map remaining rows back to cone blocks for assembling H_D
        self.d_blocks = []
        for bi, blk in enumerate(blocks):
            if elim_rows[blk.start]:
                continue
            pos = int(np.searchsorted(self.d_rows, blk.start))
            self.d_blocks.append((bi, blk, pos))

    def factor(self, scalings):
        nd, nf = self.m_d, self.n_f
        mat = np.zeros((nd + nf, nd + nf))
        for bi, blk, pos in self.d_blocks:
            sc = scalings[bi]
            if sc is None:  # zero cone
                continue
            if blk.kind == "nonneg":
                idx = np.arange(pos, pos + blk.size)
                mat[idx, idx] = -sc.w ** 2
            else:
                sl = slice(pos, pos + blk.size)
                mat[sl, sl] = -sc.h_dense(blk.size)
        for (bi, _, _, _), djg in zip(self.elim, self.d_jg):
            mat[:nd, :nd] -= scalings[bi].h_apply_rows(djg) @ djg.T
        mat[:nd, nd:] = self.d_f
        mat[nd:, :nd] = self.d_f.T
        self._scalings = scalings
        self._lu = sla.lu_factor(mat, check_finite=False)

    def solve(self, u: np.ndarray, v: np.ndarray):
        """Solve  A'dy = u,  A dx - H dy = v  for (dx, dy)."""
        nd = self.m_d
        rhs_top = v[self.d_rows].copy()
        for (bi, blk, cols, g), djg in zip(self.elim, self.d_jg):
            sc = self._scalings[bi]
            rhs_top -= djg @ v[blk.start:blk.start + blk.size]
            rhs_top -= djg @ sc.h_apply_rows((u[cols] / g)[None, :])[0]
        rhs = np.concatenate([rhs_top, u[self.f_cols]])
        sol = sla.lu_solve(self._lu, rhs, check_finite=False)
        dy_d, dx_f = sol[:nd], sol[nd:]
        dx = np.zeros(self.n)
        dy = np.zeros(self.m)
        dx[self.f_cols] = dx_f
        dy[self.d_rows] = dy_d
        for (bi, blk, cols, g), djg in zip(self.elim, self.d_jg):
            sc = self._scalings[bi]
            dy_e = (u[cols] - g * (djg.T @ dy_d)) / g
            dy[blk.start:blk.start + blk.size] = dy_e
            dx[cols] = (v[blk.start:blk.start + blk.size]
                        + sc.h_apply_rows(dy_e[None, :])[0]) / g
        return dx, dy


def _presolve_empty_rows(a: sp.csr_matrix, b: np.ndarray, cones):
    """Drop empty zero/nonneg rows; detect trivial infeasibility."""
    nnz = np.diff(a.tocsr().indptr)
    keep = np.ones(b.size, dtype=bool)
    start = 0
    new_cones = []
    infeasible = False
    for kind, size in cones:
        rows = svec_dim(size) if kind == "psd" else size
        if kind in ("zero", "nonneg"):
            sl = np.arange(start, start + rows)
            empty = nnz[sl] == 0
            bad = (b[sl][empty] < -1e-12) if kind == "nonneg" else (np.abs(b[sl][empty]) > 1e-12)
            if np.any(bad):
                infeasible = True
            keep[sl[empty]] = False
            new_cones.append((kind, rows - int(empty.sum())))
        else:
            new_cones.append((kind, size))
        start += rows
    if keep.all():
        return a, b, cones, None, infeasible
    return a[keep], b[keep], tuple(new_cones), keep, infeasible


def solve(program: ConicProgram, settings: SolverSettings | None = None) -> SolverResult:
    """Solve a cone program to certified optimality.

    Deterministic: identical program and settings produce the identical
    iterate sequence.  Non-optimal statuses carry the best iterate reached.
    """
    settings = settings or SolverSettings()
    t0 = time.perf_counter()

    a0, b0, cones, keep, triv_infeas = _presolve_empty_rows(
        program.a, program.b, program.cones)
    blocks = _parse_blocks(cones)
    if triv_infeas:
        return SolverResult(SolverStatus.PRIMAL_INFEASIBLE,
                            np.zeros(program.num_vars), np.zeros(program.b.size),
                            np.zeros(program.b.size), np.nan, np.inf, np.inf, np.inf,
                            0, time.perf_counter() - t0)

    a, dr, dc = _ruiz_equilibrate(a0.tocsr(), blocks)
    b = dr * b0
    c = dc * program.c
    m, n = a.shape

    kkt = _KKT(a, b, blocks)
    at = a.T.tocsr()

    nu = _barrier_degree(blocks)
    sym_blocks = [(i, blk) for i, blk in enumerate(blocks) if blk.kind != "zero"]

    def init_vec():
        vec = np.zeros(m)
        for _, blk in sym_blocks:
            sc = make_identity(blk)
            vec[blk.start:blk.start + blk.size] = sc
        return vec

    def make_identity(blk):
        if blk.kind == "nonneg":
            return np.ones(blk.size)
        if blk.kind == "soc":
            e = np.zeros(blk.size)
            e[0] = 1.0
            return e
        e = np.zeros(blk.size)
        rows = np.tril_indices(blk.side)
        diag = rows[0] == rows[1]
        e[np.flatnonzero(diag)] = 1.0
        return e

    x = np.zeros(n)
    y = init_vec()
    s = init_vec()
    tau, kappa = 1.0, 1.0

    bnorm = max(1.0, np.linalg.norm(b))
    cnorm = max(1.0, np.linalg.norm(c))
    history = []
    status = SolverStatus.ITER_LIMIT
    iters = 0

    def finalize(stat, it):
        x_out = dc * (x / tau) if tau > 1e-300 else dc * x
        s_sc = s / tau if tau > 1e-300 else s
        y_sc = y / tau if tau > 1e-300 else y
        s_full = s_sc / dr
        y_full = y_sc * dr
        if keep is not None:
            s_pad = np.zeros(program.b.size)
            y_pad = np.zeros(program.b.size)
            s_pad[keep] = s_full
            y_pad[keep] = y_full
            s_full, y_full = s_pad, y_pad
        obj = float(program.c @ x_out)
        return SolverResult(stat, x_out, y_full, s_full, obj,
                            relgap, pres, dres, it,
                            time.perf_counter() - t0, history)

    pres = dres = relgap = np.inf
    for it in range(settings.max_iters):
        iters = it
        res_x = at @ y + c * tau
        res_y = a @ x + s - b * tau
        res_t = kappa + c @ x + b @ y

        pcost = c @ x / tau
        dcost = -(b @ y) / tau
        gap = (s @ y) / tau ** 2
        relgap = gap / max(1.0, abs(pcost))
        pres = np.linalg.norm(res_y) / (tau * bnorm)
        dres = np.linalg.norm(res_x) / (tau * cnorm)
        history.append({"iter": it, "pcost": pcost, "dcost": dcost, "gap": gap,
                        "pres": pres, "dres": dres, "tau": tau, "kappa": kappa})
        if settings.verbose:
            print(f"  it {it:3d}  pcost {pcost:+.6e} dcost {dcost:+.6e} "
                  f"gap {gap:.2e} pres {pres:.2e} dres {dres:.2e}")

        if pres <= settings.tol_feas and dres <= settings.tol_feas and \
                (gap <= settings.tol_gap or relgap <= settings.tol_gap):
            status = SolverStatus.OPTIMAL
            return finalize(status, it)

        by = b @ y
        cx = c @ x
        if by < 0 and np.linalg.norm(at @ y) / (-by) <= settings.tol_feas * cnorm:
            y[:] = y / (-by)
            s[:] = s / (-by)
            return finalize(SolverStatus.PRIMAL_INFEASIBLE, it)
        if cx < 0 and np.linalg.norm(a @ x + s) / (-cx) <= settings.tol_feas * bnorm:
            x[:] = x / (-cx)
            s[:] = s / (-cx)
            return finalize(SolverStatus.DUAL_INFEASIBLE, it)

        mu = (s @ y + tau * kappa) / (nu + 1)

        try:
            scalings = [None] * len(blocks)
            for bi, blk in sym_blocks:
                sl = slice(blk.start, blk.start + blk.size)
                scalings[bi] = make_scaling(blk.kind, s[sl], y[sl], blk.side)
            kkt.factor(scalings)
            dx1, dy1 = kkt.solve(-c, b)
        except (np.linalg.LinAlgError, ValueError, sla.LinAlgError):
            if _DEBUG_RAISE:
                raise
            return finalize(SolverStatus.NUMERICAL, it)

        denom = c @ dx1 + b @ dy1 - kappa / tau

        def newton(eta, ds_scaled_rhs, dkt):
            """One Newton solve; ds_scaled_rhs holds the scaled complementarity rhs."""
            rx = -eta * res_x
            ry = -eta * res_y
            rt = -eta * res_t
            ry_adj = ry.copy()
            vg = np.zeros(m)
            for bi, blk in sym_blocks:
                sl = slice(blk.start, blk.start + blk.size)
                sc = scalings[bi]
                g = sc.lam_circ_solve(ds_scaled_rhs[sl])
                vg[sl] = g
                ry_adj[sl] -= sc.wt_apply(g)
            dx2, dy2 = kkt.solve(rx, ry_adj)
            dtau = (rt - dkt / tau - c @ dx2 - b @ dy2) / denom
            dx = dx2 + dtau * dx1
            dy = dy2 + dtau * dy1
            dkappa = (dkt - kappa * dtau) / tau
            ds = np.zeros(m)
            ds_scaled = np.zeros(m)
            dy_scaled = np.zeros(m)
            for bi, blk in sym_blocks:
                sl = slice(blk.start, blk.start + blk.size)
                sc = scalings[bi]
                wdy = sc.w_apply(dy[sl])
                dsg = vg[sl] - wdy
                ds[sl] = sc.wt_apply(dsg)
                ds_scaled[sl] = dsg
                dy_scaled[sl] = wdy
            return dx, dy, ds, dtau, dkappa, ds_scaled, dy_scaled

        def max_step(ds_scaled, dy_scaled, dtau, dkappa):
            alpha = np.inf
            for bi, blk in sym_blocks:
                sl = slice(blk.start, blk.start + blk.size)
                sc = scalings[bi]
                alpha = min(alpha, sc.max_step(ds_scaled[sl]), sc.max_step(dy_scaled[sl]))
            if dtau < 0:
                alpha = min(alpha, tau / -dtau)
            if dkappa < 0:
                alpha = min(alpha, kappa / -dkappa)
            return alpha

        # predictor
        ds_rhs = np.zeros(m)
        for bi, blk in sym_blocks:
            sl = slice(blk.start, blk.start + blk.size)
            ds_rhs[sl] = -scalings[bi].lam_sq()
        try:
            aff = newton(1.0, ds_rhs, -tau * kappa)
        except (np.linalg.LinAlgError, ValueError):
            if _DEBUG_RAISE:
                raise
            return finalize(SolverStatus.NUMERICAL, it)
        dxa, dya, dsa, dtaua, dkappaa, dsga, dyga = aff
        alpha_aff = min(1.0, max_step(dsga, dyga, dtaua, dkappaa))
        mu_aff = ((s + alpha_aff * dsa) @ (y + alpha_aff * dya)
                  + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)) / (nu + 1)
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # corrector
        ds_rhs = np.zeros(m)
        for bi, blk in sym_blocks:
            sl = slice(blk.start, blk.start + blk.size)
            sc = scalings[bi]
            corr = sc.circ(dsga[sl], dyga[sl])
            ds_rhs[sl] = sigma * mu * sc.identity() - sc.lam_sq() - corr
        dkt = sigma * mu - tau * kappa - dtaua * dkappaa
        try:
            comb = newton(1.0 - sigma, ds_rhs, dkt)
        except (np.linalg.LinAlgError, ValueError):
            if _DEBUG_RAISE:
                raise
            return finalize(SolverStatus.NUMERICAL, it)
        dx, dy, ds, dtau, dkappa, dsg, dyg = comb
        alpha = min(1.0, STEP_FRACTION * max_step(dsg, dyg, dtau, dkappa))
        if alpha < MIN_STEP:
            return finalize(SolverStatus.NUMERICAL, it)

        x += alpha * dx
        y += alpha * dy
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

    return finalize(SolverStatus.ITER_LIMIT, iters)


def cone_residuals(program: ConicProgram, s: np.ndarray) -> float:
    """Worst cone-membership violation of a slack vector (0 means inside)."""
    worst = 0.0
    start = 0
    for kind, size in program.cones:
        rows = svec_dim(size) if kind == "psd" else size
        seg = s[start:start + rows]
        if kind == "zero":
            worst = max(worst, float(np.max(np.abs(seg), initial=0.0)))
        elif kind == "nonneg":
            worst = max(worst, float(np.max(-seg, initial=0.0)))
        elif kind == "soc":
            worst = max(worst, float(np.linalg.norm(seg[1:]) - seg[0]))
        else:
            worst = max(worst, -psd_min_eig(seg, size))
        start += rows
    return worst

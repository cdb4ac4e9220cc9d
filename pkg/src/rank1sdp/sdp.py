"""Dense primal-dual interior-point solver for standard-form SDPs.

Primal:  max <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
Dual:    min b^T mu   s.t.  S = sum_i mu_i A_i - C >= 0

Constraint matrices are symmetric and stored as triplets over the full
(both triangles) matrix, which keeps the Schur complement assembly cheap for
the very sparse entry-equality rows produced by moment relaxations.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from .moment import MomentSdp

log = logging.getLogger(__name__)

__all__ = [
    "StdSdp",
    "SdpSolution",
    "SolverOptions",
    "BackMap",
    "SolverError",
    "to_std",
    "presolve",
    "solve",
    "certify_bounds",
]


class SolverError(RuntimeError):
    """Raised when a bound is requested from a non-optimal solve."""


@dataclass(frozen=True, eq=False)
class StdSdp:
    """``max <C,X> s.t. <A_i,X> = b_i, X psd`` with triplet-encoded ``A_i``.

    ``con[k], row[k], col[k], val[k]`` says ``A_con[k][row, col] = val``;
    both ``(p, q)`` and ``(q, p)`` are listed for off-diagonal entries.
    """

    C: np.ndarray
    con: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray
    b: np.ndarray

    @property
    def N(self) -> int:
        return self.C.shape[0]

    @property
    def M(self) -> int:
        return len(self.b)

    def apply(self, W: np.ndarray) -> np.ndarray:
        """``[<A_i, W>]_i``; for non-symmetric ``W`` this is ``<A_i, sym(W)>``."""
        return np.bincount(self.con, self.val * W[self.row, self.col], minlength=self.M)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """``sum_i y_i A_i`` as a dense matrix."""
        out = np.zeros((self.N, self.N))
        np.add.at(out, (self.row, self.col), self.val * y[self.con])
        return out

    def constraint(self, i: int) -> np.ndarray:
        out = np.zeros((self.N, self.N))
        sel = self.con == i
        np.add.at(out, (self.row[sel], self.col[sel]), self.val[sel])
        return out

    def subset(self, keep: np.ndarray) -> "StdSdp":
        keep = np.asarray(keep)
        remap = -np.ones(self.M, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        sel = remap[self.con] >= 0
        return StdSdp(self.C, remap[self.con[sel]], self.row[sel], self.col[sel], self.val[sel], self.b[keep])


@dataclass(frozen=True, eq=False)
class BackMap:
    """Maps a pencil-sized matrix back to the relaxation variables."""

    position_map: np.ndarray
    num_vars: int

    def variables(self, X: np.ndarray) -> np.ndarray:
        """Average every matrix entry carrying the same variable."""
        pm = self.position_map.ravel()
        counts = np.bincount(pm, minlength=self.num_vars)
        sums = np.bincount(pm, np.asarray(X).ravel(), minlength=self.num_vars)
        return sums / np.maximum(counts, 1)

    def pencil(self, X: np.ndarray) -> np.ndarray:
        return self.variables(X)[self.position_map]


@dataclass
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.98
    presolve: bool = True


@dataclass
class SdpSolution:
    X: np.ndarray
    dual_vars: np.ndarray
    S: np.ndarray
    p_obj: float
    d_obj: float
    gap: float
    status: str
    iterations: int
    primal_infeas: float = np.nan
    dual_infeas: float = np.nan
    seconds: float = 0.0
    dropped: int = 0
    history: list = field(default_factory=list, repr=False)


def _sym_triplets(p: np.ndarray, q: np.ndarray, w: np.ndarray):
    """Expand upper-triangle weights to both triangles (halving off-diagonals)."""
    diag = p == q
    rows = np.concatenate([p[diag], p[~diag], q[~diag]])
    cols = np.concatenate([q[diag], q[~diag], p[~diag]])
    vals = np.concatenate([w[diag], w[~diag] / 2, w[~diag] / 2])
    return rows, cols, vals, np.concatenate([np.flatnonzero(diag), np.flatnonzero(~diag), np.flatnonzero(~diag)])


def to_std(p: MomentSdp) -> tuple[StdSdp, BackMap]:
    """Rewrite a moment relaxation with the pencil itself as the matrix variable.

    Constraints, in order: chained equalities between upper-triangle
    positions that carry the same variable, then the normalization row.
    The normalization weight of a variable goes to its first diagonal
    position when it has one; objective weights are spread evenly over all
    positions of the variable. ``min`` relaxations are negated.
    """
    pm = p.position_map
    N = pm.shape[0]
    nv = p.num_vars
    iu, ju = np.triu_indices(N)
    var = pm[iu, ju]
    order = np.argsort(var, kind="stable")
    iu, ju, var = iu[order], ju[order], var[order]
    chain = np.flatnonzero(var[1:] == var[:-1])

    # equality e: X[pos chain[e]] - X[pos chain[e]+1] = 0
    ne = len(chain)
    p1, q1 = iu[chain], ju[chain]
    p2, q2 = iu[chain + 1], ju[chain + 1]
    r1, c1, v1, s1 = _sym_triplets(p1, q1, np.ones(ne))
    r2, c2, v2, s2 = _sym_triplets(p2, q2, -np.ones(ne))

    # normalization row
    diag_var = pm[np.arange(N), np.arange(N)]
    first_diag = np.full(nv, -1, dtype=np.int64)
    for k in range(N - 1, -1, -1):
        first_diag[diag_var[k]] = k
    counts_full = np.bincount(pm.ravel(), minlength=nv)
    h = p.normalization
    nz = np.flatnonzero(h)
    nrm_r, nrm_c, nrm_v = [], [], []
    for v in nz:
        if first_diag[v] >= 0:
            nrm_r.append([first_diag[v]])
            nrm_c.append([first_diag[v]])
            nrm_v.append([h[v]])
        else:
            rr, cc = np.nonzero(pm == v)
            nrm_r.append(rr)
            nrm_c.append(cc)
            nrm_v.append(np.full(len(rr), h[v] / len(rr)))
    nrm_r = np.concatenate(nrm_r) if nrm_r else np.zeros(0, dtype=np.int64)
    nrm_c = np.concatenate(nrm_c) if nrm_c else np.zeros(0, dtype=np.int64)
    nrm_v = np.concatenate(nrm_v) if nrm_v else np.zeros(0)

    con = np.concatenate([s1, s2, np.full(len(nrm_r), ne)]).astype(np.int64)
    row = np.concatenate([r1, r2, nrm_r]).astype(np.int64)
    col = np.concatenate([c1, c2, nrm_c]).astype(np.int64)
    val = np.concatenate([v1, v2, nrm_v])
    b = np.zeros(ne + 1)
    b[ne] = 1.0

    sign = -1.0 if p.sense == "min" else 1.0
    C = sign * (p.objective / np.maximum(counts_full, 1))[pm]
    return StdSdp(C, con, row, col, val, b), BackMap(pm, nv)


def presolve(P: StdSdp, tol: float = 1e-10, max_dense: int = 30_000_000) -> tuple[StdSdp, int]:
    """Drop duplicate and linearly dependent constraint rows.

    Dependence is detected by pivoted QR on the (dense) constraint matrix,
    skipped when that matrix would exceed ``max_dense`` entries.
    """
    N, M = P.N, P.M
    iu = np.triu_indices(N)
    pos = -np.ones((N, N), dtype=np.int64)
    pos[iu] = np.arange(len(iu[0]))
    upper = P.row <= P.col
    A = sparse.csr_matrix(
        (P.val[upper] * np.where(P.row[upper] == P.col[upper], 1.0, 2.0),
         (P.con[upper], pos[P.row[upper], P.col[upper]])),
        shape=(M, len(iu[0])),
    )
    Ab = sparse.hstack([A, sparse.csr_matrix(P.b[:, None])]).tocsr()
    if M * Ab.shape[1] > max_dense:
        return P, 0
    dense = Ab.toarray()
    _, R, piv = sla.qr(dense.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(d[0] if len(d) else 1.0, 1.0)))
    if rank == M:
        return P, 0
    keep = np.sort(piv[:rank])
    dropped = M - rank
    log.warning("presolve dropped %d dependent constraint rows", dropped)
    return P.subset(keep), dropped


def _schur(P: StdSdp, X: np.ndarray, Zi: np.ndarray, budget: int = 1 << 24) -> np.ndarray:
    """``H_ij = tr(A_i X A_j Zi)``.

    Row ``i`` is ``<A_j, W_i>`` over ``j`` with ``W_i = sum_k a_k X[:, c_k] Zi[r_k, :]``
    summed over the triplets of ``A_i``; rows are built in blocks of at most
    ``budget`` dense entries.
    """
    N, M = P.N, P.M
    order = np.argsort(P.con, kind="stable")
    con, row, col, val = P.con[order], P.row[order], P.col[order], P.val[order]
    starts = np.searchsorted(con, np.arange(M + 1))
    flat = sparse.csc_matrix((P.val, (P.row * N + P.col, P.con)), shape=(N * N, M))
    per = max(1, budget // (N * N))
    H = np.empty((M, M))
    i0 = 0
    while i0 < M:
        i1 = max(i0 + 1, int(np.searchsorted(starts, starts[i0] + per, side="right")) - 1)
        i1 = min(i1, M)
        k0, k1 = starts[i0], starts[i1]
        outer = (X[:, col[k0:k1]].T * val[k0:k1, None])[:, :, None] * Zi[row[k0:k1]][:, None, :]
        group = sparse.csr_matrix(
            (np.ones(k1 - k0), (con[k0:k1] - i0, np.arange(k1 - k0))), shape=(i1 - i0, k1 - k0)
        )
        W = group @ outer.reshape(k1 - k0, N * N)
        H[i0:i1] = (flat.T @ W.T).T
        i0 = i1
    return 0.5 * (H + H.T)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest ``a`` with ``X + a dX`` psd (``X`` positive definite)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    lam = np.linalg.eigvalsh(Li @ dX @ Li.T).min()
    return np.inf if lam >= 0 else -1.0 / lam


def _solve_psd(H: np.ndarray, rhs: np.ndarray, factor):
    if factor is not None:
        return sla.cho_solve(factor, rhs)
    return sla.lstsq(H, rhs, lapack_driver="gelsy")[0]


def _factor(H: np.ndarray):
    try:
        return sla.cho_factor(H, lower=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        pass
    reg = 1e-14 * max(1.0, np.abs(np.diag(H)).max())
    try:
        return sla.cho_factor(H + reg * np.eye(len(H)), lower=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return None


def solve(P: StdSdp, opts: SolverOptions | None = None) -> SdpSolution:
    """Solve with the HKM direction and Mehrotra predictor-corrector steps."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    dropped = 0
    if opts.presolve and P.M:
        P, dropped = presolve(P)

    N = P.N
    cnorm = np.linalg.norm(P.C)
    cscale = cnorm if cnorm > 0 else 1.0
    # internal problem: min <Cm, X>, dual max b^T y with A^T y + Z = Cm
    Cm = -P.C / cscale
    b = P.b
    bnorm = np.linalg.norm(b)

    tau = 1.0 + (np.abs(b).max() if len(b) else 0.0) + np.linalg.norm(Cm)
    X = tau * np.eye(N)
    Z = tau * np.eye(N)
    y = np.zeros(P.M)

    status = "max-iters"
    history = []
    it = 0
    gap = pinf = dinf = np.inf
    for it in range(opts.max_iters + 1):
        Rp = b - P.apply(X)
        Rd = Cm - Z - P.adjoint(y)
        pobj = float(np.sum(Cm * X))
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        pinf = np.linalg.norm(Rp) / (1.0 + bnorm)
        dinf = np.linalg.norm(Rd) / (1.0 + np.linalg.norm(Cm))
        history.append((it, pobj, dobj, gap, pinf, dinf))
        if gap <= opts.gap_tol and pinf <= opts.feas_tol and dinf <= opts.feas_tol:
            status = "optimal"
            break
        if it == opts.max_iters:
            break

        mu = float(np.sum(X * Z)) / N
        try:
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break
        Lzi = sla.solve_triangular(Lz, np.eye(N), lower=True)
        Zi = Lzi.T @ Lzi
        H = _schur(P, X, Zi)
        factor = _factor(H)
        XRdZi = P.apply(X @ Rd @ Zi)

        def direction(Rc):
            rhs = Rp - P.apply(Rc) + XRdZi
            dy = _solve_psd(H, rhs, factor)
            dZ = Rd - P.adjoint(dy)
            dX = Rc - X @ dZ @ Zi
            dX = 0.5 * (dX + dX.T)
            return dX, dy, dZ

        # predictor
        dX, dy, dZ = direction(-X)
        ap = min(1.0, _max_step(X, dX))
        ad = min(1.0, _max_step(Z, dZ))
        mu_aff = float(np.sum((X + ap * dX) * (Z + ad * dZ))) / N
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        corr = dX @ dZ @ Zi
        Rc = sigma * mu * Zi - X - 0.5 * (corr + corr.T)
        dX, dy, dZ = direction(Rc)
        if not (np.all(np.isfinite(dX)) and np.all(np.isfinite(dy))):
            status = "numerical-failure"
            break
        ap = min(1.0, opts.step_fraction * _max_step(X, dX))
        ad = min(1.0, opts.step_fraction * _max_step(Z, dZ))
        if ap < 1e-12 and ad < 1e-12:
            status = "numerical-failure"
            break
        X = X + ap * dX
        X = 0.5 * (X + X.T)
        y = y + ad * dy
        Z = Z + ad * dZ
        Z = 0.5 * (Z + Z.T)

    # report in the caller's (max) convention and scale
    X_out = X
    mu_out = -y * cscale
    S_out = Z * cscale
    p_obj = float(np.sum(P.C * X_out))
    d_obj = float(b @ mu_out)
    sol = SdpSolution(
        X=X_out,
        dual_vars=mu_out,
        S=S_out,
        p_obj=p_obj,
        d_obj=d_obj,
        gap=abs(p_obj - d_obj) / (1.0 + abs(p_obj)),
        status=status,
        iterations=it,
        primal_infeas=float(pinf),
        dual_infeas=float(dinf),
        seconds=time.perf_counter() - t0,
        dropped=dropped,
        history=history,
    )
    log.debug("sdp N=%d M=%d status=%s iters=%d gap=%.2e", N, P.M, status, it, sol.gap)
    return sol


def certify_bounds(sol: SdpSolution, p: MomentSdp) -> float:
    """Turn a solved relaxation into a valid bound on ``|objective|``.

    Symmetric even kinds give ``|f_sdp|``; a lifted odd kind gives
    ``c(d) * f~_sdp``; the nonsymmetric kind gives ``sqrt(|F_sdp|)``.
    """
    if sol.status != "optimal":
        raise SolverError(f"no certified bound from a {sol.status} solve")
    if not np.any(p.objective):
        return 0.0
    value = relaxation_value(sol, p)
    if p.kind == "nonsym":
        return float(np.sqrt(abs(value)))
    if p.lifted is not None:
        return float(p.lifted.scale * max(value, 0.0))
    return float(abs(value))


def relaxation_value(sol: SdpSolution, p: MomentSdp) -> float:
    """Optimal value of the relaxation in its own sense (``f_max^sdp`` or ``f_min^sdp``).

    The dual objective is the conservative side; both objectives agree to
    the solver gap on an optimal solve.
    """
    hi = max(sol.p_obj, sol.d_obj)
    return -hi if p.sense == "min" else hi

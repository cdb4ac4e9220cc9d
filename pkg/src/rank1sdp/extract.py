"""Recover candidate optimizers from solved moment relaxations.

A relaxation is certified tight when the reconstructed pencil has numeric
rank one; the extracted point then attains the relaxation bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .moment import basis, nonsym_position_map, pair_code, sym_position_map
from .tensor import GenTensor, contract_except

__all__ = [
    "RANK_RATIO",
    "ExtractResult",
    "numeric_rank",
    "extract_sym",
    "unlift_odd",
    "extract_nonsym",
    "last_mode_factor",
]

RANK_RATIO = 1e-6
# relative width within which two diagonal moments count as tied
TIE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class ExtractResult:
    """Candidate unit vector(s) and the rank test of the pencil they came from.

    ``zero`` is set when every relevant moment vanishes, which only happens
    for the zero tensor; ``vectors`` is then empty.
    """

    vectors: tuple[np.ndarray, ...]
    pencil_rank: int
    singular_values: np.ndarray
    zero: bool = False

    @property
    def certified(self) -> bool:
        return self.pencil_rank == 1 and not self.zero


def numeric_rank(a: np.ndarray, ratio: float = RANK_RATIO) -> tuple[int, np.ndarray]:
    """Smallest ``r`` with ``s[r] / s[r-1] < ratio`` over descending singular values.

    Returns the full size when no such gap exists and 0 for a zero matrix.
    """
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if not len(s) or s[0] == 0.0:
        return 0, s
    for r in range(1, len(s)):
        if s[r] < ratio * s[r - 1]:
            return r, s
    return len(s), s


def _argmax_tied_last(values: np.ndarray) -> int:
    """Index of the maximum; among near-ties the largest index wins."""
    top = values.max()
    tied = np.flatnonzero(values >= top - TIE_RTOL * max(abs(top), 1e-300))
    return int(tied[-1])


def _unit(v: np.ndarray, scale: float) -> np.ndarray | None:
    nv = np.linalg.norm(v)
    if nv <= 1e-14 * max(scale, 1e-300) or nv == 0.0:
        return None
    return v / nv


def extract_sym(y: np.ndarray, n: int, d: int) -> ExtractResult:
    """Read a candidate maximizer off the moments of a symmetric relaxation.

    ``y`` is indexed like ``basis(n, 2d)``. The pivot ``s`` is the largest
    pure moment ``y[2d e_s]`` and ``u_i = y[(2d-1) e_s + e_i]``.
    """
    y = np.asarray(y, dtype=float)
    where = basis(n, 2 * d).index()
    pure = np.array([y[where[tuple(2 * d * np.eye(n, dtype=np.int64)[i])]] for i in range(n)])
    rank, sv = numeric_rank(y[sym_position_map(n, d)])
    s = _argmax_tied_last(pure)
    col = np.zeros(n, dtype=np.int64)
    col[s] = 2 * d - 1
    u = np.empty(n)
    for i in range(n):
        e = col.copy()
        e[i] += 1
        u[i] = y[where[tuple(e)]]
    v = _unit(u, np.abs(y).max(initial=0.0))
    if v is None:
        return ExtractResult((), rank, sv, zero=True)
    return ExtractResult((v,), rank, sv)


def unlift_odd(v: np.ndarray, tol: float = 1e-12) -> np.ndarray | None:
    """Map a maximizer of ``f(x) * t`` back to a maximizer of the odd form ``f``.

    With ``v = (w, t)`` the result is ``sign(t) * w / sqrt(1 - t^2)``.
    Returns ``None`` when ``w`` or ``t`` vanishes, meaning the zero tensor
    is the best rank-1 approximation.
    """
    v = np.asarray(v, dtype=float)
    w, t = v[:-1], float(v[-1])
    if abs(t) <= tol or np.linalg.norm(w) <= tol:
        return None
    u = np.sign(t) * w / np.sqrt(1.0 - t * t)
    return u / np.linalg.norm(u) + 0.0


def extract_nonsym(w: np.ndarray, dims: Sequence[int]) -> ExtractResult:
    """Read candidate factors off the moments of the squared multilinear relaxation.

    The pivot ``l`` maximizes the diagonal ``w[l, l]``; factor ``j`` takes
    ``v_k = w[l + (k - l_j) e_j, l]``.
    """
    dims = tuple(int(n) for n in dims)
    w = np.asarray(w, dtype=float)
    pm = nonsym_position_map(dims)
    rank, sv = numeric_rank(w[pm])
    diag = w[np.diag(pm)]
    ell = np.unravel_index(_argmax_tied_last(diag), dims)
    npairs = tuple(n * (n + 1) // 2 for n in dims)
    base = [pair_code(n, l, l) for n, l in zip(dims, ell)]
    scale = np.abs(w).max(initial=0.0)
    vectors = []
    for j, n in enumerate(dims):
        codes = [list(base) for _ in range(n)]
        for k in range(n):
            codes[k][j] = pair_code(n, k, ell[j])
        idx = np.ravel_multi_index(np.array(codes).T, npairs)
        v = _unit(w[idx], scale)
        if v is None:
            return ExtractResult((), rank, sv, zero=True)
        vectors.append(v)
    return ExtractResult(tuple(vectors), rank, sv)


def last_mode_factor(t: GenTensor, vs: Sequence[np.ndarray]) -> np.ndarray | None:
    """Unit vector along ``F(v1, ..., v_{m-1}, :)``; ``None`` if it vanishes."""
    xs = list(vs) + [None]
    g = contract_except(t, xs, t.m - 1)
    return _unit(g, max(np.abs(t.data).max(initial=0.0), 1e-300))

"""Symmetric and general real tensors, their forms, norms and residuals.

Symmetric tensors are stored once per orbit: each row of ``indices`` is a
sorted multi-index (0-based) and ``values`` holds the common value of every
permuted position. Entries that are not stored are zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "SymTensor",
    "GenTensor",
    "Rank1Tensor",
    "norm",
    "eval_form",
    "grad_form",
    "eval_multilinear",
    "contract_except",
    "residual",
    "mode_unfold",
    "mode_refold",
    "sorted_indices",
    "orbit_size",
]


def sorted_indices(n: int, m: int) -> np.ndarray:
    """All nondecreasing multi-indices of length ``m`` over ``range(n)``."""
    rows = list(combinations_with_replacement(range(n), m))
    if not rows:
        return np.zeros((0, m), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), m)


def orbit_size(indices: np.ndarray) -> np.ndarray:
    """Number of distinct permutations of each sorted multi-index row."""
    indices = np.atleast_2d(indices)
    k, m = indices.shape
    out = np.full(k, float(factorial(m)))
    if m == 0:
        return out
    # runs of equal entries in a sorted row
    run = np.ones(k, dtype=np.int64)
    for j in range(1, m):
        same = indices[:, j] == indices[:, j - 1]
        run = np.where(same, run + 1, 1)
        out /= np.where(same, run, 1)
    return out


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Symmetric tensor of order ``m`` in dimension ``n``."""

    n: int
    m: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.m)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values disagree in length")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.n:
                raise ValueError("index out of range")
            if np.any(np.diff(idx, axis=1) < 0):
                raise ValueError("symmetric indices must be sorted")
            if len(np.unique(idx, axis=0)) != len(idx):
                raise ValueError("duplicate symmetric index")
        object.__setattr__(self, "indices", _freeze(idx))
        object.__setattr__(self, "values", _freeze(val))

    @classmethod
    def from_entries(cls, n: int, m: int, entries: Mapping[Sequence[int], float]) -> "SymTensor":
        """Build from ``{(i1, ..., im): value}`` with 1-based indices in any order.

        Keys are sorted before storage, so ``(2, 1, 1)`` and ``(1, 1, 2)``
        name the same orbit; giving both is an error.
        """
        keys = [tuple(sorted(int(i) - 1 for i in key)) for key in entries]
        for key in keys:
            if len(key) != m:
                raise ValueError(f"index {tuple(i + 1 for i in key)} has wrong order")
        idx = np.asarray(keys, dtype=np.int64).reshape(len(keys), m)
        return cls(n, m, idx, np.fromiter(entries.values(), float, len(keys)))

    @classmethod
    def from_function(cls, n: int, m: int, func) -> "SymTensor":
        """Fill every orbit with ``func(idx)`` where ``idx`` is a 1-based sorted tuple."""
        idx = sorted_indices(n, m)
        vals = np.array([func(tuple(int(i) + 1 for i in row)) for row in idx], dtype=float)
        return cls(n, m, idx, vals)

    @classmethod
    def from_dense(cls, array: np.ndarray, atol: float = 1e-12) -> "SymTensor":
        array = np.asarray(array, dtype=float)
        m = array.ndim
        n = array.shape[0]
        if any(s != n for s in array.shape):
            raise ValueError("symmetric tensor needs equal dimensions")
        idx = sorted_indices(n, m)
        vals = array[tuple(idx.T)] if m else array.reshape(1)
        t = cls(n, m, idx, vals)
        if not np.allclose(t.to_dense(), array, atol=atol, rtol=0):
            raise ValueError("array is not symmetric")
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.m

    def multiplicity(self) -> np.ndarray:
        return orbit_size(self.indices)

    def coefficients(self) -> np.ndarray:
        """Monomial coefficients of the form: value times orbit size."""
        return self.values * self.multiplicity()

    def exponents(self) -> np.ndarray:
        """Exponent vector of each stored orbit, shape ``(K, n)``."""
        k = len(self.indices)
        exps = np.zeros((k, self.n), dtype=np.int64)
        for j in range(self.m):
            np.add.at(exps, (np.arange(k), self.indices[:, j]), 1)
        return exps

    def entry(self, *index: int) -> float:
        """Value at a 1-based position, in any permutation."""
        key = np.sort(np.asarray(index, dtype=np.int64) - 1)
        hit = np.nonzero((self.indices == key).all(axis=1))[0]
        return float(self.values[hit[0]]) if len(hit) else 0.0

    def to_dense(self) -> np.ndarray:
        from itertools import permutations

        out = np.zeros(self.shape)
        if not len(self.values):
            return out
        for perm in permutations(range(self.m)):
            out[tuple(self.indices[:, perm].T)] = self.values
        return out

    def scaled(self, c: float) -> "SymTensor":
        return SymTensor(self.n, self.m, self.indices, c * self.values)


@dataclass(frozen=True, eq=False)
class GenTensor:
    """Dense tensor over dims ``(n1, ..., nm)`` in row-major layout."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim < 1 or any(s < 1 for s in data.shape):
            raise ValueError("tensor dims must be positive")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def m(self) -> int:
        return self.data.ndim

    def to_dense(self) -> np.ndarray:
        return np.array(self.data)

    def transpose(self, perm: Sequence[int]) -> "GenTensor":
        return GenTensor(np.transpose(self.data, perm))

    def scaled(self, c: float) -> "GenTensor":
        return GenTensor(c * self.data)


@dataclass(frozen=True, eq=False)
class Rank1Tensor:
    """``lam * factors[0] (x) ... (x) factors[-1]`` with unit factors."""

    lam: float
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        facs = tuple(_freeze(np.asarray(f, dtype=float).reshape(-1)) for f in self.factors)
        for f in facs:
            if abs(np.linalg.norm(f) - 1.0) > 1e-12:
                raise ValueError("rank-1 factors must have unit norm")
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def symmetric(cls, lam: float, u: np.ndarray, m: int) -> "Rank1Tensor":
        return cls(lam, (u,) * m)

    @property
    def is_symmetric(self) -> bool:
        return all(np.array_equal(f, self.factors[0]) for f in self.factors)

    def to_dense(self) -> np.ndarray:
        out = np.array(self.lam)
        for f in self.factors:
            out = np.multiply.outer(out, f)
        return out

    def norm(self) -> float:
        return abs(self.lam)


def norm(t: SymTensor | GenTensor) -> float:
    """Frobenius norm over all ``n1*...*nm`` positions."""
    if isinstance(t, SymTensor):
        return float(np.sqrt(np.sum(t.multiplicity() * t.values**2)))
    return float(np.linalg.norm(t.data.ravel()))


def eval_form(t: SymTensor, x) -> float:
    """``f(x) = sum over all m-tuples of F[i1..im] x[i1]...x[im]``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (t.n,):
        raise ValueError(f"expected vector of length {t.n}, got shape {x.shape}")
    if not len(t.values):
        return 0.0
    return float(np.prod(x[t.indices], axis=1) @ t.coefficients())


def grad_form(t: SymTensor, x) -> np.ndarray:
    """Euclidean gradient of ``f`` at ``x`` (equals ``m * F x^(m-1)``)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (t.n,):
        raise ValueError(f"expected vector of length {t.n}, got shape {x.shape}")
    g = np.zeros(t.n)
    if not len(t.values):
        return g
    coef = t.coefficients()
    xs = x[t.indices]
    for j in range(t.m):
        others = np.prod(np.delete(xs, j, axis=1), axis=1)
        g += np.bincount(t.indices[:, j], coef * others, minlength=t.n)
    return g


def _check_args(t: GenTensor, xs) -> list[np.ndarray]:
    xs = [np.asarray(x, dtype=float) for x in xs]
    if len(xs) != t.m or any(x.shape != (n,) for x, n in zip(xs, t.dims)):
        raise ValueError(f"arguments do not match dims {t.dims}")
    return xs


def eval_multilinear(t: GenTensor, xs) -> float:
    """``F(x1, ..., xm)``, contracting every mode with its vector."""
    xs = _check_args(t, xs)
    out = t.data
    for x in reversed(xs):
        out = out @ x
    return float(out)


def contract_except(t: GenTensor, xs, mode: int) -> np.ndarray:
    """Contract all modes but ``mode``; ``xs[mode]`` is ignored."""
    xs = list(xs)
    placeholder = np.zeros(t.dims[mode])
    xs[mode] = placeholder
    xs = _check_args(t, xs)
    out = t.data
    for j in reversed(range(t.m)):
        if j != mode:
            out = np.tensordot(out, xs[j], axes=([j], [0]))
    return np.asarray(out)


def residual(t: SymTensor | GenTensor, r: Rank1Tensor) -> float:
    """``||T - lam u1 (x) ... (x) um||`` by entrywise subtraction."""
    if len(r.factors) != len(t.shape) or any(
        len(f) != s for f, s in zip(r.factors, t.shape)
    ):
        raise ValueError("rank-1 tensor shape does not match")
    if isinstance(t, SymTensor) and r.is_symmetric:
        # every orbit, stored or not, weighted by its size
        idx = sorted_indices(t.n, t.m)
        full = np.zeros(len(idx))
        if len(t.values):
            pos = {tuple(row): k for k, row in enumerate(idx.tolist())}
            full[[pos[tuple(row)] for row in t.indices.tolist()]] = t.values
        approx = r.lam * np.prod(r.factors[0][idx], axis=1)
        return float(np.sqrt(np.sum(orbit_size(idx) * (full - approx) ** 2)))
    return float(np.linalg.norm((t.to_dense() - r.to_dense()).ravel()))


def mode_unfold(t: GenTensor | np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (0-based), shape ``n_mode x prod(other dims)``."""
    a = t.data if isinstance(t, GenTensor) else np.asarray(t)
    if not 0 <= mode < a.ndim:
        raise ValueError(f"mode {mode} out of range for order {a.ndim}")
    return np.moveaxis(a, mode, 0).reshape(a.shape[mode], -1)


def mode_refold(mat: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mode_unfold`."""
    dims = tuple(dims)
    rest = dims[:mode] + dims[mode + 1 :]
    return np.moveaxis(np.asarray(mat).reshape((dims[mode],) + rest), 0, mode)

"""Moment relaxations of sphere-constrained form optimization.

A :class:`MomentSdp` is a linear pencil (symmetric matrix whose entries are
variables) together with an objective and a normalization functional over
those variables. Two pencils are built here:

* ``M(y)`` indexed by degree-``d`` monomials, entry ``(b, c)`` carrying
  ``y[b + c]``, for symmetric forms of even degree ``2d``;
* ``K(w)`` indexed by multi-indices of ``x1 (x) ... (x) xk``, entry
  ``(i, j)`` carrying ``w`` keyed by the per-mode unordered pairs
  ``{i_t, j_t}``, for the squared multilinear form of a general tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, prod, sqrt
from typing import Sequence

import numpy as np

from .tensor import GenTensor, SymTensor, sorted_indices

__all__ = [
    "MonomialBasis",
    "MomentSdp",
    "LiftedForm",
    "basis",
    "sym_position_map",
    "nonsym_position_map",
    "pair_code",
    "sym_relaxation",
    "lift_odd",
    "lift_scale",
    "squared_form",
    "nonsym_relaxation",
    "sym_moments",
    "nonsym_moments",
]


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    """Exponents of all degree-``d`` monomials in ``n`` variables.

    Ordered ``x1^d, x1^(d-1) x2, ..., xn^d`` (lexicographically descending).
    """

    n: int
    d: int
    exponents: np.ndarray

    def __len__(self) -> int:
        return len(self.exponents)

    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(e): k for k, e in enumerate(self.exponents.tolist())}


def basis(n: int, d: int) -> MonomialBasis:
    if n < 1 or d < 0:
        raise ValueError("basis needs n >= 1 and d >= 0")
    # sorted index tuples enumerate exponents in the required order
    idx = sorted_indices(n, d)
    exps = np.zeros((len(idx), n), dtype=np.int64)
    for j in range(d):
        np.add.at(exps, (np.arange(len(idx)), idx[:, j]), 1)
    exps.setflags(write=False)
    return MonomialBasis(n, d, exps)


@dataclass(frozen=True, eq=False)
class MomentSdp:
    """A moment relaxation ``opt <c, v> s.t. pencil(v) >= 0, <h, v> = 1``.

    ``position_map[p, q]`` is the index of the variable carried by pencil
    entry ``(p, q)``; ``keys`` names each variable (an exponent tuple for
    symmetric kinds, a tuple of per-mode index pairs for ``nonsym``).
    """

    kind: str
    sense: str
    position_map: np.ndarray
    keys: list
    objective: np.ndarray
    normalization: np.ndarray
    n: int = 0
    d: int = 0
    dims: tuple[int, ...] = ()
    lifted: "LiftedForm | None" = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.position_map.shape[0]

    @property
    def num_vars(self) -> int:
        return len(self.keys)

    def pencil(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float)[self.position_map]

    def objective_value(self, v: np.ndarray) -> float:
        return float(self.objective @ v)

    def normalization_value(self, v: np.ndarray) -> float:
        return float(self.normalization @ v)

    def key_index(self) -> dict:
        return {k: i for i, k in enumerate(self.keys)}


@dataclass(frozen=True)
class LiftedForm:
    """Record of an odd form ``f`` of degree ``2d-1`` lifted to ``f(x) * x_{n+1}``."""

    order: int
    n_lifted: int

    @property
    def d(self) -> int:
        return (self.order + 1) // 2

    @property
    def scale(self) -> float:
        return lift_scale(self.d)


def lift_scale(d: int) -> float:
    """Factor ``c(d)`` with ``max_S f = c(d) * max_S f~`` for the lifted form."""
    return sqrt(2 * d - 1) * (1.0 - 1.0 / (2 * d)) ** (-d)


def _multinomial(d: int, parts: Sequence[int]) -> float:
    return factorial(d) / prod(factorial(p) for p in parts)


def sym_position_map(n: int, d: int) -> np.ndarray:
    """Entry ``(b, c)`` of ``M(y)`` carries the index of monomial ``b + c`` in ``basis(n, 2d)``."""
    exps = basis(n, d).exponents
    where = basis(n, 2 * d).index()
    nb = len(exps)
    position_map = np.empty((nb, nb), dtype=np.int64)
    for p in range(nb):
        sums = exps[p] + exps
        position_map[p] = [where[tuple(s)] for s in sums.tolist()]
    position_map.setflags(write=False)
    return position_map


def sym_relaxation(t: SymTensor, sense: str = "max") -> MomentSdp:
    """Moment relaxation of ``max`` (or ``min``) ``f(x)`` over the unit sphere."""
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    if t.m % 2:
        raise ValueError("sym_relaxation needs even order; lift odd tensors first")
    d = t.m // 2
    full = basis(t.n, 2 * d)
    where = full.index()
    position_map = sym_position_map(t.n, d)

    objective = np.zeros(len(full))
    if len(t.values):
        for e, c in zip(t.exponents().tolist(), t.coefficients()):
            objective[where[tuple(e)]] += c

    normalization = np.zeros(len(full))
    for k, e in enumerate(full.exponents.tolist()):
        if all(a % 2 == 0 for a in e):
            normalization[k] = _multinomial(d, [a // 2 for a in e])

    return MomentSdp(
        kind="sym-" + sense,
        sense=sense,
        position_map=position_map,
        keys=[tuple(e) for e in full.exponents.tolist()],
        objective=objective,
        normalization=normalization,
        n=t.n,
        d=d,
    )


def lift_odd(t: SymTensor) -> tuple[SymTensor, LiftedForm]:
    """Return the tensor of ``f(x) * x_{n+1}`` and its :class:`LiftedForm`.

    Appending index ``n`` multiplies every orbit size by ``m + 1``, so the
    stored values are divided by ``m + 1`` to keep the form unchanged.
    """
    if t.m % 2 == 0:
        raise ValueError("lift_odd needs an odd order")
    idx = np.hstack([t.indices, np.full((len(t.indices), 1), t.n, dtype=np.int64)])
    lifted = SymTensor(t.n + 1, t.m + 1, idx, t.values / (t.m + 1))
    return lifted, LiftedForm(order=t.m, n_lifted=t.n + 1)


def squared_form(t: GenTensor) -> tuple[np.ndarray, tuple[int, ...]]:
    """Gram matrix of the last-mode slices over ``x1 (x) ... (x) x_{m-1}``.

    ``F^sq(x) = K(x)^T G K(x)`` with ``G = sum_j g_j g_j^T`` and ``g_j`` the
    row-major coefficient vector of slice ``F[..., j]``.
    """
    if t.m < 2:
        raise ValueError("squared_form needs order >= 2")
    dims = t.dims[:-1]
    slices = t.data.reshape(prod(dims), t.dims[-1])
    return slices @ slices.T, dims


def _pair_codes(n: int) -> np.ndarray:
    """``codes[a, b]`` numbers the unordered pair ``{a, b}`` in ``0..n(n+1)/2-1``."""
    codes = np.empty((n, n), dtype=np.int64)
    k = 0
    for a in range(n):
        for b in range(a, n):
            codes[a, b] = codes[b, a] = k
            k += 1
    return codes


def nonsym_position_map(dims: Sequence[int]) -> np.ndarray:
    """Entry ``(i, j)`` of ``K(w)`` carries the variable of the per-mode pairs ``{i_t, j_t}``.

    Variables are numbered row-major over the per-mode pair codes.
    """
    dims = tuple(int(n) for n in dims)
    size = prod(dims)
    multi = np.array(np.unravel_index(np.arange(size), dims)).T
    npairs = tuple(n * (n + 1) // 2 for n in dims)
    codes = []
    for j, n in enumerate(dims):
        c = _pair_codes(n)
        codes.append(c[multi[:, j][:, None], multi[:, j][None, :]])
    position_map = np.ravel_multi_index(tuple(codes), npairs)
    position_map.setflags(write=False)
    return position_map


def pair_code(n: int, a: int, b: int) -> int:
    """Number of the unordered pair ``{a, b}`` over ``range(n)``."""
    a, b = min(a, b), max(a, b)
    return a * n - a * (a - 1) // 2 + (b - a)


def nonsym_relaxation(gram: np.ndarray, dims: Sequence[int]) -> MomentSdp:
    """Relaxation of ``max F^sq`` over a product of unit spheres."""
    dims = tuple(int(n) for n in dims)
    size = prod(dims)
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (size, size):
        raise ValueError(f"gram matrix has shape {gram.shape}, expected {(size, size)}")
    npairs = tuple(n * (n + 1) // 2 for n in dims)
    position_map = nonsym_position_map(dims)

    nvars = prod(npairs)
    objective = np.bincount(position_map.ravel(), gram.ravel(), minlength=nvars)
    normalization = np.zeros(nvars)
    normalization[np.diag(position_map)] = 1.0

    pairs = [[(a, b) for a in range(n) for b in range(a, n)] for n in dims]
    keys = [
        tuple(pairs[j][c] for j, c in enumerate(code))
        for code in zip(*np.unravel_index(np.arange(nvars), npairs))
    ]
    return MomentSdp(
        kind="nonsym",
        sense="max",
        position_map=position_map,
        keys=keys,
        objective=objective,
        normalization=normalization,
        dims=dims,
    )


def sym_moments(p: MomentSdp, u: np.ndarray) -> np.ndarray:
    """Exact moment vector ``y_a = u^a`` for a symmetric-kind relaxation."""
    u = np.asarray(u, dtype=float)
    exps = np.asarray(p.keys)
    return np.prod(u[None, :] ** exps, axis=1)


def nonsym_moments(p: MomentSdp, us: Sequence[np.ndarray]) -> np.ndarray:
    """Exact moment vector ``w = prod_j u^j_a u^j_b`` over per-mode pairs."""
    out = np.ones(p.num_vars)
    for v, key in enumerate(p.keys):
        for u, (a, b) in zip(us, key):
            out[v] *= u[a] * u[b]
    return out

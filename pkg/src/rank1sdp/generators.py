"""Structured test tensors used in the numerical experiments.

All formulas take 1-based indices. Families with a fixed order reject any
other ``m``; the Motzkin and biquadratic families also fix ``n``.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import GenTensor, SymTensor

__all__ = ["FAMILIES", "generate", "motzkin", "biquadratic", "biquadratic_matrix"]


def _alt_reciprocal(idx):
    return sum((-1) ** i / i for i in idx)


def _log_alt(idx):
    return sum((-1) ** i * math.log(i) for i in idx)


def _sin_sum(idx):
    return math.sin(sum(idx))


def _dense(dims, func) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(1, n + 1, dtype=float) for n in dims], indexing="ij")
    return func(*grids)


def motzkin() -> SymTensor:
    """The order-6 tensor of ``2||x||^6 - M(x)``, ``M`` the Motzkin polynomial."""
    entries = {
        (1, 1, 1, 1, 1, 1): 2.0,
        (1, 1, 1, 1, 2, 2): 1 / 3,
        (1, 1, 1, 1, 3, 3): 2 / 5,
        (1, 1, 2, 2, 2, 2): 1 / 3,
        (1, 1, 2, 2, 3, 3): 1 / 6,
        (1, 1, 3, 3, 3, 3): 2 / 5,
        (2, 2, 2, 2, 2, 2): 2.0,
        (2, 2, 2, 2, 3, 3): 2 / 5,
        (2, 2, 3, 3, 3, 3): 2 / 5,
        (3, 3, 3, 3, 3, 3): 1.0,
    }
    return SymTensor.from_entries(3, 6, entries)


def biquadratic_matrix() -> np.ndarray:
    """The 9x9 matrix ``B`` whose biquadratic form is nonnegative but not SOS-certifiable."""
    b = np.zeros((9, 9))
    for i, v in [(0, 1), (1, 2), (4, 1), (5, 2), (6, 2), (8, 1)]:
        b[i, i] = v
    for i, j in [(0, 4), (1, 3), (0, 8), (2, 6), (4, 8), (5, 7)]:
        b[i, j] = b[j, i] = -0.5
    return b


def biquadratic() -> GenTensor:
    """A 3x3x9 tensor whose squared last-mode form is ``(x1 (x) x2)^T (3I - B)(x1 (x) x2)``.

    Slices come from an eigendecomposition of ``3I - B``; any factor works
    since only the Gram matrix of the slices is fixed.
    """
    evals, evecs = np.linalg.eigh(3.0 * np.eye(9) - biquadratic_matrix())
    g = evecs * np.sqrt(np.clip(evals, 0.0, None))
    # g[:, k] is the coefficient vector of slice k over x1 (x) x2
    return GenTensor(g.reshape(3, 3, 9))


def _fixed_order(m_req):
    def check(n, m):
        if m != m_req:
            raise ValueError(f"family requires m={m_req}, got m={m}")

    return check


def _sym(func, order=None):
    def build(n, m, seed):
        if order is not None:
            _fixed_order(order)(n, m)
        return SymTensor.from_function(n, m, func)

    return build


def _nonsym(func, order=None):
    def build(n, m, seed):
        if order is not None:
            _fixed_order(order)(n, m)
        return GenTensor(_dense((n,) * m, func))

    return build


def _arctan4(n, m, seed):
    _fixed_order(4)(n, m)
    return SymTensor.from_function(
        n, 4, lambda idx: sum(math.atan((-1) ** i * i / n) for i in idx)
    )


def _arcsin4(n, m, seed):
    _fixed_order(4)(n, m)

    def f(*ii):
        total = sum(np.arcsin(np.clip((-1.0) ** i * (j + 1) / i, -1, 1)) for j, i in enumerate(ii))
        mask = np.all([i >= j + 1 for j, i in enumerate(ii)], axis=0)
        return np.where(mask, total, 0.0)

    return GenTensor(_dense((n,) * 4, f))


def _exp_alt5(n, m, seed):
    _fixed_order(5)(n, m)
    return GenTensor(
        _dense((n,) * 5, lambda *ii: sum((-1) ** j * (j + 1) * np.exp(-i) for j, i in enumerate(ii)))
    )


def _tan_nonsym(n, m, seed):
    return GenTensor(
        _dense((n,) * m, lambda *ii: np.tan(sum((-1) ** j * i / (j + 1) for j, i in enumerate(ii))))
    )


def _motzkin(n, m, seed):
    if (n, m) != (3, 6):
        raise ValueError("motzkin-6 is fixed at n=3, m=6")
    return motzkin()


def _biquadratic(n, m, seed):
    if m != 3 or n not in (3, 9):
        raise ValueError("biquadratic-3x3x9 is fixed at dims (3, 3, 9)")
    return biquadratic()


def _gaussian_sym(n, m, seed):
    rng = np.random.default_rng(seed)
    t = SymTensor.from_function(n, m, lambda idx: 0.0)
    return SymTensor(n, m, t.indices, rng.standard_normal(len(t.indices)))


def _gaussian_nonsym(n, m, seed):
    rng = np.random.default_rng(seed)
    return GenTensor(rng.standard_normal((n,) * m))


FAMILIES = {
    "alt-reciprocal-3": _sym(_alt_reciprocal, 3),
    "arctan-4": _arctan4,
    "log-alt-5": _sym(_log_alt, 5),
    "motzkin-6": _motzkin,
    "sin-sym": _sym(_sin_sum),
    "cos-nonsym-3": _nonsym(lambda i1, i2, i3: np.cos(i1 + 2 * i2 + 3 * i3), 3),
    "arcsin-4": _arcsin4,
    "exp-alt-5": _exp_alt5,
    "tan-nonsym": _tan_nonsym,
    "biquadratic-3x3x9": _biquadratic,
    "gaussian-random": _gaussian_sym,
    "gaussian-random-nonsym": _gaussian_nonsym,
}


def generate(family: str, n: int = 3, m: int = 3, seed: int | None = None):
    """Build a tensor from a named family.

    ``gaussian-random`` draws one standard normal per symmetric orbit;
    ``gaussian-random-nonsym`` draws one per position. Both honour ``seed``.
    """
    try:
        build = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return build(n, m, seed)

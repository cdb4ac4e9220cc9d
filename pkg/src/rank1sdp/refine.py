"""Local ascent on (products of) unit spheres and power-method baselines.

All routines keep every iterate on its sphere and report the best point
seen, so a caller's starting value is never lost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import (
    GenTensor,
    SymTensor,
    contract_except,
    eval_form,
    eval_multilinear,
    grad_form,
    mode_unfold,
)

__all__ = [
    "RefineConfig",
    "RefineResult",
    "projected_gradient",
    "shopm",
    "hopm",
    "hosvd_init",
    "canonical_sign",
]


@dataclass(frozen=True)
class RefineConfig:
    max_iters: int = 1000
    tol_obj: float = 1e-8
    shrink: float = 0.5
    slope: float = 1e-4
    initial_step: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1 or self.tol_obj <= 0 or self.slope <= 0 or self.initial_step <= 0:
            raise ValueError("refine settings must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class RefineResult:
    """``value`` is the raw objective (``f`` or ``F``) at ``points``.

    ``stalled`` marks a vanishing gradient or contraction; ``fallback``
    marks a power method that oscillated and was finished by gradient ascent.
    """

    value: float
    points: tuple[np.ndarray, ...]
    iterations: int
    converged: bool
    stalled: bool = False
    fallback: bool = False

    @property
    def point(self) -> np.ndarray:
        return self.points[0]


def canonical_sign(v: np.ndarray) -> tuple[np.ndarray, float]:
    """Flip ``v`` so its first nonzero entry is positive; return it and the sign used."""
    nz = np.flatnonzero(v)
    s = -1.0 if len(nz) and v[nz[0]] < 0 else 1.0
    return s * v + 0.0, s


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("starting vector must be nonzero")
    return v / nv


class _Problem:
    """Objective and per-factor Euclidean gradients for either tensor kind."""

    def __init__(self, t: SymTensor | GenTensor):
        self.t = t
        self.sym = isinstance(t, SymTensor)

    def value(self, xs) -> float:
        return eval_form(self.t, xs[0]) if self.sym else eval_multilinear(self.t, xs)

    def grads(self, xs) -> list[np.ndarray]:
        if self.sym:
            return [grad_form(self.t, xs[0])]
        return [contract_except(self.t, xs, j) for j in range(self.t.m)]


def projected_gradient(
    t: SymTensor | GenTensor,
    x0: np.ndarray | Sequence[np.ndarray],
    sense: str = "max",
    config: RefineConfig | None = None,
) -> RefineResult:
    """Armijo gradient ascent (descent for ``min``) with renormalization.

    ``x0`` is one vector for a symmetric tensor or one per mode otherwise.
    Trial steps follow Barzilai-Borwein after the first iteration and are
    halved until the Armijo condition holds, so the objective never drops.
    """
    cfg = config or RefineConfig()
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    sgn = 1.0 if sense == "max" else -1.0
    prob = _Problem(t)
    xs = [_unit(x0)] if prob.sym else [_unit(x) for x in x0]
    obj = sgn * prob.value(xs)
    step = cfg.initial_step
    prev = None
    converged = stalled = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        rg = []
        for x, g in zip(xs, prob.grads(xs)):
            g = sgn * g
            rg.append(g - (g @ x) * x)
        gn2 = sum(float(r @ r) for r in rg)
        if gn2 <= 1e-30 * max(1.0, obj * obj):
            stalled = gn2 == 0.0
            converged = True
            break
        if prev is not None:
            # Barzilai-Borwein trial step from the last move
            dx = np.concatenate([x - px for x, px in zip(xs, prev[0])])
            dg = np.concatenate([r - pr for r, pr in zip(rg, prev[1])])
            curv = abs(float(dx @ dg))
            if curv > 0:
                step = float(dx @ dx) / curv
        a = step
        while True:
            trial = [_unit(x + a * r) for x, r in zip(xs, rg)]
            new = sgn * prob.value(trial)
            if new >= obj + cfg.slope * a * gn2:
                break
            a *= cfg.shrink
            if a < 1e-20:
                trial = None
                break
        if trial is None:
            converged = True
            break
        change = new - obj
        prev = (xs, rg)
        xs, obj = trial, new
        if change < cfg.tol_obj:
            converged = True
            break
    return RefineResult(sgn * obj, tuple(xs), it, converged, stalled)


def shopm(
    t: SymTensor, x0: np.ndarray, config: RefineConfig | None = None, fallback: bool = True
) -> RefineResult:
    """Symmetric higher-order power method on ``|f|`` with sign-aligned updates.

    Each step sets ``x <- s * F x^(m-1) / ||F x^(m-1)||`` where ``s`` is the
    sign of ``f(x)``. No convexity shift is used; if ``|f|`` decreases the
    run is handed to :func:`projected_gradient` from the best iterate.
    With ``fallback=False`` the bare recurrence runs to its stopping rule
    and the last iterate is returned, however it oscillates.
    """
    cfg = config or RefineConfig()
    x = _unit(x0)
    val = eval_form(t, x)
    best_x, best = x, val
    converged = stalled = False
    handoff = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = grad_form(t, x)
        ng = np.linalg.norm(g)
        if ng == 0.0:
            stalled = True
            break
        s = -1.0 if val < 0 else 1.0
        x_new = s * g / ng
        new = eval_form(t, x_new)
        if fallback and abs(new) < abs(val) - 1e-12 * max(1.0, abs(val)):
            handoff = True
            break
        change = abs(new - val)
        x, val = x_new, new
        if abs(val) > abs(best):
            best_x, best = x, val
        if change < cfg.tol_obj:
            converged = True
            break
    if not fallback:
        return RefineResult(val, (x,), it, converged, stalled)
    if handoff:
        sense = "max" if best >= 0 else "min"
        r = projected_gradient(t, best_x, sense, cfg)
        return RefineResult(r.value, r.points, it + r.iterations, r.converged, r.stalled, True)
    return RefineResult(best, (best_x,), it, converged, stalled)


def hopm(t: GenTensor, x0: Sequence[np.ndarray], config: RefineConfig | None = None) -> RefineResult:
    """Higher-order power method: cyclic normalized contractions, one mode at a time."""
    cfg = config or RefineConfig()
    xs = [_unit(x) for x in x0]
    val = eval_multilinear(t, xs)
    converged = stalled = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        for j in range(t.m):
            g = contract_except(t, xs, j)
            ng = np.linalg.norm(g)
            if ng == 0.0:
                stalled = True
                break
            xs[j] = g / ng
        if stalled:
            break
        new = eval_multilinear(t, xs)
        change = abs(new - val)
        val = new
        if change < cfg.tol_obj:
            converged = True
            break
    return RefineResult(val, tuple(xs), it, converged, stalled)


def _leading_vector(a: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Top left singular vector of ``a``; a degenerate top space yields the
    normalized projection of the first coordinate vector with a nonzero image."""
    evals, evecs = np.linalg.eigh(a @ a.T)
    top = evals[-1]
    q = evecs[:, evals >= top - rtol * max(top, 1e-300)]
    if q.shape[1] > 1:
        for k in range(a.shape[0]):
            p = q @ q[k]
            if np.linalg.norm(p) > 1e-8:
                return canonical_sign(p / np.linalg.norm(p))[0]
    return canonical_sign(q[:, -1])[0]


def hosvd_init(t: SymTensor | GenTensor) -> tuple[np.ndarray, ...]:
    """Truncated-HOSVD start: the leading left singular vector of each mode unfolding.

    A symmetric tensor yields a one-element tuple. Signs are fixed so the
    first nonzero entry is positive.
    """
    data = t.to_dense()
    if not np.any(data):
        raise ValueError("HOSVD start is undefined for the zero tensor")
    if isinstance(t, SymTensor):
        return (_leading_vector(mode_unfold(data, 0)),)
    return tuple(_leading_vector(mode_unfold(data, j)) for j in range(data.ndim))

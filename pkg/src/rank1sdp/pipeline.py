"""End-to-end best rank-1 approximation: relax, solve, extract, refine, report."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .extract import ExtractResult, extract_nonsym, extract_sym, last_mode_factor, unlift_odd
from .moment import MomentSdp, lift_odd, nonsym_relaxation, squared_form, sym_relaxation
from .refine import RefineConfig, canonical_sign, hopm, hosvd_init, projected_gradient, shopm
from .sdp import SdpSolution, SolverOptions, certify_bounds, relaxation_value, solve, to_std
from .tensor import GenTensor, Rank1Tensor, SymTensor, norm, residual

log = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "SolverStats",
    "Branch",
    "Rank1Report",
    "Comparison",
    "approx_sym_even",
    "approx_sym_odd",
    "approx_nonsym",
    "approx_auto",
    "baseline",
    "largest_mode_last",
    "compare_methods",
    "CERTIFY_TOL",
]

# a rank-1 pencil only certifies when the bound is attained to this accuracy
CERTIFY_TOL = 1e-5


@dataclass(frozen=True)
class PipelineConfig:
    solver: SolverOptions = field(default_factory=SolverOptions)
    refine: RefineConfig = field(default_factory=RefineConfig)
    polish_tol: float = 1e-12


@dataclass(frozen=True)
class SolverStats:
    iterations: int = 0
    gap: float = 0.0
    seconds: float = 0.0
    status: str = "none"


@dataclass(frozen=True)
class Branch:
    """One solved relaxation: its optimal value, pencil rank and refined value."""

    sense: str
    sdp_value: float
    pencil_rank: int
    lam: float


@dataclass(frozen=True, eq=False)
class Rank1Report:
    """A rank-1 approximation ``lam * u1 (x) ... (x) um`` and its quality metrics.

    ``ubd`` is an upper bound on the best ``|lam|`` (NaN when no relaxation
    was solved); ``aprxerr = | |lam| - ubd | / max(1, ubd)``;
    ``rho = |lam| / ||T||``. ``factors`` is empty for the zero tensor.
    """

    lam: float
    factors: tuple[np.ndarray, ...]
    residual: float
    ubd: float
    aprxerr: float
    rho: float
    certified: bool
    pencil_rank: int
    method: str
    solver: SolverStats = field(default_factory=SolverStats)
    branches: tuple[Branch, ...] = ()

    @property
    def u(self) -> np.ndarray:
        return self.factors[0]


@dataclass(frozen=True, eq=False)
class Comparison:
    rows: tuple[Rank1Report, ...]

    @property
    def residual_gap(self) -> float:
        """Baseline residual minus relaxation residual."""
        return self.rows[1].residual - self.rows[0].residual


def _report(t, lam, factors, ubd, rank, certified, method, stats, branches=()) -> Rank1Report:
    tn = norm(t)
    lam = float(lam)
    res = residual(t, Rank1Tensor(lam, factors)) if factors else tn
    if math.isfinite(ubd):
        aprxerr = abs(abs(lam) - ubd) / max(1.0, ubd)
    else:
        aprxerr = math.nan
    certified = bool(certified and aprxerr <= CERTIFY_TOL)
    return Rank1Report(
        lam=lam,
        factors=tuple(factors),
        residual=res,
        ubd=float(ubd),
        aprxerr=aprxerr,
        rho=abs(lam) / tn if tn > 0 else 0.0,
        certified=certified,
        pencil_rank=int(rank),
        method=method,
        solver=stats,
        branches=tuple(branches),
    )


def _zero_report(t, method="sdp+refine") -> Rank1Report:
    return _report(t, 0.0, (), 0.0, 0, False, method, SolverStats())


def _stats(sols: Sequence[SdpSolution]) -> SolverStats:
    worst = next((s.status for s in sols if s.status != "optimal"), "optimal")
    return SolverStats(
        iterations=sum(s.iterations for s in sols),
        gap=max(s.gap for s in sols),
        seconds=sum(s.seconds for s in sols),
        status=worst,
    )


def _solve(p: MomentSdp, cfg: PipelineConfig) -> tuple[SdpSolution, np.ndarray]:
    std, back = to_std(p)
    sol = solve(std, cfg.solver)
    return sol, back.variables(sol.X)


def _polish(cfg: PipelineConfig) -> RefineConfig:
    return replace(cfg.refine, tol_obj=min(cfg.polish_tol, cfg.refine.tol_obj))


def _sym_factors(u: np.ndarray, m: int, lam: float) -> tuple[tuple[np.ndarray, ...], float]:
    v, s = canonical_sign(u)
    if m % 2:
        lam *= s
        if lam < 0:
            v, lam = -v + 0.0, -lam
    return (v,) * m, lam


def _fallback(t, cfg: PipelineConfig, stats: SolverStats) -> Rank1Report:
    """Refinement-only report from the HOSVD start after a failed solve."""
    log.warning("relaxation not solved (%s); refining from the HOSVD start", stats.status)
    if isinstance(t, SymTensor):
        x0 = hosvd_init(t)[0]
        senses = ("max", "min") if t.m % 2 == 0 else ("max",)
        runs = [projected_gradient(t, x0, s, cfg.refine) for s in senses]
        best = max(runs, key=lambda r: abs(r.value))
        factors, lam = _sym_factors(best.point, t.m, best.value)
    else:
        best = projected_gradient(t, hosvd_init(t), "max", cfg.refine)
        factors, lam = _nonsym_signs(best.points, best.value)
    return _report(t, lam, factors, math.nan, 0, False, "sdp+refine", stats)


def approx_sym_even(t: SymTensor, config: PipelineConfig | None = None) -> Rank1Report:
    """Best rank-1 approximation of an even-order symmetric tensor.

    Both ``max f`` and ``min f`` are relaxed; each extracted point is
    refined in its own sense and the branch with larger ``|f|`` wins (the
    max branch on a tie).
    """
    cfg = config or PipelineConfig()
    if t.m % 2:
        raise ValueError("approx_sym_even needs even order")
    if norm(t) == 0:
        return _zero_report(t)
    d = t.m // 2
    sols, branches, points, exts = [], [], [], []
    for sense in ("max", "min"):
        p = sym_relaxation(t, sense)
        sol, y = _solve(p, cfg)
        sols.append(sol)
        if sol.status != "optimal":
            return _fallback(t, cfg, _stats(sols))
        ext = extract_sym(y, t.n, d)
        if ext.zero:
            return _zero_report(t)
        r = projected_gradient(t, ext.vectors[0], sense, _polish(cfg))
        branches.append(Branch(sense, relaxation_value(sol, p), ext.pencil_rank, r.value))
        points.append(r.point)
        exts.append(ext)
    ubd = max(abs(b.sdp_value) for b in branches)
    k = 0 if abs(branches[0].lam) >= abs(branches[1].lam) - 1e-12 else 1
    factors, lam = _sym_factors(points[k], t.m, branches[k].lam)
    return _report(
        t, lam, factors, ubd, exts[k].pencil_rank, exts[k].certified, "sdp+refine", _stats(sols), branches
    )


def approx_sym_odd(t: SymTensor, config: PipelineConfig | None = None) -> Rank1Report:
    """Best rank-1 approximation of an odd-order symmetric tensor via the lifted form."""
    cfg = config or PipelineConfig()
    if t.m % 2 == 0:
        raise ValueError("approx_sym_odd needs odd order")
    if norm(t) == 0:
        return _zero_report(t)
    lifted, lf = lift_odd(t)
    p = replace(sym_relaxation(lifted, "max"), kind="odd-lifted", lifted=lf)
    sol, y = _solve(p, cfg)
    stats = _stats([sol])
    if sol.status != "optimal":
        return _fallback(t, cfg, stats)
    ext = extract_sym(y, lifted.n, lf.d)
    u = None if ext.zero else unlift_odd(ext.vectors[0])
    if u is None:
        return _zero_report(t)
    ubd = certify_bounds(sol, p)
    r = projected_gradient(t, u, "max", _polish(cfg))
    branch = Branch("max", relaxation_value(sol, p), ext.pencil_rank, r.value)
    factors, lam = _sym_factors(r.point, t.m, r.value)
    return _report(t, lam, factors, ubd, ext.pencil_rank, ext.certified, "sdp+refine", stats, (branch,))


def _nonsym_signs(factors, lam) -> tuple[tuple[np.ndarray, ...], float]:
    """First nonzero entry of every factor but the last made positive; the last
    factor absorbs the sign so that ``lam >= 0``."""
    out = []
    sign = 1.0
    for v in factors[:-1]:
        v, s = canonical_sign(v)
        out.append(v)
        sign *= s
    last = np.asarray(factors[-1]) * sign
    if lam < 0:
        last, lam = -last, -lam
    out.append(last + 0.0)
    return tuple(out), float(lam)


def largest_mode_last(dims: Sequence[int]) -> list[int]:
    """Mode order that moves the largest dimension (the last such) to the end."""
    j = max(range(len(dims)), key=lambda k: (dims[k], k))
    return [k for k in range(len(dims)) if k != j] + [j]


def approx_nonsym(t: GenTensor, config: PipelineConfig | None = None) -> Rank1Report:
    """Best rank-1 approximation of a general tensor of order at least 2.

    The largest mode is eliminated by squaring the last-mode slices; the
    relaxation over the remaining modes yields all but the last factor.
    """
    cfg = config or PipelineConfig()
    if t.m < 2:
        raise ValueError("approx_nonsym needs order >= 2")
    if norm(t) == 0:
        return _zero_report(t)
    perm = largest_mode_last(t.dims)
    tp = t.transpose(perm)
    gram, dims = squared_form(tp)
    p = nonsym_relaxation(gram, dims)
    sol, w = _solve(p, cfg)
    stats = _stats([sol])
    if sol.status != "optimal":
        return _fallback(t, cfg, stats)
    ext = extract_nonsym(w, dims)
    last = None if ext.zero else last_mode_factor(tp, ext.vectors)
    if last is None:
        return _zero_report(t)
    ubd = certify_bounds(sol, p)
    r = projected_gradient(tp, ext.vectors + (last,), "max", _polish(cfg))
    back = [None] * t.m
    for k, j in enumerate(perm):
        back[j] = r.points[k]
    factors, lam = _nonsym_signs(back, r.value)
    branch = Branch("max", relaxation_value(sol, p), ext.pencil_rank, r.value)
    return _report(t, lam, factors, ubd, ext.pencil_rank, ext.certified, "sdp+refine", stats, (branch,))


def approx_auto(t: SymTensor | GenTensor, config: PipelineConfig | None = None) -> Rank1Report:
    """Dispatch on symmetry and parity; order 1 is answered in closed form."""
    if t.m == 1:
        v = t.to_dense()
        tn = float(np.linalg.norm(v))
        if tn == 0:
            return _zero_report(t)
        return _report(t, tn, (v / tn,), tn, 1, True, "sdp+refine", SolverStats(status="optimal"))
    if isinstance(t, SymTensor):
        return approx_sym_even(t, config) if t.m % 2 == 0 else approx_sym_odd(t, config)
    return approx_nonsym(t, config)


def baseline(t: SymTensor | GenTensor, method: str, config: PipelineConfig | None = None) -> Rank1Report:
    """Power-method report from the HOSVD start; ``method`` is ``shopm`` or ``hopm``."""
    cfg = config or PipelineConfig()
    if norm(t) == 0:
        return _zero_report(t, method)
    if method == "shopm":
        if not isinstance(t, SymTensor):
            raise ValueError("shopm needs a symmetric tensor")
        r = shopm(t, hosvd_init(t)[0], cfg.refine)
        factors, lam = _sym_factors(r.point, t.m, r.value)
    elif method == "hopm":
        g = t if isinstance(t, GenTensor) else GenTensor(t.to_dense())
        r = hopm(g, hosvd_init(g), cfg.refine)
        factors, lam = _nonsym_signs(r.points, r.value)
    else:
        raise ValueError(f"unknown baseline {method!r}")
    return _report(t, lam, factors, math.nan, 0, False, method, SolverStats())


def compare_methods(t: SymTensor | GenTensor, config: PipelineConfig | None = None) -> Comparison:
    """Relaxation report next to SHOPM (symmetric input) or HOPM (general input).

    The baseline row borrows the relaxation bound so its ``aprxerr`` shows
    how far the power method stops from the certified value.
    """
    sdp_row = approx_auto(t, config)
    method = "shopm" if isinstance(t, SymTensor) else "hopm"
    base = baseline(t, method, config)
    if math.isfinite(sdp_row.ubd) and base.factors:
        base = replace(
            base,
            ubd=sdp_row.ubd,
            aprxerr=abs(abs(base.lam) - sdp_row.ubd) / max(1.0, sdp_row.ubd),
        )
    return Comparison((sdp_row, base))

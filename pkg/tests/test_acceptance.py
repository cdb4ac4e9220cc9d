"""Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned.

Lines are printed as each test runs and repeated in the terminal summary.
"""

from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, load, sphere_grid, unit
from rank1sdp.extract import extract_nonsym, extract_sym
from rank1sdp.generators import generate
from rank1sdp.moment import (
    lift_odd,
    nonsym_moments,
    nonsym_relaxation,
    squared_form,
    sym_moments,
    sym_relaxation,
)
from rank1sdp.pipeline import approx_auto, approx_nonsym, compare_methods, largest_mode_last
from rank1sdp.refine import hosvd_init, shopm
from rank1sdp.sdp import solve, to_std
from rank1sdp.tensor import GenTensor, Rank1Tensor, SymTensor, eval_form, grad_form, norm, residual


def record(capsys, label: str, checks: list[tuple[str, bool]]):
    ok = all(c for _, c in checks)
    detail = "; ".join(f"{'ok' if c else 'FAILED'} {name}" for name, c in checks)
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def near(x, target, tol):
    return abs(x - target) <= tol


@lru_cache(maxsize=None)
def report(name: str):
    if name.endswith(".tns"):
        return approx_auto(load(name[:-4]))
    family, n, m = name.split(":")
    return approx_auto(generate(family, int(n), int(m)))


def test_criterion_01_two_variable_cubic(capsys):
    r = report("cubic_2.tns")
    record(capsys, "1", [
        (f"lambda {r.lam:.5f} ~ 3.1155 +-2e-3", near(r.lam, 3.1155, 2e-3)),
        (f"rho {r.rho:.5f} ~ 0.6203 +-1e-3", near(r.rho, 0.6203, 1e-3)),
        (f"residual {r.residual:.5f} ~ 3.9399 +-2e-3", near(r.residual, 3.9399, 2e-3)),
        (f"certified {r.certified}", r.certified),
    ])


def test_criterion_02_three_variable_cubic(capsys):
    r = report("cubic_3a.tns")
    target = np.array([-0.3921, 0.7249, 0.5664])
    dev = min(np.abs(r.u - target).max(), np.abs(-r.u - target).max())
    record(capsys, "2", [
        (f"lambda {r.lam:.5f} ~ 0.8730 +-2e-3", near(r.lam, 0.8730, 2e-3)),
        (f"u max deviation {dev:.1e} <= 2e-3 up to sign", dev <= 2e-3),
    ])


def test_criterion_03_positive_cubic(capsys):
    r = report("cubic_3b.tns")
    record(capsys, "3", [
        (f"lambda {r.lam:.5f} ~ 2.1110 +-2e-3", near(r.lam, 2.1110, 2e-3)),
        (f"rho {r.rho:.5f} ~ 0.8574 +-1e-3", near(r.rho, 0.8574, 1e-3)),
    ])


def test_criterion_04_quartic(capsys):
    r = report("quartic_3.tns")
    ranks = [b.pencil_rank for b in r.branches]
    record(capsys, "4", [
        (f"|lambda| {abs(r.lam):.5f} ~ 1.0954 +-2e-3", near(abs(r.lam), 1.0954, 2e-3)),
        (f"rho {r.rho:.5f} ~ 0.4863 +-1e-3", near(r.rho, 0.4863, 1e-3)),
        (f"pencil ranks {ranks} both 1", ranks == [1, 1]),
    ])


def test_criterion_05_motzkin(capsys):
    r = report("motzkin-6:3:6")
    b = {x.sense: x for x in r.branches}
    dev = np.abs(np.abs(r.u) - [0, 1, 0]).max()
    record(capsys, "5", [
        (f"f_min^sdp {b['min'].sdp_value:.8f} ~ 1 +-1e-6", near(b["min"].sdp_value, 1.0, 1e-6)),
        (f"min pencil rank {b['min'].pencil_rank} == 1", b["min"].pencil_rank == 1),
        (f"f_max^sdp {b['max'].sdp_value:.5f} ~ 2.0046 +-5e-3", near(b["max"].sdp_value, 2.0046, 5e-3)),
        (f"max pencil rank {b['max'].pencil_rank} == 7", b["max"].pencil_rank == 7),
        (f"lambda {r.lam:.8f} ~ 2 +-1e-6", near(r.lam, 2.0, 1e-6)),
        (f"u = +-(0,1,0) (max deviation {dev:.1e} <= 1e-6)", dev <= 1e-6),
        (f"certified {r.certified} is false", not r.certified),
    ])


def test_criterion_06_sparse_order4(capsys):
    t = load("sparse_2222")
    r = report("sparse_2222.tns")
    e1, e2 = np.eye(2)
    dev = max(np.abs(f - e).max() for f, e in zip(r.factors, (e1, e2, e1, e2)))
    record(capsys, "6", [
        (f"lambda {r.lam:.5f} ~ 25.6 +-1e-3", near(r.lam, 25.6, 1e-3)),
        (f"factors (e1,e2,e1,e2), max deviation {dev:.1e}", dev <= 1e-6),
        (f"residual {r.residual:.5f} ~ 42.1195 +-2e-3", near(r.residual, 42.1195, 2e-3)),
        (f"norm {norm(t):.5f} ~ 49.2890 +-1e-3", near(norm(t), 49.2890, 1e-3)),
    ])


def test_criterion_07_dense_order3(capsys):
    r = report("dense_333.tns")
    record(capsys, "7", [
        (f"lambda {r.lam:.5f} ~ 2.8167 +-2e-3", near(r.lam, 2.8167, 2e-3)),
        (f"rho {r.rho:.5f} ~ 0.9017 +-1e-3", near(r.rho, 0.9017, 1e-3)),
    ])


def test_criterion_08_biquadratic(capsys):
    r = report("biquadratic-3x3x9:3:3")
    fmax = r.branches[0].sdp_value
    record(capsys, "8", [
        (f"F_max^sdp {fmax:.5f} ~ 3.0972 +-5e-3", near(fmax, 3.0972, 5e-3)),
        (f"pencil rank {r.pencil_rank} == 4", r.pencil_rank == 4),
        (f"lambda {r.lam:.5f} ~ 1.7321 +-1e-3", near(r.lam, 1.7321, 1e-3)),
        (f"rho {r.rho:.5f} ~ 0.4083 +-1e-3", near(r.rho, 0.4083, 1e-3)),
    ])


def test_criterion_09_structured_families(capsys):
    a = report("alt-reciprocal-3:10:3")
    b = report("arctan-4:5:4")
    br = {x.sense: x for x in b.branches}
    record(capsys, "9", [
        (f"alt-reciprocal n=10 lambda {a.lam:.4f} ~ 17.80 +-0.02", near(a.lam, 17.80, 0.02)),
        (f"alt-reciprocal n=10 rho {a.rho:.4f} ~ 0.80 +-0.01", near(a.rho, 0.80, 0.01)),
        (f"arctan n=5 |lambda| {abs(b.lam):.4f} ~ 23.574 +-0.02", near(abs(b.lam), 23.574, 0.02)),
        (
            f"min branch taken (|lambda-| {abs(br['min'].lam):.4f} > |lambda+| {abs(br['max'].lam):.4f}, lambda {b.lam:.4f})",
            abs(br["min"].lam) > abs(br["max"].lam) and b.lam == br["min"].lam,
        ),
    ])


@lru_cache(maxsize=None)
def sin_comparison():
    return compare_methods(generate("sin-sym", 10, 3))


def test_criterion_10a_relaxation_residual(capsys):
    sdp_row, _ = sin_comparison().rows
    record(capsys, "10a", [(f"RES_sdp {sdp_row.residual:.4f} ~ 18.79 +-0.05", near(sdp_row.residual, 18.79, 0.05))])


def test_criterion_10b_relaxation_beats_shopm(capsys):
    sdp_row, shopm_row = sin_comparison().rows
    record(capsys, "10b", [
        (
            f"RES_sdp {sdp_row.residual:.4f} <= RES_shopm {shopm_row.residual:.4f}",
            sdp_row.residual <= shopm_row.residual + 1e-9,
        )
    ])


def test_criterion_10c_shopm_value(capsys):
    _, shopm_row = sin_comparison().rows
    mu = abs(shopm_row.lam)
    t = generate("sin-sym", 10, 3)
    bare = abs(shopm(t, hosvd_init(t)[0], fallback=False).value)
    record(capsys, "10c", [
        (f"SHOPM |mu| {mu:.4f} within 0.5 of 3.01 (bare recurrence ends at |mu| {bare:.4f})", near(mu, 3.01, 0.5))
    ])


def test_criterion_11a_exact_moment_roundtrip(capsys):
    rng = np.random.default_rng(11)
    worst = 0.0
    for n, d in [(2, 1), (3, 2), (4, 2), (3, 3), (5, 1)]:
        p = sym_relaxation(SymTensor.from_entries(n, 2 * d, {}))
        for _ in range(5):
            u = unit(rng.standard_normal(n))
            v = extract_sym(sym_moments(p, u), n, d).vectors[0]
            worst = max(worst, np.abs(v * np.sign(v @ u) - u).max())
    for dims in [(2, 2), (3, 2), (2, 3, 2), (4,)]:
        p = nonsym_relaxation(np.eye(int(np.prod(dims))), dims)
        for _ in range(5):
            us = [unit(rng.standard_normal(n)) for n in dims]
            vs = extract_nonsym(nonsym_moments(p, us), dims).vectors
            worst = max(worst, max(np.abs(v * np.sign(v @ u) - u).max() for v, u in zip(vs, us)))
    record(capsys, "11a", [(f"roundtrip max deviation {worst:.1e} < 1e-10", worst < 1e-10)])


def test_criterion_11b_pythagoras(capsys):
    rng = np.random.default_rng(12)
    worst = 0.0
    for k in range(100):
        if k % 2:
            dims = tuple(rng.integers(1, 5, size=rng.integers(2, 5)))
            t = GenTensor(rng.standard_normal(dims))
            r = approx_nonsym(t) if t.m >= 2 and k % 10 == 1 else None
            us = [unit(rng.standard_normal(n)) for n in dims]
            lam = float(np.einsum(t.data, list(range(t.m)), *sum(([u, [j]] for j, u in enumerate(us)), []), []))
            if r is not None:
                us, lam = list(r.factors), r.lam
            res = residual(t, Rank1Tensor(lam, us))
        else:
            n, m = int(rng.integers(1, 5)), int(rng.integers(2, 5))
            base = SymTensor.from_function(n, m, lambda idx: 0.0)
            t = SymTensor(n, m, base.indices, rng.standard_normal(len(base.indices)))
            u = unit(rng.standard_normal(n))
            lam = eval_form(t, u)
            res = residual(t, Rank1Tensor.symmetric(lam, u, m))
        tn = norm(t)
        worst = max(worst, abs(res**2 + lam**2 - tn**2) / tn**2)
    record(capsys, "11b", [(f"100 tensors, max relative error {worst:.1e} <= 1e-6", worst <= 1e-6)])


def reference_relaxations():
    for name in ["cubic_2", "cubic_3a", "cubic_3b"]:
        lifted, _ = lift_odd(load(name))
        yield name, sym_relaxation(lifted)
    for sense in ("max", "min"):
        yield f"quartic_3 {sense}", sym_relaxation(load("quartic_3"), sense)
        yield f"motzkin {sense}", sym_relaxation(generate("motzkin-6", 3, 6), sense)
        yield f"arctan n=5 {sense}", sym_relaxation(generate("arctan-4", 5, 4), sense)
    for name, t in [
        ("sparse_2222", load("sparse_2222")),
        ("dense_333", load("dense_333")),
        ("biquadratic", generate("biquadratic-3x3x9", 3, 3)),
    ]:
        yield name, nonsym_relaxation(*squared_form(t.transpose(largest_mode_last(t.dims))))
    for family in ["alt-reciprocal-3", "sin-sym"]:
        lifted, _ = lift_odd(generate(family, 10, 3))
        yield f"{family} n=10", sym_relaxation(lifted)


def test_criterion_11c_solver_accuracy(capsys):
    checks = []
    for name, p in reference_relaxations():
        sol = solve(to_std(p)[0])
        ok = sol.status == "optimal" and sol.gap <= 1e-7 and max(sol.primal_infeas, sol.dual_infeas) <= 1e-8
        checks.append((f"{name} gap {sol.gap:.1e} infeas {max(sol.primal_infeas, sol.dual_infeas):.1e}", ok))
    record(capsys, "11c", checks)


def test_criterion_11d_grid_oracle(capsys):
    rng = np.random.default_rng(14)
    checks = []
    for n, m in [(2, 3), (2, 4), (2, 5), (2, 6), (3, 4)]:
        base = SymTensor.from_function(n, m, lambda idx: 0.0)
        t = SymTensor(n, m, base.indices, rng.standard_normal(len(base.indices)))
        r = approx_auto(t)
        oracle = max(abs(eval_form(t, x)) for x in sphere_grid(n))
        ok = r.ubd >= oracle - 1e-9 and (not r.certified or r.ubd <= oracle + 1e-2)
        checks.append((f"n={n} m={m} bound {r.ubd:.6f} oracle {oracle:.6f} certified {r.certified}", ok))
    record(capsys, "11d", checks)


def test_criterion_11e_gradient(capsys):
    rng = np.random.default_rng(15)
    worst = 0.0
    for n in range(1, 5):
        for m in range(1, 6):
            base = SymTensor.from_function(n, m, lambda idx: 0.0)
            t = SymTensor(n, m, base.indices, rng.standard_normal(len(base.indices)))
            x = rng.standard_normal(n)
            h = 1e-5
            fd = np.array([(eval_form(t, x + h * e) - eval_form(t, x - h * e)) / (2 * h) for e in np.eye(n)])
            g = grad_form(t, x)
            worst = max(worst, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
    record(capsys, "11e", [(f"max relative gradient error {worst:.1e} <= 1e-6", worst <= 1e-6)])


def test_criterion_11f_equivariance(capsys):
    rng = np.random.default_rng(16)
    checks = []
    t = GenTensor(rng.standard_normal((2, 3, 4)))
    a = approx_nonsym(t)
    for perm in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        b = approx_nonsym(t.transpose(perm))
        dl, dr = abs(a.lam - b.lam), abs(a.residual - b.residual)
        checks.append((f"mode permutation {perm}: dlambda {dl:.1e} dresidual {dr:.1e}", dl <= 1e-8 and dr <= 1e-8))
    s = load("cubic_3b")
    base = approx_auto(s)
    for c in (0.1, 7.0):
        r = approx_auto(s.scaled(c))
        dl = abs(r.lam - c * base.lam) / (c * abs(base.lam))
        du = np.abs(r.u - base.u).max()
        checks.append((f"scaling by {c}: relative dlambda {dl:.1e}, dfactor {du:.1e}", dl <= 1e-8 and du <= 1e-6))
    record(capsys, "11f", checks)

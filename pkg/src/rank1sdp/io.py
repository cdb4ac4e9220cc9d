"""Text formats: ``.tns`` tensors, JSON/text reports, SDPA sparse dumps.

A ``.tns`` file starts with ``tensor <m> <n1> ... <nm> <symmetric|general>``
followed by one ``i1 ... im value`` line per nonzero entry (1-based).
Blank lines and ``#`` comments are ignored. Symmetric files list each
orbit once with sorted indices.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np
from scipy import sparse

from .pipeline import Branch, Rank1Report, SolverStats
from .sdp import StdSdp
from .tensor import GenTensor, SymTensor

__all__ = [
    "TensorFormatError",
    "read_tensor",
    "parse_tensor",
    "write_tensor",
    "format_tensor",
    "write_report",
    "parse_report",
    "write_sdpa",
    "read_sdpa",
]


class TensorFormatError(ValueError):
    """Malformed tensor text; the message starts with ``line <k>:``."""

    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _lines(text: str):
    for k, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield k, body.split()


def parse_tensor(text: str) -> SymTensor | GenTensor:
    rows = _lines(text)
    try:
        k, head = next(rows)
    except StopIteration:
        raise TensorFormatError(1, "missing header") from None
    if len(head) < 3 or head[0] != "tensor":
        raise TensorFormatError(k, "header must read 'tensor <m> <n1> ... <nm> <symmetric|general>'")
    try:
        m = int(head[1])
        dims = tuple(int(x) for x in head[2:-1])
    except ValueError:
        raise TensorFormatError(k, "order and dimensions must be integers") from None
    kind = head[-1]
    if kind not in ("symmetric", "general"):
        raise TensorFormatError(k, f"unknown storage kind {kind!r}")
    if m < 1 or len(dims) != m or any(n < 1 for n in dims):
        raise TensorFormatError(k, f"expected {m} positive dimensions, got {list(dims)}")
    sym = kind == "symmetric"
    if sym and len(set(dims)) != 1:
        raise TensorFormatError(k, "symmetric tensors need equal dimensions")

    entries: dict[tuple[int, ...], float] = {}
    for k, parts in rows:
        if len(parts) != m + 1:
            raise TensorFormatError(k, f"expected {m} indices and a value")
        try:
            idx = tuple(int(x) for x in parts[:m])
            val = float(parts[m])
        except ValueError:
            raise TensorFormatError(k, "indices must be integers and the value a real number") from None
        if not math.isfinite(val):
            raise TensorFormatError(k, "value is not finite")
        if any(not 1 <= i <= n for i, n in zip(idx, dims)):
            raise TensorFormatError(k, f"index {idx} out of range for dims {dims}")
        if sym and list(idx) != sorted(idx):
            raise TensorFormatError(k, f"symmetric index {idx} is not sorted")
        if idx in entries:
            raise TensorFormatError(k, f"duplicate index {idx}")
        entries[idx] = val

    if sym:
        return SymTensor.from_entries(dims[0], m, entries)
    data = np.zeros(dims)
    for idx, val in entries.items():
        data[tuple(i - 1 for i in idx)] = val
    return GenTensor(data)


def read_tensor(path: str | os.PathLike) -> SymTensor | GenTensor:
    return parse_tensor(Path(path).read_text())


def format_tensor(t: SymTensor | GenTensor) -> str:
    """``.tns`` text listing nonzero entries with round-trip precision."""
    if isinstance(t, SymTensor):
        lines = [f"tensor {t.m} {' '.join([str(t.n)] * t.m)} symmetric"]
        for idx, v in zip(t.indices.tolist(), t.values.tolist()):
            if v != 0.0:
                lines.append(" ".join(str(i + 1) for i in idx) + f" {v!r}")
    else:
        lines = [f"tensor {t.m} {' '.join(map(str, t.dims))} general"]
        for idx in zip(*np.nonzero(t.data)):
            lines.append(" ".join(str(int(i) + 1) for i in idx) + f" {float(t.data[idx])!r}")
    return "\n".join(lines) + "\n"


def write_tensor(t: SymTensor | GenTensor, path: str | os.PathLike) -> None:
    Path(path).write_text(format_tensor(t))


def _num(x: float):
    return float(x) if math.isfinite(x) else None


def _report_dict(r: Rank1Report, timing: bool) -> dict:
    out = {"lambda": r.lam}
    if r.factors:
        out["factors"] = [f.tolist() for f in r.factors]
    out.update(
        residual=r.residual,
        ubd=_num(r.ubd),
        aprxerr=_num(r.aprxerr),
        rho=r.rho,
        certified=r.certified,
        pencil_rank=r.pencil_rank,
        method=r.method,
        solver={
            "iterations": r.solver.iterations,
            "gap": r.solver.gap,
            "seconds": r.solver.seconds if timing else None,
            "status": r.solver.status,
        },
        branches=[
            {"sense": b.sense, "sdp_value": b.sdp_value, "pencil_rank": b.pencil_rank, "lambda": b.lam}
            for b in r.branches
        ],
    )
    return out


def _text(r: Rank1Report) -> str:
    m = len(r.factors)
    lines = []
    if not r.factors:
        lines.append("The best rank-1 approximation is the zero tensor (lambda = 0.0000).")
    else:
        vec = lambda v: "(" + ", ".join(f"{x:.4f}" for x in v) + ")"
        if len({f.tobytes() for f in r.factors}) == 1:
            lines.append(f"rank-1 tensor lambda * u^(x){m} with")
            lines.append(f"lambda = {r.lam:.4f}, u = {vec(r.factors[0])}")
        else:
            lines.append("rank-1 tensor lambda * " + " (x) ".join(f"u{j + 1}" for j in range(m)) + " with")
            lines.append(f"lambda = {r.lam:.4f}, " + ", ".join(f"u{j + 1} = {vec(f)}" for j, f in enumerate(r.factors)))
    for b in r.branches:
        lines.append(f"{b.sense} relaxation value {b.sdp_value:.4f}, pencil rank {b.pencil_rank}")
    if r.certified:
        lines.append("The pencil has rank one, so this is a best rank-1 approximation.")
    elif r.factors:
        lines.append(f"Not certified (pencil rank {r.pencil_rank}).")
    aprx = "n/a" if not math.isfinite(r.aprxerr) else f"{r.aprxerr:.1e}"
    ubd = "n/a" if not math.isfinite(r.ubd) else f"{r.ubd:.4f}"
    lines.append(f"aprxerr = {aprx}, ubd = {ubd}, rho = {r.rho:.4f}, residual = {r.residual:.4f}")
    lines.append(f"method = {r.method}, solver status = {r.solver.status}, iterations = {r.solver.iterations}")
    return "\n".join(lines) + "\n"


def write_report(r: Rank1Report | list[Rank1Report], fmt: str = "json", timing: bool = True) -> bytes:
    """Serialize one report (or a list of comparison rows).

    JSON keeps full precision and writes non-finite numbers as ``null``;
    text prints four decimals.
    """
    many = isinstance(r, (list, tuple))
    rows = list(r) if many else [r]
    if fmt == "json":
        body = [_report_dict(x, timing) for x in rows]
        return (json.dumps(body if many else body[0], indent=2) + "\n").encode()
    if fmt == "text":
        return "\n".join(_text(x) for x in rows).encode()
    raise ValueError("format must be 'json' or 'text'")


def _real(x) -> float:
    return math.nan if x is None else float(x)


def parse_report(data: bytes | str) -> Rank1Report | list[Rank1Report]:
    obj = json.loads(data)
    if isinstance(obj, list):
        return [_from_dict(o) for o in obj]
    return _from_dict(obj)


def _from_dict(o: dict) -> Rank1Report:
    s = o.get("solver", {})
    return Rank1Report(
        lam=float(o["lambda"]),
        factors=tuple(np.asarray(f, dtype=float) for f in o.get("factors", [])),
        residual=float(o["residual"]),
        ubd=_real(o["ubd"]),
        aprxerr=_real(o["aprxerr"]),
        rho=float(o["rho"]),
        certified=bool(o["certified"]),
        pencil_rank=int(o["pencil_rank"]),
        method=o["method"],
        solver=SolverStats(
            iterations=int(s.get("iterations", 0)),
            gap=float(s.get("gap", 0.0)),
            seconds=_real(s.get("seconds")),
            status=s.get("status", "none"),
        ),
        branches=tuple(
            Branch(b["sense"], float(b["sdp_value"]), int(b["pencil_rank"]), float(b["lambda"]))
            for b in o.get("branches", [])
        ),
    )


def _upper(P: StdSdp):
    """Per-constraint upper-triangle entries ``(con, i, j, value)`` with duplicates summed."""
    keep = P.row <= P.col
    a = sparse.coo_matrix(
        (P.val[keep], (P.con[keep], P.row[keep] * P.N + P.col[keep])), shape=(P.M, P.N * P.N)
    ).tocsr()
    a.sum_duplicates()
    a.eliminate_zeros()
    coo = a.tocoo()
    return coo.row, coo.col // P.N, coo.col % P.N, coo.data


def write_sdpa(P: StdSdp, path: str | os.PathLike, comment: str = "") -> None:
    """SDPA sparse format with ``F0 = C``, ``F_i = A_i`` and ``c = b``.

    SDPA's dual problem ``max F0 . Y s.t. F_i . Y = c_i`` is then this one.
    """
    lines = [f'"{comment}"', str(P.M), "1", str(P.N)]
    lines.append(" ".join(repr(float(x)) for x in P.b) if P.M else "")
    ci, cj = np.nonzero(np.triu(P.C))
    for i, j in zip(ci, cj):
        lines.append(f"0 1 {i + 1} {j + 1} {float(P.C[i, j])!r}")
    for k, i, j, v in zip(*_upper(P)):
        lines.append(f"{k + 1} 1 {i + 1} {j + 1} {float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sdpa(path: str | os.PathLike) -> StdSdp:
    """Read a single-block SDPA sparse file written by :func:`write_sdpa`."""
    toks = []
    for raw in Path(path).read_text().splitlines():
        body = raw.strip()
        if not body or body[0] in '"*':
            continue
        toks.append(body.replace(",", " ").replace("{", " ").replace("}", " ").split())
    M = int(toks[0][0])
    if int(toks[1][0]) != 1:
        raise ValueError("only single-block SDPA files are supported")
    N = abs(int(toks[2][0]))
    start = 3
    b = np.zeros(M)
    if M:
        b = np.array([float(x) for x in toks[3]])
        start = 4
    C = np.zeros((N, N))
    con, row, col, val = [], [], [], []
    for t in toks[start:]:
        k, _, i, j, v = int(t[0]), t[1], int(t[2]) - 1, int(t[3]) - 1, float(t[4])
        if k == 0:
            C[i, j] = C[j, i] = v
            continue
        con.append(k - 1), row.append(i), col.append(j), val.append(v)
        if i != j:
            con.append(k - 1), row.append(j), col.append(i), val.append(v)
    return StdSdp(
        C,
        np.asarray(con, dtype=np.int64),
        np.asarray(row, dtype=np.int64),
        np.asarray(col, dtype=np.int64),
        np.asarray(val, dtype=float),
        b,
    )

"""Benchmark suites with embedded reference values.

Each suite reruns a published experiment and compares every cell with the
reference table, so ``chebcert bench`` doubles as a regression harness.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .basis import BoxDomain, build_basis
from .certify import STRONGLY_UNIQUE, OPTIMAL
from .errors import ChebcertError
from .extrema import extended_signature
from .implicit import dextar_domain, dextar_target
from .newton import NewtonSystem, NewtonVariables, newton_solve
from .pipeline import SolveConfig, approximate, final_certificate
from .target import HornerTarget, airy_target, runge_target


@dataclass(frozen=True)
class Expected:
    deg: int
    n: int
    act: int
    ext: int
    zero: int
    discrete: float
    newton: float
    global_: float
    source: str


RUNGE_SOURCE = "Runge function table, sub-table m={m} ({grid}^{m} samples)"
DEXTAR_SOURCE = "DexTAR inverse geometric model table, theta_{l} row, degree {deg}"

# m -> (samples per axis, rows)
RUNGE_TABLE = {
    2: (36, [(1, 3, 4, 4, 0, 0.308467, 0.310345, 0.310345),
             (2, 6, 7, 7, 0, 0.165171, 0.165451, 0.165451),
             (3, 10, 11, 9, 0, 0.091215, 0.091658, 0.091658),
             (4, 15, 15, 14, 0, 0.062767, 0.062844, 0.062844),
             (5, 21, 21, 16, 0, 0.039094, 0.039866, 0.039866)]),
    3: (10, [(1, 4, 5, 5, 0, 0.351315, 0.352793, 0.352793),
             (2, 10, 11, 11, 2, 0.208558, 0.221605, 0.221605)]),
    4: (6, [(1, 5, 6, 6, 0, 0.375742, 0.377351, 0.377351),
            (2, 15, 16, 16, 1, 0.247837, 0.258191, 0.258191)]),
    5: (4, [(1, 6, 7, 7, 0, 0.392578, 0.393671, 0.393671)]),
    6: (3, [(1, 7, 8, 8, 0, 0.397987, 0.405442, 0.405442)]),
    7: (2, [(1, 8, 9, 9, 0, 0.40974, 0.414405, 0.414405)]),
    8: (2, [(1, 9, 10, 10, 0, 0.418580, 0.421501, 0.421501)]),
    9: (2, [(1, 10, 11, 11, 0, 0.42545, 0.427283, 0.427283)]),
    10: (2, [(1, 11, 12, 12, 0, 0.430968, 0.432102, 0.432102)]),
}

# (degree, output) -> row; 36^2 samples on the DexTAR box
DEXTAR_TABLE = {
    (1, 1): (1, 3, 4, 4, 0, 0.049361, 0.049362, 0.049362),
    (1, 2): (1, 3, 4, 4, 0, 0.150606, 0.150664, 0.150664),
    (2, 1): (2, 6, 7, 6, 0, 0.007901, 0.007904, 0.007904),
    (2, 2): (2, 6, 7, 7, 0, 0.054600, 0.054646, 0.054646),
    (3, 1): (3, 10, 11, 9, 0, 0.001379, 0.001380, 0.001380),
    (3, 2): (3, 10, 11, 9, 0, 0.017893, 0.017913, 0.017913),
    (4, 1): (4, 15, 16, 13, 0, 0.000237, 0.000237, 0.000237),
    (4, 2): (4, 15, 16, 13, 0, 0.006038, 0.006047, 0.006047),
}
DEXTAR_GRID = 36

# Airy example: degree 6 on [-2, 2], coefficients listed from x^6 down to x^0
AIRY_SOURCE = "Airy evaluation-error example (degree 6, 81 samples)"
AIRY_DOMAIN = (-2.0, 2.0)
AIRY_P0_DESC = (0.00173, -0.0026, -0.02068, 0.06367, -0.00088, -0.26085, 0.35516)
AIRY_P1_DESC = (0.0018, -0.00277, -0.02113, 0.06447, -0.00027, -0.26164, 0.35504)
AIRY_EXTREMES = (-2.0, -1.7943, -1.1847, -0.3875, 0.4998, 1.2803, 1.8159, 2.0)
AIRY_LAMBDA = (0.0597, 0.1188, 0.128, 0.14, 0.1476, 0.1563, 0.1648, 0.0848)
AIRY_ITERATIONS = 5
AIRY_U = 2.0**-12  # reproduces p1; the roundoff unit is not stated with the example


def runge_expected(m: int) -> list[Expected]:
    grid, rows = RUNGE_TABLE[m]
    return [Expected(*r, source=RUNGE_SOURCE.format(m=m, grid=grid)) for r in rows]


def dextar_expected(deg: int, output: int) -> Expected:
    return Expected(*DEXTAR_TABLE[(deg, output)], source=DEXTAR_SOURCE.format(l=output, deg=deg))


@dataclass
class Cell:
    name: str
    got: object
    expected: object
    verdict: str  # "ok", "differs" or "n/a"


@dataclass
class BenchRow:
    suite: str
    label: str
    status: str
    cells: list = field(default_factory=list)
    failure: Optional[str] = None
    source: str = ""

    @property
    def ok(self) -> bool:
        return all(c.verdict != "differs" for c in self.cells)

    def to_dict(self) -> dict:
        return asdict(self)


def _num_cell(name, got, want, *, abs_tol=None, rel_tol=None) -> Cell:
    if got is None or want is None or not np.isfinite(got):
        return Cell(name, got, want, "n/a")
    tol = abs_tol if abs_tol is not None else rel_tol * abs(want)
    return Cell(name, float(got), want, "ok" if abs(got - want) <= tol else "differs")


def _int_cell(name, got, want) -> Cell:
    if got is None:
        return Cell(name, None, want, "n/a")
    return Cell(name, int(got), want, "ok" if int(got) == want else "differs")


def compare_row(row: dict, exp: Expected, *, abs_tol=None, rel_tol=None) -> list[Cell]:
    cells = [_int_cell("n", row["n"], exp.n), _int_cell("act", row["act"], exp.act),
             _int_cell("ext", row["ext"], exp.ext), _int_cell("zero", row["zero"], exp.zero)]
    for key, want in (("discrete", exp.discrete), ("newton", exp.newton), ("global", exp.global_)):
        cells.append(_num_cell(key, row[key], want, abs_tol=abs_tol, rel_tol=rel_tol))
    return cells


def run_runge_case(m: int, deg: int, oracle_per_dim: Optional[int] = None):
    grid, _ = RUNGE_TABLE.get(m, (36, None))
    cfg = SolveConfig(grid=(grid,), oracle_per_dim=oracle_per_dim)
    return approximate(runge_target(m), build_basis(m, deg), BoxDomain.unit(m), cfg)


def run_dextar_case(deg: int, output: int, oracle_per_dim: int = 101):
    cfg = SolveConfig(grid=(DEXTAR_GRID,), oracle_per_dim=oracle_per_dim)
    return approximate(dextar_target(output), build_basis(2, deg), dextar_domain(), cfg)


def _runge_row(args) -> BenchRow:
    m, exp = args
    res = run_runge_case(m, exp.deg)
    row = res.row()
    return BenchRow("runge", f"m={m} deg={exp.deg}", row["status"],
                    compare_row(row, exp, abs_tol=1e-4), res.failure, exp.source)


def _dextar_row(args) -> BenchRow:
    deg, output = args
    exp = dextar_expected(deg, output)
    res = run_dextar_case(deg, output)
    row = res.row()
    return BenchRow("dextar", f"theta{output} deg={deg}", row["status"],
                    compare_row(row, exp, rel_tol=5e-3), res.failure, exp.source)


def airy_start(u: float = AIRY_U):
    """Horner target, basis, domain and Newton start built from the reference p0."""
    target = HornerTarget(airy_target(), u)
    basis = build_basis(1, 6)
    domain = BoxDomain.interval(*AIRY_DOMAIN)
    a0 = np.array(AIRY_P0_DESC[::-1])
    X = np.array(AIRY_EXTREMES)[:, None]
    masks = np.zeros(len(AIRY_EXTREMES), dtype=int)
    masks[0], masks[-1] = -1, 1
    signs = extended_signature(target, basis, a0, X).signs
    return target, basis, domain, NewtonVariables(a0, X, np.array(AIRY_LAMBDA), masks, signs)


def run_airy(u: float = AIRY_U):
    """Newton from p0; returns (report, certificate, max |a - p1|)."""
    target, basis, domain, init = airy_start(u)
    rep = newton_solve(NewtonSystem(target, basis, domain, init))
    _, _, cert = final_certificate(target, basis, rep.final)
    p1 = np.array(AIRY_P1_DESC[::-1])
    return rep, cert, float(np.max(np.abs(rep.final.a - p1)))


def _airy_row(u: float) -> BenchRow:
    label = f"u=2^{np.log2(u):.0f}" if u > 0 else "u=0"
    try:
        rep, cert, dp1 = run_airy(u)
    except ChebcertError as exc:
        return BenchRow("airy", label, "Failed", [], f"{type(exc).__name__}: {exc}", AIRY_SOURCE)
    cells = [
        Cell("iterations", rep.iterations, AIRY_ITERATIONS, "ok" if rep.iterations <= 10 else "differs"),
        Cell("residual", rep.residual_history[-1], 1e-12, "ok" if rep.residual_history[-1] <= 1e-12 else "differs"),
        # coefficient agreement depends on the unstated roundoff unit: informational
        Cell("max|a-p1|", dp1, 1e-3, "ok" if dp1 <= 1e-3 else "n/a"),
    ]
    return BenchRow("airy", label, cert.status, cells, None, AIRY_SOURCE)


def run_suite(suite: str, jobs: int = 1, ms=None) -> list[BenchRow]:
    if suite == "runge":
        ms = sorted(RUNGE_TABLE) if ms is None else ms
        work, fn = [(m, e) for m in ms for e in runge_expected(m)], _runge_row
    elif suite == "dextar":
        work, fn = [(d, l) for d in range(1, 5) for l in (1, 2)], _dextar_row
    elif suite == "airy":
        work, fn = [AIRY_U, 2.0**-24, 2.0**-53, 0.0], _airy_row
    else:
        raise ValueError(f"unknown suite {suite!r}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, work))
    return [fn(w) for w in work]


def format_rows(rows: list[BenchRow]) -> str:
    lines = []
    for r in rows:
        cells = " ".join(
            f"{c.name}={c.got:.6g}" + ("" if c.verdict == "ok" else f"[{c.verdict}: {c.expected}]")
            if isinstance(c.got, float) else
            f"{c.name}={c.got}" + ("" if c.verdict == "ok" else f"[{c.verdict}: {c.expected}]")
            for c in r.cells
        )
        tail = f" failure={r.failure}" if r.failure else ""
        lines.append(f"{r.suite:7s} {r.label:16s} {r.status:15s} {cells}{tail}")
    return "\n".join(lines)


def certified(status: str) -> bool:
    return status in (OPTIMAL, STRONGLY_UNIQUE)

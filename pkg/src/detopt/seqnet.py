"""Closed forms for the fully open sequestration networks.

For ``X1+X2 -> 0, ..., X(n-1)+Xn -> 0, X1 -> m Xn`` with all flows, ``n`` odd,
the degenerate weight vector, its nullvector, and hence the rates and both
steady states are available in closed form. Tridiagonal minors (``daleth``)
and the nullvector are computed by their recurrences; the closed-form
generating-function expressions serve as cross-checks.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .engine import (
    Certificate,
    HypothesisWitness,
    Inconclusive,
    build_certificate,
    verify_certificate,
)
from .model import Network, build_sequestration, jacobian


class NonPositiveEtaLast(Inconclusive):
    """The last closed-form weight is not positive for these parameters."""


@dataclass(frozen=True)
class SeqParams:
    m: int
    n: int
    lam: float = 1.0
    eps: float = 0.1
    delta1: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        if int(self.n) != self.n or self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"n must be an odd integer >= 3, got {self.n!r}")
        if not self.lam > 0 or not self.eps > 0:
            raise ValueError("lambda and eps must be positive")
        if self.delta1 == 0:
            raise ValueError("delta1 must be nonzero")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def default(cls, m: int, n: int, **overrides) -> "SeqParams":
        """``eps = 0.1`` for ``n = 3`` and ``0.001`` otherwise, ``lambda = delta1 = 1``."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        overrides.setdefault("eps", 0.1 if n == 3 else 0.001)
        return cls(m, n, **overrides)


def daleth_recurrence(lam: float, eps: float, up_to: int) -> list[float]:
    """Leading principal minors of the tridiagonal ``(2 lam + eps, lam)`` matrix."""
    vals = [1.0, 2.0 * lam + eps]
    while len(vals) <= up_to:
        vals.append((2.0 * lam + eps) * vals[-1] - lam * lam * vals[-2])
    return vals[:up_to + 1]


def daleth_closed_form(lam: float, eps: float, i: int) -> float:
    if not eps > 0:
        raise ValueError("closed form needs eps > 0; use daleth_recurrence")
    c1 = math.sqrt(eps) * math.sqrt(eps + 4.0 * lam)
    c2 = eps + 2.0 * lam
    lo, hi = (c2 - c1) ** i, (c1 + c2) ** i
    return (-c2 * lo + c1 * lo + c2 * hi + c1 * hi) / (2.0 ** (i + 1) * c1)


def daleth_full(p: SeqParams) -> list[float]:
    """Minors 0..n-1 of the degenerate T matrix; the last row breaks the pattern."""
    vals = daleth_recurrence(p.lam, p.eps, p.n - 2)
    vals.append(vals[-1] * (p.lam * (p.m + 2) + p.eps) - p.lam ** 2 * vals[-2])
    return vals


def eta_last(p: SeqParams) -> float:
    d = daleth_full(p)
    m, lam, n = p.m, p.lam, p.n
    num = (m + 1) * (m * lam ** n + lam ** 2 * (m + 1) * d[n - 2])
    den = (lam * (m + 2) + p.eps) * d[n - 2] - lam ** 2 * d[n - 3]
    return num / den - lam * (m + 1)


def eta_zero_closed_form(p: SeqParams) -> np.ndarray:
    """Degenerate weights over the ``2n`` internal and outflow reactions."""
    last = eta_last(p)
    if not last > 0:
        raise NonPositiveEtaLast(f"last weight is {last:g} for m={p.m}, n={p.n}, "
                                 f"lambda={p.lam:g}, eps={p.eps:g}")
    n, lam = p.n, p.lam
    eta = np.full(2 * n, p.eps)
    eta[:n] = lam
    eta[n - 2] = (p.m + 1) * lam
    eta[2 * n - 1] = last
    return eta


def t_zero_matrix(p: SeqParams, eta_last_value: float) -> np.ndarray:
    """The degenerate T matrix written out directly, last diagonal entry free."""
    n, lam, m, eps = p.n, p.lam, p.m, p.eps
    t = np.zeros((n, n))
    for i in range(n - 1):
        t[i, i] = 2 * lam + eps
        t[i, i + 1] = t[i + 1, i] = lam
    t[n - 2, n - 2] = lam * (m + 2) + eps
    t[n - 2, n - 1] = t[n - 1, n - 2] = lam * (m + 1)
    t[n - 1, n - 1] = lam * (m + 1) + eta_last_value
    t[n - 1, 0] = -m * lam
    return t


def det_t_eta_zero_expansion(p: SeqParams, eta_last_value: float) -> float:
    """Bottom-row cofactor expansion of ``det(t_zero_matrix(p, eta_last_value))``."""
    d = daleth_full(p)
    m, lam, n = p.m, p.lam, p.n
    return ((-1) ** n * m * (m + 1) * lam ** n
            - lam ** 2 * (m + 1) ** 2 * d[n - 2]
            + (lam * (m + 1) + eta_last_value) * d[n - 1])


def delta_recurrence(p: SeqParams) -> np.ndarray:
    n, lam, m, eps = p.n, p.lam, p.m, p.eps
    d = [0.0, float(p.delta1)]
    for _ in range(2, n):
        d.append(-(2 * lam + eps) / lam * d[-1] - d[-2])
    d.append(-(lam * (m + 2) + eps) / (lam * (m + 1)) * d[n - 1] - d[n - 2] / (m + 1))
    return np.array(d[1:])


def delta_closed_form(p: SeqParams, k: int) -> float:
    """Coordinate ``k`` (1-based, ``k <= n-1``) of the nullvector."""
    if not 1 <= k <= p.n - 1:
        raise ValueError(f"k must lie in 1..{p.n - 1}")
    lam, eps = p.lam, p.eps
    s = math.sqrt(4 * lam * eps + eps * eps)
    c = 2 * lam + eps
    return p.delta1 * lam * ((s - c) ** k - (-s - c) ** k) / (2 ** k * lam ** k * s)


def default_witness(m: int, n: int) -> HypothesisWitness:
    """Internal reactions weighted ``(1, ..., 1, m+1, 1)``."""
    weights = [1.0] * n
    weights[n - 2] = m + 1.0
    return HypothesisWitness(tuple(range(n)), tuple(weights))


def recognize(net: Network) -> tuple[int, int] | None:
    """``(m, n)`` if ``net`` is a fully open sequestration network in canonical order."""
    n = net.species_count
    if n < 2 or net.reaction_count != 3 * n:
        return None
    last = net.reactions[n - 1].product.terms
    if len(last) != 1 or last[0][0] != n - 1:
        return None
    m = last[0][1]
    try:
        ref = build_sequestration(m, n)
    except ValueError:
        return None
    return (m, n) if ref.reactions == net.reactions else None


def closed_form_certificate(p: SeqParams, verify_tol_det: float = 1e-9) -> Certificate:
    net = build_sequestration(p.m, p.n)
    cert = build_certificate(net, eta_zero_closed_form(p), delta_recurrence(p), scaling=1.0)
    diag = verify_certificate(cert, tol_det=verify_tol_det)
    diag.scaling = cert.diagnostics.scaling
    return replace(cert, diagnostics=diag)


# n = 3 with lambda = 1, eps = 0.1, delta1 = 1, written out explicitly.

def rates_n3(m: int) -> np.ndarray:
    if m < 2:
        raise ValueError("m must be >= 2")
    e = math.e
    r1 = -1.1 / (math.exp(-1.1) - 1)
    r2 = 1.31 / (math.exp(1.31 / (m + 1)) - 1)
    r3 = 1 / (e - 1)
    r4 = 0.1 / (e - 1)
    r5 = -0.21 / (math.exp(-2.1) - 1)
    r6 = (m - 1.31) / (math.exp((2.1 * m + 3.41) / (m + 1)) - 1)
    r7 = r1 + r3 + r4
    r8 = r1 + r2 + r5
    r9 = r2 + r6 - m * r3
    return np.array([r1, r2, r3, r4, r5, r6, r7, r8, r9])


def x_sharp_n3(m: int) -> np.ndarray:
    return np.array([math.e, math.exp(-2.1), math.exp((2.1 * m + 3.41) / (m + 1))])


def jac_dets_n3_formula(m: int) -> tuple[float, float]:
    """Expanded 3x3 Jacobian determinants at ``(1,1,1)`` and at ``x#``."""
    r1, r2, r3, r4, r5, r6 = rates_n3(m)[:6]
    x1, x2, x3 = x_sharp_n3(m)
    d1 = (r2 * r1 * r3 * m
          - (r2 + r6) * (r1 * r3 + r1 * r4 + r1 * r5 + r3 * r5 + r4 * r5)
          - r2 * r6 * (r1 + r3 + r4))
    d2 = (r2 * x2 * ((r1 * x2 + r3 + r4) * (r2 * x3) + r1 * x1 * m * r3)
          - (r2 * x2 + r6) * (r1 * x2 + r3 + r4) * (r1 * x1 + r2 * x3 + r5)
          + (r2 * x2 + r6) * (r1 * x1 * r1 * x2))
    return d1, d2


TABLE1_D1 = {2: 0.336, 3: 2.784, 4: 6.525}
TABLE1_D2 = {2: -1.063, 3: -3.811, 4: -7.85, 5: -13.19, 6: -19.8, 7: -27.71, 8: -36.89,
             9: -47.36, 10: -59.11, 11: -72.14, 12: -86.4, 13: -102.0, 14: -118.9,
             15: -137.1, 16: -156.5, 17: -177.2, 18: -199.2, 19: -222.5}


@dataclass
class TableRow:
    m: int
    quantity: str
    printed: float
    computed: float

    @property
    def tolerance(self) -> float:
        return 0.005 * max(1.0, abs(self.printed))

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.printed) <= self.tolerance


def reproduce_table1() -> list[TableRow]:
    rows = []
    for m, printed in TABLE1_D1.items():
        rows.append(TableRow(m, "D1", printed, jac_dets_n3_formula(m)[0]))
    for m, printed in TABLE1_D2.items():
        rows.append(TableRow(m, "D2", printed, jac_dets_n3_formula(m)[1]))
    return rows


@dataclass
class Bracket:
    which: str  # "star" or "sharp"
    lo: float
    hi: float
    det_lo: float
    det_hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def verified(self) -> bool:
        return self.det_lo * self.det_hi < 0


@dataclass
class SweepResult:
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    skipped: list[tuple[float, str]] = field(default_factory=list)
    brackets: list[Bracket] = field(default_factory=list)

    def of(self, which: str) -> list[Bracket]:
        return [b for b in self.brackets if b.which == which]


def sweep_dets(m: int, n: int, lam: float, eps: float, delta1: float = 1.0,
               hold_sharp_eps: float | None = None) -> tuple[float, float]:
    """Jacobian determinants at both steady states, as functions of ``eps``.

    With ``hold_sharp_eps`` the second point is frozen at the value it takes
    for that ``eps``. It is then generally not a steady state of the swept
    system; this mode exists to compare against curves drawn that way.
    """
    p = SeqParams(m, n, lam, eps, delta1)
    cert = build_certificate(build_sequestration(m, n), eta_zero_closed_form(p),
                             delta_recurrence(p), scaling=1.0)
    x_sharp = cert.x_sharp
    if hold_sharp_eps is not None:
        x_sharp = np.exp(delta_recurrence(SeqParams(m, n, lam, hold_sharp_eps, delta1)))
    net = cert.network
    return (float(np.linalg.det(jacobian(net, cert.rates, cert.x_star))),
            float(np.linalg.det(jacobian(net, cert.rates, x_sharp))))


def epsilon_sweep(m: int = 2, n: int = 3, lam: float = 1.0,
                  eps_range: tuple[float, float] = (0.05, 1.3), grid_steps: int = 500,
                  width: float = 1e-6, delta1: float = 1.0,
                  hold_sharp_eps: float | None = None) -> SweepResult:
    """Bracket the ``eps`` values where either steady state turns degenerate.

    Grid points where no valid certificate exists are skipped and recorded;
    sign changes are only bracketed between adjacent valid grid points.
    """
    lo, hi = eps_range
    if not 0 < lo < hi:
        raise ValueError("eps range must satisfy 0 < lo < hi")
    result = SweepResult()
    grid = np.linspace(lo, hi, grid_steps + 1)
    values: list[tuple[float, float] | None] = []
    for eps in grid:
        try:
            dets = sweep_dets(m, n, lam, float(eps), delta1, hold_sharp_eps)
        except (Inconclusive, ValueError) as exc:
            result.skipped.append((float(eps), str(exc)))
            values.append(None)
            continue
        result.samples.append((float(eps), *dets))
        values.append(dets)

    for j, which in enumerate(("star", "sharp")):
        f = lambda e: sweep_dets(m, n, lam, e, delta1, hold_sharp_eps)[j]
        for i in range(len(grid) - 1):
            if values[i] is None or values[i + 1] is None:
                continue
            fa, fb = values[i][j], values[i + 1][j]
            if fa == 0 or fa * fb >= 0:
                continue
            a, b = float(grid[i]), float(grid[i + 1])
            while b - a > width:
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fm == 0:
                    a = b = mid
                    fa = fb = 0.0
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = mid, fm
                else:
                    b, fb = mid, fm
            result.brackets.append(Bracket(which, a, b, fa, fb))
    return result


@dataclass
class ScanCell:
    m: int
    n: int
    det_star: float | None
    det_sharp: float | None
    both_nonzero: bool
    residual: float | None = None
    error: str | None = None


def small_mn_scan(m_range: Iterable[int] = range(2, 6), n_set: Iterable[int] = (5, 7, 9, 11),
                  lam: float = 1.0, eps: float | None = None, delta1: float = 1.0,
                  tol_det: float = 1e-9) -> list[ScanCell]:
    """Closed-form certificates over a grid of ``(m, n)``; failures are recorded."""
    cells = []
    for n in n_set:
        for m in m_range:
            try:
                p = SeqParams.default(m, n, lam=lam, eps=eps, delta1=delta1)
                cert = closed_form_certificate(p, verify_tol_det=tol_det)
            except (Inconclusive, ValueError) as exc:
                cells.append(ScanCell(m, n, None, None, False, error=str(exc)))
                continue
            d = cert.diagnostics
            cells.append(ScanCell(m, n, d.det_star, d.det_sharp,
                                  bool(d.nondegenerate and d.passed),
                                  residual=max(d.residual_star, d.residual_sharp)))
    return cells


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def scan_csv(cells: Sequence[ScanCell], n: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "detStar", "detSharp"])
    for c in cells:
        if c.n == n:
            writer.writerow([c.m, _fmt(c.det_star), _fmt(c.det_sharp)])
    return buf.getvalue()


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eps", "detStar", "detSharp"])
    for eps, ds, dh in result.samples:
        writer.writerow([_fmt(eps), _fmt(ds), _fmt(dh)])
    return buf.getvalue()


@dataclass
class BoundsReport:
    m_max: int
    violations: list[str] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_bounds(m_max: int = 200) -> BoundsReport:
    """Check the rate and steady-state bounds for the ``n = 3`` rates over integer m."""
    if m_max < 20:
        raise ValueError("m_max must be at least 20")
    report = BoundsReport(m_max)
    x3 = lambda m: x_sharp_n3(m)[2]
    floor = math.exp(2.1)

    def check(ok: bool, msg: str):
        report.checked += 1
        if not ok:
            report.violations.append(msg)

    for m in range(2, m_max + 1):
        r = rates_n3(m)
        r2, r6, r9 = r[1], r[5], r[8]
        check(m + 1 > r2 >= m, f"m={m}: r2={r2!r} outside [m, m+1)")
        check(0.14 * m > r6, f"m={m}: r6={r6!r} >= 0.14m")
        if m >= 20:
            check(r6 > 0.13 * m - 0.5, f"m={m}: r6={r6!r} <= 0.13m - 0.5")
        check(floor < x3(m) <= x3(2), f"m={m}: x3#={x3(m)!r} outside (e^2.1, x3#(2)]")
        if m > 2:
            check(x3(m) < x3(m - 1), f"m={m}: x3# not decreasing")
        check(r9 > 0, f"m={m}: r9={r9!r} not positive")
    return report


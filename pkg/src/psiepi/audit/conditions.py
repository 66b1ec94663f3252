"""Independence and non-signalling checks on probability tables.

Each checker works in one of two modes:

* absolute (``tol`` given): the largest deviation between conditional
  probabilities must not exceed ``tol``.  Exact ``Fraction`` tables are
  compared exactly.
* statistical (``tol=None``, table has counts): every comparison is turned
  into a z-score and must stay within ``sigma`` standard errors.  Cells whose
  conditioning count is below ``min_count`` are skipped; if nothing is left the
  verdict is inconclusive.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .tables import ProbabilityTable, condition

SIGMA = 4.0
WITNESS_SIGMA = 5.0
MIN_COUNT = 100
ROUNDOFF = 1e-12


@dataclass
class ConditionVerdict:
    condition: str
    max_deviation: float
    tolerance: float
    units: str  # "probability" or "sigma"
    status: str  # "pass", "fail" or "inconclusive"
    max_abs_deviation: float
    cells_checked: int = 0
    cells_skipped: int = 0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def witness(self, sigma: float = WITNESS_SIGMA) -> bool:
        """True when the worst cell is a statistically significant violation."""
        if self.units == "sigma":
            return self.status == "fail" and self.max_deviation >= sigma
        return self.status == "fail"

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "status": self.status,
            "max_deviation": _num(self.max_deviation),
            "tolerance": _num(self.tolerance),
            "units": self.units,
            "max_abs_deviation": _num(self.max_abs_deviation),
            "cells_checked": self.cells_checked,
            "cells_skipped": self.cells_skipped,
            "detail": self.detail,
        }


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


@dataclass
class _Cell:
    """One comparison between a conditional probability and its reference."""

    clause: str
    where: dict
    value: object
    reference: object
    n: int | None
    n_ref: int | None
    pooled: bool

    @property
    def deviation(self):
        return abs(self.value - self.reference)

    def z(self) -> float:
        dev = float(self.deviation)
        # float round-off between a cell and a point-mass marginal is not a deviation
        if dev <= ROUNDOFF:
            return 0.0
        if self.pooled:
            q = (float(self.value) * self.n + float(self.reference) * self.n_ref) / (self.n + self.n_ref)
            var = q * (1 - q) * (1.0 / self.n + 1.0 / self.n_ref)
        else:
            q = float(self.reference)
            var = q * (1 - q) / self.n
        return math.inf if var <= 0 else dev / math.sqrt(var)


def _value_dict(variables, idx) -> dict:
    return {v.name: _jsonable(v.domain[i]) for v, i in zip(variables, idx)}


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def _cells_vs_marginal(table: ProbabilityTable, clause: str, targets, givens):
    """Compare P(targets | givens) with P(targets) in every positive-mass given cell."""
    givens = [g for g in givens if g in table.names]
    if not givens:
        return []
    cond = condition(table, targets, givens)
    marg = table.marginal(targets)
    tshape = marg.p.shape
    gshape = cond.given_mass.shape
    cells = []
    for gidx in itertools.product(*(range(s) for s in gshape)):
        if not cond.valid[gidx]:
            continue
        n_g = None if cond.given_counts is None else int(cond.given_counts[gidx])
        for tidx in itertools.product(*(range(s) for s in tshape)):
            where = {**_value_dict(cond.targets, tidx), **_value_dict(cond.givens, gidx)}
            cells.append(_Cell(clause, where, cond.p[tidx + gidx], marg.p[tidx], n_g, table.n, pooled=False))
    return cells


def _cells_pairwise(table: ProbabilityTable, clause: str, target: str, fixed, varied: str):
    """Compare P(target | fixed, varied=v) with P(target | fixed, varied=v') for v < v'."""
    fixed = [f for f in fixed if f in table.names]
    cond = condition(table, [target], fixed + [varied])
    tv = cond.targets[0]
    fixed_vars = cond.givens[:-1]
    vv = cond.givens[-1]
    cells = []
    for fidx in itertools.product(*(range(len(v)) for v in fixed_vars)):
        for i, k in itertools.combinations(range(len(vv)), 2):
            gi, gk = fidx + (i,), fidx + (k,)
            if not (cond.valid[gi] and cond.valid[gk]):
                continue
            ni = None if cond.given_counts is None else int(cond.given_counts[gi])
            nk = None if cond.given_counts is None else int(cond.given_counts[gk])
            for t in range(len(tv)):
                where = {tv.name: _jsonable(tv.domain[t]), **_value_dict(fixed_vars, fidx),
                         varied: [_jsonable(vv.domain[i]), _jsonable(vv.domain[k])]}
                cells.append(_Cell(clause, where, cond.p[(t,) + gi], cond.p[(t,) + gk], ni, nk, pooled=True))
    return cells


def _verdict(name: str, table: ProbabilityTable, cells: list[_Cell], tol, sigma: float, min_count: int,
             extra: dict | None = None) -> ConditionVerdict:
    extra = extra or {}
    max_abs = max((c.deviation for c in cells), default=0)
    if tol is not None:
        worst = max(cells, key=lambda c: c.deviation, default=None)
        ok = max_abs <= tol
        return ConditionVerdict(
            condition=name,
            max_deviation=max_abs,
            tolerance=tol,
            units="probability",
            status="pass" if ok else "fail",
            max_abs_deviation=max_abs,
            cells_checked=len(cells),
            detail={**_describe(worst, None), **extra},
        )
    if table.counts is None:
        raise ValueError(f"{name}: statistical mode needs a sampled table with counts")
    usable = [c for c in cells if c.n >= min_count and (not c.pooled or c.n_ref >= min_count)]
    skipped = len(cells) - len(usable)
    if not usable:
        return ConditionVerdict(name, 0.0, sigma, "sigma", "inconclusive", float(max_abs),
                                0, skipped, {"reason": f"no conditioning cell with at least {min_count} samples", **extra})
    zs = [c.z() for c in usable]
    k = int(np.argmax(zs))
    zmax = zs[k]
    return ConditionVerdict(
        condition=name,
        max_deviation=zmax,
        tolerance=sigma,
        units="sigma",
        status="pass" if zmax <= sigma else "fail",
        max_abs_deviation=float(max(c.deviation for c in usable)),
        cells_checked=len(usable),
        cells_skipped=skipped,
        detail={**_describe(usable[k], zmax), **extra},
    )


def _describe(cell: _Cell | None, z) -> dict:
    if cell is None:
        return {}
    d = {
        "clause": cell.clause,
        "where": cell.where,
        "value": _num(cell.value),
        "reference": _num(cell.reference),
        "n_cell": cell.n,
    }
    if z is not None:
        d["z"] = z if math.isfinite(z) else "inf"
    return d


def check_NS2(table: ProbabilityTable, tol=None, sigma: float = SIGMA, min_count: int = MIN_COUNT) -> ConditionVerdict:
    """Outcome marginals must not depend on the remote setting."""
    cells = _cells_pairwise(table, "P(X|A,B) = P(X|A,B')", "X", ["A"], "B")
    cells += _cells_pairwise(table, "P(Y|A,B) = P(Y|A',B)", "Y", ["B"], "A")
    return _verdict("NS2", table, cells, tol, sigma, min_count)


def check_PI(table: ProbabilityTable, tol=None, sigma: float = SIGMA, min_count: int = MIN_COUNT) -> ConditionVerdict:
    """Parameter independence at the level of the ontic bin L."""
    if not table.has("L"):
        raise ValueError("PI check needs the ontic bin variable L")
    cells = _cells_pairwise(table, "P(X|A,B,L) = P(X|A,B',L)", "X", ["A", "L"], "B")
    cells += _cells_pairwise(table, "P(Y|A,B,L) = P(Y|A',B,L)", "Y", ["B", "L"], "A")
    return _verdict("PI", table, cells, tol, sigma, min_count, {"l_bins": len(table.variable("L"))})


def fw_residual(table: ProbabilityTable):
    """max |P(A,B,L) - P(A)P(B)P(L)| (L omitted when absent)."""
    names = ["A", "B"] + (["L"] if table.has("L") else [])
    joint = table.marginal(names).p
    prod = np.multiply.outer(table.marginal(["A"]).p, table.marginal(["B"]).p)
    if table.has("L"):
        prod = np.multiply.outer(prod, table.marginal(["L"]).p)
    return np.abs(joint - prod).max()


def check_FW(table: ProbabilityTable, tol=None, sigma: float = SIGMA, min_count: int = MIN_COUNT) -> ConditionVerdict:
    """Settings independent of each other and of the ontic bin."""
    lam = ["L"] if table.has("L") else []
    cells = _cells_vs_marginal(table, "P(A|B,L) = P(A)", ["A"], ["B"] + lam)
    cells += _cells_vs_marginal(table, "P(B|A,L) = P(B)", ["B"], ["A"] + lam)
    resid = fw_residual(table)
    verdict = _verdict("FW", table, cells, tol, sigma, min_count, {"factorization_residual": _num(resid)})
    if tol is not None and resid > tol:
        verdict.status = "fail"
        verdict.max_deviation = max(verdict.max_deviation, resid)
        verdict.max_abs_deviation = verdict.max_deviation
    return verdict


def check_FR(table: ProbabilityTable, tol=None, sigma: float = SIGMA, min_count: int = MIN_COUNT) -> ConditionVerdict:
    """Each setting uncorrelated with everything outside its future light cone."""
    cells = _cells_vs_marginal(table, "P(A|B,C,Y,Z) = P(A)", ["A"], ["B", "C", "Y", "Z"])
    cells += _cells_vs_marginal(table, "P(B|A,C,X,Z) = P(B)", ["B"], ["A", "C", "X", "Z"])
    if table.has("C"):
        cells += _cells_vs_marginal(table, "P(C|A,B,X,Y) = P(C)", ["C"], ["A", "B", "X", "Y"])
    return _verdict("FR", table, cells, tol, sigma, min_count)


def check_ST(table: ProbabilityTable, tol=None, sigma: float = SIGMA, min_count: int = MIN_COUNT) -> ConditionVerdict:
    """Disclosure setting and output (C, Z) independent of (A, B, X, Y)."""
    targets = [v for v in ("C", "Z") if table.has(v)]
    if not targets:
        raise ValueError("ST check needs C and/or Z")
    label = f"P({','.join(targets)}|A,B,X,Y) = P({','.join(targets)})"
    cells = _cells_vs_marginal(table, label, targets, ["A", "B", "X", "Y"])
    return _verdict("ST", table, cells, tol, sigma, min_count)


CHECKS = {"NS2": check_NS2, "PI": check_PI, "FW": check_FW, "FR": check_FR, "ST": check_ST}

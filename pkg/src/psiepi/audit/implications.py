"""Logical relations between the free-choice conditions, checked on tables.

Everything here works with factorization residuals (maximum absolute
differences between a joint probability and the product it should factor
into) so that premise tolerances propagate to the conclusion through explicit
bounds.  With ``tol = 0`` on an exact ``Fraction`` table the checks are exact.

Tolerance transfer for FW & NS & ST => FR.  Write ``r_FW`` for
``max|P(A,B,L) - P(A)P(B)P(L)|``, ``d_NS`` for the largest pairwise NS
deviation and ``r_ST`` for ``max|P(A,B,X,Y,C,Z) - P(A,B,X,Y)P(C,Z)|``.
Summing out X, applying NS and then FW gives

    |P(A,B,C,Y,Z) - P(A)P(B,C,Y,Z)| <= (1 + |A|) (|X| r_ST + d_NS + |L| r_FW)

and symmetrically for B; the C clause is bounded by ``|Z| r_ST``.  When every
premise holds at ``tol`` the conclusion therefore holds at
``derived_tolerance = tol * max((1+|A|)(|X|+1+|L|), (1+|B|)(|Y|+1+|L|), |Z|)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .conditions import MIN_COUNT, ROUNDOFF, SIGMA, _num, check_FR, check_FW, check_NS2, check_ST, fw_residual
from .tables import ProbabilityTable, condition


def _size(table: ProbabilityTable, name: str) -> int:
    return len(table.variable(name)) if table.has(name) else 1


def _present(table: ProbabilityTable, names) -> list[str]:
    return [n for n in names if table.has(n)]


def _outer(*ps):
    out = ps[0]
    for p in ps[1:]:
        out = np.multiply.outer(out, p)
    return out


def factor_residual(table: ProbabilityTable, left, right):
    """max |P(left, right) - P(left) P(right)|, with missing variables dropped."""
    left, right = _present(table, left), _present(table, right)
    if not left or not right:
        return 0 * table.p.sum()
    joint = table.marginal(left + right).p
    return np.abs(joint - _outer(table.marginal(left).p, table.marginal(right).p)).max()


def ns_residual(table: ProbabilityTable):
    """Largest pairwise change of an outcome marginal under a change of the remote setting."""
    worst = 0 * table.p.sum()
    for target, local, remote in (("X", "A", "B"), ("Y", "B", "A")):
        cond = condition(table, [target], [local, remote])
        p = cond.p  # axes: target, local, remote
        for t, l in itertools.product(range(p.shape[0]), range(p.shape[1])):
            for r1, r2 in itertools.combinations(range(p.shape[2]), 2):
                if cond.valid[l, r1] and cond.valid[l, r2]:
                    worst = max(worst, abs(p[t, l, r1] - p[t, l, r2]))
    return worst


def st_residual(table: ProbabilityTable):
    return factor_residual(table, ["A", "B", "X", "Y"], ["C", "Z"])


def fr_residuals(table: ProbabilityTable) -> dict:
    return {
        "A": factor_residual(table, ["A"], ["B", "C", "Y", "Z"]),
        "B": factor_residual(table, ["B"], ["A", "C", "X", "Z"]),
        "C": factor_residual(table, ["C"], ["A", "B", "X", "Y"]),
    }


def _slack(table: ProbabilityTable):
    # float tables carry round-off; exact tables are compared exactly
    return 0 if table.exact else ROUNDOFF


def transfer_factor(table: ProbabilityTable) -> int:
    nA, nB, nX, nY = (_size(table, v) for v in "ABXY")
    nZ, nL = _size(table, "Z"), _size(table, "L")
    return max((1 + nA) * (nX + 1 + nL), (1 + nB) * (nY + 1 + nL), nZ)


def z_discloses_lambda(table: ProbabilityTable) -> bool:
    """True when the ontic bin L is a deterministic function of Z."""
    if not table.has("L", "Z"):
        return False
    pzl = table.marginal(["Z", "L"]).p
    return bool(np.all(np.count_nonzero(pzl != 0, axis=1) <= 1))


@dataclass
class ImplicationReport:
    tolerance: object
    premises: dict
    premises_hold: bool
    derived_tolerance: object
    conclusion: dict
    conclusion_holds: bool
    converse: dict = field(default_factory=dict)
    premise_verdicts: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return not self.premises_hold

    @property
    def consistent(self) -> bool:
        return (not self.premises_hold) or self.conclusion_holds

    def to_dict(self) -> dict:
        return {
            "tolerance": _num(self.tolerance),
            "premises": {k: _num(v) for k, v in self.premises.items()},
            "premises_hold": self.premises_hold,
            "derived_tolerance": _num(self.derived_tolerance),
            "conclusion": {k: _num(v) for k, v in self.conclusion.items()},
            "conclusion_holds": self.conclusion_holds,
            "vacuous": self.vacuous,
            "consistent": self.consistent,
            "converse": {k: (_num(v) if not isinstance(v, (bool, str)) else v) for k, v in self.converse.items()},
            "premise_verdicts": self.premise_verdicts,
        }


def verify_implication_fr(table: ProbabilityTable, tol) -> ImplicationReport:
    """Check FW & NS & ST => FR on ``table`` with premise tolerance ``tol``.

    The converse is only evaluated (never asserted) when Z fully determines
    the ontic bin L; without the quantum-statistics assumption it can fail
    through its ST part.
    """
    premises = {"FW": fw_residual(table), "NS": ns_residual(table), "ST": st_residual(table)}
    premises_hold = all(v <= tol for v in premises.values())
    derived = tol * transfer_factor(table)
    fr = fr_residuals(table)
    conclusion = {f"FR_{k}": v for k, v in fr.items()}
    fr_max = max(fr.values())
    report = ImplicationReport(
        tolerance=tol,
        premises=premises,
        premises_hold=premises_hold,
        derived_tolerance=derived,
        conclusion=conclusion,
        conclusion_holds=fr_max <= derived + _slack(table),
    )
    if z_discloses_lambda(table):
        fr_holds = fr_max <= tol
        parts = {k: v <= tol for k, v in premises.items()}
        report.converse = {
            "applicable": True,
            "FR_holds": fr_holds,
            **{f"{k}_holds": ok for k, ok in parts.items()},
            "holds": (not fr_holds) or all(parts.values()),
        }
    else:
        report.converse = {"applicable": False}
    return report


@dataclass
class FreeChoiceNSReport:
    tolerance: object
    factorizations: dict
    factorizations_hold: bool
    derived_tolerance: dict
    ns_deviation: dict
    ns_holds: bool
    premise_verdicts: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return (not self.factorizations_hold) or self.ns_holds

    def to_dict(self) -> dict:
        return {
            "tolerance": _num(self.tolerance),
            "factorizations": {k: _num(v) for k, v in self.factorizations.items()},
            "factorizations_hold": self.factorizations_hold,
            "derived_tolerance": {k: _num(v) for k, v in self.derived_tolerance.items()},
            "ns_deviation": {k: _num(v) for k, v in self.ns_deviation.items()},
            "ns_holds": self.ns_holds,
            "consistent": self.consistent,
            "premise_verdicts": self.premise_verdicts,
        }


def _free_choice_side(table: ProbabilityTable, out: str, local: str, remote: str, tol):
    """Residuals of P(A,B,O) = P(O|A,B)P(A)P(B) and = P(O|local)P(A)P(B), plus the derived NS bound."""
    j = table.marginal(["A", "B", out]).p
    pa = table.marginal(["A"]).p
    pb = table.marginal(["B"]).p
    papb = np.multiply.outer(pa, pb)
    cond_ab = condition(table, [out], ["A", "B"])
    p_o_ab = np.moveaxis(cond_ab.p, 0, -1)  # (A, B, O)
    cond_loc = condition(table, [out], [local])
    p_o_loc = np.moveaxis(cond_loc.p, 0, -1)  # (local, O)
    if local == "A":
        p_o_loc_ab = p_o_loc[:, None, :]
    else:
        p_o_loc_ab = p_o_loc[None, :, :]
    f1 = np.abs(j - p_o_ab * papb[..., None]).max()
    f2 = np.abs(j - p_o_loc_ab * papb[..., None]).max()
    # |P(O|AB) - P(O|local)| <= 2 tol / (P(A)P(B)) wherever both factorizations hold at tol
    worst_excess = None
    derived_max = 0 * tol
    dev_max = 0 * table.p.sum()
    for a, b in itertools.product(range(papb.shape[0]), range(papb.shape[1])):
        if papb[a, b] == 0 or not cond_ab.valid[a, b]:
            continue
        bound = 2 * tol / papb[a, b]
        derived_max = max(derived_max, bound)
        for o in range(p_o_ab.shape[-1]):
            dev = abs(p_o_ab[a, b, o] - p_o_loc_ab[a if local == "A" else 0, b if local == "B" else 0, o])
            dev_max = max(dev_max, dev)
            excess = dev - bound
            worst_excess = excess if worst_excess is None else max(worst_excess, excess)
    ok = worst_excess is None or worst_excess <= _slack(table)
    return f1, f2, derived_max, dev_max, ok


def derive_ns_from_free_choice(table: ProbabilityTable, tol) -> FreeChoiceNSReport:
    """If A and B each factor off everything outside their future, NS follows.

    Writes P(A,B,X) once as P(X|A,B)P(A)P(B) and once as P(X|A)P(A)P(B);
    agreement of both within ``tol`` bounds the NS deviation cell by cell by
    ``2 tol / (P(A)P(B))``.  The Y side is handled symmetrically when present.
    """
    facts, derived, devs = {}, {}, {}
    ns_ok = True
    sides = [("X", "A", "B")] + ([("Y", "B", "A")] if table.has("Y") else [])
    for out, local, remote in sides:
        f1, f2, d, dev, ok = _free_choice_side(table, out, local, remote, tol)
        facts[f"P(A,B,{out}) = P({out}|A,B)P(A)P(B)"] = f1
        facts[f"P(A,B,{out}) = P({out}|{local})P(A)P(B)"] = f2
        derived[out] = d
        devs[f"P({out}|A,B) - P({out}|{local})"] = dev
        ns_ok = ns_ok and ok
    hold = all(v <= tol for v in facts.values())
    return FreeChoiceNSReport(tol, facts, hold, derived, devs, ns_ok)


def verify_implication_fr_sampled(table: ProbabilityTable, sigma: float = SIGMA,
                                  min_count: int = MIN_COUNT) -> ImplicationReport:
    """Sampled-table form of :func:`verify_implication_fr`.

    Premises are decided by the statistical FW, NS2 and ST checks; the
    tolerance is the tightest one at which their residuals hold, so the
    derived bound on FR is as sharp as the data allow.
    """
    verdicts = {"FW": check_FW(table, sigma=sigma, min_count=min_count),
                "NS": check_NS2(table, sigma=sigma, min_count=min_count),
                "ST": check_ST(table, sigma=sigma, min_count=min_count)}
    tol = max(fw_residual(table), ns_residual(table), st_residual(table))
    report = verify_implication_fr(table, float(tol))
    report.premise_verdicts = {k: v.status for k, v in verdicts.items()}
    report.premises_hold = all(v.passed for v in verdicts.values())
    return report


def derive_ns_from_free_choice_sampled(table: ProbabilityTable, sigma: float = SIGMA,
                                       min_count: int = MIN_COUNT) -> FreeChoiceNSReport:
    """Sampled-table form of :func:`derive_ns_from_free_choice`.

    The free-choice premise (each setting independent of the other setting
    and the remote outcome) is decided statistically; the tolerance is the
    largest factorization residual.
    """
    keep = _present(table, ["A", "B", "X", "Y"])
    verdict = check_FR(table.marginal(keep), sigma=sigma, min_count=min_count)
    tight = derive_ns_from_free_choice(table, 0.0)
    report = derive_ns_from_free_choice(table, float(max(tight.factorizations.values())))
    report.premise_verdicts = {"free_choice": verdict.status}
    report.factorizations_hold = verdict.passed
    return report

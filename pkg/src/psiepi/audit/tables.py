"""Dense joint probability tables over small discrete variables.

Probabilities may be floats or ``fractions.Fraction`` objects (object dtype);
every operation here works for both so that exact fixtures can be checked
with zero tolerance.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class EmptyConditionalError(ValueError):
    """Every conditioning cell has zero probability."""


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple

    def __post_init__(self):
        if not self.domain:
            raise ValueError(f"variable {self.name!r} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"variable {self.name!r} has repeated domain values")

    def index(self, value) -> int:
        return self.domain.index(value)

    def __len__(self) -> int:
        return len(self.domain)


def _is_exact(p: np.ndarray) -> bool:
    return p.dtype == object


def _safe_div(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise num/den with zero denominators masked out (result there is 0)."""
    den, num = np.broadcast_arrays(den, num)
    ok = den != 0
    if _is_exact(num) or _is_exact(den):
        one = Fraction(1)
        den_safe = np.where(ok, den, one)
        out = num / den_safe
        out = np.where(ok, out, Fraction(0))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    return out, ok


class ProbabilityTable:
    """Joint distribution over named discrete variables.

    ``p`` has one axis per variable; ``counts`` (optional) holds the raw
    tallies behind a sampled table, with ``n`` their total.
    """

    def __init__(self, variables: Sequence[Variable], p: np.ndarray, counts: np.ndarray | None = None, tol: float = 1e-12):
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names: {names}")
        self.variables = tuple(variables)
        p = np.asarray(p)
        shape = tuple(len(v) for v in variables)
        if p.shape != shape:
            raise ValueError(f"probability array shape {p.shape} does not match domains {shape}")
        if np.any(p < 0):
            raise ValueError("negative probability entry")
        total = p.sum()
        if _is_exact(p):
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, not 1")
        elif abs(float(total) - 1.0) > tol:
            raise ValueError(f"probabilities sum to {float(total)!r}, not 1")
        self.p = p
        self.counts = None if counts is None else np.asarray(counts, dtype=np.int64)
        if self.counts is not None and self.counts.shape != shape:
            raise ValueError("counts shape does not match domains")

    @classmethod
    def from_counts(cls, variables: Sequence[Variable], counts: np.ndarray) -> "ProbabilityTable":
        counts = np.asarray(counts, dtype=np.int64)
        n = int(counts.sum())
        if n <= 0:
            raise ValueError("cannot build a table from zero samples")
        return cls(variables, counts / n, counts)

    @classmethod
    def from_samples(cls, variables: Sequence[Variable], columns: dict[str, np.ndarray]) -> "ProbabilityTable":
        """Tally index arrays (one per variable, values are domain indices)."""
        shape = tuple(len(v) for v in variables)
        flat = np.ravel_multi_index(tuple(np.asarray(columns[v.name]) for v in variables), shape)
        counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
        return cls.from_counts(variables, counts)

    @classmethod
    def from_function(cls, variables: Sequence[Variable], fn) -> "ProbabilityTable":
        """Build a table by evaluating ``fn(**values)`` on every value tuple."""
        shape = tuple(len(v) for v in variables)
        exact = None
        p = np.empty(shape, dtype=object)
        for idx in itertools.product(*(range(s) for s in shape)):
            val = fn(**{v.name: v.domain[i] for v, i in zip(variables, idx)})
            p[idx] = val
            exact = isinstance(val, Fraction) if exact is None else exact and isinstance(val, Fraction)
        if not exact:
            p = p.astype(float)
        return cls(variables, p)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def n(self) -> int | None:
        return None if self.counts is None else int(self.counts.sum())

    @property
    def exact(self) -> bool:
        return _is_exact(self.p)

    def variable(self, name: str) -> Variable:
        return self.variables[self.names.index(name)]

    def has(self, *names: str) -> bool:
        return all(n in self.names for n in names)

    def marginal(self, names: Iterable[str]) -> "ProbabilityTable":
        """Sum out every variable not in ``names`` and reorder axes to ``names``."""
        names = list(names)
        missing = [n for n in names if n not in self.names]
        if missing:
            raise KeyError(f"unknown variables {missing}; table has {self.names}")
        drop = tuple(i for i, n in enumerate(self.names) if n not in names)
        keep = [n for n in self.names if n in names]
        p = self.p.sum(axis=drop) if drop else self.p
        counts = None
        if self.counts is not None:
            counts = self.counts.sum(axis=drop) if drop else self.counts
        perm = [keep.index(n) for n in names]
        p = np.transpose(p, perm) if names else np.asarray(p)
        if counts is not None:
            counts = np.transpose(counts, perm) if names else np.asarray(counts)
        t = ProbabilityTable.__new__(ProbabilityTable)
        t.variables = tuple(self.variable(n) for n in names)
        t.p = np.asarray(p)
        t.counts = None if counts is None else np.asarray(counts)
        return t

    def relabel(self, name: str, new: str) -> "ProbabilityTable":
        vs = [Variable(new, v.domain) if v.name == name else v for v in self.variables]
        return ProbabilityTable(vs, self.p, self.counts)

    def prob(self, **values) -> float | Fraction:
        m = self.marginal(list(values))
        idx = tuple(m.variable(k).index(v) for k, v in values.items())
        return m.p[idx]

    def rows(self):
        """Yield ``(value_tuple, count_or_None, probability)`` in C order."""
        shape = self.p.shape
        for idx in itertools.product(*(range(s) for s in shape)):
            vals = tuple(v.domain[i] for v, i in zip(self.variables, idx))
            c = None if self.counts is None else int(self.counts[idx])
            yield vals, c, self.p[idx]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*self.names, "count", "probability"])
        for vals, c, q in self.rows():
            w.writerow([*(_fmt_value(v) for v in vals), "" if c is None else c, _fmt_prob(q)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "variables": [{"name": v.name, "domain": [_json_value(x) for x in v.domain]} for v in self.variables],
            "n": self.n,
            "rows": [
                {"values": [_json_value(x) for x in vals], "count": c, "probability": _json_prob(q)}
                for vals, c, q in self.rows()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbabilityTable":
        variables = [Variable(v["name"], tuple(_unjson_value(x) for x in v["domain"])) for v in d["variables"]]
        shape = tuple(len(v) for v in variables)
        rows = d["rows"]
        has_counts = d.get("n") is not None
        exact = any(isinstance(r["probability"], str) for r in rows)
        p = np.zeros(shape, dtype=object if exact else float)
        counts = np.zeros(shape, dtype=np.int64) if has_counts else None
        for r in rows:
            idx = tuple(v.index(_unjson_value(x)) for v, x in zip(variables, r["values"]))
            q = r["probability"]
            p[idx] = Fraction(q) if exact else float(q)
            if counts is not None:
                counts[idx] = r["count"]
        if exact:
            p = np.where(p == 0, Fraction(0), p)
        if counts is not None:
            return cls.from_counts(variables, counts)
        return cls(variables, p)

    @classmethod
    def from_json(cls, text: str) -> "ProbabilityTable":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return f"ProbabilityTable({', '.join(self.names)}; n={self.n})"


def _fmt_value(v) -> str:
    return str(v)


def _fmt_prob(q) -> str:
    if isinstance(q, Fraction):
        return str(q)
    return f"{float(q):.17g}"


def _json_value(v):
    return list(v) if isinstance(v, tuple) else v


def _unjson_value(v):
    return tuple(v) if isinstance(v, list) else v


def _json_prob(q):
    return str(q) if isinstance(q, Fraction) else float(q)


@dataclass
class ConditionalTable:
    """P(targets | givens) laid out with target axes first, then given axes.

    ``valid`` flags given-tuples of positive probability; entries for the
    others are zero and must be ignored.
    """

    targets: tuple[Variable, ...]
    givens: tuple[Variable, ...]
    p: np.ndarray
    valid: np.ndarray
    given_mass: np.ndarray
    given_counts: np.ndarray | None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.targets + self.givens)


def condition(table: ProbabilityTable, targets: Sequence[str], givens: Sequence[str] = (),
              where: dict | None = None) -> ConditionalTable:
    """Compute P(targets | givens [, where]); zero-mass given-tuples are flagged, not divided.

    ``where`` pins further variables to single values, e.g. ``{"B": 1}`` gives
    P(targets | givens, B=1).
    """
    targets, givens = list(targets), list(givens)
    where = dict(where or {})
    overlap = (set(targets) & set(givens)) | (set(where) & (set(targets) | set(givens)))
    if overlap:
        raise ValueError(f"variables {sorted(overlap)} appear more than once")
    if where:
        table = _restrict(table, where)
    joint = table.marginal(targets + givens)
    gm = table.marginal(givens)
    den = gm.p.reshape((1,) * len(targets) + gm.p.shape)
    p, ok = _safe_div(joint.p, den)
    valid = np.asarray(gm.p != 0)
    if (givens or where) and not valid.any():
        raise EmptyConditionalError(f"all conditioning cells for {givens} {where or ''} have zero probability")
    return ConditionalTable(
        targets=joint.variables[: len(targets)],
        givens=joint.variables[len(targets):],
        p=p,
        valid=valid,
        given_mass=gm.p,
        given_counts=gm.counts,
    )


def _restrict(table: ProbabilityTable, where: dict) -> ProbabilityTable:
    """Unnormalized slice of ``table`` with the ``where`` variables removed."""
    idx = tuple(table.variable(n).index(where[n]) if n in where else slice(None) for n in table.names)
    t = ProbabilityTable.__new__(ProbabilityTable)
    t.variables = tuple(v for v in table.variables if v.name not in where)
    t.p = np.asarray(table.p[idx])
    t.counts = None if table.counts is None else np.asarray(table.counts[idx])
    return t


def product_table(*tables: ProbabilityTable) -> ProbabilityTable:
    """Independent product of tables over disjoint variables."""
    variables: list[Variable] = []
    p = np.array(1) if not any(t.exact for t in tables) else np.array(Fraction(1), dtype=object)
    for t in tables:
        variables.extend(t.variables)
        p = np.multiply.outer(p, t.p)
    return ProbabilityTable(variables, p)

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psiepi.audit.tables import (
    EmptyConditionalError,
    ProbabilityTable,
    Variable,
    condition,
    product_table,
)

A = Variable("A", (0, 1))
B = Variable("B", (0, 1, 2))
X = Variable("X", (-1, 1))


@st.composite
def count_tables(draw):
    counts = np.array(draw(st.lists(st.integers(0, 50), min_size=12, max_size=12))).reshape(2, 3, 2)
    counts[0, 0, 0] += 1
    return ProbabilityTable.from_counts([A, B, X], counts)


def test_variable_validation():
    with pytest.raises(ValueError):
        Variable("A", ())
    with pytest.raises(ValueError):
        Variable("A", (0, 0))
    with pytest.raises(ValueError):
        ProbabilityTable([A, A], np.full((2, 2), 0.25))


def test_table_validation():
    with pytest.raises(ValueError):
        ProbabilityTable([A], np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        ProbabilityTable([A], np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        ProbabilityTable([A, X], np.full(2, 0.5))
    with pytest.raises(ValueError):
        ProbabilityTable.from_counts([A], np.zeros(2))
    with pytest.raises(ValueError):
        ProbabilityTable([A], np.array([Fraction(1, 3), Fraction(1, 3)], dtype=object))


@settings(max_examples=100, deadline=None)
@given(count_tables())
def test_condition_marginalize_consistency(t):
    """P(X|A) equals sum_b P(X|A,b) P(b|A)."""
    direct = condition(t, ["X"], ["A"])
    xab = condition(t, ["X"], ["A", "B"])
    ba = condition(t, ["B"], ["A"])
    recon = np.einsum("xab,ba->xa", xab.p, ba.p)
    for a in range(2):
        if direct.valid[a]:
            assert np.allclose(recon[:, a], direct.p[:, a], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(count_tables())
def test_marginals_sum_to_one(t):
    for names in (["A"], ["B", "A"], ["X", "B"], []):
        assert float(t.marginal(names).p.sum()) == pytest.approx(1.0, abs=1e-12)
    assert t.marginal(["X", "A"]).p.shape == (2, 2)


def test_condition_on_everything_is_point_mass():
    t = ProbabilityTable.from_counts([A, X], np.array([[3, 1], [2, 4]]))
    c = condition(t, [], ["A", "X"])
    assert np.all(c.p == 1.0)
    c = condition(t, ["X"], where={"A": 1})
    assert np.allclose(c.p, [2 / 6, 4 / 6])


def test_condition_on_nothing_is_input():
    t = ProbabilityTable.from_counts([A, X], np.array([[3, 1], [2, 4]]))
    c = condition(t, ["A", "X"], [])
    assert np.allclose(c.p, t.p)


def test_independent_table_conditional_is_marginal():
    t = product_table(ProbabilityTable([A], np.array([0.5, 0.5])), ProbabilityTable([X], np.array([0.5, 0.5])))
    c = condition(t, ["X"], ["A"])
    assert np.allclose(c.p, 0.5)


def test_zero_mass_cells_flagged():
    t = ProbabilityTable.from_counts([A, X], np.array([[3, 1], [0, 0]]))
    c = condition(t, ["X"], ["A"])
    assert c.valid.tolist() == [True, False]
    assert np.all(c.p[:, 1] == 0)


def test_all_zero_conditioning_signalled():
    t = ProbabilityTable.from_counts([A, B, X], np.array([[[3, 1], [2, 2], [0, 0]], [[1, 1], [5, 0], [0, 0]]]))
    with pytest.raises(EmptyConditionalError):
        condition(t, ["X"], ["A"], where={"B": 2})
    c = condition(t, ["X"], ["A"], where={"B": 1})
    assert np.allclose(c.p[:, 1], [1, 0])


def test_overlapping_targets_rejected():
    t = ProbabilityTable([A], np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        condition(t, ["A"], ["A"])


def test_exact_tables_stay_exact():
    t = ProbabilityTable.from_function([A, X], lambda A, X: Fraction(1, 4))
    assert t.exact
    c = condition(t, ["X"], ["A"])
    assert c.p[0, 0] == Fraction(1, 2)
    assert t.prob(A=1) == Fraction(1, 2)


def test_csv_layout():
    t = ProbabilityTable.from_counts([A, X], np.array([[1, 1], [1, 1]]))
    lines = t.to_csv().splitlines()
    assert lines[0] == "A,X,count,probability"
    assert lines[1] == "0,-1,1,0.25"
    assert len(lines) == 5


@settings(max_examples=30, deadline=None)
@given(count_tables())
def test_json_round_trip(t):
    back = ProbabilityTable.from_json(json.dumps(t.to_dict()))
    assert back.names == t.names
    assert np.array_equal(back.counts, t.counts)
    assert np.array_equal(back.p, t.p)


def test_exact_json_round_trip():
    t = ProbabilityTable.from_function([A, X], lambda A, X: Fraction(1, 8) if A == 0 else Fraction(3, 8))
    back = ProbabilityTable.from_dict(t.to_dict())
    assert back.exact and np.array_equal(back.p, t.p)


def test_relabel_and_repr():
    t = ProbabilityTable([A], np.array([0.5, 0.5]))
    assert t.relabel("A", "Q").names == ("Q",)
    assert "A" in repr(t)

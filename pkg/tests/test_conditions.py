from fractions import Fraction

import numpy as np
import pytest

from psiepi.audit import (
    DisclosureChannel,
    ProbabilityTable,
    Variable,
    check_FR,
    check_FW,
    check_NS2,
    check_PI,
    check_ST,
    exact_table,
    run_experiment,
)
from psiepi.hilbert import KET00, SINGLET, setting_xz
from psiepi.models import OnticSampler

MENU_A = [setting_xz(0), setting_xz(np.pi / 2)]
MENU_B = [setting_xz(np.pi / 4), setting_xz(-np.pi / 4)]
F = Fraction


def signalling_table():
    """X copies B, everything else uniform."""
    vs = [Variable("A", (0, 1)), Variable("B", (0, 1)), Variable("X", (-1, 1)), Variable("Y", (-1, 1))]
    return ProbabilityTable.from_function(vs, lambda A, B, X, Y: F(1, 8) if X == 2 * B - 1 else F(0))


def superdeterministic_table():
    """A copies the ontic bin L."""
    vs = [Variable("A", (0, 1)), Variable("B", (0, 1)), Variable("X", (-1, 1)), Variable("Y", (-1, 1)),
          Variable("C", (0,)), Variable("Z", (0,)), Variable("L", (0, 1))]
    return ProbabilityTable.from_function(vs, lambda A, B, X, Y, C, Z, L: F(1, 16) if A == L else F(0))


@pytest.fixture(scope="module")
def singlet_run():
    return run_experiment(OnticSampler(SINGLET), MENU_A, MENU_B, n=200_000, seed=11)


def test_ns2_quantum_oracle_table():
    t = exact_table(SINGLET, MENU_A, MENU_B)
    v = check_NS2(t, tol=1e-12)
    assert v.passed and v.units == "probability"
    assert v.max_deviation <= 1e-12


def test_ns2_signalling_fails():
    v = check_NS2(signalling_table(), tol=0)
    assert not v.passed and v.max_deviation == 1
    assert v.detail["clause"].startswith("P(X|A,B)")


def test_ns2_product_state_experiment():
    t = run_experiment(OnticSampler(KET00), MENU_A, MENU_B, n=100_000, seed=3)
    assert check_NS2(t).passed


def test_sampled_singlet_suite(singlet_run):
    t = singlet_run
    assert check_NS2(t).passed
    assert check_FW(t).passed
    pi = check_PI(t)
    assert pi.witness() and pi.units == "sigma"
    assert "where" in pi.detail and "L" in pi.detail["where"]
    assert check_ST(t).witness()


def test_verdict_invariant(singlet_run):
    for check in (check_NS2, check_FW, check_PI, check_FR, check_ST):
        v = check(singlet_run)
        assert v.passed == (v.max_deviation <= v.tolerance)
        d = v.to_dict()
        assert d["status"] == v.status


def test_fw_two_seeds_agree():
    model = OnticSampler(SINGLET)
    vs = [check_FW(run_experiment(model, MENU_A, MENU_B, n=100_000, seed=s)) for s in (1, 2)]
    assert all(v.passed for v in vs)
    assert abs(vs[0].max_deviation - vs[1].max_deviation) <= 4 * np.sqrt(2)


def test_fw_superdeterministic_fails():
    v = check_FW(superdeterministic_table(), tol=0)
    assert not v.passed
    assert v.detail["factorization_residual"] == "1/8"


def test_fr_superdeterministic_fails():
    # FR sees L only through Z, so a constant Z hides the copy
    t = superdeterministic_table()
    assert check_FR(t, tol=0).passed
    vs = [Variable("A", (0, 1)), Variable("B", (0, 1)), Variable("X", (-1, 1)), Variable("Y", (-1, 1)),
          Variable("C", (0,)), Variable("Z", (0, 1))]
    # Z reveals the bin that A copies
    t2 = ProbabilityTable.from_function(vs, lambda A, B, X, Y, C, Z: F(1, 16) if A == Z else F(0))
    assert not check_FR(t2, tol=0).passed


def test_pi_product_eigenstate_passes():
    za = [setting_xz(0), setting_xz(np.pi)]
    t = run_experiment(OnticSampler(KET00), za, za, n=100_000, seed=4)
    v = check_PI(t)
    assert v.passed


def test_pi_single_bin_reduces_to_ns2():
    t = run_experiment(OnticSampler(SINGLET), MENU_A, MENU_B, n=100_000, seed=5, l_bits=0)
    pi, ns = check_PI(t), check_NS2(t)
    assert pi.passed and ns.passed
    assert pi.max_deviation == pytest.approx(ns.max_deviation)


def test_pi_singlet_right_angle_witness():
    a = [setting_xz(0.5)]
    b = [setting_xz(0.1), setting_xz(0.1 + np.pi / 2)]
    t = run_experiment(OnticSampler(SINGLET), a, b, n=200_000, seed=6, l_bits=6)
    assert check_PI(t).witness()


def test_pi_needs_l():
    t = exact_table(SINGLET, MENU_A, MENU_B)
    with pytest.raises(ValueError):
        check_PI(t, tol=0)


def test_pi_coarse_l_inconclusive():
    t = run_experiment(OnticSampler(SINGLET), MENU_A, MENU_B, n=2_000, seed=7, l_bits=8)
    v = check_PI(t)
    assert v.status == "inconclusive" and not v.passed


def test_fr_constant_channel_passes():
    ch = DisclosureChannel(kind="constant")
    t = run_experiment(OnticSampler(SINGLET), MENU_A, MENU_B, channel=ch, n=200_000, seed=8)
    assert check_FR(t).passed
    assert check_ST(t).passed


def test_st_constant_z_exact():
    t = exact_table(SINGLET, MENU_A, MENU_B, with_cz=True)
    assert check_ST(t, tol=1e-12).passed
    assert check_FR(t, tol=1e-12).passed


def test_st_c_only_clause_passes(singlet_run):
    # drop Z: C is drawn independently of everything else
    t = singlet_run.marginal(["A", "B", "C", "X", "Y"])
    assert check_ST(t).passed


def test_statistical_mode_needs_counts():
    with pytest.raises(ValueError):
        check_NS2(exact_table(SINGLET, MENU_A, MENU_B))

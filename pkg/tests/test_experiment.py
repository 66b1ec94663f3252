import numpy as np
import pytest

from oracles import binomial_tol
from psiepi.audit import DisclosureChannel, run_experiment
from psiepi.audit.experiment import CHUNK, exact_table
from psiepi.audit.search import find_witness, xz_menus
from psiepi.hilbert import KET00, SINGLET, setting_xz
from psiepi.models import OnticSampler
from psiepi.oracle import born_distribution

MENU_A = [setting_xz(0), setting_xz(np.pi / 2)]
MENU_B = [setting_xz(np.pi / 4), setting_xz(-np.pi / 4)]
MODEL = OnticSampler(SINGLET)


def test_zero_trials_rejected():
    with pytest.raises(ValueError):
        run_experiment(MODEL, MENU_A, MENU_B, n=0)


def test_bad_menus_and_priors_rejected():
    with pytest.raises(ValueError):
        run_experiment(MODEL, [], MENU_B, n=10)
    with pytest.raises(ValueError):
        run_experiment(MODEL, MENU_A, MENU_B, prior_a=[0.5, 0.6], n=10)
    with pytest.raises(ValueError):
        run_experiment(MODEL, MENU_A, MENU_B, prior_b=[1.0], n=10)
    with pytest.raises(ValueError):
        DisclosureChannel(kind="psi")
    with pytest.raises(ValueError):
        DisclosureChannel(menu=())


def test_priors_recovered():
    n = 100_000
    t = run_experiment(MODEL, MENU_A, MENU_B, prior_a=[0.3, 0.7], prior_b=[0.5, 0.5], n=n, seed=1)
    for name, prior in (("A", [0.3, 0.7]), ("B", [0.5, 0.5]), ("C", [0.5, 0.5])):
        got = t.marginal([name]).p
        assert np.all(np.abs(got - prior) <= binomial_tol(np.array(prior), n))
    assert t.n == n


def test_conditional_outcomes_match_born():
    t = run_experiment(OnticSampler(SINGLET, "epistemic"), MENU_A, MENU_B, n=200_000, seed=2)
    m = t.marginal(["A", "B", "X", "Y"])
    for i, a in enumerate(MENU_A):
        for k, b in enumerate(MENU_B):
            cnt = m.counts[i, k]
            born = born_distribution(SINGLET, a, b)
            for (x, y), p in born.items():
                freq = cnt[(x + 1) // 2, (y + 1) // 2] / cnt.sum()
                assert abs(freq - p) <= binomial_tol(p, cnt.sum())


def test_fixed_seed_bit_identical():
    t1 = run_experiment(MODEL, MENU_A, MENU_B, n=50_000, seed=3)
    t2 = run_experiment(MODEL, MENU_A, MENU_B, n=50_000, seed=3)
    t3 = run_experiment(MODEL, MENU_A, MENU_B, n=50_000, seed=4)
    assert t1.counts.tobytes() == t2.counts.tobytes()
    assert t1.counts.tobytes() != t3.counts.tobytes()


def test_workers_do_not_change_result():
    n = 3 * CHUNK + 17
    t1 = run_experiment(MODEL, MENU_A, MENU_B, n=n, seed=5, workers=1)
    t4 = run_experiment(MODEL, MENU_A, MENU_B, n=n, seed=5, workers=4)
    assert t1.counts.tobytes() == t4.counts.tobytes()


def test_channel_reads():
    tau = np.array([0.0, 0.26, 0.51, 0.99])
    e0 = np.array([True, False, False, True])
    k = np.array([2, 2, 0, 1])
    assert DisclosureChannel("tau", (0, 2)).read(k, tau, e0).tolist() == [0, 1, 0, 1]
    assert DisclosureChannel("e0", (0, 2)).read(k, tau, e0).tolist() == [1, 0, 0, 1]
    assert DisclosureChannel("composite", (0, 2)).read(k, tau, e0).tolist() == [1, 2, 0, 3]
    assert DisclosureChannel("constant", (0, 2)).read(k, tau, e0).tolist() == [0, 0, 0, 0]
    assert DisclosureChannel("tau", (0, 6)).z_domain == tuple(range(64))


def test_lambda_bins_with_e0_flag():
    t = run_experiment(OnticSampler(KET00, "epistemic"), MENU_A, MENU_B, n=50_000, seed=6, l_bits=2, l_e0=True)
    assert len(t.variable("L")) == 8
    # E0 samples have tau < 1/4, so they all sit in the first tau quarter
    lm = t.marginal(["L"]).p
    assert lm[1] > 0.2 and lm[3] == lm[5] == lm[7] == 0


def test_exact_table_normalized():
    t = exact_table(SINGLET, MENU_A, MENU_B, prior_a=[0.25, 0.75])
    assert t.p.sum() == pytest.approx(1.0)
    assert t.marginal(["A"]).p == pytest.approx([0.25, 0.75])


def test_menus_grid():
    menus = list(xz_menus())
    assert len(menus) == 9
    assert np.allclose(menus[0][1][1], setting_xz(-np.pi / 4))


def test_find_witness_singlet():
    w = find_witness(MODEL, ("PI", "FR"), n=200_000, seed=1)
    assert w is not None
    assert all(v.witness() for v in w.verdicts.values())


def test_find_witness_product_state_none():
    menus = [([setting_xz(0), setting_xz(np.pi)], [setting_xz(0), setting_xz(np.pi)])]
    assert find_witness(OnticSampler(KET00), ("PI",), menus=menus, n=50_000, seed=1) is None

"""Simulated correlation experiments producing joint tables over (A, B, C, X, Y, Z, L)."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..epistemic import in_E0_batch
from ..hilbert import KET00, as_setting, as_state, joint_eigenbasis
from ..models import OnticSampler, spawn_generators
from ..ontic import OnticBatch, batch_outcomes
from ..oracle import born_distribution
from .tables import ProbabilityTable, Variable

CHANNEL_KINDS = ("tau", "e0", "composite", "constant")
OUTCOMES = (-1, 1)
CHUNK = 1 << 16


@dataclass(frozen=True)
class DisclosureChannel:
    """Partial read-out of the ontic state.

    The setting C takes values in ``menu``; a value ``k`` asks for ``k`` bits of
    tau (``k = 0`` discloses nothing).  ``kind`` picks what is revealed:
    ``tau`` gives ``floor(tau * 2**k)``, ``e0`` the E0 membership bit,
    ``composite`` both packed as ``2*bin + bit``, ``constant`` always 0.
    """

    kind: str = "tau"
    menu: tuple[int, ...] = (0, 6)

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not self.menu or any(int(k) < 0 for k in self.menu):
            raise ValueError("channel menu must be a nonempty list of bit counts >= 0")
        if len(set(self.menu)) != len(self.menu):
            raise ValueError("channel menu has repeated values")

    @property
    def bits(self) -> int:
        return max(self.menu)

    @property
    def z_domain(self) -> tuple[int, ...]:
        if self.kind == "constant":
            return (0,)
        if self.kind == "e0":
            return (0, 1)
        if self.kind == "tau":
            return tuple(range(2**self.bits))
        return tuple(range(2 ** (self.bits + 1)))

    def read(self, k: np.ndarray, tau: np.ndarray, e0: np.ndarray) -> np.ndarray:
        k = np.asarray(k)
        on = k > 0
        bins = np.floor(tau * 2.0**k).astype(np.int64)
        if self.kind == "constant":
            z = np.zeros_like(bins)
        elif self.kind == "tau":
            z = bins
        elif self.kind == "e0":
            z = e0.astype(np.int64)
        else:
            z = 2 * bins + e0.astype(np.int64)
        return np.where(on, z, 0)


def _check_prior(prior, size: int, name: str) -> np.ndarray:
    if prior is None:
        return np.full(size, 1.0 / size)
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (size,):
        raise ValueError(f"{name}: prior has {prior.size} entries for a menu of {size}")
    if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name}: prior must be nonnegative and sum to 1")
    return prior


def experiment_variables(n_a: int, n_b: int, channel: DisclosureChannel, l_bits: int | None, l_e0: bool) -> list[Variable]:
    vs = [
        Variable("A", tuple(range(n_a))),
        Variable("B", tuple(range(n_b))),
        Variable("C", tuple(int(k) for k in channel.menu)),
        Variable("X", OUTCOMES),
        Variable("Y", OUTCOMES),
        Variable("Z", channel.z_domain),
    ]
    if l_bits is not None:
        vs.append(Variable("L", tuple(range(2**l_bits * (2 if l_e0 else 1)))))
    return vs


def run_experiment(
    model: OnticSampler,
    menu_a: Sequence,
    menu_b: Sequence,
    prior_a=None,
    prior_b=None,
    channel: DisclosureChannel = DisclosureChannel(),
    prior_c=None,
    n: int = 100_000,
    seed=0,
    l_bits: int | None = 6,
    l_e0: bool = False,
    workers: int = 1,
) -> ProbabilityTable:
    """Simulate ``n`` trials and tally the joint table.

    Settings and the disclosure choice are drawn independently of the ontic
    state.  Trials are split into fixed-size chunks, each with its own child
    stream of ``seed``, so the table does not depend on ``workers``.
    """
    if n < 1:
        raise ValueError("number of trials must be at least 1")
    if not len(menu_a) or not len(menu_b):
        raise ValueError("setting menus must be nonempty")
    menu_a = [as_setting(a) for a in menu_a]
    menu_b = [as_setting(b) for b in menu_b]
    pa = _check_prior(prior_a, len(menu_a), "A")
    pb = _check_prior(prior_b, len(menu_b), "B")
    pc = _check_prior(prior_c, len(channel.menu), "C")
    ref = as_state(model.ref)
    bases = {(i, k): joint_eigenbasis(a, b, ref) for i, a in enumerate(menu_a) for k, b in enumerate(menu_b)}
    variables = experiment_variables(len(menu_a), len(menu_b), channel, l_bits, l_e0)
    shape = tuple(len(v) for v in variables)
    menu_c = np.array(channel.menu, dtype=np.int64)

    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    gens = spawn_generators(seed, len(sizes))

    def chunk(args):
        m, rng = args
        ia = rng.choice(len(pa), size=m, p=pa)
        ib = rng.choice(len(pb), size=m, p=pb)
        ic = rng.choice(len(pc), size=m, p=pc)
        lam = model.sample(m, rng)
        x = np.empty(m, dtype=np.int64)
        y = np.empty(m, dtype=np.int64)
        for (i, k), basis in bases.items():
            sel = np.flatnonzero((ia == i) & (ib == k))
            if sel.size:
                _, xs, ys = batch_outcomes(lam_subset(lam, sel), basis)
                x[sel], y[sel] = xs, ys
        e0 = in_E0_batch(lam.phi, lam.tau, ref)
        zval = channel.read(menu_c[ic], lam.tau, e0)
        cols = [ia, ib, ic, (x + 1) // 2, (y + 1) // 2, zval]
        if l_bits is not None:
            lbin = np.floor(lam.tau * 2**l_bits).astype(np.int64)
            cols.append(2 * lbin + e0 if l_e0 else lbin)
        flat = np.ravel_multi_index(tuple(cols), shape)
        return np.bincount(flat, minlength=int(np.prod(shape)))

    jobs = list(zip(sizes, gens))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(chunk, jobs))
    else:
        parts = [chunk(j) for j in jobs]
    counts = np.sum(parts, axis=0).reshape(shape)
    return ProbabilityTable.from_counts(variables, counts)


def lam_subset(lam: OnticBatch, sel) -> OnticBatch:
    return OnticBatch(phi=lam.phi[sel], tau=lam.tau[sel], from_e0=lam.from_e0[sel])


def exact_table(
    psi,
    menu_a: Sequence,
    menu_b: Sequence,
    prior_a=None,
    prior_b=None,
    ref=KET00,
    with_cz: bool = False,
) -> ProbabilityTable:
    """Quantum-oracle table over (A, B, X, Y) with independent priors.

    With ``with_cz`` the table also carries a single-valued C and Z, i.e. a
    disclosure channel that reveals nothing.
    """
    pa = _check_prior(prior_a, len(menu_a), "A")
    pb = _check_prior(prior_b, len(menu_b), "B")
    p = np.zeros((len(menu_a), len(menu_b), 2, 2))
    for i, a in enumerate(menu_a):
        for k, b in enumerate(menu_b):
            born = born_distribution(psi, a, b, ref)
            for (x, y), q in born.items():
                p[i, k, (x + 1) // 2, (y + 1) // 2] = pa[i] * pb[k] * q
    vs = [
        Variable("A", tuple(range(len(menu_a)))),
        Variable("B", tuple(range(len(menu_b)))),
        Variable("X", OUTCOMES),
        Variable("Y", OUTCOMES),
    ]
    if with_cz:
        vs += [Variable("C", (0,)), Variable("Z", (0,))]
        p = p[..., None, None]
    return ProbabilityTable(vs, p / p.sum())

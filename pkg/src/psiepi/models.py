"""Uniform front end over the two hidden-variable models plus Monte Carlo CHSH."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .epistemic import sample_epistemic_batch
from .hilbert import KET00, as_state, joint_eigenbasis
from .ontic import OnticBatch, batch_outcomes, sample_ontic_batch

KINDS = ("ontic", "epistemic")


@dataclass(frozen=True, eq=False)
class OnticSampler:
    psi: np.ndarray
    kind: str = "ontic"
    ref: np.ndarray = field(default_factory=lambda: KET00.copy())

    def __post_init__(self):
        as_state(self.psi)
        as_state(self.ref)
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")

    def sample(self, n: int, rng: np.random.Generator) -> OnticBatch:
        if self.kind == "ontic":
            return sample_ontic_batch(self.psi, n, rng)
        return sample_epistemic_batch(self.psi, self.ref, n, rng)


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    """Independent streams derived from one seed; the split is fixed by ``n`` alone."""
    if isinstance(seed, np.random.Generator):
        seed = np.random.SeedSequence(seed.integers(0, 2**63, size=2).tolist())
    elif not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return [np.random.default_rng(s) for s in seed.spawn(n)]


@dataclass
class CorrelationEstimate:
    mean: float
    n: int

    @property
    def stderr(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.mean**2) / self.n)


def sample_correlation(model: OnticSampler, a, b, n: int, rng: np.random.Generator) -> CorrelationEstimate:
    basis = joint_eigenbasis(a, b, model.ref)
    _, x, y = batch_outcomes(model.sample(n, rng), basis)
    return CorrelationEstimate(float(np.mean(x * y)), n)


@dataclass
class CHSHEstimate:
    value: float
    stderr: float
    terms: list[CorrelationEstimate]


def mc_chsh(model: OnticSampler, a, a2, b, b2, n: int, seed) -> CHSHEstimate:
    """Monte Carlo CHSH with ``n`` model samples for each of the four setting pairs."""
    pairs = [(a, b), (a, b2), (a2, b), (a2, b2)]
    signs = [1, 1, 1, -1]
    gens = spawn_generators(seed, 4)
    terms = [sample_correlation(model, x, y, n, g) for (x, y), g in zip(pairs, gens)]
    value = sum(s * t.mean for s, t in zip(signs, terms))
    stderr = math.sqrt(sum(t.stderr**2 for t in terms))
    return CHSHEstimate(value, stderr, terms)

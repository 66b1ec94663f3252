"""psi-epistemic redistribution of the Bell model.

States close to the reference (``|<phi|ref>|^2 > 3/4``, the *cap*) give up the
slice ``tau < z(phi)`` of their ontic support to a shared region E0, where
every ontic state yields the outcome of the first ordered basis vector.
Distinct preparations in the cap therefore share ontic states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import (
    KET00,
    JointEigenbasis,
    as_state,
    joint_eigenbasis,
    orthonormal_complement,
    overlap,
    rays_equal,
)
from .ontic import OnticBatch, OnticState, assigned_indices, sample_ontic_batch
from .oracle import born_distribution

CAP_THRESHOLD = 0.75
CONSTRAINT_LEVEL = 0.25
Z_MAX = 0.25
MAX_PROPOSALS = 10**7


@dataclass(frozen=True)
class EpistemicParams:
    ref: np.ndarray = field(default_factory=lambda: KET00.copy())
    cap_threshold: float = CAP_THRESHOLD
    constraint_level: float = CONSTRAINT_LEVEL

    def __post_init__(self):
        as_state(self.ref)
        if self.cap_threshold != CAP_THRESHOLD or self.constraint_level != CONSTRAINT_LEVEL:
            raise ValueError("cap threshold and constraint level are fixed at 3/4 and 1/4")


def z_from_c2(c2):
    """z as a function of the reference overlap ``c2 = |<ref|phi>|^2``.

    The minimizing phi' sits in the plane of ref and phi, rotated 60 degrees
    away from ref (the edge of the constraint), so
    ``z = cos^2(arccos c + pi/3)`` until that angle reaches 90 degrees.
    """
    c2 = np.clip(np.asarray(c2, dtype=float), 0.0, 1.0)
    c = np.sqrt(c2)
    val = (c - math.sqrt(3.0) * np.sqrt(1.0 - c2)) ** 2 / 4.0
    out = np.where(c2 > CAP_THRESHOLD, val, 0.0)
    return float(out) if out.ndim == 0 else out


def z(phi, ref=KET00) -> float:
    """inf of |<phi'|phi>|^2 over phi' with |<phi'|ref>|^2 >= 1/4."""
    return z_from_c2(overlap(as_state(ref), as_state(phi)))


def in_cap(phi, ref=KET00) -> bool:
    return overlap(ref, phi) > CAP_THRESHOLD


def in_E0(lam: OnticState, ref=KET00) -> bool:
    c2 = overlap(ref, lam.phi)
    return c2 > CAP_THRESHOLD and 0.0 <= lam.tau < z_from_c2(c2)


def in_E0_batch(phi, tau, ref=KET00) -> np.ndarray:
    c2 = np.abs(np.asarray(phi) @ np.conj(ref)) ** 2
    return (c2 > CAP_THRESHOLD) & (np.asarray(tau) < z_from_c2(c2))


def sample_cap(ref, n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random states conditioned on the cap, drawn directly.

    For Haar states in C^4 the reference overlap ``t`` has density ``3(1-t)^2``
    and, given ``t``, the orthogonal part is Haar on the complement.  Inverting
    the conditional CDF of ``t`` on (3/4, 1] avoids discarding 63/64 of
    unconstrained draws.
    """
    ref = as_state(ref)
    u = rng.random(n)
    t = 1.0 - (1.0 - CAP_THRESHOLD) * (1.0 - u) ** (1.0 / 3.0)
    alpha = rng.uniform(0.0, 2 * np.pi, n)
    g = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    perp = g @ orthonormal_complement(ref)
    return (np.sqrt(t) * np.exp(1j * alpha))[:, None] * ref + np.sqrt(1.0 - t)[:, None] * perp


def sample_E0_batch(ref, n: int, rng: np.random.Generator, chunk: int = 65536) -> tuple[OnticBatch, int]:
    """Uniform samples on E0 (Haar on states x Lebesgue on tau) by rejection.

    A cap state is accepted with probability ``z(phi)/Z_MAX``; ``tau`` is then
    uniform on ``[0, z(phi))``.  Returns the batch and the number of cap
    proposals consumed.
    """
    ref = as_state(ref)
    phis, taus = [], []
    have = 0
    proposals = 0
    while have < n:
        if proposals >= MAX_PROPOSALS * max(1, n):
            raise RuntimeError("E0 rejection sampler exceeded its proposal budget")
        phi = sample_cap(ref, chunk, rng)
        zs = z_from_c2(np.abs(phi @ ref.conj()) ** 2)
        keep = rng.random(chunk) * Z_MAX < zs
        proposals += chunk
        phi, zs = phi[keep], zs[keep]
        phis.append(phi)
        taus.append(rng.random(len(zs)) * zs)
        have += len(zs)
    phi = np.concatenate(phis)[:n]
    tau = np.concatenate(taus)[:n]
    return OnticBatch(phi=phi, tau=tau, from_e0=np.ones(n, dtype=bool)), proposals


def sample_E0_uniform(ref, rng: np.random.Generator) -> OnticState:
    batch, _ = sample_E0_batch(ref, 1, rng, chunk=256)
    return batch[0]


def sample_epistemic_batch(psi, ref, n: int, rng: np.random.Generator) -> OnticBatch:
    """Draw ``n`` ontic states from the redistributed density for preparation ``psi``."""
    psi = as_state(psi)
    ref = as_state(ref)
    c2 = overlap(ref, psi)
    if c2 <= CAP_THRESHOLD:
        return sample_ontic_batch(psi, n, rng)
    zpsi = z_from_c2(c2)
    n_e0 = int(rng.binomial(n, zpsi))
    own = OnticBatch(
        phi=np.broadcast_to(psi, (n - n_e0, 4)),
        tau=rng.uniform(zpsi, 1.0, n - n_e0),
        from_e0=np.zeros(n - n_e0, dtype=bool),
    )
    if n_e0 == 0:
        return own
    shared, _ = sample_E0_batch(ref, n_e0, rng)
    merged = OnticBatch.concat([own, shared])
    # interleave so that sample order carries no branch information
    perm = rng.permutation(n)
    return OnticBatch(phi=merged.phi[perm], tau=merged.tau[perm], from_e0=merged.from_e0[perm])


def sample_epistemic(psi, ref, rng: np.random.Generator) -> OnticState:
    return sample_epistemic_batch(psi, ref, 1, rng)[0]


@dataclass
class BornCheck:
    """Per-cell comparison of sampled index frequencies against Born probabilities."""

    expected: np.ndarray
    observed: np.ndarray
    tolerance: np.ndarray
    n: int
    outcomes: tuple

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.observed - self.expected)

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())

    @property
    def passed(self) -> bool:
        return bool(np.all(self.deviations <= self.tolerance))


def frequency_check(indices: np.ndarray, basis: JointEigenbasis, expected: np.ndarray, sigma: float = 4.0) -> BornCheck:
    n = len(indices)
    observed = np.bincount(indices, minlength=4) / n
    tol = sigma * np.sqrt(expected * (1.0 - expected) / n)
    return BornCheck(expected=expected, observed=observed, tolerance=tol, n=n, outcomes=basis.outcomes)


def epistemic_born_check(psi, a, b, ref, n: int, rng: np.random.Generator, sigma: float = 4.0) -> BornCheck:
    """Sample ``n`` states from the redistributed density and compare cell frequencies."""
    basis = joint_eigenbasis(a, b, ref)
    batch = sample_epistemic_batch(psi, ref, n, rng)
    j = assigned_indices(batch.phi, batch.tau, basis)
    born = born_distribution(psi, a, b, ref)
    expected = np.array([born[o] for o in basis.outcomes])
    return frequency_check(j, basis, expected, sigma)


SAMPLE_COLUMNS = ("in_E0", "c2", "tau", "j", "X", "Y")


def sample_rows(psi, a, b, ref, n: int, rng: np.random.Generator) -> list[tuple]:
    """Per-sample dump: E0 flag, |<phi|ref>|^2, tau, assigned index and outcomes."""
    basis = joint_eigenbasis(a, b, ref)
    batch = sample_epistemic_batch(psi, ref, n, rng)
    j = assigned_indices(batch.phi, batch.tau, basis)
    c2 = np.abs(np.asarray(batch.phi) @ np.asarray(ref).conj()) ** 2
    xs, ys = basis.x_labels[j], basis.y_labels[j]
    return [(int(e), float(c), float(t), int(k), int(x), int(y))
            for e, c, t, k, x, y in zip(batch.from_e0, c2, batch.tau, j, xs, ys)]


@dataclass(frozen=True, eq=False)
class OverlapCertificate:
    psi1: np.ndarray
    psi2: np.ndarray
    z1: float
    z2: float
    lower_bound: float
    witness: str

    def to_dict(self) -> dict:
        return {
            "psi1": [[float(c.real), float(c.imag)] for c in self.psi1],
            "psi2": [[float(c.real), float(c.imag)] for c in self.psi2],
            "z1": self.z1,
            "z2": self.z2,
            "lower_bound": self.lower_bound,
            "witness": self.witness,
        }


def overlap_certificate(psi1, psi2, ref=KET00) -> OverlapCertificate:
    """Lower-bound the shared ontic mass of two preparations.

    Both densities contain the same uniform E0 component weighted by their z
    values, so their overlap is at least ``min(z1, z2)`` when both lie in the cap.
    A zero bound only means no certificate, not a proof of disjointness.
    """
    psi1 = as_state(psi1)
    psi2 = as_state(psi2)
    ref = as_state(ref)
    if rays_equal(psi1, psi2):
        raise ValueError("overlap certificate needs ray-distinct states")
    z1, z2 = z(psi1, ref), z(psi2, ref)
    if in_cap(psi1, ref) and in_cap(psi2, ref):
        bound = min(z1, z2)
        witness = f"shared uniform E0 component with weights z1={z1:.17g}, z2={z2:.17g}"
    else:
        bound = 0.0
        witness = "at least one state outside the cap; no shared E0 component"
    return OverlapCertificate(psi1, psi2, z1, z2, bound, witness)


def z_profile(points: int = 101) -> tuple[np.ndarray, np.ndarray]:
    c2 = np.linspace(0.0, 1.0, points)
    return c2, z_from_c2(c2)

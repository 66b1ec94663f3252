"""Generalized Bell model for two qubits: the psi-ontic baseline.

An ontic state is a pair ``(phi, tau)``.  For preparation ``psi`` the model
puts ``phi = psi`` and draws ``tau`` uniformly on [0, 1).  Given settings the
ordered eigenbasis splits [0, 1) into consecutive intervals of lengths
``|<phi_j|phi>|^2``; the interval containing ``tau`` fixes ``(X, Y)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import KET00, JointEigenbasis, as_setting, as_state, joint_eigenbasis
from .oracle import born_distribution


@dataclass(frozen=True, eq=False)
class OnticState:
    phi: np.ndarray
    tau: float

    def __post_init__(self):
        as_state(self.phi)
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau!r}")


@dataclass(eq=False)
class OnticBatch:
    """Many ontic states at once.

    ``phi`` has shape ``(n, 4)``; for the ontic model it is a read-only
    broadcast view of the single preparation.  ``from_e0`` marks samples drawn
    from the redistributed region (always False for the ontic model).
    """

    phi: np.ndarray
    tau: np.ndarray
    from_e0: np.ndarray

    def __len__(self) -> int:
        return len(self.tau)

    def __getitem__(self, i: int) -> OnticState:
        return OnticState(np.array(self.phi[i]), float(self.tau[i]))

    @classmethod
    def concat(cls, parts: list["OnticBatch"]) -> "OnticBatch":
        return cls(
            phi=np.concatenate([np.asarray(p.phi) for p in parts]),
            tau=np.concatenate([p.tau for p in parts]),
            from_e0=np.concatenate([p.from_e0 for p in parts]),
        )


def sample_ontic(psi, rng: np.random.Generator) -> OnticState:
    psi = as_state(psi)
    return OnticState(psi, float(rng.random()))


def sample_ontic_batch(psi, n: int, rng: np.random.Generator) -> OnticBatch:
    psi = as_state(psi)
    return OnticBatch(
        phi=np.broadcast_to(psi, (n, 4)),
        tau=rng.random(n),
        from_e0=np.zeros(n, dtype=bool),
    )


def cumulative_bounds(weights: np.ndarray) -> np.ndarray:
    """Upper interval edges S_0..S_3 with the last edge clamped to exactly 1."""
    s = np.cumsum(weights, axis=-1)
    s[..., 3] = 1.0
    return s


def assigned_indices(phi, tau, basis: JointEigenbasis) -> np.ndarray:
    """Vectorized index assignment: ``j`` with ``S_{j-1} <= tau < S_j``."""
    tau = np.asarray(tau, dtype=float)
    phi = np.asarray(phi)
    s = cumulative_bounds(basis.overlaps(phi))
    if s.ndim == 1:
        return np.searchsorted(s[:3], tau, side="right")
    return np.sum(s[..., :3] <= tau[..., None], axis=-1)


def assigned_index(lam: OnticState, basis: JointEigenbasis) -> int:
    return int(assigned_indices(lam.phi, lam.tau, basis))


def outcomes(lam: OnticState, a, b, ref=KET00) -> tuple[int, int]:
    basis = joint_eigenbasis(a, b, ref)
    return basis.outcomes[assigned_index(lam, basis)]


def batch_outcomes(batch: OnticBatch, basis: JointEigenbasis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(j, X, Y)`` arrays for every state in ``batch``."""
    j = assigned_indices(batch.phi, batch.tau, basis)
    return j, basis.x_labels[j], basis.y_labels[j]


def interval_lengths(phi, basis: JointEigenbasis) -> np.ndarray:
    """Measure of {tau : Phi_j(phi, tau) = 1} for each j, computed from the clamped edges."""
    s = cumulative_bounds(basis.overlaps(phi))
    return np.diff(s, prepend=0.0)


def exact_born_check(psi, a, b, ref=KET00) -> float:
    """Largest gap between the tau-interval lengths and the Born probabilities."""
    psi = as_state(psi)
    basis = joint_eigenbasis(as_setting(a), as_setting(b), ref)
    lengths = interval_lengths(psi, basis)
    born = born_distribution(psi, a, b, ref)
    return float(max(abs(lengths[j] - born[basis.outcomes[j]]) for j in range(4)))

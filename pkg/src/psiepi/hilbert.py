"""Complex linear algebra on the two-qubit space C^2 (x) C^2.

States are plain ``numpy`` arrays of shape ``(4,)`` with index ``2*i_A + i_B``.
Settings are real unit 3-vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
# overlaps closer than this are treated as tied when ordering the eigenbasis
TIE_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
I2 = np.eye(2, dtype=complex)

# lexicographic rank of outcome labels, (+1,+1) first
LABEL_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def as_state(amps, tol: float = NORM_TOL) -> np.ndarray:
    """Validate and return a normalized two-qubit state vector."""
    v = np.asarray(amps, dtype=complex).reshape(-1)
    if v.shape != (4,):
        raise ValueError(f"state vector must have 4 amplitudes, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("state vector has non-finite amplitudes")
    norm2 = float(np.vdot(v, v).real)
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"state vector is not normalized: |psi|^2 = {norm2!r}")
    return v


def as_setting(n, tol: float = NORM_TOL) -> np.ndarray:
    """Validate and return a unit measurement direction."""
    a = np.asarray(n, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"setting must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("setting has non-finite components")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"setting is not a unit vector: |n| = {norm!r}")
    return a


def normalize(amps) -> np.ndarray:
    v = np.asarray(amps, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def basis_state(i_a: int, i_b: int) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[2 * i_a + i_b] = 1.0
    return v


KET00 = basis_state(0, 0)
SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def setting_xz(angle: float) -> np.ndarray:
    """Unit vector in the x-z plane at ``angle`` radians from +z toward +x."""
    return np.array([np.sin(angle), 0.0, np.cos(angle)])


def observable_from_setting(a) -> np.ndarray:
    """Return ``a . sigma`` as a 2x2 complex matrix."""
    a = as_setting(a)
    return np.tensordot(a, PAULI, axes=1)


def fix_phase(v: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size == 0:
        return v
    first = v[nz[0]]
    return v * (abs(first) / first)


def local_eigenvector(a, sign: int) -> np.ndarray:
    """Eigenvector of ``a . sigma`` with eigenvalue ``sign`` (Bloch-sphere form)."""
    a = as_setting(a)
    # atan2 keeps the polar angle accurate near the poles, where arccos(n_z) does not
    theta = np.arctan2(np.hypot(a[0], a[1]), a[2])
    phi = np.arctan2(a[1], a[0])
    if sign == 1:
        v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    elif sign == -1:
        v = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
    else:
        raise ValueError("sign must be +1 or -1")
    return fix_phase(v.astype(complex))


def overlap(u, v) -> float:
    """Transition probability |<u|v>|^2, clipped to [0, 1]."""
    return float(min(1.0, max(0.0, abs(np.vdot(u, v)) ** 2)))


def rays_equal(u, v, tol: float = 1e-12) -> bool:
    """True when ``u`` and ``v`` differ only by a global phase."""
    return overlap(u, v) > 1.0 - tol


@dataclass(frozen=True, eq=False)
class JointEigenbasis:
    """Factorized common eigenbasis of A(x)I and I(x)B, ordered by overlap with ``reference``.

    ``vectors[j]`` is the ket of index ``j`` (row-major, shape ``(4, 4)``);
    ``outcomes[j]`` is its ``(X, Y)`` label pair.
    """

    vectors: np.ndarray
    outcomes: tuple[tuple[int, int], ...]
    reference: np.ndarray
    ref_overlaps: np.ndarray

    @property
    def x_labels(self) -> np.ndarray:
        return np.array([o[0] for o in self.outcomes])

    @property
    def y_labels(self) -> np.ndarray:
        return np.array([o[1] for o in self.outcomes])

    def overlaps(self, phi) -> np.ndarray:
        """|<phi_j|phi>|^2 for each basis vector (vectorized over leading axes of ``phi``)."""
        amps = np.asarray(phi) @ self.vectors.conj().T
        return np.abs(amps) ** 2

    def projector(self, j: int) -> np.ndarray:
        v = self.vectors[j]
        return np.outer(v, v.conj())


def _order(ref_overlaps: np.ndarray, labels) -> list[int]:
    ranks = [LABEL_ORDER.index(lab) for lab in labels]
    order = sorted(range(4), key=lambda k: (-ref_overlaps[k], ranks[k]))
    # re-sort clusters of numerically tied overlaps by label rank alone
    out: list[int] = []
    i = 0
    while i < 4:
        k = i
        while k + 1 < 4 and ref_overlaps[order[k]] - ref_overlaps[order[k + 1]] <= TIE_TOL:
            k += 1
        out.extend(sorted(order[i:k + 1], key=lambda m: ranks[m]))
        i = k + 1
    return out


def joint_eigenbasis(a, b, ref=KET00) -> JointEigenbasis:
    """Build the ordered product eigenbasis for settings ``a`` and ``b``.

    Each factor is an eigenvector of the local observable, so the degenerate
    spectrum of A(x)B never has to be diagonalized.
    """
    a = as_setting(a)
    b = as_setting(b)
    ref = as_state(ref)
    labels = list(LABEL_ORDER)
    vecs = [fix_phase(np.kron(local_eigenvector(a, x), local_eigenvector(b, y))) for x, y in labels]
    ovs = np.array([overlap(v, ref) for v in vecs])
    order = _order(ovs, labels)
    return JointEigenbasis(
        vectors=np.array([vecs[k] for k in order]),
        outcomes=tuple(labels[k] for k in order),
        reference=ref,
        ref_overlaps=ovs[order],
    )


def random_state(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random two-qubit state(s) from normalized complex Gaussians."""
    shape = (4,) if size is None else (size, 4)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def random_setting(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = (3,) if size is None else (size, 3)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def orthonormal_complement(ref) -> np.ndarray:
    """Three orthonormal kets spanning the complement of ``ref`` (rows of the result)."""
    ref = as_state(ref)
    # QR of [ref | I] gives an orthonormal basis whose first column is +-ref
    q, _ = np.linalg.qr(np.column_stack([ref, np.eye(4, dtype=complex)]))
    return q[:, 1:4].T.copy()

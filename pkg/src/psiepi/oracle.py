"""Born-rule ground truth for the two-qubit measurement scenario.

Probabilities here are computed from local spectral projectors
``(1 + s n.sigma)/2``, not from the ordered eigenbasis, so they stay an
independent check on the hidden-variable models.
"""
from __future__ import annotations

import numpy as np

from .hilbert import I2, KET00, LABEL_ORDER, as_setting, as_state, observable_from_setting

OUTCOME_PAIRS = LABEL_ORDER


def local_projector(a, sign: int) -> np.ndarray:
    return (I2 + sign * observable_from_setting(a)) / 2


def born_distribution(psi, a, b, ref=KET00) -> dict[tuple[int, int], float]:
    """Map each outcome pair ``(X, Y)`` to its quantum probability.

    ``ref`` only fixes the eigenbasis ordering in the models; the Born
    probabilities do not depend on it and it is accepted for signature parity.
    """
    psi = as_state(psi)
    a = as_setting(a)
    b = as_setting(b)
    as_state(ref)
    out = {}
    for x, y in OUTCOME_PAIRS:
        proj = np.kron(local_projector(a, x), local_projector(b, y))
        out[(x, y)] = float(max(0.0, np.vdot(psi, proj @ psi).real))
    return out


def correlation(psi, a, b, ref=KET00) -> float:
    p = born_distribution(psi, a, b, ref)
    return float(sum(x * y * q for (x, y), q in p.items()))


def chsh(psi, a, a2, b, b2, ref=KET00) -> float:
    """S = E(a,b) + E(a,b') + E(a',b) - E(a',b')."""
    return (
        correlation(psi, a, b, ref)
        + correlation(psi, a, b2, ref)
        + correlation(psi, a2, b, ref)
        - correlation(psi, a2, b2, ref)
    )

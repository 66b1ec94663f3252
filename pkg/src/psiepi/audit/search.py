"""Grid search for statistically significant violations of PI, FR and ST."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..hilbert import setting_xz
from ..models import OnticSampler
from .conditions import CHECKS, WITNESS_SIGMA, ConditionVerdict
from .experiment import DisclosureChannel, run_experiment
from .tables import ProbabilityTable


@dataclass
class Witness:
    menu_a: list
    menu_b: list
    table: ProbabilityTable
    verdicts: dict[str, ConditionVerdict]


def xz_menus(offsets=(0.0, np.pi / 8, np.pi / 5)):
    """2x2 menus in the x-z plane: CHSH-optimal angles first, then rotated copies."""
    base_a = (0.0, np.pi / 2)
    base_b = (np.pi / 4, -np.pi / 4)
    for da, db in itertools.product(offsets, repeat=2):
        yield [setting_xz(t + da) for t in base_a], [setting_xz(t + db) for t in base_b]


def find_witness(
    model: OnticSampler,
    conditions=("PI", "FR"),
    menus=None,
    channel: DisclosureChannel = DisclosureChannel(),
    n: int = 1_000_000,
    seed=0,
    sigma: float = WITNESS_SIGMA,
    workers: int = 1,
) -> Witness | None:
    """First menu on which every condition in ``conditions`` has a >= ``sigma`` violation."""
    menus = xz_menus() if menus is None else menus
    for k, (ma, mb) in enumerate(menus):
        table = run_experiment(model, ma, mb, channel=channel, n=n, seed=_child(seed, k), workers=workers)
        verdicts = {c: CHECKS[c](table) for c in conditions}
        if all(v.witness(sigma) for v in verdicts.values()):
            return Witness(list(ma), list(mb), table, verdicts)
    return None


def _child(seed, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), k])

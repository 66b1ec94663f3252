from .conditions import CHECKS, ConditionVerdict, check_FR, check_FW, check_NS2, check_PI, check_ST
from .experiment import DisclosureChannel, exact_table, run_experiment
from .implications import (
    derive_ns_from_free_choice,
    derive_ns_from_free_choice_sampled,
    verify_implication_fr,
    verify_implication_fr_sampled,
)
from .tables import ConditionalTable, EmptyConditionalError, ProbabilityTable, Variable, condition

__all__ = [
    "CHECKS",
    "ConditionVerdict",
    "ConditionalTable",
    "DisclosureChannel",
    "EmptyConditionalError",
    "ProbabilityTable",
    "Variable",
    "check_FR",
    "check_FW",
    "check_NS2",
    "check_PI",
    "check_ST",
    "condition",
    "derive_ns_from_free_choice",
    "derive_ns_from_free_choice_sampled",
    "exact_table",
    "run_experiment",
    "verify_implication_fr",
    "verify_implication_fr_sampled",
]

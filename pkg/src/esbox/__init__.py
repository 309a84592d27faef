"""Exact simulation and verification of entanglement-swapping boxes."""

from .boxes import (
    ESBox,
    SubPrimitiveBox,
    apply_box,
    bell_from_ghz_box,
    bell_state,
    canonical_input,
    ghz_box,
    ghz_state,
    random_es_box,
    teleportation_box,
    twirl,
    twirled_box,
    validate_es_box,
)
from .comm import (
    build_report,
    cc_lower_bound,
    dense_coding_cv,
    eaccqc_maximize,
    eaccqc_objective,
    lemma1_gap,
    nonsignaling_check,
    theorem3_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "ESBox",
    "SubPrimitiveBox",
    "apply_box",
    "bell_from_ghz_box",
    "bell_state",
    "build_report",
    "canonical_input",
    "cc_lower_bound",
    "dense_coding_cv",
    "eaccqc_maximize",
    "eaccqc_objective",
    "ghz_box",
    "ghz_state",
    "lemma1_gap",
    "nonsignaling_check",
    "random_es_box",
    "teleportation_box",
    "theorem3_protocol",
    "twirl",
    "twirled_box",
    "validate_es_box",
]

"""2-adic calculus for T-functions and relations between their coordinate sequences."""
from ._backend import BACKEND
from .calculus import (
    DiffReport,
    TransitivityStatus,
    Verdict,
    certify_transitive,
    check_compatibility,
    derivative_mod,
    derivative_product_check,
    estimate_NM,
    is_bijective_bruteforce,
    is_transitive_bruteforce,
    proof_probe,
)
from .expr import TFunction, TMap, WordMap, evaluate, iterate, parse, tfunction
from .relations import (
    RecoveryResult,
    RelationProfile,
    RelationVerdict,
    check_half_period,
    check_n_independence,
    coordinate_sequence,
    extract_linear,
    extract_quadratic,
    recover,
)
from .word import BitSeq, Word

__all__ = [
    "BACKEND", "BitSeq", "DiffReport", "RecoveryResult", "RelationProfile", "RelationVerdict",
    "TFunction", "TMap", "TransitivityStatus", "Verdict", "Word", "WordMap",
    "certify_transitive", "check_compatibility", "check_half_period", "check_n_independence",
    "coordinate_sequence", "derivative_mod", "derivative_product_check", "estimate_NM",
    "evaluate", "extract_linear", "extract_quadratic", "is_bijective_bruteforce",
    "is_transitive_bruteforce", "iterate", "parse", "proof_probe", "recover", "tfunction",
]
__version__ = "0.1.0"

"""Certified analysis toolkit for first-order constant-coefficient operators."""

from .catalog import CATALOG
from .certify import check_c_elliptic, check_constant_rank, check_r_elliptic, kernel_polynomials
from .report import classify
from .spectrum import (RankOneTriple, check_mixing, check_rank_one_property, polarize, rank_one_from_v,
                       rank_one_from_xi, spectrum_span)
from .symbol import Operator, OperatorError, eval_symbol, load_operator, save_operator

__all__ = [
    "CATALOG", "Operator", "OperatorError", "RankOneTriple", "check_c_elliptic", "check_constant_rank",
    "check_mixing", "check_r_elliptic", "check_rank_one_property", "classify", "eval_symbol",
    "kernel_polynomials", "load_operator", "polarize", "rank_one_from_v", "rank_one_from_xi",
    "save_operator", "spectrum_span",
]

__version__ = "0.1.0"

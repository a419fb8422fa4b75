"""Entropic uncertainty relations with quantum side information."""

__version__ = "0.1.0"

from .bounds import Relation, UncertaintyReport, Verdict, dp_trace, eval_relation
from .errors import UncertError
from .states import BasisSet, Povm, QState

__all__ = ["BasisSet", "Povm", "QState", "Relation", "UncertError", "UncertaintyReport",
           "Verdict", "dp_trace", "eval_relation", "__version__"]

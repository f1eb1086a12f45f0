"""3-SAT classification via compact triplet structures."""

__version__ = "0.1.0"

from .cts import Cts, Perm
from .formula import (Clause, GenParams, TabularFormula, bits_from_string,
                      bits_to_string, generate, parse_dimacs)
from .sep import Verdict, classify

__all__ = [
    "Clause",
    "Cts",
    "GenParams",
    "Perm",
    "TabularFormula",
    "Verdict",
    "bits_from_string",
    "bits_to_string",
    "classify",
    "generate",
    "parse_dimacs",
    "__version__",
]

"""Hereditarily finite coding trees, closure constructions and a small forcing workbench."""

from . import adcoding, codec, forcing, hfset, treealg
from .errors import BudgetExceeded, ParseError, StfError

__all__ = ["adcoding", "codec", "forcing", "hfset", "treealg", "BudgetExceeded", "ParseError", "StfError"]
__version__ = "0.1.0"

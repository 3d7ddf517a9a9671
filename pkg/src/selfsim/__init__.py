"""Computations with self-similar groups: wreath recursions, contracting
nuclei, virtual endomorphisms, iterated monodromy by path lifting and
limit-space data."""

from .core import (
    GroupWord,
    MooreAutomaton,
    Presentation,
    act_word,
    commutator,
    equal,
    format_presentation,
    is_identity,
    parse_presentation,
    permutation_on_level,
    restrict,
)
from .errors import BudgetExceeded, ParseError, SelfSimError
from .nucleus import compute_nucleus, moore_diagram, wordproblem_contracting
from .presets import PRESETS, preset_presentation

__version__ = "0.1.0"

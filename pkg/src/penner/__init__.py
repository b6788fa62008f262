"""Penner-type autoequivalences of signed tree categories.

Submodules: ``quiver`` (signed trees), ``laurent`` (Laurent polynomials and
matrices), ``twistcalc`` (transition matrices and their invariants), ``twcx``
(twisted complexes and twists), ``dynamics`` (orbits and comparisons) and
``cli``.
"""
from .errors import PennerError
from .quiver import SignedTree, a2_tree, d5_tree, load_tree, make_tree, star_tree
from .twistcalc import PennerWord, TwistLetter, invariants, parse_word, stretching_factor, word_matrix

__all__ = [
    "PennerError",
    "PennerWord",
    "SignedTree",
    "TwistLetter",
    "a2_tree",
    "d5_tree",
    "invariants",
    "load_tree",
    "make_tree",
    "parse_word",
    "star_tree",
    "stretching_factor",
    "word_matrix",
]

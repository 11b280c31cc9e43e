"""Exact geometric decompositions of H(div)-conforming simplicial elements.

The package constructs, in exact rational arithmetic, sub-simplex-aligned
decompositions of vector-, traceless-matrix- and symmetric-matrix-valued
polynomial spaces on n-simplices, the matching degree-of-freedom systems,
and mesh-level assembly with conformity and inf-sup diagnostics.
"""

from __future__ import annotations

__version__ = "0.1.0"

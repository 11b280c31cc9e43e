from __future__ import annotations

import random
from fractions import Fraction

from hdiv_geodecomp.simplex import Simplex, SingularGeometryError, reference_simplex


def random_simplex(rng: random.Random, n: int) -> Simplex:
    """Reference simplex with random rational vertex perturbations."""
    while True:
        pts = []
        for v in reference_simplex(n).vertices:
            pts.append(tuple(x + Fraction(rng.randint(-2, 2), rng.randint(3, 7)) for x in v))
        try:
            return Simplex(tuple(pts))
        except SingularGeometryError:
            continue


__all__ = ["random_simplex"]

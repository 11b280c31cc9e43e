"""Exact rational linear algebra: rank, nullspace, solve, subspace tests.

All routines are deterministic.  Elimination is fraction-free over integer
rows (each input row is scaled by the lcm of its denominators, which never
changes rank or kernel), with cross-multiplication updates and per-row
content reduction to keep entries small.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

Scalar = Fraction | int
RowSeq = Sequence[Sequence[Scalar]]


class SingularMatrixError(ValueError):
    """Raised when a solve/invert hits a rank-deficient square matrix."""


def _int_rows(mat: RowSeq) -> list[list[int]]:
    rows = []
    for row in mat:
        fracs = [Fraction(x) for x in row]
        scale = lcm(*(f.denominator for f in fracs)) if fracs else 1
        rows.append([int(f * scale) for f in fracs])
    return rows


def _reduce_content(row: list[int]) -> list[int]:
    g = 0
    for x in row:
        if x:
            g = gcd(g, x)
            if g == 1:
                return row
    if g > 1:
        return [x // g for x in row]
    return row


def _echelon_int(rows: list[list[int]]) -> list[tuple[int, int]]:
    """Reduce in place to row echelon form; return pivots as (row, col)."""
    m = len(rows)
    ncols = len(rows[0]) if m else 0
    pivots = []
    pr = 0
    for c in range(ncols):
        if pr == m:
            break
        sel = next((i for i in range(pr, m) if rows[i][c] != 0), None)
        if sel is None:
            continue
        rows[pr], rows[sel] = rows[sel], rows[pr]
        piv = rows[pr][c]
        rp_tail = rows[pr][c:]
        for i in range(pr + 1, m):
            x = rows[i][c]
            if x == 0:
                continue
            # Entries left of c are already zero below the pivot region.
            tail = [piv * a - x * b for a, b in zip(rows[i][c:], rp_tail)]
            rows[i] = [0] * c + _reduce_content(tail)
        pivots.append((pr, c))
        pr += 1
    return pivots


@dataclass(frozen=True)
class EchelonData:
    """Summary of one elimination run, used for rank certificates."""

    rows: int
    cols: int
    rank: int
    pivots: tuple[tuple[int, int, int], ...]  # (step, column, pivot value)

    def trace_hash(self) -> str:
        text = ",".join(f"{s}:{c}:{v}" for s, c, v in self.pivots)
        payload = f"{self.rows}x{self.cols};{text}"
        return hashlib.sha256(payload.encode()).hexdigest()


def echelon_data(mat: RowSeq) -> EchelonData:
    rows = _int_rows(mat)
    pivots = _echelon_int(rows)
    trace = tuple((step, c, rows[step][c]) for step, (_, c) in enumerate(pivots))
    ncols = len(rows[0]) if rows else 0
    return EchelonData(len(rows), ncols, len(pivots), trace)


def rank(mat: RowSeq) -> int:
    rows = _int_rows(mat)
    return len(_echelon_int(rows))


def primitive_vector(vec: Sequence[Scalar]) -> list[Fraction]:
    """Scale to coprime integer entries with positive leading sign."""
    fracs = [Fraction(x) for x in vec]
    scale = lcm(*(f.denominator for f in fracs)) if fracs else 1
    ints = [int(f * scale) for f in fracs]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    lead = next((x for x in ints if x), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return [Fraction(x) for x in ints]


def nullspace(mat: RowSeq, cols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right kernel, one primitive vector per free column."""
    rows = _int_rows(mat)
    if cols is None:
        if not rows:
            raise ValueError("cols is required for a matrix with no rows")
        cols = len(rows[0])
    pivots = _echelon_int(rows)
    pivot_cols = {c for _, c in pivots}
    basis = []
    for fc in range(cols):
        if fc in pivot_cols:
            continue
        x = [Fraction(0)] * cols
        x[fc] = Fraction(1)
        for pr, pc in reversed(pivots):
            row = rows[pr]
            acc = Fraction(0)
            for j in range(pc + 1, cols):
                if row[j] and x[j]:
                    acc += row[j] * x[j]
            x[pc] = -acc / row[pc]
        basis.append(primitive_vector(x))
    return basis


def solve_many(mat: RowSeq, rhs_cols: RowSeq) -> list[list[Fraction]]:
    """Solve A X = B exactly for square A; returns the columns of X.

    rhs_cols is a sequence of right-hand-side column vectors.
    """
    a = [list(row) for row in mat]
    m = len(a)
    if any(len(row) != m for row in a):
        raise ValueError("matrix must be square")
    cols = [list(col) for col in rhs_cols]
    if any(len(col) != m for col in cols):
        raise ValueError("right-hand side length mismatch")
    aug = [a[i] + [col[i] for col in cols] for i in range(m)]
    rows = _int_rows(aug)
    pivots = _echelon_int(rows)
    if len(pivots) < m or any(c != i for i, (_, c) in enumerate(pivots)):
        raise SingularMatrixError(f"matrix of size {m} is rank deficient")
    out = []
    for k in range(len(cols)):
        b = m + k
        x = [Fraction(0)] * m
        for i in range(m - 1, -1, -1):
            row = rows[i]
            acc = Fraction(row[b])
            for j in range(i + 1, m):
                if row[j] and x[j]:
                    acc -= row[j] * x[j]
            x[i] = acc / row[i]
        out.append(x)
    return out


def solve(mat: RowSeq, rhs: Sequence[Scalar]) -> list[Fraction]:
    return solve_many(mat, [rhs])[0]


def invert(mat: RowSeq) -> list[list[Fraction]]:
    m = len(mat)
    eye = [[Fraction(int(i == j)) for i in range(m)] for j in range(m)]
    cols = solve_many(mat, eye)
    return [[cols[j][i] for j in range(m)] for i in range(m)]


def det(mat: RowSeq) -> Fraction:
    """Determinant by the Bareiss fraction-free scheme."""
    m = len(mat)
    if any(len(row) != m for row in mat):
        raise ValueError("matrix must be square")
    if m == 0:
        return Fraction(1)
    rows = []
    scale = 1
    for row in mat:
        fracs = [Fraction(x) for x in row]
        s = lcm(*(f.denominator for f in fracs))
        scale *= s
        rows.append([int(f * s) for f in fracs])
    sign = 1
    prev = 1
    for k in range(m - 1):
        if rows[k][k] == 0:
            sel = next((i for i in range(k + 1, m) if rows[i][k] != 0), None)
            if sel is None:
                return Fraction(0)
            rows[k], rows[sel] = rows[sel], rows[k]
            sign = -sign
        for i in range(k + 1, m):
            rik = rows[i][k]
            rkk = rows[k][k]
            row_i = rows[i]
            row_k = rows[k]
            for j in range(k + 1, m):
                row_i[j] = (rkk * row_i[j] - rik * row_k[j]) // prev
            row_i[k] = 0
        prev = rows[k][k]
    return Fraction(sign * rows[m - 1][m - 1], scale)


def _concat(spans: Iterable[RowSeq]) -> list[list[Fraction]]:
    out = []
    for span in spans:
        out.extend([Fraction(x) for x in row] for row in span)
    return out


def subspace_equal(a_span: RowSeq, b_span: RowSeq) -> bool:
    """True iff the two row spans coincide (same ambient dimension assumed)."""
    ra = rank(a_span)
    rb = rank(b_span)
    return ra == rb == rank(_concat([a_span, b_span]))


def subspace_contains(outer_span: RowSeq, inner_span: RowSeq) -> bool:
    return rank(outer_span) == rank(_concat([outer_span, inner_span]))


def is_direct_sum(spans: Sequence[RowSeq]) -> bool:
    """True iff the spans are independent: Σ rank = rank of the union."""
    total = sum(rank(span) for span in spans)
    return total == rank(_concat(spans))


def subspace_intersection(a_span: RowSeq, b_span: RowSeq) -> list[list[Fraction]]:
    """Basis of span(A) ∩ span(B), as primitive vectors."""
    a = [[Fraction(x) for x in row] for row in a_span]
    b = [[Fraction(x) for x in row] for row in b_span]
    if not a or not b:
        return []
    n = len(a[0])
    # Kernel of [Aᵀ | -Bᵀ]: coefficient pairs with matching combinations.
    stacked = [[*(a[i][d] for i in range(len(a))), *(-b[j][d] for j in range(len(b)))] for d in range(n)]
    out = []
    for ker in nullspace(stacked, cols=len(a) + len(b)):
        vec = [sum(ker[i] * a[i][d] for i in range(len(a))) for d in range(n)]
        if any(vec):
            out.append(primitive_vector(vec))
    # The construction can repeat directions; keep an independent subset.
    kept: list[list[Fraction]] = []
    for vec in out:
        if not subspace_contains(kept, [vec]):
            kept.append(vec)
    return kept


def coordinates(span: RowSeq, vec: Sequence[Scalar]) -> list[Fraction] | None:
    """Coefficients of vec in the (independent) spanning rows, or None."""
    rows = [[Fraction(x) for x in row] for row in span]
    target = [Fraction(x) for x in vec]
    if not rows:
        return [] if not any(target) else None
    n = len(target)
    aug = [[rows[i][d] for i in range(len(rows))] + [target[d]] for d in range(n)]
    ech = _int_rows(aug)
    pivots = _echelon_int(ech)
    if any(c == len(rows) for _, c in pivots):
        return None
    coeffs = [Fraction(0)] * len(rows)
    for pr, pc in reversed(pivots):
        row = ech[pr]
        acc = Fraction(row[len(rows)])
        for j in range(pc + 1, len(rows)):
            if row[j] and coeffs[j]:
                acc -= row[j] * coeffs[j]
        coeffs[pc] = acc / row[pc]
    return coeffs

"""Exact integer invariants: linking matrices, Smith form, homology reports.

All arithmetic is arbitrary-precision integer (or exact rationals for the
signature diagonalization); nothing here ever touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .diagram import DOTTED, FRAMED, Diagram

__all__ = [
    "LinkingMatrix",
    "SNFResult",
    "InvariantReport",
    "linking_matrix",
    "smith_normal_form",
    "signature_data",
    "homology_report",
]

Matrix = Sequence[Sequence[int]]


@dataclass(frozen=True)
class LinkingMatrix:
    """Symmetric integer linking data over an ordered component basis.

    ``dotted_as_zero`` takes all decorated components with dotted circles as
    0-framed unknots (the boundary presentation); ``framed_only`` restricts
    to the framed components.
    """

    matrix: tuple[tuple[int, ...], ...]
    basis: tuple[str, ...]
    mode: str


@dataclass(frozen=True)
class SNFResult:
    """U . M . V = diag(divisors), with U and V unimodular."""

    divisors: tuple[int, ...]
    U: tuple[tuple[int, ...], ...]
    V: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class InvariantReport:
    """Homological summary of a diagram.

    ``h1_manifold`` and ``h1_boundary`` list elementary divisors with trivial
    (1) entries dropped; a 0 entry is a free summand.  Signature data is
    ``None`` whenever dotted components remain.
    """

    euler: int
    h1_manifold: tuple[int, ...]
    h1_boundary: tuple[int, ...]
    signature: Optional[int]
    b_plus: Optional[int]
    b_minus: Optional[int]
    parity: Optional[str]

    def as_dict(self) -> dict:
        return {
            "euler": self.euler,
            "h1_manifold": list(self.h1_manifold),
            "h1_boundary": list(self.h1_boundary),
            "signature": self.signature,
            "b_plus": self.b_plus,
            "b_minus": self.b_minus,
            "parity": self.parity,
        }


# ---------------------------------------------------------------------------
# Linking matrix


def linking_matrix(d: Diagram, mode: str = "dotted_as_zero") -> LinkingMatrix:
    if mode not in ("dotted_as_zero", "framed_only"):
        raise ValueError(f"unknown linking-matrix mode {mode!r}")
    if mode == "dotted_as_zero":
        comps = [c for c in d.components.values() if c.kind in (DOTTED, FRAMED)]
    else:
        comps = [c for c in d.components.values() if c.kind == FRAMED]
    basis = tuple(c.id for c in comps)
    dx = d.expand_boxes()
    idx = {cid: i for i, cid in enumerate(basis)}
    n = len(basis)
    M = [[0] * n for _ in range(n)]
    for c in comps:
        i = idx[c.id]
        M[i][i] = 0 if c.kind == DOTTED else c.framing
    for x in dx.crossings.values():
        oc, uc = dx.crossing_comps(x)
        if oc == uc or oc not in idx or uc not in idx:
            continue
        i, j = idx[oc], idx[uc]
        s = dx.effective_sign(x)
        M[i][j] += s
        M[j][i] += s
    for i in range(n):
        for j in range(n):
            if i != j:
                if M[i][j] % 2:
                    raise ValueError("odd inter-component crossing sum")
                M[i][j] //= 2
    return LinkingMatrix(tuple(tuple(row) for row in M), basis, mode)


# ---------------------------------------------------------------------------
# Smith normal form


def _identity(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(M: Matrix) -> SNFResult:
    """Exact Smith normal form with unimodular transforms.

    Returns divisors ``d_1 | d_2 | ...`` (non-negative, zeros trailing) and
    matrices with ``U * M * V = diag(divisors)``.
    """
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    if m and any(len(row) != n for row in A):
        raise ValueError("ragged matrix")
    U = _identity(m)
    V = _identity(n)

    def row_op(i, j, c):  # row i += c * row j
        for k in range(n):
            A[i][k] += c * A[j][k]
        for k in range(m):
            U[i][k] += c * U[j][k]

    def col_op(i, j, c):  # col i += c * col j
        for r in range(m):
            A[r][i] += c * A[r][j]
        for r in range(n):
            V[r][i] += c * V[r][j]

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def col_swap(i, j):
        for r in range(m):
            A[r][i], A[r][j] = A[r][j], A[r][i]
        for r in range(n):
            V[r][i], V[r][j] = V[r][j], V[r][i]

    def row_neg(i):
        for k in range(n):
            A[i][k] = -A[i][k]
        for k in range(m):
            U[i][k] = -U[i][k]

    t = 0
    r = min(m, n)
    while t < r:
        # find a pivot: smallest nonzero |entry| in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] != 0 and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        bi, bj = best
        if bi != t:
            row_swap(t, bi)
        if bj != t:
            col_swap(t, bj)
        if A[t][t] < 0:
            row_neg(t)
        # reduce row and column against the pivot until clean
        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, m):
                if A[i][t] != 0:
                    q = A[i][t] // A[t][t]
                    row_op(i, t, -q)
                    if A[i][t] != 0:
                        row_swap(t, i)
                        if A[t][t] < 0:
                            row_neg(t)
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j] != 0:
                    q = A[t][j] // A[t][t]
                    col_op(j, t, -q)
                    if A[t][j] != 0:
                        col_swap(t, j)
                        if A[t][t] < 0:
                            row_neg(t)
                        dirty = True
        # divisibility: pivot must divide every remaining entry
        fixed = False
        for i in range(t + 1, m):
            if fixed:
                break
            for j in range(t + 1, n):
                if A[i][j] % A[t][t] != 0:
                    row_op(t, i, 1)
                    fixed = True
                    break
        if fixed:
            continue
        t += 1

    divis = [A[i][i] for i in range(r)]
    return SNFResult(
        tuple(divis),
        tuple(tuple(row) for row in U),
        tuple(tuple(row) for row in V),
    )


def cokernel_divisors(M: Matrix, rows: Optional[int] = None) -> tuple[int, ...]:
    """Elementary divisors of coker(M: Z^cols -> Z^rows), 1s dropped.

    Torsion divisors come first (ascending in the division chain), followed
    by one 0 per free summand.  ``rows`` overrides the generator count for
    empty matrices.
    """
    m = len(M)
    if rows is None:
        rows = m
    divis = smith_normal_form(M).divisors if m else ()
    torsion = [x for x in divis if x not in (0, 1)]
    rank = sum(1 for x in divis if x != 0)
    free = rows - rank
    return tuple(torsion) + (0,) * free


# ---------------------------------------------------------------------------
# Signature


def signature_data(M: Matrix) -> tuple[int, int, int]:
    """(b_plus, b_minus, b_zero) of a symmetric matrix, by exact congruence.

    Diagonalizes over the rationals with symmetric row/column operations; the
    inertia is read off the diagonal.
    """
    n = len(M)
    A = [[Fraction(M[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if A[i][j] != A[j][i]:
                raise ValueError("matrix not symmetric")
    pos = neg = zero = 0
    k = 0
    while k < n:
        if A[k][k] == 0:
            # bring a nonzero diagonal entry to position k if possible
            piv = next((i for i in range(k + 1, n) if A[i][i] != 0), None)
            if piv is not None:
                A[k], A[piv] = A[piv], A[k]
                for row in A:
                    row[k], row[piv] = row[piv], row[k]
            else:
                off = next(
                    (
                        (i, j)
                        for i in range(k, n)
                        for j in range(i + 1, n)
                        if A[i][j] != 0
                    ),
                    None,
                )
                if off is None:
                    zero += n - k
                    break
                i, j = off
                # symmetric row/col add makes the diagonal nonzero
                for t in range(n):
                    A[i][t] += A[j][t]
                for t in range(n):
                    A[t][i] += A[t][j]
                if i != k:
                    A[k], A[i] = A[i], A[k]
                    for row in A:
                        row[k], row[i] = row[i], row[k]
        d = A[k][k]
        if d > 0:
            pos += 1
        else:
            neg += 1
        for i in range(k + 1, n):
            if A[i][k] != 0:
                c = A[i][k] / d
                for t in range(n):
                    A[i][t] -= c * A[k][t]
                for t in range(n):
                    A[t][i] -= c * A[t][k]
        k += 1
    return pos, neg, zero


# ---------------------------------------------------------------------------
# Reports


def homology_report(d: Diagram) -> InvariantReport:
    dotted = d.dotted()
    framed = d.framed()

    boundary_lm = linking_matrix(d, "dotted_as_zero")
    divis = smith_normal_form(boundary_lm.matrix).divisors if boundary_lm.basis else ()
    torsion = [x for x in divis if x not in (0, 1)]
    zeros = sum(1 for x in divis if x == 0)
    # each 3-handle caps a free boundary class (a nonseparating sphere)
    zeros = max(0, zeros - d.three_handles)
    h1_boundary = tuple(torsion) + (0,) * zeros

    thru = [
        [d.thru_count(dc.id, fc.id) for fc in framed] for dc in dotted
    ]
    h1_manifold = cokernel_divisors(thru, rows=len(dotted))

    if dotted:
        sig = bp = bm = parity = None
    else:
        fl = linking_matrix(d, "framed_only")
        bp, bm, _ = signature_data(fl.matrix)
        sig = bp - bm
        parity = "even" if all(fl.matrix[i][i] % 2 == 0 for i in range(len(fl.basis))) else "odd"

    return InvariantReport(
        euler=d.euler_characteristic(),
        h1_manifold=h1_manifold,
        h1_boundary=h1_boundary,
        signature=sig,
        b_plus=bp,
        b_minus=bm,
        parity=parity,
    )

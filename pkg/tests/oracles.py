"""Independent brute-force oracles used to pin down derived values.

Everything here is deliberately naive and slow: determinant expansion by
minors, Smith divisors via gcds of all k-minors, signatures via sign changes
of exactly-computed characteristic polynomials.  The production code must
agree with these on small inputs; the oracles are frozen and must not import
the package's numerical routines.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import gcd


def det_int(M):
    """Exact determinant by fraction-free Gaussian elimination (Bareiss)."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(map(int, row)) for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[-1][-1]


def smith_divisors_oracle(M):
    """SNF diagonal via determinantal divisors: d_k = gcd of all k x k minors."""
    m = len(M)
    n = len(M[0]) if m else 0
    r = min(m, n)
    prev = 1
    out = []
    rank_hit = False
    for k in range(1, r + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                sub = [[M[i][j] for j in cols] for i in rows]
                g = gcd(g, abs(det_int(sub)))
        if g == 0:
            rank_hit = True
            out.append(0)
            prev = 1
        elif rank_hit:
            out.append(0)
        else:
            out.append(g // prev)
            prev = g
    return out


def random_unimodular(n, rng, steps=12):
    """Product of random elementary row operations (det = +/-1)."""
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(steps):
        op = rng.randrange(3)
        i, j = rng.sample(range(n), 2) if n >= 2 else (0, 0)
        if op == 0 and i != j:
            c = rng.randint(-3, 3)
            for k in range(n):
                U[i][k] += c * U[j][k]
        elif op == 1 and i != j:
            U[i], U[j] = U[j], U[i]
        else:
            for k in range(n):
                U[i][k] = -U[i][k]
    return U


def mat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(m)) for j in range(p)] for i in range(n)]


def mat_T(A):
    return [list(row) for row in zip(*A)] if A else []


def char_poly(M):
    """Characteristic polynomial det(xI - M), exact, coefficients low->high."""
    n = len(M)
    # interpolation at n+1 integer points using exact Bareiss determinants
    xs = list(range(n + 1))
    ys = []
    for x in xs:
        A = [[(x if i == j else 0) - M[i][j] for j in range(n)] for i in range(n)]
        ys.append(det_int(A))
    # Lagrange interpolation with Fractions
    coeffs = [Fraction(0)] * (n + 1)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = [Fraction(1)]
        den = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            # basis *= (x - xj)
            new = [Fraction(0)] * (len(basis) + 1)
            for k, c in enumerate(basis):
                new[k + 1] += c
                new[k] -= Fraction(xj) * c
            basis = new
            den *= xi - xj
        scale = Fraction(yi) / den
        for k, c in enumerate(basis):
            coeffs[k] += scale * c
    out = []
    for c in coeffs:
        assert c.denominator == 1
        out.append(int(c))
    return out


def signature_oracle(M):
    """Signature of a symmetric integer matrix via Descartes on char poly.

    All eigenvalues are real, so the number of positive roots equals the
    number of sign changes in p(x)'s coefficients (zeros skipped), and
    likewise for p(-x).
    """
    n = len(M)
    if n == 0:
        return 0, 0, 0  # (pos, neg, zero)
    cs = char_poly(M)

    def changes(coefs):
        seq = [c for c in coefs if c != 0]
        return sum(1 for a, b in zip(seq, seq[1:]) if (a > 0) != (b > 0))

    pos = changes(cs)
    neg = changes([c * (-1) ** i for i, c in enumerate(cs)])
    zero = n - pos - neg
    return pos, neg, zero


def random_symmetric(n, rng, lo=-4, hi=4):
    M = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = rng.randint(lo, hi)
            M[i][j] = v
            M[j][i] = v
    return M


def random_int_matrix(m, n, rng, lo=-5, hi=5):
    return [[rng.randint(lo, hi) for _ in range(n)] for _ in range(m)]

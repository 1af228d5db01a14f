"""Small exact linear algebra over the rationals.

Everything here operates on plain lists of Fractions/ints: the matrices in
play are switch systems of train tracks (tens of rows), so clarity and
exactness beat asymptotics.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import mpmath


def rational_kernel(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of the right kernel of the row system, exact over Q."""
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for k in range(r, len(mat)):
            if mat[k][c] != 0:
                pivot = k
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for k in range(len(mat)):
            if k != r and mat[k][c] != 0:
                factor = mat[k][c]
                mat[k] = [a - factor * b for a, b in zip(mat[k], mat[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row_idx, c in enumerate(pivots):
            vec[c] = -mat[row_idx][f]
        basis.append(vec)
    return basis


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            out[i][j] = sum(a[i][t] * b[t][j] for t in range(k))
    return out


def mat_vec(a, v):
    return [sum(row[j] * v[j] for j in range(len(v))) for row in a]


def mat_pow(a, n: int):
    size = len(a)
    result = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    base = [row[:] for row in a]
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def solve_exact(columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction]):
    """Coordinates of target in the span of the columns, or None."""
    ncols = len(columns)
    nrows = len(target)
    aug = [[Fraction(columns[j][i]) for j in range(ncols)] + [Fraction(target[i])] for i in range(nrows)]
    r = 0
    pivots = []
    for c in range(ncols):
        pivot = None
        for k in range(r, nrows):
            if aug[k][c] != 0:
                pivot = k
                break
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for k in range(nrows):
            if k != r and aug[k][c] != 0:
                factor = aug[k][c]
                aug[k] = [a - factor * b for a, b in zip(aug[k], aug[r])]
        pivots.append(c)
        r += 1
    for k in range(nrows):
        if all(aug[k][c] == 0 for c in range(ncols)) and aug[k][ncols] != 0:
            return None
    coords = [Fraction(0)] * ncols
    for row_idx, c in enumerate(pivots):
        coords[c] = aug[row_idx][ncols]
    return coords


def char_poly(a) -> list:
    """Characteristic polynomial, leading coefficient first, by the
    Faddeev-LeVerrier recursion (exact for integer/rational entries)."""
    n = len(a)
    a = [[Fraction(v) for v in row] for row in a]
    coeffs = [Fraction(1)]
    m = None
    prev_c = None
    for k in range(1, n + 1):
        if k == 1:
            m = a
        else:
            shifted = [row[:] for row in m]
            for i in range(n):
                shifted[i][i] += prev_c
            m = mat_mul(a, shifted)
        ck = -Fraction(sum(m[i][i] for i in range(n)), k)
        coeffs.append(ck)
        prev_c = ck
    return coeffs


def poly_eval(coeffs: Sequence, x):
    acc = coeffs[0] * 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def poly_deriv(coeffs: Sequence) -> list:
    n = len(coeffs) - 1
    return [c * (n - i) for i, c in enumerate(coeffs[:-1])]


def poly_mod(a: Sequence, b: Sequence) -> list:
    """Remainder of a by b over Q (coefficients leading-first)."""
    r = [Fraction(c) for c in a]
    b = [Fraction(c) for c in b]
    while len(r) >= len(b):
        if r[0] != 0:
            factor = r[0] / b[0]
            for i in range(len(b)):
                r[i] -= factor * b[i]
        r.pop(0)
    while r and r[0] == 0:
        r.pop(0)
    return r


def poly_gcd(p: Sequence, q: Sequence) -> list:
    """Monic gcd over Q."""
    a = [Fraction(c) for c in p]
    b = [Fraction(c) for c in q]
    while a and a[0] == 0:
        a.pop(0)
    while b and b[0] == 0:
        b.pop(0)
    while b:
        a, b = b, poly_mod(a, b)
    if not a:
        return []
    lead = a[0]
    return [c / lead for c in a]


def perron_root_enclosure(coeffs: Sequence, width: Fraction = Fraction(1, 10**13)):
    """(lo, hi) Fractions bracketing the largest real root of a monic
    integer polynomial with a sign change, by exact bisection.

    The caller guarantees the largest real root is simple (Perron of a
    primitive matrix), so the polynomial is negative immediately below it.
    """
    coeffs = [Fraction(c) for c in coeffs]
    bound = Fraction(1) + max(abs(c) for c in coeffs[1:]) / abs(coeffs[0])
    hi = bound
    if poly_eval(coeffs, hi) <= 0:
        hi = hi * 2
    lo = None
    step = Fraction(1, 2)
    probe = hi - step
    while probe > -bound:
        if poly_eval(coeffs, probe) < 0:
            lo = probe
            break
        step *= 2
        probe = hi - step
    if lo is None:
        raise ValueError("no sign change found; no real root below the bound")
    while hi - lo > width:
        mid = (lo + hi) / 2
        if poly_eval(coeffs, mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def refine_enclosure(coeffs: Sequence, lo: Fraction, hi: Fraction, width: Fraction):
    coeffs = [Fraction(c) for c in coeffs]
    if not poly_eval(coeffs, lo) < 0 < poly_eval(coeffs, hi):
        raise ValueError("bracket does not straddle a root")
    while hi - lo > width:
        mid = (lo + hi) / 2
        if poly_eval(coeffs, mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def continued_fraction(value: mpmath.mpf, max_terms: int = 64) -> list[int]:
    terms = []
    x = mpmath.mpf(value)
    for _ in range(max_terms):
        a = int(mpmath.floor(x))
        terms.append(a)
        frac = x - a
        if frac < mpmath.mpf(10) ** (-mpmath.mp.dps + 6):
            break
        x = 1 / frac
    return terms


def convergents(terms: Sequence[int]):
    """Successive convergents p/q of a continued fraction."""
    p_prev, p = 1, terms[0]
    q_prev, q = 0, 1
    yield p, q
    for a in terms[1:]:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        yield p, q

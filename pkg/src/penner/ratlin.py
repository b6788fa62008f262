"""Small dense matrices over the rationals, stored as lists of Fraction rows."""
from __future__ import annotations

from fractions import Fraction

Mat = list  # list[list[Fraction]]


def zeros(r: int, c: int) -> Mat:
    return [[Fraction(0)] * c for _ in range(r)]


def identity(n: int) -> Mat:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def shape(A: Mat, cols_hint: int = 0) -> tuple[int, int]:
    return len(A), (len(A[0]) if A else cols_hint)


def to_frac(A) -> Mat:
    return [[Fraction(x) for x in row] for row in A]


def mul(A: Mat, B: Mat) -> Mat:
    if len(A) == 1 and len(B) == 1 and len(B[0]) == 1 and len(A[0]) == 1:
        return [[A[0][0] * B[0][0]]]
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in cols] for row in A]


def add(A: Mat, B: Mat) -> Mat:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def sub(A: Mat, B: Mat) -> Mat:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def neg(A: Mat) -> Mat:
    return [[-a for a in row] for row in A]


def scale(c, A: Mat) -> Mat:
    return [[c * a for a in row] for row in A]


def transpose(A: Mat) -> Mat:
    return [list(col) for col in zip(*A)]


def is_zero(A: Mat) -> bool:
    return not any(any(row) for row in A)


def rows_of(A: Mat, lo: int, hi: int) -> Mat:
    return [list(r) for r in A[lo:hi]]


def cols_of(A: Mat, lo: int, hi: int) -> Mat:
    return [list(r[lo:hi]) for r in A]


def block(blocks: list[list[Mat]], row_dims: list[int], col_dims: list[int]) -> Mat:
    """Assemble a block matrix; ``None`` blocks are zero."""
    out = []
    for bi, rd in enumerate(row_dims):
        for r in range(rd):
            row = []
            for bj, cd in enumerate(col_dims):
                B = blocks[bi][bj]
                row.extend(B[r] if B is not None else [Fraction(0)] * cd)
            out.append(row)
    return out


def rank(A: Mat) -> int:
    M = [list(r) for r in A]
    if not M:
        return 0
    nr, nc = len(M), len(M[0])
    rk = 0
    for c in range(nc):
        piv = next((r for r in range(rk, nr) if M[r][c]), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        p = M[rk][c]
        for r in range(rk + 1, nr):
            if M[r][c]:
                f = M[r][c] / p
                M[r] = [x - f * y for x, y in zip(M[r], M[rk])]
        rk += 1
        if rk == nr:
            break
    return rk


def inverse(A: Mat) -> Mat:
    n = len(A)
    M = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [x / p for x in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [row[n:] for row in M]


def normal_form(A: Mat):
    """Return ``(r, P, Pinv, Q, Qinv)`` with ``P A Q = [[I_r, 0], [0, 0]]``."""
    nr, nc = len(A), len(A[0])
    if nr == 1 and nc == 1:
        c = A[0][0]
        one = [[Fraction(1)]]
        if c == 0:
            return 0, one, one, one, one
        return 1, [[1 / c]], [[c]], one, one
    M = [list(r) for r in A]
    P = identity(nr)
    pivots = []
    rk = 0
    for c in range(nc):
        piv = next((r for r in range(rk, nr) if M[r][c]), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        P[rk], P[piv] = P[piv], P[rk]
        p = M[rk][c]
        M[rk] = [x / p for x in M[rk]]
        P[rk] = [x / p for x in P[rk]]
        for r in range(nr):
            if r != rk and M[r][c]:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[rk])]
                P[r] = [x - f * y for x, y in zip(P[r], P[rk])]
        pivots.append(c)
        rk += 1
        if rk == nr:
            break
    # M is now in reduced row echelon form; clear the non-pivot columns
    others = [c for c in range(nc) if c not in set(pivots)]
    perm = pivots + others
    Q1 = [[Fraction(int(perm[j] == i)) for j in range(nc)] for i in range(nc)]
    Q = [list(r) for r in Q1]
    Qinv = transpose(Q1)
    if rk and others:
        X = [[M[i][c] for c in others] for i in range(rk)]
        # Q2 = [[I, -X], [0, I]]
        Q2 = identity(nc)
        Q2inv = identity(nc)
        for i in range(rk):
            for j, _ in enumerate(others):
                Q2[i][rk + j] = -X[i][j]
                Q2inv[i][rk + j] = X[i][j]
        Q = mul(Q1, Q2)
        Qinv = mul(Q2inv, Qinv)
    return rk, P, inverse(P), Q, Qinv


def kernel_basis(A: Mat, ncols: int) -> list[list[Fraction]]:
    """Basis of the right kernel of ``A`` (``ncols`` columns) as column vectors."""
    if not A:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    M = [list(r) for r in A]
    nr = len(M)
    pivots = []
    rk = 0
    for c in range(ncols):
        piv = next((r for r in range(rk, nr) if M[r][c]), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        p = M[rk][c]
        M[rk] = [x / p for x in M[rk]]
        for r in range(nr):
            if r != rk and M[r][c]:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[rk])]
        pivots.append(c)
        rk += 1
        if rk == nr:
            break
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fc]
        basis.append(v)
    return basis


def fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_rational(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        raise ValueError("floats are not exact; write rationals as 'p/q' strings")
    return Fraction(str(s).strip())

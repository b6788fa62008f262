"""Twist matrices, Penner words and their matrix-level invariants.

Matrices are indexed by the tree's vertex order: row = probing vertex,
column = source generator.  A word's matrix is the left-to-right product of
its letter matrices, so the leftmost letter is the one applied last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DirectionError, NonConvergence, NonStrictWord, ParseError, UnknownVertex
from .laurent import (
    ONE,
    ZERO,
    LaurentMatrix,
    precision_bits,
    t_pow,
    top_degree,
    valuation,
)
from .quiver import PLUS, SignedTree, d5_tree, flip_signs, neighbors, star_tree

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class TwistLetter:
    vertex: str
    exponent: int  # +1 for tau_v, -1 for its inverse

    def __str__(self) -> str:
        return self.vertex if self.exponent == 1 else f"{self.vertex}^-1"


@dataclass(frozen=True)
class PennerWord:
    letters: tuple[TwistLetter, ...]
    strict: bool

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def text(self) -> str:
        return " ".join(l.vertex for l in self.letters)

    def __str__(self) -> str:
        return " ".join(str(l) for l in self.letters)


def forward_exponent(tree: SignedTree, v: str) -> int:
    return 1 if tree.sign(v) == PLUS else -1


def check_letter(tree: SignedTree, letter: TwistLetter) -> None:
    tree.index(letter.vertex)
    if letter.exponent not in (1, -1):
        raise DirectionError(f"exponent must be +1 or -1, got {letter.exponent}")
    if letter.exponent != forward_exponent(tree, letter.vertex):
        kind = "positive" if tree.is_positive(letter.vertex) else "negative"
        raise DirectionError(f"letter {letter} on {kind} vertex breaks the direction rule")


def make_word(tree: SignedTree, letters: Sequence[TwistLetter]) -> PennerWord:
    letters = tuple(letters)
    for l in letters:
        check_letter(tree, l)
    strict = set(tree.ids) <= {l.vertex for l in letters}
    return PennerWord(letters, strict)


def parse_word(tree: SignedTree, text: str | Sequence[str]) -> PennerWord:
    """Read whitespace-separated vertex ids; exponents follow the signs."""
    tokens = text.split() if isinstance(text, str) else list(text)
    letters = []
    for tok in tokens:
        try:
            letters.append(TwistLetter(tok, forward_exponent(tree, tok)))
        except UnknownVertex:
            raise ParseError(f"word names unknown vertex {tok!r}") from None
    return make_word(tree, letters)


def power_word(tree: SignedTree, word: PennerWord, k: int) -> PennerWord:
    return make_word(tree, word.letters * k)


def inverse_setup(tree: SignedTree, word: PennerWord) -> tuple[SignedTree, PennerWord]:
    """Flip all signs and reverse the word, negating every exponent."""
    flipped = flip_signs(tree)
    letters = [TwistLetter(l.vertex, -l.exponent) for l in reversed(word.letters)]
    return flipped, make_word(flipped, letters)


# -- matrices ----------------------------------------------------------------

def twist_matrix(tree: SignedTree, letter: TwistLetter) -> LaurentMatrix:
    check_letter(tree, letter)
    n = len(tree)
    rows = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    v = tree.index(letter.vertex)
    rows[v][v] = t_pow(-letter.exponent * (tree.N - 1))
    for nb in neighbors(tree, letter.vertex):
        rows[v][tree.index(nb)] = ONE
    return LaurentMatrix(rows)


def word_matrix(tree: SignedTree, word: PennerWord) -> LaurentMatrix:
    """Left-to-right product of the letter matrices.

    Right multiplication by a letter matrix only touches the columns of the
    twisted vertex and its neighbours, so the product is done column-wise.
    """
    n = len(tree)
    cols = [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    for letter in word.letters:
        check_letter(tree, letter)
        v = tree.index(letter.vertex)
        cv = cols[v]
        for nb in neighbors(tree, letter.vertex):
            k = tree.index(nb)
            cols[k] = [a + b for a, b in zip(cols[k], cv)]
        shift = -letter.exponent * (tree.N - 1)
        cols[v] = [p.shift(shift) for p in cv]
    return LaurentMatrix([[cols[j][i] for j in range(n)] for i in range(n)])


def int_matrix(tree: SignedTree, word: PennerWord) -> list[list[int]]:
    return word_matrix(tree, word).at_one()


def _require_strict(word: PennerWord) -> None:
    if not word.strict:
        raise NonStrictWord("the word does not use every vertex")


# -- Perron-Frobenius numerics ----------------------------------------------

def _int_matpow(M: list[list[int]], k: int) -> list[list[int]]:
    n = len(M)
    R = [[int(i == j) for j in range(n)] for i in range(n)]
    B = M
    while k:
        if k & 1:
            R = _int_matmul(R, B)
        B = _int_matmul(B, B)
        k >>= 1
    return R


def _int_matmul(A, B):
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


def _matmul_generic(A, B):
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


def pf_radius(P, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, bits: int | None = None):
    """Spectral radius of an entrywise positive (or primitive) matrix.

    Power iteration bracketed by the Collatz-Wielandt bounds
    ``min (Pv)_i/v_i <= rho <= max (Pv)_i/v_i``; stops once the bracket is
    relatively narrower than ``tol``.  When a block of iterations fails to
    converge the working matrix is squared, which helps when the second
    eigenvalue is close to the first.  Entries may be ints, floats or mpf.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prec = precision_bits(bits)
    if prec > 53:
        import mpmath

        ctx = mpmath.workprec(prec)
        conv, log, exp = mpmath.mpf, mpmath.log, mpmath.exp
    else:
        ctx = None
        conv, log, exp = float, math.log, math.exp
    n = len(P)

    def normalized(rows):
        big = max(max(abs(x) for x in row) for row in rows)
        if big == 0:
            raise NonConvergence("zero matrix has no Perron root")
        if isinstance(big, int):
            # keep huge integer matrices inside float range
            s = max(big.bit_length() - 900, 0)
            return [[conv(Fraction(x, 1 << s)) if ctx is None else mpmath.ldexp(conv(x), -s) for x in row] for row in rows], s * log(conv(2))
        big = conv(big)
        return [[conv(x) / big for x in row] for row in rows], log(big)

    def run():
        A, log_scale = normalized(P)
        power = 1
        v = [conv(1)] * n
        for step in range(max_iter):
            w = [sum(a * b for a, b in zip(row, v)) for row in A]
            if any(x <= 0 for x in w):
                raise NonConvergence("iterate left the positive cone; matrix is not primitive")
            ratios = [wi / vi for wi, vi in zip(w, v)]
            lo, hi = min(ratios), max(ratios)
            if hi - lo <= tol * lo:
                rho = (lo + hi) / 2
                if power == 1 and log_scale == 0:
                    return rho
                return exp((log(rho) + log_scale) / power)
            m = max(w)
            v = [x / m for x in w]
            if step % 64 == 63 and power < 1 << 62:
                A, extra = normalized(_matmul_generic(A, A))
                log_scale = 2 * log_scale + extra
                power *= 2
        raise NonConvergence(f"power iteration did not reach tol {tol} in {max_iter} steps")

    if ctx is None:
        return run()
    with ctx:
        return run()


def charpoly_int(M: Sequence[Sequence[int]]) -> list[int]:
    """Characteristic polynomial coefficients (highest degree first).

    Berkowitz's division-free algorithm, so integer input stays integral.
    """
    n = len(M)
    A = [list(map(int, row)) for row in M]
    vect = [1]
    for r in range(n):
        # submatrix on indices 0..r
        a_rr = A[r][r]
        if r == 0:
            col = [1, -a_rr]
            vect = col
            continue
        R = [A[r][j] for j in range(r)]
        C = [A[i][r] for i in range(r)]
        S = [row[:r] for row in A[:r]]
        # Toeplitz column: 1, -a_rr, -R C, -R S C, -R S^2 C, ...
        col = [1, -a_rr]
        cur = C
        for _ in range(r):
            col.append(-sum(x * y for x, y in zip(R, cur)))
            cur = [sum(S[i][j] * cur[j] for j in range(r)) for i in range(r)]
        # multiply lower-triangular Toeplitz(col) of size (r+2)x(r+1) by vect
        new = []
        for i in range(r + 2):
            new.append(sum(col[i - j] * vect[j] for j in range(min(i, r) + 1) if i - j < len(col)))
        vect = new
    return vect


def _poly_eval(coeffs: Sequence[int], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def _poly_rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a = list(a)
    while len(a) >= len(b) and any(a):
        if a[0] == 0:
            a.pop(0)
            continue
        q = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    while a and a[0] == 0:
        a.pop(0)
    return a


def _sturm_chain(coeffs: Sequence[int]) -> list[list[Fraction]]:
    p0 = [Fraction(c) for c in coeffs]
    n = len(p0) - 1
    p1 = [Fraction(c * (n - i)) for i, c in enumerate(coeffs[:-1])]
    chain = [p0, p1]
    while True:
        r = _poly_rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(chain, x: Fraction) -> int:
    vals = [_poly_eval(p, x) for p in chain]
    signs = [v for v in vals if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def largest_real_root(coeffs: Sequence[int], tol: float = DEFAULT_TOL) -> float:
    """Isolate the largest real root of an integer polynomial by Sturm bisection."""
    bound = 1 + max(Fraction(abs(c), abs(coeffs[0])) for c in coeffs[1:]) if len(coeffs) > 1 else Fraction(1)
    lo, hi = -bound, bound
    chain = _sturm_chain(coeffs)
    if _sign_changes(chain, lo) - _sign_changes(chain, hi) == 0:
        raise NonConvergence("polynomial has no real root")
    tol_f = Fraction(tol)
    while hi - lo > tol_f * max(abs(lo), Fraction(1)):
        mid = (lo + hi) / 2
        # any root strictly above mid?
        if _sign_changes(chain, mid) - _sign_changes(chain, hi) > 0:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def stretching_factor(
    tree: SignedTree,
    word: PennerWord,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    exact: bool = False,
    bits: int | None = None,
) -> float:
    """Perron root of M_Phi(1)."""
    _require_strict(word)
    M = int_matrix(tree, word)
    if exact:
        return largest_real_root(charpoly_int(M), tol)
    K = len(tree)
    rho = pf_radius(_int_matpow(M, K), tol, max_iter, bits)
    if isinstance(rho, float):
        return rho ** (1 / K)
    import mpmath

    with mpmath.workprec(precision_bits(bits)):
        return mpmath.root(rho, K)


def entropy(
    tree: SignedTree,
    word: PennerWord,
    t: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    bits: int | None = None,
) -> float:
    """log of the spectral radius of M_Phi(e^t)."""
    _require_strict(word)
    M = word_matrix(tree, word)
    K = len(tree)
    prec = precision_bits(bits)
    if prec > 53:
        import mpmath

        with mpmath.workprec(prec):
            x = mpmath.e ** mpmath.mpf(t)
            A = M.evaluate(x, bits)
            P = A
            for _ in range(K - 1):
                P = _matmul_generic(P, A)
            rho = pf_radius(P, tol, max_iter, bits)
            return float(mpmath.log(rho) / K)
    A = M.evaluate(math.exp(t), bits)
    P = A
    for _ in range(K - 1):
        P = _matmul_generic(P, A)
    rho = pf_radius(P, tol, max_iter, bits)
    return math.log(rho) / K


# -- degree invariants ---------------------------------------------------------

def shifting_numbers(tree: SignedTree, word: PennerWord) -> tuple[int, int]:
    """(tau_minus, tau_plus) from the diagonal of M_Phi(t)."""
    return diagonal_degrees(word_matrix(tree, word))


def diagonal_degrees(M: LaurentMatrix) -> tuple[int, int]:
    diag = [p for p in M.diagonal() if p]
    return min(valuation(p) for p in diag), max(top_degree(p) for p in diag)


def h_ell(tree: SignedTree, word: PennerWord) -> tuple[int, int]:
    M = word_matrix(tree, word)
    entries = [p for _, _, p in M.entries() if p]
    return max(top_degree(p) for p in entries), min(valuation(p) for p in entries)


def translation_bounds(tree: SignedTree, word: PennerWord, **kw) -> tuple[float, float]:
    lam = stretching_factor(tree, word, **kw)
    tm, tp = shifting_numbers(tree, word)
    return _bounds(float(lam), tm, tp)


def _bounds(lam: float, tm: int, tp: int) -> tuple[float, float]:
    log_lam = math.log(lam)
    return float(max(tp, -tm, log_lam)), float(max((tp - tm) / 2, log_lam))


def _conditions(log_lam: float, h: int, ell: int, N: int) -> tuple[bool, bool]:
    cond_a = log_lam >= max(h, -ell) + N - 2
    cond_b = log_lam >= (h - ell + N - 2) / 2
    return cond_a, cond_b


def hyperbolic_check(tree: SignedTree, word: PennerWord, **kw):
    """Return (cond_A, cond_B, certified) with certified = (stab, quotient).

    A certified length is the lower bound itself whenever the matching
    condition holds, and ``None`` otherwise.
    """
    rep = invariants(tree, word, **kw)
    certified = (rep.stab_bound if rep.cond_A else None, rep.quotient_bound if rep.cond_B else None)
    return rep.cond_A, rep.cond_B, (certified if any(c is not None for c in certified) else None)


@dataclass(frozen=True)
class InvariantReport:
    lam: float
    log_lambda: float
    tau_minus: int
    tau_plus: int
    h: int
    ell: int
    stab_bound: float
    quotient_bound: float
    cond_A: bool
    cond_B: bool

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "log_lambda": self.log_lambda,
            "tau_minus": self.tau_minus,
            "tau_plus": self.tau_plus,
            "h": self.h,
            "ell": self.ell,
            "stab_bound": self.stab_bound,
            "quotient_bound": self.quotient_bound,
            "cond_A": self.cond_A,
            "cond_B": self.cond_B,
        }


def invariants(tree: SignedTree, word: PennerWord, **kw) -> InvariantReport:
    lam = float(stretching_factor(tree, word, **kw))
    M = word_matrix(tree, word)
    tm, tp = diagonal_degrees(M)
    entries = [p for _, _, p in M.entries() if p]
    h = max(top_degree(p) for p in entries)
    ell = min(valuation(p) for p in entries)
    stab, quot = _bounds(lam, tm, tp)
    log_lam = math.log(lam)
    ca, cb = _conditions(log_lam, h, ell, tree.N)
    return InvariantReport(lam, log_lam, tm, tp, h, ell, stab, quot, ca, cb)


# -- named examples ------------------------------------------------------------

PHI1_TEXT = "u1 u2 u3 w1 w2"
PHI2_TEXT = "u3 u3 u3 u2 u2 u2 w2 u1 u1 u1 w1"


def phi1(N: int = 3) -> tuple[SignedTree, PennerWord]:
    tree = d5_tree(N)
    return tree, parse_word(tree, PHI1_TEXT)


def phi2(N: int = 3) -> tuple[SignedTree, PennerWord]:
    tree = d5_tree(N)
    return tree, parse_word(tree, PHI2_TEXT)


def phi3(n: int, N: int = 3) -> tuple[SignedTree, PennerWord]:
    """Center twist followed by the inverse twists at all n leaves."""
    tree = star_tree(n, N)
    return tree, parse_word(tree, tree.ids)

"""Exact Laurent polynomials over the integers and square matrices of them."""
from __future__ import annotations

import math
import os
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    DetNotLaurent,
    NonpositiveEvaluationPoint,
    ParseError,
    SizeMismatch,
    ZeroPolynomial,
)

PRECISION_ENV = "PENNER_PRECISION_BITS"


def precision_bits(bits: int | None = None) -> int:
    """Resolve the float precision: explicit argument, then env var, then 53."""
    if bits is not None:
        return int(bits)
    raw = os.environ.get(PRECISION_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ParseError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
        if value < 2:
            raise ParseError(f"{PRECISION_ENV} must be at least 2")
        return value
    return 53


class LaurentPoly:
    """Sparse Laurent polynomial ``sum c_k t^k`` with integer coefficients.

    Immutable; zero coefficients are never stored, so the zero polynomial has
    an empty term map.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, int] | None = None):
        clean = {}
        if terms:
            for k, c in terms.items():
                if c:
                    if isinstance(c, Fraction):
                        if c.denominator != 1:
                            raise ValueError(f"non-integer coefficient {c}")
                        c = c.numerator
                    clean[int(k)] = int(c)
        self._terms = clean
        self._hash = None

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> "LaurentPoly":
        return cls({k: c})

    @classmethod
    def const(cls, c: int) -> "LaurentPoly":
        return cls({0: c})

    @property
    def terms(self) -> dict[int, int]:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coeff(self, k: int) -> int:
        return self._terms.get(k, 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"LaurentPoly({format_poly(self)!r})"

    def __str__(self) -> str:
        return format_poly(self)

    # ring operations
    def __add__(self, other) -> "LaurentPoly":
        other = _coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> "LaurentPoly":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "LaurentPoly":
        return _coerce(other) - self

    def __mul__(self, other) -> "LaurentPoly":
        other = _coerce(other)
        a, b = self._terms, other._terms
        if not a or not b:
            return ZERO
        if len(a) == 1 and len(b) == 1:
            (ka, ca), = a.items()
            (kb, cb), = b.items()
            return LaurentPoly({ka + kb: ca * cb})
        out: dict[int, int] = {}
        for ka, ca in a.items():
            for kb, cb in b.items():
                k = ka + kb
                out[k] = out.get(k, 0) + ca * cb
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            if len(self._terms) == 1:
                (k, c), = self._terms.items()
                if c in (1, -1):
                    return LaurentPoly({k * n: c ** (-n)})
            raise ValueError("only units have negative powers")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``t^k``."""
        return LaurentPoly({e + k: c for e, c in self._terms.items()})


def _coerce(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, int):
        return LaurentPoly.const(x)
    raise TypeError(f"cannot treat {x!r} as a Laurent polynomial")


ZERO = LaurentPoly()
ONE = LaurentPoly({0: 1})


def t_pow(k: int) -> LaurentPoly:
    return LaurentPoly({k: 1})


def poly_add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a + b


def poly_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a * b


def valuation(p: LaurentPoly) -> int:
    if p.is_zero():
        raise ZeroPolynomial("valuation of the zero polynomial")
    return min(p._terms)


def top_degree(p: LaurentPoly) -> int:
    if p.is_zero():
        raise ZeroPolynomial("top degree of the zero polynomial")
    return max(p._terms)


def substitute_inverse(p: LaurentPoly) -> LaurentPoly:
    return LaurentPoly({-k: c for k, c in p._terms.items()})


def eval_positive(p: LaurentPoly, x, bits: int | None = None):
    """Evaluate at a positive real ``x``.

    With the default 53-bit precision the result is a Python float; higher
    precision (argument or ``PENNER_PRECISION_BITS``) switches to mpmath and
    returns an ``mpmath.mpf``.
    """
    if x <= 0:
        raise NonpositiveEvaluationPoint(f"evaluation point {x} is not positive")
    prec = precision_bits(bits)
    if prec <= 53:
        xf = float(x)
        return math.fsum(c * xf ** k for k, c in p._terms.items())
    import mpmath

    with mpmath.workprec(prec):
        xm = mpmath.mpf(x)
        return mpmath.fsum(c * xm ** k for k, c in p._terms.items())


def eval_exact(p: LaurentPoly, x: Fraction | int) -> Fraction:
    x = Fraction(x)
    if x == 0 and p._terms and min(p._terms) < 0:
        raise ZeroDivisionError("negative power at zero")
    return sum((c * x ** k for k, c in p._terms.items()), Fraction(0))


def at_one(p: LaurentPoly) -> int:
    return sum(p._terms.values())


# -- text form ---------------------------------------------------------------

def format_poly(p: LaurentPoly) -> str:
    if p.is_zero():
        return "0"
    pieces = []
    for k, c in p.items():
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            var = "t" if k == 1 else f"t^{k}"
            body = var if mag == 1 else f"{mag}*{var}"
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(("+ " if c > 0 else "- ") + body)
    return " ".join(pieces)


_TERM = re.compile(
    r"""^(?:(?P<coef>\d+)(?:\s*\*\s*(?P<var1>t)(?:\s*\^\s*(?P<exp1>[+-]?\d+))?)?
          |(?P<var2>t)(?:\s*\^\s*(?P<exp2>[+-]?\d+))?)$""",
    re.VERBOSE,
)


def parse_poly(text: str) -> LaurentPoly:
    """Parse the text form, e.g. ``"2*t^-2 + 1 + 3*t^5"``."""
    s = text.strip()
    if not s:
        raise ParseError("empty polynomial text")
    # split on binary + / - while keeping exponent signs attached to '^'
    tokens = []
    sign = 1
    buf = ""
    i = 0
    expect_term = True
    while i < len(s):
        ch = s[i]
        if ch in "+-" and (not buf.strip() or not buf.rstrip().endswith("^")):
            if buf.strip():
                tokens.append((sign, buf.strip()))
                buf = ""
                sign = 1
                expect_term = True
            if expect_term:
                sign *= -1 if ch == "-" else 1
            i += 1
            continue
        buf += ch
        i += 1
    if not buf.strip():
        raise ParseError(f"dangling operator in {text!r}")
    tokens.append((sign, buf.strip()))
    out: dict[int, int] = {}
    for sg, tok in tokens:
        m = _TERM.match(tok)
        if not m:
            raise ParseError(f"cannot parse term {tok!r} in {text!r}")
        if m.group("coef") is not None:
            c = int(m.group("coef"))
            if m.group("var1"):
                k = int(m.group("exp1")) if m.group("exp1") is not None else 1
            else:
                k = 0
        else:
            c = 1
            k = int(m.group("exp2")) if m.group("exp2") is not None else 1
        out[k] = out.get(k, 0) + sg * c
    return LaurentPoly(out)


# -- exact division (used by the fraction-free determinant) ------------------

def exact_divide(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    """Return ``q`` with ``a == q*b``; raise DetNotLaurent if none exists."""
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if a.is_zero():
        return ZERO
    rem = dict(a._terms)
    bl = top_degree(b)
    bc = b._terms[bl]
    b_lo = valuation(b)
    q: dict[int, int] = {}
    lo_a = valuation(a)
    while rem:
        top = max(rem)
        if top - bl < lo_a - b_lo:
            raise DetNotLaurent("inexact polynomial division")
        c = rem[top]
        if c % bc:
            raise DetNotLaurent("inexact polynomial division")
        qc = c // bc
        k = top - bl
        q[k] = qc
        for e, bcoef in b._terms.items():
            idx = e + k
            nv = rem.get(idx, 0) - qc * bcoef
            if nv:
                rem[idx] = nv
            else:
                rem.pop(idx, None)
    return LaurentPoly(q)


# -- matrices ----------------------------------------------------------------

class LaurentMatrix:
    """Square matrix of Laurent polynomials (row-major, immutable)."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable]):
        built = tuple(tuple(_coerce(x) for x in row) for row in rows)
        n = len(built)
        if any(len(r) != n for r in built):
            raise SizeMismatch("matrix is not square")
        self.rows = built

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> LaurentPoly:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentMatrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __matmul__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"LaurentMatrix({to_json_rows(self)!r})"

    def entries(self):
        for i, row in enumerate(self.rows):
            for j, p in enumerate(row):
                yield i, j, p

    def diagonal(self) -> list[LaurentPoly]:
        return [self.rows[i][i] for i in range(self.size)]

    def column(self, j: int) -> list[LaurentPoly]:
        return [row[j] for row in self.rows]

    def map(self, fn) -> "LaurentMatrix":
        return LaurentMatrix([[fn(p) for p in row] for row in self.rows])

    def at_one(self) -> list[list[int]]:
        return [[at_one(p) for p in row] for row in self.rows]

    def evaluate(self, x, bits: int | None = None) -> list[list]:
        return [[eval_positive(p, x, bits) for p in row] for row in self.rows]


def mat_identity(n: int) -> LaurentMatrix:
    return LaurentMatrix([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])


def mat_mul(A: LaurentMatrix, B: LaurentMatrix) -> LaurentMatrix:
    n = A.size
    if B.size != n:
        raise SizeMismatch(f"{n}x{n} times {B.size}x{B.size}")
    cols = [B.column(j) for j in range(n)]
    out = []
    for row in A.rows:
        nz = [(k, a) for k, a in enumerate(row) if a]
        new_row = []
        for col in cols:
            acc: dict[int, int] = {}
            for k, a in nz:
                b = col[k]
                if not b:
                    continue
                for ea, ca in a._terms.items():
                    for eb, cb in b._terms.items():
                        e = ea + eb
                        acc[e] = acc.get(e, 0) + ca * cb
            new_row.append(LaurentPoly(acc))
        out.append(new_row)
    return LaurentMatrix(out)


def mat_pow(A: LaurentMatrix, n: int) -> LaurentMatrix:
    if n < 0:
        raise ValueError("negative matrix power")
    result = mat_identity(A.size)
    base = A
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def mat_vec(A: LaurentMatrix, v: Sequence[LaurentPoly]) -> list[LaurentPoly]:
    if len(v) != A.size:
        raise SizeMismatch("vector length does not match matrix")
    return [sum((a * b for a, b in zip(row, v) if a and b), ZERO) for row in A.rows]


def mat_det(A: LaurentMatrix) -> LaurentPoly:
    """Determinant by Bareiss fraction-free elimination."""
    n = A.size
    if n == 0:
        return ONE
    M = [list(row) for row in A.rows]
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if M[k][k].is_zero():
            swap = next((r for r in range(k + 1, n) if not M[r][k].is_zero()), None)
            if swap is None:
                return ZERO
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        piv = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = M[i][j] * piv - M[i][k] * M[k][j]
                M[i][j] = exact_divide(num, prev)
            M[i][k] = ZERO
        prev = piv
    det = M[n - 1][n - 1]
    return det if sign > 0 else -det


def int_det(M: Sequence[Sequence[int]]) -> int:
    """Bareiss determinant of an integer matrix."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(map(int, row)) for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if A[r][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        piv = A[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * piv - A[i][k] * A[k][j]) // prev
            A[i][k] = 0
        prev = piv
    return sign * A[n - 1][n - 1]


def to_json_rows(A: LaurentMatrix) -> list[list[str]]:
    return [[format_poly(p) for p in row] for row in A.rows]


def from_json_rows(rows) -> LaurentMatrix:
    return LaurentMatrix([[parse_poly(s) for s in row] for row in rows])

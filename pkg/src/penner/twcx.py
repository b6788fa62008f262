"""Twisted complexes over the generators S_v of a signed tree.

Model
-----
A factor ``V (x) S_v[d]`` carries a multiplicity space ``V = Q^dim``.  Between
generators the graded hom spaces have the basis

* ``e`` (degree 0) and ``z`` (degree N) from S_v to itself,
* ``x`` (degree 1) from S_u to S_w for adjacent positive u, negative w,
* ``y`` (degree N-1) from S_w to S_u for the same pairs,

with ``y.x = z_u``, ``x.y = z_w``, ``e`` a unit and every other product zero.
A morphism ``a`` from ``S_v[p]`` to ``S_v'[q]`` has shifted degree
``|a| + p - q``; an arrow of a complex is a shifted-degree-one morphism, so
the basis element on a pair of factors is unique when it exists.

Composition of morphisms between shifted generators is the plain algebra
product (no Koszul signs); this is associative and degree additive, and the
Maurer-Cartan equation reads ``delta.delta = 0``.  On hom complexes
``D(phi) = delta_F phi - (-1)^|phi| phi delta_E``.  Shifting a complex by k
moves every factor by k and multiplies the differential by ``(-1)^k``.

Twists are mapping cones:

* ``tau_v(E) = Cone(hom(S_v, E) (x) S_v -> E)``
* ``tau_v^{-1}(E) = Cone(E -> hom(E, S_v)^dual (x) S_v)[-1]``

and minimization is Gaussian elimination of identity arrows.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from fractions import Fraction
from typing import Iterable, Sequence

from . import ratlin as rl
from .errors import BudgetExceeded, DegreeError, MCViolation, NotMinimal, ParseError, PatternNotFound, ZeroObject
from .laurent import LaurentPoly
from .quiver import PLUS, SignedTree, neighbors

KINDS = ("e", "x", "y", "z")
DEFAULT_BUDGET = 100_000


# -- basis morphisms ----------------------------------------------------------

def kind_degree(kind: str, N: int) -> int:
    return {"e": 0, "x": 1, "y": N - 1, "z": N}[kind]


def basis_homs(tree: SignedTree, src: str, dst: str) -> list[str]:
    """Kinds of basis morphisms from S_src to S_dst."""
    if src == dst:
        return ["e", "z"]
    if dst in neighbors(tree, src):
        return ["x"] if tree.sign(src) == PLUS else ["y"]
    return []


def arrow_kind(tree: SignedTree, v_src: str, d_src: int, v_dst: str, d_dst: int) -> str | None:
    """The basis morphism of shifted degree one between two factors, if any."""
    need = 1 + d_dst - d_src
    for k in basis_homs(tree, v_src, v_dst):
        if kind_degree(k, tree.N) == need:
            return k
    return None


def compose(after: str, before: str, v_src: str, v_dst: str) -> str | None:
    """Kind of ``after . before`` for a chain from v_src to v_dst."""
    if before == "e":
        return after
    if after == "e":
        return before
    if {before, after} == {"x", "y"} and v_src == v_dst:
        return "z"
    return None


# -- public value types ---------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    vertex: str
    shift: int
    dim: int = 1


@dataclass(frozen=True)
class Arrow:
    src: int
    dst: int
    kind: str
    psi: tuple  # dim_dst x dim_src tuple of tuples of Fraction

    def matrix(self) -> list:
        return [list(r) for r in self.psi]


def _freeze(M) -> tuple:
    return tuple(tuple(Fraction(x) for x in row) for row in M)


class TwistedComplex:
    """Ordered factors with strictly lower-triangular arrows."""

    def __init__(self, tree: SignedTree, factors: Iterable[Factor], arrows: Iterable[Arrow] = (), check: bool = True):
        self.tree = tree
        self.factors = tuple(factors)
        arrows = [a if isinstance(a.psi, tuple) else Arrow(a.src, a.dst, a.kind, _freeze(a.psi)) for a in arrows]
        self.arrows = tuple(sorted(arrows, key=lambda a: (a.src, a.dst)))
        self._amap = {(a.src, a.dst): a for a in self.arrows}
        if len(self._amap) != len(self.arrows):
            raise DegreeError("two arrows share the same pair of factors")
        if check:
            problems = validate(self)
            if problems:
                degree_like = [p for p in problems if not p.startswith("MC")]
                if degree_like:
                    raise DegreeError("; ".join(problems))
                raise MCViolation("; ".join(problems))

    def __len__(self) -> int:
        return len(self.factors)

    def arrow(self, i: int, j: int) -> Arrow | None:
        return self._amap.get((i, j))

    def is_zero(self) -> bool:
        return not self.factors

    def total_dim(self) -> int:
        return sum(f.dim for f in self.factors)

    def __repr__(self) -> str:
        fs = ", ".join(f"{f.dim}*S_{f.vertex}[{f.shift}]" for f in self.factors)
        return f"TwistedComplex([{fs}], {len(self.arrows)} arrows)"

    def to_dict(self) -> dict:
        return {
            "factors": [{"vertex": f.vertex, "shift": f.shift, "dim": f.dim} for f in self.factors],
            "arrows": [
                {"from": a.src, "to": a.dst, "kind": a.kind, "psi": [[rl.fmt(x) for x in r] for r in a.psi]}
                for a in self.arrows
            ],
        }


def complex_from_dict(tree: SignedTree, doc, check: bool = True) -> TwistedComplex:
    try:
        factors = [Factor(str(f["vertex"]), int(f["shift"]), int(f.get("dim", 1))) for f in doc["factors"]]
        arrows = []
        for a in doc.get("arrows", []):
            psi = [[rl.parse_rational(x) for x in row] for row in a["psi"]]
            arrows.append(Arrow(int(a["from"]), int(a["to"]), str(a["kind"]), _freeze(psi)))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"complex document does not match the schema: {exc}") from None
    if check:
        for f in factors:
            tree.index(f.vertex)
    return TwistedComplex(tree, factors, arrows, check=check)


def load_complex(tree: SignedTree, text: str, check: bool = True) -> TwistedComplex:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from None
    return complex_from_dict(tree, doc, check)


def dump_complex(E: TwistedComplex) -> str:
    return json.dumps(E.to_dict())


# -- validation -----------------------------------------------------------------

def validate(E: TwistedComplex) -> list[str]:
    """List every violated invariant; an empty list means the complex is valid."""
    tree = E.tree
    problems = []
    n = len(E.factors)
    for idx, f in enumerate(E.factors):
        if f.dim < 1:
            problems.append(f"factor {idx}: dim {f.dim} < 1")
        if f.vertex not in tree.ids:
            problems.append(f"factor {idx}: unknown vertex {f.vertex!r}")
    if problems:
        return problems
    for a in E.arrows:
        tag = f"arrow {a.src}->{a.dst}"
        if not (0 <= a.src < a.dst < n):
            problems.append(f"{tag}: not strictly lower-triangular")
            continue
        fi, fj = E.factors[a.src], E.factors[a.dst]
        if a.kind not in KINDS:
            problems.append(f"{tag}: unknown kind {a.kind!r}")
            continue
        if a.kind not in basis_homs(tree, fi.vertex, fj.vertex):
            problems.append(f"{tag}: no {a.kind} morphism from S_{fi.vertex} to S_{fj.vertex}")
            continue
        if kind_degree(a.kind, tree.N) != 1 + fj.shift - fi.shift:
            problems.append(
                f"{tag}: degree of {a.kind} is {kind_degree(a.kind, tree.N)}, needs 1 + d_j - d_i = {1 + fj.shift - fi.shift}"
            )
        if len(a.psi) != fj.dim or any(len(r) != fi.dim for r in a.psi):
            problems.append(f"{tag}: psi shape is not {fj.dim}x{fi.dim}")
            continue
        if rl.is_zero(a.psi):
            problems.append(f"{tag}: psi is zero")
    if problems:
        return problems
    incoming = defaultdict(list)
    outgoing = defaultdict(list)
    for a in E.arrows:
        incoming[a.dst].append(a)
        outgoing[a.src].append(a)
    sums: dict[tuple[int, int], list] = {}
    for j in range(n):
        for a1 in incoming[j]:
            for a2 in outgoing[j]:
                i, k = a1.src, a2.dst
                c = compose(a2.kind, a1.kind, E.factors[i].vertex, E.factors[k].vertex)
                if c is None:
                    continue
                prod = rl.mul(a2.psi, a1.psi)
                if (i, k) in sums:
                    sums[(i, k)] = rl.add(sums[(i, k)], prod)
                else:
                    sums[(i, k)] = prod
    for (i, k), m in sorted(sums.items()):
        if not rl.is_zero(m):
            problems.append(f"MC: composites from factor {i} to factor {k} do not cancel")
    return problems


def is_valid(E: TwistedComplex) -> bool:
    return not validate(E)


# -- constructors -----------------------------------------------------------------

def zero_complex(tree: SignedTree) -> TwistedComplex:
    return TwistedComplex(tree, [], [], check=False)


def generator(tree: SignedTree, v: str, d: int = 0, dim: int = 1) -> TwistedComplex:
    tree.index(v)
    return TwistedComplex(tree, [Factor(v, d, dim)], [], check=False)


def shift(E: TwistedComplex, k: int) -> TwistedComplex:
    sign = -1 if k % 2 else 1
    factors = [Factor(f.vertex, f.shift + k, f.dim) for f in E.factors]
    arrows = [Arrow(a.src, a.dst, a.kind, _freeze(rl.scale(sign, a.psi))) for a in E.arrows]
    return TwistedComplex(E.tree, factors, arrows, check=False)


def direct_sum(E1: TwistedComplex, E2: TwistedComplex) -> TwistedComplex:
    off = len(E1.factors)
    arrows = list(E1.arrows) + [Arrow(a.src + off, a.dst + off, a.kind, a.psi) for a in E2.arrows]
    return TwistedComplex(E1.tree, E1.factors + E2.factors, arrows, check=False)


def assemble(A: TwistedComplex, B: TwistedComplex, F: Iterable) -> TwistedComplex:
    """Glue (A + B) with extra arrows from A-factors to B-factors.

    ``F`` holds ``(i, j, kind, psi)`` tuples or Arrows with ``i`` indexing A
    and ``j`` indexing B.
    """
    off = len(A.factors)
    arrows = list(A.arrows) + [Arrow(a.src + off, a.dst + off, a.kind, a.psi) for a in B.arrows]
    for item in F:
        if isinstance(item, Arrow):
            i, j, kind, psi = item.src, item.dst, item.kind, item.psi
        else:
            i, j, kind, psi = item
        arrows.append(Arrow(i, j + off, kind, _freeze(psi)))
    return TwistedComplex(A.tree, A.factors + B.factors, arrows, check=True)


# -- mutable working form ---------------------------------------------------------

class _Work:
    """Mutable graph of factors used by the cone and elimination routines.

    Factors have stable integer ids; ``order`` is a topological order (with
    ``None`` holes for deleted factors).
    """

    def __init__(self, tree: SignedTree):
        self.tree = tree
        self.vert: dict[int, str] = {}
        self.shift: dict[int, int] = {}
        self.dim: dict[int, int] = {}
        self.out: dict[int, dict[int, list]] = {}
        self.inn: dict[int, dict[int, list]] = {}
        self.order: list = []
        self.pos: dict[int, int] = {}
        self._next = 0

    # construction
    def add(self, v: str, d: int, dim: int) -> int:
        i = self._next
        self._next += 1
        self.vert[i] = v
        self.shift[i] = d
        self.dim[i] = dim
        self.out[i] = {}
        self.inn[i] = {}
        self.pos[i] = len(self.order)
        self.order.append(i)
        return i

    def set(self, i: int, j: int, M) -> None:
        if rl.is_zero(M):
            self.out[i].pop(j, None)
            self.inn[j].pop(i, None)
        else:
            self.out[i][j] = M
            self.inn[j][i] = M

    def remove(self, i: int) -> None:
        for j in list(self.out[i]):
            del self.inn[j][i]
        for k in list(self.inn[i]):
            del self.out[k][i]
        for store in (self.vert, self.shift, self.dim, self.out, self.inn):
            del store[i]
        self.order[self.pos.pop(i)] = None

    def kind(self, i: int, j: int) -> str:
        k = arrow_kind(self.tree, self.vert[i], self.shift[i], self.vert[j], self.shift[j])
        if k is None:
            raise DegreeError(f"no degree-one morphism between S_{self.vert[i]}[{self.shift[i]}] and S_{self.vert[j]}[{self.shift[j]}]")
        return k

    def ids(self) -> list[int]:
        return [i for i in self.order if i is not None]

    def compact(self) -> None:
        self.order = self.ids()
        self.pos = {i: p for p, i in enumerate(self.order)}

    def total_dim(self) -> int:
        return sum(self.dim.values())

    @classmethod
    def from_complex(cls, E: TwistedComplex) -> "_Work":
        w = cls(E.tree)
        ids = [w.add(f.vertex, f.shift, f.dim) for f in E.factors]
        for a in E.arrows:
            w.set(ids[a.src], ids[a.dst], [list(r) for r in a.psi])
        return w

    def to_complex(self) -> TwistedComplex:
        ids = self.ids()
        index = {i: p for p, i in enumerate(ids)}
        factors = [Factor(self.vert[i], self.shift[i], self.dim[i]) for i in ids]
        arrows = []
        for i in ids:
            for j, M in self.out[i].items():
                arrows.append(Arrow(index[i], index[j], self.kind(i, j), _freeze(M)))
        return TwistedComplex(self.tree, factors, arrows, check=False)

    # -- Gaussian elimination -----------------------------------------------------

    def _reach_before(self, a: int, limit: int) -> set[int]:
        seen: set[int] = set()
        stack = [a]
        pos = self.pos
        while stack:
            x = stack.pop()
            for y in self.out[x]:
                if pos[y] < limit and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def _try_eliminate(self, a: int, b: int) -> bool:
        """Eliminate the identity arrow a->b if no other path joins a to b."""
        pa, pb = self.pos[a], self.pos[b]
        reach = self._reach_before(a, pb)
        if reach:
            if any(k in reach for k in self.inn[b]):
                return False
            seg = [i for i in self.order[pa + 1 : pb] if i is not None]
            before = [i for i in seg if i not in reach]
            after = [i for i in seg if i in reach]
            new_seg = before + [a, b] + after
            # squeeze holes out of the segment, keeping its span
            span = self.order[pa : pb + 1]
            holes = len(span) - len(new_seg)
            new_span = new_seg + [None] * holes
            self.order[pa : pb + 1] = new_span
            for p, i in enumerate(new_span, start=pa):
                if i is not None:
                    self.pos[i] = p
        self._eliminate(a, b)
        return True

    def _eliminate(self, a: int, b: int) -> None:
        psi = self.out[a][b]
        r, P, Pinv, Q, Qinv = rl.normal_form(psi)
        if r == 0:
            return
        simple = len(psi) == 1 and len(psi[0]) == 1
        if not (simple and Q[0][0] == 1):
            for l, M in list(self.out[a].items()):
                self.set(a, l, rl.mul(M, Q))
            for k, M in list(self.inn[a].items()):
                self.set(k, a, rl.mul(Qinv, M))
        if not (simple and P[0][0] == 1):
            for l, M in list(self.out[b].items()):
                self.set(b, l, rl.mul(M, Pinv))
            for k, M in list(self.inn[b].items()):
                self.set(k, b, rl.mul(P, M))
        vk = self.vert
        preds = [(k, M) for k, M in self.inn[b].items() if k != a]
        succs = [(l, M) for l, M in self.out[a].items() if l != b]
        if preds and succs:
            pk = {k: self.kind(k, b) for k, _ in preds}
            sk = {l: self.kind(a, l) for l, _ in succs}
            for k, Mk in preds:
                Bk = Mk[:r]
                if rl.is_zero(Bk):
                    continue
                for l, Ml in succs:
                    c = compose(sk[l], pk[k], vk[k], vk[l])
                    if c is None:
                        continue
                    Al = [row[:r] for row in Ml]
                    corr = rl.mul(Al, Bk)
                    if rl.is_zero(corr):
                        continue
                    old = self.out[k].get(l)
                    if old is None:
                        self.set(k, l, rl.neg(corr))
                        self._fresh.append((k, l)) if c == "e" else None
                    else:
                        self.set(k, l, rl.sub(old, corr))
        # drop the matched parts
        da, db = self.dim[a], self.dim[b]
        if da == r:
            self.remove(a)
        else:
            for l, M in list(self.out[a].items()):
                self.set(a, l, [row[r:] for row in M])
            for k, M in list(self.inn[a].items()):
                self.set(k, a, M[r:])
            self.dim[a] = da - r
        if db == r:
            self.remove(b)
        else:
            for l, M in list(self.out[b].items()):
                self.set(b, l, [row[r:] for row in M])
            for k, M in list(self.inn[b].items()):
                self.set(k, b, M[r:])
            self.dim[b] = db - r

    def identity_arrows(self) -> list[tuple[int, int]]:
        found = []
        for i in self.ids():
            vi, di = self.vert[i], self.shift[i]
            for j in self.out[i]:
                if self.vert[j] == vi and self.shift[j] == di - 1:
                    found.append((i, j))
        return found

    def minimize(self, first: Sequence[tuple[int, int]] | None = None) -> None:
        self._fresh: list[tuple[int, int]] = []
        pending = list(first) if first else []
        rest = self.identity_arrows()
        rest.sort(key=lambda ab: self.pos[ab[1]] - self.pos[ab[0]])
        pending.extend(rest)
        while pending:
            deferred = []
            progressed = False
            queue = pending
            while queue:
                nxt = []
                for a, b in queue:
                    if a not in self.dim or b not in self.dim or b not in self.out[a]:
                        continue
                    if self._try_eliminate(a, b):
                        progressed = True
                        if a in self.dim and b in self.dim and b in self.out[a]:
                            nxt.append((a, b))
                    else:
                        deferred.append((a, b))
                    if self._fresh:
                        nxt.extend(self._fresh)
                        self._fresh = []
                queue = nxt
            if deferred and not progressed:
                raise RuntimeError("identity elimination stalled")  # pragma: no cover
            pending = deferred
        self.compact()


# -- twisting -------------------------------------------------------------------------

def _letter_parts(letter) -> tuple[str, int]:
    if isinstance(letter, tuple):
        return letter[0], letter[1]
    return letter.vertex, letter.exponent


def _cone_twist(w: _Work, v: str, exponent: int, budget: int | None) -> tuple["_Work", list]:
    """Build the unminimized cone for tau_v^{exponent} applied to ``w``."""
    tree = w.tree
    N = tree.N
    ids = w.ids()
    total = 0
    for i in ids:
        total += w.dim[i] * (1 + len(basis_homs(tree, v, w.vert[i]) if exponent == 1 else basis_homs(tree, w.vert[i], v)))
    if budget is not None and total > budget:
        raise BudgetExceeded(f"cone needs {total} factor dimensions, budget is {budget}")
    new = _Work(tree)
    eid: dict[int, int] = {}
    bid: dict[tuple[int, str], int] = {}
    pairs = []
    I_cache: dict[int, list] = {}

    def ident(n, sign=1):
        key = n * sign
        if key not in I_cache:
            I_cache[key] = rl.scale(Fraction(sign), rl.identity(n))
        return I_cache[key]

    if exponent == 1:
        for i in ids:
            vi, di, dim = w.vert[i], w.shift[i], w.dim[i]
            for a in basis_homs(tree, v, vi):
                bid[(i, a)] = new.add(v, di - kind_degree(a, N) + 1, dim)
            eid[i] = new.add(vi, di, dim)
        for i in ids:
            for j, M in w.out[i].items():
                new.set(eid[i], eid[j], M)
        for (i, a), b in bid.items():
            new.set(b, eid[i], ident(w.dim[i]))
            if a == "e":
                pairs.append((b, eid[i]))
        for i in ids:
            for j, M in w.out[i].items():
                f = w.kind(i, j)
                negM = rl.neg(M)
                for a in basis_homs(tree, v, w.vert[i]):
                    c = compose(f, a, v, w.vert[j])
                    if c is not None:
                        new.set(bid[(i, a)], bid[(j, c)], negM)
    else:
        for i in ids:
            vi, di, dim = w.vert[i], w.shift[i], w.dim[i]
            eid[i] = new.add(vi, di, dim)
            for a in basis_homs(tree, vi, v):
                bid[(i, a)] = new.add(v, kind_degree(a, N) + di - 1, dim)
        for i in ids:
            for j, M in w.out[i].items():
                new.set(eid[i], eid[j], M)
        for (i, a), b in bid.items():
            new.set(eid[i], b, ident(w.dim[i], -1))
            if a == "e":
                pairs.append((eid[i], b))
        for j in ids:
            for i, M in w.out[j].items():
                f = w.kind(j, i)
                negM = rl.neg(M)
                for a in basis_homs(tree, w.vert[i], v):
                    c = compose(a, f, w.vert[j], v)
                    if c is not None:
                        new.set(bid[(j, c)], bid[(i, a)], negM)
    return new, pairs


def apply_twist(E: TwistedComplex, letter, budget: int | None = None) -> TwistedComplex:
    """The cone complex for tau_v^{+-1}(E), not yet minimized."""
    v, exponent = _letter_parts(letter)
    E.tree.index(v)
    new, _ = _cone_twist(_Work.from_complex(E), v, exponent, budget)
    return new.to_complex()


def twist_minimal(E: TwistedComplex, letter, budget: int | None = None) -> TwistedComplex:
    v, exponent = _letter_parts(letter)
    E.tree.index(v)
    new, pairs = _cone_twist(_Work.from_complex(E), v, exponent, budget)
    new.minimize(pairs)
    return new.to_complex()


def _apply_word_work(w: _Work, letters, budget: int | None) -> _Work:
    for letter in reversed(list(letters)):
        v, exponent = _letter_parts(letter)
        w, pairs = _cone_twist(w, v, exponent, budget)
        w.minimize(pairs)
    return w


def apply_word(E: TwistedComplex, word, budget: int | None = DEFAULT_BUDGET) -> TwistedComplex:
    """Apply a word (rightmost letter first), minimizing after each letter."""
    letters = word.letters if hasattr(word, "letters") else word
    w = _Work.from_complex(E)
    w.minimize()
    return _apply_word_work(w, letters, budget).to_complex()


# -- minimal forms -------------------------------------------------------------------------

def minimize(E: TwistedComplex) -> TwistedComplex:
    w = _Work.from_complex(E)
    w.minimize()
    return w.to_complex()


def is_minimal(E: TwistedComplex) -> bool:
    return all(a.kind != "e" for a in E.arrows)


def _sign_rank(tree: SignedTree, v: str) -> int:
    return 0 if tree.sign(v) == PLUS else 1


def well_order_key(tree: SignedTree, f: Factor) -> tuple[int, int]:
    return (f.shift, _sign_rank(tree, f.vertex))


def well_order(E: TwistedComplex) -> TwistedComplex:
    """Stable sort by shift, positive before negative at equal shift."""
    if not is_minimal(E):
        raise NotMinimal("well_order needs a minimal complex")
    perm = sorted(range(len(E.factors)), key=lambda i: well_order_key(E.tree, E.factors[i]))
    return _permute(E, perm)


def _permute(E: TwistedComplex, perm: Sequence[int]) -> TwistedComplex:
    new_index = {old: new for new, old in enumerate(perm)}
    factors = [E.factors[i] for i in perm]
    arrows = [Arrow(new_index[a.src], new_index[a.dst], a.kind, a.psi) for a in E.arrows]
    for a in arrows:
        if a.src >= a.dst:
            raise NotMinimal("reordering would break triangularity")
    return TwistedComplex(E.tree, factors, arrows, check=False)


def simplify(E: TwistedComplex) -> TwistedComplex:
    """Merge factors with equal (vertex, shift); output is well-ordered."""
    if not is_minimal(E):
        raise NotMinimal("simplify needs a minimal complex")
    classes: dict[tuple[str, int], list[int]] = {}
    for i, f in enumerate(E.factors):
        classes.setdefault((f.vertex, f.shift), []).append(i)
    keys = sorted(classes, key=lambda k: (k[1], _sign_rank(E.tree, k[0]), E.tree.index(k[0])))
    cls_of = {}
    offset = {}
    for ci, key in enumerate(keys):
        off = 0
        for i in classes[key]:
            cls_of[i] = ci
            offset[i] = off
            off += E.factors[i].dim
    dims = [sum(E.factors[i].dim for i in classes[k]) for k in keys]
    blocks: dict[tuple[int, int], list] = {}
    kinds: dict[tuple[int, int], str] = {}
    for a in E.arrows:
        ci, cj = cls_of[a.src], cls_of[a.dst]
        M = blocks.setdefault((ci, cj), rl.zeros(dims[cj], dims[ci]))
        kinds[(ci, cj)] = a.kind
        r0, c0 = offset[a.dst], offset[a.src]
        for r, row in enumerate(a.psi):
            for c, x in enumerate(row):
                M[r0 + r][c0 + c] += x
    factors = [Factor(k[0], k[1], d) for k, d in zip(keys, dims)]
    arrows = [Arrow(ci, cj, kinds[(ci, cj)], _freeze(M)) for (ci, cj), M in blocks.items() if not rl.is_zero(M)]
    return TwistedComplex(E.tree, factors, arrows, check=False)


def normalize(E: TwistedComplex) -> TwistedComplex:
    return simplify(minimize(E))


# -- z cancellation ------------------------------------------------------------------------

def cancel_z(E: TwistedComplex, require: bool = False) -> TwistedComplex:
    """Trade z_u arrows for z_w arrows through an exact y-primitive.

    For a z_u arrow ``i1 -> i2`` and an invertible x arrow ``i1 -> j1`` with
    ``j1`` before ``i2``, conjugating by ``1 + h`` with ``h = H (x) y`` from
    ``j1`` to ``i2`` and ``H = -Z psi^{-1}`` removes the z_u component and
    adds ``-psi' H`` on each z_w arrow ``j1 -> j2`` that follows an x arrow
    ``i2 -> j2``.  The input must be minimal; the output is equivalent and
    minimal.
    """
    if not is_minimal(E):
        raise NotMinimal("cancel_z needs a minimal complex")
    tree = E.tree
    w = _Work.from_complex(E)
    done = 0
    attempts = 0
    changed = True
    while changed and attempts < 4 * (len(E.arrows) + 1):
        changed = False
        for i1 in w.ids():
            if tree.sign(w.vert[i1]) != PLUS:
                continue
            for i2, Z in list(w.out[i1].items()):
                if w.kind(i1, i2) != "z":
                    continue
                hit = None
                for j1, X in w.out[i1].items():
                    if w.kind(i1, j1) == "x" and w.pos[j1] < w.pos[i2] and len(X) == len(X[0]) and rl.rank(X) == len(X):
                        hit = (j1, X)
                        break
                if hit is None:
                    continue
                j1, X = hit
                H = rl.neg(rl.mul(Z, rl.inverse(X)))  # maps V_j1 -> V_i2
                _conjugate_y(w, j1, i2, H)
                done += 1
                attempts += 1
                changed = True
                break
            if changed:
                break
    if require and not done:
        raise PatternNotFound("no z_u arrow with an invertible x partner")
    w.compact()
    return w.to_complex()


def _conjugate_y(w: _Work, j1: int, i2: int, H) -> None:
    """Replace delta by delta - D(h) for h = H (x) y from j1 to i2."""
    vs = w.vert
    # delta . h : arrows out of i2 composed after y
    for l, M in list(w.out[i2].items()):
        c = compose(w.kind(i2, l), "y", vs[j1], vs[l])
        if c is None:
            continue
        term = rl.mul(M, H)
        old = w.out[j1].get(l)
        w.set(j1, l, rl.neg(term) if old is None else rl.sub(old, term))
    # h . delta : arrows into j1 composed before y
    for k, M in list(w.inn[j1].items()):
        c = compose("y", w.kind(k, j1), vs[k], vs[i2])
        if c is None:
            continue
        term = rl.mul(H, M)
        old = w.out[k].get(i2)
        w.set(k, i2, term if old is None else rl.add(old, term))


# -- vectors and stability data ------------------------------------------------------------------

def vector_h(E: TwistedComplex) -> list[LaurentPoly]:
    acc = [dict() for _ in E.tree.ids]
    for f in E.factors:
        slot = acc[E.tree.index(f.vertex)]
        slot[f.shift] = slot.get(f.shift, 0) + f.dim
    return [LaurentPoly(d) for d in acc]


def vector(E: TwistedComplex) -> list[LaurentPoly]:
    return vector_h(minimize(E))


def _work_vector(w: _Work) -> list[LaurentPoly]:
    tree = w.tree
    acc = [dict() for _ in tree.ids]
    for i in w.ids():
        slot = acc[tree.index(w.vert[i])]
        slot[w.shift[i]] = slot.get(w.shift[i], 0) + w.dim[i]
    return [LaurentPoly(d) for d in acc]


def mass_sigma0(E: TwistedComplex) -> int:
    return sum(sum(c for _, c in p.items()) for p in vector(E))


def _extreme_exponents(vec: Sequence[LaurentPoly]) -> tuple[int, int]:
    exps = [k for p in vec for k, _ in p.items()]
    if not exps:
        raise ZeroObject("the zero object has no phases")
    return min(exps), max(exps)


def phases_sigma_star(E: TwistedComplex) -> tuple[Fraction, Fraction]:
    lo, hi = _extreme_exponents(vector(E))
    half = Fraction(1, 2)
    return lo + half, hi + half


def mass_t(E: TwistedComplex, t: float) -> float:
    return math.fsum(c * math.exp((k + 0.5) * t) for p in vector(E) for k, c in p.items())


def hn_sigma0(E: TwistedComplex) -> list[tuple[Fraction, int]]:
    """(phase, dimension) pairs of the sigma_0 semistable pieces, phases decreasing."""
    M = minimize(E)
    groups: dict[Fraction, int] = {}
    for f in M.factors:
        ph = Fraction(f.shift) + (Fraction(1, 2) if E.tree.sign(f.vertex) == PLUS else 1)
        groups[ph] = groups.get(ph, 0) + f.dim
    return sorted(groups.items(), key=lambda kv: -kv[0])


# -- y-content ---------------------------------------------------------------------------------

def _y_blocks(M: TwistedComplex) -> dict[tuple[tuple[str, int], tuple[str, int]], list]:
    """y-parts of the simplified form, keyed by (source class, target class).

    Only the y-arrows are stacked, so no dense form of the whole complex is
    built.
    """
    offset = {}
    fill: dict[tuple[str, int], int] = {}
    for i, f in enumerate(M.factors):
        key = (f.vertex, f.shift)
        offset[i] = fill.get(key, 0)
        fill[key] = offset[i] + f.dim
    entries: dict[tuple, dict[tuple[int, int], Fraction]] = {}
    for a in M.arrows:
        if a.kind != "y":
            continue
        fi, fj = M.factors[a.src], M.factors[a.dst]
        blk = entries.setdefault(((fi.vertex, fi.shift), (fj.vertex, fj.shift)), {})
        r0, c0 = offset[a.dst], offset[a.src]
        for r, row in enumerate(a.psi):
            for c, x in enumerate(row):
                if x:
                    blk[(r0 + r, c0 + c)] = blk.get((r0 + r, c0 + c), 0) + x
    out = {}
    for key, blk in entries.items():
        rows = sorted({r for r, _ in blk})
        cols = sorted({c for _, c in blk})
        ri = {r: k for k, r in enumerate(rows)}
        ci = {c: k for k, c in enumerate(cols)}
        dense = rl.zeros(len(rows), len(cols))
        for (r, c), x in blk.items():
            dense[ri[r]][ci[c]] = x
        out[key] = dense
    return out


def y_rank(E: TwistedComplex) -> int:
    M = E if is_minimal(E) else minimize(E)
    return sum(rl.rank(B) for B in _y_blocks(M).values())


def is_carried(E: TwistedComplex) -> bool:
    M = E if is_minimal(E) else minimize(E)
    return not any(a.kind == "y" for a in M.arrows)


@dataclass(frozen=True)
class Split:
    K: int
    A: TwistedComplex
    B: TwistedComplex
    F: tuple  # Arrows from A-indices to B-indices


def _span(vectors: list) -> list:
    """Row-reduced basis (as rows) of the span of the given vectors."""
    basis: list[list] = []
    pivots: list[int] = []
    for v in vectors:
        v = list(v)
        for b, p in zip(basis, pivots):
            if v[p]:
                f = v[p]
                v = [x - f * y for x, y in zip(v, b)]
        p = next((k for k, x in enumerate(v) if x), None)
        if p is None:
            continue
        v = [x / v[p] for x in v]
        for k, b in enumerate(basis):
            if b[p]:
                f = b[p]
                basis[k] = [x - f * y for x, y in zip(b, v)]
        basis.append(v)
        pivots.append(p)
    return basis


def _apply(M, vectors: list) -> list:
    return [[sum((m * x for m, x in zip(row, v) if m and x), Fraction(0)) for row in M] for v in vectors]


def y_content(M: TwistedComplex) -> set[int]:
    """Factors that must sit in the first part of any split of M.

    These are targets of y-arrows and ends of nonzero chains ``y z ... z``
    and ``y z ... z x``.  Chain images are tracked as subspaces, factor by
    factor in order, so no path enumeration is needed.
    """
    image: dict[int, list] = {}
    incoming = defaultdict(list)
    for a in M.arrows:
        incoming[a.dst].append(a)
    marked = set()
    for j in range(len(M.factors)):
        gens = []
        hit_x = False
        for a in incoming[j]:
            if a.kind == "y":
                gens.extend(list(col) for col in zip(*a.psi))
            elif a.src in image:
                imgs = [v for v in _apply(a.psi, image[a.src]) if any(v)]
                if a.kind == "z":
                    gens.extend(imgs)
                elif a.kind == "x" and imgs:
                    hit_x = True
        span = _span(gens)
        if span:
            image[j] = span
        if span or hit_x:
            marked.add(j)
    return marked


def _predecessor_closure(M: TwistedComplex, seed: set[int]) -> set[int]:
    inn = defaultdict(list)
    for a in M.arrows:
        inn[a.dst].append(a.src)
    closed = set(seed)
    stack = list(seed)
    while stack:
        x = stack.pop()
        for y in inn[x]:
            if y not in closed:
                closed.add(y)
                stack.append(y)
    return closed


def _split_from(M: TwistedComplex, closed: set[int]) -> Split:
    n = len(M.factors)
    a_idx = [i for i in range(n) if i in closed]
    b_idx = [i for i in range(n) if i not in closed]
    R = _permute(M, a_idx + b_idx)
    K = len(a_idx)
    A_part = TwistedComplex(M.tree, R.factors[:K], [a for a in R.arrows if a.dst < K], check=False)
    B_part = TwistedComplex(
        M.tree,
        R.factors[K:],
        [Arrow(a.src - K, a.dst - K, a.kind, a.psi) for a in R.arrows if a.src >= K],
        check=False,
    )
    F = tuple(Arrow(a.src, a.dst - K, a.kind, a.psi) for a in R.arrows if a.src < K <= a.dst)
    return Split(K, A_part, B_part, F)


def split_representative(E: TwistedComplex) -> TwistedComplex:
    """The minimal, well-ordered representative on which splits are decided."""
    return well_order(E if is_minimal(E) else minimize(E))


def partial_split(E: TwistedComplex) -> Split | None:
    """Smallest first part A holding all y-content, or None.

    A is the predecessor closure of :func:`y_content`; the factors are then
    reordered A first, which only moves factors past zero arrows.  A y-free
    complex gives the trivial split with A empty.
    """
    M = split_representative(E)
    if M.is_zero():
        return None
    closed = _predecessor_closure(M, y_content(M))
    if len(closed) == len(M.factors):
        return None
    return _split_from(M, closed)


def iter_splits(E: TwistedComplex, limit: int = 4096):
    """All splits of the representative, smallest first parts first.

    Enlarging A by any predecessor-closed set keeps conditions (a)-(c), so
    the splits are the closures of y_content plus extra factors.  At most
    ``limit`` candidate extensions are tried.
    """
    M = split_representative(E)
    if M.is_zero():
        return
    base = _predecessor_closure(M, y_content(M))
    rest = [i for i in range(len(M.factors)) if i not in base]
    seen = set()
    tried = 0
    for size in range(len(rest)):
        for extra in combinations(rest, size):
            tried += 1
            if tried > limit:
                return
            closed = _predecessor_closure(M, base | set(extra))
            key = frozenset(closed)
            if key in seen or len(closed) == len(M.factors):
                continue
            seen.add(key)
            yield _split_from(M, closed)


# -- homology oracle for the V-vector ------------------------------------------------------------

def identity_homology_vector(E: TwistedComplex) -> list[LaurentPoly]:
    """V-vector read off the identity-arrow part of any (non-minimal) complex.

    Products of radical morphisms never produce ``e``, so the ``e``-components
    of the differential form, vertex by vertex, a complex of vector spaces
    whose homology counts the factors of any minimal model.
    """
    tree = E.tree
    out = []
    for v in tree.ids:
        idx = [i for i, f in enumerate(E.factors) if f.vertex == v]
        by_shift: dict[int, list[int]] = defaultdict(list)
        for i in idx:
            by_shift[E.factors[i].shift].append(i)
        def boundary(d):
            # map from shift d to shift d-1
            src = by_shift.get(d, [])
            dst = by_shift.get(d - 1, [])
            if not src or not dst:
                return 0
            rows = []
            for j in dst:
                for r in range(E.factors[j].dim):
                    row = []
                    for i in src:
                        a = E.arrow(i, j)
                        row.extend(a.psi[r] if a is not None else [Fraction(0)] * E.factors[i].dim)
                    rows.append(row)
            return rl.rank(rows)
        coeffs = {}
        for d, members in by_shift.items():
            dim = sum(E.factors[i].dim for i in members)
            h = dim - boundary(d) - boundary(d + 1)
            if h:
                coeffs[d] = h
        out.append(LaurentPoly(coeffs))
    return out

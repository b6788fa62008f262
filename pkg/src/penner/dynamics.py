"""Orbits of objects under a word, growth estimates and cross-validation."""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import ratlin as rl
from . import twcx as tc
from .errors import BudgetExceeded, InsufficientData, MismatchError, ZeroObject
from .laurent import LaurentPoly, at_one, mat_vec
from .quiver import SignedTree
from .twistcalc import PennerWord, _require_strict, shifting_numbers, stretching_factor, word_matrix

DEFAULT_N_MAX = 25
CSV_COLUMNS = ("n", "mass", "phase_min", "phase_max", "y_rank", "carried", "split_found", "factor_count", "log_mass_over_n")


@dataclass(frozen=True)
class OrbitStep:
    n: int
    mass: int
    phase_min: Fraction
    phase_max: Fraction
    y_rank: int | None
    carried: bool | None
    split_found: bool | None
    factor_count: int

    @property
    def log_mass_over_n(self) -> float | None:
        return math.log(self.mass) / self.n if self.n else None


@dataclass
class OrbitReport:
    backend: str  # "engine" or "matrix"
    steps: list[OrbitStep] = field(default_factory=list)
    truncated: bool = False

    def masses(self) -> list[int]:
        return [s.mass for s in self.steps]

    def log_mass_over_n(self) -> list[float | None]:
        return [s.log_mass_over_n for s in self.steps]

    def phase_min_over_n(self) -> list[float | None]:
        return [float(s.phase_min) / s.n if s.n else None for s in self.steps]

    def phase_max_over_n(self) -> list[float | None]:
        return [float(s.phase_max) / s.n if s.n else None for s in self.steps]

    def rows(self) -> list[list[str]]:
        out = []
        for s in self.steps:
            lm = s.log_mass_over_n
            out.append([
                str(s.n),
                str(s.mass),
                rl.fmt(s.phase_min),
                rl.fmt(s.phase_max),
                "" if s.y_rank is None else str(s.y_rank),
                "" if s.carried is None else str(s.carried).lower(),
                "" if s.split_found is None else str(s.split_found).lower(),
                str(s.factor_count),
                "" if lm is None else repr(lm),
            ])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(self.rows())
        return buf.getvalue()


def _vector_stats(vec: Sequence[LaurentPoly]) -> tuple[int, Fraction, Fraction]:
    exps = [k for p in vec for k, _ in p.items()]
    if not exps:
        raise ZeroObject("the orbit reached the zero object")
    half = Fraction(1, 2)
    return sum(at_one(p) for p in vec), min(exps) + half, max(exps) + half


def _engine_step(n: int, w: "tc._Work") -> OrbitStep:
    vec = tc._work_vector(w)
    mass, lo, hi = _vector_stats(vec)
    E = w.to_complex()
    carried = not any(a.kind == "y" for a in E.arrows)
    if carried:
        yr, split = 0, True
    else:
        yr = tc.y_rank(E)
        split = tc.partial_split(E) is not None
    classes = sum(len(p.items()) for p in vec)
    return OrbitStep(n, mass, lo, hi, yr, carried, split, classes)


def orbit(
    tree: SignedTree,
    word: PennerWord,
    E0: tc.TwistedComplex,
    n_max: int = DEFAULT_N_MAX,
    budget: int | None = tc.DEFAULT_BUDGET,
) -> OrbitReport:
    """Engine-backed orbit Phi^n(E0) for n = 0..n_max.

    ``factor_count`` is the number of factors of the simplified form.  When a
    cone would exceed ``budget`` total dimensions, BudgetExceeded is raised
    with the report so far attached as ``partial``.
    """
    if E0.is_zero():
        raise ZeroObject("the orbit of the zero object is empty")
    report = OrbitReport("engine")
    w = tc._Work.from_complex(E0)
    w.minimize()
    report.steps.append(_engine_step(0, w))
    for n in range(1, n_max + 1):
        try:
            w = tc._apply_word_work(w, word.letters, budget)
        except BudgetExceeded as exc:
            report.truncated = True
            raise BudgetExceeded(f"step {n}: {exc}", partial=report) from None
        report.steps.append(_engine_step(n, w))
    return report


def first_split(
    tree: SignedTree,
    word: PennerWord,
    E0: tc.TwistedComplex,
    n_max: int = DEFAULT_N_MAX,
    budget: int | None = tc.DEFAULT_BUDGET,
) -> int | None:
    """Smallest n <= n_max with a partial split of Phi^n(E0), else None.

    Running out of budget also gives None.
    """
    if E0.is_zero():
        raise ZeroObject("the orbit of the zero object is empty")
    w = tc._Work.from_complex(E0)
    w.minimize()
    for n in range(n_max + 1):
        if n:
            try:
                w = tc._apply_word_work(w, word.letters, budget)
            except BudgetExceeded:
                return None
        if tc.partial_split(w.to_complex()) is not None:
            return n
    return None


def matrix_orbit(tree: SignedTree, word: PennerWord, start, n_max: int) -> OrbitReport:
    """Orbit of a vector under M_Phi(t); ``start`` is a vertex id or a vector."""
    M = word_matrix(tree, word)
    if isinstance(start, str):
        vec = [LaurentPoly({0: 1}) if v == start else LaurentPoly() for v in tree.ids]
    else:
        vec = list(start)
    report = OrbitReport("matrix")
    for n in range(n_max + 1):
        if n:
            vec = mat_vec(M, vec)
        mass, lo, hi = _vector_stats(vec)
        report.steps.append(OrbitStep(n, mass, lo, hi, None, None, None, sum(len(p.items()) for p in vec)))
    return report


def integer_masses(tree: SignedTree, word: PennerWord, v: str, n_max: int) -> list[int]:
    """L1 norms of M_Phi(1)^n e_v for n = 0..n_max (exact integers)."""
    M = word_matrix(tree, word).at_one()
    vec = [int(x == v) for x in tree.ids]
    out = [1]
    for _ in range(n_max):
        vec = [sum(M[i][j] * vec[j] for j in range(len(vec))) for i in range(len(vec))]
        out.append(sum(vec))
    return out


def growth_estimates(report: OrbitReport) -> tuple[float, float, float]:
    """Cesaro estimates of (log lambda, tau_minus, tau_plus) at the last step."""
    if len(report.steps) < 3:
        raise InsufficientData("growth estimates need at least three steps")
    s = report.steps[-1]
    half = Fraction(1, 2)
    return math.log(s.mass) / s.n, float(s.phase_min - half) / s.n, float(s.phase_max - half) / s.n


# -- cross-validation --------------------------------------------------------------

@dataclass(frozen=True)
class CrosscheckStep:
    k: int
    engine: tuple[LaurentPoly, ...]
    predicted: tuple[LaurentPoly, ...]
    equal: bool
    bounded: bool


def _coeff_leq(a: LaurentPoly, b: LaurentPoly) -> bool:
    return all(c <= b.coeff(k) for k, c in a.items())


def crosscheck(
    tree: SignedTree,
    word: PennerWord,
    E: tc.TwistedComplex,
    n: int,
    budget: int | None = tc.DEFAULT_BUDGET,
) -> list[CrosscheckStep]:
    """Compare engine vectors of Phi^k E with M_Phi(t)^k V(E) for k = 1..n.

    Equality is required when E is carried, the coefficientwise bound
    otherwise; a failure raises MismatchError.
    """
    M = word_matrix(tree, word)
    w = tc._Work.from_complex(E)
    w.minimize()
    carried = tc.is_carried(w.to_complex())
    predicted = tc._work_vector(w)
    out = []
    for k in range(1, n + 1):
        w = tc._apply_word_work(w, word.letters, budget)
        predicted = mat_vec(M, predicted)
        got = tc._work_vector(w)
        equal = got == predicted
        bounded = all(_coeff_leq(a, b) for a, b in zip(got, predicted))
        if carried and not equal:
            raise MismatchError(f"step {k}: carried object but engine vector differs from the matrix prediction")
        if not bounded:
            raise MismatchError(f"step {k}: engine vector exceeds the matrix prediction")
        out.append(CrosscheckStep(k, tuple(got), tuple(predicted), equal, bounded))
    return out


# -- random complexes -----------------------------------------------------------------

def _closed_components(E: tc.TwistedComplex, v: str, d: int, m: int, into: bool):
    """Unknown blocks of a degree-0 morphism between S_v[d]^m and E.

    Returns ``(slots, matrix)``: ``slots`` lists ``(factor, kind, offset)``
    and ``matrix`` holds the linear closedness conditions on the stacked
    block entries.
    """
    tree = E.tree
    slots = []
    off = 0
    for j, f in enumerate(E.factors):
        if into:
            kinds = [b for b in tc.basis_homs(tree, v, f.vertex) if tc.kind_degree(b, tree.N) + d - f.shift == 0]
        else:
            kinds = [b for b in tc.basis_homs(tree, f.vertex, v) if tc.kind_degree(b, tree.N) + f.shift - d == 0]
        for b in kinds:
            slots.append((j, b, off))
            off += f.dim * m
    nvars = off
    eqs: dict[tuple, dict[int, Fraction]] = {}
    for a in E.arrows:
        fi, fj = E.factors[a.src], E.factors[a.dst]
        for (j, b, o) in slots:
            if into and j == a.src:
                # (delta . phi) lands on a.dst with kind a.kind . b
                c = tc.compose(a.kind, b, v, fj.vertex)
                if c is None:
                    continue
                # block Phi_{src,b} is dim_src x m, entry (r, s) at o + r*m + s
                for r in range(fj.dim):
                    for s in range(m):
                        row = eqs.setdefault((a.dst, c, r, s), {})
                        for q in range(fi.dim):
                            coef = a.psi[r][q]
                            if coef:
                                idx = o + q * m + s
                                row[idx] = row.get(idx, 0) + coef
            if not into and j == a.dst:
                # (phi . delta) leaves a.src with kind b . a.kind
                c = tc.compose(b, a.kind, fi.vertex, v)
                if c is None:
                    continue
                # block Phi_{dst,b} is m x dim_dst, entry (s, q) at o + s*dim_dst + q
                for s in range(m):
                    for r in range(fi.dim):
                        row = eqs.setdefault((a.src, c, s, r), {})
                        for q in range(fj.dim):
                            coef = a.psi[q][r]
                            if coef:
                                idx = o + s * fj.dim + q
                                row[idx] = row.get(idx, 0) + coef
    rows = []
    for row in eqs.values():
        dense = [Fraction(0)] * nvars
        for i, c in row.items():
            dense[i] = Fraction(c)
        rows.append(dense)
    return slots, rows, nvars


def _random_cone(E: tc.TwistedComplex, rng: random.Random, max_dim: int) -> tc.TwistedComplex | None:
    tree = E.tree
    N = tree.N
    i = rng.randrange(len(E.factors))
    fi = E.factors[i]
    into = rng.random() < 0.5
    v = rng.choice(tree.ids)
    kinds = tc.basis_homs(tree, v, fi.vertex) if into else tc.basis_homs(tree, fi.vertex, v)
    if not kinds:
        return None
    a = rng.choice(kinds)
    d = fi.shift - tc.kind_degree(a, N) if into else fi.shift + tc.kind_degree(a, N)
    m = rng.randint(1, max_dim)
    slots, rows, nvars = _closed_components(E, v, d, m, into)
    if not nvars:
        return None
    basis = rl.kernel_basis(rows, nvars)
    if not basis:
        return None
    vec = [Fraction(0)] * nvars
    while not any(vec):
        for b in basis:
            c = rng.randint(-2, 2)
            if c:
                vec = [x + c * y for x, y in zip(vec, b)]
    n_old = len(E.factors)
    arrows = []
    if into:
        # Cone(S_v[d]^m -> E) = S_v[d+1]^m first, then E
        factors = [tc.Factor(v, d + 1, m)] + list(E.factors)
        for a0 in E.arrows:
            arrows.append(tc.Arrow(a0.src + 1, a0.dst + 1, a0.kind, a0.psi))
        for j, b, o in slots:
            dj = E.factors[j].dim
            blk = [[vec[o + r * m + s] for s in range(m)] for r in range(dj)]
            if not rl.is_zero(blk):
                arrows.append(tc.Arrow(0, j + 1, b, tc._freeze(blk)))
    else:
        # Cone(E -> S_v[d]^m)[-1] = E first, then S_v[d-1]^m
        factors = list(E.factors) + [tc.Factor(v, d - 1, m)]
        arrows = list(E.arrows)
        for j, b, o in slots:
            dj = E.factors[j].dim
            blk = [[vec[o + s * dj + q] for q in range(dj)] for s in range(m)]
            if not rl.is_zero(blk):
                arrows.append(tc.Arrow(j, n_old, b, tc._freeze(blk)))
    return tc.TwistedComplex(tree, factors, arrows, check=False)


def random_complex(tree: SignedTree, seed: int, max_factors: int = 4, max_dim: int = 2) -> tc.TwistedComplex:
    """Iterated cones over random closed morphisms; deterministic per seed.

    The result is MC-valid by construction but need not be minimal.
    """
    rng = random.Random(seed)
    E = tc.generator(tree, rng.choice(tree.ids), rng.randint(-2, 2), rng.randint(1, max_dim))
    target = rng.randint(1, max(1, max_factors))
    attempts = 0
    while len(E.factors) < target and attempts < 20 * target:
        attempts += 1
        nxt = _random_cone(E, rng, max_dim)
        if nxt is not None:
            E = nxt
    return E


# -- several components ----------------------------------------------------------------

@dataclass(frozen=True)
class ComponentSpec:
    tree: SignedTree
    word: PennerWord

    def __post_init__(self):
        _require_strict(self.word)


@dataclass(frozen=True)
class ComponentComparison:
    lambdas: tuple[float, ...]
    tau_pairs: tuple[tuple[int, int], ...]
    filtration_steps: tuple[int, ...]
    filtration_steps_minus: tuple[int, ...]
    strong: bool

    @property
    def verdict(self) -> str:
        return "strong pseudo-Anosov" if self.strong else "pseudo-Anosov, not strong"

    def as_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "tau_pairs": [list(p) for p in self.tau_pairs],
            "filtration_steps": list(self.filtration_steps),
            "filtration_steps_minus": list(self.filtration_steps_minus),
            "strong": self.strong,
            "verdict": self.verdict,
        }


def compare_components(components: Sequence[ComponentSpec], rel_tol: float = 1e-9, **kw) -> ComponentComparison:
    """Stretching factors and phase-growth steps of a direct sum of categories.

    The maximal-phase filtration has one step per distinct tau_plus, the
    minimal-phase one per distinct -tau_minus.  The sum is strong exactly
    when both filtrations have a single step and all stretching factors agree.
    """
    if not components:
        raise InsufficientData("need at least one component")
    lams = []
    taus = []
    for c in components:
        lams.append(float(stretching_factor(c.tree, c.word, **kw)))
        taus.append(shifting_numbers(c.tree, c.word))
    plus = tuple(sorted({tp for _, tp in taus}))
    minus = tuple(sorted({-tm for tm, _ in taus}))
    same_lambda = all(math.isclose(l, lams[0], rel_tol=rel_tol) for l in lams)
    strong = len(plus) == 1 and len(minus) == 1 and same_lambda and lams[0] > 1
    return ComponentComparison(tuple(lams), tuple(taus), plus, minus, strong)

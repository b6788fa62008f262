"""Signed tree quivers.

A tree whose vertices are split into a positive and a negative class so that
every edge joins opposite classes, together with the Calabi-Yau dimension N.
The declaration order of the vertices is the index order used by every matrix
and vector elsewhere in the package.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

from .errors import InvariantError, ParseError, UnknownVertex

PLUS = 1
MINUS = -1


def _parse_sign(raw) -> int:
    if raw in ("+", "+1", 1, "plus"):
        return PLUS
    if raw in ("-", "-1", -1, "minus", "−"):
        return MINUS
    raise ParseError(f"bad sign {raw!r}")


@dataclass(frozen=True)
class SignedTree:
    vertices: tuple[tuple[str, int], ...]
    edges: frozenset[frozenset[str]]
    N: int

    def __post_init__(self):
        ids = [v for v, _ in self.vertices]
        if len(set(ids)) != len(ids):
            raise InvariantError("duplicate id")
        if self.N < 3:
            raise InvariantError("N<3")
        signs = dict(self.vertices)
        for e in self.edges:
            if len(e) != 2:
                raise InvariantError("cycle")  # a loop is the shortest cycle
            a, b = tuple(e)
            if a not in signs or b not in signs:
                raise InvariantError(f"edge {sorted(e)} names an undeclared vertex")
            if signs[a] == signs[b]:
                raise InvariantError("same-sign edge")
        if len(self.edges) > len(ids) - 1:
            raise InvariantError("cycle")
        if not self._connected():
            raise InvariantError("disconnected")

    def _connected(self) -> bool:
        if not self.vertices:
            return False
        adj = {v: set() for v, _ in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        start = self.vertices[0][0]
        seen = {start}
        stack = [start]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(adj)

    # -- accessors ---------------------------------------------------------

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.vertices)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.ids)}

    @cached_property
    def _signs(self) -> dict[str, int]:
        return dict(self.vertices)

    @cached_property
    def _adjacency(self) -> dict[str, frozenset[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.ids}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return {v: frozenset(s) for v, s in adj.items()}

    def __len__(self) -> int:
        return len(self.vertices)

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(v) from None

    def sign(self, v: str) -> int:
        try:
            return self._signs[v]
        except KeyError:
            raise UnknownVertex(v) from None

    def is_positive(self, v: str) -> bool:
        return self.sign(v) == PLUS

    def positives(self) -> list[str]:
        return [v for v, s in self.vertices if s == PLUS]

    def negatives(self) -> list[str]:
        return [v for v, s in self.vertices if s == MINUS]

    def adjacent(self, a: str, b: str) -> bool:
        return b in neighbors(self, a)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        edges = sorted(sorted(e, key=self.index) for e in self.edges)
        return {
            "N": self.N,
            "vertices": [{"id": v, "sign": "+" if s == PLUS else "-"} for v, s in self.vertices],
            "edges": [list(e) for e in edges],
        }

    def with_N(self, N: int) -> "SignedTree":
        return SignedTree(self.vertices, self.edges, N)


def make_tree(vertices, edges, N: int) -> SignedTree:
    """Build a tree from ``[(id, sign), ...]`` and ``[(a, b), ...]``."""
    verts = tuple((str(v), _parse_sign(s)) for v, s in vertices)
    es = []
    for e in edges:
        pair = frozenset(str(x) for x in e)
        if len(pair) != 2:
            raise InvariantError("cycle")
        es.append(pair)
    if len(set(es)) != len(es):
        raise InvariantError("cycle")  # a doubled edge closes a 2-cycle
    return SignedTree(verts, frozenset(es), int(N))


def tree_from_dict(doc) -> SignedTree:
    try:
        N = doc["N"]
        raw_vertices = doc["vertices"]
        raw_edges = doc["edges"]
        if not isinstance(N, int) or isinstance(N, bool):
            raise ParseError("N must be an integer")
        vertices = [(item["id"], item["sign"]) for item in raw_vertices]
        edges = [tuple(e) for e in raw_edges]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"tree document does not match the schema: {exc}") from None
    for e in edges:
        if len(e) != 2:
            raise ParseError(f"edge {list(e)} is not a pair")
    return make_tree(vertices, edges, N)


def load_tree(text: str) -> SignedTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from None
    return tree_from_dict(doc)


def dump_tree(tree: SignedTree) -> str:
    return json.dumps(tree.to_dict())


def flip_signs(tree: SignedTree) -> SignedTree:
    return SignedTree(tuple((v, -s) for v, s in tree.vertices), tree.edges, tree.N)


def neighbors(tree: SignedTree, v: str) -> frozenset[str]:
    try:
        return tree._adjacency[v]
    except KeyError:
        raise UnknownVertex(v) from None


# -- standard examples -------------------------------------------------------

def d5_tree(N: int = 3) -> SignedTree:
    """The five-vertex tree with positive u1,u2,u3 and negative w1,w2."""
    return make_tree(
        [("u1", "+"), ("u2", "+"), ("u3", "+"), ("w1", "-"), ("w2", "-")],
        [("u1", "w1"), ("u1", "w2"), ("u2", "w2"), ("u3", "w2")],
        N,
    )


def star_tree(n: int, N: int = 3) -> SignedTree:
    """Positive center v0 joined to negative leaves v1..vn."""
    if n < 1:
        raise InvariantError("a star needs at least one leaf")
    verts = [("v0", "+")] + [(f"v{i}", "-") for i in range(1, n + 1)]
    return make_tree(verts, [("v0", f"v{i}") for i in range(1, n + 1)], N)


def a2_tree(N: int = 3) -> SignedTree:
    return make_tree([("u", "+"), ("w", "-")], [("u", "w")], N)


def random_tree(rng, n_vertices: int, N: int = 3) -> SignedTree:
    """Uniform-ish random tree on ``n_vertices`` with a random root sign.

    Signs are forced by the bipartition, so only the root sign is random.
    """
    if n_vertices < 1:
        raise InvariantError("a tree needs a vertex")
    parent = [None] + [rng.randrange(i) for i in range(1, n_vertices)]
    root_sign = rng.choice((PLUS, MINUS))
    signs = [root_sign]
    for i in range(1, n_vertices):
        signs.append(-signs[parent[i]])
    names = []
    cp = cm = 0
    for s in signs:
        if s == PLUS:
            cp += 1
            names.append(f"u{cp}")
        else:
            cm += 1
            names.append(f"w{cm}")
    verts = [(names[i], signs[i]) for i in range(n_vertices)]
    edges = [(names[i], names[parent[i]]) for i in range(1, n_vertices)]
    return make_tree(verts, edges, N)

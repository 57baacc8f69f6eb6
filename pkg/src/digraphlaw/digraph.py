"""Simple d-regular digraphs: sampling, balls, boundary edges and excess.

A digraph is stored as ordered out-edge lists.  Slot order matters: every
operation that enumerates edges walks vertices in ascending id and, for each
vertex, its out-slots in stored order.  That makes every run seed-reproducible.

Undirected distances are taken on the simple skeleton, so a pair of
antiparallel edges u->v, v->u counts as one undirected edge.
"""
from __future__ import annotations

import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import RetryExhausted, ScaleCollapse, UnknownVertex, ValidationError


@dataclass(frozen=True, eq=False)
class Digraph:
    """Directed (multi)graph given by per-vertex ordered out-edge lists.

    Trees and neighbourhood views are allowed to be non-regular, so the
    constructor only checks that every degree is at most ``d``.  Use
    :attr:`is_regular` and :attr:`is_simple` for the stronger invariants.
    """

    n: int
    d: int
    out_edges: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if self.d < 1:
            raise ValidationError(f"d must be at least 1, got {self.d}")
        out = tuple(tuple(int(h) for h in row) for row in self.out_edges)
        if len(out) != self.n:
            raise ValidationError(f"expected {self.n} out-edge lists, got {len(out)}")
        object.__setattr__(self, "out_edges", out)
        for v, row in enumerate(out):
            if len(row) > self.d:
                raise ValidationError(f"vertex {v} has out-degree {len(row)} > d={self.d}")
            for h in row:
                if not 0 <= h < self.n:
                    raise UnknownVertex(f"edge {v}->{h} leaves the vertex set")
        if np.any(self.in_degrees > self.d):
            raise ValidationError("some in-degree exceeds d")

    # -- derived indices -------------------------------------------------
    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) int array of (tail, head) in canonical slot order."""
        tails = [v for v, row in enumerate(self.out_edges) for _ in row]
        heads = [h for row in self.out_edges for h in row]
        arr = np.column_stack([np.asarray(tails, dtype=np.int64), np.asarray(heads, dtype=np.int64)])
        arr.setflags(write=False)
        return arr.reshape(-1, 2)

    @cached_property
    def out_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.out_edges], dtype=np.int64)

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.n).astype(np.int64)

    @cached_property
    def in_edges(self) -> tuple:
        """Per-vertex tuple of tails, in canonical edge order (exact transpose)."""
        rows = [[] for _ in range(self.n)]
        for t, h in self.edges:
            rows[h].append(int(t))
        return tuple(tuple(r) for r in rows)

    @cached_property
    def out_edge_ids(self) -> tuple:
        """Per-vertex canonical edge indices of the out-slots."""
        off = np.concatenate([[0], np.cumsum(self.out_degrees)])
        return tuple(tuple(range(off[v], off[v + 1])) for v in range(self.n))

    @cached_property
    def in_edge_ids(self) -> tuple:
        """Per-vertex canonical edge indices of the in-slots, ascending."""
        rows = [[] for _ in range(self.n)]
        for k, h in enumerate(self.edges[:, 1].tolist()):
            rows[h].append(k)
        return tuple(tuple(r) for r in rows)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def is_regular(self) -> bool:
        return bool(np.all(self.out_degrees == self.d) and np.all(self.in_degrees == self.d))

    @property
    def is_simple(self) -> bool:
        e = self.edges
        if np.any(e[:, 0] == e[:, 1]):
            return False
        keys = e[:, 0] * self.n + e[:, 1]
        return np.unique(keys).size == keys.size

    def adjacency(self, dtype=float) -> np.ndarray:
        """Dense adjacency matrix, A[u, v] = number of edges u -> v."""
        A = np.zeros((self.n, self.n), dtype=dtype)
        np.add.at(A, (self.edges[:, 0], self.edges[:, 1]), 1)
        return A

    def adjacency_sparse(self, dtype=float) -> sp.csr_matrix:
        e = self.edges
        A = sp.csr_matrix((np.ones(len(e), dtype=dtype), (e[:, 0], e[:, 1])), shape=(self.n, self.n))
        A.sum_duplicates()
        return A

    @cached_property
    def skeleton(self) -> sp.csr_matrix:
        """Undirected simple skeleton (0/1 symmetric, loops dropped)."""
        e = self.edges
        e = e[e[:, 0] != e[:, 1]]
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        S = sp.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(self.n, self.n))
        S.data[:] = 1
        return S

    def neighbors(self, v: int) -> np.ndarray:
        """Undirected skeleton neighbours of ``v`` in ascending order."""
        S = self.skeleton
        return S.indices[S.indptr[v]:S.indptr[v + 1]].copy() if S.has_sorted_indices else np.sort(
            S.indices[S.indptr[v]:S.indptr[v + 1]])

    # -- equality / serialization ---------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self.d == other.d and self.out_edges == other.out_edges

    def __hash__(self):
        return hash((self.n, self.d, self.out_edges))

    def to_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "out_edges": [list(r) for r in self.out_edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "Digraph":
        try:
            return cls(int(obj["n"]), int(obj["d"]), tuple(tuple(r) for r in obj["out_edges"]))
        except KeyError as exc:
            raise ValidationError(f"graph JSON missing key {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Digraph":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Edge list, one ``tail,head`` per line, preceded by a size comment."""
        buf = io.StringIO()
        buf.write(f"# n={self.n} d={self.d}\n")
        buf.write("tail,head\n")
        for t, h in self.edges:
            buf.write(f"{t},{h}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Digraph":
        n = d = None
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "n":
                        n = int(val)
                    elif key == "d":
                        d = int(val)
                continue
            if line.startswith("tail"):
                continue
            t, h = line.split(",")
            rows.append((int(t), int(h)))
        if n is None:
            n = 1 + max(max(t, h) for t, h in rows)
        out = [[] for _ in range(n)]
        for t, h in rows:
            out[t].append(h)
        if d is None:
            d = max(len(r) for r in out)
        return cls(n, d, tuple(tuple(r) for r in out))

    @classmethod
    def from_heads(cls, heads: np.ndarray, d: int | None = None) -> "Digraph":
        """Build from an (n, d) array of heads (row v = out-slots of v)."""
        heads = np.asarray(heads)
        return cls(heads.shape[0], d or heads.shape[1], tuple(map(tuple, heads.tolist())))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_configuration(n: int, d: int, seed=None) -> Digraph:
    """One draw of the directed configuration model (loops/multi-edges allowed).

    Out-stub ``k`` belongs to vertex ``k // d``; in-stubs are matched to
    out-stubs by a uniform random permutation.
    """
    if n < 2 or d < 1:
        raise ValidationError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    rng = _rng(seed)
    heads = rng.permutation(n * d) // d
    return Digraph.from_heads(heads.reshape(n, d), d)


def _heads_simple(heads: np.ndarray) -> bool:
    n = heads.shape[0]
    if np.any(heads == np.arange(n)[:, None]):
        return False
    s = np.sort(heads, axis=1)
    return not np.any(s[:, 1:] == s[:, :-1])


def sample_simple(n: int, d: int, seed=None, max_retries: int = 100_000, *, return_tries=False):
    """Uniform simple d-regular digraph by rejection from the configuration model.

    Conditioned on simplicity the configuration model is uniform over simple
    d-regular digraphs, so rejection is exact.  The acceptance probability
    tends to exp(-d - (d-1)^2/2) (about 0.7% for d = 3).
    """
    if n <= d:
        raise ValidationError(f"a simple d-regular digraph needs n > d (n={n}, d={d})")
    if max_retries < 1:
        raise ValidationError("max_retries must be >= 1")
    rng = _rng(seed)
    for tries in range(1, max_retries + 1):
        heads = (rng.permutation(n * d) // d).reshape(n, d)
        if _heads_simple(heads):
            g = Digraph.from_heads(heads, d)
            return (g, tries) if return_tries else g
    raise RetryExhausted(f"no simple graph in {max_retries} configuration draws (n={n}, d={d})")


def complete_digraph(n: int) -> Digraph:
    """Every ordered pair (u, v), u != v, is an edge; d = n - 1."""
    return Digraph(n, n - 1, tuple(tuple(v for v in range(n) if v != u) for u in range(n)))


# ---------------------------------------------------------------------------
# balls and boundaries
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BallView:
    """Undirected ball around a vertex set.

    ``boundary_edges`` holds ``(l, a, out)`` where ``l`` is inside, ``a``
    outside and ``out`` is True when the edge runs ``l -> a``.  Edges are
    listed by ascending inside vertex, out-slots first then in-slots.
    ``edge_ids`` gives the canonical edge index of each boundary edge.
    """

    centers: tuple
    radius: int
    vertices: tuple
    distances: dict = field(repr=False)
    induced_edges: tuple = field(repr=False)
    boundary_edges: tuple = field(repr=False)
    boundary_edge_ids: tuple = field(repr=False)


@dataclass(frozen=True)
class NeighborhoodStats:
    excess: int
    is_tree: bool
    vertex_count: int
    edge_count: int
    components: int


def bfs_distances(g: Digraph, centers, radius: int | None = None) -> dict:
    """Undirected BFS distances from a vertex set, truncated at ``radius``."""
    S = g.skeleton
    dist = {}
    q = deque()
    for c in centers:
        if c not in dist:
            dist[c] = 0
            q.append(c)
    while q:
        v = q.popleft()
        dv = dist[v]
        if radius is not None and dv >= radius:
            continue
        for u in S.indices[S.indptr[v]:S.indptr[v + 1]]:
            u = int(u)
            if u not in dist:
                dist[u] = dv + 1
                q.append(u)
    return dist


def ball(g: Digraph, centers, radius: int) -> BallView:
    centers = tuple(sorted({int(c) for c in np.atleast_1d(centers)}))
    if not centers:
        raise ValidationError("centers must be nonempty")
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    for c in centers:
        if not 0 <= c < g.n:
            raise UnknownVertex(f"vertex {c} not in graph with n={g.n}")
    dist = bfs_distances(g, centers, radius)
    verts = tuple(sorted(dist))
    inside = np.zeros(g.n, dtype=bool)
    inside[list(verts)] = True
    e = g.edges
    both = inside[e[:, 0]] & inside[e[:, 1]]
    induced = tuple(map(tuple, e[both].tolist()))
    # boundary: for each inside vertex, out-slots then in-slots
    heads, tails = g.edges[:, 1], g.edges[:, 0]
    bnd, bids = [], []
    for v in verts:
        for k in g.out_edge_ids[v]:
            h = int(heads[k])
            if not inside[h]:
                bnd.append((v, h, True))
                bids.append(k)
        for k in g.in_edge_ids[v]:
            t = int(tails[k])
            if not inside[t]:
                bnd.append((v, t, False))
                bids.append(k)
    return BallView(centers, int(radius), verts, dist, induced, tuple(bnd), tuple(bids))


def excess_of(n_vertices: int, undirected_edges) -> tuple:
    """(excess, components) of an undirected multigraph given as an edge list."""
    parent = list(range(n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    m = 0
    for a, b in undirected_edges:
        m += 1
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    comps = sum(1 for v in range(n_vertices) if find(v) == v)
    return m - n_vertices + comps, comps


def neighborhood_stats(bv: BallView) -> NeighborhoodStats:
    """Excess of the induced subgraph as an undirected multigraph.

    Distances use the simple skeleton, but here an antiparallel pair u -> v,
    v -> u counts as two edges (a 2-cycle), so a ball is tree-like only when
    it has the full 2d(2d-1)^(R-1) growth of the tree.
    """
    index = {v: i for i, v in enumerate(bv.vertices)}
    edges = [(index[t], index[h]) for t, h in bv.induced_edges]
    exc, comps = excess_of(len(bv.vertices), edges)
    return NeighborhoodStats(exc, exc == 0 and comps == 1, len(bv.vertices), len(edges), comps)


def tree_like_census(g: Digraph, radius: int) -> np.ndarray:
    """Boolean array: is the radius-``radius`` ball around each vertex a tree?"""
    return np.array([neighborhood_stats(ball(g, [v], radius)).is_tree for v in range(g.n)])


# ---------------------------------------------------------------------------
# order parameters
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadiusParameters:
    R: int
    r: int
    ell: int


def radius_parameters(n, d, frak_c=0.5, frak_a=12.0, *, R=None, r=None, ell=None) -> RadiusParameters:
    """Scales R > r > ell from the asymptotic recipe, or explicit overrides.

    Formula path: R = floor((c/4) log_{d-1} n), r = floor(R/8) (the top of the
    admissible band [R/16, R/8]) and ell = floor(a log_{d-1} log n) (bottom of
    [a log log n, 2a log log n]).  At any feasible n the ordering fails; the
    error carries the computed values on ``.params``.  Supplying all three
    overrides skips the formula and only checks the ordering.
    """
    if not 0 < frak_c < 1:
        raise ValidationError("frak_c must lie in (0, 1)")
    if frak_a < 12:
        raise ValidationError("frak_a must be >= 12")
    if n < 3:
        raise ValidationError("n must be >= 3")
    if d < 3:
        raise ValidationError("the logarithm base d-1 needs d >= 3")
    base = math.log(d - 1)
    R_f = math.floor(frak_c / 4 * math.log(n) / base)
    r_f = math.floor(R_f / 8)
    ell_f = math.floor(frak_a * math.log(math.log(n)) / base)
    params = RadiusParameters(R if R is not None else R_f, r if r is not None else r_f,
                              ell if ell is not None else ell_f)
    if not params.R > params.r > params.ell >= 0:
        raise ScaleCollapse(f"ordering R > r > ell fails at n={n}: {params}", params=params)
    return params

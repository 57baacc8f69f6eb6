"""Boundary-edge switchings around an ell-neighbourhood and the involution T.

The switched edges are those reaching the sphere of radius ell around ``o``:
the neighbourhood is the vertex ball B_{ell-1}(o) and its boundary edges
(l, a) run from distance ell - 1 to distance ell.  On a tree-like
neighbourhood there are mu = 2d (2d-1)^(ell-1) of them, half of each
orientation.  A partner edge is drawn uniformly among edges with both ends
outside the neighbourhood.
Labels are chosen so that c is the vertex that would attach to l:

* boundary l -> a, partner b -> c: switch to l -> c and b -> a;
* boundary a -> l, partner c -> b: switch to c -> l and a -> b.

After a switch the data are relabelled (a, b, c) -> (c, b, a), so applying
the same rule again restores the original graph.

Validity chi_a is decided on the undirected multigraph

    U = skeleton(edges away from the ball, minus partner edges) + {a-b, b-c for every index},

which a switch leaves unchanged.  chi_a = 1 iff (i) the radius-R_chi ball of
{a, b, c} in U is a tree, (ii) every other triple lies at U-distance > R_chi
(strict), and (iii) the two new edges are absent from the graph.  Because U
and these conditions are invariant, T is an exact involution.

Edges are replaced in place inside the out-slot lists, so slot order is
restored as well.
"""
from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .digraph import Digraph, ball, bfs_distances, neighborhood_stats, radius_parameters, sample_simple
from .errors import EmptyComplement, InconsistentData, ScaleCollapse, ValidationError


def default_R_chi(n, d, frak_c=0.5):
    """Validity radius floor(R/4) with R from :func:`radius_parameters`.

    At feasible n the full order of scales collapses, but R itself is still
    well defined, so its value is taken from the error when needed.
    """
    try:
        R = radius_parameters(n, d, frak_c).R
    except ScaleCollapse as exc:
        R = exc.params.R
    return R // 4


@dataclass(frozen=True)
class SwitchingData:
    center: int
    ell: int
    R_chi: int
    boundary: tuple        # ((l, a, out), ...)
    partners: tuple        # ((b, c), ...)
    chi: tuple             # (0/1, ...)

    @property
    def mu(self):
        return len(self.boundary)

    def to_dict(self):
        return {"center": self.center, "ell": self.ell, "R_chi": self.R_chi,
                "boundary": [[l, a, bool(o)] for l, a, o in self.boundary],
                "partners": [list(p) for p in self.partners], "chi": list(self.chi)}

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj):
        return cls(int(obj["center"]), int(obj["ell"]), int(obj["R_chi"]),
                   tuple((int(l), int(a), bool(o)) for l, a, o in obj["boundary"]),
                   tuple((int(b), int(c)) for b, c in obj["partners"]), tuple(int(x) for x in obj["chi"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _partner_edge(out, b, c):
    """Directed partner edge (tail, head) for the orientation of its boundary edge."""
    return (b, c) if out else (c, b)


def _new_edges(l, a, out, b, c):
    """Edges inserted by the switch."""
    return ((l, c), (b, a)) if out else ((c, l), (a, b))


def _u_graph(g: Digraph, ball_vertices, boundary, partners) -> sp.csr_matrix:
    """Symmetric multigraph adjacency of U (a loop adds 1 on the diagonal)."""
    n = g.n
    inside = np.zeros(n, dtype=bool)
    inside[list(ball_vertices)] = True
    E = g.edges
    keep = ~inside[E[:, 0]] & ~inside[E[:, 1]] & (E[:, 0] != E[:, 1])
    if partners:
        P = np.array([_partner_edge(o, b, c) for (_, _, o), (b, c) in zip(boundary, partners)])
        keep &= ~np.isin(E[:, 0] * n + E[:, 1], P[:, 0] * n + P[:, 1])
    K = E[keep]
    und = np.unique(np.minimum(K[:, 0], K[:, 1]) * n + np.maximum(K[:, 0], K[:, 1]))
    u, v = und // n, und % n
    extra = np.array([(a, b) for (_, a, _), (b, _) in zip(boundary, partners)]
                     + [(b, c) for b, c in partners], dtype=np.int64).reshape(-1, 2)
    loops = extra[extra[:, 0] == extra[:, 1], 0]
    ex = extra[extra[:, 0] != extra[:, 1]]
    rows = np.concatenate([u, v, ex[:, 0], ex[:, 1], loops])
    cols = np.concatenate([v, u, ex[:, 1], ex[:, 0], loops])
    U = sp.csr_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(n, n))
    U.sum_duplicates()
    return U


def _ball_multigraph(U, sources, radius):
    indptr, indices = U.indptr, U.indices
    dist = {}
    frontier = []
    for s in sources:
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for u in indices[indptr[v]:indptr[v + 1]].tolist():
                if u not in dist:
                    dist[u] = r
                    nxt.append(u)
        frontier = nxt
    return dist


def _excess(U, verts):
    idx = np.fromiter(verts, dtype=np.int64)
    sub = U[idx][:, idx]
    total = int(sub.sum())
    loops = int(sub.diagonal().sum())
    edges = (total - loops) // 2 + loops
    # the triple is connected through a-b and b-c, and the BFS ball stays connected
    return edges - idx.size + 1


def compute_chi(g: Digraph, ball_vertices, boundary, partners, R_chi) -> tuple:
    """Validity flags for every switching index (see module docstring)."""
    adj = _u_graph(g, ball_vertices, boundary, partners)
    triples = [(a, b, c) for (_, a, _), (b, c) in zip(boundary, partners)]
    owner = {}
    for k, t in enumerate(triples):
        for v in t:
            owner.setdefault(v, set()).add(k)
    edge_set = set(map(tuple, g.edges.tolist()))
    chi = []
    for k, ((l, a, out), (b, c)) in enumerate(zip(boundary, partners)):
        ok = all(e not in edge_set for e in _new_edges(l, a, out, b, c))
        if ok:
            reach = _ball_multigraph(adj, triples[k], R_chi)
            ok = not any(j != k for v in reach for j in owner.get(v, ()))
            ok = ok and _excess(adj, reach) == 0
        chi.append(int(ok))
    return tuple(chi)


def sample_switching(g: Digraph, o: int, ell: int, R_chi: int, seed=None) -> SwitchingData:
    """Boundary edges of B_ell(o), i.i.d. uniform partner edges outside it, and chi."""
    if ell < 1:
        raise ValidationError("ell must be >= 1")
    if R_chi < 0:
        raise ValidationError("R_chi must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bv = neighbourhood(g, o, ell)
    inside = np.zeros(g.n, dtype=bool)
    inside[list(bv.vertices)] = True
    E = g.edges
    eligible = np.flatnonzero(~inside[E[:, 0]] & ~inside[E[:, 1]])
    if eligible.size == 0:
        raise EmptyComplement(f"no edge avoids the radius-{ell} ball around {o}")
    boundary = tuple((int(l), int(a), bool(out)) for l, a, out in bv.boundary_edges)
    picks = E[eligible[rng.integers(0, eligible.size, size=len(boundary))]]
    partners = tuple((int(t), int(h)) if out else (int(h), int(t))
                     for (_, _, out), (t, h) in zip(boundary, picks))
    chi = compute_chi(g, bv.vertices, boundary, partners, R_chi)
    return SwitchingData(int(o), int(ell), int(R_chi), boundary, partners, chi)


def neighbourhood(g: Digraph, o, ell):
    """The switching neighbourhood B_{ell-1}(o); its boundary edges end at distance ell."""
    return ball(g, [o], ell - 1)


def _check(g: Digraph, s: SwitchingData):
    bv = neighbourhood(g, s.center, s.ell)
    if Counter(bv.boundary_edges) != Counter(s.boundary):
        raise InconsistentData("boundary edges do not match the ball of the graph")
    if len(s.partners) != len(s.boundary) or len(s.chi) != len(s.boundary):
        raise InconsistentData("switching data lengths disagree")
    inside = set(bv.vertices)
    edge_set = set(map(tuple, g.edges.tolist()))
    for (_, _, out), (b, c) in zip(s.boundary, s.partners):
        e = _partner_edge(out, b, c)
        if e not in edge_set or b in inside or c in inside:
            raise InconsistentData(f"partner edge {e} is not an edge outside the ball")
    return bv


def apply_T(g: Digraph, s: SwitchingData, verify=True):
    """The switching involution; returns a new (graph, data) pair."""
    bv = _check(g, s) if verify else None
    if verify and compute_chi(g, bv.vertices, s.boundary, s.partners, s.R_chi) != s.chi:
        raise InconsistentData("chi flags do not match the graph")
    if not any(s.chi):
        return g, s
    heads = [list(r) for r in g.out_edges]
    boundary, partners = list(s.boundary), list(s.partners)
    for k, ((l, a, out), (b, c)) in enumerate(zip(s.boundary, s.partners)):
        if not s.chi[k]:
            continue
        if out:        # l -> a, b -> c  =>  l -> c, b -> a
            heads[l][heads[l].index(a)] = c
            heads[b][heads[b].index(c)] = a
        else:          # a -> l, c -> b  =>  c -> l, a -> b  (slots swap owners)
            heads[a][heads[a].index(l)] = b
            heads[c][heads[c].index(b)] = l
        boundary[k] = (l, c, out)
        partners[k] = (b, a)
    g2 = Digraph(g.n, g.d, tuple(tuple(r) for r in heads))
    return g2, SwitchingData(s.center, s.ell, s.R_chi, tuple(boundary), tuple(partners), s.chi)


# ---------------------------------------------------------------------------
# Monte Carlo statistics
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SwitchStatistics:
    trials: int
    mu: np.ndarray = field(repr=False)
    chi_zero: np.ndarray = field(repr=False)
    collisions: np.ndarray = field(repr=False)       # repeated partner edges per trial
    simplicity_blocked: np.ndarray = field(repr=False)
    post_tree_like: np.ndarray = field(repr=False)  # ball of the switched graph is a tree
    near_x: np.ndarray = field(repr=False)           # triples within R_chi of a fixed vertex

    def summary(self):
        if self.trials == 0:
            return {"trials": 0}
        f = lambda a: {"mean": float(np.mean(a)), "max": int(np.max(a)), "min": int(np.min(a))}
        return {"trials": self.trials, "mu": f(self.mu), "chi_zero": f(self.chi_zero),
                "collisions": f(self.collisions),
                "any_collision_fraction": float(np.mean(self.collisions > 0)),
                "simplicity_blocked": f(self.simplicity_blocked),
                "post_tree_like_fraction": float(np.mean(self.post_tree_like)),
                "near_x": f(self.near_x)}


def switch_statistics(g_or_n, d=3, o=0, ell=2, R_chi=1, trials=100, seed=0, x=None, fresh_graph=None):
    """Monte Carlo over switching data.

    ``g_or_n`` is either a fixed graph or a vertex count, in which case a new
    simple graph is drawn per trial.  Per-trial RNG streams are spawned from
    ``seed`` so the results do not depend on evaluation order.
    """
    fresh = not isinstance(g_or_n, Digraph) if fresh_graph is None else fresh_graph
    streams = np.random.SeedSequence(seed).spawn(trials)
    cols = {k: [] for k in ("mu", "chi_zero", "collisions", "simplicity_blocked", "post_tree_like", "near_x")}
    for ss in streams:
        rng = np.random.default_rng(ss)
        g = sample_simple(g_or_n, d, rng) if fresh else g_or_n
        s = sample_switching(g, o, ell, R_chi, rng)
        edge_set = set(map(tuple, g.edges.tolist()))
        blocked = sum(1 for (l, a, out), (b, c) in zip(s.boundary, s.partners)
                      if any(e in edge_set for e in _new_edges(l, a, out, b, c)))
        pe = Counter(_partner_edge(out, b, c) for (_, _, out), (b, c) in zip(s.boundary, s.partners))
        g2, _ = apply_T(g, s, verify=False)
        tree = neighborhood_stats(ball(g2, [o], ell)).is_tree
        xv = x if x is not None else int((o + g.n // 2) % g.n)
        near = bfs_distances(g, [xv], R_chi)
        cols["mu"].append(s.mu)
        cols["chi_zero"].append(s.mu - sum(s.chi))
        cols["collisions"].append(sum(k - 1 for k in pe.values()))
        cols["simplicity_blocked"].append(blocked)
        cols["post_tree_like"].append(tree)
        cols["near_x"].append(sum(1 for (_, a, _), (b, c) in zip(s.boundary, s.partners)
                                  if a in near or b in near or c in near))
    arr = {k: np.asarray(v) for k, v in cols.items()}
    return SwitchStatistics(trials, **arr)

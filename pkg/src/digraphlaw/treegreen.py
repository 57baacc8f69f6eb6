"""Truncated oriented trees, boundary extensions and their Green's functions.

Index convention: vertex ``v`` of a graph with ``V`` vertices owns rows ``v``
(the "0" side) and ``v + V`` (the "aleph" side).  All matrices use the scaled
adjacency A / sqrt(d - 1).

Three tree kinds are built level by level:

* ``T``  - root with d out-edges and d in-edges;
* ``T1`` - root with d out-edges and d - 1 in-edges;
* ``T2`` - root with d - 1 out-edges and d in-edges.

A non-root vertex whose parent edge points to it (parent -> v) gets d
out-children and d - 1 in-children; when the parent edge leaves it
(v -> parent) it gets d - 1 out-children and d in-children.  Out-children are
placed to the left of in-children.  Removing the parent thus leaves a copy of
T1 (parent -> v) or T2 (v -> parent), which is what makes a two-state
leaf-to-root recursion exact.
"""
from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .digraph import Digraph, excess_of
from .errors import (DeficitOutOfRange, NotATree, SingularMatrix, SingularPivot, SizeOverflow,
                     ValidationError)
from .selfconsistent import solve_m_infty


@lru_cache(maxsize=256)
def _solution(z, w, d):
    # scalar solves go through path tracking; tree routines ask for the same point repeatedly
    return solve_m_infty(complex(z), complex(w), int(d))

KINDS = ("T", "T1", "T2")
MAX_TREE_VERTICES = 2_000_000
MAX_DENSE_SIDE = 6000


def _root_degrees(kind, d):
    return {"T": (d, d), "T1": (d, d - 1), "T2": (d - 1, d)}[kind]


def tree_size(kind, K, d):
    """Number of vertices of the depth-K tree of the given kind."""
    n_out, n_in = _root_degrees(kind, d)
    if K == 0:
        return 1
    return 1 + (n_out + n_in) * ((2 * d - 1) ** K - 1) // (2 * d - 2)


@dataclass(frozen=True, eq=False)
class OrientedTree:
    """Depth-K oriented tree; ``vtype`` is 0 for the root, 1 for parent->v, 2 for v->parent."""

    kind: str
    K: int
    d: int
    graph: Digraph
    depth: np.ndarray = field(repr=False)
    parent: np.ndarray = field(repr=False)
    vtype: np.ndarray = field(repr=False)
    root: int = 0

    @property
    def n(self):
        return self.graph.n

    def path_to_root(self, v):
        out = [int(v)]
        while out[-1] != self.root:
            out.append(int(self.parent[out[-1]]))
        return out

    def path(self, x, y):
        """Vertex path from x to y."""
        px, py = self.path_to_root(x), self.path_to_root(y)
        sy = set(py)
        lca = next(v for v in px if v in sy)
        up = px[:px.index(lca) + 1]
        down = py[:py.index(lca)]
        return up + down[::-1], lca


def build_tree(kind, K, d, max_vertices=MAX_TREE_VERTICES) -> OrientedTree:
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    if K < 0 or d < 2:
        raise ValidationError("need K >= 0 and d >= 2")
    size = tree_size(kind, K, d)
    if size > max_vertices:
        raise SizeOverflow(f"tree with {size} vertices exceeds the cap {max_vertices}")
    n_out, n_in = _root_degrees(kind, d)
    depth = np.zeros(size, dtype=np.int64)
    parent = np.full(size, -1, dtype=np.int64)
    vtype = np.zeros(size, dtype=np.int8)
    out = [[] for _ in range(size)]
    level = [0]
    nxt_id = 1
    for k in range(K):
        new_level = []
        for v in level:
            if vtype[v] == 0:
                no, ni = n_out, n_in
            elif vtype[v] == 1:
                no, ni = d, d - 1
            else:
                no, ni = d - 1, d
            for j in range(no + ni):
                c = nxt_id
                nxt_id += 1
                depth[c], parent[c] = k + 1, v
                if j < no:
                    vtype[c] = 1
                    out[v].append(c)
                else:
                    vtype[c] = 2
                    out[c].append(v)
                new_level.append(c)
        level = new_level
    # parent edge (for v -> parent) goes first in v's slot list by construction
    g = Digraph(size, d, tuple(tuple(r) for r in out))
    for arr in (depth, parent, vtype):
        arr.setflags(write=False)
    return OrientedTree(kind, K, d, g, depth, parent, vtype)


# ---------------------------------------------------------------------------
# extensions
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TreeExtension:
    base: Digraph
    def_in: np.ndarray
    def_out: np.ndarray
    delta1: complex
    delta2: complex
    z: complex
    w: complex
    matrix: sp.csc_matrix = field(repr=False)
    tree: OrientedTree | None = field(default=None, repr=False)

    @property
    def side(self):
        return 2 * self.base.n

    def dense(self):
        return self.matrix.toarray()

    def sidecar(self) -> dict:
        c = lambda x: [float(np.real(x)), float(np.imag(x))]
        return {"deficits": {"in": self.def_in.tolist(), "out": self.def_out.tolist()},
                "delta1": c(self.delta1), "delta2": c(self.delta2), "z": c(self.z), "w": c(self.w)}

    def to_json(self) -> tuple:
        """(graph JSON, sidecar JSON)."""
        return self.base.to_json(), json.dumps(self.sidecar(), separators=(",", ":"))

    @classmethod
    def from_json(cls, graph_json, sidecar_json):
        g = Digraph.from_json(graph_json)
        s = json.loads(sidecar_json)
        c = lambda p: complex(p[0], p[1])
        return extend(g, (s["deficits"]["in"], s["deficits"]["out"]), c(s["delta1"]), c(s["delta2"]),
                      c(s["z"]), c(s["w"]))


def hermitization_sparse(g: Digraph, z, w, scale=None):
    """Sparse H(z, w) = [[-z, B], [B^*, -z]] with B = A*scale - w."""
    n = g.n
    if scale is None:
        scale = 1.0 / np.sqrt(g.d - 1) if g.d > 1 else 1.0
    A = g.adjacency_sparse(dtype=complex) * scale
    I = sp.identity(n, dtype=complex, format="csr")
    B = A - w * I
    H = sp.bmat([[-z * I, B], [B.conj().T, -z * I]], format="csc")
    return H


def extend(graph: Digraph, deficits=None, delta1=0.0, delta2=0.0, z=1j, w=0.0, tree=None) -> TreeExtension:
    """Ext matrix: H(z, w) minus the boundary corrections on the diagonal.

    ``deficits`` is ``(def_in, def_out)`` (arrays or dicts vertex -> count) or None.
    """
    n, d = graph.n, graph.d
    def_in = np.zeros(n, dtype=np.int64)
    def_out = np.zeros(n, dtype=np.int64)
    if deficits is not None:
        for arr, spec in zip((def_in, def_out), deficits):
            if isinstance(spec, dict):
                for v, k in spec.items():
                    arr[int(v)] = k
            else:
                arr[:] = np.asarray(spec, dtype=np.int64)
    d_out, d_in = graph.out_degrees, graph.in_degrees
    if np.any(def_in < 0) or np.any(def_out < 0) or np.any(def_in > d - d_in) or np.any(def_out > d - d_out):
        raise DeficitOutOfRange("deficits must satisfy 0 <= def <= d - degree")
    c_out = (d - d_out - def_out) / (d - 1)
    c_in = (d - d_in - def_in) / (d - 1)
    corr = sp.diags(np.concatenate([c_out * delta1, c_in * delta2]).astype(complex), format="csc")
    M = (hermitization_sparse(graph, z, w) - corr).tocsc()
    def_in.setflags(write=False)
    def_out.setflags(write=False)
    return TreeExtension(graph, def_in, def_out, complex(delta1), complex(delta2), complex(z), complex(w),
                         M, tree)


def _root_deficits(tree, variant):
    n = tree.n
    di, do = np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
    if variant == "i":
        di[tree.root] = 1
    elif variant == "o":
        do[tree.root] = 1
    elif variant != "":
        raise ValidationError("variant must be '', 'i' or 'o'")
    return di, do


def extend_tree(tree: OrientedTree, delta1, delta2, z, w, variant="") -> TreeExtension:
    """Ext (variant ''), Ext_i ('i', in-deficit at the root) or Ext_o ('o')."""
    return extend(tree.graph, _root_deficits(tree, variant), delta1, delta2, z, w, tree=tree)


def green_dense(ext: TreeExtension) -> np.ndarray:
    """Full inverse of the extension matrix (the oracle for every recursion)."""
    if ext.side > MAX_DENSE_SIDE:
        raise SizeOverflow(f"dense inverse of side {ext.side} exceeds {MAX_DENSE_SIDE}")
    M = ext.dense()
    try:
        G = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from None
    if not np.all(np.isfinite(G)):
        raise SingularMatrix("non-finite inverse")
    return G


def green_columns(ext: TreeExtension, cols) -> np.ndarray:
    """Columns of the inverse by sparse LU; exact oracle for large trees."""
    cols = np.atleast_1d(cols)
    try:
        lu = spla.splu(ext.matrix)
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from None
    E = np.zeros((ext.side, cols.size), dtype=complex)
    E[cols, np.arange(cols.size)] = 1
    return lu.solve(E)


def green_rows(ext: TreeExtension, rows) -> np.ndarray:
    """Rows of the inverse, shape (len(rows), side)."""
    rows = np.atleast_1d(rows)
    try:
        lu = spla.splu(ext.matrix.T.tocsc())
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from None
    E = np.zeros((ext.side, rows.size), dtype=complex)
    E[rows, np.arange(rows.size)] = 1
    return lu.solve(E).T


# ---------------------------------------------------------------------------
# closed forms and the leaf-to-root recursion
# ---------------------------------------------------------------------------
def root_entries_recursive(kind, z, w=0.0, d=3, sol=None) -> np.ndarray:
    """Root 2x2 block of the infinite tree of the given kind, from m_inf."""
    s = sol if sol is not None else _solution(z, w, d)
    if kind == "T1":
        return np.array([[s.m_sd, s.m_uod], [s.m_lod, s.m_infty]])
    if kind == "T2":
        return np.array([[s.m_infty, s.m_uod], [s.m_lod, s.m_sd]])
    if kind == "T":
        return np.array([[s.mT_d, s.mT_uod], [s.mT_lod, s.mT_d]])
    raise ValidationError(f"kind must be one of {KINDS}")


def _inv2(a, b, c, e):
    det = a * e - b * c
    if abs(det) < 1e-300 or not np.isfinite(det):
        raise SingularPivot("2x2 pivot is singular")
    return np.array([[e, -b], [-c, a]]) / det


def subtree_blocks(K, d, z, w, delta1, delta2):
    """Root blocks of the depth-j subtrees, j = 1..K, for both subtree types.

    Returns ``B`` of shape (K + 1, 3, 2, 2); ``B[j, t]`` is the root block of
    the subtree hanging at depth j from a type-t vertex (t = 1: parent -> v,
    t = 2: v -> parent) with the parent removed.  Index j = 0 is unused.
    """
    c = d / (d - 1)
    B = np.zeros((K + 1, 3, 2, 2), dtype=complex)
    wb = np.conj(w)
    for j in range(K, 0, -1):
        if j == K:
            m1 = (-z - c * delta1, -w, -wb, -z - delta2)
            m2 = (-z - delta1, -w, -wb, -z - c * delta2)
        else:
            a1 = B[j + 1, 1, 1, 1]   # aleph-aleph entry of a type-1 child
            a2 = B[j + 1, 2, 0, 0]   # 0-0 entry of a type-2 child
            m1 = (-z - c * a1, -w, -wb, -z - a2)
            m2 = (-z - a1, -w, -wb, -z - c * a2)
        B[j, 1] = _inv2(*m1)
        B[j, 2] = _inv2(*m2)
    return B


def root_block(kind, K, d, z, w, delta1, delta2, variant="", blocks=None):
    """Root 2x2 block of G(Ext(tree)) for the depth-K tree of ``kind``."""
    n_out, n_in = _root_degrees(kind, d)
    def_in = 1 if variant == "i" else 0
    def_out = 1 if variant == "o" else 0
    if K == 0:
        n_out = n_in = 0
    if def_in > d - n_in or def_out > d - n_out:
        raise DeficitOutOfRange("root deficit exceeds the free degree")
    c_out = (d - n_out - def_out) / (d - 1)
    c_in = (d - n_in - def_in) / (d - 1)
    a1 = a2 = 0.0
    if K >= 1:
        B = blocks if blocks is not None else subtree_blocks(K, d, z, w, delta1, delta2)
        a1, a2 = B[1, 1, 1, 1], B[1, 2, 0, 0]
    return _inv2(-z - c_out * delta1 - n_out / (d - 1) * a1, -w, -np.conj(w),
                 -z - c_in * delta2 - n_in / (d - 1) * a2)


def Y_iK(delta1, delta2, K, d, z, w=0.0):
    """Root (aleph, aleph) entry of G(Ext_i(T1^K), delta1, delta2)."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    return root_block("T1", K, d, z, w, delta1, delta2, "i")[1, 1]


def Y_oK(delta1, delta2, K, d, z, w=0.0):
    """Root (0, 0) entry of G(Ext_o(T2^K), delta1, delta2)."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    return root_block("T2", K, d, z, w, delta1, delta2, "o")[0, 0]


def linearization_matrix(z, w=0.0, d=3, sol=None, modulus=False):
    """[[Y~, X~], [X~, Y~]] with X~ = m_inf^2 and Y~ = c m_uod m_lod.

    These are the per-edge weights of G_{r,y} G_{y,r} along a path; their
    moduli are the singularity parameters X = |m_inf|^2 and Y.  With
    ``modulus=True`` the real matrix [[Y, X], [X, Y]] is returned instead.
    """
    s = sol if sol is not None else _solution(z, w, d)
    if modulus:
        return np.array([[s.Y, s.X], [s.X, s.Y]], dtype=float)
    c = d / (d - 1)
    Xt = s.m_infty ** 2
    Yt = c * s.m_uod * s.m_lod
    return np.array([[Yt, Xt], [Xt, Yt]])


def jacobian_prediction(K, z, w=0.0, d=3, sol=None):
    """Predicted d(Y_iK, Y_oK)/d(delta1, delta2) at delta = m_inf: M^(K+1)."""
    return np.linalg.matrix_power(linearization_matrix(z, w, d, sol), K + 1)


def jacobian_fd(K, z, w=0.0, d=3, step=1e-6, sol=None):
    """Central finite-difference Jacobian of (Y_iK, Y_oK) at delta = m_inf."""
    s = sol if sol is not None else _solution(z, w, d)
    m = s.m_infty
    J = np.zeros((2, 2), dtype=complex)
    for col in range(2):
        e = np.zeros(2)
        e[col] = step
        hi = (m + e[0], m + e[1])
        lo = (m - e[0], m - e[1])
        J[0, col] = (Y_iK(*hi, K, d, z, w) - Y_iK(*lo, K, d, z, w)) / (2 * step)
        J[1, col] = (Y_oK(*hi, K, d, z, w) - Y_oK(*lo, K, d, z, w)) / (2 * step)
    return J


# ---------------------------------------------------------------------------
# boundary sums
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BoundarySums:
    k: int
    A1: float
    A2: float
    A1_direct: float | None
    A2_direct: float | None


def boundary_sums_recursion(k, z, w=0.0, d=3, sol=None):
    """(A_{1,k}, A_{2,k}) from [[Y, X], [X, Y]]^k applied to the root sums."""
    s = sol if sol is not None else _solution(z, w, d)
    A0 = np.array([abs(s.m_lod) ** 2 + abs(s.m_infty) ** 2, abs(s.m_infty) ** 2 + abs(s.m_uod) ** 2])
    A = np.linalg.matrix_power(linearization_matrix(z, w, d, s, modulus=True), k) @ A0
    return float(A[0]), float(A[1])


def boundary_sum_direct(kind, k, z, w=0.0, d=3, sol=None, max_vertices=200_000):
    """Sum of |G_{root-row, y+o}|^2 over depth-k vertices y of the extended tree.

    T1 uses Ext_i and the root's aleph row; T2 uses Ext_o and the root's 0 row.
    """
    if kind not in ("T1", "T2"):
        raise ValidationError("direct boundary sums are defined for T1 and T2")
    if tree_size(kind, k, d) > max_vertices:
        raise SizeOverflow("boundary sum tree too large for direct summation")
    s = sol if sol is not None else _solution(z, w, d)
    t = build_tree(kind, k, d)
    ext = extend_tree(t, s.m_infty, s.m_infty, z, w, "i" if kind == "T1" else "o")
    row = t.n if kind == "T1" else 0
    g = green_rows(ext, [row])[0]
    leaves = np.flatnonzero(t.depth == k)
    return float(np.sum(np.abs(g[leaves]) ** 2) + np.sum(np.abs(g[leaves + t.n]) ** 2))


def boundary_sums(k, z, w=0.0, d=3, direct=True, max_vertices=200_000) -> BoundarySums:
    """A_{1,k}, A_{2,k} by the two-state recursion and (optionally) directly."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    s = _solution(z, w, d)
    A1, A2 = boundary_sums_recursion(k, z, w, d, s)
    A1d = A2d = None
    if direct:
        A1d = boundary_sum_direct("T1", k, z, w, d, s, max_vertices)
        A2d = boundary_sum_direct("T2", k, z, w, d, s, max_vertices)
    return BoundarySums(k, A1, A2, A1d, A2d)


# ---------------------------------------------------------------------------
# path factorization
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PathFactor:
    vertex: int
    subtree: int          # 1 (entered through an out-edge) or 2 (through an in-edge)
    entry: int            # 0 or 1 (aleph side)
    exit: int
    value: complex        # -B[entry, exit] / sqrt(d - 1)


@dataclass(frozen=True)
class PathFactorization:
    value: complex
    start: complex        # block entry of the starting vertex
    factors: tuple
    exact: bool
    lca: int

    def bound_product(self, d):
        """Product of K(E_v) = |factor| over path vertices other than the ends and lca."""
        inner = [abs(f.value) for f in self.factors[:-1] if f.vertex != self.lca]
        return float(np.prod(inner)) if inner else 1.0


def _split(index, n):
    return (index, 0) if index < n else (index - n, 1)


def path_entry(ext: TreeExtension, x_index, y_index) -> PathFactorization:
    """G(Ext)_{x, y} as a product of per-vertex 2x2 block entries along the tree path.

    Walking from s to t, each step s' -> t' contributes -B_t'[entry, exit]/sqrt(d-1)
    where B_t' is the root block of the subtree at t' with the previous vertex
    removed.  The result is exact when one endpoint is the root (any deltas), or
    for kind T with delta1 = delta2 = m_inf (the extension then reproduces the
    homogeneous infinite tree).  Otherwise ``exact`` is False and the value uses
    the infinite-tree blocks.
    """
    tree = ext.tree
    if tree is None:
        raise NotATree("path factorization needs a tree extension built by extend_tree")
    g = ext.base
    und = {(min(t, h), max(t, h)) for t, h in g.edges.tolist()}
    if len(und) != g.n_edges or excess_of(g.n, sorted(und))[0] != 0:
        raise NotATree("base graph has excess > 0")
    n, d, z, w = g.n, g.d, ext.z, ext.w
    x, ox = _split(int(x_index), n)
    y, oy = _split(int(y_index), n)
    variant = ""
    if ext.def_in[tree.root] == 1:
        variant = "i"
    elif ext.def_out[tree.root] == 1:
        variant = "o"
    if np.any(np.delete(ext.def_in, tree.root)) or np.any(np.delete(ext.def_out, tree.root)):
        raise ValidationError("path_entry supports root deficits only")
    sol = _solution(z, w, d)
    homogeneous = np.isclose(ext.delta1, sol.m_infty, rtol=0, atol=1e-14) and \
        np.isclose(ext.delta2, sol.m_infty, rtol=0, atol=1e-14)
    reverse = False
    if x == tree.root:
        s, os_, t, ot = x, ox, y, oy
    elif y == tree.root:
        s, os_, t, ot, reverse = y, oy, x, ox, True
    else:
        s, os_, t, ot = x, ox, y, oy
    exact = (s == tree.root) or (tree.kind == "T" and homogeneous and variant == "")
    verts, lca = tree.path(s, t)
    K = tree.K
    if s == tree.root:
        blocks = subtree_blocks(K, d, z, w, ext.delta1, ext.delta2) if K >= 1 else None
        B0 = root_block(tree.kind, K, d, z, w, ext.delta1, ext.delta2, variant, blocks)
        sub = lambda v, typ: blocks[tree.depth[v], typ]
    else:
        B0 = root_entries_recursive("T", z, w, d, sol)
        inf_blocks = {1: root_entries_recursive("T1", z, w, d, sol), 2: root_entries_recursive("T2", z, w, d, sol)}
        sub = lambda v, typ: inf_blocks[typ]
    edge_set = set(map(tuple, g.edges.tolist()))
    factors = []
    # exit index of each vertex towards the next one
    exits = []
    entries = []
    types = []
    for a, b in zip(verts[:-1], verts[1:]):
        if (a, b) in edge_set:
            exits.append(0)
            entries.append(1)
            types.append(1)
        else:
            exits.append(1)
            entries.append(0)
            types.append(2)
    exits.append(ot)
    start_pair = (os_, exits[0])
    start = B0[start_pair] if not reverse else B0[start_pair[::-1]]
    value = start
    for j in range(1, len(verts)):
        v = verts[j]
        Bv = sub(v, types[j - 1])
        e, xo = entries[j - 1], exits[j]
        entry_val = Bv[e, xo] if not reverse else Bv[xo, e]
        f = -entry_val / np.sqrt(d - 1)
        factors.append(PathFactor(v, types[j - 1], e, xo, complex(f)))
        value = value * f
    return PathFactorization(complex(value), complex(start), tuple(factors), bool(exact), int(lca))

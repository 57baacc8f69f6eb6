import numpy as np
import pytest
from hypothesis import given, strategies as st

from digraphlaw.digraph import Digraph, sample_simple
from digraphlaw.errors import DeficitOutOfRange, NotATree, SizeOverflow, ValidationError
from digraphlaw.selfconsistent import solve_m_infty, spectral_radius_linearization
from digraphlaw.treegreen import (TreeExtension, Y_iK, Y_oK, boundary_sums, boundary_sums_recursion, build_tree,
                                  extend, extend_tree, green_columns, green_dense, jacobian_fd, jacobian_prediction,
                                  linearization_matrix, path_entry, root_block, root_entries_recursive, tree_size)

POINTS = [(0.3 + 0.4j, 0.8 + 0.3j), (-0.5 + 0.2j, 1.1), (0.1 + 1.0j, 0.0), (1.2 + 0.05j, 0.4j)]


def test_tree_shapes():
    t0 = build_tree("T", 0, 3)
    assert t0.n == 1 and t0.graph.n_edges == 0
    t1 = build_tree("T", 1, 3)
    assert t1.graph.out_degrees[0] == 3 and t1.graph.in_degrees[0] == 3
    t = build_tree("T1", 2, 3)
    deg = t.graph.out_degrees + t.graph.in_degrees
    assert deg[0] == 5 and np.all(deg[t.depth == 1] == 6)
    assert t.graph.out_degrees[0] == 3
    t2 = build_tree("T2", 2, 3)
    assert t2.graph.out_degrees[0] == 2 and t2.graph.in_degrees[0] == 3


@pytest.mark.parametrize("K, d", [(0, 3), (1, 3), (3, 3), (2, 4), (4, 2)])
def test_tree_size_formula(K, d):
    t = build_tree("T", K, d)
    assert t.n == tree_size("T", K, d) == (1 if K == 0 else 1 + 2 * d * ((2 * d - 1) ** K - 1) // (2 * d - 2))
    inner = t.depth < K
    deg = t.graph.out_degrees + t.graph.in_degrees
    assert np.all(deg[inner] == 2 * d)
    assert np.all(t.graph.out_degrees[inner] == d)


def test_orientation_rule():
    t = build_tree("T", 2, 3)
    g = t.graph
    # leftmost d children of every vertex hang on out-edges
    assert g.out_edges[0] == (1, 2, 3)
    for c in (4, 5, 6):
        assert g.out_edges[c][0] == 0


def test_size_cap():
    with pytest.raises(SizeOverflow):
        build_tree("T", 12, 3, max_vertices=10_000)


def test_full_graph_extension_is_h():
    g = sample_simple(30, 3, seed=2)
    e = extend(g, None, 0.3 + 0.2j, -0.1 + 0.5j, 0.2 + 0.3j, 0.5)
    e0 = extend(g, None, 0, 0, 0.2 + 0.3j, 0.5)
    np.testing.assert_array_equal(e.dense(), e0.dense())


def test_isolated_vertex_extension():
    z, w, d = 0.2 + 0.6j, 0.7 - 0.2j, 3
    s = solve_m_infty(z, w, d)
    m = s.m_infty
    e = extend(Digraph(1, d, ((),)), None, m, m, z, w)
    np.testing.assert_allclose(e.dense(), [[-z - 1.5 * m, -w], [-np.conj(w), -z - 1.5 * m]], atol=1e-15)
    G = green_dense(e)
    u = z + 1.5 * m
    np.testing.assert_allclose(G[0, 0], u / (abs(w) ** 2 - u * u), rtol=1e-13)
    np.testing.assert_allclose(G[0, 0], s.mT_d, rtol=1e-12)


def test_ext_i_coefficient():
    t = build_tree("T1", 2, 3)
    d1, d2 = 0.3 + 0.2j, 0.1 + 0.4j
    a = extend_tree(t, d1, d2, 0.5j, 0.3).dense()
    b = extend_tree(t, d1, d2, 0.5j, 0.3, "i").dense()
    diff = b - a
    n = t.n
    assert np.count_nonzero(diff) == 1
    np.testing.assert_allclose(diff[n, n], d2 / 2, atol=1e-15)


def test_deficit_out_of_range():
    g = sample_simple(10, 2, seed=0)
    with pytest.raises(DeficitOutOfRange):
        extend(g, ({0: 1}, {}), 0, 0, 1j, 0)
    with pytest.raises(DeficitOutOfRange):
        root_block("T", 2, 3, 1j, 0, 0.1j, 0.1j, "i")


def test_sidecar_roundtrip():
    t = build_tree("T2", 2, 3)
    e = extend_tree(t, 0.1 + 0.3j, 0.2 + 0.1j, 0.4 + 0.5j, 0.3 - 0.1j, "o")
    e2 = TreeExtension.from_json(*e.to_json())
    np.testing.assert_array_equal(e2.dense(), e.dense())
    np.testing.assert_array_equal(e2.def_out, e.def_out)


def test_closed_form_root_blocks():
    s = solve_m_infty(0.3 + 0.4j, 0.8, 3)
    B1 = root_entries_recursive("T1", 0.3 + 0.4j, 0.8, 3)
    np.testing.assert_allclose(B1, [[s.m_sd, s.m_uod], [s.m_lod, s.m_infty]])
    BT = root_entries_recursive("T", 0.3 + 0.4j, 0.8, 3)
    assert BT[0, 0] == BT[1, 1] == s.mT_d
    B0 = root_entries_recursive("T", 0.3 + 0.4j, 0.0, 3)
    assert B0[0, 1] == 0 and B0[1, 0] == 0


@pytest.mark.parametrize("d", [3, 4])
@pytest.mark.parametrize("kind, variant", [("T", ""), ("T1", ""), ("T2", ""), ("T1", "i"), ("T2", "o")])
def test_recursion_matches_dense(kind, variant, d):
    for z, w in POINTS[:2]:
        for dl in ((0.2 + 0.5j, 0.1 + 0.7j), None):
            if dl is None:
                m = solve_m_infty(z, w, d).m_infty
                dl = (m, m)
            for K in range(1, 6):
                if tree_size(kind, K, d) > 2500:
                    break
                t = build_tree(kind, K, d)
                G = green_dense(extend_tree(t, *dl, z, w, variant))
                rb = root_block(kind, K, d, z, w, *dl, variant)
                np.testing.assert_allclose(G[np.ix_([0, t.n], [0, t.n])], rb, atol=1e-10)


def test_infinite_tree_blocks_from_extension():
    for z, w in POINTS:
        s = solve_m_infty(z, w, 3)
        m = s.m_infty
        # the infinite T1 (T2) lacks one in-edge (out-edge) at the root: Ext_i (Ext_o)
        for kind, var in (("T", ""), ("T1", "i"), ("T2", "o")):
            t = build_tree(kind, 3, 3)
            G = green_dense(extend_tree(t, m, m, z, w, var))
            np.testing.assert_allclose(G[np.ix_([0, t.n], [0, t.n])], root_entries_recursive(kind, z, w, 3, s),
                                       atol=1e-10)


def test_T_root_diagonal_deep():
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    s = solve_m_infty(z, w, 3)
    for K in (1, 4, 6):
        t = build_tree("T", K, 3)
        ext = extend_tree(t, s.m_infty, s.m_infty, z, w)
        col = green_columns(ext, [0, t.n])
        np.testing.assert_allclose([col[0, 0], col[t.n, 1]], [s.mT_d, s.mT_d], atol=1e-10)


def test_m_star_tree_oracle():
    # m_star(i) for d = 3 against the root of an exact tree extension
    from digraphlaw.selfconsistent import m_star
    z = 1j / np.sqrt(2)
    s = solve_m_infty(z, 0, 3)
    t = build_tree("T", 5, 3)
    col = green_columns(extend_tree(t, s.m_infty, s.m_infty, z, 0), [0])
    np.testing.assert_allclose(m_star(1j, 0, 3), col[0, 0] / np.sqrt(2), atol=1e-8)


def test_conjugation_symmetry():
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    s = solve_m_infty(z, w, 3)
    t = build_tree("T1", 2, 3)
    G = green_dense(extend_tree(t, s.m_infty, s.m_infty, z, w))
    Gc = green_dense(extend_tree(t, np.conj(s.m_infty), np.conj(s.m_infty), np.conj(z), w))
    np.testing.assert_allclose(G, Gc.conj().T, atol=1e-13)


@pytest.mark.parametrize("d", [3, 4])
def test_fixed_point(d):
    for z, w in POINTS:
        m = solve_m_infty(z, w, d).m_infty
        for K in range(1, 9):
            assert abs(Y_iK(m, m, K, d, z, w) - m) <= 1e-10
            assert abs(Y_oK(m, m, K, d, z, w) - m) <= 1e-10


def test_Y_requires_K():
    with pytest.raises(ValidationError):
        Y_iK(0.1j, 0.1j, 0, 3, 1j)


@pytest.mark.parametrize("d", [3, 4])
def test_jacobian_complex_prediction(d):
    for z, w in POINTS[:3]:
        for K in (1, 3, 5):
            np.testing.assert_allclose(jacobian_fd(K, z, w, d), jacobian_prediction(K, z, w, d), atol=1e-4)


def test_jacobian_modulus_is_entrywise_bound():
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    for K in (1, 3):
        J = jacobian_fd(K, z, w, 3)
        P = np.linalg.matrix_power(linearization_matrix(z, w, 3, modulus=True), K + 1)
        assert np.all(np.abs(J) <= P + 1e-8)
        assert np.abs(np.abs(J) - P).max() > 1e-3    # it is a bound, not the derivative


@given(st.floats(-2.5, 2.5), st.floats(0.02, 3), st.floats(0, 1.6))
def test_linearization_spectral_radius(x, y, w):
    s = solve_m_infty(complex(x, y), w, 3)
    if s.near_edge:
        return
    assert spectral_radius_linearization(s) < 1


def test_boundary_sums_two_ways():
    for z, w in POINTS:
        for k in range(0, 6):
            b = boundary_sums(k, z, w, 3)
            np.testing.assert_allclose([b.A1, b.A2], [b.A1_direct, b.A2_direct], atol=1e-10)


def test_boundary_sum_initial_value():
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    s = solve_m_infty(z, w, 3)
    A1, A2 = boundary_sums_recursion(0, z, w, 3, s)
    np.testing.assert_allclose(A1, abs(s.m_lod) ** 2 + abs(s.m_infty) ** 2, rtol=1e-14)
    b = boundary_sums(0, z, w, 3)
    np.testing.assert_allclose(b.A1_direct, A1, rtol=1e-12)
    # the root row of Ext_i(T1) is (m_lod, m_inf), not (m_sd, m_inf)
    assert abs(abs(s.m_sd) ** 2 + abs(s.m_infty) ** 2 - A1) > 1e-3


def test_boundary_sums_bounded_in_k():
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    s = solve_m_infty(z, w, 3)
    rho = spectral_radius_linearization(s)
    vals = np.array([boundary_sums_recursion(k, z, w, 3, s)[0] for k in range(31)])
    assert np.all(np.isfinite(vals)) and vals.max() < 10
    assert vals[30] <= vals[0] * rho ** 30 * 4 + 1e-300


def test_path_entries_from_root():
    for z, w in POINTS[:2]:
        s = solve_m_infty(z, w, 3)
        for kind, var in (("T", ""), ("T1", "i"), ("T2", "o")):
            t = build_tree(kind, 3, 3)
            for dl in ((s.m_infty, s.m_infty), (0.2 + 0.5j, 0.1 + 0.7j)):
                ext = extend_tree(t, *dl, z, w, var)
                G = green_dense(ext)
                for y in np.random.default_rng(0).choice(t.n, 40, replace=False):
                    for oy in (0, t.n):
                        for ox in (0, t.n):
                            p = path_entry(ext, ox, y + oy)
                            assert p.exact
                            assert abs(p.value - G[ox, y + oy]) <= 1e-12


def test_path_root_to_root():
    z, w = 0.3 + 0.4j, 0.8
    s = solve_m_infty(z, w, 3)
    t = build_tree("T", 2, 3)
    p = path_entry(extend_tree(t, s.m_infty, s.m_infty, z, w), 0, 0)
    assert p.factors == ()
    np.testing.assert_allclose(p.value, s.mT_d, atol=1e-13)


def test_path_all_out_edges():
    z, w = 0.3 + 0.4j, 0.8
    s = solve_m_infty(z, w, 3)
    t = build_tree("T", 3, 3)
    v = 0
    for _ in range(3):
        v = t.graph.out_edges[v][0] if v == 0 else next(c for c in t.graph.out_edges[v] if t.parent[c] == v)
    ext = extend_tree(t, s.m_infty, s.m_infty, z, w)
    p = path_entry(ext, 0, v)
    assert len(p.factors) == 3 and all(f.subtree == 1 for f in p.factors)
    assert abs(p.value - green_dense(ext)[0, v]) <= 1e-12


def test_path_interior_homogeneous_exact():
    z, w = -0.4 + 0.3j, 0.6 + 0.2j
    s = solve_m_infty(z, w, 3)
    t = build_tree("T", 3, 3)
    ext = extend_tree(t, s.m_infty, s.m_infty, z, w)
    G = green_dense(ext)
    rng = np.random.default_rng(1)
    for x, y in rng.integers(0, t.n, (40, 2)):
        for ox in (0, t.n):
            p = path_entry(ext, x + ox, y)
            assert p.exact
            assert abs(p.value - G[x + ox, y]) <= 1e-12


def test_path_bound_audit():
    # |entry| <= C prod K(E_v) with K(E_v) <= max root-block modulus / sqrt(d-1); C reported
    ratios = []
    for z, w in POINTS:
        s = solve_m_infty(z, w, 3)
        t = build_tree("T", 3, 3)
        ext = extend_tree(t, s.m_infty, s.m_infty, z, w)
        for y in range(1, t.n, 7):
            p = path_entry(ext, 0, y)
            if p.bound_product(3) > 0:
                ratios.append(abs(p.value) / p.bound_product(3))
    C = max(ratios)
    assert np.isfinite(C) and C < 10


def test_nonzero_boundary_entries():
    # a depth-k boundary of size b gives 2b nonzero root-row entries per block row
    z, w = 0.3 + 0.4j, 0.8 + 0.3j
    s = solve_m_infty(z, w, 3)
    t = build_tree("T1", 3, 3)
    G = green_dense(extend_tree(t, s.m_infty, s.m_infty, z, w, "i"))
    leaves = np.flatnonzero(t.depth == 3)
    row = G[t.n]
    nz = np.count_nonzero(np.abs(np.concatenate([row[leaves], row[leaves + t.n]])) > 1e-14)
    assert nz == 2 * leaves.size


def test_path_entry_rejects_cycles():
    g = sample_simple(10, 2, seed=0)
    ext = extend(g, None, 0.1j, 0.1j, 1j, 0)
    with pytest.raises(NotATree):
        path_entry(ext, 0, 1)

"""
Green's functions on oriented trees
===================================

Truncated d-regular oriented trees, with boundary vertices weighted by
deltas, have Green's functions computable by a block recursion.  Plugging in
m_inf makes the truncation invisible: the root entries equal m_inf at every
depth.  Near that fixed point the recursion linearizes to a 2x2 complex matrix
power.
"""
import numpy as np

from digraphlaw.selfconsistent import solve_m_infty
from digraphlaw.treegreen import (Y_iK, Y_oK, boundary_sums, build_tree, extend_tree, green_columns,
                                  jacobian_fd, jacobian_prediction, root_block)

d, z, w = 3, 0.3 + 0.4j, 0.8 + 0.3j
m = solve_m_infty(z, w, d).m_infty

# %%
# Recursion against a direct sparse solve on the explicit tree.
for K in (2, 4, 5):
    tree = build_tree("T", K, d)
    ext = extend_tree(tree, 0.2 + 0.5j, 0.1 + 0.7j, z, w)
    direct = green_columns(ext, [0, tree.n])[[0, tree.n]]
    rec = root_block("T", K, d, z, w, 0.2 + 0.5j, 0.1 + 0.7j)
    print(f"K = {K}  vertices {tree.n:5d}  |recursive - direct| = {np.abs(rec - direct).max():.1e}")

# %%
# m_inf is a fixed point of the boundary-to-root map at every depth.
for K in range(1, 7):
    print(f"K = {K}  |Y_i - m| = {abs(Y_iK(m, m, K, d, z, w) - m):.1e}  |Y_o - m| = {abs(Y_oK(m, m, K, d, z, w) - m):.1e}")

# %%
# Perturbing the boundary: the Jacobian is a complex 2x2 power that decays in K.
for K in (1, 3, 6):
    J = jacobian_prediction(K, z, w, d)
    print(f"K = {K}  ||J|| = {np.abs(J).max():.3e}  finite-difference error {np.abs(jacobian_fd(K, z, w, d) - J).max():.1e}")

# %%
# Sums of Green's entries over the depth-k boundary, by recursion and directly.
for k in range(5):
    b = boundary_sums(k, z, w, d)
    print(f"k = {k}  A1 = {b.A1:.6f}  direct error {abs(b.A1 - b.A1_direct):.1e}")

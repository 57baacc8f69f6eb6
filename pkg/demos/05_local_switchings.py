"""
Local switchings
================

A switching picks a vertex o, the boundary edges of its neighbourhood of
radius ell-1, and one random partner edge per boundary edge.  Each pair is
marked active (chi = 1) when it is far from the ball and from the other
partners.  Rewiring all active pairs gives a new simple regular digraph, and
applying the same move twice returns the original graph.
"""
import numpy as np

from digraphlaw import sample_simple
from digraphlaw.switching import apply_T, default_R_chi, sample_switching, switch_statistics

rng = np.random.default_rng(5)
g = sample_simple(400, 3, seed=5)

# %%
# One switching, applied twice.
s = sample_switching(g, o=0, ell=2, R_chi=1, seed=rng)
g2, s2 = apply_T(g, s)
g3, s3 = apply_T(g2, s2)
print("boundary edges mu =", s.mu, " active pairs =", sum(s.chi))
print("edges replaced:", len(set(map(tuple, g.edges.tolist())) - set(map(tuple, g2.edges.tolist()))))
print("T(T(G)) == G:", g3 == g and s3 == s, "  regular and simple:", g2.is_regular and g2.is_simple)

# %%
# How many pairs stay inactive?  Collisions at distance zero become rare as N
# grows, so the count of inactive pairs at the default separation shrinks.
print("default separation at N=2000:", default_R_chi(2000, 3))
for n in (500, 1000, 2000):
    st = switch_statistics(n, 3, ell=2, R_chi=default_R_chi(n, 3), trials=100, seed=1).summary()
    print(f"N = {n:5d}  mu = {st['mu']['mean']:.0f}  inactive pairs mean {st['chi_zero']['mean']:.2f} "
          f"max {st['chi_zero']['max']}")

"""
The self-consistent law and its density
=======================================

The limiting spectral law of a random d-regular digraph is described by one
scalar, m_inf(z, w), the Herglotz root of a cubic.  This walk-through solves
the cubic on a few points, checks the derived identities, and looks at the
radial density that drops out of it.

Run with ``python demos/01_self_consistent_law.py``.
"""
import numpy as np

from digraphlaw.selfconsistent import (kesten_mckay_density, kesten_mckay_second_moment, m_star, radial_cdf,
                                       sample_kesten_mckay, solve_m_infty, solve_unrescaled)

# %%
# One spectral point.  ``solve_m_infty`` returns every derived scalar at once.
d = 3
sol = solve_m_infty(0.3j, 1.0, d)
print("m_inf(0.3i, 1) =", sol.m_infty)
print("m_T^d          =", sol.mT_d)
print("cubic residual =", sol.residual)

# %%
# Arrays work too.  Along the imaginary axis, Im m_inf is positive and decays.
eta = np.geomspace(1e-2, 4, 6)
curve = solve_m_infty(1j * eta, 1.0, d)
for e, m in zip(eta, curve.m_infty):
    print(f"eta = {e:7.4f}   m_inf = {m.real:+.6f} {m.imag:+.6f}i")

# %%
# At w = 0 the cubic factors: one root is the semicircle Stieltjes transform.
z = 0.4 + 0.2j
semicircle = (-z + np.sqrt(z - 2) * np.sqrt(z + 2)) / 2
print("w=0 root vs semicircle:", abs(solve_m_infty(z, 0.0, d).m_infty - semicircle))

# %%
# Rescaling.  The unscaled transform m_* relates to m_T^d by a factor sqrt(d-1).
r = np.sqrt(d - 1)
print("scaling identity error:", abs(r * m_star(r * z, r * 0.5, d) - solve_m_infty(z, 0.5, d).mT_d))

# %%
# Dimension recursion.  Shifting z by m_inf^d moves the unscaled transform
# from degree d to degree d-1.  The shift enters with a plus sign; with the
# opposite sign the shifted point can fall out of the upper half-plane.
zz, ww = 0.5 + 0.3j, 0.7
_, mT = solve_unrescaled(zz, ww, d)
shift = 2 * mT / (1 + np.sqrt(1 + 4 * mT * mT))
print("recursion error:", abs(solve_unrescaled(zz + shift, ww, d - 1)[1] - mT))

# %%
# The density h_d is radial on the disk of radius sqrt(d).  Its CDF in |w|
# has the closed form (d-1) r^2 / (d^2 - r^2).
for rad in np.linspace(0.25, np.sqrt(d), 5):
    print(f"r = {rad:.3f}   h_d = {kesten_mckay_density(rad, d):.5f}   F_d = {radial_cdf(rad, d):.5f}")

# %%
# Sampling from the law by inverting the radial CDF reproduces its second moment.
pts = sample_kesten_mckay(200_000, d, seed=0)
print("E|w|^2: sample", np.mean(np.abs(pts) ** 2), " exact", kesten_mckay_second_moment(d))

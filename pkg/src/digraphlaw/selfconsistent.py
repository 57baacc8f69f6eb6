"""Self-consistent equation of the directed tree and the oriented Kesten-McKay law.

With c = d/(d-1) the root quantity m = m_inf(z, w) of the scaled directed tree
solves

    m = (z + c m) / (|w|^2 - (z + c m)(z + m)),

equivalently the cubic

    c m^3 + (1 + c) z m^2 + (z^2 + c - |w|^2) m + z = 0.

The physical root is the Herglotz branch (Im m > 0, z m -> -1 as z -> inf).
It is found by following the roots from z + iT down to z, then checked against
a damped fixed-point iteration.  The right-hand side maps the upper half-plane
into itself, so the Herglotz root is also the unique root with Im m > 0; that
criterion is the final cross-check.

Everything here is vectorised: ``z`` and ``w`` broadcast against each other.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import BranchAmbiguity, DegenerateDenominator, NonHerglotz, ValidationError

RESIDUAL_TOL = 1e-12
DEGENERATE_TOL = 1e-8
EDGE_TOL = 1e-3


@dataclass(frozen=True)
class SpectralPoint:
    z: complex
    w: complex = 0.0
    d: int = 3
    convention: str = "scaled"

    def __post_init__(self):
        if not np.all(np.imag(self.z) > 0):
            raise ValidationError(f"Im z must be positive, got z={self.z}")
        if self.convention not in ("scaled", "unscaled"):
            raise ValidationError(f"unknown convention {self.convention!r}")
        if self.d < 1:
            raise ValidationError("d must be >= 1")


@dataclass(frozen=True)
class SelfConsistentSolution:
    """m_inf and all derived scalars; fields are arrays for array input."""

    z: complex
    w: complex
    d: int
    m_infty: complex
    m_sd: complex
    m_uod: complex
    m_lod: complex
    mT_d: complex
    mT_uod: complex
    mT_lod: complex
    X: float
    Y: float
    Sg1: float
    Sg2: float
    residual: float
    near_edge: bool

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# ---------------------------------------------------------------------------
# polynomial machinery
# ---------------------------------------------------------------------------
def _coeffs(z, w2, a, b):
    """Coefficients (highest first) of ab m^3 + (a+b) z m^2 + (z^2 + a - |w|^2) m + z.

    This is the cubic form of m = (z + a m)/(|w|^2 - (z + a m)(z + b m)).  The
    scaled system has (a, b) = (d/(d-1), 1); the unscaled one (d, d-1).
    """
    z = np.asarray(z, dtype=complex)
    one = np.ones_like(z)
    return np.stack([a * b * one, (a + b) * z, z * z + a - w2, z], axis=-1)


def poly_roots(coeffs):
    """Roots of a stack of polynomials (..., k+1), via companion eigenvalues."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if np.any(coeffs[..., 0] == 0):
        raise ValidationError("leading coefficient vanishes")
    k = coeffs.shape[-1] - 1
    lead = coeffs[..., :1]
    comp = np.zeros(coeffs.shape[:-1] + (k, k), dtype=complex)
    comp[..., 0, :] = -coeffs[..., 1:] / lead
    if k > 1:
        idx = np.arange(k - 1)
        comp[..., idx + 1, idx] = 1.0
    return np.linalg.eigvals(comp)


def _fixed_map(m, z, w2, a, b):
    u = z + a * m
    return u / (w2 - u * (z + b * m))


def _poly(m, z, w2, a, b):
    return a * b * m ** 3 + (a + b) * z * m * m + (z * z + a - w2) * m + z


def _dpoly(m, z, w2, a, b):
    return 3 * a * b * m * m + 2 * (a + b) * z * m + (z * z + a - w2)


def _quad_root(z, w2):
    """Herglotz root of the d = 1 unscaled quadratic z m^2 + (z^2 + 1 - |w|^2) m + z."""
    roots = poly_roots(np.stack([z, z * z + 1 - w2, z], axis=-1))
    pick = np.argmax(roots.imag, axis=-1)
    m = np.take_along_axis(roots, pick[..., None], axis=-1)[..., 0]
    return m


def _track(z, w2, a, b, T=None, ratio=0.8, floor=1e-6):
    """Follow the Herglotz root from z + iT down to z (flattened arrays)."""
    z = np.asarray(z, dtype=complex).ravel()
    w2 = np.broadcast_to(np.asarray(w2, dtype=float), z.shape).ravel().copy()
    if T is None:
        T = 1e3 * (1.0 + np.abs(z) + w2)
    T = np.broadcast_to(T, z.shape).astype(float)
    m = -1.0 / (z + 1j * T)            # asymptotic start, z m -> -1
    roots = poly_roots(_coeffs(z + 1j * T, w2, a, b))
    m = roots[np.arange(z.size), np.argmin(np.abs(roots - m[:, None]), axis=1)]
    off = T.copy()
    stop = 1e-3 * z.imag
    while True:
        done = off == 0
        if np.all(done):
            break
        nxt = np.where(off * ratio < stop, 0.0, off * ratio)
        m, off = _step(z, w2, a, b, m, off, nxt, done, floor)
    return m


def _step(z, w2, a, b, m, off, nxt, done, floor):
    """Advance every live path from offset ``off`` to ``nxt`` with step halving."""
    live = ~done
    idx = np.flatnonzero(live)
    roots = poly_roots(_coeffs(z[idx] + 1j * nxt[idx], w2[idx], a, b))
    dist = np.abs(roots - m[idx, None])
    order = np.sort(dist, axis=1)
    ambiguous = order[:, 1] < 10 * order[:, 0]
    best = roots[np.arange(idx.size), np.argmin(dist, axis=1)]
    m = m.copy()
    off = off.copy()
    ok = ~ambiguous
    m[idx[ok]] = best[ok]
    off[idx[ok]] = nxt[idx[ok]]
    for j in idx[ambiguous]:
        m[j], off[j] = _refine(z[j], w2[j], a, b, m[j], off[j], nxt[j], floor)
    return m, off


def _refine(z, w2, a, b, m, off, target, floor):
    h = off - target
    while off > target:
        step = min(h, off - target)
        new = off - step
        roots = poly_roots(_coeffs(np.array([z + 1j * new]), w2, a, b))[0]
        dist = np.sort(np.abs(roots - m))
        if dist[1] < 10 * dist[0]:
            if step <= floor * max(1.0, abs(z.imag)):
                raise BranchAmbiguity(f"root tracking ambiguous near z={z}, offset {new:.3g}")
            h = step / 2
            continue
        m = roots[np.argmin(np.abs(roots - m))]
        off = new
        h = 2 * step
    return m, target


def _fixed_point(z, w2, a, b, iters=20000, theta=0.5, tol=1e-13):
    m = np.full(np.shape(z), 1j, dtype=complex)
    for _ in range(iters):
        new = (1 - theta) * m + theta * _fixed_map(m, z, w2, a, b)
        if np.max(np.abs(new - m), initial=0.0) < tol:
            return new
        m = new
    return m


def _newton(m, z, w2, a, b, steps=3):
    for _ in range(steps):
        dp = _dpoly(m, z, w2, a, b)
        safe = np.abs(dp) > 0
        m = np.where(safe, m - _poly(m, z, w2, a, b) / np.where(safe, dp, 1), m)
    return m


def _solve_branch(z, w, a, b):
    """Herglotz root of the (a, b) system; arrays broadcast.  Returns (m, z, w2)."""
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
    if not np.all(z.imag > 0):
        raise ValidationError("Im z must be positive")
    w2 = np.abs(w) ** 2
    shape = z.shape
    zf, w2f = z.ravel(), w2.ravel()
    if a * b == 0:
        m = _quad_root(zf, w2f)
    else:
        m = _newton(_track(zf, w2f, a, b), zf, w2f, a, b)
        roots = poly_roots(_coeffs(zf, w2f, a, b))
        upper = np.sum(roots.imag > 0, axis=1)
        if np.any(upper != 1):
            bad = np.flatnonzero(upper != 1)[0]
            raise BranchAmbiguity(f"{upper[bad]} roots in the upper half-plane at z={zf[bad]}")
        herg = roots[np.arange(zf.size), np.argmax(roots.imag, axis=1)]
        fp = _newton(_fixed_point(zf, w2f, a, b), zf, w2f, a, b)
        scale = 1 + np.abs(herg)
        if np.any(np.abs(m - herg) > 1e-8 * scale) or np.any(np.abs(fp - herg) > 1e-6 * scale):
            bad = np.flatnonzero((np.abs(m - herg) > 1e-8 * scale) | (np.abs(fp - herg) > 1e-6 * scale))[0]
            raise BranchAmbiguity(
                f"homotopy {m[bad]}, fixed point {fp[bad]} and Herglotz root {herg[bad]} disagree at z={zf[bad]}")
    if np.any(m.imag <= 0):
        raise NonHerglotz("tracked root has Im m <= 0")
    return m.reshape(shape), z, w2


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def _check_d(d, lo):
    if int(d) != d or d < lo:
        raise ValidationError(f"d must be an integer >= {lo}, got {d}")


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------
def m_infty(z, w=0.0, d=3):
    """Only the Herglotz root m_inf(z, w) of the scaled system (array-friendly)."""
    _check_d(d, 2)
    c = d / (d - 1)
    m, _, _ = _solve_branch(z, w, c, 1.0)
    return _out(m)


def solve_m_infty(z, w=0.0, d=3) -> SelfConsistentSolution:
    """Solve the scaled self-consistent equation and fill in every derived scalar.

    ``z`` may also be a :class:`SpectralPoint`.
    """
    if isinstance(z, SpectralPoint):
        if z.convention != "scaled":
            raise ValidationError("solve_m_infty works in the scaled convention; use solve_unrescaled")
        z, w, d = z.z, z.w, z.d
    _check_d(d, 2)
    c = d / (d - 1)
    m, zz, _ = _solve_branch(z, w, c, 1.0)
    return derived_quantities(m, zz, w, d)


def derived_quantities(m, z, w, d) -> SelfConsistentSolution:
    """The six derived entries, X, Y and the singularity parameters from m_inf."""
    c = d / (d - 1)
    m, z, w = np.broadcast_arrays(np.asarray(m, dtype=complex), np.asarray(z, dtype=complex),
                                  np.asarray(w, dtype=complex))
    w2 = np.abs(w) ** 2
    u = z + c * m
    if np.any(np.abs(u) < DEGENERATE_TOL):
        raise DegenerateDenominator("|z + c m_inf| below tolerance (edge singularity)")
    m_sd = (z + m) / u * m
    m_uod = -w * m / u
    m_lod = -np.conj(w) * m / u
    mT = u / (w2 - u * u)
    mT_uod = -w * mT / u
    mT_lod = -np.conj(w) * mT / u
    X = np.abs(m) ** 2
    Y = c * w2 * X / np.abs(u) ** 2
    resid = np.abs(m - _fixed_map(m, z, w2, c, 1.0))
    near_edge = np.abs(np.sqrt(w2) - np.sqrt(c)) < EDGE_TOL
    vals = [m, m_sd, m_uod, m_lod, mT, mT_uod, mT_lod, X, Y, 1 - X - Y, 1 + X - Y, resid, near_edge]
    return SelfConsistentSolution(_out(z), _out(w), d, *map(_out, vals))


def mT_d(z, w=0.0, d=3):
    """Scaled root entry of the full directed tree, m_T^d(z, w)."""
    return solve_m_infty(z, w, d).mT_d


def m_star(Z, W=0.0, d=3):
    """Unscaled tree transform: m_T^d(Z/s, W/s)/s with s = sqrt(d-1)."""
    _check_d(d, 3)
    s = np.sqrt(d - 1)
    return _out(np.asarray(mT_d(np.asarray(Z) / s, np.asarray(W) / s, d)) / s)


def solve_unrescaled(z, w=0.0, d=3):
    """(m_inf, m_T) of the unscaled tree, for any d >= 1.

    Solves m = (z + d m)/(|w|^2 - (z + d m)(z + (d-1) m)) and returns
    m_T = (z + d m)/(|w|^2 - (z + d m)^2).  For d = 1 the system degenerates
    to a quadratic.
    """
    _check_d(d, 1)
    m, zz, w2 = _solve_branch(z, w, float(d), float(d - 1))
    u = zz + d * m
    mT = u / (w2 - u * u)
    return _out(m), _out(mT)


def mT_d1_closed_form(z, w=0.0):
    """d = 1 closed form -z / sqrt((z^2 - (1-|w|)^2)(z^2 - (1+|w|)^2)), Im > 0 branch."""
    z = np.asarray(z, dtype=complex)
    aw = np.abs(np.asarray(w))
    root = np.sqrt((z * z - (1 - aw) ** 2) * (z * z - (1 + aw) ** 2))
    val = -z / root
    return _out(np.where(val.imag > 0, val, -val))


def unscaled_recursion_shift(z, w, d):
    """Argument z + m_inf^d(z) at which m_T^{d-1} reproduces m_T^d (unscaled).

    In terms of m_T alone the shift is 2 m_T/(1 + sqrt(1 + 4 m_T^2)) on the
    branch where it equals m_inf.
    """
    m, _ = solve_unrescaled(z, w, d)
    return np.asarray(z) + m


def spectral_radius_linearization(sol: SelfConsistentSolution):
    """Spectral radius of [[Y, X], [X, Y]], i.e. max(X + Y, |Y - X|)."""
    return np.maximum(sol.X + sol.Y, np.abs(sol.Y - sol.X))


# ---------------------------------------------------------------------------
# oriented Kesten-McKay law
# ---------------------------------------------------------------------------
def kesten_mckay_density(w, d=3):
    """h_d(w) = d^2 (d-1) / (pi (d^2 - |w|^2)^2) on |w| <= sqrt(d), else 0."""
    _check_d(d, 2)
    r2 = np.abs(np.asarray(w)) ** 2
    inside = r2 <= d
    val = np.where(inside, d * d * (d - 1) / (np.pi * (d * d - np.where(inside, r2, 0.0)) ** 2), 0.0)
    return _out(val)


def radial_cdf(r, d=3):
    """mu_d(|w| <= r) = (d-1) r^2 / (d^2 - r^2), clipped to 1 past sqrt(d)."""
    _check_d(d, 2)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValidationError("r must be nonnegative")
    rc = np.minimum(r, np.sqrt(d))
    val = np.where(r >= np.sqrt(d), 1.0, (d - 1) * rc * rc / (d * d - rc * rc))
    return _out(val)


def radial_quantile(u, d=3):
    """Inverse of :func:`radial_cdf`: r = d sqrt(u / (d - 1 + u))."""
    u = np.asarray(u, dtype=float)
    return _out(d * np.sqrt(u / (d - 1 + u)))


def sample_kesten_mckay(n, d=3, seed=None):
    """n i.i.d. points of mu_d (radial inverse CDF, uniform angle)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r = radial_quantile(rng.random(n), d)
    return r * np.exp(2j * np.pi * rng.random(n))


def kesten_mckay_second_moment(d=3):
    """Integral of |w|^2 against mu_d: d^2 + d^2 (d-1) log(1 - 1/d)."""
    return d * d + d * d * (d - 1) * np.log1p(-1.0 / d)

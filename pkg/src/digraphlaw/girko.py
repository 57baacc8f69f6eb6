"""Empirical spectra against the oriented Kesten-McKay law, and Girko's formula.

Girko's identity for a smooth compactly supported psi reads

    (1/N) sum_i psi(lambda_i) = (1/2pi) int Laplacian(psi)(w) L_N(w) dA(w),

with the log potential L_N(w) = (1/N) sum log sigma_i(A - w).  The right side
is evaluated on a midpoint lattice from singular values only, so comparing
the two sides tests the whole Hermitization pipeline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .digraph import Digraph
from .errors import EigFailure, GridTooCoarse, ValidationError
from .resolvent import singular_profiles
from .selfconsistent import kesten_mckay_density, kesten_mckay_second_moment, radial_cdf


def esd(g: Digraph) -> np.ndarray:
    """All eigenvalues of the (unscaled) adjacency, sorted by real then imaginary part."""
    try:
        ev = np.linalg.eigvals(g.adjacency())
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from None
    if not np.all(np.isfinite(ev)):
        raise EigFailure("non-finite eigenvalues")
    return ev[np.lexsort((ev.imag, ev.real))]


def trivial_index(eigs, d) -> int:
    """Index of the eigenvalue closest to d (the Perron eigenvalue)."""
    return int(np.argmin(np.abs(np.asarray(eigs) - d)))


def nontrivial(eigs, d) -> np.ndarray:
    eigs = np.asarray(eigs)
    return np.delete(eigs, trivial_index(eigs, d))


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance of a sample to a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValidationError("empty sample")
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def radial_ks(eigs, d, exclude_trivial=True) -> float:
    """KS distance between the law of |lambda| and F_d(r) = (d-1)r^2/(d^2 - r^2)."""
    ev = nontrivial(eigs, d) if exclude_trivial else np.asarray(eigs)
    return ks_statistic(np.abs(ev), lambda r: radial_cdf(r, d))


def second_moment(eigs, d, exclude_trivial=True) -> float:
    ev = nontrivial(eigs, d) if exclude_trivial else np.asarray(eigs)
    return float(np.mean(np.abs(ev) ** 2))


@dataclass(frozen=True)
class EsdReport:
    n: int
    d: int
    seed: object
    eigenvalues: np.ndarray = field(repr=False)
    trivial: complex
    trivial_error: float
    spectral_radius: float        # of the nontrivial eigenvalues
    ks: float
    second_moment: float
    second_moment_target: float

    def summary(self) -> dict:
        return {"n": self.n, "d": self.d, "seed": self.seed,
                "trivial": [self.trivial.real, self.trivial.imag], "trivial_error": self.trivial_error,
                "spectral_radius": self.spectral_radius, "ks": self.ks,
                "second_moment": self.second_moment, "second_moment_target": self.second_moment_target}


def esd_report(g: Digraph, seed=None) -> EsdReport:
    ev = esd(g)
    k = trivial_index(ev, g.d)
    rest = np.delete(ev, k)
    return EsdReport(g.n, g.d, seed, ev, complex(ev[k]), float(abs(ev[k] - g.d)),
                     float(np.max(np.abs(rest))), radial_ks(ev, g.d), second_moment(ev, g.d),
                     float(kesten_mckay_second_moment(g.d)))


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialBump:
    """psi(w) = exp(-s/(2 sigma^2)) (1 - s/R^2)^3_+ with s = |w - center|^2.

    C^2 with support the closed disk of radius R; the Laplacian of a radial
    g(s) is 4 (s g''(s) + g'(s)).
    """

    center: complex = 0.0
    sigma: float = 1.0
    radius: float = 2.0
    weight: float = 1.0

    def _parts(self, w):
        s = np.abs(np.asarray(w) - self.center) ** 2
        P = np.clip(1.0 - s / self.radius ** 2, 0.0, None)
        E = np.exp(-s / (2 * self.sigma ** 2))
        return s, P, E

    def __call__(self, w):
        s, P, E = self._parts(w)
        return self.weight * E * P ** 3

    def laplacian(self, w):
        s, P, E = self._parts(w)
        a, R2 = self.sigma ** 2, self.radius ** 2
        g1 = E * P * P * (-P / (2 * a) - 3 / R2)
        g2 = E * (P ** 3 / (4 * a * a) + 3 * P * P / (a * R2) + 6 * P / (R2 * R2))
        return self.weight * 4 * (s * g2 + g1)


@dataclass(frozen=True)
class BumpSum:
    parts: tuple

    def __call__(self, w):
        return sum(p(w) for p in self.parts)

    def laplacian(self, w):
        return sum(p.laplacian(w) for p in self.parts)

    @property
    def center(self):
        return self.parts[0].center

    @property
    def radius(self):
        c0 = self.parts[0].center
        return max(abs(p.center - c0) + p.radius for p in self.parts)


# ---------------------------------------------------------------------------
# Girko's identity
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GirkoCheck:
    lhs: float
    rhs: float
    discrepancy: float
    relative: float
    h: float
    n_nodes: int
    error_estimate: float
    order: int = 2


def midpoint_grid(center, half_width, h):
    """Midpoint lattice covering the square of the given half width."""
    k = int(np.ceil(2 * half_width / h))
    t = -half_width + (np.arange(k) + 0.5) * (2 * half_width / k)
    hh = 2 * half_width / k
    X, Y = np.meshgrid(t, t, indexing="ij")
    return center + X + 1j * Y, hh


def _avoid(nodes, eigs, hh, tol=1e-6):
    for frac in (0.5, 1 / 3, 0.25):
        if np.min(np.abs(nodes.reshape(-1, 1) - np.asarray(eigs).reshape(1, -1))) >= tol:
            return nodes
        nodes = nodes + frac * hh * (1 + 1j)
    return nodes


def girko_rhs(g: Digraph, psi, h, eigs=None):
    """(1/2pi) sum over the lattice of Laplacian(psi) * log potential * h^2."""
    nodes, hh = midpoint_grid(psi.center, psi.radius, h)
    if eigs is not None:
        nodes = _avoid(nodes, eigs, hh)
    lap = psi.laplacian(nodes).ravel()
    live = np.abs(lap) > 0
    _, lp = singular_profiles(g, nodes.ravel()[live])
    if not np.all(np.isfinite(lp)):
        raise GridTooCoarse("a lattice point sits on an eigenvalue")
    return float(np.sum(lap[live] * lp) * hh * hh / (2 * np.pi)), hh, int(live.sum())


def girko_identity_check(g: Digraph, psi=None, h=None, tol=None, eigs=None) -> GirkoCheck:
    """Compare both sides of Girko's identity for one graph.

    The quadrature error is estimated as |rhs(h) - rhs(2h)| / 3 (second-order
    rule).  ``GridTooCoarse`` is raised when that estimate exceeds ``tol``
    (relative to |lhs|).
    """
    if psi is None:
        psi = RadialBump(0.0, np.sqrt(g.d) / 2, 1.2 * np.sqrt(g.d))
    if h is None:
        h = psi.radius / 40
    ev = esd(g) if eigs is None else np.asarray(eigs)
    lhs = float(np.mean(psi(ev)))
    rhs, hh, nn = girko_rhs(g, psi, h, ev)
    rhs2, _, _ = girko_rhs(g, psi, 2 * h, ev)
    est = abs(rhs - rhs2) / 3
    scale = max(abs(lhs), 1e-300)
    if tol is not None and est / scale > tol:
        raise GridTooCoarse(f"estimated relative quadrature error {est / scale:.3g} exceeds {tol}")
    disc = abs(lhs - rhs)
    return GirkoCheck(lhs, rhs, disc, disc / scale, hh, nn, est)


# ---------------------------------------------------------------------------
# local windows
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LocalWindow:
    empirical: float
    mu_mass: float
    difference: float
    scale: float


def local_window(eigs, w0, a, d, n=None, psi=None, exclude_trivial=True) -> LocalWindow:
    """Smooth window psi_r(w - w0) = r^2 psi(r (w - w0)), r = N^a, against mu_d."""
    if a < 0:
        raise ValidationError("a must be nonnegative")
    ev = nontrivial(eigs, d) if exclude_trivial else np.asarray(eigs)
    n = n or len(eigs)
    psi = psi or RadialBump(0.0, 0.5, 1.0)
    r = float(n) ** a
    emp = float(np.mean(r * r * psi(r * (ev - w0))))
    rho_max = psi.radius / r

    def integrand(rho, theta):
        w = w0 + rho * np.exp(1j * theta)
        return r * r * psi(r * rho) * kesten_mckay_density(w, d) * rho

    # mu_d lives on |w| <= sqrt(d): along each ray from w0 integrate only over the
    # chord inside the disk, so the integrand is smooth on the integration region
    def chord(theta):
        b = np.real(np.conj(w0) * np.exp(1j * theta))
        disc = b * b - (abs(w0) ** 2 - d)
        if disc <= 0:
            return 0.0, 0.0
        lo, hi = -b - np.sqrt(disc), -b + np.sqrt(disc)
        lo, hi = min(max(lo, 0.0), rho_max), min(max(hi, 0.0), rho_max)
        return lo, hi

    val, _ = integrate.dblquad(integrand, 0, 2 * np.pi, lambda t: chord(t)[0], lambda t: chord(t)[1],
                               epsabs=1e-11, epsrel=1e-9)
    mass = val
    return LocalWindow(emp, float(mass), emp - float(mass), r)

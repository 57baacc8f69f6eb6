"""Hermitization of a digraph and its Green's function.

For B = sA - w (s = 1/sqrt(d-1) in the scaled convention, 1 unscaled),

    H(z, w) = [[-z, B], [B^*, -z]],   G = H^{-1}.

With the SVD B = U diag(sig) V^* the blocks of G are

    G11 = U diag(z/(sig^2 - z^2)) U^*,   G12 = U diag(sig/(sig^2 - z^2)) V^*,
    G21 = V diag(sig/(sig^2 - z^2)) U^*, G22 = V diag(z/(sig^2 - z^2)) V^*,

so one SVD per w serves every z: traces need only the singular values, and
single entries are O(N) dot products.  Dense inversion is kept as the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .digraph import Digraph
from .errors import SingularBlock, ValidationError
from .selfconsistent import solve_m_infty


def _scale(g: Digraph, convention: str) -> float:
    if convention == "scaled":
        if g.d < 2:
            raise ValidationError("scaled convention needs d >= 2")
        return 1.0 / np.sqrt(g.d - 1)
    if convention == "unscaled":
        return 1.0
    raise ValidationError(f"unknown convention {convention!r}")


@dataclass(frozen=True)
class Hermitization:
    n: int
    z: complex
    w: complex
    convention: str
    matrix: sp.csr_matrix = field(repr=False)

    def dense(self):
        return self.matrix.toarray()


def hermitize(g: Digraph, z=0.0, w=0.0, convention="scaled") -> Hermitization:
    """Sparse block matrix [[-z, sA - w], [(sA - w)^*, -z]]."""
    if np.imag(z) < 0:
        raise ValidationError("Im z must be nonnegative")
    s = _scale(g, convention)
    n = g.n
    I = sp.identity(n, dtype=complex, format="csr")
    B = g.adjacency_sparse(dtype=complex) * s - w * I
    H = sp.bmat([[-z * I, B], [B.conj().T, -z * I]], format="csr")
    return Hermitization(n, complex(z), complex(w), convention, H)


def shifted_matrix(g: Digraph, w, convention="scaled") -> np.ndarray:
    """Dense B = sA - w I."""
    real = np.imag(w) == 0
    B = g.adjacency(dtype=float if real else complex) * _scale(g, convention)
    B[np.diag_indices_from(B)] -= np.real(w) if real else w
    return B


def green_function(g: Digraph, z, w=0.0, convention="scaled") -> np.ndarray:
    """Dense G(z, w) = H(z, w)^{-1} by direct inversion."""
    if not np.imag(z) > 0:
        raise ValidationError("Im z must be positive")
    return np.linalg.inv(hermitize(g, z, w, convention).dense())


def hermitization_eigvals(g: Digraph, w=0.0, convention="scaled") -> np.ndarray:
    """Ascending eigenvalues of the Hermitian matrix H(0, w)."""
    return np.linalg.eigvalsh(hermitize(g, 0.0, w, convention).dense())


class GreenSVD:
    """Green's function of H(z, w) for all z from one SVD of B = sA - w."""

    def __init__(self, g: Digraph, w=0.0, convention="scaled"):
        self.g, self.w, self.convention = g, complex(w), convention
        B = shifted_matrix(g, w, convention)
        U, sig, Vh = np.linalg.svd(B)
        self.U, self.sig = U, sig
        self.V = Vh.conj().T

    def _diag(self, z):
        den = self.sig ** 2 - z * z
        return z / den, self.sig / den

    def trace_first_block(self, z):
        """(1/N) sum_{i <= N} G_ii = (1/N) sum_k z/(sig_k^2 - z^2)."""
        z = np.asarray(z, dtype=complex)
        den = self.sig[None, :] ** 2 - z.reshape(-1, 1) ** 2
        return (np.mean(z.reshape(-1, 1) / den, axis=1)).reshape(z.shape)[()]

    def entries(self, z, bi, i, bj, j):
        """Vectorised G_{i + bi N, j + bj N} for block labels bi, bj in {0, 1}."""
        f, h = self._diag(z)
        D = f if bi == bj else h
        L = self.U if bi == 0 else self.V
        R = self.U if bj == 0 else self.V
        return np.einsum("ek,k,ek->e", L[i], D, R[j].conj())

    def ward_violation(self, z) -> float:
        """Ward identity check for every row without forming G.

        Row i of the first block has sum_j |G_ij|^2 = sum_k |U_ik|^2 (|f_k|^2 + |h_k|^2)
        and Im G_ii = sum_k |U_ik|^2 Im f_k; likewise with V for the second block.
        """
        f, h = self._diag(z)
        mag = np.abs(f) ** 2 + np.abs(h) ** 2
        worst = 0.0
        for M in (self.U, self.V):
            P = np.abs(M) ** 2
            lhs = P @ mag
            rhs = (P @ f.imag) / np.imag(z)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
        return worst

    def dense(self, z):
        f, h = self._diag(z)
        U, V = self.U, self.V
        return np.block([[(U * f) @ U.conj().T, (U * h) @ V.conj().T],
                         [(V * h) @ U.conj().T, (V * f) @ V.conj().T]])


def green_trace(g: Digraph, z, w=0.0, convention="scaled"):
    """(1/2N) trace G(z, w) from the spectrum of H(0, w), vectorised in z.

    The spectrum of H(0, w) is plus and minus the singular values of sA - w,
    so one singular value computation gives the trace at every z.
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(z.imag > 0):
        raise ValidationError("Im z must be positive")
    sig = np.linalg.svd(shifted_matrix(g, w, convention), compute_uv=False)
    lam = np.concatenate([sig, -sig])
    val = np.mean(1.0 / (lam[None, :] - z.reshape(-1, 1)), axis=1).reshape(z.shape)
    return val[()]


class QParameters(NamedTuple):
    Q_I: complex
    Q_O: complex
    skipped: int


def _downdate(Gyy, Gy_T, GT_y, GTT, tol):
    """Vectorised G^{(T)}_{yy} = G_yy - G_{y,T} G_TT^{-1} G_{T,y} for 2x2 G_TT."""
    a, b, c, e = GTT[:, 0, 0], GTT[:, 0, 1], GTT[:, 1, 0], GTT[:, 1, 1]
    det = a * e - b * c
    scale = np.abs(GTT).reshape(len(det), -1).max(axis=1) ** 2
    ok = np.abs(det) > tol * np.maximum(scale, 1e-300)
    det = np.where(ok, det, 1.0)
    # inverse [[e, -b], [-c, a]]/det
    v0 = (e * GT_y[:, 0] - b * GT_y[:, 1]) / det
    v1 = (-c * GT_y[:, 0] + a * GT_y[:, 1]) / det
    return Gyy - (Gy_T[:, 0] * v0 + Gy_T[:, 1] * v1), ok


def q_parameters(g: Digraph, z, w=0.0, G=None, green=None, chunk=4096, tol=1e-12,
                 skip_singular=False) -> QParameters:
    """Edge-averaged minor entries Q_I and Q_O by rank-2 downdates of G.

    Q_I averages G^{(x, x+N)}_{y+N, y+N} over edges x -> y and Q_O averages
    G^{(x, x+N)}_{y, y} over edges y -> x.  ``G`` may be a dense Green's
    function (N <= ~1000) and ``green`` a precomputed :class:`GreenSVD` at
    this w; otherwise entries come from a fresh SVD.  Singular 2x2 pivots
    raise, or are skipped and counted when ``skip_singular`` is set.
    """
    if not np.imag(z) > 0:
        raise ValidationError("Im z must be positive")
    n = g.n
    E = g.edges
    if G is not None:
        ent = lambda bi, i, bj, j: G[i + bi * n, j + bj * n]
    else:
        gs = green if green is not None else GreenSVD(g, w, "scaled")
        ent = lambda bi, i, bj, j: gs.entries(z, bi, i, bj, j)
    out, skipped = [], 0
    # Q_I: x -> y, entry y+N (block 1); Q_O: y -> x, entry y (block 0)
    for by, xcol, ycol in ((1, 0, 1), (0, 1, 0)):
        acc, used = 0.0 + 0.0j, 0
        for lo in range(0, len(E), chunk):
            x = E[lo:lo + chunk, xcol]
            y = E[lo:lo + chunk, ycol]
            Gyy = ent(by, y, by, y)
            Gy_T = np.stack([ent(by, y, 0, x), ent(by, y, 1, x)], axis=1)
            GT_y = np.stack([ent(0, x, by, y), ent(1, x, by, y)], axis=1)
            GTT = np.stack([np.stack([ent(0, x, 0, x), ent(0, x, 1, x)], axis=1),
                            np.stack([ent(1, x, 0, x), ent(1, x, 1, x)], axis=1)], axis=1)
            val, ok = _downdate(Gyy, Gy_T, GT_y, GTT, tol)
            bad = int(np.count_nonzero(~ok))
            if bad and not skip_singular:
                raise SingularBlock(f"{bad} singular 2x2 pivots")
            skipped += bad
            used += len(val) - bad
            acc += np.sum(val[ok])
        out.append(acc / used if used else complex("nan"))
    return QParameters(complex(out[0]), complex(out[1]), skipped)


class SingularProfile(NamedTuple):
    s1: float
    log_potential: float


def singular_profile(g: Digraph, w, singular_values=None) -> SingularProfile:
    """Smallest singular value and mean log singular value of A - w (unscaled).

    When s_1 is at roundoff level (<= sigma_max * N * eps) it is reported as
    0 and the log potential as -inf.
    """
    if singular_values is None:
        singular_values = np.linalg.svd(shifted_matrix(g, w, "unscaled"), compute_uv=False)
    s = np.sort(singular_values)
    if s[0] <= s[-1] * len(s) * np.finfo(float).eps:
        return SingularProfile(0.0, -np.inf)
    return SingularProfile(float(s[0]), float(np.mean(np.log(s))))


def singular_profiles(g: Digraph, ws, batch=256):
    """(s1, log_potential) arrays over many w via batched SVD."""
    ws = np.asarray(ws, dtype=complex).ravel()
    A = g.adjacency()
    I = np.eye(g.n)
    s1 = np.empty(ws.size)
    lp = np.empty(ws.size)
    for lo in range(0, ws.size, batch):
        wb = ws[lo:lo + batch]
        M = A[None, :, :] - wb[:, None, None] * I[None, :, :]
        S = np.linalg.svd(M, compute_uv=False)
        for k, s in enumerate(S):
            p = singular_profile(g, wb[k], s)
            s1[lo + k], lp[lo + k] = p
    return s1, lp


def ward_violation(G: np.ndarray, z) -> float:
    """max_i | sum_j |G_ij|^2 - Im G_ii / Im z | / (Im G_ii / Im z)."""
    rhs = np.imag(np.diag(G)) / np.imag(z)
    lhs = np.sum(np.abs(G) ** 2, axis=1)
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


def ward_check(g: Digraph, z, w=0.0, convention="scaled") -> float:
    return ward_violation(green_function(g, z, w, convention), z)


class LocalLawDeviation(NamedTuple):
    first_block: float
    full_trace: float


def local_law_deviation(g: Digraph, z, w=0.0, green=None) -> LocalLawDeviation:
    """|(1/N) sum_{i<=N} G_ii - m_T^d| and |(1/2N) tr G - m_T^d| (scaled)."""
    mT = solve_m_infty(z, w, g.d).mT_d
    gs = green if green is not None else GreenSVD(g, w, "scaled")
    first = np.mean(gs.entries(z, 0, np.arange(g.n), 0, np.arange(g.n)))
    full = 0.5 * (first + np.mean(gs.entries(z, 1, np.arange(g.n), 1, np.arange(g.n))))
    return LocalLawDeviation(float(abs(first - mT)), float(abs(full - mT)))


@dataclass(frozen=True)
class SpectralSample:
    """Per-graph bundle of spectral measurements."""

    eigenvalues: np.ndarray
    ws: np.ndarray
    singular_values: np.ndarray        # (len(ws), N), ascending, unscaled
    s1: np.ndarray
    log_potential: np.ndarray
    zs: np.ndarray
    trace_green: np.ndarray            # (len(zs), len(ws)), scaled convention
    Q_I: np.ndarray
    Q_O: np.ndarray


def spectral_sample(g: Digraph, zs, ws) -> SpectralSample:
    """Eigenvalues, singular data per w (unscaled) and Green data per (z, w) (scaled w)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    eig = np.linalg.eigvals(g.adjacency())
    sv = np.empty((ws.size, g.n))
    s1 = np.empty(ws.size)
    lp = np.empty(ws.size)
    tr = np.empty((zs.size, ws.size), dtype=complex)
    qi = np.empty_like(tr)
    qo = np.empty_like(tr)
    root = np.sqrt(g.d - 1)
    for k, w in enumerate(ws):
        s = np.sort(np.linalg.svd(shifted_matrix(g, w, "unscaled"), compute_uv=False))
        sv[k] = s
        s1[k], lp[k] = singular_profile(g, w, s)
        gs = GreenSVD(g, w / root, "scaled")
        for j, z in enumerate(zs):
            tr[j, k] = gs.trace_first_block(z)
            qi[j, k], qo[j, k], _ = q_parameters(g, z, green=gs, skip_singular=True)
    return SpectralSample(eig, ws, sv, s1, lp, zs, tr, qi, qo)


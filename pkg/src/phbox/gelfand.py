"""Finite-dimensional emulation of quasi Gelfand triples.

The pivot space is R^N with the standard dot product.  A second inner
product is given on a subspace D_plus, spanned by the columns of a basis
matrix B and represented by an SPD Gram matrix G in basis coordinates.  The
dual norm of g is

    |g|_minus = sup_{f in D_plus, f != 0} |<g, f>_0| / |f|_plus
              = | G^{-1/2} B^T g |_2,

finite on ran(B)-compatible vectors; when B is rank deficient, vectors with
a component outside ran B are assigned +inf, mirroring membership in the
dual-side domain.  The duality map sends g to the plus-side representer of
the functional <g, .>_0 and is an isometry onto the plus space.

In finite dimensions the closability conditions of the continuous theory are
automatic; this module exercises the formulas, not the topological
pathology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, InfiniteNorm, NotSPD, Singular


@dataclass(frozen=True)
class FiniteQuasiTriple:
    """Pivot dimension N, a basis of D_plus and the plus-side Gram matrix."""

    N: int
    Dplus_basis: np.ndarray   # (N, r), full column rank
    Gplus: np.ndarray         # (r, r), symmetric positive definite

    def __post_init__(self):
        B = np.asarray(self.Dplus_basis, dtype=float)
        G = np.asarray(self.Gplus, dtype=float)
        if B.ndim != 2 or B.shape[0] != self.N:
            raise DimensionMismatch(f"basis must be {self.N} x r, got {B.shape}")
        r = B.shape[1]
        if G.shape != (r, r):
            raise DimensionMismatch(f"Gram must be {r} x {r}, got {G.shape}")
        if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
            raise NotSPD("Gram matrix is not symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (G + G.T))
        if eigs[0] <= 0:
            raise NotSPD(f"Gram matrix is not positive definite (min eig {eigs[0]:.3e})")
        s = np.linalg.svd(B, compute_uv=False)
        if s.size and s[-1] <= 1e-12 * s[0]:
            raise DimensionMismatch("Dplus_basis must have full column rank")
        object.__setattr__(self, "Dplus_basis", B)
        object.__setattr__(self, "Gplus", 0.5 * (G + G.T))

    @property
    def rank(self) -> int:
        return self.Dplus_basis.shape[1]

    @property
    def full(self) -> bool:
        return self.rank == self.N

    def plus_norm(self, coords: np.ndarray) -> float:
        """Norm of the D_plus element with the given basis coordinates."""
        coords = np.asarray(coords, dtype=float)
        return float(np.sqrt(coords @ self.Gplus @ coords))


def _gram_inv_half(t: FiniteQuasiTriple) -> np.ndarray:
    # G^{-1/2} via Cholesky: G = L L^T, G^{-1/2}-action given by L^{-1}
    L = np.linalg.cholesky(t.Gplus)
    return sla.solve_triangular(L, np.eye(t.rank), lower=True)


def dual_norm(t: FiniteQuasiTriple, g: np.ndarray) -> float:
    """sup of |<g, f>_0| / |f|_plus over D_plus; +inf off ran(Dplus_basis)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (t.N,):
        raise DimensionMismatch(f"vector must have length {t.N}")
    if not t.full:
        # component outside ran B makes g inaccessible from the plus side
        proj, *_ = np.linalg.lstsq(t.Dplus_basis, g, rcond=None)
        off = g - t.Dplus_basis @ proj
        if np.linalg.norm(off) > 1e-12 * max(1.0, np.linalg.norm(g)):
            return np.inf
    Linv = _gram_inv_half(t)
    return float(np.linalg.norm(Linv @ (t.Dplus_basis.T @ g)))


def duality_map(t: FiniteQuasiTriple, g: np.ndarray) -> np.ndarray:
    """Coordinates (in Dplus_basis) of the plus-side representer of <g, .>_0."""
    g = np.asarray(g, dtype=float)
    if g.shape != (t.N,):
        raise DimensionMismatch(f"vector must have length {t.N}")
    if not np.isfinite(dual_norm(t, g)):
        raise InfiniteNorm("dual norm is +inf; the duality map is undefined here")
    rhs = t.Dplus_basis.T @ g
    return np.linalg.solve(t.Gplus, rhs)


def duality_pairing(t: FiniteQuasiTriple, g: np.ndarray, f_coords: np.ndarray) -> float:
    """<g, f>_(minus,plus) = <Psi g, f>_plus for f given in basis coordinates."""
    w = duality_map(t, g)
    f_coords = np.asarray(f_coords, dtype=float)
    return float(w @ t.Gplus @ f_coords)


def transform_triple(t: FiniteQuasiTriple, T: np.ndarray) -> FiniteQuasiTriple:
    """New triple with plus space T D_plus and norm |T^{-1} f|_plus.

    The transformed basis is T B with the unchanged Gram matrix, so the dual
    norm obeys |g|_(new minus) = |T^T g|_minus.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (t.N, t.N):
        raise DimensionMismatch(f"transformation must be {t.N} x {t.N}")
    s = np.linalg.svd(T, compute_uv=False)
    if s[-1] < 1e-12 * s[0]:
        raise Singular(f"transformation is numerically singular (cond {s[0] / s[-1]:.3e})")
    return FiniteQuasiTriple(N=t.N, Dplus_basis=T @ t.Dplus_basis, Gplus=t.Gplus)


def minus_triple(t: FiniteQuasiTriple) -> FiniteQuasiTriple:
    """The triple built on the minus side (full-rank triples only).

    Swapping the roles of the two sides: the minus space is all of R^N with
    Gram B G^{-1} B^T in the standard basis, and the dual of the dual norm
    recovers the plus norm.
    """
    if not t.full:
        raise DimensionMismatch("minus-side construction needs a full-rank plus basis")
    Gminus = t.Dplus_basis @ np.linalg.solve(t.Gplus, t.Dplus_basis.T)
    return FiniteQuasiTriple(N=t.N, Dplus_basis=np.eye(t.N), Gplus=0.5 * (Gminus + Gminus.T))


@dataclass(frozen=True)
class VonNeumannReport:
    """Symmetry and invertibility facts about T^T T and T T^T."""

    sym_defect_tt: float
    sym_defect_tt_rev: float
    min_eig_ixtt: float
    min_eig_iytt: float
    inverse_sym_defect: float
    passed: bool


def von_neumann_check(T: np.ndarray) -> VonNeumannReport:
    """I + T^T T and I + T T^T are symmetric, >= I and have symmetric inverses."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2:
        raise DimensionMismatch("expected a matrix")
    A = T.T @ T
    Brev = T @ T.T
    sd_a = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    sd_b = float(np.max(np.abs(Brev - Brev.T))) if Brev.size else 0.0
    Ix = np.eye(T.shape[1]) + A
    Iy = np.eye(T.shape[0]) + Brev
    min_a = float(np.linalg.eigvalsh(0.5 * (Ix + Ix.T))[0])
    min_b = float(np.linalg.eigvalsh(0.5 * (Iy + Iy.T))[0])
    inv = np.linalg.inv(Ix)
    inv_sd = float(np.max(np.abs(inv - inv.T)))
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    passed = (sd_a <= 1e-12 * scale and sd_b <= 1e-12 * scale
              and min_a >= 1.0 - 1e-12 and min_b >= 1.0 - 1e-12
              and inv_sd <= 1e-10)
    return VonNeumannReport(sym_defect_tt=sd_a, sym_defect_tt_rev=sd_b,
                            min_eig_ixtt=min_a, min_eig_iytt=min_b,
                            inverse_sym_defect=inv_sd, passed=passed)

"""Matrix tuples and pointwise algebraic building blocks.

A first-order system in divergence form is described by a tuple of constant
coefficient matrices ``L = (L_1, ..., L_n)``, all of shape ``m1 x m2``.  From
the tuple we derive the conormal matrix ``L_nu = sum_i nu_i L_i`` for a unit
normal ``nu``, and the block structure matrices

    P_i = [[0, L_i], [L_i^T, 0]]        (size m x m, m = m1 + m2)

that drive the evolution equation together with a skew-symmetric ``P_0`` and
a pointwise symmetric energy-density matrix ``H(zeta)`` with uniform spectral
bounds ``c I <= H <= C I``.  Scalars are real throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotSkew, NotSymmetric


@dataclass(frozen=True)
class MatrixTuple:
    """Tuple of n real m1 x m2 matrices defining a divergence-form operator."""

    L: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.L) < 1:
            raise DimensionMismatch("need at least one matrix in the tuple")
        mats = tuple(np.ascontiguousarray(np.asarray(Li, dtype=float)) for Li in self.L)
        if any(Li.ndim != 2 for Li in mats):
            raise DimensionMismatch("tuple entries must be 2-d matrices")
        m1, m2 = mats[0].shape
        if m1 < 1 or m2 < 1:
            raise DimensionMismatch("matrices need at least one row and column")
        if any(Li.shape != (m1, m2) for Li in mats):
            raise DimensionMismatch("all matrices in the tuple must share one shape")
        object.__setattr__(self, "L", mats)

    @property
    def n(self) -> int:
        return len(self.L)

    @property
    def m1(self) -> int:
        return self.L[0].shape[0]

    @property
    def m2(self) -> int:
        return self.L[0].shape[1]

    def transposed(self) -> "MatrixTuple":
        """The tuple of elementwise transposes, defining the formal-adjoint side."""
        return MatrixTuple(tuple(Li.T.copy() for Li in self.L))


def l_nu(tup: MatrixTuple, nu: Sequence[float]) -> np.ndarray:
    """Conormal matrix ``sum_i nu_i L_i``.

    ``nu`` is normally a unit vector (an outward face normal); the zero vector
    and non-unit vectors are accepted because the map is linear in ``nu``.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (tup.n,):
        raise DimensionMismatch(f"normal vector must have length {tup.n}, got {nu.shape}")
    out = np.zeros((tup.m1, tup.m2))
    for ni, Li in zip(nu, tup.L):
        if ni != 0.0:
            out += ni * Li
    return out


@dataclass(frozen=True)
class StructureMatrices:
    """Block matrices P_i = [[0, L_i], [L_i^T, 0]] plus a skew P_0."""

    tup: MatrixTuple
    P: tuple[np.ndarray, ...]
    P0: np.ndarray

    @property
    def m(self) -> int:
        return self.tup.m1 + self.tup.m2

    @property
    def n(self) -> int:
        return self.tup.n


def build_block_tuple(tup: MatrixTuple, P0: np.ndarray | None = None,
                      skew_tol: float = 0.0) -> StructureMatrices:
    """Assemble the block structure matrices and validate ``P0``.

    ``skew_tol`` is 0 for programmatically constructed matrices; pass a small
    relative tolerance (1e-14) for matrices read from configuration files.
    """
    m = tup.m1 + tup.m2
    if P0 is None:
        P0 = np.zeros((m, m))
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (m, m):
        raise DimensionMismatch(f"P0 must be {m} x {m}, got {P0.shape}")
    skew_defect = np.max(np.abs(P0 + P0.T))
    scale = max(1.0, float(np.max(np.abs(P0))))
    if skew_defect > skew_tol * scale:
        raise NotSkew(f"P0 is not skew-symmetric (max |P0 + P0^T| = {skew_defect:.3e})")
    blocks = []
    for Li in tup.L:
        Pi = np.zeros((m, m))
        Pi[: tup.m1, tup.m1:] = Li
        Pi[tup.m1:, : tup.m1] = Li.T
        blocks.append(Pi)
    return StructureMatrices(tup=tup, P=tuple(blocks), P0=P0)


@dataclass(frozen=True)
class HamiltonianDensitySpec:
    """Pointwise symmetric energy-density matrix with uniform bounds c, C."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    m: int
    c: float
    C: float

    def __post_init__(self):
        if not (0.0 < self.c <= self.C):
            raise DimensionMismatch(f"need 0 < c <= C, got c={self.c}, C={self.C}")

    def __call__(self, zeta) -> np.ndarray:
        H = np.asarray(self.evaluator(np.asarray(zeta, dtype=float)), dtype=float)
        if H.shape != (self.m, self.m):
            raise DimensionMismatch(f"H(zeta) must be {self.m} x {self.m}, got {H.shape}")
        return H


def constant_density(H: np.ndarray, c: float | None = None,
                     C: float | None = None) -> HamiltonianDensitySpec:
    """Density spec for a spatially constant H, with bounds from its spectrum."""
    H = np.asarray(H, dtype=float)
    eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
    if c is None:
        c = float(eigs[0])
    if C is None:
        C = float(eigs[-1])
    return HamiltonianDensitySpec(evaluator=lambda zeta, _H=H.copy(): _H, m=H.shape[0], c=c, C=C)


@dataclass
class ValidationReport:
    """Per-point extreme eigenvalues of H with an overall verdict."""

    min_eigs: np.ndarray
    max_eigs: np.ndarray
    c: float
    C: float
    tol: float
    passed: bool
    messages: list[str] = field(default_factory=list)


def validate_hamiltonian(spec: HamiltonianDensitySpec,
                         sample_points: Sequence) -> ValidationReport:
    """Check symmetry and the spectral bounds c I <= H <= C I at sample points."""
    pts = list(sample_points)
    if not pts:
        raise DimensionMismatch("sample_points must be nonempty")
    tol = 1e-12 * spec.C
    mins = np.empty(len(pts))
    maxs = np.empty(len(pts))
    messages = []
    for k, zeta in enumerate(pts):
        H = spec(zeta)
        hscale = max(1.0, float(np.max(np.abs(H))))
        sym_defect = np.max(np.abs(H - H.T))
        if sym_defect > 1e-12 * hscale:
            raise NotSymmetric(
                f"H at sample {k} is not symmetric (max |H - H^T| = {sym_defect:.3e})")
        eigs = np.linalg.eigvalsh(H)
        mins[k], maxs[k] = eigs[0], eigs[-1]
        if eigs[0] < spec.c - tol:
            messages.append(f"sample {k}: min eigenvalue {eigs[0]:.6g} below c={spec.c:.6g}")
        if eigs[-1] > spec.C + tol:
            messages.append(f"sample {k}: max eigenvalue {eigs[-1]:.6g} above C={spec.C:.6g}")
    return ValidationReport(min_eigs=mins, max_eigs=maxs, c=spec.c, C=spec.C,
                            tol=tol, passed=not messages, messages=messages)

"""Tensor-product box grids and summation-by-parts derivative operators.

The 1-d operator is the classical second-order diagonal-norm pair (D, Hn):
interior rows of D are the centered stencil, the first and last rows are
one-sided, and Hn is the trapezoid quadrature.  The pair satisfies

    Hn D + (Hn D)^T = E = diag(-1, 0, ..., 0, 1)

to machine precision, which is the whole point: lifted to a tensor grid it
turns the integration-by-parts formula for ``L_d = sum_i d_i L_i`` into an
exact matrix identity, with the boundary term collected face by face.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import HamiltonianDensitySpec, MatrixTuple, StructureMatrices
from .errors import DimensionMismatch, InvalidGrid


@dataclass(frozen=True)
class BoxGrid:
    """Axis-aligned box with per-axis node counts and extents."""

    counts: tuple[int, ...]
    extents: tuple[tuple[float, float], ...]

    def __post_init__(self):
        counts = tuple(int(N) for N in self.counts)
        if len(counts) < 1:
            raise InvalidGrid("grid needs at least one axis")
        if any(N < 3 for N in counts):
            raise InvalidGrid(f"every axis needs >= 3 nodes, got {counts}")
        extents = tuple((float(a), float(b)) for a, b in self.extents)
        if len(extents) != len(counts):
            raise InvalidGrid("extents and counts must have the same length")
        if any(b <= a for a, b in extents):
            raise InvalidGrid("each extent needs b > a")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "extents", extents)

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple((b - a) / (N - 1) for (a, b), N in zip(self.extents, self.counts))

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.counts))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        a, b = self.extents[axis]
        return np.linspace(a, b, self.counts[axis])

    def coordinates(self) -> np.ndarray:
        """All node coordinates, shape (num_nodes, n), lexicographic order."""
        axes = [self.axis_coordinates(i) for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="C") for m in mesh], axis=1)

    def node_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.counts, order="C"))


def box_grid(counts: Sequence[int], extents: Sequence | None = None) -> BoxGrid:
    counts = tuple(int(N) for N in counts)
    if extents is None:
        extents = tuple((0.0, 1.0) for _ in counts)
    return BoxGrid(counts=counts, extents=tuple(tuple(e) for e in extents))


@dataclass(frozen=True)
class SbpOperator1D:
    """Second-order SBP pair on N nodes with spacing h."""

    D: np.ndarray
    Hn: np.ndarray          # diagonal quadrature weights, length N
    E: np.ndarray           # boundary weights diag(-1, 0, ..., 0, 1), length N

    @property
    def N(self) -> int:
        return self.Hn.shape[0]


def sbp_1d(N: int, h: float) -> SbpOperator1D:
    """Classical second-order diagonal-norm SBP operator.

    Built from the exact dyadic matrix Q with Q + Q^T = E and D = Hn^{-1} Q,
    so the SBP identity survives in floating point.
    """
    if N < 3:
        raise InvalidGrid(f"SBP operator needs N >= 3 nodes, got {N}")
    if not h > 0:
        raise InvalidGrid(f"spacing must be positive, got {h}")
    Q = np.zeros((N, N))
    idx = np.arange(N - 1)
    Q[idx, idx + 1] = 0.5
    Q[idx + 1, idx] = -0.5
    Q[0, 0] = -0.5
    Q[N - 1, N - 1] = 0.5
    hn = np.full(N, h)
    hn[0] = h / 2
    hn[-1] = h / 2
    D = Q / hn[:, None]
    E = np.zeros(N)
    E[0] = -1.0
    E[-1] = 1.0
    return SbpOperator1D(D=D, Hn=hn, E=E)


def grid_operators(grid: BoxGrid) -> list[SbpOperator1D]:
    return [sbp_1d(N, h) for N, h in zip(grid.counts, grid.spacings)]


@dataclass(frozen=True)
class FieldLayout:
    """Flat indexing of k-component nodal fields: index = node * k + component."""

    grid: BoxGrid
    components: int

    @property
    def size(self) -> int:
        return self.grid.num_nodes * self.components

    def index(self, multi: Sequence[int], comp: int) -> int:
        if not 0 <= comp < self.components:
            raise DimensionMismatch(f"component {comp} out of range")
        return self.grid.node_index(multi) * self.components + comp

    def reshape(self, x: np.ndarray) -> np.ndarray:
        """View a flat field as (num_nodes, components)."""
        return np.asarray(x).reshape(self.grid.num_nodes, self.components)


def lifted_derivative(grid: BoxGrid, axis: int,
                      ops: list[SbpOperator1D] | None = None) -> sp.csr_matrix:
    """The axis derivative as a Kronecker product over all axes (scalar fields)."""
    if ops is None:
        ops = grid_operators(grid)
    factor = sp.identity(1, format="csr")
    for j, N in enumerate(grid.counts):
        block = sp.csr_matrix(ops[j].D) if j == axis else sp.identity(N, format="csr")
        factor = sp.kron(factor, block, format="csr")
    return factor


def volume_weights(grid: BoxGrid, ops: list[SbpOperator1D] | None = None) -> np.ndarray:
    """Tensor quadrature weight per node, length num_nodes."""
    if ops is None:
        ops = grid_operators(grid)
    w = np.ones(1)
    for op in ops:
        w = np.multiply.outer(w, op.Hn).ravel(order="C")
    return w


def quadrature_inner(grid: BoxGrid, f: np.ndarray, g: np.ndarray, k: int) -> float:
    """<f, g> under the tensor SBP quadrature for k-component fields."""
    w = np.repeat(volume_weights(grid), k)
    f = np.asarray(f).ravel()
    g = np.asarray(g).ravel()
    if f.shape != w.shape or g.shape != w.shape:
        raise DimensionMismatch("fields do not conform to the grid layout")
    return float(np.dot(f * w, g))


@dataclass(frozen=True)
class DivergenceOperator:
    """Assembled L_d = sum_i D_i x L_i together with its formal-adjoint side."""

    tup: MatrixTuple
    grid: BoxGrid
    forward: sp.csr_matrix       # m2-fields -> m1-fields
    adjoint_side: sp.csr_matrix  # m1-fields -> m2-fields (L_d^H = sum_i d_i L_i^T)


def assemble_diffop(tup: MatrixTuple, grid: BoxGrid) -> DivergenceOperator:
    """Kronecker-structured sparse assembly of L_d and L_d^H on the grid."""
    if grid.n != tup.n:
        raise DimensionMismatch(f"tuple has n={tup.n} but grid has n={grid.n}")
    ops = grid_operators(grid)
    fwd = None
    adj = None
    for axis in range(grid.n):
        Dax = lifted_derivative(grid, axis, ops)
        term_f = sp.kron(Dax, sp.csr_matrix(tup.L[axis]), format="csr")
        term_a = sp.kron(Dax, sp.csr_matrix(tup.L[axis].T), format="csr")
        fwd = term_f if fwd is None else fwd + term_f
        adj = term_a if adj is None else adj + term_a
    return DivergenceOperator(tup=tup, grid=grid, forward=fwd.tocsr(), adjoint_side=adj.tocsr())


def hamiltonian_block(H: HamiltonianDensitySpec, grid: BoxGrid) -> sp.csr_matrix:
    """Block-diagonal matrix with H(node) per node, nodes in lexicographic order."""
    coords = grid.coordinates()
    blocks = np.empty((grid.num_nodes, H.m, H.m))
    for p in range(grid.num_nodes):
        blocks[p] = H(coords[p])
    return sp.block_diag([blocks[p] for p in range(grid.num_nodes)], format="csr")


def structure_divergence(S: StructureMatrices, grid: BoxGrid) -> sp.csr_matrix:
    """D_P = sum_i D_i x P_i acting on m-fields."""
    if grid.n != S.n:
        raise DimensionMismatch(f"structure has n={S.n} but grid has n={grid.n}")
    ops = grid_operators(grid)
    out = None
    for axis in range(grid.n):
        Dax = lifted_derivative(grid, axis, ops)
        term = sp.kron(Dax, sp.csr_matrix(S.P[axis]), format="csr")
        out = term if out is None else out + term
    return out.tocsr()


def assemble_full_operator(S: StructureMatrices, H: HamiltonianDensitySpec,
                           grid: BoxGrid) -> sp.csr_matrix:
    """Evolution operator L_p = (D_P + I x P0) H_block on m-fields."""
    if H.m != S.m:
        raise DimensionMismatch(f"H has m={H.m} but structure has m={S.m}")
    DP = structure_divergence(S, grid)
    if np.any(S.P0):
        DP = DP + sp.kron(sp.identity(grid.num_nodes, format="csr"),
                          sp.csr_matrix(S.P0), format="csr")
    return (DP @ hamiltonian_block(H, grid)).tocsr()


def green_identity_residual(tup: MatrixTuple, grid: BoxGrid,
                            f: np.ndarray, g: np.ndarray) -> float:
    """|<L_d f, g>_M + <f, L_d^H g>_M - b(f, g)| with the face-node boundary quadrature."""
    from .boundary import boundary_geometry, boundary_pairing  # local import, no cycle

    op = assemble_diffop(tup, grid)
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    lhs = quadrature_inner(grid, op.forward @ f, g, tup.m1) \
        + quadrature_inner(grid, f, op.adjoint_side @ g, tup.m2)
    b = boundary_pairing(tup, boundary_geometry(grid), f, g)
    return abs(lhs - b)

"""Colligation assembly, scattering/impedance transforms and power balances.

A colligation bundles the evolution operator with its boundary input and
output maps on the controlled part of the boundary:

    G = T  pi_L^(Gamma1) (H x)_1          (projected trace of the first block)
    K = T^-T  L_nu-trace^(Gamma1) (H x)_2 (conormal trace of the second block)

together with the energy Gram M_X = 1/2 (quadrature x I) H_block.  The
boundary pairing carries the same factor 1/2 as the energy, so the discrete
balance identities close exactly:

    2 <L_p x, x>_M_X = 2 <G x, K x>_bnd         for clamped states,

and after the scattering transform G' = (G + R K)/sqrt(2),
K' = (G - R K)/sqrt(2) with R^{-1}-weighted input/output norms,

    2 <L_p x, x>_M_X + |K' x|_Y^2 - |G' x|_U^2 = 0.

T and R are pointwise (block-diagonal per face-node entry) multipliers,
which covers every built-in system; a general dense boundary operator is out
of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import bc as bcmod
from .algebra import HamiltonianDensitySpec, StructureMatrices
from .boundary import BoundarySplitting, TraceOperators, assemble_traces
from .errors import (ClampViolated, DimensionMismatch, NotDissipative, NotSPD)
from .sbpgrid import (BoxGrid, hamiltonian_block, structure_divergence,
                      volume_weights)


def _component_selector(num_nodes: int, m: int, lo: int, hi: int) -> sp.csr_matrix:
    """Per-node selection of components [lo, hi) from m-component fields."""
    k = hi - lo
    rows = np.arange(num_nodes * k)
    cols = (np.arange(num_nodes)[:, None] * m + np.arange(lo, hi)[None, :]).ravel()
    return sp.csr_matrix((np.ones(num_nodes * k), (rows, cols)),
                         shape=(num_nodes * k, num_nodes * m))


def state_gram(H: HamiltonianDensitySpec, grid: BoxGrid):
    """M_X = 1/2 W H_block, its per-node blocks, and the raw pieces."""
    w = volume_weights(grid)
    coords = grid.coordinates()
    m = H.m
    blocks = np.empty((grid.num_nodes, m, m))
    for p in range(grid.num_nodes):
        Hp = H(coords[p])
        blocks[p] = 0.5 * w[p] * 0.5 * (Hp + Hp.T)
    M_X = sp.block_diag(list(blocks), format="csr")
    return M_X, blocks, w


def _as_entry_blocks(T, traces: TraceOperators, entries: np.ndarray) -> np.ndarray:
    """Normalize a T/R argument to an array of per-entry m1 x m1 blocks."""
    m1 = traces.tup.m1
    ne = entries.shape[0]
    if T is None:
        out = np.broadcast_to(np.eye(m1), (ne, m1, m1)).copy()
        return out
    if callable(T):
        coords = traces.faces.grid.coordinates()
        out = np.empty((ne, m1, m1))
        for j, e in enumerate(entries):
            out[j] = np.asarray(T(traces.faces.normal[e], coords[traces.faces.node[e]]),
                                dtype=float)
        return out
    T = np.asarray(T, dtype=float)
    if T.shape == (m1, m1):
        return np.broadcast_to(T, (ne, m1, m1)).copy()
    if T.shape == (ne, m1, m1):
        return T.copy()
    raise DimensionMismatch(f"boundary multiplier must be ({m1},{m1}) per entry, got {T.shape}")


@dataclass(frozen=True)
class Colligation:
    """Assembled (G, L_p, K) triple with its Gram matrices and clamp constraint."""

    S: StructureMatrices
    H: HamiltonianDensitySpec
    grid: BoxGrid
    split: BoundarySplitting
    traces: TraceOperators
    Lp: sp.csr_matrix
    M_X: sp.csr_matrix
    mx_blocks: np.ndarray
    H_block: sp.csr_matrix
    G: sp.csr_matrix              # (b, ndof)
    K: sp.csr_matrix              # (b, ndof)
    T_blocks: np.ndarray          # (n_gamma1, m1, m1)
    bnd_weights: np.ndarray       # (n_gamma1,) face-node weights on the controlled part
    form: str                     # "impedance" or "scattering"
    R_blocks: np.ndarray | None
    clamp: sp.csr_matrix          # pruned Gamma0 clamp rows
    J_block: sp.csr_matrix | None = None

    @property
    def ndof(self) -> int:
        return self.grid.num_nodes * self.S.m

    @property
    def b(self) -> int:
        return self.G.shape[0]

    @property
    def boundary_gram(self) -> sp.csr_matrix:
        """Gram of the controlled boundary space, 1/2 w per entry."""
        m1 = self.S.tup.m1
        return sp.diags(np.repeat(0.5 * self.bnd_weights, m1), format="csr")

    @property
    def gram_U(self) -> sp.csr_matrix:
        if self.form == "impedance" or self.R_blocks is None:
            return self.boundary_gram
        m1 = self.S.tup.m1
        rinv = [np.linalg.inv(self.R_blocks[j]) for j in range(self.R_blocks.shape[0])]
        Rinv = sp.block_diag(rinv, format="csr") if rinv else sp.csr_matrix((0, 0))
        return (self.boundary_gram @ Rinv).tocsr()

    @property
    def gram_Y(self) -> sp.csr_matrix:
        return self.gram_U

    def energy(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(x @ (self.M_X @ x))

    def input_norm_sq(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float).ravel()
        if u.size == 0:
            return 0.0
        return float(u @ (self.gram_U @ u))

    def output_norm_sq(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float).ravel()
        if y.size == 0:
            return 0.0
        return float(y @ (self.gram_Y @ y))

    def boundary_power(self, x: np.ndarray) -> float:
        """2 <L_p x, x> minus interior dissipation, expressed via the boundary maps."""
        Gx = self.G @ x
        Kx = self.K @ x
        if self.form == "scattering":
            return self.input_norm_sq(Gx) - self.output_norm_sq(Kx)
        if Gx.size == 0:
            return 0.0
        return 2.0 * float(Gx @ (self.boundary_gram @ Kx))

    def dissipation_rate(self, x: np.ndarray) -> float:
        """2 <J x, x>_M_X, the interior (nonpositive) contribution."""
        if self.J_block is None:
            return 0.0
        x = np.asarray(x, dtype=float).ravel()
        return 2.0 * float((self.J_block @ x) @ (self.M_X @ x))

    def check_clamp(self, x: np.ndarray, tol: float = 1e-8) -> None:
        if self.clamp.shape[0] == 0:
            return
        x = np.asarray(x, dtype=float).ravel()
        resid = np.abs(self.clamp @ x).max() if self.clamp.shape[0] else 0.0
        scale = max(1.0, float(np.abs(x).max(initial=0.0)))
        if resid > tol * scale:
            raise ClampViolated(f"clamp residual {resid:.3e} exceeds {tol:.1e} * scale")


def assemble_colligation(S: StructureMatrices, H: HamiltonianDensitySpec,
                         grid: BoxGrid, split: BoundarySplitting,
                         T=None, traces: TraceOperators | None = None) -> Colligation:
    """Build the impedance-form colligation for a structure, density and splitting."""
    if H.m != S.m:
        raise DimensionMismatch(f"H has m={H.m} but structure needs m={S.m}")
    if traces is None:
        traces = assemble_traces(S.tup, grid, split)
    m1, m2 = S.tup.m1, S.tup.m2
    m = S.m
    nn = grid.num_nodes

    M_X, mx_blocks, _ = state_gram(H, grid)
    Hb = hamiltonian_block(H, grid)
    DP = structure_divergence(S, grid)
    if np.any(S.P0):
        DP = DP + sp.kron(sp.identity(nn, format="csr"), sp.csr_matrix(S.P0), format="csr")
    Lp = (DP @ Hb).tocsr()

    sel1 = _component_selector(nn, m, 0, m1)
    sel2 = _component_selector(nn, m, m1, m)

    g1 = traces.split.gamma1_entries
    g0 = traces.split.gamma0_entries
    T_blocks = _as_entry_blocks(T, traces, g1)
    for j in range(T_blocks.shape[0]):
        s = np.linalg.svd(T_blocks[j], compute_uv=False)
        if s[-1] < 1e-12 * max(1.0, s[0]):
            raise DimensionMismatch(f"boundary transformation at entry {g1[j]} is singular")
    Tinv_t = np.array([np.linalg.inv(T_blocks[j]).T for j in range(T_blocks.shape[0])]) \
        if T_blocks.shape[0] else T_blocks

    pi_g1 = traces.restrict_rows(traces.pi_gamma1, g1)
    lnu_g1 = traces.restrict_rows(traces.lnu_trace, g1)
    T_bd = sp.block_diag(list(T_blocks), format="csr") if T_blocks.shape[0] \
        else sp.csr_matrix((0, 0))
    Ti_bd = sp.block_diag(list(Tinv_t), format="csr") if T_blocks.shape[0] \
        else sp.csr_matrix((0, 0))
    ndof = nn * m
    if T_blocks.shape[0]:
        G = (T_bd @ pi_g1 @ sel1 @ Hb).tocsr()
        K = (Ti_bd @ lnu_g1 @ sel2 @ Hb).tocsr()
    else:
        G = sp.csr_matrix((0, ndof))
        K = sp.csr_matrix((0, ndof))

    clamp_raw = (traces.restrict_rows(traces.pi_gamma0, g0) @ sel1 @ Hb).tocsr() \
        if g0.size else sp.csr_matrix((0, ndof))
    clamp, _ = bcmod.prune_clamp_rows(clamp_raw, m)

    return Colligation(S=S, H=H, grid=grid, split=split, traces=traces,
                       Lp=Lp, M_X=M_X, mx_blocks=mx_blocks, H_block=Hb,
                       G=G, K=K, T_blocks=T_blocks,
                       bnd_weights=traces.faces.weight[g1],
                       form="impedance", R_blocks=None, clamp=clamp)


def scattering_transform(c: Colligation, R=None) -> Colligation:
    """G' = (G + R K)/sqrt(2), K' = (G - R K)/sqrt(2) with R^{-1}-weighted norms."""
    if c.form != "impedance":
        raise DimensionMismatch("scattering transform applies to impedance-form colligations")
    m1 = c.S.tup.m1
    g1 = c.split.gamma1_entries
    R_blocks = _as_entry_blocks(R, c.traces, g1)
    for j in range(R_blocks.shape[0]):
        blk = R_blocks[j]
        if np.max(np.abs(blk - blk.T)) > 1e-12 * max(1.0, np.max(np.abs(blk))):
            raise NotSPD(f"R block at entry {g1[j]} is not symmetric")
        if np.linalg.eigvalsh(0.5 * (blk + blk.T))[0] <= 0:
            raise NotSPD(f"R block at entry {g1[j]} is not positive definite")
    R_bd = sp.block_diag(list(R_blocks), format="csr") if R_blocks.shape[0] \
        else sp.csr_matrix((0, 0))
    s = 1.0 / np.sqrt(2.0)
    if c.b:
        Gs = (s * (c.G + R_bd @ c.K)).tocsr()
        Ks = (s * (c.G - R_bd @ c.K)).tocsr()
    else:
        Gs, Ks = c.G, c.K
    return replace(c, G=Gs, K=Ks, form="scattering", R_blocks=R_blocks)


def power_balance_residual(c: Colligation, x: np.ndarray) -> float:
    """2 <L_p x, x>_M_X + |K x|_Y^2 - |G x|_U^2 for a clamped state."""
    x = np.asarray(x, dtype=float).ravel()
    c.check_clamp(x)
    lead = 2.0 * float((c.Lp @ x) @ (c.M_X @ x))
    return lead + c.output_norm_sq(c.K @ x) - c.input_norm_sq(c.G @ x)


def add_dissipation(c: Colligation, J_spec: Callable[[np.ndarray], np.ndarray]) -> Colligation:
    """Replace L_p by L_p + J for a pointwise dissipative J."""
    coords = c.grid.coordinates()
    m = c.S.m
    blocks = []
    for p in range(c.grid.num_nodes):
        Jp = np.asarray(J_spec(coords[p]), dtype=float)
        if Jp.shape != (m, m):
            raise DimensionMismatch(f"J(zeta) must be {m} x {m}, got {Jp.shape}")
        MJ = c.mx_blocks[p] @ Jp
        sym = 0.5 * (MJ + MJ.T)
        scale = max(1.0, float(np.max(np.abs(MJ))))
        if np.linalg.eigvalsh(sym)[-1] > 1e-12 * scale:
            raise NotDissipative(
                f"symmetric part of M_X J at node {p} has a positive eigenvalue")
        blocks.append(Jp)
    J_block = sp.block_diag(blocks, format="csr")
    prior = c.J_block if c.J_block is not None else sp.csr_matrix(J_block.shape)
    return replace(c, Lp=(c.Lp + J_block).tocsr(), J_block=(prior + J_block).tocsr())


def reduced_generator(c: Colligation, spec: bcmod.BoundaryConditionSpec | None):
    """Constraint system, energy-orthonormal kernel basis and reduced operator.

    The reduced matrix A_red represents Pi_V L_p Pi_V in the orthonormal
    coordinates of V = ker C, so dissipativity and contraction read off its
    symmetric part and its matrix exponential directly.
    """
    cons = bcmod.build_constraints(spec, c.clamp, c.G, c.K, c.S.m)
    Vb = bcmod.kernel_basis(cons, c.mx_blocks)
    A_red = (Vb.T @ (c.M_X @ (c.Lp @ Vb)))
    if sp.issparse(A_red):
        A_red = A_red.tocsr()
    return cons, Vb, A_red


@dataclass(frozen=True)
class GeneratorReport:
    """Discrete dissipativity, full-clamp skewness and semigroup contraction."""

    dissipative: bool
    max_sym_eig: float
    skew_defect_full_clamp: float
    contraction_ok: bool
    expm_norms: tuple[float, ...]


def generator_check(c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
                    dts: tuple[float, ...] = (0.1, 1.0)) -> GeneratorReport:
    """Check the restricted generator: dissipative, skew under full clamp, contractive."""
    _, _, A_red = reduced_generator(c, spec)
    A = A_red.toarray() if sp.issparse(A_red) else np.asarray(A_red)
    sym = 0.5 * (A + A.T)
    scale = max(1.0, float(np.linalg.norm(A, 2))) if A.size else 1.0
    max_sym = float(np.linalg.eigvalsh(sym)[-1]) if A.size else 0.0
    dissipative = max_sym <= 1e-10 * scale

    skew = full_clamp_skew_defect(c)

    norms = []
    for dt in dts:
        if A.size:
            En = sla.expm(dt * A)
            norms.append(float(np.linalg.norm(En, 2)))
        else:
            norms.append(1.0)
    ok = all(nrm <= 1.0 + 1e-10 for nrm in norms)
    return GeneratorReport(dissipative=dissipative, max_sym_eig=max_sym,
                           skew_defect_full_clamp=skew,
                           contraction_ok=ok, expm_norms=tuple(norms))


def full_clamp_skew_defect(c: Colligation) -> float:
    """max |M_X A_d + (M_X A_d)^T| for A_d restricted to the fully clamped space."""
    m = c.S.m
    ndof = c.ndof
    sel1 = _component_selector(c.grid.num_nodes, m, 0, c.S.tup.m1)
    full_rows = (c.traces.pi_full @ sel1 @ c.H_block).tocsr()
    clamp_all, _ = bcmod.prune_clamp_rows(full_rows, m)
    cons = bcmod.ConstraintSystem(C=clamp_all, n_clamp=clamp_all.shape[0], n_input=0,
                                  selector=sp.csr_matrix((clamp_all.shape[0], 0)),
                                  pruned_rows=0, block_size=m)
    Vb = bcmod.kernel_basis(cons, c.mx_blocks)
    A_red = Vb.T @ (c.M_X @ (c.Lp @ Vb))
    A = A_red.toarray() if sp.issparse(A_red) else np.asarray(A_red)
    Y = c.M_X @ Vb
    Y = Y.toarray() if sp.issparse(Y) else Y
    # M_X A_d = Y A_red Y^T; its skew defect is Y (A + A^T) Y^T
    S = A + A.T
    defect = Y @ S @ Y.T
    return float(np.max(np.abs(defect))) if defect.size else 0.0

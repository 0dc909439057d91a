"""Boundary-condition parameterizations and generator conditions.

Boundary conditions on the controlled part of the boundary are given either
in W-form (ker of W1 B1 + W2 B2, checked through the contraction-semigroup
criterion: range inclusion, injectivity of W1 + W2 and positivity of
W1 W2* + W2 W1*) or in V-form (kernel dissipativity plus the same operator
inequality).  All boundary adjoints are taken with respect to the weighted
boundary Gram, which is the discrete stand-in for the L2 surface measure.

The module also assembles the constraint rows that pin a boundary condition
onto the discrete state: clamp rows on the uncontrolled part and
W1 (G x) + W2 (K x) = s rows on the controlled part, together with a basis
of the homogeneous solution space that is orthonormal in the energy inner
product.  Constraint rows that touch a single grid node are recognized and
handled nodewise, which keeps the basis sparse for large grids.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionMismatch, RankDeficiencyWarning


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """Matrices of a W-form or V-form boundary condition on the controlled part."""

    kind: str                     # "W" or "V"
    W1: np.ndarray                # k x b
    W2: np.ndarray                # k x b
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("W", "V"):
            raise DimensionMismatch(f"kind must be 'W' or 'V', got {self.kind!r}")
        W1 = np.atleast_2d(np.asarray(self.W1, dtype=float))
        W2 = np.atleast_2d(np.asarray(self.W2, dtype=float))
        if W1.shape != W2.shape:
            raise DimensionMismatch(f"W1 {W1.shape} and W2 {W2.shape} must match")
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)

    @property
    def k(self) -> int:
        return self.W1.shape[0]

    @property
    def b(self) -> int:
        return self.W1.shape[1]


def clamp_spec(b: int) -> BoundaryConditionSpec:
    """Everything clamped on the controlled part: W1 = I, W2 = 0."""
    return BoundaryConditionSpec(kind="W", W1=np.eye(b), W2=np.zeros((b, b)), name="clamp")


def impedance_spec(M: np.ndarray, kind: str = "V") -> BoundaryConditionSpec:
    """V1 = I, V2 = M; dissipative whenever M is positive in the boundary Gram."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return BoundaryConditionSpec(kind=kind, W1=np.eye(M.shape[0]), W2=M, name="impedance")


def random_weighted_spd(gram: np.ndarray, rng: np.random.Generator,
                        spread: float = 1.0) -> np.ndarray:
    """Random matrix that is self-adjoint and positive w.r.t. the given Gram.

    Plain SPD matrices need not be positive in a weighted inner product, so
    dissipativity tests draw from this construction: G^{-1/2} S G^{1/2} with
    S SPD in the plain sense.
    """
    G = _dense(gram)
    b = G.shape[0]
    A = rng.standard_normal((b, b)) * spread
    S = A @ A.T + 0.1 * np.eye(b)
    ev, U = np.linalg.eigh(0.5 * (G + G.T))
    Gh = U @ np.diag(np.sqrt(ev)) @ U.T
    Ghinv = U @ np.diag(1.0 / np.sqrt(ev)) @ U.T
    return Ghinv @ S @ Gh


def _dense(mat) -> np.ndarray:
    if sp.issparse(mat):
        return mat.toarray()
    return np.asarray(mat, dtype=float)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the W-form generator conditions."""

    range_ok: bool
    injective: bool
    inequality_ok: bool
    min_eig: float
    verdict: bool


def _operator_inequality(W1: np.ndarray, W2: np.ndarray, gram: np.ndarray) -> float:
    """Min eigenvalue of W1 W2* + W2 W1* with Gram-weighted adjoints."""
    if W1.shape[1] == 0:
        return 0.0
    Ginv_W2t = np.linalg.solve(gram, W2.T)
    Ginv_W1t = np.linalg.solve(gram, W1.T)
    S = W1 @ Ginv_W2t + W2 @ Ginv_W1t
    S = 0.5 * (S + S.T)
    return float(np.linalg.eigvalsh(S)[0])


def check_contraction_conditions(spec: BoundaryConditionSpec,
                                 gram=None) -> ConditionReport:
    """Range inclusion, injectivity of W1 + W2 and the operator inequality."""
    W1, W2 = spec.W1, spec.W2
    k, b = W1.shape
    G = np.eye(b) if gram is None else _dense(gram)

    Wsum = W1 + W2
    Wdiff = W1 - W2
    if b == 0:
        return ConditionReport(True, True, True, 0.0, True)
    if np.any(Wsum):
        sol, *_ = np.linalg.lstsq(Wsum, Wdiff, rcond=None)
        resid = Wsum @ sol - Wdiff
        col_scale = np.maximum(1.0, np.linalg.norm(Wdiff, axis=0))
        range_ok = bool(np.all(np.linalg.norm(resid, axis=0) <= 1e-10 * col_scale))
        s = np.linalg.svd(Wsum, compute_uv=False)
        injective = bool(s.size == min(k, b) and k >= b and s[-1] > 1e-12 * s[0])
    else:
        range_ok = not np.any(Wdiff)
        injective = False

    min_eig = _operator_inequality(W1, W2, G)
    scale = max(1.0, float(np.linalg.norm(W1) * np.linalg.norm(W2)))
    inequality_ok = min_eig >= -1e-12 * scale
    verdict = range_ok and injective and inequality_ok
    return ConditionReport(range_ok=range_ok, injective=injective,
                           inequality_ok=inequality_ok, min_eig=min_eig, verdict=verdict)


@dataclass(frozen=True)
class DissipativeRelation:
    """Subspace of boundary pairs (q, p) with a weighted pairing."""

    basis: np.ndarray     # (2b, d) columns spanning the relation
    gram: np.ndarray      # (b, b) boundary Gram

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        gram = _dense(self.gram)
        if basis.ndim != 2 or basis.shape[0] != 2 * gram.shape[0]:
            raise DimensionMismatch("basis must have 2b rows for a b x b Gram")
        if basis.shape[1]:
            s = np.linalg.svd(basis, compute_uv=False)
            if s[-1] <= 1e-12 * s[0]:
                raise DimensionMismatch("relation basis columns must be independent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "gram", gram)

    @property
    def b(self) -> int:
        return self.gram.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class RelationReport:
    dissipative: bool
    maximal: bool
    max_pairing_eig: float


def relation_dissipativity(rel: DissipativeRelation) -> RelationReport:
    """Re<q, p> <= 0 on the relation; maximal iff additionally dim = b."""
    b, d = rel.b, rel.dim
    if d == 0:
        return RelationReport(dissipative=True, maximal=(b == 0), max_pairing_eig=0.0)
    Q = rel.basis[:b, :]
    P = rel.basis[b:, :]
    G = rel.gram
    G2 = Q.T @ G @ Q + P.T @ G @ P
    L = np.linalg.cholesky(0.5 * (G2 + G2.T))
    S = 0.5 * (Q.T @ G @ P + P.T @ G @ Q)
    Son = sla.solve_triangular(L, sla.solve_triangular(L, S, lower=True).T, lower=True)
    max_eig = float(np.linalg.eigvalsh(0.5 * (Son + Son.T))[-1])
    dissipative = max_eig <= 1e-12
    return RelationReport(dissipative=dissipative, maximal=dissipative and d == b,
                          max_pairing_eig=max_eig)


@dataclass(frozen=True)
class KeyTheoremReport:
    """Outcome of the V-form generator conditions."""

    closedness_recorded: bool     # automatic in finite dimensions, recorded not tested
    kernel_dissipative: bool
    inequality_ok: bool
    min_eig: float
    verdict: bool


def check_key_theorem_conditions(spec: BoundaryConditionSpec,
                                 gram=None) -> KeyTheoremReport:
    """Kernel dissipativity of [V1 V2] plus the operator inequality."""
    V1, V2 = spec.W1, spec.W2
    b = spec.b
    G = np.eye(b) if gram is None else _dense(gram)
    if b == 0:
        return KeyTheoremReport(True, True, True, 0.0, True)
    kernel = sla.null_space(np.hstack([V1, V2]))
    rel = DissipativeRelation(basis=kernel, gram=G)
    krep = relation_dissipativity(rel)
    min_eig = _operator_inequality(V1, V2, G)
    scale = max(1.0, float(np.linalg.norm(V1) * np.linalg.norm(V2)))
    inequality_ok = min_eig >= -1e-12 * scale
    verdict = krep.dissipative and inequality_ok
    return KeyTheoremReport(closedness_recorded=True,
                            kernel_dissipative=krep.dissipative,
                            inequality_ok=inequality_ok, min_eig=min_eig,
                            verdict=verdict)


def check_conditions(spec: BoundaryConditionSpec, gram=None) -> bool:
    """Verdict of the form-appropriate generator check."""
    if spec.kind == "W":
        return check_contraction_conditions(spec, gram).verdict
    return check_key_theorem_conditions(spec, gram).verdict


# ---------------------------------------------------------------------------
# constraint assembly


@dataclass
class ConstraintSystem:
    """Constraint rows C x = selector @ u with clamp rows first."""

    C: sp.csr_matrix
    n_clamp: int
    n_input: int
    selector: sp.csr_matrix       # (rows, k): zero on clamp rows, I on input rows
    pruned_rows: int
    block_size: int               # state components per node

    @property
    def num_rows(self) -> int:
        return self.C.shape[0]


def _node_groups(C: sp.csr_matrix, m: int):
    """Map row -> node if every row touches a single node block, else None."""
    C = C.tocsr()
    nodes = np.empty(C.shape[0], dtype=int)
    for i in range(C.shape[0]):
        cols = C.indices[C.indptr[i]:C.indptr[i + 1]]
        cols = cols[C.data[C.indptr[i]:C.indptr[i + 1]] != 0.0]
        if cols.size == 0:
            nodes[i] = -1
            continue
        blocks = cols // m
        if blocks.min() != blocks.max():
            return None
        nodes[i] = blocks[0]
    return nodes


def _prune_block(rows: np.ndarray, tol: float) -> np.ndarray:
    """Indices of an independent row subset via pivoted QR."""
    if rows.shape[0] == 0:
        return np.arange(0)
    _, R, piv = sla.qr(rows.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.arange(0)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def prune_clamp_rows(C_clamp: sp.csr_matrix, m: int,
                     tol: float = 1e-12) -> tuple[sp.csr_matrix, int]:
    """Drop dependent clamp rows (common at corners), warning when any go."""
    if C_clamp.shape[0] == 0:
        return C_clamp.tocsr(), 0
    nodes = _node_groups(C_clamp, m)
    keep: list[int] = []
    if nodes is not None:
        order = np.arange(C_clamp.shape[0])
        for p in np.unique(nodes):
            idx = order[nodes == p]
            block = C_clamp[idx, :].toarray()
            nz = np.flatnonzero(np.abs(block).max(axis=0) > 0)
            kept = _prune_block(block[:, nz], tol) if nz.size else np.arange(0)
            keep.extend(idx[kept])
        keep = sorted(keep)
    else:
        keep = list(_prune_block(C_clamp.toarray(), tol))
    dropped = C_clamp.shape[0] - len(keep)
    if dropped:
        warnings.warn(f"pruned {dropped} dependent clamp rows", RankDeficiencyWarning,
                      stacklevel=2)
    return C_clamp[keep, :].tocsr(), dropped


def build_constraints(spec: BoundaryConditionSpec | None,
                      clamp: sp.csr_matrix,
                      Gmat: sp.csr_matrix,
                      Kmat: sp.csr_matrix,
                      m: int) -> ConstraintSystem:
    """Stack pruned clamp rows with W1 G + W2 K rows on the controlled part."""
    clamp_p, dropped = prune_clamp_rows(clamp, m)
    blocks = [clamp_p]
    n_input = 0
    if spec is not None and spec.b > 0:
        if spec.b != Gmat.shape[0]:
            raise DimensionMismatch(
                f"condition acts on {spec.b} boundary dof but maps have {Gmat.shape[0]}")
        rows = (sp.csr_matrix(spec.W1) @ Gmat + sp.csr_matrix(spec.W2) @ Kmat).tocsr()
        blocks.append(rows)
        n_input = rows.shape[0]
    C = sp.vstack(blocks, format="csr") if len(blocks) > 1 else blocks[0]
    n_clamp = clamp_p.shape[0]
    sel = sp.csr_matrix((C.shape[0], n_input))
    if n_input:
        sel = sp.vstack([sp.csr_matrix((n_clamp, n_input)),
                         sp.identity(n_input, format="csr")], format="csr")
    return ConstraintSystem(C=C, n_clamp=n_clamp, n_input=n_input,
                            selector=sel.tocsr(), pruned_rows=dropped, block_size=m)


def kernel_basis(cons: ConstraintSystem, mx_blocks: np.ndarray) -> sp.csr_matrix:
    """Energy-orthonormal basis of ker C (sparse when rows are node local)."""
    m = cons.block_size
    num_nodes = mx_blocks.shape[0]
    ndof = num_nodes * m
    C = cons.C
    if C.shape[0] == 0:
        cols = []
        for p in range(num_nodes):
            cols.append(_orthonormalize(np.eye(m), mx_blocks[p]))
        return sp.block_diag(cols, format="csr")
    nodes = _node_groups(C, m)
    if nodes is not None:
        per_node: dict[int, list[int]] = {}
        order = np.arange(C.shape[0])
        for i, p in zip(order, nodes):
            per_node.setdefault(int(p), []).append(int(i))
        cols = []
        for p in range(num_nodes):
            if p in per_node:
                block = C[per_node[p], p * m:(p + 1) * m].toarray()
                K = sla.null_space(block)
            else:
                K = np.eye(m)
            cols.append(_orthonormalize(K, mx_blocks[p]))
        return sp.block_diag(cols, format="csr")
    V0 = sla.null_space(C.toarray())
    M_X = sp.block_diag(list(mx_blocks), format="csr")
    G = V0.T @ (M_X @ V0)
    L = np.linalg.cholesky(0.5 * (G + G.T))
    Vb = sla.solve_triangular(L, V0.T, lower=True).T
    return sp.csr_matrix(Vb)


def _orthonormalize(K: np.ndarray, M_node: np.ndarray) -> np.ndarray:
    if K.shape[1] == 0:
        return K
    G = K.T @ M_node @ K
    L = np.linalg.cholesky(0.5 * (G + G.T))
    return sla.solve_triangular(L, K.T, lower=True).T

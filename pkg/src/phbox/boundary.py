"""Discrete boundary geometry and trace machinery.

The boundary of a tensor grid is enumerated as a multiset of face-node
entries: every node of every face appears once per incident face, carrying
that face's outward normal and the tensor quadrature weight of the transverse
axes.  Corner and edge nodes therefore occur several times, each time with a
different normal; this is exactly the form in which the SBP boundary terms
arise, and it keeps the discrete Green identity exact.

On top of the geometry sit the trace operators: the plain restriction
``gamma0``, the pointwise orthogonal projector onto ran L_nu per entry, the
projected trace ``pi_L`` (split into the clamped and controlled parts), and
the conormal trace ``L_nu gamma0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import MatrixTuple, l_nu
from .errors import DimensionMismatch, SplitMismatch
from .sbpgrid import BoxGrid, grid_operators


@dataclass(frozen=True)
class FaceNodeSet:
    """Multiset of boundary face-node entries in deterministic order."""

    grid: BoxGrid
    face_id: np.ndarray    # (B,) int, 2*axis + (0 for -, 1 for +)
    axis: np.ndarray       # (B,) int
    sign: np.ndarray       # (B,) int, -1 or +1
    node: np.ndarray       # (B,) int, flat node index
    weight: np.ndarray     # (B,) float, transverse quadrature weight
    normal: np.ndarray     # (B, n) float, sign * e_axis

    @property
    def num_entries(self) -> int:
        return self.face_id.shape[0]

    def entries_on_faces(self, faces: Sequence[int]) -> np.ndarray:
        return np.flatnonzero(np.isin(self.face_id, np.asarray(list(faces), dtype=int)))


def boundary_geometry(grid: BoxGrid) -> FaceNodeSet:
    """Enumerate the 2n faces of a box grid (face id ascending, nodes lexicographic)."""
    ops = grid_operators(grid)
    face_id, axis_l, sign_l, node_l, weight_l, normal_l = [], [], [], [], [], []
    for axis in range(grid.n):
        for side, sign in enumerate((-1, +1)):
            fid = 2 * axis + side
            fixed = 0 if sign < 0 else grid.counts[axis] - 1
            # lexicographic order over the full multi-index is the C-order
            # product over the transverse axes with the fixed axis inserted
            for multi_t in np.ndindex(*[grid.counts[j] for j in range(grid.n) if j != axis]):
                multi = list(multi_t)
                multi.insert(axis, fixed)
                w = 1.0
                for j in range(grid.n):
                    if j != axis:
                        w *= ops[j].Hn[multi[j]]
                nu = np.zeros(grid.n)
                nu[axis] = float(sign)
                face_id.append(fid)
                axis_l.append(axis)
                sign_l.append(sign)
                node_l.append(grid.node_index(multi))
                weight_l.append(w)
                normal_l.append(nu)
    return FaceNodeSet(
        grid=grid,
        face_id=np.asarray(face_id, dtype=int),
        axis=np.asarray(axis_l, dtype=int),
        sign=np.asarray(sign_l, dtype=int),
        node=np.asarray(node_l, dtype=int),
        weight=np.asarray(weight_l, dtype=float),
        normal=np.asarray(normal_l, dtype=float),
    )


def boundary_pairing(tup: MatrixTuple, faces: FaceNodeSet,
                     f: np.ndarray, g: np.ndarray) -> float:
    """b(f, g) = sum over face nodes of w * <L_nu f(node), g(node)>."""
    grid = faces.grid
    fv = np.asarray(f, dtype=float).reshape(grid.num_nodes, tup.m2)
    gv = np.asarray(g, dtype=float).reshape(grid.num_nodes, tup.m1)
    total = 0.0
    for e in range(faces.num_entries):
        Lnu = l_nu(tup, faces.normal[e])
        p = faces.node[e]
        total += faces.weight[e] * float(np.dot(Lnu @ fv[p], gv[p]))
    return total


@dataclass(frozen=True)
class BoundarySplitting:
    """Assignment of every face-node entry to the clamped (0) or controlled (1) part."""

    labels: np.ndarray        # (B,) int in {0, 1}
    face_granular: bool = True

    @property
    def gamma0_entries(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)

    @property
    def gamma1_entries(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 1)


def face_splitting(faces: FaceNodeSet, gamma1_faces: Sequence[int]) -> BoundarySplitting:
    """Face-granular splitting: the listed faces form the controlled part."""
    gamma1 = set(int(f) for f in gamma1_faces)
    nfaces = 2 * faces.grid.n
    if any(f < 0 or f >= nfaces for f in gamma1):
        raise SplitMismatch(f"face ids must lie in [0, {nfaces}), got {sorted(gamma1)}")
    labels = np.isin(faces.face_id, sorted(gamma1)).astype(int)
    return BoundarySplitting(labels=labels, face_granular=True)


def node_splitting(faces: FaceNodeSet, labels: Sequence[int]) -> BoundarySplitting:
    """Per-entry splitting; outside the face-granular geometric hypotheses."""
    labels = np.asarray(list(labels), dtype=int)
    if labels.shape != (faces.num_entries,):
        raise SplitMismatch("labels must assign every face-node entry")
    if not np.isin(labels, (0, 1)).all():
        raise SplitMismatch("labels must be 0 or 1")
    return BoundarySplitting(labels=labels, face_granular=False)


def _check_split(faces: FaceNodeSet, split: BoundarySplitting) -> None:
    if split.labels.shape != (faces.num_entries,):
        raise SplitMismatch("splitting does not cover the face-node set")
    if not np.isin(split.labels, (0, 1)).all():
        raise SplitMismatch("labels must be 0 or 1")
    if split.face_granular:
        for fid in np.unique(faces.face_id):
            lab = split.labels[faces.face_id == fid]
            if lab.min() != lab.max():
                raise SplitMismatch(f"face {fid} carries mixed labels in face-granular mode")


def pointwise_projector(Lnu_matrix: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column space of L_nu (SVD, tol 1e-12 * sigma_max)."""
    A = np.asarray(Lnu_matrix, dtype=float)
    if A.size == 0 or not np.any(A):
        return np.zeros((A.shape[0], A.shape[0]))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > 1e-12 * s[0]))
    Ur = U[:, :r]
    return Ur @ Ur.T


def kernel_identity_check(tup: MatrixTuple, nu: Sequence[float]) -> bool:
    """ker of the range projector of L_nu equals ker L_nu^T (mutual containment)."""
    from scipy.linalg import null_space

    Lnu = l_nu(tup, nu)
    P = pointwise_projector(Lnu)
    kerP = null_space(P)
    kerLt = null_space(Lnu.T)
    if kerP.shape[1] != kerLt.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(Lnu)))
    for k in kerP.T:
        if np.linalg.norm(Lnu.T @ k) > 1e-10 * scale:
            return False
    for k in kerLt.T:
        if np.linalg.norm(P @ k) > 1e-10:
            return False
    return True


def _gamma0(faces: FaceNodeSet, k: int) -> sp.csr_matrix:
    """Restriction of k-component fields to boundary entries, (B*k) x (num_nodes*k)."""
    B = faces.num_entries
    rows = np.arange(B * k)
    cols = (faces.node[:, None] * k + np.arange(k)[None, :]).ravel()
    data = np.ones(B * k)
    return sp.csr_matrix((data, (rows, cols)),
                         shape=(B * k, faces.grid.num_nodes * k))


def _entry_blockdiag(blocks: Sequence[np.ndarray]) -> sp.csr_matrix:
    if len(blocks) == 0:
        return sp.csr_matrix((0, 0))
    return sp.block_diag(blocks, format="csr")


@dataclass(frozen=True)
class TraceOperators:
    """Assembled trace maps for one tuple, grid and splitting."""

    tup: MatrixTuple
    faces: FaceNodeSet
    split: BoundarySplitting
    gamma0: sp.csr_matrix            # m1-fields -> boundary values, (B*m1) x dof1
    gamma0_m2: sp.csr_matrix         # m2-fields -> boundary values, (B*m2) x dof2
    projectors: np.ndarray           # (B, m1, m1) pointwise projectors
    pi_full: sp.csr_matrix           # pi_L over the whole boundary
    pi_gamma0: sp.csr_matrix         # pi_L^(Gamma0): rows off Gamma0 are zero
    pi_gamma1: sp.csr_matrix         # pi_L^(Gamma1): rows off Gamma1 are zero
    lnu_trace: sp.csr_matrix         # m2-fields -> L_nu(entry) f(node), (B*m1) x dof2
    lnu_blocks: np.ndarray           # (B, m1, m2) per-entry conormal matrices

    @property
    def weights(self) -> np.ndarray:
        return self.faces.weight

    def boundary_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """<u, v> over all face-node entries with quadrature weights."""
        m1 = self.tup.m1
        uu = np.asarray(u).reshape(self.faces.num_entries, m1)
        vv = np.asarray(v).reshape(self.faces.num_entries, m1)
        return float(np.sum(self.faces.weight * np.sum(uu * vv, axis=1)))

    def restrict_rows(self, mat: sp.csr_matrix, entries: np.ndarray) -> sp.csr_matrix:
        """Compress a (B*m1)-row boundary map to the rows of the given entries."""
        m1 = self.tup.m1
        rows = (entries[:, None] * m1 + np.arange(m1)[None, :]).ravel()
        return mat[rows, :].tocsr()


def assemble_traces(tup: MatrixTuple, grid: BoxGrid,
                    split: BoundarySplitting | None = None) -> TraceOperators:
    """Build gamma0, the pointwise projectors, pi_L per part and the conormal trace."""
    faces = boundary_geometry(grid)
    if split is None:
        split = BoundarySplitting(labels=np.zeros(faces.num_entries, dtype=int))
    _check_split(faces, split)

    B = faces.num_entries
    m1, m2 = tup.m1, tup.m2
    g0 = _gamma0(faces, m1)
    g0_m2 = _gamma0(faces, m2)

    projectors = np.empty((B, m1, m1))
    lnu_blocks = np.empty((B, m1, m2))
    for e in range(B):
        Lnu = l_nu(tup, faces.normal[e])
        lnu_blocks[e] = Lnu
        projectors[e] = pointwise_projector(Lnu)

    P_bd = _entry_blockdiag([projectors[e] for e in range(B)])
    pi_full = (P_bd @ g0).tocsr()

    def masked(entries: np.ndarray) -> sp.csr_matrix:
        mask = np.zeros(B)
        mask[entries] = 1.0
        sel = sp.diags(np.repeat(mask, m1))
        return (sel @ pi_full).tocsr()

    lnu_trace = (_entry_blockdiag([lnu_blocks[e] for e in range(B)]) @ g0_m2).tocsr()

    return TraceOperators(
        tup=tup, faces=faces, split=split,
        gamma0=g0, gamma0_m2=g0_m2,
        projectors=projectors,
        pi_full=pi_full,
        pi_gamma0=masked(split.gamma0_entries),
        pi_gamma1=masked(split.gamma1_entries),
        lnu_trace=lnu_trace,
        lnu_blocks=lnu_blocks,
    )


def entry_blockdiag_map(blocks: Mapping[int, np.ndarray] | Sequence[np.ndarray],
                        entries: np.ndarray, m1: int) -> sp.csr_matrix:
    """Block-diagonal boundary multiplier over the given entries (e.g. T or R)."""
    mats = []
    for j, e in enumerate(entries):
        blk = blocks[e] if isinstance(blocks, Mapping) else blocks[j]
        blk = np.asarray(blk, dtype=float)
        if blk.shape != (m1, m1):
            raise DimensionMismatch(f"boundary block at entry {e} must be {m1} x {m1}")
        mats.append(blk)
    if not mats:
        return sp.csr_matrix((0, 0))
    return sp.block_diag(mats, format="csr")

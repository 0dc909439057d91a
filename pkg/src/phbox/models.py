"""Built-in systems: wave, Maxwell, Mindlin plate and the 1-d counterexample.

Constructors return an :class:`ExampleSystem` bundling the matrix tuple, the
skew matrix P0, a builder for the energy density from physical parameters,
and the default boundary multipliers.  Physical fields are pointwise
evaluators with constant defaults; the spectral bounds (c, C) of the density
are probed on the grid nodes where the discrete energy actually lives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import (HamiltonianDensitySpec, MatrixTuple, StructureMatrices,
                      build_block_tuple, l_nu)
from .boundary import BoundarySplitting, boundary_geometry, face_splitting
from .errors import DimensionMismatch
from .sbpgrid import BoxGrid, assemble_diffop, box_grid, quadrature_inner
from .system import Colligation, assemble_colligation

Field = Callable[[np.ndarray], float]


def _as_field(value) -> Field:
    if callable(value):
        return value
    const = float(value)
    return lambda zeta, _c=const: _c


def _as_matrix_field(value, size: int):
    if callable(value):
        return value
    M = np.asarray(value, dtype=float)
    if M.ndim == 0:
        M = float(M) * np.eye(size)
    if M.shape != (size, size):
        raise DimensionMismatch(f"expected a {size} x {size} matrix, got {M.shape}")
    return lambda zeta, _M=M.copy(): _M


@dataclass(frozen=True)
class ExampleSystem:
    """A named system: tuple, structure, density builder and boundary defaults."""

    name: str
    tup: MatrixTuple
    S: StructureMatrices
    density: Callable[[np.ndarray], np.ndarray]    # zeta -> m x m
    boundary_T: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    default_R: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    dissipation: Callable[[np.ndarray], np.ndarray] | None = None
    labels: dict = field(default_factory=dict)
    bounds: tuple[float, float] | None = None

    @property
    def m(self) -> int:
        return self.S.m

    def density_spec(self, grid: BoxGrid, pad: float = 1e-9) -> HamiltonianDensitySpec:
        """Energy density with (c, C) probed at the grid nodes unless pinned."""
        if self.bounds is not None:
            return HamiltonianDensitySpec(evaluator=self.density, m=self.m,
                                          c=self.bounds[0], C=self.bounds[1])
        coords = grid.coordinates()
        lo, hi = np.inf, -np.inf
        for p in range(coords.shape[0]):
            eigs = np.linalg.eigvalsh(np.asarray(self.density(coords[p]), dtype=float))
            lo = min(lo, eigs[0])
            hi = max(hi, eigs[-1])
        return HamiltonianDensitySpec(evaluator=self.density, m=self.m,
                                      c=lo * (1 - pad), C=hi * (1 + pad))


def div_grad_tuple(n: int) -> MatrixTuple:
    """L_i = e_i^T: the divergence/gradient pair in n dimensions."""
    return MatrixTuple(tuple(np.eye(n)[i:i + 1].copy() for i in range(n)))


def rot_tuple() -> MatrixTuple:
    """The three skew matrices building the curl operator."""
    L1 = np.array([[0.0, 0, 0], [0, 0, -1], [0, 1, 0]])
    L2 = np.array([[0.0, 0, 1], [0, 0, 0], [-1, 0, 0]])
    L3 = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
    return MatrixTuple((L1, L2, L3))


def mindlin_tuple() -> MatrixTuple:
    """The 3 x 5 tuple of the Mindlin plate (two spatial dimensions)."""
    L1 = np.array([
        [0.0, 0, 0, 1, 0],
        [1.0, 0, 0, 0, 0],
        [0.0, 0, 1, 0, 0],
    ])
    L2 = np.array([
        [0.0, 0, 0, 0, 1],
        [0.0, 0, 1, 0, 0],
        [0.0, 1, 0, 0, 0],
    ])
    return MatrixTuple((L1, L2))


def mindlin_p0() -> np.ndarray:
    """The 8 x 8 skew matrix coupling shear forces and rotation momenta."""
    P0 = np.zeros((8, 8))
    P0[1, 6] = 1.0
    P0[2, 7] = 1.0
    P0[6, 1] = -1.0
    P0[7, 2] = -1.0
    return P0


def wave_system(n: int = 2, rho=1.0, young=1.0) -> ExampleSystem:
    """Wave equation: state (rho dw/dt, grad w), density diag(1/rho, T)."""
    tup = div_grad_tuple(n)
    S = build_block_tuple(tup)
    rho_f = _as_field(rho)
    young_f = _as_matrix_field(young, n)

    def density(zeta):
        H = np.zeros((n + 1, n + 1))
        H[0, 0] = 1.0 / rho_f(zeta)
        H[1:, 1:] = young_f(zeta)
        return H

    return ExampleSystem(
        name="wave", tup=tup, S=S, density=density,
        labels={"input": "velocity trace", "output": "conormal stress nu.(T grad w)",
                "state": ["rho w_t"] + [f"(grad w)_{i + 1}" for i in range(n)],
                "clamped": "0 = w_t on the uncontrolled boundary"},
    )


def maxwell_system(epsilon=1.0, mu=1.0, g=0.0, r=1.0) -> ExampleSystem:
    """Maxwell: states (D, B), co-states (E, H); conductivity g feeds J."""
    tup = rot_tuple()
    S = build_block_tuple(tup)
    eps_f = _as_field(epsilon)
    mu_f = _as_field(mu)
    g_f = _as_field(g)
    r_f = _as_field(r)

    def density(zeta):
        H = np.zeros((6, 6))
        H[:3, :3] = (1.0 / eps_f(zeta)) * np.eye(3)
        H[3:, 3:] = (1.0 / mu_f(zeta)) * np.eye(3)
        return H

    def dissipation(zeta):
        # J = [[-g, 0], [0, 0]] H: damps the electric co-state only
        J = np.zeros((6, 6))
        J[:3, :3] = -(g_f(zeta) / eps_f(zeta)) * np.eye(3)
        return J

    def boundary_T(normal, zeta):
        # conormal output is weighted by r: K = T^-T L_nu(H x)_2 = r (nu x H-field)
        return (1.0 / r_f(zeta)) * np.eye(3)

    has_g = callable(g) or float(g) != 0.0
    return ExampleSystem(
        name="maxwell", tup=tup, S=S, density=density,
        boundary_T=boundary_T,
        dissipation=dissipation if has_g else None,
        labels={"input": "tangential E with r-weighted nu x H",
                "output": "same, opposite sign convention",
                "state": ["D1", "D2", "D3", "B1", "B2", "B3"],
                "costate": ["E1", "E2", "E3", "H1", "H2", "H3"],
                "clamped": "0 = (nu x E) x nu on the uncontrolled boundary"},
    )


def mindlin_system(rho=1.0, h=1.0, bending=None, shear=None) -> ExampleSystem:
    """Mindlin plate: n = 2, m = 8, with the displayed P0 and boundary rotation."""
    tup = mindlin_tuple()
    S = build_block_tuple(tup, mindlin_p0())
    rho_f = _as_field(rho)
    h_f = _as_field(h)
    Db_f = _as_matrix_field(np.eye(3) if bending is None else bending, 3)
    Ds_f = _as_matrix_field(np.eye(2) if shear is None else shear, 2)

    def density(zeta):
        H = np.zeros((8, 8))
        rh = rho_f(zeta) * h_f(zeta)
        H[0, 0] = 1.0 / rh
        H[1, 1] = 12.0 / (rho_f(zeta) * h_f(zeta) ** 3)
        H[2, 2] = H[1, 1]
        H[3:6, 3:6] = Db_f(zeta)
        H[6:8, 6:8] = Ds_f(zeta)
        return H

    def boundary_T(normal, zeta):
        n1, n2 = float(normal[0]), float(normal[1])
        return np.array([
            [1.0, 0.0, 0.0],
            [0.0, n1, n2],
            [0.0, -n2, n1],
        ])

    return ExampleSystem(
        name="mindlin", tup=tup, S=S, density=density,
        boundary_T=boundary_T,
        labels={"input": "(Q_nu, M_nunu, M_nueta)", "output": "(v, w_nu, w_eta)",
                "state_alpha": ["rho h v", "rho h^3/12 w1", "rho h^3/12 w2",
                                "kappa11", "kappa22", "kappa12",
                                "gamma13", "gamma23"],
                "costate_e": ["v", "w1", "w2", "M11", "M22", "M12", "Q1", "Q2"],
                "clamped": "0 = (v, w_nu, w_eta) on the uncontrolled boundary"},
    )


def appendix_tuple() -> MatrixTuple:
    """The 1-d two-field operator written as a symmetric 2 x 2 tuple."""
    return MatrixTuple((np.array([[0.0, 1.0], [1.0, 0.0]]),))


def appendix_counterexample() -> ExampleSystem:
    """1-d system on (0,1) whose restricted boundary maps mislead naive adjoints.

    As a colligation this is the scalar tuple L = (1): the block structure
    reproduces the two-field operator, and the boundary maps come out as the
    traces (f1(0), f1(1)) and (-f2(0), f2(1)).
    """
    tup = div_grad_tuple(1)
    S = build_block_tuple(tup)
    return ExampleSystem(
        name="appendix1d", tup=tup, S=S,
        density=lambda zeta: np.eye(2),
        labels={"B1": "(f1(1), f1(0))", "B2": "(f2(1), -f2(0))",
                "F1": "-f1(0)", "F2": "f2(0)"},
    )


_BUILDERS = {
    "wave": wave_system,
    "maxwell": maxwell_system,
    "mindlin": mindlin_system,
    "appendix1d": appendix_counterexample,
}


def by_name(name: str, **params) -> ExampleSystem:
    if name not in _BUILDERS:
        raise DimensionMismatch(f"unknown system {name!r}; choose from {sorted(_BUILDERS)}")
    return _BUILDERS[name](**params)


def colligation_for(example: ExampleSystem, grid: BoxGrid,
                    gamma1_faces: Sequence[int] = (),
                    split: BoundarySplitting | None = None) -> Colligation:
    """Assemble the impedance-form colligation of a built-in system."""
    if split is None:
        split = face_splitting(boundary_geometry(grid), gamma1_faces)
    H = example.density_spec(grid)
    return assemble_colligation(example.S, H, grid, split, T=example.boundary_T)


# ---------------------------------------------------------------------------
# regression checks for the 1-d counterexample


@dataclass(frozen=True)
class AppendixRegression:
    """Outcomes of the boundary-triple and adjoint-space checks at one resolution."""

    green_residual: float
    f_rank: int
    max_angle_correct: float       # computed adjoint space vs swapped-condition space
    max_angle_naive: float         # computed adjoint space vs naive zero-trace guess


def _trace_matrix(grid: BoxGrid) -> np.ndarray:
    """Rows pick (f1(0), f1(1), f2(0), f2(1)) out of a flat 2-component field."""
    last = grid.counts[0] - 1
    tau = np.zeros((4, grid.num_nodes * 2))
    tau[0, 0 * 2 + 0] = 1.0
    tau[1, last * 2 + 0] = 1.0
    tau[2, 0 * 2 + 1] = 1.0
    tau[3, last * 2 + 1] = 1.0
    return tau


def appendix_regression(N: int = 33, num_samples: int = 20,
                        seed: int = 0) -> AppendixRegression:
    """Boundary-triple identity and adjoint-domain detection for the 1-d system.

    The operator is restricted to f1(1) = 0, f2(0) = f2(1).  The boundary
    pairing, assembled from the face-node machinery, determines the trace
    conditions of the adjoint domain; they must match f1(0) = f1(1) together
    with f2(0) = 0 (the swapped conditions), not the naive guess f1(0) = 0,
    f2(0) = 0 read off the restricted boundary maps.
    """
    grid = box_grid([N])
    tup = appendix_tuple()
    op = assemble_diffop(tup, grid)
    faces = boundary_geometry(grid)
    rng = np.random.default_rng(seed)

    # (a) Green identity written with the B1/B2 maps of the system
    last = N - 1
    green = 0.0
    for _ in range(num_samples):
        f = rng.standard_normal(2 * N)
        g = rng.standard_normal(2 * N)
        lhs = quadrature_inner(grid, op.forward @ f, g, 2) \
            + quadrature_inner(grid, f, op.forward @ g, 2)
        fb = f.reshape(N, 2)
        gb = g.reshape(N, 2)
        B1f = np.array([fb[last, 0], fb[0, 0]])
        B2f = np.array([fb[last, 1], -fb[0, 1]])
        B1g = np.array([gb[last, 0], gb[0, 0]])
        B2g = np.array([gb[last, 1], -gb[0, 1]])
        green = max(green, abs(lhs - (B1f @ B2g + B2f @ B1g)))

    # boundary pairing in trace coordinates, from the assembled geometry
    Sb = np.zeros((4, 4))
    for e in range(faces.num_entries):
        Lnu = l_nu(tup, faces.normal[e])
        s_end = 0 if faces.node[e] == 0 else 1
        for i in range(2):
            for j in range(2):
                Sb[2 * j + s_end, 2 * i + s_end] += faces.weight[e] * Lnu[i, j]

    # restricted domain: f1(1) = 0, f2(0) = f2(1); traces are (alpha, 0, beta, beta)
    dom_traces = np.array([[1.0, 0.0, 0.0, 0.0],
                           [0.0, 0.0, 1.0, 1.0]])
    rows_comp = dom_traces @ Sb                       # conditions on adjoint traces
    K_comp = sla.null_space(rows_comp)

    K_correct = sla.null_space(np.array([[1.0, -1.0, 0.0, 0.0],
                                         [0.0, 0.0, 1.0, 0.0]]))
    K_naive = sla.null_space(np.array([[1.0, 0.0, 0.0, 0.0],
                                       [0.0, 0.0, 1.0, 0.0]]))
    ang_correct = sla.subspace_angles(K_comp, K_correct)
    ang_naive = sla.subspace_angles(K_comp, K_naive)

    # surjectivity of the restricted boundary maps F1 = -f1(0), F2 = f2(0)
    tau = _trace_matrix(grid)
    F = np.vstack([-tau[0], tau[2]])
    f_rank = int(np.linalg.matrix_rank(F))

    return AppendixRegression(
        green_residual=green,
        f_rank=f_rank,
        max_angle_correct=float(np.max(ang_correct)) if ang_correct.size else 0.0,
        max_angle_naive=float(np.max(ang_naive)) if ang_naive.size else 0.0,
    )

"""Implicit-midpoint (Cayley) time integration with exact energy accounting.

Homogeneous runs evolve in reduced coordinates: the state is expanded in an
energy-orthonormal basis of the constrained subspace V, where the midpoint
step is the Cayley transform of the reduced operator.  A dissipative reduced
operator maps to a contraction, so energy decay is a per-step matrix fact,
and a skew one maps to an orthogonal matrix, so conservation holds to
solver roundoff over arbitrarily many steps.

Forced runs keep the full state and impose C x_mid = s(u_mid) through a
Lagrange multiplier.  One step satisfies, by pure algebra of the scheme,

    E(x_+) - E(x_-) = dt (|u|_U^2 - |y|_Y^2 + 2 <mu, s> + dissipation),

and the recorded balance residual is the defect of exactly this identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import bc as bcmod
from .errors import ClampProjectionWarning, SaddleSingular, SolveFailure
from .system import Colligation, reduced_generator


def energy(c: Colligation, x: np.ndarray) -> float:
    """Hamiltonian E(x) = x^T M_X x (the 1/2-weighted quadrature of <H x, x>)."""
    return c.energy(x)


class HomogeneousStepper:
    """Midpoint evolution in the energy-orthonormal coordinates of V = ker C."""

    def __init__(self, c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
                 dt: float):
        self.c = c
        self.dt = float(dt)
        self.cons, self.Vb, A_red = reduced_generator(c, spec)
        self.A = A_red.tocsc() if sp.issparse(A_red) else np.asarray(A_red)
        self.dim = self.Vb.shape[1]
        self._factor(self.dt)

    def _factor(self, dt: float) -> None:
        self.dt = float(dt)
        if sp.issparse(self.A):
            lhs = (sp.identity(self.dim, format="csc") - (dt / 2.0) * self.A).tocsc()
            try:
                lu = spla.splu(lhs)
            except RuntimeError as exc:  # pragma: no cover - defensive
                raise SolveFailure(f"midpoint system is singular: {exc}") from exc
            self._solve = lu.solve
        else:
            import scipy.linalg as sla
            lhs = np.eye(self.dim) - (dt / 2.0) * self.A
            try:
                lu, piv = sla.lu_factor(lhs)
            except ValueError as exc:  # pragma: no cover - defensive
                raise SolveFailure(f"midpoint system is singular: {exc}") from exc
            self._solve = lambda b, lu=lu, piv=piv: sla.lu_solve((lu, piv), b)

    def reduce(self, x: np.ndarray, warn: bool = True) -> np.ndarray:
        """Energy-orthogonal projection onto V, in reduced coordinates."""
        x = np.asarray(x, dtype=float).ravel()
        y = self.Vb.T @ (self.c.M_X @ x)
        if warn:
            back = self.Vb @ y
            scale = max(1.0, float(np.linalg.norm(x)))
            if np.linalg.norm(back - x) > 1e-9 * scale:
                warnings.warn("initial state violated the constraint; "
                              "projected onto the solution space",
                              ClampProjectionWarning, stacklevel=3)
        return y

    def lift(self, y: np.ndarray) -> np.ndarray:
        return self.Vb @ y

    def step_reduced(self, y: np.ndarray) -> np.ndarray:
        rhs = y + (self.dt / 2.0) * (self.A @ y)
        out = self._solve(rhs)
        if not np.all(np.isfinite(out)):
            raise SolveFailure("midpoint solve produced non-finite values")
        return out


def step_homogeneous(c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
                     x_n: np.ndarray, dt: float) -> np.ndarray:
    """One midpoint step of the constrained homogeneous system."""
    stepper = HomogeneousStepper(c, spec, dt)
    y = stepper.reduce(x_n, warn=False)
    return stepper.lift(stepper.step_reduced(y))


class ForcedStepper:
    """Saddle-point midpoint step with boundary input injected through C x_mid = s."""

    def __init__(self, c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
                 dt: float):
        self.c = c
        self.dt = float(dt)
        self.cons = bcmod.build_constraints(spec, c.clamp, c.G, c.K, c.S.m)
        C = self.cons.C
        n, nc = c.ndof, C.shape[0]
        ML = (c.M_X @ c.Lp).tocsr()
        if nc:
            kkt = sp.bmat([[(2.0 / dt) * c.M_X - ML, -C.T],
                           [C, None]], format="csc")
        else:
            kkt = ((2.0 / dt) * c.M_X - ML).tocsc()
        try:
            self._lu = spla.splu(kkt)
        except RuntimeError as exc:
            raise SaddleSingular(f"KKT matrix is singular: {exc}") from exc
        self.n = n
        self.nc = nc

    def rhs_target(self, u_mid: np.ndarray) -> np.ndarray:
        """Constraint right-hand side for a commanded input u_mid."""
        s = self.cons.selector @ np.asarray(u_mid, dtype=float).ravel() \
            if self.cons.n_input else np.zeros(self.nc)
        return s

    def step(self, x_n: np.ndarray, u_mid: np.ndarray):
        """Returns (x_next, y_mid, mu, s) for one forced midpoint step."""
        x_n = np.asarray(x_n, dtype=float).ravel()
        s = self.rhs_target(u_mid)
        rhs = np.concatenate([(2.0 / self.dt) * (self.c.M_X @ x_n), s])
        sol = self._lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise SaddleSingular("KKT solve produced non-finite values")
        z = sol[:self.n]
        mu = sol[self.n:]
        x_next = 2.0 * z - x_n
        y_mid = self.c.K @ z
        return x_next, y_mid, mu, s, z


def step_forced(c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
                x_n: np.ndarray, u_mid: np.ndarray, dt: float):
    """One forced midpoint step; returns (x_next, y_mid, mu)."""
    stepper = ForcedStepper(c, spec, dt)
    x_next, y_mid, mu, _, _ = stepper.step(x_n, u_mid)
    return x_next, y_mid, mu


@dataclass
class SimulationConfig:
    """Time grid, initial state and input signal of one run."""

    dt: float
    t_final: float
    x0: np.ndarray
    mode: str = "homogeneous-projection"   # or "forced-saddle"
    input_signal: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0 and self.dt <= self.t_final):
            raise ValueError("need 0 < dt <= t_final")
        if self.mode not in ("homogeneous-projection", "forced-saddle"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "homogeneous-projection" and self.input_signal is not None:
            raise ValueError("homogeneous mode requires a zero input signal")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class SimulationResult:
    """Per-step energy and balance records plus the final state."""

    t: np.ndarray
    E: np.ndarray
    u_norm_sq: np.ndarray
    y_norm_sq: np.ndarray
    multiplier_work: np.ndarray
    balance_residual: np.ndarray
    final_state: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def num_steps(self) -> int:
        return self.t.shape[0] - 1

    def max_balance_residual(self) -> float:
        return float(np.max(np.abs(self.balance_residual[1:]))) if self.num_steps else 0.0

    def energy_monotone(self, tol: float) -> bool:
        dE = np.diff(self.E)
        return bool(np.all(dE <= tol))


def simulate(c: Colligation, spec: bcmod.BoundaryConditionSpec | None,
             cfg: SimulationConfig) -> SimulationResult:
    """Run the configured number of midpoint steps, recording the balance."""
    steps = cfg.num_steps
    t = np.arange(steps + 1) * cfg.dt
    E = np.zeros(steps + 1)
    u_sq = np.zeros(steps + 1)
    y_sq = np.zeros(steps + 1)
    mult = np.zeros(steps + 1)
    resid = np.zeros(steps + 1)

    if cfg.mode == "homogeneous-projection":
        stepper = HomogeneousStepper(c, spec, cfg.dt)
        y = stepper.reduce(np.asarray(cfg.x0, dtype=float).ravel())
        E[0] = float(y @ y)
        for k in range(1, steps + 1):
            y_next = stepper.step_reduced(y)
            z = stepper.lift(0.5 * (y + y_next))
            E[k] = float(y_next @ y_next)
            u_sq[k] = c.input_norm_sq(c.G @ z)
            y_sq[k] = c.output_norm_sq(c.K @ z)
            diss = c.dissipation_rate(z)
            resid[k] = (E[k] - E[k - 1]) - cfg.dt * (c.boundary_power(z) + diss)
            y = y_next
        final = stepper.lift(y)
    else:
        stepper = ForcedStepper(c, spec, cfg.dt)
        x = np.asarray(cfg.x0, dtype=float).ravel().copy()
        E[0] = c.energy(x)
        signal = cfg.input_signal or (lambda _t: np.zeros(stepper.cons.n_input))
        for k in range(1, steps + 1):
            t_mid = (k - 0.5) * cfg.dt
            u_mid = np.asarray(signal(t_mid), dtype=float).ravel()
            x_next, y_mid, mu, s, z = stepper.step(x, u_mid)
            E[k] = c.energy(x_next)
            u_sq[k] = c.input_norm_sq(c.G @ z)
            y_sq[k] = c.output_norm_sq(y_mid)
            mult[k] = 2.0 * float(mu @ s)
            diss = c.dissipation_rate(z)
            bpow = c.boundary_power(z)
            resid[k] = (E[k] - E[k - 1]) - cfg.dt * (bpow + mult[k] + diss)
            x = x_next
        final = x

    if np.any(E < -1e-12 * max(1.0, E[0])):
        raise SolveFailure("energy became negative; the state Gram is corrupted")
    return SimulationResult(t=t, E=E, u_norm_sq=u_sq, y_norm_sq=y_sq,
                            multiplier_work=mult, balance_residual=resid,
                            final_state=final,
                            meta={"mode": cfg.mode, "dt": cfg.dt, "steps": steps})

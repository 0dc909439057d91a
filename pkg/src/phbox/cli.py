"""Configuration-driven command line: validate, simulate, selftest.

Configurations are JSON with a strict schema (unknown keys are rejected).
Exit codes: 0 all checks pass / run completed, 1 a condition or run-time
invariant failed, 2 malformed configuration or usage.  CSV traces are
serialized with 17 significant digits so doubles round-trip and reruns with
the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import bc as bcmod
from . import models
from .algebra import build_block_tuple, constant_density, MatrixTuple, validate_hamiltonian
from .boundary import boundary_geometry, face_splitting, node_splitting
from .errors import PhboxError, SchemaError
from .gelfand import (FiniteQuasiTriple, dual_norm, duality_map,
                      transform_triple, von_neumann_check)
from .sbpgrid import box_grid, green_identity_residual, sbp_1d
from .system import assemble_colligation, scattering_transform, power_balance_residual
from .timestepper import SimulationConfig, simulate

CSV_HEADER = "step,t,E,u_norm_sq,y_norm_sq,multiplier_work,balance_residual"


# ---------------------------------------------------------------------------
# config schema


def _require_keys(obj: dict, where: str, required: set, optional: set) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    keys = set(obj)
    unknown = keys - required - optional
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")


def _number(obj, where: str, positive: bool = False) -> float:
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise SchemaError(f"{where}: expected a number")
    v = float(obj)
    if positive and not v > 0:
        raise SchemaError(f"{where}: must be positive")
    return v


def _matrix(obj, where: str) -> np.ndarray:
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: expected a nested array of numbers") from exc
    if M.ndim != 2:
        raise SchemaError(f"{where}: expected a 2-d matrix")
    return M


@dataclass
class RunConfig:
    """Validated run configuration."""

    system: str
    params: dict
    grid_counts: list
    grid_extents: list | None
    gamma1_faces: list
    node_labels: list | None
    bc_kind: str
    bc_data: dict
    dt: float | None
    t_final: float | None
    input_kind: str
    input_data: dict
    init_kind: str
    init_data: dict
    csv_path: str | None
    seed: int
    custom: dict | None


_SYSTEM_PARAMS = {
    "wave": {"n", "rho", "young"},
    "maxwell": {"epsilon", "mu", "g", "r"},
    "mindlin": {"rho", "h", "bending", "shear"},
    "appendix1d": set(),
    "custom": set(),
}


def parse_config(raw: dict) -> RunConfig:
    _require_keys(raw, "config", {"system", "grid"},
                  {"parameters", "splitting", "boundary_condition", "time",
                   "input", "initial_state", "output", "seed", "custom"})
    system = raw["system"]
    if system not in _SYSTEM_PARAMS:
        raise SchemaError(f"config.system: unknown system {system!r}")

    params = raw.get("parameters", {})
    _require_keys(params, "config.parameters", set(), _SYSTEM_PARAMS[system])
    for key, val in params.items():
        if key == "n":
            if not isinstance(val, int) or val < 1:
                raise SchemaError("config.parameters.n: expected a positive integer")
        elif key in ("bending", "shear", "young") and isinstance(val, list):
            _matrix(val, f"config.parameters.{key}")
        else:
            _number(val, f"config.parameters.{key}")

    grid = raw["grid"]
    _require_keys(grid, "config.grid", {"counts"}, {"extents"})
    counts = grid["counts"]
    if (not isinstance(counts, list) or not counts
            or any(not isinstance(N, int) or N < 3 for N in counts)):
        raise SchemaError("config.grid.counts: expected a list of integers >= 3")
    extents = grid.get("extents")
    if extents is not None:
        if (not isinstance(extents, list) or len(extents) != len(counts)
                or any(not isinstance(e, list) or len(e) != 2 for e in extents)):
            raise SchemaError("config.grid.extents: expected one [a, b] pair per axis")
        extents = [[_number(e[0], "extent"), _number(e[1], "extent")] for e in extents]
        if any(b <= a for a, b in extents):
            raise SchemaError("config.grid.extents: each pair needs b > a")

    splitting = raw.get("splitting", {})
    _require_keys(splitting, "config.splitting", set(), {"gamma1_faces", "labels"})
    gamma1 = splitting.get("gamma1_faces", [])
    if not isinstance(gamma1, list) or any(not isinstance(f, int) for f in gamma1):
        raise SchemaError("config.splitting.gamma1_faces: expected a list of face ids")
    labels = splitting.get("labels")
    if labels is not None and (not isinstance(labels, list)
                               or any(l not in (0, 1) for l in labels)):
        raise SchemaError("config.splitting.labels: expected a list of 0/1 labels")

    bcfg = raw.get("boundary_condition", {"kind": "clamp"})
    _require_keys(bcfg, "config.boundary_condition", {"kind"},
                  {"scale", "W1", "W2", "V1", "V2"})
    kind = bcfg["kind"]
    if kind not in ("clamp", "impedance-M", "scattering-R", "W", "V"):
        raise SchemaError(f"config.boundary_condition.kind: unknown kind {kind!r}")
    bc_data = {}
    if kind in ("impedance-M", "scattering-R"):
        bc_data["scale"] = _number(bcfg.get("scale", 1.0),
                                   "config.boundary_condition.scale", positive=True)
    if kind in ("W", "V"):
        a_key, b_key = ("W1", "W2") if kind == "W" else ("V1", "V2")
        if a_key not in bcfg or b_key not in bcfg:
            raise SchemaError(f"config.boundary_condition: {kind}-form needs "
                              f"{a_key} and {b_key}")
        bc_data["W1"] = _matrix(bcfg[a_key], f"config.boundary_condition.{a_key}")
        bc_data["W2"] = _matrix(bcfg[b_key], f"config.boundary_condition.{b_key}")

    tcfg = raw.get("time")
    dt = t_final = None
    if tcfg is not None:
        _require_keys(tcfg, "config.time", {"dt", "t_final"}, set())
        dt = _number(tcfg["dt"], "config.time.dt", positive=True)
        t_final = _number(tcfg["t_final"], "config.time.t_final", positive=True)
        if dt > t_final:
            raise SchemaError("config.time: dt must not exceed t_final")

    icfg = raw.get("input", {"kind": "zero"})
    _require_keys(icfg, "config.input", {"kind"},
                  {"face", "amplitude", "frequency", "t_on", "t_off",
                   "times", "values"})
    input_kind = icfg["kind"]
    input_data: dict = {}
    if input_kind == "sine":
        input_data = {
            "face": icfg.get("face"),
            "amplitude": _number(icfg.get("amplitude", 1.0), "config.input.amplitude"),
            "frequency": _number(icfg.get("frequency", 1.0), "config.input.frequency"),
            "t_on": _number(icfg.get("t_on", 0.0), "config.input.t_on"),
            "t_off": _number(icfg.get("t_off", np.inf), "config.input.t_off"),
        }
        if input_data["face"] is not None and not isinstance(input_data["face"], int):
            raise SchemaError("config.input.face: expected a face id")
    elif input_kind == "table":
        times = icfg.get("times")
        values = icfg.get("values")
        if not isinstance(times, list) or not isinstance(values, list) \
                or len(times) != len(values):
            raise SchemaError("config.input.table: times and values must align")
        input_data = {"times": [float(t) for t in times],
                      "values": _matrix(values, "config.input.values")}
    elif input_kind != "zero":
        raise SchemaError(f"config.input.kind: unknown kind {input_kind!r}")

    init = raw.get("initial_state", {"kind": "zero"})
    _require_keys(init, "config.initial_state", {"kind"}, {"scale"})
    init_kind = init["kind"]
    if init_kind not in ("zero", "random"):
        raise SchemaError(f"config.initial_state.kind: unknown kind {init_kind!r}")
    init_data = {"scale": _number(init.get("scale", 1.0), "config.initial_state.scale")}

    out = raw.get("output", {})
    _require_keys(out, "config.output", set(), {"csv"})
    csv_path = out.get("csv")
    if csv_path is not None and not isinstance(csv_path, str):
        raise SchemaError("config.output.csv: expected a path string")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("config.seed: expected an integer")

    custom = raw.get("custom")
    if system == "custom":
        if custom is None:
            raise SchemaError("config.custom: required for system 'custom'")
        _require_keys(custom, "config.custom", {"L", "H"}, {"P0", "c", "C"})
    elif custom is not None:
        raise SchemaError("config.custom: only allowed for system 'custom'")

    return RunConfig(system=system, params=params, grid_counts=counts,
                     grid_extents=extents, gamma1_faces=gamma1, node_labels=labels,
                     bc_kind=kind, bc_data=bc_data, dt=dt, t_final=t_final,
                     input_kind=input_kind, input_data=input_data,
                     init_kind=init_kind, init_data=init_data,
                     csv_path=csv_path, seed=seed, custom=custom)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# building blocks from a config


def _example_from(cfg: RunConfig) -> models.ExampleSystem:
    if cfg.system == "custom":
        mats = [np.asarray(Li, dtype=float) for Li in cfg.custom["L"]]
        tup = MatrixTuple(tuple(mats))
        P0 = np.asarray(cfg.custom.get("P0"), dtype=float) if "P0" in cfg.custom else None
        S = build_block_tuple(tup, P0, skew_tol=1e-14)
        Hmat = _matrix(cfg.custom["H"], "config.custom.H")
        density = constant_density(Hmat, cfg.custom.get("c"), cfg.custom.get("C"))
        return models.ExampleSystem(name="custom", tup=tup, S=S,
                                    density=density.evaluator,
                                    bounds=(density.c, density.C))
    return models.by_name(cfg.system, **cfg.params)


def _build(cfg: RunConfig):
    """Colligation + boundary condition spec + scattering flag from a config."""
    grid = box_grid(cfg.grid_counts, cfg.grid_extents)
    example = _example_from(cfg)
    faces = boundary_geometry(grid)
    if cfg.node_labels is not None:
        split = node_splitting(faces, cfg.node_labels)
    else:
        split = face_splitting(faces, cfg.gamma1_faces)
    H = example.density_spec(grid)
    col = assemble_colligation(example.S, H, grid, split, T=example.boundary_T)
    if example.dissipation is not None:
        from .system import add_dissipation
        col = add_dissipation(col, example.dissipation)

    b = col.b
    if cfg.bc_kind == "clamp":
        spec = bcmod.clamp_spec(b)
    elif cfg.bc_kind == "impedance-M":
        spec = bcmod.impedance_spec(cfg.bc_data["scale"] * np.eye(b))
    elif cfg.bc_kind == "scattering-R":
        col = scattering_transform(col, cfg.bc_data["scale"] *
                                   np.eye(col.S.tup.m1))
        spec = bcmod.clamp_spec(b)   # u = G'x: homogeneous form is the G'-clamp
    else:
        spec = bcmod.BoundaryConditionSpec(kind=cfg.bc_kind,
                                           W1=cfg.bc_data["W1"],
                                           W2=cfg.bc_data["W2"])
    return grid, example, col, spec


def _input_signal(cfg: RunConfig, col, spec):
    """Waveform as a map t -> u vector over the controlled constraint rows."""
    k = spec.k if col.b else 0
    if cfg.input_kind == "zero":
        return None
    if cfg.input_kind == "sine":
        d = cfg.input_data
        g1 = col.split.gamma1_entries
        m1 = col.S.tup.m1
        mask = np.ones(k)
        if d["face"] is not None:
            fid = col.traces.faces.face_id[g1]
            mask = np.repeat((fid == d["face"]).astype(float), m1)
            if mask.shape[0] != k:   # general W rows: apply uniformly
                mask = np.ones(k)
        amp, freq, t_on, t_off = d["amplitude"], d["frequency"], d["t_on"], d["t_off"]

        def signal(t):
            if t < t_on or t >= t_off:
                return np.zeros(k)
            return amp * np.sin(2.0 * np.pi * freq * (t - t_on)) * mask

        return signal
    d = cfg.input_data
    times = np.asarray(d["times"])
    values = np.asarray(d["values"], dtype=float)
    if values.shape[1] != k:
        raise SchemaError(f"config.input.values: expected {k} columns, got {values.shape[1]}")

    def signal(t):
        return np.array([np.interp(t, times, values[:, j]) for j in range(k)])

    return signal


# ---------------------------------------------------------------------------
# commands


def cmd_validate(config_path: str, seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except SchemaError as exc:
        print(f"schema error: {exc}")
        return 2
    try:
        grid, example, col, spec = _build(cfg)
    except SchemaError as exc:
        print(f"schema error: {exc}")
        return 2
    except PhboxError as exc:
        print(f"check assembly: FAIL ({exc})")
        return 1

    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    ok = True

    block_defect = max(float(np.max(np.abs(Pi - Pi.T))) for Pi in example.S.P)
    good = block_defect == 0.0
    ok &= good
    print(f"check block-structure: {'PASS' if good else 'FAIL'} "
          f"(max |P_i - P_i^T| = {block_defect:.3e})")

    defect = float(np.max(np.abs(example.S.P0 + example.S.P0.T)))
    good = defect <= 1e-14 * max(1.0, float(np.max(np.abs(example.S.P0))))
    ok &= good
    print(f"check p0-skew: {'PASS' if good else 'FAIL'} (max |P0 + P0^T| = {defect:.3e})")

    H = example.density_spec(grid)
    pts = grid.coordinates()
    sample = pts[rng.choice(pts.shape[0], size=min(64, pts.shape[0]), replace=False)]
    rep = validate_hamiltonian(H, list(sample))
    ok &= rep.passed
    print(f"check hamiltonian-bounds: {'PASS' if rep.passed else 'FAIL'} "
          f"(min eig {rep.min_eigs.min():.6g}, max eig {rep.max_eigs.max():.6g}, "
          f"bounds [{rep.c:.6g}, {rep.C:.6g}])")

    gram = col.boundary_gram
    if spec.kind == "W":
        crep = bcmod.check_contraction_conditions(spec, gram)
        ok &= crep.verdict
        print(f"check contraction-conditions: {'PASS' if crep.verdict else 'FAIL'} "
              f"(range {crep.range_ok}, injective {crep.injective}, "
              f"inequality min eig {crep.min_eig:.3e})")
    else:
        krep = bcmod.check_key_theorem_conditions(spec, gram)
        ok &= krep.verdict
        print(f"check key-theorem-conditions: {'PASS' if krep.verdict else 'FAIL'} "
              f"(kernel dissipative {krep.kernel_dissipative}, "
              f"inequality min eig {krep.min_eig:.3e})")

    if col.b:
        import scipy.linalg as sla
        kernel = sla.null_space(np.hstack([spec.W1, spec.W2]))
        rel = bcmod.DissipativeRelation(basis=kernel, gram=gram.toarray())
        rrep = bcmod.relation_dissipativity(rel)
        print(f"check relation: dissipative={rrep.dissipative} maximal={rrep.maximal} "
              f"(max pairing eig {rrep.max_pairing_eig:.3e})")
        ok &= rrep.dissipative

    print(f"validate: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _format_row(step: int, t: float, cols) -> str:
    return f"{step}," + ",".join(f"{v:.17g}" for v in (t, *cols))


def cmd_simulate(config_path: str, out_path: str | None = None,
                 seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path)
        if cfg.dt is None:
            raise SchemaError("config.time: required for simulate")
    except SchemaError as exc:
        print(f"schema error: {exc}")
        return 2
    try:
        grid, example, col, spec = _build(cfg)
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        if cfg.init_kind == "zero":
            x0 = np.zeros(col.ndof)
        else:
            x0 = cfg.init_data["scale"] * rng.standard_normal(col.ndof)
        signal = _input_signal(cfg, col, spec)
        mode = "forced-saddle" if signal is not None else "homogeneous-projection"
        sim = SimulationConfig(dt=cfg.dt, t_final=cfg.t_final, x0=x0,
                               mode=mode, input_signal=signal)
        res = simulate(col, spec, sim)
    except SchemaError as exc:
        print(f"schema error: {exc}")
        return 2
    except PhboxError as exc:
        print(f"simulate: FAIL ({exc})")
        return 1

    path = out_path or cfg.csv_path
    if path:
        lines = [CSV_HEADER]
        for k in range(res.t.shape[0]):
            lines.append(_format_row(k, res.t[k],
                                     (res.E[k], res.u_norm_sq[k], res.y_norm_sq[k],
                                      res.multiplier_work[k], res.balance_residual[k])))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    e0, eN = res.E[0], res.E[-1]
    max_res = res.max_balance_residual()
    scale = max(1.0, float(np.max(res.E)))
    monotone = res.energy_monotone(1e-12 * max(1.0, e0))
    print(f"simulate: steps={res.num_steps} E0={e0:.12g} EN={eN:.12g}")
    print(f"simulate: max balance residual {max_res:.3e} (relative {max_res / scale:.3e})")
    print(f"simulate: energy monotone non-increasing: {monotone}")
    if max_res > 1e-9 * scale:
        print("simulate: FAIL (balance residual above tolerance)")
        return 1
    print("simulate: PASS")
    return 0


def _selftest_checks(seed: int, corrupt: str | None):
    """Yield (name, callable) pairs; each callable returns (ok, detail)."""
    rng = np.random.default_rng(seed)

    def sbp_identity():
        worst = 0.0
        for N, h in ((9, 0.125), (17, 1 / 16), (33, np.pi / 32)):
            op = sbp_1d(N, h)
            D = op.D.copy()
            if corrupt == "sbp-identity":
                D[0, 0] += 1e-3
            Q = op.Hn[:, None] * D
            E = np.zeros((N, N))
            E[0, 0], E[-1, -1] = -1.0, 1.0
            worst = max(worst, float(np.max(np.abs(Q + Q.T - E))))
        return worst <= 1e-15, f"max defect {worst:.3e}"

    def green_identity():
        cases = [
            (models.div_grad_tuple(1), box_grid([17])),
            (models.div_grad_tuple(2), box_grid([9, 9])),
            (models.rot_tuple(), box_grid([5, 5, 5])),
            (models.mindlin_tuple(), box_grid([7, 7])),
            (models.appendix_tuple(), box_grid([17])),
        ]
        worst = 0.0
        for tup, grid in cases:
            for _ in range(10):
                f = rng.standard_normal(grid.num_nodes * tup.m2)
                g = rng.standard_normal(grid.num_nodes * tup.m1)
                scale = max(1.0, float(np.linalg.norm(f) * np.linalg.norm(g)))
                worst = max(worst, green_identity_residual(tup, grid, f, g) / scale)
        return worst <= 1e-12, f"max relative residual {worst:.3e}"

    def boundary_projectors():
        from .boundary import kernel_identity_check, pointwise_projector
        ok = True
        worst = 0.0
        for _ in range(20):
            A = rng.standard_normal((4, 3))
            P = pointwise_projector(A)
            worst = max(worst, float(np.max(np.abs(P @ P - P))),
                        float(np.max(np.abs(P - P.T))))
            ok &= kernel_identity_check(MatrixTuple((A,)), [1.0])
        return ok and worst <= 1e-13, f"projector defect {worst:.3e}"

    def gelfand_oracle():
        worst = 0.0
        for _ in range(10):
            N = int(rng.integers(2, 9))
            A = rng.standard_normal((N, N))
            t = FiniteQuasiTriple(N=N, Dplus_basis=np.eye(N), Gplus=A @ A.T + 0.5 * np.eye(N))
            g = rng.standard_normal(N)
            dn = dual_norm(t, g)
            w = duality_map(t, g)
            worst = max(worst, abs(t.plus_norm(w) - dn) / max(1.0, dn))
            T = rng.standard_normal((N, N)) + 2 * np.eye(N)
            t2 = transform_triple(t, T)
            worst = max(worst, abs(dual_norm(t2, g) - dual_norm(t, T.T @ g))
                        / max(1.0, dn))
            rep = von_neumann_check(rng.standard_normal((N + 2, N)))
            if not rep.passed:
                return False, "von Neumann check failed"
        return worst <= 1e-9, f"max defect {worst:.3e}"

    def appendix_regression():
        rep = models.appendix_regression(33, num_samples=10, seed=seed)
        ok = (rep.green_residual <= 1e-13 and rep.f_rank == 2
              and rep.max_angle_correct <= 1e-10 and rep.max_angle_naive >= 0.1)
        return ok, (f"green {rep.green_residual:.3e}, angles "
                    f"{rep.max_angle_correct:.3e}/{rep.max_angle_naive:.3f}")

    def conservation():
        ex = models.wave_system(2)
        grid = box_grid([9, 9])
        col = models.colligation_for(ex, grid)
        import warnings as _warnings
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            x0 = rng.standard_normal(col.ndof)
            res = simulate(col, None, SimulationConfig(dt=0.01, t_final=2.0, x0=x0))
        drift = abs(res.E[-1] - res.E[0]) / max(res.E[0], 1e-30)
        return drift <= 1e-10, f"relative drift {drift:.3e}"

    def scattering_balance():
        ex = models.wave_system(2)
        grid = box_grid([9, 9])
        col = models.colligation_for(ex, grid, gamma1_faces=[1])
        cs = scattering_transform(col)
        from .bc import ConstraintSystem, kernel_basis
        import scipy.sparse as sp
        cons = ConstraintSystem(C=cs.clamp, n_clamp=cs.clamp.shape[0], n_input=0,
                                selector=sp.csr_matrix((cs.clamp.shape[0], 0)),
                                pruned_rows=0, block_size=cs.S.m)
        Vb = kernel_basis(cons, cs.mx_blocks)
        worst = 0.0
        for _ in range(20):
            x = Vb @ rng.standard_normal(Vb.shape[1])
            scale = max(1.0, cs.input_norm_sq(cs.G @ x) + cs.output_norm_sq(cs.K @ x))
            worst = max(worst, abs(power_balance_residual(cs, x)) / scale)
        return worst <= 1e-11, f"max relative residual {worst:.3e}"

    return [
        ("sbp-identity", sbp_identity),
        ("green-identity", green_identity),
        ("boundary-projectors", boundary_projectors),
        ("gelfand-oracle", gelfand_oracle),
        ("appendix-regression", appendix_regression),
        ("conservation", conservation),
        ("scattering-balance", scattering_balance),
    ]


def cmd_selftest(seed: int = 0, corrupt: str | None = None) -> int:
    t0 = time.monotonic()
    for name, check in _selftest_checks(seed, corrupt):
        ok, detail = check()
        print(f"selftest {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        if not ok:
            print(f"selftest: FAIL ({name})")
            return 1
    print(f"selftest: PASS ({time.monotonic() - t0:.1f} s)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="phbox",
                                     description="port-Hamiltonian box simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "simulate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
    p = sub.add_parser("selftest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--corrupt", default=None, help=argparse.SUPPRESS)

    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 2

    def run() -> int:
        if args.command == "validate":
            return cmd_validate(args.config, seed=args.seed)
        if args.command == "simulate":
            return cmd_simulate(args.config, out_path=args.out, seed=args.seed)
        return cmd_selftest(seed=args.seed, corrupt=args.corrupt)

    if args.threads is not None:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=args.threads):
            return run()
    return run()


if __name__ == "__main__":
    sys.exit(main())

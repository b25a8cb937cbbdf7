"""Configuration-driven command line interface.

Verbs:
    sbm run <config.yaml>          one declarative run per invocation
    sbm validate <suite> [--full]  table1 | table2 | table3 | appendix_a | all
    sbm smooth <mask> --zeta Z     voxel labels -> domain parameter
    sbm info <file.sbmf>           header summary

Exit codes: 0 success, 2 config error, 3 solver failure, 4 validation
assertion failure.  Every numeric default a run fills in is echoed to the
log so no unstated parameter remains invisible.
"""

from __future__ import annotations

import argparse
import difflib
import logging
import math
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("sbm")


class ConfigError(ValueError):
    pass


def _check_keys(mapping: dict, allowed: set, where: str):
    for key in mapping:
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"unknown key {key!r} in {where}{extra}")


def _build_grid(spec: dict):
    from .grid import Grid

    _check_keys(spec, {"dims", "spacing", "origin", "coord_system"}, "grid")
    try:
        return Grid(
            dims=tuple(spec["dims"]),
            spacing=tuple(spec["spacing"]),
            origin=tuple(spec.get("origin", [0.0] * len(spec["dims"]))),
            coord_system=spec.get("coord_system", "cartesian"),
        )
    except KeyError as exc:
        raise ConfigError(f"grid section is missing {exc}") from exc


def _build_domain(spec: dict, grid):
    """Domain parameter from an analytic shape or a voxel file."""
    from .domain import DomainParameter, reinitialize_distance, tanh_from_distance
    from .fileio import load_voxels
    from .grid import ScalarField

    allowed = {
        "shape", "zeta", "axis", "level", "center", "radius", "normal_side",
        "mask", "inside_labels", "reinit_steps", "band_width", "ripple_amplitude",
        "ripple_period",
    }
    _check_keys(spec, allowed, "domain")
    zeta = float(spec.get("zeta", 1.0))
    shape = spec.get("shape", "file")

    if shape == "file":
        mask = load_voxels(spec["mask"])
        log.info("domain: smoothing voxel mask %s with zeta=%g", spec["mask"], zeta)
        dist = reinitialize_distance(
            mask,
            steps=int(spec.get("reinit_steps", 200)),
            band_width=spec.get("band_width"),
            inside_labels=spec.get("inside_labels"),
        )
        return tanh_from_distance(dist, zeta)

    meshes = grid.meshes()
    if shape == "substrate":
        axis = int(spec.get("axis", 1))
        level = float(spec.get("level", 0.0))
        side = 1.0 if spec.get("normal_side", "above") == "above" else -1.0
        psi = 0.5 * (1.0 + np.tanh(side * (meshes[axis] - level) / zeta))
    elif shape == "rippled_substrate":
        axis = int(spec.get("axis", 1))
        level = float(spec.get("level", 0.0))
        amp = float(spec.get("ripple_amplitude", 5.0))
        per = float(spec.get("ripple_period", 40.0))
        surface = level + amp * np.sin(2.0 * math.pi * meshes[0] / per)
        psi = 0.5 * (1.0 + np.tanh((meshes[axis] - surface) / zeta))
    elif shape == "sphere":
        center = spec.get("center", [0.0] * grid.ndim)
        radius = float(spec["radius"])
        r = np.sqrt(sum((m - c) ** 2 for m, c in zip(meshes, center)))
        psi = 0.5 * (1.0 + np.tanh((radius - r) / zeta))
    elif shape == "cylinder_rz":
        radius = float(spec["radius"])
        psi = 0.5 * (1.0 + np.tanh((radius - meshes[0]) / zeta))
    elif shape == "slab":
        axis = int(spec.get("axis", 0))
        lo, hi = spec["level"]
        x = meshes[axis]
        psi = 0.5 * (np.tanh((x - lo) / zeta) - np.tanh((x - hi) / zeta))
    else:
        raise ConfigError(f"unknown domain shape {shape!r}")
    return DomainParameter.from_psi(ScalarField(grid, psi), zeta)


def _emit_outputs(outputs, fields: dict, rows=None):
    from .fileio import export_field
    from .validation import rows_to_csv

    for out in outputs or []:
        _check_keys(out, {"kind", "path", "format", "name", "level"}, "outputs[]")
        kind = out.get("kind", "field")
        path = out["path"]
        if kind == "field":
            name = out.get("name", next(iter(fields)))
            export_field(fields[name], path, out.get("format", "sbmf"), name=name)
            log.info("wrote %s (%s)", path, out.get("format", "sbmf"))
        elif kind == "contour":
            from .contact_angle import extract_level_contour

            name = out.get("name", next(iter(fields)))
            f = fields[name]
            pts = extract_level_contour(np.asarray(f.values, dtype=float), f.grid,
                                        float(out.get("level", 0.5)))
            with open(path, "w") as fh:
                fh.write("x,y\n")
                for p in pts:
                    fh.write(f"{p[0]!r},{p[1]!r}\n")
            log.info("wrote contour %s (%d points)", path, len(pts))
        elif kind == "report":
            rows_to_csv(rows or [], path)
            log.info("wrote report %s", path)
        else:
            raise ConfigError(f"unknown output kind {kind!r}")


TOP_KEYS = {"solver", "grid", "domain", "physics", "run", "outputs", "materials"}


def run_config(path) -> int:
    """Execute one declarative run; returns the process exit code."""
    import yaml

    from .grid import ScalarField

    try:
        cfg = yaml.safe_load(Path(path).read_text())
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a mapping")
        _check_keys(cfg, TOP_KEYS, "config")
        solver = cfg.get("solver")
        if solver is None:
            raise ConfigError("config needs a 'solver' entry")
        handler = _SOLVERS.get(solver)
        if handler is None:
            hint = difflib.get_close_matches(solver, _SOLVERS, n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"unknown solver {solver!r}{extra}")
        phys = cfg.get("physics", {})
        run = cfg.get("run", {})
        _check_keys(run, {"dt", "t_end", "max_steps", "upsilon", "tol", "max_sweeps",
                          "profile", "seed_value"}, "run")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except (OSError, yaml.YAMLError) as exc:
        log.error("cannot read config: %s", exc)
        return 2

    try:
        return handler(cfg, phys, run)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except Exception as exc:  # solver failure: partial artifacts stay on disk
        log.error("solver failure: %s", exc)
        return 3


def _solver_diffusion(cfg, phys, run):
    from .diffusion import BoundarySpec, DiffusionProblem, PreparedDiffusionStep
    from .grid import ScalarField

    _check_keys(phys, {"diffusivity", "source", "sink", "b_n", "b_d",
                       "w_n_above_split", "split_axis", "split"}, "physics")
    grid = _build_grid(cfg["grid"])
    dp = _build_domain(cfg["domain"], grid)
    w_n = np.ones(grid.dims)
    if "split" in phys:
        axis = int(phys.get("split_axis", 0))
        w_n = (grid.meshes()[axis] > float(phys["split"])).astype(float)
    bc = BoundarySpec(
        b_n=ScalarField.full(grid, float(phys.get("b_n", 0.0))),
        b_d=ScalarField.full(grid, float(phys.get("b_d", 0.0))),
        w_n=ScalarField(grid, w_n),
        w_d=ScalarField(grid, 1.0 - w_n),
    )
    ups = float(run.get("upsilon", 1e-7))
    prob = DiffusionProblem(
        dp=dp,
        diffusivity=ScalarField.full(grid, float(phys.get("diffusivity", 1.0))),
        source=ScalarField.full(grid, float(phys.get("source", 0.0))),
        bc=bc,
        upsilon=ups,
        sink=ScalarField.full(grid, float(phys.get("sink", 0.0))),
    )
    stepper = PreparedDiffusionStep(prob)
    dt = float(run.get("dt") or stepper.stable_dt())
    log.info("defaults: upsilon=%g dt=%g", ups, dt)
    c0 = np.full(grid.dims, float(run.get("seed_value", 0.0)))
    c, info = stepper.march(c0, t_end=float(run.get("t_end", 1.0)), dt=dt)
    log.info("marched %d steps to t=%g", info["steps"], info["t"])
    _emit_outputs(cfg.get("outputs"), {"concentration": ScalarField(grid, c)})
    return 0


def _solver_helmholtz(cfg, phys, run):
    from .grid import ScalarField
    from .surface_bulk import SurfaceBulkProblem, solve_helmholtz_adlr

    _check_keys(phys, {"d_bulk", "d_surf", "kappa", "omega", "pin_axis",
                       "pin_low", "pin_high"}, "physics")
    grid = _build_grid(cfg["grid"])
    dp = _build_domain(cfg["domain"], grid)
    axis = int(phys.get("pin_axis", grid.ndim - 1))
    idx = np.indices(grid.dims)[axis]
    pins = []
    if phys.get("pin_low") is not None:
        pins.append((idx == 0, float(phys["pin_low"])))
    if phys.get("pin_high") is not None:
        pins.append((idx == grid.dims[axis] - 1, float(phys["pin_high"])))
    ups = float(run.get("upsilon", 1e-16))
    tol = float(run.get("tol", 1e-5))
    prob = SurfaceBulkProblem(
        dp=dp, d_bulk=float(phys.get("d_bulk", 1.0)), d_surf=float(phys.get("d_surf", 0.0)),
        kappa=float(phys.get("kappa", 0.0)), omega=float(phys.get("omega", 0.0)),
        upsilon=ups, pins=pins,
    )
    log.info("defaults: upsilon=%g tol=%g", ups, tol)
    c, info = solve_helmholtz_adlr(prob, tol=tol, max_sweeps=int(run.get("max_sweeps", 20000)))
    log.info("ADLR: %d sweeps, residual %.3e, converged=%s",
             info["sweeps"], info["residual"], info["converged"])
    from .grid import ComplexScalarField

    _emit_outputs(cfg.get("outputs"), {"concentration": ComplexScalarField(grid, c.values)})
    return 0 if info["converged"] else 3


def _solver_phase_field(model):
    def handler(cfg, phys, run):
        from .contact_angle import PhaseFieldState, PreparedPhaseField
        from .grid import ScalarField

        _check_keys(phys, {"theta_deg", "theta_left_deg", "theta_right_deg", "split",
                           "well_height", "delta_phi", "mobility", "droplet_center",
                           "droplet_radius", "phase_split"}, "physics")
        grid = _build_grid(cfg["grid"])
        dp = _build_domain(cfg["domain"], grid)
        if "delta_phi" in phys:
            dphi = float(phys["delta_phi"])
            w = math.sqrt(2.0) / dphi
            eps = math.sqrt(1.0 / w)
        else:
            w = float(phys.get("well_height", 1.0))
            eps = math.sqrt(1.0 / w)
            dphi = eps * math.sqrt(2.0 / w)
        meshes = grid.meshes()
        if "droplet_center" in phys:
            center = phys["droplet_center"]
            radius = float(phys["droplet_radius"])
            r = np.sqrt(sum((m - c) ** 2 for m, c in zip(meshes, center)))
            phi0 = 0.5 * (1.0 - np.tanh((r - radius) / dphi))
        else:
            split = float(phys.get("phase_split", 0.5 * grid.dims[0] * grid.spacing[0]))
            phi0 = 0.5 * (1.0 - np.tanh((meshes[0] - split) / dphi))
        cos_field = None
        theta = math.radians(float(phys.get("theta_deg", 90.0)))
        if "theta_left_deg" in phys:
            split = float(phys.get("split", 0.5 * grid.dims[0] * grid.spacing[0]))
            cos = np.where(
                meshes[0] < split,
                math.cos(math.radians(float(phys["theta_left_deg"]))),
                math.cos(math.radians(float(phys["theta_right_deg"]))),
            )
            cos_field = ScalarField(grid, cos)
        ups = float(run.get("upsilon", 1e-7))
        state = PhaseFieldState(
            phi=ScalarField(grid, phi0), dp=dp, well_height=w, grad_coef=eps,
            mobility=float(phys.get("mobility", 1.0)), theta=theta,
            cos_theta_field=cos_field, upsilon=ups,
        )
        prep = PreparedPhaseField(state)
        dt = float(run.get("dt") or prep.stable_dt(model))
        t_end = float(run.get("t_end", 100.0))
        max_steps = int(run.get("max_steps") or math.ceil(t_end / dt))
        log.info("defaults: upsilon=%g dt=%g steps=%d (delta_phi=%g w=%g eps=%g)",
                 ups, dt, max_steps, dphi, w, eps)
        phi = np.ascontiguousarray(phi0)
        step = prep.ac_step if model == "ac" else prep.ch_step
        for s in range(max_steps):
            phi = step(phi, dt)
        if not np.all(np.isfinite(phi)):
            raise FloatingPointError("phase-field run produced NaN")
        _emit_outputs(cfg.get("outputs"), {"phi": ScalarField(grid, phi),
                                           "psi": dp.psi})
        return 0

    return handler


def _solver_elasticity(cfg, phys, run):
    from .elasticity import (ElasticProblem, compute_stress, lame_from_engineering,
                             mean_stress, solve_displacements_adlr)
    from .grid import ScalarField

    _check_keys(phys, {}, "physics")
    mats = cfg.get("materials")
    if not mats:
        raise ConfigError("elasticity runs need a 'materials' list (E, nu, rho per phase)")
    parsed = []
    for i, m in enumerate(mats):
        _check_keys(m, {"young", "poisson", "rho"}, f"materials[{i}]")
        parsed.append(lame_from_engineering(float(m["young"]), float(m["poisson"]),
                                            float(m.get("rho", 0.0))))
    grid = _build_grid(cfg["grid"])
    dp1 = _build_domain(cfg["domain"], grid)
    ups = float(run.get("upsilon", 1e-16))
    tol = float(run.get("tol", 1e-6))
    prob = ElasticProblem(dp1=dp1, dp2=None, mat1=parsed[0],
                          mat2=parsed[1] if len(parsed) > 1 else None, upsilon=ups)
    log.info("defaults: upsilon=%g tol=%g", ups, tol)
    u, info = solve_displacements_adlr(prob, tol=tol,
                                       max_sweeps=int(run.get("max_sweeps", 2000)))
    log.info("ADLR: %d sweeps, residual %.3e", info["sweeps"], info["residual"])
    sigma = compute_stress(u, prob)
    sm = mean_stress(sigma)
    for name, m in (("phase1", dp1.psi.values >= 0.5),):
        if m.any():
            vals = sm.values[m]
            log.info("mean stress over %s: min %.4g max %.4g mean %.4g",
                     name, vals.min(), vals.max(), vals.mean())
    _emit_outputs(cfg.get("outputs"), {"mean_stress": sm})
    return 0 if info["converged"] else 3


def _solver_smooth_voxels(cfg, phys, run):
    from .domain import interface_metrics

    _check_keys(phys, {}, "physics")
    dp = _build_domain(cfg["domain"], None)
    metrics = interface_metrics(dp)
    log.info("interface metrics: %s", metrics)
    _emit_outputs(cfg.get("outputs"), {"psi": dp.psi})
    return 0


def _solver_suite(cfg, phys, run):
    from .validation import any_failed, rows_to_csv, run_all, summarize

    profile = run.get("profile", "acceptance")
    suites = run_all(profile=profile)
    rows = [r for rs in suites.values() for r in rs]
    for out in cfg.get("outputs", []):
        if out.get("kind") == "report":
            rows_to_csv(rows, out["path"])
    print(summarize(rows))
    return 4 if any_failed(rows) else 0


_SOLVERS = {
    "diffusion": _solver_diffusion,
    "surface_bulk": _solver_helmholtz,  # steady coupled solve
    "helmholtz": _solver_helmholtz,
    "allen_cahn": _solver_phase_field("ac"),
    "cahn_hilliard": _solver_phase_field("ch"),
    "elasticity": _solver_elasticity,
    "smooth_voxels": _solver_smooth_voxels,
    "suite": _solver_suite,
}


def _cmd_validate(args) -> int:
    from .validation import (any_failed, rows_to_csv, run_appendix_a_suite,
                             run_table1_suite, run_table2_suite, run_table3_suite,
                             summarize)

    table = args.suite
    runs = {
        "table1": run_table1_suite,
        "table2": run_table2_suite,
        "appendix_a": run_appendix_a_suite,
        "table3": run_table3_suite,
    }
    rows = []
    names = list(runs) if table == "all" else [table]
    for name in names:
        if name == "table3" and args.full:
            from .validation import TABLE3_AC

            rows += run_table3_suite(zetas=list(TABLE3_AC),
                                     dphis=[1.0607, 1.4142, 1.7678, 2.1213, 2.8284])
        else:
            rows += runs[name]()
    if args.out:
        rows_to_csv(rows, args.out)
    print(summarize(rows))
    return 4 if any_failed(rows) else 0


def _cmd_smooth(args) -> int:
    from .domain import interface_metrics, reinitialize_distance, tanh_from_distance
    from .fileio import load_voxels, write_sbmf

    mask = load_voxels(args.mask)
    labels = [int(t) for t in args.inside_labels.split(",")] if args.inside_labels else None
    dist = reinitialize_distance(mask, steps=args.reinit_steps, inside_labels=labels)
    dp = tanh_from_distance(dist, args.zeta)
    write_sbmf(args.out, dp.psi)
    metrics = interface_metrics(dp)
    print(f"wrote {args.out}")
    print(f"max|grad psi| = {metrics['max_grad']:.6g}, area estimate = {metrics['area_estimate']:.6g}, "
          f"measured width = {metrics['width']:.4g} ({metrics['width_over_zeta']:.3g} zeta)")
    return 0


def _cmd_info(args) -> int:
    from .fileio import read_sbmf

    grid, values, kind = read_sbmf(args.file)
    print(f"SBMF {kind} field: dims {grid.dims}, spacing {grid.spacing}, "
          f"origin {grid.origin}, {grid.coord_system}")
    if kind == "complex128":
        print(f"re range [{values.real.min():.6g}, {values.real.max():.6g}], "
              f"im range [{values.imag.min():.6g}, {values.imag.max():.6g}]")
    else:
        print(f"value range [{values.min():.6g}, {values.max():.6g}]")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="sbm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a declarative run config")
    p_run.add_argument("config")

    p_val = sub.add_parser("validate", help="run a validation suite")
    p_val.add_argument("suite", choices=["table1", "table2", "table3", "appendix_a", "all"])
    p_val.add_argument("--full", action="store_true", help="full Table 3 grid (nightly)")
    p_val.add_argument("--out", help="write the report CSV here")

    p_sm = sub.add_parser("smooth", help="voxel mask to domain parameter")
    p_sm.add_argument("mask")
    p_sm.add_argument("--zeta", type=float, required=True)
    p_sm.add_argument("--out", default="psi.sbmf")
    p_sm.add_argument("--inside-labels", default=None)
    p_sm.add_argument("--reinit-steps", type=int, default=200)

    p_info = sub.add_parser("info", help="describe an SBMF file")
    p_info.add_argument("file")

    args = parser.parse_args(argv)
    if args.cmd == "run":
        return run_config(args.config)
    if args.cmd == "validate":
        return _cmd_validate(args)
    if args.cmd == "smooth":
        return _cmd_smooth(args)
    if args.cmd == "info":
        return _cmd_info(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())

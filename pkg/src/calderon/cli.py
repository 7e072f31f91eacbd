"""Batch front door: scenario runs, convergence studies, self-check.

Subcommands::

    calderon run <config.json>
    calderon convergence <config.json> --levels K
    calderon selfcheck [--output-dir DIR]

The config is strict JSON: unknown keys anywhere are rejected before any
computation starts (exit code 2).  Runs are deterministic: all randomness
derives from the recorded seed and CSV tables are byte-identical across
repeated runs.  Exit codes: 0 all tasks pass, 1 task failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .csalg import CStarAlgebra, star
from .errors import CalderonError, StructureError
from . import hilbmod
from . import sobolev
from .dirac import (
    CollarFunction,
    CollarGrid,
    ProductDiracModel,
    apply_dirac,
    apply_dirac_minus,
    build_double,
    ghost_solution_check,
    green_residual,
)
from .projector import (
    BoundaryData,
    calderon_projector,
    calderon_vs_aps_index,
    cauchy_space_oracle,
    exact_projector_block,
    orthogonalized_calderon,
    poisson,
    principal_symbol,
    spectral_projection_positive,
    symbol_limit_check,
)

REPORT_SCHEMA_VERSION = 1

TASKS = (
    "module-check",
    "sobolev-check",
    "double",
    "calderon",
    "symbol",
    "index",
    "convergence",
)


class ConfigError(Exception):
    """Raised for any config that does not match the schema."""


# -- strict config parsing ---------------------------------------------


def _require_keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise ConfigError("%s must be an object" % where)
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(
            "unknown key(s) %s in %s" % (sorted(unknown), where)
        )
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(
            "missing key(s) %s in %s" % (sorted(missing), where)
        )


def _parse_algebra(desc):
    _require_keys(desc, ("kind",), ("n", "name", "table"), "algebra")
    try:
        return CStarAlgebra.from_descriptor(desc)
    except (StructureError, KeyError) as exc:
        raise ConfigError("bad algebra descriptor: %s" % exc)


def _parse_matrix(desc, where):
    _require_keys(desc, ("real",), ("imag",), where)
    mat = np.asarray(desc["real"], dtype=float).astype(complex)
    if "imag" in desc:
        mat = mat + 1j * np.asarray(desc["imag"], dtype=float)
    return mat


def _parse_v(desc, rm, seed):
    if desc is None:
        return None
    kinds = {
        "zero": ((), ()),
        "diag": (("values",), ()),
        "scaled-identity": (("scale",), ()),
        "random-hermitian": ((), ("scale",)),
        "matrix": (("real",), ("imag",)),
        "cosine": (("base", "amplitude"), ()),
    }
    if not isinstance(desc, dict) or desc.get("kind") not in kinds:
        raise ConfigError(
            "model.v.kind must be one of %s" % sorted(kinds)
        )
    kind = desc["kind"]
    req, opt = kinds[kind]
    _require_keys(desc, ("kind",) + req, opt, "model.v")
    if kind == "zero":
        return np.zeros((rm, rm), dtype=complex)
    if kind == "diag":
        vals = np.asarray(desc["values"], dtype=float)
        if vals.size != rm:
            raise ConfigError("model.v.values must have length r * rep_dim")
        return np.diag(vals).astype(complex)
    if kind == "scaled-identity":
        return float(desc["scale"]) * np.eye(rm, dtype=complex)
    if kind == "random-hermitian":
        rng = np.random.default_rng(seed)
        scale = float(desc.get("scale", 1.0))
        mat = rng.standard_normal((rm, rm)) + 1j * rng.standard_normal((rm, rm))
        return scale * 0.5 * (mat + mat.conj().T)
    if kind == "matrix":
        mat = _parse_matrix(desc, "model.v")
        if mat.shape != (rm, rm):
            raise ConfigError("model.v matrix must be %d x %d" % (rm, rm))
        return mat
    # cosine: y-dependent potential base + amplitude * cos(y) * identity
    base = _parse_v(desc["base"], rm, seed)
    if base is None or callable(base):
        raise ConfigError("model.v.base must be a constant potential")
    amp = float(desc["amplitude"])

    def v_of_y(y):
        return base + amp * np.cos(y) * np.eye(rm)

    return v_of_y


def _parse_holonomy(desc, rm):
    if desc is None:
        return None
    if not isinstance(desc, dict) or desc.get("kind") not in (
        "phase",
        "matrix",
    ):
        raise ConfigError("model.holonomy.kind must be 'phase' or 'matrix'")
    if desc["kind"] == "phase":
        _require_keys(desc, ("kind", "angle_fraction"), (), "model.holonomy")
        frac = float(desc["angle_fraction"])
        return np.exp(2j * np.pi * frac) * np.eye(rm)
    _require_keys(desc, ("kind", "real"), ("imag",), "model.holonomy")
    mat = _parse_matrix(
        {k: v for k, v in desc.items() if k != "kind"}, "model.holonomy"
    )
    if mat.shape != (rm, rm):
        raise ConfigError("model.holonomy matrix must be %d x %d" % (rm, rm))
    return mat


def parse_config(raw):
    """Parse and validate a scenario config dict (strict)."""
    _require_keys(
        raw,
        ("algebra", "model", "grid", "tasks"),
        ("schema_version", "seed", "tolerances", "output_dir"),
        "config",
    )
    if int(raw.get("schema_version", 1)) != 1:
        raise ConfigError("unsupported schema_version")
    algebra = _parse_algebra(raw["algebra"])

    model_desc = raw["model"]
    _require_keys(
        model_desc, ("base",), ("r", "v", "w", "holonomy"), "model"
    )
    r = int(model_desc.get("r", 1))
    if r < 1:
        raise ConfigError("model.r must be >= 1")
    seed = int(raw.get("seed", 12345))
    rm = r * algebra.rep_dim
    v = _parse_v(model_desc.get("v"), rm, seed)
    w = None
    if model_desc.get("w") is not None:
        w = _parse_v(model_desc["w"], rm, seed + 1)
        if callable(w):
            raise ConfigError("model.w must be constant")
    holonomy = _parse_holonomy(model_desc.get("holonomy"), rm)
    try:
        model = ProductDiracModel(
            model_desc["base"], algebra, r=r, v=v, w=w, holonomy=holonomy
        )
    except StructureError as exc:
        raise ConfigError("bad model: %s" % exc)

    grid_desc = raw["grid"]
    _require_keys(grid_desc, ("n_u",), ("n_y", "kind"), "grid")
    try:
        grid = CollarGrid(
            n_u=int(grid_desc["n_u"]),
            n_y=int(grid_desc.get("n_y", 1)),
            kind=grid_desc.get("kind", "chebyshev"),
        )
    except StructureError as exc:
        raise ConfigError("bad grid: %s" % exc)
    if model.base == "segment" and grid.n_y != 1:
        raise ConfigError("segment base requires n_y = 1")
    if model.base == "cylinder" and grid.n_y == 1:
        raise ConfigError("cylinder base requires n_y >= 8")

    tasks = raw["tasks"]
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError("tasks must be a non-empty list")
    for t in tasks:
        if t not in TASKS:
            raise ConfigError(
                "unknown task %r (choose from %s)" % (t, list(TASKS))
            )

    tolerances = raw.get("tolerances", {})
    _require_keys(
        tolerances,
        (),
        ("idempotency", "oracle", "sigma_min"),
        "tolerances",
    )
    tol = {
        "idempotency": float(tolerances.get("idempotency", 1e-9)),
        "oracle": float(tolerances.get("oracle", 1e-9)),
        "sigma_min": float(tolerances.get("sigma_min", 1e-10)),
    }
    return {
        "algebra": algebra,
        "model": model,
        "grid": grid,
        "tasks": list(tasks),
        "seed": seed,
        "tolerances": tol,
        "output_dir": raw.get("output_dir", "calderon-out"),
        "raw": raw,
    }


def load_config(path):
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    return parse_config(raw)


# -- deterministic table output ----------------------------------------


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return "%d" % x
    if isinstance(x, (float, np.floating)):
        return "%.17e" % float(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def export_projector(out_dir, name, proj):
    mat = proj.matrix()
    np.save(os.path.join(out_dir, name + ".npy"), mat)
    rows = [
        (i, j, mat[i, j].real, mat[i, j].imag)
        for i in range(mat.shape[0])
        for j in range(mat.shape[1])
    ]
    write_csv(
        os.path.join(out_dir, name + ".csv"),
        ("row", "col", "real", "imag"),
        rows,
    )
    diag = proj.diagnostics()
    with open(os.path.join(out_dir, name + "_diagnostics.txt"), "w") as fh:
        for key in sorted(diag):
            fh.write("%s = %s\n" % (key, _fmt(diag[key])))


# -- tasks --------------------------------------------------------------


def _task_module_check(cfg, out_dir):
    """Hilbert-module identity suite on the configured algebra."""
    alg = cfg["algebra"]
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    trials = 200
    for _ in range(trials):
        x = hilbmod.ModuleVector.random(alg, 3, rng)
        y = hilbmod.ModuleVector.random(alg, 3, rng)
        z = hilbmod.ModuleVector.random(alg, 3, rng)
        a = alg.random_element(rng)
        ip = hilbmod.inner_product
        # sesquilinearity and right-linearity
        d1 = (ip(x, y.times(a)) - ip(x, y) * a).mat
        d2 = (ip(x, y) - star(ip(y, x))).mat
        # theta identities
        th_xy = hilbmod.rank_one(x, y)
        th_yx = hilbmod.rank_one(y, x)
        d3 = (hilbmod.adjoint(th_xy) - th_yx).rep
        d4 = (
            th_xy.compose(th_yx).apply(z).stack
            - x.times(ip(y, y) * ip(x, z)).stack
        )
        # adjoint identity for a random operator
        t_op = hilbmod.ModuleOperator.random(alg, 3, 3, rng)
        d5 = (ip(t_op.apply(x), y) - ip(x, hilbmod.adjoint(t_op).apply(y))).mat
        worst = max(
            worst,
            *[float(np.linalg.norm(d, 2)) for d in (d1, d2, d3, d4, d5)]
        )
    status = "pass" if worst < 1e-10 else "fail"
    return status, {"max_deviation": worst, "trials": trials}


def _task_sobolev_check(cfg, out_dir):
    """Multiplier identities and the trace-ratio behaviour."""
    n_u = max(cfg["grid"].n_u, 16)
    n_y = cfg["grid"].n_y if cfg["grid"].n_y > 1 else 8
    spec = sobolev.GridSpec(dim=2, n_u=n_u, n_y=n_y)
    rng = np.random.default_rng(cfg["seed"])
    f = sobolev.GridFunction.random_band_limited(spec, rng)
    g = sobolev.GridFunction.random_band_limited(spec, rng)
    adj = abs(
        sobolev.torus_inner(sobolev.lambda_pm(f, +1), g)
        - sobolev.torus_inner(f, sobolev.lambda_pm(g, -1))
    )
    lap = sobolev.FourierMultiplier(
        lambda xi, eta: 1.0 + xi**2 + eta**2, order_shift=-2.0
    )
    prod_dev = (
        sobolev.lambda_pm(sobolev.lambda_pm(f, -1), +1) - lap.apply(f)
    ).l2_norm()
    half = sobolev.restrict(f)
    round_dev = (
        sobolev.restrict(sobolev.extend_reflect(half)).values - half.values
    )
    round_dev = float(np.abs(round_dev).max())
    ratios = [
        sobolev.trace(f, 0.0, s).ratio for s in (2.0, 1.0, 0.75, 0.6)
    ]
    ok = (
        adj < 1e-12 * max(1.0, f.l2_norm() * g.l2_norm())
        and prod_dev < 1e-10
        and round_dev == 0.0
    )
    return ("pass" if ok else "fail"), {
        "lambda_adjoint_dev": float(adj),
        "lambda_product_dev": float(prod_dev),
        "restrict_extend_dev": round_dev,
        "trace_ratios": [float(r) for r in ratios],
    }


def _task_double(cfg, out_dir):
    sysd = build_double(cfg["model"], cfg["grid"])
    ghost = ghost_solution_check(sysd)
    metrics = {
        "sigma_min": sysd.sigma_min,
        "bound_constant": sysd.bound_constant,
        "ghost_sigma_min": ghost["sigma_min"],
    }
    ok = sysd.sigma_min > cfg["tolerances"]["sigma_min"] and ghost[
        "trivial_kernel"
    ]
    if sysd.per_mode:
        dims = sysd.kernel_dims()
        metrics["max_kernel_dim"] = int(max(dims))
        ok = ok and max(dims) == 0
    return ("pass" if ok else "fail"), metrics


def _task_calderon(cfg, out_dir):
    sysd = build_double(cfg["model"], cfg["grid"])
    proj = calderon_projector(sysd)
    diag = proj.diagnostics()
    rng = np.random.default_rng(cfg["seed"])
    metrics = dict(diag)
    ok = diag["idempotency_defect"] < cfg["tolerances"]["idempotency"]
    if sysd.per_mode and not cfg["model"].y_dependent:
        worst = 0.0
        for ch, block in proj.channel_blocks:
            oracle = exact_projector_block(ch.b_mat)
            worst = max(worst, float(np.linalg.norm(block - oracle, 2)))
        metrics["oracle_defect"] = worst
        ok = ok and worst < cfg["tolerances"]["oracle"]
    if cfg["model"].h_rep is None:
        metrics["a_linearity_defect"] = proj.a_linearity_defect(rng, trials=5)
        ok = ok and metrics["a_linearity_defect"] < 1e-10
    export_projector(out_dir, "calderon_projector", proj)
    return ("pass" if ok else "fail"), metrics


def _task_symbol(cfg, out_dir):
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    count = 0
    n_f = cfg["model"].n_fiber
    while count < 100:
        b = rng.standard_normal((n_f, n_f)) + 1j * rng.standard_normal(
            (n_f, n_f)
        )
        b = 0.5 * (b + b.conj().T)
        eigs = np.linalg.eigvalsh(b)
        if np.abs(eigs).min() <= 0.1:
            continue
        count += 1
        dev = np.linalg.norm(
            principal_symbol(b) - spectral_projection_positive(b), 2
        )
        worst = max(worst, float(dev))
    metrics = {"contour_vs_eig": worst, "samples": count}
    ok = worst < 1e-10
    if not cfg["model"].y_dependent and cfg["model"].base == "cylinder":
        table = symbol_limit_check(cfg["model"])
        metrics["symbol_limit"] = {
            k: table[k] for k in ("monotone", "k_bound", "k_fit")
        }
        write_csv(
            os.path.join(out_dir, "symbol_limit.csv"),
            ("eta", "delta"),
            list(zip(table["etas"], table["deltas"])),
        )
        ok = ok and table["monotone"] and table["satisfies_bound"]
    return ("pass" if ok else "fail"), metrics


def _task_index(cfg, out_dir):
    if cfg["model"].y_dependent:
        raise StructureError("index task needs constant coefficients")
    sysd = build_double(cfg["model"], cfg["grid"])
    result = calderon_vs_aps_index(sysd)
    return "pass", result


def _manufactured_pair(model, grid, rng):
    """Two smooth side-1 sections for residual studies."""
    u = grid.u_nodes()
    y = (
        2.0 * np.pi * np.arange(grid.n_y) / grid.n_y
        if grid.n_y > 1
        else np.zeros(1)
    )
    out = []
    n_f, m = model.n_fiber, model.m
    band = range(-2, 3) if grid.n_y > 1 else [0]
    for _ in range(2):
        vals = np.zeros((grid.n_nodes, grid.n_y, n_f, m), dtype=complex)
        for k in band:
            coef = rng.standard_normal((n_f, m)) + 1j * rng.standard_normal(
                (n_f, m)
            )
            prof = np.cos(np.pi * u) + 0.5 * u**2 + 0.25 * k * u**3 * (1 - u)
            vals += (
                prof[:, None, None, None]
                * np.exp(1j * k * y)[None, :, None, None]
                * coef[None, None]
            )
        out.append(CollarFunction(grid, vals))
    return out


def _task_convergence(cfg, out_dir, levels=3):
    """Dense-path refinement study with fitted convergence orders."""
    from .csalg import norm as alg_norm

    grid0 = cfg["grid"]
    if grid0.kind != "uniform":
        raise StructureError("convergence study requires the dense path")
    if levels < 3:
        raise StructureError("need at least 3 refinement levels")
    model = cfg["model"]
    rows = []
    greens, idems, oracles = [], [], []
    for lev in range(levels):
        n_u = grid0.n_u * (2**lev)
        grid = CollarGrid(n_u=n_u, n_y=grid0.n_y, kind="uniform")
        rng = np.random.default_rng(cfg["seed"])  # same draw per level
        s1, s2 = _manufactured_pair(model, grid, rng)
        green = alg_norm(green_residual(model, s1, s2))
        sysd = build_double(model, grid)
        proj = calderon_projector(sysd)
        idem = proj.diagnostics()["idempotency_defect"]
        row = [n_u, green, idem]
        if sysd.per_mode and not model.y_dependent:
            worst = 0.0
            for ch, block in proj.channel_blocks:
                oracle = exact_projector_block(ch.b_mat)
                worst = max(worst, float(np.linalg.norm(block - oracle, 2)))
            oracles.append(worst)
            row.append(worst)
        greens.append(green)
        idems.append(idem)
        rows.append(row)

    header = ["n_u", "green_residual", "idempotency_defect"]
    if oracles:
        header.append("oracle_defect")
    write_csv(os.path.join(out_dir, "convergence.csv"), header, rows)

    #: defects already at rounding level carry no order information
    floor = 1e-12

    def fit_order(errs):
        errs = np.asarray(errs, dtype=float)
        if np.max(errs) < floor:
            return None, True
        if np.any(errs <= 0):
            return float("inf"), True
        monotone = bool(np.all(np.diff(errs) < 0))
        levels_ax = np.arange(errs.size)
        slope = np.polyfit(levels_ax, np.log2(errs), 1)[0]
        return float(-slope), monotone

    metrics = {"levels": levels, "n_u_base": grid0.n_u}
    ok = True
    for name, errs in (
        ("green", greens),
        ("idempotency", idems),
        ("oracle", oracles),
    ):
        if not errs:
            continue
        order, monotone = fit_order(errs)
        if order is None:
            # at the floor on every level: nothing left to converge
            metrics["%s_order" % name] = "floor"
            continue
        metrics["%s_order" % name] = order
        metrics["%s_monotone" % name] = monotone
        if not monotone:
            ok = False
        elif np.isfinite(order) and order < 3.5:
            ok = False
    return ("pass" if ok else "fail"), metrics


_TASK_FUNCS = {
    "module-check": _task_module_check,
    "sobolev-check": _task_sobolev_check,
    "double": _task_double,
    "calderon": _task_calderon,
    "symbol": _task_symbol,
    "index": _task_index,
    "convergence": _task_convergence,
}


# -- scenario driver ----------------------------------------------------


def run_scenario(cfg, levels=3):
    """Execute the configured tasks in order and assemble the report."""
    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.monotonic()
    task_reports = []
    overall_ok = True
    for name in cfg["tasks"]:
        func = _TASK_FUNCS[name]
        try:
            if name == "convergence":
                status, metrics = func(cfg, out_dir, levels=levels)
            else:
                status, metrics = func(cfg, out_dir)
        except CalderonError as exc:
            status, metrics = "fail", {"error": str(exc)}
        task_reports.append(
            {"name": name, "status": status, "metrics": metrics}
        )
        if status != "pass":
            overall_ok = False
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "package_version": __version__,
        "seed": cfg["seed"],
        "config": cfg["raw"],
        "tasks": task_reports,
        "status": "pass" if overall_ok else "fail",
        "wall_time_s": time.monotonic() - t0,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return report


# -- built-in fixtures for selfcheck -----------------------------------


def builtin_fixtures(output_dir):
    """Deterministic config dicts exercising every task."""
    return [
        {
            "algebra": {"kind": "matrix", "n": 2},
            "model": {"base": "segment", "r": 1, "v": {"kind": "diag", "values": [1.0, -0.5]}},
            "grid": {"n_u": 16, "n_y": 1, "kind": "chebyshev"},
            "tasks": ["module-check", "double", "calderon"],
            "seed": 20240817,
            "output_dir": os.path.join(output_dir, "segment"),
        },
        {
            "algebra": {"kind": "group", "name": "cyclic", "n": 4},
            "model": {
                "base": "cylinder",
                "r": 1,
                "v": {"kind": "random-hermitian", "scale": 0.8},
            },
            "grid": {"n_u": 20, "n_y": 12, "kind": "chebyshev"},
            "tasks": ["sobolev-check", "double", "calderon", "symbol", "index"],
            "seed": 20240818,
            "output_dir": os.path.join(output_dir, "cylinder-group"),
        },
        {
            "algebra": {"kind": "matrix", "n": 2},
            "model": {"base": "cylinder", "r": 1, "v": {"kind": "diag", "values": [1.0, 0.5]}},
            "grid": {"n_u": 8, "n_y": 8, "kind": "uniform"},
            "tasks": ["convergence"],
            "seed": 20240819,
            "output_dir": os.path.join(output_dir, "cylinder-dense"),
        },
    ]


def selfcheck(output_dir):
    reports = []
    for raw in builtin_fixtures(output_dir):
        cfg = parse_config(raw)
        reports.append(run_scenario(cfg))
    return reports


# -- entry point --------------------------------------------------------


def _print_report(report, stream=None):
    stream = sys.stdout if stream is None else stream
    for task in report["tasks"]:
        stream.write(
            "task %-14s %s\n" % (task["name"], task["status"])
        )
    stream.write("overall: %s\n" % report["status"])


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="calderon",
        description="Calderon projector toolkit: batch runs and checks.",
    )
    parser.add_argument(
        "--version", action="version", version="calderon " + __version__
    )
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")

    p_conv = sub.add_parser(
        "convergence", help="dense-path convergence study"
    )
    p_conv.add_argument("config")
    p_conv.add_argument("--levels", type=int, default=3)

    p_self = sub.add_parser("selfcheck", help="run the built-in fixtures")
    p_self.add_argument("--output-dir", default="calderon-selfcheck")

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2

    try:
        if args.command == "run":
            cfg = load_config(args.config)
            report = run_scenario(cfg)
            _print_report(report)
            return 0 if report["status"] == "pass" else 1
        if args.command == "convergence":
            cfg = load_config(args.config)
            if args.levels < 3:
                print("error: --levels must be >= 3", file=sys.stderr)
                return 2
            cfg = dict(cfg)
            cfg["tasks"] = ["convergence"]
            report = run_scenario(cfg, levels=args.levels)
            _print_report(report)
            return 0 if report["status"] == "pass" else 1
        if args.command == "selfcheck":
            reports = selfcheck(args.output_dir)
            ok = True
            for report in reports:
                _print_report(report)
                ok = ok and report["status"] == "pass"
            return 0 if ok else 1
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())

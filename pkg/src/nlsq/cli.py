"""Command-line driver.

    nlsq <command> [--config PATH] [--seed U64] [--out DIR] [--quiet]

Exit codes: 0 success, 2 configuration error, 3 solver did not converge,
4 runtime abort.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import snapshot
from .config import ConfigError, RunConfig, load_config, parse_config
from .dynamics import (DynamicsError, EvolveConfig, blowup_class_check, blowup_data, evolve,
                       global_threshold_check)
from .functionals import ModelError, ModelParams, report
from .grid import FieldPair, GridError, make_grid
from .groundstate import (ConstraintSpec, SolverConfig, SolverError, curve_N_of_t, scaled_curve_point,
                          solve_free_soliton, solve_groundstate)
from .oscillator import (SpectrumError, overlap_constants, printed_overlap_constants, transverse_grid,
                         transverse_spectrum)
from .reduced import (Reduced1DProblem, ReductionError, compare_full_vs_reduced, reduced_coefficients,
                      solve_reduced)

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_ABORT = 0, 2, 3, 4
COMMANDS = ("eigs", "groundstate", "evolve", "reduce1d", "curve", "sweep", "compare")


class NotConverged(RuntimeError):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dump(path, obj):
    snapshot.atomic_write(path, json.dumps(_jsonable(obj), indent=2) + "\n", mode="w")


# --------------------------------------------------------------------------
# building blocks from a config

def build_params(cfg: RunConfig) -> ModelParams:
    m = cfg["model"]
    return ModelParams(m["n"], m["kappa"], m["potential"], m["potential_scale"], m["interaction"])


def build_grid(cfg: RunConfig):
    g = cfg["grid"]
    return make_grid(g["geometry"], g["axes"], rdim=g["rdim"] or None)


def build_solver(cfg: RunConfig, **over) -> SolverConfig:
    s = cfg["solver"]
    kw = dict(dt=s["dt"], grad_tol=s["grad_tol"], max_iter=s["max_iter"], initializer=s["initializer"],
              init_width=s["init_width"], noise=s["noise"], seed=cfg.seed)
    kw.update(over)
    return SolverConfig(**kw)


def build_constraint(cfg: RunConfig) -> ConstraintSpec:
    c = cfg["constraint"]
    if c["kind"] == "product":
        return ConstraintSpec.product(c["mu1"], c["mu2"], c["ball_cap"])
    if c["kind"] == "ellipse":
        return ConstraintSpec.ellipse(c["w"], c["mu"], c["ball_cap"])
    if c["kind"] == "sphere_weighted":
        return ConstraintSpec.sphere(c["N2"], c["ball_cap"])
    raise ConfigError("constraint.kind = free has no mass constraint")


def _bases(cfg, grid, count=1):
    tg = transverse_grid(grid)
    d = tg.dim
    kappa = cfg["model"]["kappa"]
    return transverse_spectrum(1.0, d, tg, count), transverse_spectrum(kappa, d, tg, count)


def _groundstate(cfg):
    params, grid = build_params(cfg), build_grid(cfg)
    if cfg["constraint"]["kind"] == "free":
        res = solve_free_soliton(params, cfg["constraint"]["system"], grid, build_solver(cfg, grad_tol=1e-10))
    else:
        res = solve_groundstate(params, build_constraint(cfg), grid, build_solver(cfg))
    return params, grid, res


# --------------------------------------------------------------------------
# commands; each returns (headline dict, artifact paths)

def cmd_eigs(cfg, out, say):
    grid = build_grid(cfg)
    kappa = cfg["model"]["kappa"]
    J = cfg["eigs"]["count"]
    tg = grid if grid.geometry == "radial" else transverse_grid(grid)
    d = tg.dim
    bu = transverse_spectrum(1.0, d, tg, J)
    bv = transverse_spectrum(kappa, d, tg, J)
    s1, s2 = overlap_constants(bu, bv)
    p1, p2 = printed_overlap_constants(kappa, d + 1)
    say(f"l0={bu.e0:.6f}")
    say(f"m0={bv.e0:.6f}")
    say("l: " + " ".join(f"{x:.6f}" for x in bu.evals))
    say("m: " + " ".join(f"{x:.6f}" for x in bv.evals))
    say(f"s1={s1:.10f} s2={s2:.10f} (printed closed forms {p1:.6g}, {p2:.6g})")
    head = {"l0": bu.e0, "m0": bv.e0, "l": list(bu.evals), "m": list(bv.evals), "s1": s1, "s2": s2,
            "s1_printed": p1, "s2_printed": p2, "d": d, "kappa": kappa}
    path = os.path.join(out, "eigs.json")
    _dump(path, head)
    return head, [path]


def cmd_groundstate(cfg, out, say):
    params, grid, res = _groundstate(cfg)
    side = res.sidecar()
    side["functionals"] = report(res.pair, params).to_dict()
    paths = []
    if "nlsq" in cfg["output"]["formats"]:
        p = os.path.join(out, "groundstate.nlsq")
        snapshot.save(p, res.pair)
        paths.append(p)
    p = os.path.join(out, "groundstate.json")
    _dump(p, side)
    paths.append(p)
    say(f"I={res.I:.12g} lambda1={res.lambda1:.12g} lambda2={res.lambda2:.12g} "
        f"iterations={res.iterations} converged={res.converged}")
    head = {"I": res.I, "lambda1": res.lambda1, "lambda2": res.lambda2,
            "B": res.extra.get("pohozaev_normalised", res.pohozaev), "converged": res.converged}
    if not res.converged:
        raise NotConverged(head, paths)
    return head, paths


def _initial_pair(cfg, params, grid):
    e = cfg["evolve"]
    kind = e["initial"]
    if kind == "snapshot":
        pair = snapshot.load(e["snapshot"])
        if pair.grid.shape != grid.shape:
            raise ConfigError("snapshot grid does not match the [grid] block", key="evolve.snapshot")
        return FieldPair(pair.u, pair.v, grid), None
    if kind == "groundstate":
        _, _, res = _groundstate(cfg)
        a = e["amplitude"]
        return FieldPair(a * res.pair.u, a * res.pair.v, grid), res
    if kind == "soliton_scaled":
        free = ModelParams(params.n, params.kappa, "none")
        sol = solve_free_soliton(free, cfg["constraint"]["system"], grid, build_solver(cfg, grad_tol=1e-10))
        return blowup_data(sol, e["amplitude"], e["lambda"]), sol
    # generic Gaussian data with seeded random phases
    rng = cfg.rng(0)
    r2 = grid.r2
    ph = rng.uniform(-0.5, 0.5, size=2)
    u = e["amplitude"] * np.exp(-r2 / 2) * np.exp(1j * ph[0])
    v = 0.5 * e["amplitude"] * np.exp(-r2 / 2) * np.exp(1j * ph[1])
    return FieldPair(u, v, grid), None


def cmd_evolve(cfg, out, say):
    params, grid = build_params(cfg), build_grid(cfg)
    pair0, ref = _initial_pair(cfg, params, grid)
    e = cfg["evolve"]
    ec = EvolveConfig(dt=e["dt"], T=e["T"], substeps=e["substeps"], adaptive=e["adaptive"], dt_floor=e["dt_floor"],
                      gmax_factor=e["gmax_factor"], stride=e["stride"])
    paths = []

    def dump_snapshot(step, t, pair):
        p = os.path.join(out, f"snap-{step:08d}.nlsq")
        snapshot.save(p, pair)
        paths.append(p)

    stride = cfg["output"]["snapshot_stride"]
    try:
        ts = evolve(pair0, params, ec, dump_snapshot if stride > 0 else None, stride)
    except DynamicsError as err:
        if err.series is not None and err.series.t:
            p = os.path.join(out, "timeseries.csv")
            snapshot.atomic_write(p, err.series.to_csv(), mode="w")
            say(f"aborted: {err}; last good t = {err.series.t[-1]:.6g}")
        raise
    head = ts.summary()
    if ref is not None and ref.constraint == "free":
        head["threshold"] = global_threshold_check(pair0, ref)
    elif ref is not None and grid.geometry != "radial":
        head["class_M"] = blowup_class_check(pair0, params, ref)
    if "csv" in cfg["output"]["formats"]:
        p = os.path.join(out, "timeseries.csv")
        snapshot.atomic_write(p, ts.to_csv(), mode="w")
        paths.append(p)
    if "nlsq" in cfg["output"]["formats"]:
        p = os.path.join(out, "final.nlsq")
        snapshot.save(p, ts.final)
        paths.append(p)
    p = os.path.join(out, "evolve.json")
    _dump(p, head)
    paths.append(p)
    say(f"verdict={ts.verdict} t_final={ts.t[-1]:.6g} Q_drift={head['Q_drift']:.3e} E_drift={head['E_drift']:.3e}")
    return head, paths


def _axial_grid(grid):
    ax = grid.axes[grid.free_axis]
    return make_grid("cartesian", [(ax.name, ax.L, ax.m)])


def _reduced_problem(cfg, grid, bu=None, bv=None):
    r, c = cfg["reduce"], cfg["constraint"]
    n, kappa = cfg["model"]["n"], cfg["model"]["kappa"]
    if r["c1"] is not None and r["c2"] is not None:
        c1, c2 = r["c1"], r["c2"]
    else:
        if r["coefficients"] == "overlap" and bu is None:
            bu, bv = _bases(cfg, grid)
        c1, c2 = reduced_coefficients(r["coefficients"], kappa, n, bu, bv)
    g1 = grid if grid.ndim == 1 else _axial_grid(grid)
    return Reduced1DProblem(c1, c2, kappa, c["mu1"], c["mu2"], g1)


def cmd_reduce1d(cfg, out, say):
    grid = build_grid(cfg)
    prob = _reduced_problem(cfg, grid)
    res = solve_reduced(prob, build_solver(cfg, grad_tol=1e-9))
    head = {"I_inf": res.I, "lambda_inf1": res.lambda1, "lambda_inf2": res.lambda2, "c1": prob.c1, "c2": prob.c2,
            "residual": res.extra["reduced_residual"], "converged": res.converged}
    paths = []
    if "nlsq" in cfg["output"]["formats"]:
        p = os.path.join(out, "reduce1d.nlsq")
        snapshot.save(p, res.pair)
        paths.append(p)
    p = os.path.join(out, "reduce1d.json")
    _dump(p, head)
    paths.append(p)
    say(f"lambda_inf1={res.lambda1:.10g} lambda_inf2={res.lambda2:.10g} c1={prob.c1:.8g} c2={prob.c2:.8g}")
    if not res.converged:
        raise NotConverged(head, paths)
    return head, paths


def cmd_compare(cfg, out, say):
    params, grid = build_params(cfg), build_grid(cfg)
    if params.potential != "V2":
        raise ConfigError("compare needs potential = V2", key="model.potential")
    full = solve_groundstate(params, build_constraint(cfg), grid, build_solver(cfg))
    bu, bv = _bases(cfg, grid)
    red = solve_reduced(_reduced_problem(cfg, grid, bu, bv), build_solver(cfg, grad_tol=1e-9))
    rep = compare_full_vs_reduced(full, bu, bv, red)
    head = rep.to_dict()
    head["converged"] = bool(full.converged and red.converged)
    p = os.path.join(out, "compare.json")
    _dump(p, head)
    say(" ".join(f"{k}={v:.6g}" for k, v in rep.to_dict().items()))
    if not head["converged"]:
        raise NotConverged(head, [p])
    return head, [p]


CURVE_HEADER = ["t", "N_t", "lambda", "K", "J", "residual", "converged"]


def cmd_curve(cfg, out, say):
    params, grid = build_params(cfg), build_grid(cfg)
    printed = cfg["curve"]["printed_coefficient"]
    rows, ok = [], True
    for t in cfg["curve"]["t"]:
        res = scaled_curve_point(params, t, grid, build_solver(cfg, grad_tol=1e-9, max_iter=3000))
        N = curve_N_of_t(res, t, printed=printed)
        rows.append([t, N, t, res.extra["K"], res.I, res.grad_residual, res.converged])
        ok &= res.converged
        say(f"t={t:g} N_t={N:.8g} lambda={t:g} lambda*N^4={t * N ** 4:.8g}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    w.writerows(rows)
    p = os.path.join(out, "curve.csv")
    snapshot.atomic_write(p, buf.getvalue(), mode="w")
    head = {"rows": len(rows), "converged": bool(ok)}
    if not ok:
        raise NotConverged(head, [p])
    return head, [p]


def _sweep_task(args):
    text, command, index, out = args
    cfg = parse_config(text)
    sub = os.path.join(out, f"run{index:04d}")
    os.makedirs(sub, exist_ok=True)
    try:
        head, _ = HANDLERS[command](cfg, sub, lambda *_: None)
        status = "ok"
    except NotConverged as e:
        head, status = e.args[0], "not_converged"
    except (SolverError, DynamicsError, SpectrumError, ReductionError, FloatingPointError) as e:
        head, status = {"error": str(e)}, "aborted"
    return index, cfg.run_id(), status, head


def cmd_sweep(cfg, out, say):
    s = cfg["sweep"]
    values = s["values"]
    tasks = []
    for i, val in enumerate(values):
        c = cfg
        if s["parameter"] == "mu":
            c = c.with_value("constraint", "mu1", repr(val)).with_value("constraint", "mu2", repr(val))
            c = c.with_value("constraint", "mu", repr(val))
        elif s["parameter"] == "kappa":
            c = c.with_value("model", "kappa", repr(val))
        elif s["parameter"] == "t":
            c = c.with_value("curve", "t", repr(val))
        else:
            c = c.with_value("constraint", "N2", repr(val * val))
        if s["axial_L"] or s["axial_m"]:
            axes = list(cfg["grid"]["axes"])
            name, L, m = axes[-1]
            if s["axial_L"]:
                L = s["axial_L"][min(i, len(s["axial_L"]) - 1)]
            if s["axial_m"]:
                m = int(s["axial_m"][min(i, len(s["axial_m"]) - 1)])
            axes[-1] = (name, L, m)
            c = c.with_value("grid", "axes", ", ".join(f"{a}:{b!r}:{d}" for a, b, d in axes))
        c = c.with_seed(int(np.random.SeedSequence(cfg.seed, spawn_key=(i,)).generate_state(1)[0]))
        tasks.append((c.serialize(), s["command"], i, out))
    if s["workers"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=s["workers"]) as ex:
            results = list(ex.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    keys = []
    for _, _, _, h in results:
        for k, v in h.items():
            if k not in keys and not isinstance(v, (dict, list)):
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value", "run_id", "status"] + keys)
    for (i, rid, st, h) in results:
        w.writerow([i, values[i], rid, st] + [_jsonable(h.get(k)) for k in keys])
    p = os.path.join(out, "sweep.csv")
    snapshot.atomic_write(p, buf.getvalue(), mode="w")
    say(f"{len(results)} runs, {sum(r[2] == 'ok' for r in results)} ok")
    head = {"runs": len(results), "ok": sum(r[2] == "ok" for r in results)}
    if any(r[2] == "aborted" for r in results):
        raise DynamicsError(f"{sum(r[2] == 'aborted' for r in results)} sweep runs aborted")
    if any(r[2] == "not_converged" for r in results):
        raise NotConverged(head, [p])
    return head, [p]


HANDLERS = {"eigs": cmd_eigs, "groundstate": cmd_groundstate, "evolve": cmd_evolve, "reduce1d": cmd_reduce1d,
            "curve": cmd_curve, "sweep": cmd_sweep, "compare": cmd_compare}


# --------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="nlsq", description="Normalized solutions and dynamics of the quadratic system.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="run configuration (defaults apply when omitted)")
    ap.add_argument("--seed", type=int, metavar="U64", help="overrides [run] seed")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
    ap.add_argument("--quiet", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *_: None) if args.quiet else (lambda s: print(s, flush=True))
    if args.quiet:
        warnings.simplefilter("ignore")
    started = time.time()
    try:
        cfg = load_config(args.config) if args.config else parse_config("")
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer", key="--seed")
            cfg = cfg.with_seed(args.seed)
        out = args.out or cfg["output"]["directory"]
        os.makedirs(out, exist_ok=True)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    code, head, paths, err = EXIT_OK, {}, [], None
    try:
        head, paths = HANDLERS[args.command](cfg, out, say)
    except (ConfigError, ModelError, GridError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as e:
        head, paths = e.args
        code, err = EXIT_NOCONV, "not converged"
    except SolverError as e:
        code, err = EXIT_NOCONV, str(e)
    except (DynamicsError, SpectrumError, ReductionError, FloatingPointError, ValueError) as e:
        code, err = EXIT_ABORT, str(e)
    record = {"run_id": cfg.run_id(), "command": args.command, "started": started, "finished": time.time(),
              "config": cfg.serialize(), "seed": cfg.seed, "headline": head, "artifacts": paths,
              "exit_code": code, "error": err}
    _dump(os.path.join(out, f"record-{args.command}.json"), record)
    if err:
        print(f"{args.command}: {err}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

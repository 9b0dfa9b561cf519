"""Command line front end.

    chslab <command> [--config FILE] [--key value ...] --out DIR

Commands: solve, holder, ineq, t0probe, kernel.  Every run writes its
artifacts plus a manifest.txt that echoes the effective configuration
and a content hash per artifact, so identical configs can be diffed
byte for byte.  Exit code 0 means the run's verdict passed, 1 means it
ran but the verdict failed, 2 means the run itself could not proceed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import fields, holder, solver
from . import inequalities as ineq
from .config import COMMANDS, ConfigError, RunConfig, effective_items, parse_config
from .spectral import Field, Grid, sobolev_norm, sup_norm

__all__ = ["main", "execute", "sweep_execute"]


def _git_blob_sha1(data: bytes) -> str:
    h = hashlib.sha1()
    h.update(b"blob %d\x00" % len(data))
    h.update(data)
    return h.hexdigest()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(f"{s:g}:{r:g}" for s, r in value)
    if value is None:
        return ""
    return str(value)


def _json_num(x):
    # JSON has no inf/nan tokens; report them as null
    x = float(x)
    return x if math.isfinite(x) else None


def _write_manifest(cfg: RunConfig, results: dict, artifacts, wall: float):
    lines = ["chslab manifest", f"command = {cfg.command}"]
    for key, val in effective_items(cfg):
        lines.append(f"{key} = {_fmt(val)}")
    for key, val in results.items():
        lines.append(f"{key} = {_fmt(val)}")
    for name in sorted(artifacts):
        with open(os.path.join(cfg.out, name), "rb") as fh:
            digest = _git_blob_sha1(fh.read())
        lines.append(f"artifact {name} sha1 {digest}")
    # wall time goes last so everything above it is reproducible
    lines.append(f"wall_time_s = {wall:.3f}")
    with open(os.path.join(cfg.out, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _worker_cap(requested: int) -> int:
    """CHSLAB_THREADS caps worker counts; unset means honor the request."""
    env = os.environ.get("CHSLAB_THREADS", "").strip()
    if env:
        cap = int(env)
        if cap < 1:
            raise ValueError(f"CHSLAB_THREADS must be positive, got {cap}")
        return max(1, min(requested, cap))
    return max(1, requested)


def _initial_state(cfg: RunConfig, grid: Grid) -> solver.State:
    amp = cfg.amplitude
    width = cfg.width if cfg.width else None
    if cfg.kind == "gaussian":
        u = fields.gaussian_bump(grid, amp, width)
        rho = fields.gaussian_bump(grid, cfg.rho_amplitude * amp, grid.length / 20.0)
    elif cfg.kind == "sech2":
        u = fields.sech2_bump(grid, amp, width)
        rho = fields.sech2_bump(grid, cfg.rho_amplitude * amp, grid.length / 40.0)
    elif cfg.kind == "random":
        u = fields.random_field(grid, 6.0, amplitude=amp, seed=cfg.seed)
        rho = fields.random_field(grid, 4.0, amplitude=cfg.rho_amplitude * amp,
                                  seed=cfg.seed + 1)
    elif cfg.kind == "zero":
        u = Field.zero(grid)
        rho = Field.zero(grid)
    else:
        raise ValueError(f"unknown initial data kind {cfg.kind!r}")
    return solver.State(u, rho, 0.0)


def _params(cfg: RunConfig) -> solver.SystemParams:
    return solver.SystemParams(b=cfg.b, kappa=cfg.kappa, alpha=cfg.alpha,
                               c_s=cfg.c_s)


def _run_solve(cfg: RunConfig):
    grid = Grid(cfg.n, cfg.length)
    state = _initial_state(cfg, grid)
    traj = solver.solve(state, _params(cfg), cfg.s, cfg.t_end, cfl=cfg.cfl,
                        seam_policy=cfg.seam)
    solver.save_ledger_csv(traj, os.path.join(cfg.out, "ledger.csv"))
    solver.save_snapshot(traj.final, os.path.join(cfg.out, "state_final.chs2"))
    results = {
        "status": traj.status,
        "ledger_rows": len(traj.times),
        "final_t": float(traj.times[-1]),
        "final_y": float(traj.y[-1]),
    }
    ok = traj.status == solver.COMPLETED
    return ok, results, ["ledger.csv", "state_final.chs2"]


def _run_holder(cfg: RunConfig):
    grid = Grid(cfg.n, cfg.length)
    deltas = np.geomspace(cfg.delta_max, cfg.delta_min, cfg.delta_count)
    reports = holder.sweep(
        cfg.cases, grid, _params(cfg), h=cfg.h, base_kind=cfg.base_kind,
        direction_kind=cfg.direction_kind, deltas=deltas, seed=cfg.seed,
        T=cfg.horizon, base_amplitude=cfg.base_amplitude,
        rho_trivial=cfg.rho_trivial, cfl=cfg.cfl,
        workers=_worker_cap(cfg.parallelism))
    holder.save_reports_csv(reports, os.path.join(cfg.out, "holder_reports.csv"))
    holder.save_reports_json(reports, os.path.join(cfg.out, "holder_reports.json"))
    artifacts = ["holder_reports.csv", "holder_reports.json"]
    for i, rep in enumerate(reports):
        name = f"curves_{rep.row()['case']}.csv"
        if name in artifacts:  # repeated case in the list
            name = f"curves_{rep.row()['case']}_{i}.csv"
        holder.save_curves_csv(rep, os.path.join(cfg.out, name))
        artifacts.append(name)
    ok = all(r.verdict == "pass" for r in reports)
    return ok, {"verdict": "pass" if ok else "fail"}, artifacts


_NEGATIVE_TRIPLES = ((0.0, 1.0, 1.0), (1.0, 2.0, 3.0))


def _run_ineq(cfg: RunConfig):
    grid = Grid(cfg.n, cfg.length)
    base = dict(ensemble=cfg.ensemble, gamma=cfg.gamma,
                amplitude=cfg.amplitude, seed=cfg.seed)
    chosen = cfg.probe

    def want(name):
        return chosen in ("all", name)

    reports = []
    if want("algebra"):
        reports.append(("probe_algebra",
                        ineq.probe_algebra(ineq.ProbeConfig(grid, r=cfg.r, **base))))
    if want("kato-ponce"):
        reports.append(("probe_kato_ponce",
                        ineq.probe_kato_ponce(ineq.ProbeConfig(grid, r=cfg.r, **base))))
    if want("product-low"):
        reports.append(("probe_product_low",
                        ineq.probe_product_low(ineq.ProbeConfig(grid, r=cfg.r, **base))))
    if want("calderon"):
        reports.append(("probe_calderon",
                        ineq.probe_calderon(
                            ineq.ProbeConfig(grid, s=cfg.s, sigma=cfg.sigma, **base))))
    if want("interpolation"):
        reports.append(("probe_interpolation",
                        ineq.probe_interpolation(
                            ineq.ProbeConfig(grid, s1=cfg.s1, s2=cfg.s2, **base))))
    if want("mollifier"):
        mgrid = Grid(cfg.mollifier_n, cfg.length)
        reports.append(("probe_mollifier",
                        ineq.probe_mollifier_commutator(
                            ineq.ProbeConfig(mgrid, s=cfg.s, **base))))

    if chosen == "product-negative":
        triples = [(cfg.r, cfg.j, cfg.k)]
    elif chosen == "all":
        triples = list(_NEGATIVE_TRIPLES)
    else:
        triples = []
    sweeps = {}
    for r, j, k in triples:
        stem = f"probe_product_negative_r{r:g}_j{j:g}_k{k:g}"
        reports.append((stem, ineq.probe_product_negative(
            ineq.ProbeConfig(grid, r=r, j=j, k=k, **base))))
        modes, ratios, slope = ineq.product_negative_sweep(grid, r, j, k,
                                                           gamma=cfg.gamma,
                                                           seed=cfg.seed)
        sweeps[stem] = {"modes": [int(m) for m in modes],
                        "ratios": [float(x) for x in ratios],
                        "slope": float(slope)}

    artifacts = []
    problems = []
    constants = {}
    for stem, rep in reports:
        rep.save_json(os.path.join(cfg.out, stem + ".json"))
        artifacts.append(stem + ".json")
        if cfg.ratios_csv:
            rep.save_ratios_csv(os.path.join(cfg.out, stem + "_ratios.csv"))
            artifacts.append(stem + "_ratios.csv")
        constants[stem] = _json_num(rep.constant)
        if not math.isfinite(rep.constant):
            problems.append(f"{stem}: constant is not finite")
        if rep.violations:
            problems.append(f"{stem}: {rep.violations} pointwise violations")
        if rep.lemma == "mollifier-commutator":
            spread = rep.extra["ladder_spread"]
            if not spread <= 2.0:
                problems.append(f"{stem}: epsilon ladder spread {spread:.3g} > 2")
    for stem, info in sweeps.items():
        if not info["slope"] <= 0.05:
            problems.append(f"{stem}: frequency sweep slope {info['slope']:.3g} > 0.05")

    ok = not problems
    summary = {"verdict": "pass" if ok else "fail", "constants": constants,
               "problems": problems, "sweeps": sweeps,
               "ensemble": cfg.ensemble, "seed": cfg.seed}
    _save_json(summary, os.path.join(cfg.out, "probe_summary.json"))
    artifacts.append("probe_summary.json")
    return ok, {"verdict": summary["verdict"], "probes": len(reports)}, artifacts


def _run_t0probe(cfg: RunConfig):
    grid = Grid(cfg.n, cfg.length)
    params = _params(cfg)
    state = _initial_state(cfg, grid)
    if cfg.normalize:
        y_raw = sobolev_norm(state.u, cfg.s) + sobolev_norm(state.rho, cfg.s - 2.0)
        if y_raw == 0.0:
            raise ValueError("cannot normalize zero initial data")
        state = solver.State((1.0 / y_raw) * state.u, (1.0 / y_raw) * state.rho, 0.0)

    t0_config = solver.t0_lower_bound(state, cfg.s, params)

    def probe_dt(horizon):
        # CFL-limited, but never fewer than 24 steps so the rate fit has
        # enough interior ledger points to work with
        raw = cfg.cfl * grid.dx / max(1.0, sup_norm(state.u))
        return min(raw, horizon / 24.0)

    if math.isinf(t0_config):
        # zero data: no finite window, just confirm the solution stays zero
        traj = solver.solve(state, params, cfg.s, 1.0, cfl=cfg.cfl)
        check = solver.size_bound_check(traj, 0.0, params, cfg.s)
        fitted = 0.0
    else:
        probe = solver.solve(state, params, cfg.s, t0_config,
                             dt_policy=probe_dt(t0_config))
        c_used = max(solver.fit_min_cs(probe), holder.MIN_FITTED_CS)
        y0 = float(probe.y[0])
        t_fit = math.log1p(1.0 / y0) / (2.0 * c_used)
        traj = solver.solve(state, params, cfg.s, t_fit,
                            dt_policy=probe_dt(t_fit))
        # refitting on the longer ledger can only raise the constant, so
        # the window of the refitted T0 stays inside what we just ran
        fitted = max(solver.fit_min_cs(traj), c_used)
        if traj.status == solver.COMPLETED:
            check = solver.size_bound_check(traj, y0,
                                            replace(params, c_s=fitted), cfg.s)
        else:
            # the solver gave up before the window closed, so nothing is
            # certified; still report how far the ledger got
            bound = 2.0 * math.sqrt(y0 * y0 + y0)
            check = solver.SizeBoundReport(
                False, float(traj.y.max()) / bound, bound,
                math.log1p(1.0 / y0) / (2.0 * fitted), None)

    solver.save_ledger_csv(traj, os.path.join(cfg.out, "ledger.csv"))
    report = {
        "y0": float(traj.y[0]),
        "c_s": params.c_s,
        "T0": _json_num(t0_config),
        "fitted_cs": fitted,
        "T0_fitted": _json_num(check.t0),
        "bound": check.bound,
        "max_ratio": _json_num(check.max_ratio),
        "passed": check.passed,
        "first_violation": check.first_violation,
        "status": traj.status,
        "ledger_rows": len(traj.times),
    }
    _save_json(report, os.path.join(cfg.out, "t0_report.json"))
    ok = check.passed and traj.status == solver.COMPLETED
    results = {
        "T0": t0_config,
        "fitted_cs": fitted,
        "size_bound": "pass" if check.passed else "fail",
        "status": traj.status,
    }
    return ok, results, ["ledger.csv", "t0_report.json"]


def _run_kernel(cfg: RunConfig):
    r, j, k = cfg.r, cfg.j, cfg.k
    if j <= 0.5:
        report = {"r": r, "j": j, "k": k, "divergent": True,
                  "reason": "kernel integral diverges for j <= 1/2"}
        _save_json(report, os.path.join(cfg.out, "kernel_report.json"))
        return False, {"divergent": True}, ["kernel_report.json"]
    try:
        etas = np.concatenate([[0.0],
                               np.geomspace(0.1, cfg.eta_max, cfg.eta_points - 1)])
        scan = ineq.kernel_bound_scan(r, j, k, etas=etas)
    except ValueError as exc:
        report = {"r": r, "j": j, "k": k, "rejected": True, "reason": str(exc)}
        _save_json(report, os.path.join(cfg.out, "kernel_report.json"))
        return False, {"rejected": True}, ["kernel_report.json"]
    with open(os.path.join(cfg.out, "kernel_scan.csv"), "w", newline="") as fh:
        fh.write("eta,integral,ratio\n")
        for e, i_val, q in zip(scan.etas, scan.integrals, scan.ratios):
            fh.write(f"{float(e)!r},{float(i_val)!r},{float(q)!r}\n")
    report = {
        "r": r, "j": j, "k": k,
        "sup_ratio": scan.sup, "argmax_eta": scan.argmax,
        "last_decade_growth": scan.last_decade_growth,
        "plateau": scan.plateau, "points": len(scan.etas),
    }
    _save_json(report, os.path.join(cfg.out, "kernel_report.json"))
    results = {"sup_ratio": scan.sup, "plateau": scan.plateau}
    return scan.plateau, results, ["kernel_scan.csv", "kernel_report.json"]


_RUNNERS = {
    "solve": _run_solve,
    "holder": _run_holder,
    "ineq": _run_ineq,
    "t0probe": _run_t0probe,
    "kernel": _run_kernel,
}


def execute(cfg: RunConfig) -> int:
    """Run one command, write artifacts and manifest, return exit code."""
    os.makedirs(cfg.out, exist_ok=True)
    start = time.perf_counter()
    try:
        ok, results, artifacts = _RUNNERS[cfg.command](cfg)
    except Exception:
        traceback.print_exc()
        return 2
    _write_manifest(cfg, results, artifacts, time.perf_counter() - start)
    return 0 if ok else 1


def sweep_execute(configs, parallelism: int = 1, aggregate_path=None) -> int:
    """Run several configs, serially or across processes.

    Aggregation is by input order, and each worker rebuilds its run from
    the RunConfig alone, so artifacts are byte-identical whatever the
    parallelism.  Returns the worst exit code.
    """
    workers = _worker_cap(parallelism)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            futures = [pool.submit(execute, cfg) for cfg in configs]
            codes = [f.result() for f in futures]
    else:
        codes = [execute(cfg) for cfg in configs]
    if aggregate_path:
        with open(aggregate_path, "w", newline="") as fh:
            fh.write("index,command,out,exit_code\n")
            for i, (cfg, code) in enumerate(zip(configs, codes)):
                fh.write(f"{i},{cfg.command},{cfg.out},{code}\n")
    return max(codes, default=0)


def _parse_overrides(tokens) -> dict:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ValueError(f"expected --key, got {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, _, val = key.partition("=")
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ValueError(f"missing value for --{key}")
            val = tokens[i + 1]
            i += 2
        if not key:
            raise ValueError(f"empty key in {tok!r}")
        out[key] = val
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="chslab",
        description="Spectral laboratory for a higher-order two-component "
                    "shallow water system.",
        epilog="Any extra --key value pairs override config file entries.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="FILE", default=None,
                    help="flat key = value configuration file")
    ap.add_argument("--out", metavar="DIR", required=True,
                    help="artifact directory (created if missing)")
    args, extra = ap.parse_known_args(argv)

    try:
        overrides = _parse_overrides(extra)
    except ValueError as exc:
        print(f"chslab: {exc}", file=sys.stderr)
        return 2

    text = ""
    if args.config is not None:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"chslab: cannot read config: {exc}", file=sys.stderr)
            return 2

    try:
        cfg = parse_config(text, args.command, args.out, overrides)
    except ConfigError as exc:
        print(exc.report(), file=sys.stderr)
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())

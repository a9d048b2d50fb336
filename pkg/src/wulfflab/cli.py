"""Command line entry point.

    wulfflab <task> --manifest m.json [--quick] [--out DIR]
    wulfflab twisted qtilde --n 2 --tol 1e-8
    wulfflab twisted solve --domain d.json --norm n.json --q 1.0
    wulfflab eigen --domain d.json --norm n.json --p 1.1 --which 1
    wulfflab sweep --domain d.json --norm n.json --p 1.5,1.2,1.1,1.05 --out sweep.csv
    wulfflab reproduce-all [--quick] [--out DIR]

Exit codes: 0 success, 1 failed acceptance checks, 2 configuration error,
3 solver error. Errors are printed (and written to ``error.json``) as JSON.
"""
from __future__ import annotations

import argparse
import contextlib
import filecmp
import json
import logging
import subprocess
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import acceptance, io
from .cheeger import cheeger_touches_boundary, convex_planar_h1_oracle, solve_h1
from .config import TASKS, ExperimentManifest, SolverConfig
from .eigen import solve_lambda1, solve_lambda2, sweep_p
from .errors import BadExponent, ConfigError, InvalidP, SolverError, WulffLabError
from .geometry import Polygon, domain_from_spec
from .norms import NormDescriptor, kappa, verify_identities, wulff_measure, wulff_perimeter
from .partition import solve_h2, solve_hk
from .twisted import find_q_tilde, solve_twisted

log = logging.getLogger("wulfflab")

SWEEP_COLUMNS = ["p", "lambda1", "lambda2", "h1", "h2", "margin1", "margin2"]


def _load_json(path, field):
    if isinstance(path, dict):
        return path
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc.msg}", field=field) from None


def _norm(man):
    if not man.norm:
        return NormDescriptor.euclidean(2)
    with _scoped("norm"):
        return NormDescriptor.from_json(_load_json(man.norm, "norm"))


def _domain(man, norm, quick):
    spec = _load_json(man.domain, "domain")
    with _scoped("domain"):
        return spec, domain_from_spec(spec, norm, coarsen_by=2 if quick else 1)


@contextlib.contextmanager
def _scoped(prefix):
    """Qualify config errors raised while parsing a sub-spec with its manifest key."""
    try:
        yield
    except ConfigError as exc:
        if exc.field and exc.field != prefix and not exc.field.startswith(prefix + "."):
            exc.field = f"{prefix}.{exc.field}"
        elif not exc.field:
            exc.field = prefix
        raise


def _param(params, key, default=None, cast=float):
    if key not in params:
        if default is None:
            raise ConfigError(f"missing task parameter {key!r}", field=f"params.{key}")
        return default
    try:
        return cast(params[key])
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}", field=f"params.{key}") from None


def _p_list(v):
    if isinstance(v, str):
        v = v.split(",")
    return [float(x) for x in v]


def run(man, out, quick=False):
    """Execute one manifest; return the result record (also written to ``out``)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = man.solver_config()
    norm = _norm(man)
    params = man.params
    task = man.task
    is_qtilde = task == "qtilde" or (task == "twisted" and params.get("mode") == "qtilde")
    res = {"task": task, "norm": norm.to_json(), "solver": cfg.to_json(), "quick": quick}

    if task == "norm-check":
        rep = verify_identities(norm, int(_param(params, "samples", 1000)), cfg.seed)
        res.update(residuals=rep.residuals, passes=rep.passes())
    elif task == "wulff":
        radii = _param(params, "radii", [1.0], cast=lambda v: [float(x) for x in v])
        k = kappa(norm)
        rows = [{"r": r, "perimeter": wulff_perimeter(norm, r), "measure": wulff_measure(norm, r),
                 "formula": norm.n * k * r ** (norm.n - 1)} for r in radii]
        res.update(kappa=k, shapes=rows)
    elif is_qtilde:
        n = int(_param(params, "n", 2, cast=int))
        tol = _param(params, "tol", 1e-10)
        r = find_q_tilde(n, tol=tol)
        res.update(r.to_json())
        io.write_csv(out / "qtilde.csv", [dict(q=q, t=t, phi=v, branch=b) for q, t, v, b in r.scan],
                     ["q", "t", "phi", "branch"])
        io.svg_line_plot(out / "qtilde.svg", [("t*", [s[0] for s in r.scan], [s[1] for s in r.scan])],
                         "q", "t*", f"global minimiser of phi, n = {n}", hlines=[("t = 1/2", 0.5)])
    else:
        spec, dom = _domain(man, norm, quick)
        res["domain"] = {"spec": spec, **dom.to_json(), "measure": dom.measure, "cells": dom.cell_count}
        io.write_pgm(out / "domain.pgm", dom.mask)
        if task == "cheeger1":
            r = solve_h1(dom, norm, cfg)
            res.update(r.to_json(), touches_boundary=cheeger_touches_boundary(r))
            if spec.get("kind") == "polygon":
                poly = Polygon(tuple(map(tuple, spec["vertices"])))
                if poly.is_convex():
                    res["convex_oracle"] = convex_planar_h1_oracle(poly, norm)
            io.write_pgm(out / "cheeger_set.pgm", io.label_image(dom, r.set.cells))
        elif task == "cheeger2":
            r = solve_h2(dom, norm, cfg)
            res.update(r.to_json())
            io.write_pgm(out / "pair.pgm", io.label_image(dom, r.pair.first.cells, r.pair.second.cells))
        elif task == "hk":
            k = int(_param(params, "k", cast=int))
            r = solve_hk(dom, norm, k, cfg)
            res.update(r.to_json(), satisfies_bound=r.satisfies_bound)
            io.write_pgm(out / "sets.pgm", io.label_image(dom, *[s.cells for s in r.sets]))
        elif task == "eigen":
            p = _param(params, "p")
            which = int(_param(params, "which", 1, cast=int))
            if which not in (1, 2):
                raise ConfigError("which must be 1 or 2", field="params.which")
            r = solve_lambda1(dom, norm, p, cfg) if which == 1 else solve_lambda2(dom, norm, p, cfg)
            res.update(r.to_json(), which=which)
            io.write_pgm(out / "eigenfunction.pgm", r.eigenfunction.values)
        elif task == "sweep":
            ps = _param(params, "p", [1.5, 1.2, 1.1, 1.05], cast=_p_list)
            s = sweep_p(dom, norm, ps, cfg)
            res.update(s.to_json(), monotone1=s.monotone(1), monotone2=s.monotone(2))
            io.write_csv(out / "sweep.csv", s.rows(), SWEEP_COLUMNS)
            io.svg_line_plot(out / "sweep.svg",
                             [("lambda1", s.p_list, s.lambda1_list), ("lambda2", s.p_list, s.lambda2_list)],
                             "p", "lambda", "eigenvalues along the p sweep",
                             hlines=[("h1", s.h1), ("h2", s.h2)])
        elif task == "twisted":
            q = _param(params, "q", 1.0)
            r = solve_twisted(dom, norm, q, cfg)
            res.update(r.to_json())
            io.write_pgm(out / "twisted_pair.pgm", io.label_image(dom, r.pair.first.cells, r.pair.second.cells))
    name = "qtilde" if is_qtilde else task
    io.write_json(out / f"{name}.json", res)
    return res


# ---------------------------------------------------------------------------
# acceptance orchestration


def _run_check(args):
    k, quick = args
    c = acceptance.run_check(acceptance.CHECKS[k], quick)
    return c


def _summary(checks, quick):
    lines = ["# Acceptance summary", "",
             f"mode: {'quick (coarse grids, verdicts indicative only)' if quick else 'full'}", "",
             "| # | check | result | tolerance | notes |", "|---|---|---|---|---|"]
    for c in checks:
        lines.append(f"| {c.id} | {c.name} | {'PASS' if c.passed else 'FAIL'} | {c.tolerance} | {c.notes} |")
    lines.append("")
    for c in checks:
        lines += [f"## {c.id}. {c.name}", "", "expected:", "```",
                  io.dumps(c.expected).strip(), "```", "measured:", "```", io.dumps(c.measured).strip(), "```", ""]
    return "\n".join(lines)


def determinism_check(quick=True):
    """Run the quick suite twice in fresh processes and compare every output byte for byte."""
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "a", Path(tmp) / "b"]
        for d in dirs:
            cmd = [sys.executable, "-m", "wulfflab.cli", "reproduce-all", "--no-determinism", "--out", str(d)]
            if quick:
                cmd.insert(4, "--quick")
            subprocess.run(cmd, check=False, capture_output=True)
        files = sorted(p.name for p in dirs[0].iterdir() if p.name != "timings.json")
        other = sorted(p.name for p in dirs[1].iterdir() if p.name != "timings.json")
        same = files == other and all(filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False) for f in files)
        diff = [f for f in files if f in other and not filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False)]
    return acceptance.Check(12, "determinism of reproduce-all", bool(same and files),
                            {"files_compared": files, "differing": diff},
                            {"differing": []}, "byte-identical", float("inf"),
                            "two quick runs in separate processes; timings.json excluded")


def reproduce_all(out, quick=False, threads=1, determinism=True):
    """Run the acceptance checks, write per-check JSON, timings and a markdown summary."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(k, quick) for k in range(len(acceptance.CHECKS))]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            checks = list(ex.map(_run_check, jobs))
    else:
        checks = [_run_check(j) for j in jobs]
    if determinism:
        checks.append(determinism_check(quick=True))
    timings = {}
    for c in checks:
        io.write_json(out / f"check_{c.id:02d}.json", c.to_json())
        timings[f"check_{c.id:02d}"] = {"runtime_s": c.runtime, "limit_s": c.runtime_limit,
                                        "within_limit": c.runtime <= c.runtime_limit}
    io.write_json(out / "timings.json", timings)
    (out / "summary.md").write_text(_summary(checks, quick) + "\n")
    return checks


# ---------------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="wulfflab", description="Anisotropic Cheeger constants and p-Laplacian eigenvalues.")
    ap.add_argument("task", choices=TASKS + ("reproduce-all",))
    ap.add_argument("mode", nargs="?", choices=("qtilde", "solve"), help="twisted sub-mode")
    ap.add_argument("--manifest")
    ap.add_argument("--domain")
    ap.add_argument("--norm")
    ap.add_argument("--out", default=None)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--no-determinism", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("--seed", type=int)
    for name, typ in (("p", str), ("q", float), ("n", int), ("tol", float), ("k", int), ("which", int)):
        ap.add_argument(f"--{name}", type=typ)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _manifest_from_args(a):
    if a.manifest:
        man = ExperimentManifest.load(a.manifest)
        if man.task != a.task and not (a.task == "twisted" and man.task == "qtilde"):
            raise ConfigError(f"manifest task {man.task!r} does not match command {a.task!r}", field="task")
    else:
        man = ExperimentManifest(task=a.task, domain=a.domain, norm=a.norm,
                                 params={"mode": a.mode} if a.mode else {})
    for key in ("p", "q", "n", "tol", "k", "which"):
        v = getattr(a, key)
        if v is not None:
            man.params[key] = v
    if a.mode:
        man.params["mode"] = a.mode
    if a.seed is not None:
        man.solver["seed"] = a.seed
    return man


def _fail(exc, out, code):
    field = getattr(exc, "field", None)
    if field is None and isinstance(exc, BadExponent):
        field = "params.p" if isinstance(exc, InvalidP) else "params.q"
    err = {"error": type(exc).__name__, "message": str(exc), "field": field}
    text = io.dumps(err)
    sys.stdout.write(text)
    if out is not None:
        try:
            io.write_json(Path(out) / "error.json", err)
        except OSError:
            pass
    return code


def main(argv=None):
    a = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(message)s")
    out = a.out
    try:
        if a.task == "reproduce-all":
            threads = SolverConfig().threads
            checks = reproduce_all(out or "reproduce", a.quick, threads, determinism=not a.no_determinism)
            for c in checks:
                print(f"[{'PASS' if c.passed else 'FAIL'}] {c.id:2d} {c.name}")
            return 0 if all(c.passed for c in checks) else 1
        man = _manifest_from_args(a)
        if out is None:
            out = man.output
        # a CSV path for --out means "directory of that file"
        if out.endswith(".csv") or out.endswith(".json"):
            out = str(Path(out).parent)
        res = run(man, out, a.quick)
        print(io.dumps({k: v for k, v in res.items() if not isinstance(v, (list, dict)) or k == "lower_bounds"}), end="")
        return 0
    except ConfigError as exc:
        return _fail(exc, out, 2)
    except ValueError as exc:
        # bad exponents, radii etc. given on the command line are input errors
        return _fail(exc, out, 2)
    except (SolverError, WulffLabError) as exc:
        return _fail(exc, out, 3)


if __name__ == "__main__":
    sys.exit(main())

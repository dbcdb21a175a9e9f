"""Command-line front end.

`anaprox <command> --config <path> [--grid-out <path>] [--report-out <path>]
[--budget-scale <float>] [--plot-out <path>]`

Configs and reports are JSON; dense evaluation grids are CSV with header
``t,g,g1,...,gk,f,err0,...,errk``.  Exit codes: 0 all certificates pass,
1 certificate failure, 2 config error, 3 numerical failure.  Output
files are written atomically (write to a temp name, then rename).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, domains, whitney
from .errors import (AnaproxError, ConfigError, EvaluationDomainError,
                     GlueError, LambdaSearchError, ParseError,
                     QuadratureError)
from .fnspec import PiecewiseFn, parse_expr
from .jetfn import as_jet_fn
from .mollify import MollifiedFn, QuadratureCfg, find_lambda
from .seminorm import CompactSet, GridConfig, seminorm

COMMANDS = ("mollify", "whitney", "ray", "adaptive", "separate",
            "eventual", "carleman", "eval-complex")

SCHEMAS = {
    "mollify": {
        "function": "piecewise function document or {'expr': str}",
        "support": "[p, q] or list of bands",
        "lambda": "positive real (or use 'search')",
        "search": "{'r': int, 'delta': float, 'S': [u, v] (optional)}",
        "grid": "{'from': u, 'to': v, 'points': int, 'order': int}",
    },
    "whitney": {
        "function": "piecewise function document or {'expr': str}",
        "exhaustion": "{'a': decreasing reals, 'b': increasing reals}",
        "eps": "per-annulus tolerances, positive",
        "r": "per-annulus derivative orders",
        "stages": "stage count N",
        "analytic_control": "bool, enables the c_m = 2^-m schedule",
        "grid": "optional evaluation grid",
    },
    "ray": {
        "function": "piecewise function document or {'expr': str}",
        "b": "increasing boundary points, at least stages+5",
        "eps": "per-annulus tolerances",
        "r": "per-annulus derivative orders",
        "stages": "optional stage count N",
        "grid": "optional evaluation grid",
    },
    "adaptive": {
        "function": "piecewise function document or {'expr': str}",
        "eps": "positive number or {'expr': str} pointwise tolerance",
        "b": "ray start",
        "horizon": "ray end for all certificates",
        "r": "maximal derivative order",
        "grid": "optional evaluation grid",
    },
    "separate": {
        "lower": "function document or {'expr': str}",
        "upper": "function document, strictly above lower",
        "b": "ray start",
        "horizon": "ray end",
        "grid": "optional evaluation grid",
    },
    "eventual": {
        "function": "piecewise function document",
        "ladder": "a_n where the function becomes C^n",
        "eps": "positive number or {'expr': str}",
        "K": "maximal derivative order",
        "horizon": "ray end",
        "grid": "optional evaluation grid",
    },
    "carleman": {
        "function": "piecewise function document or {'expr': str}",
        "eps": "positive number or {'expr': str}",
        "r": "derivative order controlled everywhere",
        "N": "exhaustion truncation (window [-log(N-1), log(N-1)])",
        "grid": "optional evaluation grid",
    },
    "eval-complex": {
        "function": "piecewise function document or {'expr': str}",
        "eps": "positive number or {'expr': str}",
        "r": "derivative order for the underlying run",
        "N": "exhaustion truncation",
        "points": "complex points as [re, im] pairs",
        "domain": "optional {'kind': 'Sector'|'V', ...}; default U_n family",
    },
}


# ---------------------------------------------------------------------------
# config helpers

def _require(cfg, key, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing required field {key!r}", field=key)
    v = cfg[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"field {key!r} has wrong type", field=key)
    return v


def _load_function(doc, field="function"):
    if isinstance(doc, str):
        try:
            return PiecewiseFn([(-math.inf, math.inf, doc)])
        except ParseError as e:
            raise ConfigError(f"bad expression in {field!r}: {e}", field=field)
    if not isinstance(doc, dict):
        raise ConfigError(f"field {field!r} must be an expression or document",
                          field=field)
    try:
        if "pieces" in doc:
            return PiecewiseFn.from_document(doc)
        if "expr" in doc:
            lo = float(doc.get("from", -math.inf))
            hi = doc.get("to", math.inf)
            hi = math.inf if hi == "inf" else float(hi)
            return PiecewiseFn([(lo, hi, doc["expr"])])
    except (ParseError, ValueError) as e:
        raise ConfigError(f"bad function in {field!r}: {e}", field=field)
    raise ConfigError(f"field {field!r} needs 'pieces' or 'expr'", field=field)


def _load_eps(doc, field="eps"):
    if isinstance(doc, (int, float)):
        if doc <= 0:
            raise ConfigError("tolerance must be positive", field=field)
        return float(doc)
    if isinstance(doc, dict) and "expr" in doc:
        try:
            return parse_expr(doc["expr"])
        except ParseError as e:
            raise ConfigError(f"bad tolerance expression: {e}", field=field)
    raise ConfigError(f"field {field!r} must be a number or expression",
                      field=field)


def _eps_list(cfg, field="eps"):
    eps = _require(cfg, field, list)
    if any(not isinstance(e, (int, float)) or e <= 0 for e in eps):
        raise ConfigError(f"all entries of {field!r} must be positive",
                          field=field)
    return [float(e) for e in eps]


def _grid_spec(cfg, default_span, max_order):
    g = cfg.get("grid") or {}
    lo = float(g.get("from", default_span[0]))
    hi = float(g.get("to", default_span[1]))
    pts = int(g.get("points", 513))
    order = int(g.get("order", max_order))
    if not (lo < hi and pts >= 2):
        raise ConfigError("bad grid specification", field="grid")
    return np.linspace(lo, hi, pts), order


def _make_grid(f, g, ts, order):
    gj = as_jet_fn(g).jets(ts, order)
    fj = as_jet_fn(f).jets(ts, order)
    return {"ts": ts, "g": gj, "f": fj[:, 0], "err": fj - gj, "order": order}


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path, grid):
    k = grid["order"]
    header = ["t", "g"] + [f"g{j}" for j in range(1, k + 1)] + ["f"] + \
        [f"err{j}" for j in range(k + 1)]
    rows = np.column_stack([grid["ts"], grid["g"], grid["f"], grid["err"]])
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# command handlers; each returns (certificates: list, passed, grid, extras)

def _budget(scale):
    return (GridConfig().scaled(scale),
            QuadratureCfg(check=False).scaled(scale))


def run_mollify(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    support = _require(cfg, "support", list)
    grid_cfg, _ = _budget(scale)
    quad_cfg = QuadratureCfg(check=True).scaled(scale)
    certs = []
    if "lambda" in cfg:
        lam = float(cfg["lambda"])
        if lam <= 0:
            raise ConfigError("lambda must be positive", field="lambda")
        g = MollifiedFn(f, support, lam, quad_cfg)
    elif "search" in cfg:
        s = cfg["search"]
        r = int(_require(s, "r"))
        delta = float(_require(s, "delta"))
        S = CompactSet.interval(*s["S"]) if "S" in s else None
        res = find_lambda(f, support, r, delta, S=S, cfg=quad_cfg,
                          grid_cfg=grid_cfg)
        g = res.mollified
        certs.append({"name": "lambda search: ||I_lam(f) - f||_r < delta",
                      "measured": res.measured.value, "target": delta,
                      "passed": bool(res.measured.value < delta),
                      "grid_points": res.measured.grid_points,
                      "lambda": res.lam, "ladder_steps": res.steps})
    else:
        raise ConfigError("need 'lambda' or 'search'", field="lambda")
    hull = (g.support[0] - 1.0, g.support[1] + 1.0)
    ts, order = _grid_spec(cfg, hull, int(cfg.get("search", {}).get("r", 0)))
    grid = _make_grid(f, g, ts, order)
    passed = all(c["passed"] for c in certs) if certs else True
    return certs, passed, grid, {"lambda": g.lam}


def _cert_docs(cert):
    doc = cert.to_document()
    return doc["annuli"] + doc["checks"], doc["passed"]


def run_whitney(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    exd = _require(cfg, "exhaustion", dict)
    ex = whitney.Exhaustion(_require(exd, "a", list), _require(exd, "b", list))
    eps = _eps_list(cfg)
    r = [int(k) for k in _require(cfg, "r", list)]
    N = int(_require(cfg, "stages"))
    sched = whitney.normalize_schedule(eps, r)
    grid_cfg, quad_cfg = _budget(scale)
    ctrl = (lambda n: 2.0 ** (-n)) if cfg.get("analytic_control") else None
    appr, cert = whitney.build(f, ex, sched, N, analytic_ctrl=ctrl,
                               grid_cfg=grid_cfg, quad_cfg=quad_cfg)
    certs, passed = _cert_docs(cert)
    ts, order = _grid_spec(cfg, ex.K(min(N, len(ex) - 1)), max(sched.r))
    grid = _make_grid(f, appr, ts, order)
    return certs, passed, grid, {"lambdas": appr.lams, "deltas": appr.deltas}


def run_ray(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    b = [float(x) for x in _require(cfg, "b", list)]
    eps = _eps_list(cfg)
    r = [int(k) for k in _require(cfg, "r", list)]
    N = int(cfg["stages"]) if "stages" in cfg else None
    grid_cfg, quad_cfg = _budget(scale)
    appr, cert = whitney.ray_approx(f, b, eps, r, N, grid_cfg=grid_cfg,
                                    quad_cfg=quad_cfg)
    certs, passed = _cert_docs(cert)
    span = (b[0], b[appr.N])
    ts, order = _grid_spec(cfg, span, max(appr.sched.r))
    grid = _make_grid(f, appr, ts, order)
    return certs, passed, grid, {"lambdas": appr.lams}


def run_adaptive(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    eps = _load_eps(_require(cfg, "eps"))
    b = float(_require(cfg, "b"))
    horizon = float(_require(cfg, "horizon"))
    r = int(_require(cfg, "r"))
    grid_cfg, quad_cfg = _budget(scale)
    appr, cert = whitney.pointwise_adaptive(f, eps, b, horizon, r,
                                            grid_cfg=grid_cfg,
                                            quad_cfg=quad_cfg)
    certs, passed = _cert_docs(cert)
    ts, order = _grid_spec(cfg, (b, horizon), max(appr.sched.r))
    grid = _make_grid(f, appr, ts, order)
    return certs, passed, grid, {}


def run_separate(cfg, scale):
    lower = _load_function(_require(cfg, "lower"), "lower")
    upper = _load_function(_require(cfg, "upper"), "upper")
    b = float(_require(cfg, "b"))
    horizon = float(_require(cfg, "horizon"))
    grid_cfg, quad_cfg = _budget(scale)
    y, cert = whitney.separate(lower, upper, b, horizon,
                               grid_cfg=grid_cfg, quad_cfg=quad_cfg)
    certs, passed = _cert_docs(cert)
    ts, order = _grid_spec(cfg, (b, horizon), 0)
    mid = whitney._Midpoint(lower, upper)
    grid = _make_grid(mid, y, ts, order)
    return certs, passed, grid, {}


def run_eventual(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    ladder = [float(x) for x in _require(cfg, "ladder", list)]
    eps = _load_eps(_require(cfg, "eps"))
    K = int(_require(cfg, "K"))
    horizon = float(_require(cfg, "horizon"))
    grid_cfg, quad_cfg = _budget(scale)
    g, chain = whitney.eventual_approx(f, ladder, eps, K, horizon,
                                       grid_cfg=grid_cfg, quad_cfg=quad_cfg)
    doc = chain.certificate.to_document()
    certs, passed = doc["checks"], doc["passed"]
    ts, order = _grid_spec(cfg, (ladder[0], horizon), K)
    grid = _make_grid(f, g, ts, order)
    return certs, passed, grid, {"stage_starts": chain.stage_starts}


def _run_carleman_core(cfg, scale):
    f = _load_function(_require(cfg, "function"))
    eps = _load_eps(_require(cfg, "eps"))
    r = int(_require(cfg, "r"))
    N = int(_require(cfg, "N"))
    grid_cfg, quad_cfg = _budget(scale)
    return domains.carleman(f, eps, r, N, grid_cfg=grid_cfg,
                            quad_cfg=quad_cfg), f, r, N


def run_carleman(cfg, scale):
    (appr, handle, cert), f, r, N = _run_carleman_core(cfg, scale)
    certs, passed = _cert_docs(cert)
    w = math.log(N - 1)
    ts, order = _grid_spec(cfg, (-w, w), r)
    grid = _make_grid(f, appr, ts, order)
    return certs, passed, grid, {"lambdas": appr.lams,
                                 "window": [-w, w]}


def run_eval_complex(cfg, scale):
    (appr, handle, cert), f, r, N = _run_carleman_core(cfg, scale)
    certs, passed = _cert_docs(cert)
    dom = None
    if "domain" in cfg:
        dd = cfg["domain"]
        kind = _require(dd, "kind")
        if kind == "Sector":
            dom = domains.DomainSpec.Sector(float(_require(dd, "a")))
        elif kind == "V":
            dom = domains.DomainSpec.V(float(_require(dd, "alpha")),
                                       float(_require(dd, "beta")))
        else:
            raise ConfigError(f"unknown domain kind {kind!r}", field="domain")
    points = _require(cfg, "points", list)
    evaluations = []
    for p in points:
        z = complex(float(p[0]), float(p[1]))
        value, tail = handle(z, dom)
        evaluations.append({
            "z": [z.real, z.imag],
            "value": [value.real, value.imag],
            "tail_rho": tail.rho,
            "tail_bound": None if math.isinf(tail.bound) else tail.bound,
            "tail_policy": tail.policy,
        })
    return certs, passed, None, {"evaluations": evaluations}


HANDLERS = {
    "mollify": run_mollify, "whitney": run_whitney, "ray": run_ray,
    "adaptive": run_adaptive, "separate": run_separate,
    "eventual": run_eventual, "carleman": run_carleman,
    "eval-complex": run_eval_complex,
}


# ---------------------------------------------------------------------------
# entry point

def _describe(name):
    if name is None:
        print("commands: " + " ".join(COMMANDS))
        return 0
    if name not in SCHEMAS:
        print(f"unknown command {name!r}", file=sys.stderr)
        return 2
    print(f"{name} config fields:")
    for k, v in SCHEMAS[name].items():
        print(f"  {k}: {v}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="anaprox",
        description="analytic approximation with derivative control")
    parser.add_argument("command", choices=COMMANDS + ("describe",))
    parser.add_argument("topic", nargs="?", help="command for describe")
    parser.add_argument("--config")
    parser.add_argument("--grid-out")
    parser.add_argument("--report-out")
    parser.add_argument("--plot-out")
    parser.add_argument("--budget-scale", type=float, default=1.0)
    args = parser.parse_args(argv)

    if args.command == "describe":
        return _describe(args.topic)
    if not args.config:
        print("--config is required", file=sys.stderr)
        return 2

    t0 = time.monotonic()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        certs, passed, grid, extras = HANDLERS[args.command](
            cfg, args.budget_scale)
    except (ConfigError, ParseError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except GlueError as e:
        print(f"certificate failure: {e}", file=sys.stderr)
        return 1
    except (LambdaSearchError, QuadratureError, EvaluationDomainError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except AnaproxError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3

    report = {
        "version": __version__,
        "command": args.command,
        "config": cfg,
        "budget_scale": args.budget_scale,
        "passed": bool(passed),
        "certificates": certs,
        **extras,
    }
    report["timing_seconds"] = round(time.monotonic() - t0, 3)
    full = json.dumps(report, sort_keys=True, indent=2)
    if args.report_out:
        _atomic_write(args.report_out, full + "\n")
    else:
        print(full)
    if args.grid_out:
        if grid is None:
            print("no grid output for this command", file=sys.stderr)
        else:
            _write_csv(args.grid_out, grid)
    if args.plot_out and grid is not None:
        from .plots import render_grid
        k = grid["order"]
        render_grid(args.plot_out, grid["ts"],
                    [grid["g"][:, j] for j in range(k + 1)],
                    grid["f"], [grid["err"][:, j] for j in range(k + 1)],
                    annuli=[c for c in certs if "region" in c],
                    title=args.command)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())

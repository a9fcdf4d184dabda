"""``hardylab`` command-line front end.

Exit codes: 0 success, 1 numerical failure (a violated invariant or a solver
error), 2 usage error.  Every option may also come from a JSON file passed
with ``--config``; explicit flags override it.  CSV floats are written with
12 significant digits, so identical configurations give identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .radial import AngularMode, ClassicalBall, ClassicalWholeSpace, CriticalDisk
from .rearrangement import LorentzParams, load_step_csv, lorentz_norm
from .spectral import DEFAULT_H, DEFAULT_T, ModeProblem, minimize_lq_quotient, sharp_constant
from .testfunctions import (FABall, FAWholeSpace, UAlpha, VM, dirichlet_energy, make_family,
                            quotient, transform_u_lambda, weighted_lq)
from .verifiers import SUITES, TrialConfig, run_suite

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "sharp": {"geometry": "critical-disk", "a": math.e, "dim": None, "k": 1, "q": 2.0,
              "T_list": list(DEFAULT_T), "h_list": list(DEFAULT_H), "k_max": 3,
              "output": None},
    "sweep": {"a_grid": None, "family": None, "alpha": None, "m": None, "exp": None,
              "lam": None, "a": 1.0, "dim": None, "T_list": list(DEFAULT_T),
              "h_list": list(DEFAULT_H), "k_max": 3, "output": None, "emit_gnuplot": False},
    "quotient": {"family": "u_alpha", "alpha": 0.55, "m": 100, "exp": 1.0, "lam": 0.5,
                 "a": 1.0, "dim": None, "q": 2.0, "method": "auto", "append": None},
    "verify": {"suite": "all", "trials": 1000, "seed": 0, "format": "json", "output": None},
    "lorentz": {"input": None, "p": 2.0, "q": 2.0, "dim": 2},
}

CSV_SWEEP = "a,value,T,h,mode"
CSV_FAMILY = "family,param,a,numerator,denominator,quotient,err"


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """12 significant digits in scientific notation."""
    return f"{x:.11e}"


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    items = [s for s in str(text).split(",") if s.strip()]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _threads() -> int:
    raw = os.environ.get("HARDYLAB_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise UsageError("HARDYLAB_THREADS must be an integer") from None
    return max(1, n)


def _ordered_map(fn, items):
    """Map preserving input order; results are emitted by the caller only."""
    items = list(items)
    n = min(_threads(), len(items)) or 1
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# geometry / family helpers
# --------------------------------------------------------------------------


def _geometry(name: str, a, dim):
    if name == "critical-disk":
        if dim not in (None, 2):
            raise UsageError("critical-disk is planar: --dim must be 2")
        return CriticalDisk(float(a))
    N = 3 if dim is None else int(dim)
    if name == "classical-ball":
        return ClassicalBall(N)
    if name == "whole-space":
        return ClassicalWholeSpace(N)
    raise UsageError(f"unknown geometry {name!r}")


def _family_spec(family: str, param: float, cfg: dict):
    if family == "u_alpha":
        return UAlpha(param, float(cfg["a"])), CriticalDisk(max(float(cfg["a"]), 1.0))
    if family == "v_m":
        N = int(cfg["dim"] or 3)
        if param != int(param):
            raise UsageError("m must be an integer")
        return VM(int(param), N), ClassicalBall(N)
    if family == "f_a_ball":
        N = int(cfg["dim"] or 2)
        return FABall(param, N), ClassicalBall(N)
    if family == "f_a_whole":
        N = int(cfg["dim"] or 3)
        return FAWholeSpace(param, N), ClassicalWholeSpace(N)
    raise UsageError(f"unknown family {family!r}")


FAMILY_PARAM = {"u_alpha": "alpha", "v_m": "m", "f_a_ball": "exp", "f_a_whole": "exp",
                "u_lambda": "lam"}


def _family_row(family: str, param: float, cfg: dict):
    if family == "u_lambda":
        rep = _u_lambda_report(param, float(cfg["a"]), 2.0)
        t = rep["transformed"]
        return (family, param, float(cfg["a"]), t["energy"], t["weighted"],
                t["energy"] / t["weighted"], 0.0)
    spec, geo = _family_spec(family, param, cfg)
    prof, mode = make_family(spec)
    r = quotient(prof, geo, mode)
    a = geo.a if isinstance(geo, CriticalDisk) else float("nan")
    return family, param, a, r.numerator, r.denominator, r.quotient, r.err


def _u_lambda_report(lam: float, a: float, q: float) -> dict:
    if not a > 1:
        raise ValueError("a must exceed 1")
    base, _ = make_family(UAlpha(1.0, a))
    img = transform_u_lambda(base, lam, a)
    out = {}
    for key, prof in (("base", base), ("transformed", img)):
        out[key] = {"energy": dirichlet_energy(prof), "weighted": weighted_lq(prof, a, q),
                    "support_radius": prof.R}
    eb, et = out["base"]["energy"], out["transformed"]["energy"]
    wb, wt = out["base"]["weighted"], out["transformed"]["weighted"]
    out.update({"lambda": lam, "a": a, "q": q,
                "energy_rel_diff": abs(et - eb) / eb, "weighted_rel_diff": abs(wt - wb) / wb})
    return out


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_sharp(cfg: dict) -> int:
    if cfg["geometry"] == "critical-disk" and not float(cfg["a"]) > 1:
        raise ValueError("a must exceed 1")
    geo = _geometry(cfg["geometry"], cfg["a"], cfg["dim"])
    q = float(cfg["q"])
    if q > 2:
        if not isinstance(geo, CriticalDisk):
            raise UsageError("q > 2 is only available for critical-disk")
        res = minimize_lq_quotient(geo.a, q)
        out = {"geometry": "critical-disk", "a": geo.a, "q": q, "value": res.value,
               "upper_bound": True, "iterations": len(res.trace) - 1}
        _emit(json.dumps(out, indent=2) + "\n", cfg["output"])
        return EXIT_OK
    T, h = _floats(cfg["T_list"]), _floats(cfg["h_list"])
    if len(T) != len(h) or not T:
        raise UsageError("T-list and h-list must be nonempty and of equal length")
    est = sharp_constant(ModeProblem(geo, int(cfg["k"])), T, h, k_max=int(cfg["k_max"]))
    _emit(est.to_json(indent=2) + "\n", cfg["output"])
    return EXIT_OK if est.ok else EXIT_NUMERIC


def cmd_sweep(cfg: dict) -> int:
    if cfg["family"]:
        fam = cfg["family"]
        if fam not in FAMILY_PARAM:
            raise UsageError(f"unknown family {fam!r}")
        key = FAMILY_PARAM[fam]
        params = _floats(cfg[key]) if cfg[key] is not None else []
        if not params:
            raise UsageError(f"--{key} grid is empty")
        rows = _ordered_map(lambda p: _family_row(fam, p, cfg), params)
        lines = [CSV_FAMILY] + [
            ",".join([r[0], fmt(r[1]), fmt(r[2])] + [fmt(v) for v in r[3:]]) for r in rows]
        ok = True
    else:
        grid = sorted(set(_floats(cfg["a_grid"] or [])), reverse=True)
        if not grid:
            raise UsageError("a-grid is empty")
        if grid[-1] <= 1:
            raise ValueError("a must exceed 1")
        T, h = _floats(cfg["T_list"]), _floats(cfg["h_list"])

        def run(a):
            return sharp_constant(ModeProblem(CriticalDisk(a), 1), T, h, k_max=int(cfg["k_max"]))

        ests = _ordered_map(run, grid)
        lines = [CSV_SWEEP] + [
            f"{fmt(a)},{fmt(e.value)},{fmt(T[-1])},{fmt(h[-1])},{e.mode}"
            for a, e in zip(grid, ests)]
        vals = [e.value for e in ests]
        ok = (all(e.ok for e in ests) and all(v > 0.25 for v in vals)
              and all(x > y for x, y in zip(vals, vals[1:])))
    text = "\n".join(lines) + "\n"
    _emit(text, cfg["output"])
    if cfg["emit_gnuplot"]:
        if not cfg["output"]:
            raise UsageError("--emit-gnuplot needs --output")
        _write_gnuplot(Path(cfg["output"]), bool(cfg["family"]))
    return EXIT_OK if ok else EXIT_NUMERIC


def _write_gnuplot(csv_path: Path, family: bool) -> None:
    xcol, ycol = (2, 6) if family else (1, 2)
    script = "\n".join([
        "set datafile separator ','",
        "set key off",
        "set logscale x" if family else "set xlabel 'a'",
        "set terminal pngcairo size 800,500",
        f"set output '{csv_path.with_suffix('.png').name}'",
        f"plot '{csv_path.name}' every ::1 using {xcol}:{ycol} with linespoints",
        "",
    ])
    csv_path.with_suffix(".gp").write_text(script)


def cmd_quotient(cfg: dict) -> int:
    fam = cfg["family"]
    if fam not in FAMILY_PARAM:
        raise UsageError(f"unknown family {fam!r}")
    param = float(cfg[FAMILY_PARAM[fam]])
    if fam == "u_lambda":
        out = _u_lambda_report(param, float(cfg["a"]), float(cfg["q"]))
        sys.stdout.write(json.dumps(out, indent=2) + "\n")
        row = _family_row(fam, param, cfg) if cfg["append"] else None
    else:
        spec, geo = _family_spec(fam, param, cfg)
        prof, mode = make_family(spec)
        rep = quotient(prof, geo, mode, method=cfg["method"])
        sys.stdout.write(json.dumps(rep.to_dict(), indent=2) + "\n")
        a = geo.a if isinstance(geo, CriticalDisk) else float("nan")
        row = (fam, param, a, rep.numerator, rep.denominator, rep.quotient, rep.err)
    if cfg["append"]:
        path = Path(cfg["append"])
        new = not path.exists() or path.stat().st_size == 0
        with path.open("a") as fh:
            if new:
                fh.write(CSV_FAMILY + "\n")
            fh.write(",".join([row[0], fmt(row[1]), fmt(row[2])] + [fmt(v) for v in row[3:]]) + "\n")
    return EXIT_OK


def _junit(reports) -> str:
    from xml.sax.saxutils import quoteattr
    fails = sum(not r.passed for r in reports)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<testsuite name="hardylab" tests="{len(reports)}" failures="{fails}">']
    for r in reports:
        out.append(f'  <testcase classname="hardylab.verify" name={quoteattr(r.suite)}>')
        if not r.passed:
            msg = f"{r.violations} violations in {r.trials} trials"
            out.append(f"    <failure message={quoteattr(msg)}/>")
        out.append("  </testcase>")
    out.append("</testsuite>")
    return "\n".join(out) + "\n"


def cmd_verify(cfg: dict) -> int:
    names = list(SUITES) if cfg["suite"] == "all" else [s for s in str(cfg["suite"]).split(",") if s]
    unknown = [n for n in names if n not in SUITES]
    if unknown or not names:
        raise UsageError(f"unknown suite {','.join(unknown)!r}; choose from {', '.join(SUITES)}")
    tc = TrialConfig(trials=int(cfg["trials"]), seed=int(cfg["seed"]))
    reports = [run_suite(n, tc) for n in names]
    if cfg["format"] == "junit":
        text = _junit(reports)
    elif cfg["format"] == "json":
        text = json.dumps({"seed": tc.seed, "trials": tc.trials,
                           "suites": [r.to_dict() for r in reports]}, indent=2) + "\n"
    else:
        raise UsageError("format must be json or junit")
    _emit(text, cfg["output"])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NUMERIC


def cmd_lorentz(cfg: dict) -> int:
    if not cfg["input"]:
        raise UsageError("--input is required")
    step = load_step_csv(cfg["input"], int(cfg["dim"]))
    val = lorentz_norm(step, LorentzParams(float(cfg["p"]), float(cfg["q"])))
    if math.isnan(val):
        return EXIT_NUMERIC
    sys.stdout.write(("+inf" if math.isinf(val) else repr(float(f"{val:.12g}"))) + "\n")
    return EXIT_OK


COMMANDS = {"sharp": cmd_sharp, "sweep": cmd_sweep, "quotient": cmd_quotient,
            "verify": cmd_verify, "lorentz": cmd_lorentz}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    top = argparse.ArgumentParser(prog="hardylab", description=__doc__.splitlines()[0])
    top.add_argument("--config", help="JSON file with option values; flags override it")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sharp", argument_default=S, help="sharp constant of one geometry")
    p.add_argument("--geometry", choices=["critical-disk", "classical-ball", "whole-space"])
    p.add_argument("--a", type=float, help="log offset of the critical disk (> 1)")
    p.add_argument("--dim", type=int, help="dimension N for classical geometries (default 3)")
    p.add_argument("--k", type=int, help="lowest angular mode (default 1)")
    p.add_argument("--q", type=float, help="target exponent; q > 2 runs the L^q descent")
    p.add_argument("--T-list", dest="T_list", help="comma-separated truncation lengths")
    p.add_argument("--h-list", dest="h_list", help="comma-separated mesh sizes")
    p.add_argument("--k-max", dest="k_max", type=int, help="highest mode scanned (default 3)")
    p.add_argument("--output")
    _config_flag(p)

    p = sub.add_parser("sweep", argument_default=S, help="a-sweep or test-family sweep to CSV")
    p.add_argument("--a-grid", dest="a_grid", help="comma-separated a values (> 1)")
    p.add_argument("--family", choices=list(FAMILY_PARAM))
    p.add_argument("--alpha")
    p.add_argument("--m")
    p.add_argument("--exp")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--a", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--T-list", dest="T_list")
    p.add_argument("--h-list", dest="h_list")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--output")
    p.add_argument("--emit-gnuplot", dest="emit_gnuplot", action="store_true")
    _config_flag(p)

    p = sub.add_parser("quotient", argument_default=S, help="Rayleigh quotient of a test family")
    p.add_argument("--family", choices=list(FAMILY_PARAM))
    p.add_argument("--alpha", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--exp", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--method", choices=["auto", "exact", "adaptive", "grid"])
    p.add_argument("--append", help="append a row to this sweep CSV")
    _config_flag(p)

    p = sub.add_parser("verify", argument_default=S, help="seeded inequality suites")
    p.add_argument("--suite", help=f"one of {', '.join(SUITES)} or 'all'")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["json", "junit"])
    p.add_argument("--output")
    _config_flag(p)

    p = sub.add_parser("lorentz", argument_default=S, help="Lorentz norm of a step-function CSV")
    p.add_argument("--input")
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float, help="second index; 'inf' for the weak norm")
    p.add_argument("--dim", type=int)
    _config_flag(p)
    return top


def _config_flag(p: argparse.ArgumentParser) -> None:
    # also accepted after the subcommand name
    p.add_argument("--config", help="JSON file with option values; flags override it")


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items() if k != "command"}
        bad = sorted(set(data) - set(cfg))
        if bad:
            raise UsageError(f"unknown config keys for {cmd}: {', '.join(bad)}")
        cfg.update(data)
    cfg.update({k: v for k, v in vars(args).items() if k not in ("command", "config")})
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](resolve(args))
    except np.linalg.LinAlgError as exc:
        print(f"hardylab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"hardylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ArithmeticError) as exc:
        print(f"hardylab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

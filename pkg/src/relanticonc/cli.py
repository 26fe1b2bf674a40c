"""Command-line entry point: ``relanticonc <command> [flags]``.

Exit codes: 0 ok, 1 inequality violation, 2 config/domain error, 3 capability
error, 4 resolution/numeric error. Failures print one line to stderr:
``error code=<n> kind=<kind> reason=<text>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import yaml

from . import bounds as bd
from .config import COMMANDS, INPUT_KEYS, OPTION_KEYS, RunConfig, load_dist, load_yaml, merge, read_vector
from .distributions import DistributionSpec
from .errors import ConfigError, InequalityViolation, LabError
from .estimators import estimate
from .lcd import lcd
from .logconcave import get_density, sector_mass_bound, verify_levelset
from .report import aggregate, dumps, envelope, row, rows_to_csv, write
from .sodin import PipelineScenario, run_pipeline
from .stress import search
from .verify import all_rows, run_verify, sodin_scenarios


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, key="argv")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run config; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--workers", type=int, help="parallel workers (default: core count); results do not depend on it")


def _constant_pairs(items) -> dict:
    out = {}
    for item in items or []:
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}", key="constants")
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"not a number: {v!r}", key=f"constants.{k.strip()}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="relanticonc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("lcd", help="essential least common denominator of a vector")
    p.add_argument("vector", nargs="?", help="vector file, one real per line")
    p.add_argument("--gamma", type=float)
    p.add_argument("--cap", type=float)
    p.add_argument("--tol", type=float)
    _common(p)

    p = sub.add_parser("estimate", help="estimate P{|<alpha,X>| <= |<beta,X>|}")
    p.add_argument("--alpha-file")
    p.add_argument("--beta-file")
    p.add_argument("--dist", help="inline (laplace:b=1) or YAML file")
    p.add_argument("--method", choices=("auto", "exact", "mc"))
    p.add_argument("--samples", type=int)
    p.add_argument("--ci", type=float, help="confidence level")
    p.add_argument("--limit", type=int, help="enumeration limit for exact")
    _common(p)

    p = sub.add_parser("bounds", help="right-hand side of a bound, term by term")
    p.add_argument("--theorem", choices=bd.THEOREMS)
    p.add_argument("--alpha-file")
    p.add_argument("--beta-file")
    p.add_argument("--dist", help="law, for mix_logconcave / mix_uniform")
    p.add_argument("--gamma", type=float)
    p.add_argument("--constant", action="append", metavar="NAME=VALUE")
    p.add_argument("--epsilon", type=float, help="rv_smallball")
    p.add_argument("--lcd-value", type=float, help="rv_smallball, or override the LCD search")
    p.add_argument("--t0", type=float, help="bernstein_tail")
    p.add_argument("--nu", type=float, help="bernstein_tail")
    p.add_argument("--b", type=float, help="bernstein_tail")
    p.add_argument("--a", type=float, help="cauchy_interval")
    p.add_argument("--ell", type=float, help="cauchy_interval")
    _common(p)

    p = sub.add_parser("levelset", help="level-set constants of a planar log-concave density")
    p.add_argument("--density", help="gaussian | uniform-disk | laplace")
    p.add_argument("--resolution", type=int)
    p.add_argument("--theta", type=float, action="append", help="also check the sector-mass bound")
    _common(p)

    p = sub.add_parser("sodin", help="check each inequality of the Fourier pipeline")
    p.add_argument("scenario", nargs="?", help="scenario YAML file")
    p.add_argument("--catalog", help="name of a built-in scenario instead of a file")
    p.add_argument("--samples", type=int)
    _common(p)

    p = sub.add_parser("stress", help="search for pairs with a large estimate/bound ratio")
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--theorem", choices=bd.THEOREMS)
    p.add_argument("--restarts", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--method", choices=("auto", "exact", "mc"))
    p.add_argument("--constant", action="append", metavar="NAME=VALUE")
    p.add_argument("--trace", help="CSV trace path (default: next to --output)")
    _common(p)

    p = sub.add_parser("verify", help="invariant suite and calibration over the built-in catalog")
    p.add_argument("--quick", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("report", help="aggregate JSON reports into one CSV")
    p.add_argument("inputs", nargs="+")
    _common(p)
    return ap


def make_config(ns: argparse.Namespace) -> RunConfig:
    file_cfg = load_yaml(ns.config) if ns.config else {}
    if not isinstance(file_cfg, dict):
        raise ConfigError("config file must hold a mapping", key="config")
    file_cfg = {**file_cfg, "command": file_cfg.get("command", ns.command)}
    if file_cfg["command"] != ns.command:
        raise ConfigError(f"config is for {file_cfg['command']!r}, not {ns.command!r}", key="command")
    v = vars(ns)
    flags = {
        "seed": v.get("seed"),
        "output": v.get("output"),
        "format": v.get("format"),
        "workers": v.get("workers"),
        "inputs": {k: v[k] for k in INPUT_KEYS if v.get(k) is not None},
        "options": {k: v[k] for k in OPTION_KEYS if v.get(k) is not None},
        "constants": _constant_pairs(v.get("constant")),
    }
    if v.get("dist") is not None:
        flags["dist"] = load_dist(v["dist"])
    elif isinstance(file_cfg.get("dist"), (str, dict)):
        file_cfg["dist"] = load_dist(file_cfg["dist"])
    try:
        return RunConfig.from_dict(merge(file_cfg, flags))
    except TypeError as exc:
        raise ConfigError(str(exc), key="config") from None


def _need(cfg: RunConfig, where: str, key: str):
    val = getattr(cfg, where).get(key)
    if val is None:
        raise ConfigError("required", key=f"{where}.{key}")
    return val


def _vectors(cfg):
    a = read_vector(_need(cfg, "inputs", "alpha_file"), "inputs.alpha_file")
    b = read_vector(_need(cfg, "inputs", "beta_file"), "inputs.beta_file")
    return a, b


def _spec(cfg) -> DistributionSpec:
    if cfg.dist is None:
        raise ConfigError("required", key="dist")
    return cfg.spec


# ---- commands ---------------------------------------------------------------------------
def cmd_lcd(cfg):
    o = cfg.options
    a = read_vector(_need(cfg, "inputs", "vector"), "inputs.vector")
    gamma = float(o.get("gamma", math.sqrt(a.n)))
    res = lcd(a, gamma, search_cap=o.get("cap"), tol=float(o.get("tol", cfg.tolerance("lcd_tol"))))
    return envelope("lcd", cfg.effective(), res.to_dict(), statement="lcd"), True


def cmd_estimate(cfg):
    o = cfg.options
    a, b = _vectors(cfg)
    kw = {"n_samples": int(o.get("samples", 100_000)), "seed": cfg.seed, "ci_level": float(o.get("ci", cfg.tolerance("ci_level"))), "workers": cfg.workers}
    if "limit" in o:
        kw["limit"] = int(o["limit"])
    est = estimate(a, b, _spec(cfg), method=o.get("method", "auto"), **kw)
    rows = [row("estimate", est.value, None)]
    return envelope("estimate", cfg.effective(), est.to_dict(), statement="relative-anticoncentration", rows=rows), True


def cmd_bounds(cfg):
    o = cfg.options
    th = _need(cfg, "options", "theorem")
    consts = dict(cfg.constants)
    if th == "cauchy_interval":
        a, ell = float(_need(cfg, "options", "a")), float(_need(cfg, "options", "ell"))
        val = bd.cauchy_interval_bound(a, ell)
        res = {"theorem_id": th, "rhs": val, "exact_mass": bd.cauchy_interval_mass(a, ell), "terms": {"bound": val}}
        return envelope("bounds", cfg.effective(), res, statement=th, rows=[row(f"cauchy(a={a:g},ell={ell:g})", res["exact_mass"], val)]), True
    if th == "rv_smallball":
        rep = bd.rv_smallball_bound(float(_need(cfg, "options", "epsilon")), float(_need(cfg, "options", "lcd_value")), float(_need(cfg, "options", "gamma")),
                                    consts.get("C_p", 1.0), consts.get("c_p", 0.01))
    elif th == "bernstein_tail":
        beta = read_vector(_need(cfg, "inputs", "beta_file"), "inputs.beta_file")
        val = bd.bernstein_tail(float(_need(cfg, "options", "t0")), float(_need(cfg, "options", "nu")), float(_need(cfg, "options", "b")), beta)
        res = {"theorem_id": th, "rhs": val, "terms": {"tail": val}}
        return envelope("bounds", cfg.effective(), res, statement=th, rows=[row("bernstein_tail", None, val)]), True
    else:
        a, b = _vectors(cfg)
        if th in ("mix_logconcave", "mix_uniform"):
            rep = bd.mixture_bounds(th, _spec(cfg), a, b, C=consts.get("C", 1.0))
        elif th == "gaussian":
            rep = bd.gaussian_bound(a, b)
        else:
            rep = bd.theorem_bound(th, a, b, gamma=o.get("gamma"), constants=consts or None, lcd_value=o.get("lcd_value"))
    return envelope("bounds", cfg.effective(), rep.to_dict(), statement=th, constants=rep.constants, rows=[row(th, None, rep.rhs)]), True


def cmd_levelset(cfg):
    o = cfg.options
    p = get_density(_need(cfg, "options", "density"))
    rep = verify_levelset(p, o.get("resolution"), seed=cfg.seed)
    rows = [
        row(f"{p.name}/inradius", 1 / 9, rep.measured_a, passed=rep.contains_a_disk),
        row(f"{p.name}/circumradius", rep.measured_A, 9 * 2.0**16, passed=rep.within_A_disk),
        row(f"{p.name}/peak", rep.peak, 162 / math.pi, passed=rep.peak_in_range),
    ]
    sectors = []
    for th in o.get("theta") or []:
        mass, bound = sector_mass_bound(p, float(th), rep, check=False)
        sectors.append({"theta": float(th), "mass": mass, "bound": bound})
        rows.append(row(f"{p.name}/sector{th:g}", mass, bound))
    ok = rep.passed and all(s["mass"] <= s["bound"] for s in sectors)
    return envelope("levelset", cfg.effective(), {**rep.to_dict(), "sectors": sectors}, statement="levelset", rows=rows, passed=ok), ok


def _scenario(cfg) -> PipelineScenario:
    o = cfg.options
    if "catalog" in o:
        found = sodin_scenarios(names=[o["catalog"]], n_samples=o.get("samples"))
        if not found:
            raise ConfigError(f"no built-in scenario named {o['catalog']!r}", key="options.catalog")
        return found[0]
    data = load_yaml(_need(cfg, "inputs", "scenario"))
    if not isinstance(data, dict):
        raise ConfigError("scenario file must hold a mapping", key="scenario")
    known = {"name", "dist", "alpha", "beta", "epsilon", "R", "gamma", "delta", "n_samples", "seed"}
    for k in data:
        if k not in known:
            raise ConfigError("unknown key", key=f"scenario.{k}")
    for k in ("dist", "alpha", "beta"):
        if k not in data:
            raise ConfigError("required", key=f"scenario.{k}")
    kw = {k: data[k] for k in ("epsilon", "R", "gamma", "delta", "n_samples") if k in data}
    if "samples" in o:
        kw["n_samples"] = int(o["samples"])
    kw["seed"] = int(data.get("seed", cfg.seed))
    spec = DistributionSpec.from_config(data["dist"], key="scenario.dist")
    return PipelineScenario.make(str(data.get("name", "scenario")), spec, data["alpha"], data["beta"], **kw)


def cmd_sodin(cfg):
    scen = _scenario(cfg)
    rep = run_pipeline(scen)
    rows = [row(f"{scen.name}/{c.step}", c.lhs, c.rhs, passed=c.passed) for c in rep.checks]
    eff = {**cfg.effective(), "scenario": scen.to_config()}
    return envelope("sodin", eff, rep.to_dict(), statement="sodin", constants=rep.constants, rows=rows, passed=rep.passed), rep.passed


def cmd_stress(cfg):
    o = cfg.options
    spec = _spec(cfg)
    res = search(spec, int(_need(cfg, "options", "n")), o.get("theorem", "conjecture"), restarts=int(o.get("restarts", 4)), steps=int(o.get("steps", 200)),
                 seed=cfg.seed, constants=cfg.constants or None, method=o.get("method", "auto"), n_samples=int(o.get("samples", 20_000)), workers=cfg.workers)
    trace_path = cfg.inputs.get("trace")
    if trace_path is None and cfg.output not in (None, "-"):
        out = Path(cfg.output)
        trace_path = str(out.with_name(out.stem + "_trace.csv"))
    if trace_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("step", "ratio"))
        w.writerows((s, repr(float(r))) for s, r in res.trace)
        Path(trace_path).write_text(buf.getvalue())
    rows = [row(f"stress/{spec.describe()}/n{o['n']}", res.estimate.ci_hi, res.bound.rhs)]
    return envelope("stress", cfg.effective(), res.to_dict(), statement=o.get("theorem", "conjecture"), constants=res.bound.constants, rows=rows), True


def cmd_verify(cfg):
    res = run_verify(quick=bool(cfg.options.get("quick", False)), seed=cfg.seed, workers=cfg.workers)
    return envelope("verify", cfg.effective(), res, statement="suite", constants=res["calibration"], rows=all_rows(res), passed=res["pass"]), res["pass"]


def cmd_report(cfg):
    return aggregate(cfg.inputs["inputs"]), True


COMMAND_FNS = {"lcd": cmd_lcd, "estimate": cmd_estimate, "bounds": cmd_bounds, "levelset": cmd_levelset, "sodin": cmd_sodin,
               "stress": cmd_stress, "verify": cmd_verify, "report": cmd_report}


def _fail(exc: LabError | Exception, code: int, kind: str) -> int:
    reason = " ".join(str(exc).split())  # one line, whatever the message held
    sys.stderr.write(f"error code={code} kind={kind} reason={reason}\n")
    return code


def run(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if ns.command not in COMMANDS:
            raise ConfigError(f"choose a command from {', '.join(COMMANDS)}", key="command")
        cfg = make_config(ns)
        out, ok = COMMAND_FNS[cfg.command](cfg)
        if cfg.command == "report":
            text = out
        elif cfg.format == "csv":
            text = rows_to_csv(out["rows"])
        else:
            text = dumps(out)
        write(text, cfg.output)
        if not ok:
            raise InequalityViolation(f"{cfg.command}: one or more inequality checks failed")
        return 0
    except LabError as exc:
        return _fail(exc, exc.exit_code, exc.kind)
    except yaml.YAMLError as exc:
        return _fail(exc, 2, "config")
    except FloatingPointError as exc:
        return _fail(exc, 4, "numeric")
    except Exception as exc:  # keep the one-line contract for anything unexpected
        return _fail(f"{type(exc).__name__}: {exc}", 1, "internal")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

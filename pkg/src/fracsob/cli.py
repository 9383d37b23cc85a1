"""Command-line frontend: exp | match | check | symbols.

Configuration is a JSON file with blocks

    {
      "metric": {"family": "bessel_fractional", "r": 1.5, "alphas": [1.0], "d": 2},
      "grid":   {"N": 64},
      "solver": {"T": 1.0, "steps": 200, "stride": 1, "K": 8,
                 "max_iter": 50, "tol_rel": 1e-6, "damping": 1e-3},
      "io":     {"out_dir": "fracsob_out", "formats": ["csv", "json", "svg"]},
      "seed":   0
    }

Every block is optional; flags override config values, and the environment
variable FRACSOB_SEED overrides the configured seed (flags beat both).

Exit codes: 0 success, 1 configuration or parse errors, 2 solver failures,
3 invariant-suite failures.
"""

import argparse
import copy
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import checks
from .curves import make_curve, read_samples
from .errors import ConfigError, FracsobError, NoConvergenceError
from .metric import MetricConfig
from .solvers import (
    conservation_report,
    exp_map,
    geodesic_bvp,
    path_to_csv,
    path_to_json,
    path_to_svg,
)
from .symbols import (
    FAMILIES,
    bessel_fractional,
    class_report,
    constant_coefficient,
    scalar_derivative_values,
    scalar_values,
    scale_invariant,
    two_term_fractional,
)

DEFAULT_CONFIG = {
    "metric": {"family": "bessel_fractional", "r": 1.5, "alphas": [1.0], "d": 2},
    "grid": {"N": 64},
    "solver": {
        "T": 1.0,
        "steps": 200,
        "stride": 1,
        "K": 8,
        "max_iter": 50,
        "tol_rel": 1e-6,
        "damping": 1e-3,
    },
    "io": {"out_dir": "fracsob_out", "formats": ["csv", "json", "svg"]},
    "seed": 0,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one CLI invocation."""

    symbol: object
    metric: MetricConfig
    n: int
    solver: dict
    io: dict
    seed: int


def _expect(block, key, kind, path, default=None, required=False):
    name = f"{path}.{key}" if path else key
    if key not in block:
        if required:
            raise ConfigError(f"missing required key {name}")
        return default
    value = block[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key {name} has invalid value {value!r}: {exc}") from exc


def build_symbol(metric_block):
    """LambdaSymbol from the metric config block; errors name the bad key."""
    family = _expect(metric_block, "family", str, "metric", required=True)
    if family not in FAMILIES:
        raise ConfigError(f"key metric.family must be one of {FAMILIES[:4]}, got {family!r}")
    if family == "custom_table":
        raise ConfigError("key metric.family: custom_table symbols are available through the API only")
    d = _expect(metric_block, "d", int, "metric", default=2)
    alphas = metric_block.get("alphas")
    r = metric_block.get("r")
    try:
        if family == "constant_coefficient" or family == "scale_invariant":
            if alphas is None:
                raise ConfigError(f"missing required key metric.alphas for {family}")
            alphas = [float(a) for a in alphas]
            if r is not None and float(r) != len(alphas) - 1:
                raise ConfigError(
                    f"key metric.r = {r} contradicts metric.alphas of degree {len(alphas) - 1}"
                )
            maker = constant_coefficient if family == "constant_coefficient" else scale_invariant
            return maker(alphas, dim=d)
        if r is None:
            raise ConfigError(f"missing required key metric.r for {family}")
        r = float(r)
        if family == "bessel_fractional":
            alpha0 = float(alphas[0]) if alphas else 1.0
            return bessel_fractional(r, alpha0, dim=d)
        if alphas is None or len(alphas) != 2:
            raise ConfigError("key metric.alphas must hold [alpha0, alpha1] for two_term_fractional")
        return two_term_fractional(r, float(alphas[0]), float(alphas[1]), dim=d)
    except FracsobError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"key metric: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key metric holds an invalid value: {exc}") from exc


def load_config(path=None, overrides=None, require_admissible=True):
    """Merge defaults, config file, FRACSOB_SEED, and flag overrides.

    The metric block does not inherit default keys once the user supplies
    one, so switching the family does not drag a stale default r along.
    With require_admissible=False the returned RunConfig carries metric=None
    for symbols that fail the admissibility verdicts (the check and symbols
    subcommands report on those instead of refusing them).
    """
    user = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")

    data = copy.deepcopy(DEFAULT_CONFIG)
    metric_block = {}
    if "metric" in user:
        if not isinstance(user["metric"], dict):
            raise ConfigError("key metric must be a JSON object")
        metric_block.update(user["metric"])
    for block, value in user.items():
        if block == "metric":
            continue
        if isinstance(value, dict) and isinstance(data.get(block), dict):
            data[block].update(value)
        else:
            data[block] = value
    env_seed = os.environ.get("FRACSOB_SEED")
    if env_seed is not None:
        try:
            data["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"FRACSOB_SEED must be an integer, got {env_seed!r}") from exc
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        block, _, leaf = key.partition(".")
        if block == "metric" and leaf:
            metric_block[leaf] = value
        elif leaf:
            data.setdefault(block, {})[leaf] = value
        else:
            data[key] = value
    if not metric_block:
        metric_block = copy.deepcopy(DEFAULT_CONFIG["metric"])
    metric_block.setdefault("d", 2)

    grid_block = data.get("grid")
    if not isinstance(grid_block, dict):
        grid_block = {"N": grid_block}
    n = _expect(grid_block, "N", int, "grid", default=64)
    if n < 8 or n % 2:
        raise ConfigError(f"key grid.N must be even and at least 8, got {n}")

    solver = dict(DEFAULT_CONFIG["solver"])
    solver.update(data.get("solver") or {})
    for key in ("T", "tol_rel", "damping"):
        solver[key] = _expect(solver, key, float, "solver", required=True)
        if solver[key] <= 0:
            raise ConfigError(f"key solver.{key} must be positive, got {solver[key]}")
    for key in ("steps", "stride", "K", "max_iter"):
        solver[key] = _expect(solver, key, int, "solver", required=True)
        if solver[key] < 0 or (key in ("steps", "stride") and solver[key] < 1):
            raise ConfigError(f"key solver.{key} must be positive, got {solver[key]}")

    io_block = dict(DEFAULT_CONFIG["io"])
    io_block.update(data.get("io") or {})
    formats = io_block.get("formats")
    if not isinstance(formats, (list, tuple)) or any(
        f not in ("csv", "json", "svg") for f in formats
    ):
        raise ConfigError(f"key io.formats must list csv/json/svg entries, got {formats!r}")

    symbol = build_symbol(metric_block)
    try:
        metric_cfg = MetricConfig(symbol)
    except FracsobError as exc:
        if require_admissible:
            raise ConfigError(f"key metric does not define an admissible metric: {exc}") from exc
        metric_cfg = None

    seed = _expect(data, "seed", int, "", default=0)
    return RunConfig(symbol=symbol, metric=metric_cfg, n=n, solver=solver,
                     io=dict(io_block), seed=seed)


def _load_curve_file(path, expected=None, label="curve"):
    try:
        samples = read_samples(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {label} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{label} file {path} is not valid JSON: {exc}") from exc
    except FracsobError as exc:
        raise ConfigError(f"{label} file {path}: {exc}") from exc
    if expected is not None and samples.shape != expected:
        raise ConfigError(
            f"{label} file {path} has shape {samples.shape}, expected {expected}"
        )
    return samples


def _curve_from_file(path, label="curve"):
    samples = _load_curve_file(path, label=label)
    try:
        return make_curve(samples)
    except FracsobError as exc:
        raise ConfigError(f"{label} file {path}: {exc}") from exc


def _write_path_artifacts(path_obj, cfg, stem):
    out_dir = cfg.io["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    written = []
    formats = cfg.io["formats"]
    if "csv" in formats:
        name = os.path.join(out_dir, f"{stem}.csv")
        with open(name, "w", encoding="utf-8") as fh:
            fh.write(path_to_csv(path_obj))
        written.append(name)
    if "json" in formats:
        name = os.path.join(out_dir, f"{stem}.json")
        with open(name, "w", encoding="utf-8") as fh:
            fh.write(path_to_json(path_obj))
        written.append(name)
    if "svg" in formats:
        name = os.path.join(out_dir, f"{stem}.svg")
        with open(name, "w", encoding="utf-8") as fh:
            fh.write(path_to_svg(path_obj))
        written.append(name)
    report = conservation_report(path_obj)
    name = os.path.join(out_dir, f"{stem}_conservation.json")
    payload = report.to_dict()
    payload["seed"] = cfg.seed
    with open(name, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    written.append(name)
    return written, report


def cmd_exp(args):
    cfg = load_config(args.config, _solver_overrides(args))
    c0 = _curve_from_file(args.curve)
    h0 = _load_curve_file(args.velocity, expected=c0.samples.shape, label="velocity")
    path = exp_map(
        cfg.metric, c0, h0,
        T=cfg.solver["T"], steps=cfg.solver["steps"], stride=cfg.solver["stride"],
    )
    written, report = _write_path_artifacts(path, cfg, "path")
    print(f"integrated {cfg.solver['steps']} steps to T = {cfg.solver['T']}; "
          f"energy drift {report.energy_drift:.3e}")
    for name in written:
        print(f"wrote {name}")
    return 0


def cmd_match(args):
    cfg = load_config(args.config, _solver_overrides(args))
    c0 = _curve_from_file(args.source, label="source")
    tgt = _load_curve_file(args.target, expected=c0.samples.shape, label="target")
    try:
        c1 = make_curve(tgt)
    except FracsobError as exc:
        raise ConfigError(f"target file {args.target}: {exc}") from exc
    try:
        result = geodesic_bvp(
            cfg.metric, c0, c1,
            K=cfg.solver["K"], steps=cfg.solver["steps"], T=cfg.solver["T"],
            max_iter=cfg.solver["max_iter"], tol_rel=cfg.solver["tol_rel"],
            damping=cfg.solver["damping"],
        )
        failed = False
    except NoConvergenceError as exc:
        result = exc.result
        failed = True
    written, _ = _write_path_artifacts(result.path, cfg, "match_path")
    out_dir = cfg.io["out_dir"]
    name = os.path.join(out_dir, "match_result.json")
    with open(name, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "initial_velocity": np.asarray(result.initial_velocity).tolist(),
                "residual": result.residual,
                "iterations": result.iterations,
                "converged": result.converged,
                "seed": cfg.seed,
            },
            fh,
        )
    written.append(name)
    status = "converged" if result.converged else "did not converge"
    print(f"shooting {status}: residual {result.residual:.3e} "
          f"after {result.iterations} iterations")
    for fname in written:
        print(f"wrote {fname}")
    return 2 if failed else 0


def cmd_check(args):
    cfg = load_config(args.config, _solver_overrides(args), require_admissible=False)
    # an explicit --N (or config grid key) overrides; otherwise the battery
    # runs on the fine grid its tightest operator tolerances need
    explicit = args.N is not None
    if not explicit and args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            explicit = "grid" in json.load(fh)
    n = cfg.n if explicit else 256
    results, extras = checks.run_all(
        cfg.symbol, n=max(n, 64), seed=cfg.seed, with_flow=not args.no_flow
    )
    print(checks.summarize(results))
    if not args.dump_spray:
        extras.pop("spray_breakdown", None)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(checks.results_to_json(results, extras))
        print(f"wrote {args.json_out}")
    return 0 if all(r.passed is not False for r in results) else 3


def cmd_symbols(args):
    cfg = load_config(args.config, _solver_overrides(args), require_admissible=False)
    lo, hi = args.lambda_range
    report = class_report(cfg.symbol, (lo, hi), m_max=args.m_max)
    lambdas = np.linspace(lo, hi, 5)
    ms = np.arange(-args.modes, args.modes + 1)
    table = {
        f"{lam:.6g}": {
            "values": scalar_values(cfg.symbol, lam, ms).tolist(),
            "derivative": scalar_derivative_values(cfg.symbol, lam, ms).tolist(),
        }
        for lam in lambdas
    }
    payload = {
        "class_report": report.to_dict(),
        "modes": ms.tolist(),
        "table": table,
        "seed": cfg.seed,
    }
    text = json.dumps(payload, indent=2)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.json_out}")
    else:
        print(text)
    return 0


def _solver_overrides(args):
    pairs = {
        "metric.family": getattr(args, "family", None),
        "metric.r": getattr(args, "r", None),
        "metric.alphas": getattr(args, "alphas", None),
        "grid.N": getattr(args, "N", None),
        "solver.T": getattr(args, "T", None),
        "solver.steps": getattr(args, "steps", None),
        "solver.stride": getattr(args, "stride", None),
        "solver.K": getattr(args, "K", None),
        "solver.max_iter": getattr(args, "max_iter", None),
        "solver.tol_rel": getattr(args, "tol_rel", None),
        "io.out_dir": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
    }
    return {k: v for k, v in pairs.items() if v is not None}


def _add_common(parser):
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--family", help="metric family name")
    parser.add_argument("--r", type=float, help="fractional order r")
    parser.add_argument("--alphas", type=float, nargs="+", help="family coefficients")
    parser.add_argument("--N", type=int, help="grid size")
    parser.add_argument("--T", type=float, help="integration time")
    parser.add_argument("--steps", type=int, help="RK4 step count")
    parser.add_argument("--stride", type=int, help="frame storage stride")
    parser.add_argument("--K", type=int, help="shooting mode truncation")
    parser.add_argument("--max-iter", dest="max_iter", type=int, help="shooting iteration cap")
    parser.add_argument("--tol-rel", dest="tol_rel", type=float, help="shooting relative tolerance")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for randomized checks")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracsob",
        description="Geodesics of reparametrization-invariant Sobolev metrics on closed curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("exp", help="integrate a geodesic from a curve and velocity")
    p_exp.add_argument("--curve", required=True, help="initial curve JSON file")
    p_exp.add_argument("--velocity", required=True, help="initial velocity JSON file")
    _add_common(p_exp)
    p_exp.set_defaults(func=cmd_exp)

    p_match = sub.add_parser("match", help="shoot for the geodesic between two curves")
    p_match.add_argument("--source", required=True, help="source curve JSON file")
    p_match.add_argument("--target", required=True, help="target curve JSON file")
    _add_common(p_match)
    p_match.set_defaults(func=cmd_match)

    p_check = sub.add_parser("check", help="run the invariant battery")
    p_check.add_argument("--dump-spray", action="store_true",
                         help="include the spray term breakdown in JSON output")
    p_check.add_argument("--json", dest="json_out", help="write the report JSON here")
    p_check.add_argument("--no-flow", action="store_true", help="skip the flow checks")
    _add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_sym = sub.add_parser("symbols", help="dump symbol tables and the class report")
    p_sym.add_argument("--lambda-range", dest="lambda_range", type=float, nargs=2,
                       default=(0.5, 20.0), help="lambda interval to sample")
    p_sym.add_argument("--m-max", dest="m_max", type=int, default=256,
                       help="mode range for the class report")
    p_sym.add_argument("--modes", type=int, default=16, help="mode table half-width")
    p_sym.add_argument("--json", dest="json_out", help="write the dump here instead of stdout")
    _add_common(p_sym)
    p_sym.set_defaults(func=cmd_symbols)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FracsobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

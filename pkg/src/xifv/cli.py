"""Command-line front end: ``xifv <command> [options]``.

Configuration is resolved as flags > config file > defaults.  The config
file is INI; keys may sit in any of the sections [measure], [mutation],
[run] or a section named after the command (later sections win, in that
order).  Keys use the flag names with dashes replaced by underscores:

    [measure]
    family = beta
    beta = 3/2
    truncation = 1e-3

    [run]
    seed = 7
    paths = 100000

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 a check (consistency, |z| bound, expected verdict) did not hold.
The worker count for path-parallel Monte Carlo comes from XIFV_WORKERS.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from .dual import (MCEstimate, MutationGenerator, NonErgodicError, dual_moment_samples,
                   indicator_power, stationary_moment_by_absorption)
from .fv import InfiniteRateError, moment_duality_check, simulate_fv, z_score
from .measures import (QuadratureError, InconsistentRatesError, XiMeasure, check_consistency,
                       lambda_rate, measure_from_config, named_rates, CollisionSignature)
from .partitions import absorption_times, simulate_coalescent
from .polynomial import RationalFunction
from .spde import (CFLError, GaussianBump, heat_pairing, normal_cdf_field, pair_field,
                   simulate_spde, two_particle_dual_samples)
from .stationary import KingmanDegenerateError, reversibility_verdict, stationary_moments

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

COMMANDS = ("rates", "consistency", "coalescent", "dual", "fv", "duality", "moments", "reversibility", "spde")
STOCHASTIC = {"coalescent", "dual", "fv", "duality", "spde"}

DEFAULTS = {
    "family": "kingman",
    "sigma2": None,
    "beta": None,
    "gamma": None,
    "epsilon": None,
    "truncation": None,
    "atoms": None,
    "theta": "1",
    "alpha": "1/2",
    "x0": None,
    "n": "2",
    "t": "1",
    "dt": "1e-3",
    "paths": "10000",
    "seed": None,
    "mode": "numeric",
    "b_max": "6",
    "tol": "1e-10",
    "order": "6",
    "z_max": "3",
    "expect": None,
    "check": "false",
    "grid_k": "512",
    "grid_l": "10",
    "format": "json",
    "output": None,
}
MEASURE_KEYS = ("family", "sigma2", "beta", "gamma", "epsilon", "truncation", "atoms")


class ConfigError(ValueError):
    pass


@dataclass
class RunResult:
    status: int
    payload: dict = field(default_factory=dict)
    csv_text: str | None = None


# ---------------------------------------------------------------------
# configuration


def load_config_file(path: str, command: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in ("measure", "mutation", "run", command):
        if parser.has_section(section):
            out.update(dict(parser.items(section)))
    unknown = set(out) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return out


def resolve_config(command: str, flags: dict, config_path: str | None = None) -> dict:
    cfg = dict(DEFAULTS)
    if config_path:
        cfg.update(load_config_file(config_path, command))
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg["command"] = command
    return cfg


def _get(cfg, key, kind):
    raw = cfg.get(key)
    if raw is None:
        return None
    try:
        if kind is bool:
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if kind is Fraction:
            return Fraction(str(raw).strip())
        if kind is float:
            text = str(raw).strip().lower()
            return math.inf if text in ("inf", "infinity") else float(Fraction(text))
        return kind(raw)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _measure(cfg) -> XiMeasure:
    try:
        return measure_from_config({k: cfg[k] for k in MEASURE_KEYS if cfg.get(k) is not None})
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad measure specification: {exc}") from exc


def _numeric_measure(cfg) -> XiMeasure:
    m = _measure(cfg)
    if m.is_symbolic:
        raise ConfigError(f"family {m.family!r} needs a numeric parameter for simulation")
    return m


def _mutation(cfg) -> MutationGenerator:
    theta, alpha = _get(cfg, "theta", float), _get(cfg, "alpha", float)
    if not 0 <= alpha <= 1 or theta < 0:
        raise ConfigError("need theta >= 0 and alpha in [0, 1]")
    return MutationGenerator.parent_independent(theta, [alpha, 1 - alpha])


def _x0(cfg, A: MutationGenerator) -> np.ndarray:
    if cfg.get("x0") is None:
        return A.nu0.copy()
    try:
        x0 = np.array([float(v) for v in str(cfg["x0"]).split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad x0: {cfg['x0']!r}") from exc
    if len(x0) != A.d or (x0 < 0).any() or abs(x0.sum() - 1) > 1e-9:
        raise ConfigError("x0 must be a probability vector on the two types")
    return x0


def _workers() -> int:
    raw = os.environ.get("XIFV_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"XIFV_WORKERS must be an integer, got {raw!r}") from exc


def _jsonable(v):
    if isinstance(v, RationalFunction):
        return str(v)
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


# ---------------------------------------------------------------------
# parallel Monte Carlo (results depend only on seed and path index)


def _dual_slice(args):
    x0, n, f, m, A, t, start, stop, seed = args
    from ._rng import path_rng
    from .dual import pair, simulate_dual

    return [pair(x0, simulate_dual(n, f, m, A, t, path_rng(seed, i)).z) for i in range(start, stop)]


def _parallel_dual_samples(x0, n, f, m, A, t, paths, seed, workers):
    if workers <= 1:
        return dual_moment_samples(x0, n, f, m, A, t, paths, seed)
    bounds = np.linspace(0, paths, workers + 1).astype(int)
    jobs = [(x0, n, f, m, A, t, int(a), int(b), seed) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(workers) as ex:
        parts = list(ex.map(_dual_slice, jobs))
    return np.array([v for part in parts for v in part])


# ---------------------------------------------------------------------
# commands


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_rates(cfg) -> RunResult:
    """Named collision rates a2 ... a21111 of a measure."""
    mode = cfg["mode"]
    m = _measure(cfg)
    if m.is_symbolic and mode != "symbolic":
        raise ConfigError("family parameter missing; pass it or use --mode symbolic")
    table = named_rates(m, mode)
    return RunResult(EXIT_OK, table.to_json(), table.to_csv())


def cmd_consistency(cfg) -> RunResult:
    """Check the consistency recursion for all signatures up to b_max."""
    m = _measure(cfg)
    mode = "symbolic" if m.is_symbolic else cfg["mode"]
    rep = check_consistency(m, _get(cfg, "b_max", int), mode, _get(cfg, "tol", float))
    status = EXIT_OK if rep.passed else EXIT_CHECK
    payload = rep.to_json()
    rows = [(k, json.dumps(_jsonable(v))) for k, v in payload.items()]
    return RunResult(status, payload, _rows_csv(["key", "value"], rows))


def cmd_coalescent(cfg) -> RunResult:
    """Simulate Xi-coalescent paths or absorption times."""
    m = _numeric_measure(cfg)
    n, paths, seed = _get(cfg, "n", int), _get(cfg, "paths", int), _get(cfg, "seed", int)
    horizon = _get(cfg, "t", float)
    if paths <= 1:
        path = simulate_coalescent(n, m, horizon, seed)
        rows = [(0.0, "", str(path.states[0]))] + [
            (t, str(sig), str(st)) for t, sig, st in zip(path.times, path.signatures, path.states[1:])]
        payload = {"jumps": [{"time": t, "signature": s, "blocks": b} for t, s, b in rows]}
        return RunResult(EXIT_OK, payload, _rows_csv(["time", "signature", "blocks"], rows))
    times = absorption_times(n, m, paths, seed)
    est = MCEstimate.from_samples(times, seed)
    payload = {"absorption_time": est.to_json()}
    if n == 2:
        payload["expected"] = 1.0 / float(lambda_rate(m, CollisionSignature.of([2], 0)))
    rows = [(i, repr(float(v))) for i, v in enumerate(times)]
    return RunResult(EXIT_OK, payload, _rows_csv(["path", "absorption_time"], rows))


def cmd_dual(cfg) -> RunResult:
    """Stationary moment E<mu^n, 1_F^n> by running the dual to absorption."""
    m = _numeric_measure(cfg)
    A = _mutation(cfg)
    n, paths, seed = _get(cfg, "n", int), _get(cfg, "paths", int), _get(cfg, "seed", int)
    f = indicator_power(A.d, n, [0])
    est = stationary_moment_by_absorption(n, f, m, A, paths, seed)
    payload = {"estimate": est.to_json()}
    if n <= 6 and A.nu0[0] == 0.5:
        exact = stationary_moments(named_rates(m, "numeric"), A.theta, 0.5, order=max(n, 1))[n]
        payload["formula"] = float(exact)
        payload["z"] = (est.estimate - float(exact)) / est.stderr if est.stderr > 0 else 0.0
    rows = [(k, json.dumps(v)) for k, v in payload.items()]
    return RunResult(EXIT_OK, payload, _rows_csv(["key", "value"], rows))


def cmd_fv(cfg) -> RunResult:
    """One forward (Xi, A)-Fleming-Viot path on two types."""
    m = _numeric_measure(cfg)
    A = _mutation(cfg)
    x0 = _x0(cfg, A)
    path = simulate_fv(x0, m, A, _get(cfg, "t", float), _get(cfg, "dt", float), _get(cfg, "seed", int))
    payload = {"times": path.times.tolist(), "states": path.states.tolist(), "jumps": len(path.jumps)}
    return RunResult(EXIT_OK, payload, path.to_csv())


def cmd_duality(cfg) -> RunResult:
    """Forward vs dual Monte Carlo for E<X_t^n, 1_F^n>."""
    m = _numeric_measure(cfg)
    A = _mutation(cfg)
    x0 = _x0(cfg, A)
    n, t, paths, seed = _get(cfg, "n", int), _get(cfg, "t", float), _get(cfg, "paths", int), _get(cfg, "seed", int)
    dt = _get(cfg, "dt", float)
    f = indicator_power(A.d, n, [0])
    workers = _workers()
    if workers <= 1 or t == 0:
        rep = moment_duality_check(x0, m, A, n, f, t, paths, dt, seed)
        payload = rep.to_json()
        z = rep.z
    else:
        from .fv import DualityReport, moment_of_states, simulate_fv_batch

        fw = MCEstimate.from_samples(moment_of_states(simulate_fv_batch(x0, m, A, t, dt, paths, seed), f), seed)
        dl = MCEstimate.from_samples(_parallel_dual_samples(x0, n, f, m, A, t, paths, seed + 1_000_003, workers), seed)
        meta = {"n": n, "t": t, "dt": dt, "paths": paths, "seed": seed, "x0": x0.tolist(),
                "measure": m.describe(), "mutation": A.describe()}
        rep = DualityReport(fw, dl, z_score(fw, dl), meta)
        payload = rep.to_json()
        z = rep.z
    payload["z_max"] = _get(cfg, "z_max", float)
    payload["passed"] = abs(z) <= payload["z_max"]
    status = EXIT_CHECK if _get(cfg, "check", bool) and not payload["passed"] else EXIT_OK
    rows = [("forward", payload["forward"]["estimate"], payload["forward"]["stderr"]),
            ("dual", payload["dual"]["estimate"], payload["dual"]["stderr"])]
    return RunResult(status, payload, _rows_csv(["side", "estimate", "stderr"], rows))


def cmd_moments(cfg) -> RunResult:
    """Stationary moments from the moment recursion."""
    mode = cfg["mode"]
    m = _measure(cfg)
    if m.is_symbolic:
        mode = "symbolic"
    rates = named_rates(m, mode)
    theta = _get(cfg, "theta", float) if mode == "numeric" else _get(cfg, "theta", Fraction)
    alpha = _get(cfg, "alpha", float) if mode == "numeric" else _get(cfg, "alpha", Fraction)
    mv = stationary_moments(rates.entries, theta, alpha, _get(cfg, "order", int))
    vals = [_jsonable(v) for v in mv.m]
    payload = {"mode": mode, "moments": {f"m{i}": v for i, v in enumerate(vals, start=1)}}
    rows = [(f"m{i}", str(v)) for i, v in enumerate(vals, start=1)]
    return RunResult(EXIT_OK, payload, _rows_csv(["moment", "value"], rows))


def cmd_reversibility(cfg) -> RunResult:
    """Reversibility obstruction and verdict for a measure."""
    cfg = dict(cfg)
    m = _measure(cfg)
    if m.family in ("beta", "powerlaw", "pd") and not m.is_symbolic:
        # verdicts are decided over the whole parameter range
        m = m.with_param(RationalFunction.var(m.symbol))
    rep = reversibility_verdict(m)
    payload = rep.to_json()
    expect = cfg.get("expect")
    status = EXIT_OK
    if expect is not None:
        payload["expected"] = expect
        if expect.strip().lower() != rep.verdict:
            status = EXIT_CHECK
    rows = [(k, json.dumps(v)) for k, v in payload.items()]
    return RunResult(status, payload, _rows_csv(["key", "value"], rows))


def cmd_spde(cfg) -> RunResult:
    """Forward SPDE from a standard normal profile; n=1, n=2 duality diagnostics."""
    m = _numeric_measure(cfg)
    sigma2 = float(m.sigma2)
    jumps = None if m.family == "kingman" else m
    paths, seed, t = _get(cfg, "paths", int), _get(cfg, "seed", int), _get(cfg, "t", float)
    u0 = normal_cdf_field(_get(cfg, "grid_l", float), _get(cfg, "grid_k", int))
    U = simulate_spde(u0, math.sqrt(sigma2), jumps, t, paths, seed=seed)
    f, g = GaussianBump(0.0, 1.0), GaussianBump(0.5, 1.0)
    pf, pg = pair_field(u0.x, U, f), pair_field(u0.x, U, g)
    e1 = MCEstimate.from_samples(pf, seed)
    oracle1 = heat_pairing(f, t, 1.0)
    e2 = MCEstimate.from_samples(pf * pg, seed)
    # pair coalescence: sigma2 plus the (truncated) jump part
    rate = float(lambda_rate(m, CollisionSignature.of([2], 0)))
    d2 = MCEstimate.from_samples(two_particle_dual_samples(f, g, t, 1.0, rate, paths, seed + 1_000_003), seed)
    z1 = (e1.estimate - oracle1) / e1.stderr if e1.stderr > 0 else 0.0
    z2 = z_score(e2, d2)
    zmax = _get(cfg, "z_max", float)
    payload = {
        "grid": {"L": u0.L, "K": len(u0.x) - 1, "h": u0.h},
        "coalescence_rate": rate,
        "n1": {"forward": e1.to_json(), "oracle": oracle1, "z": z1},
        "n2": {"forward": e2.to_json(), "dual": d2.to_json(), "z": z2},
        "z_max": zmax,
        "passed": abs(z1) <= zmax and abs(z2) <= zmax,
    }
    status = EXIT_CHECK if _get(cfg, "check", bool) and not payload["passed"] else EXIT_OK
    mean = U.mean(axis=0)
    rows = [(repr(float(a)), repr(float(b))) for a, b in zip(u0.x, mean)]
    return RunResult(status, payload, _rows_csv(["x", "u"], rows))


HANDLERS = {
    "rates": cmd_rates,
    "consistency": cmd_consistency,
    "coalescent": cmd_coalescent,
    "dual": cmd_dual,
    "fv": cmd_fv,
    "duality": cmd_duality,
    "moments": cmd_moments,
    "reversibility": cmd_reversibility,
    "spde": cmd_spde,
}


def run(command: str, cfg: dict) -> RunResult:
    """Execute one command on a resolved config."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    if command in STOCHASTIC and cfg.get("seed") is None:
        raise ConfigError(f"{command} is stochastic and needs --seed")
    if cfg.get("format") not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if cfg.get("mode") not in ("numeric", "exact", "symbolic"):
        raise ConfigError("mode must be numeric, exact or symbolic")
    return HANDLERS[command](cfg)


def render(result: RunResult, cfg: dict, fmt: str, timestamp: bool = True) -> str:
    resolved = {k: v for k, v in sorted(cfg.items())}
    if fmt == "csv":
        head = "# config: " + json.dumps(resolved, sort_keys=True) + "\n"
        return head + (result.csv_text or "")
    doc = {"version": __version__, "config": resolved, "status": result.status, "result": result.payload}
    if timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


# ---------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xifv", description="Xi-coalescents, (Xi, A)-Fleming-Viot and their duality")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        s = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).splitlines()[0])
        s.add_argument("--config", help="INI config file")
        s.add_argument("--format", choices=["json", "csv"])
        s.add_argument("--output", "-o", help="write artifact here instead of stdout")
        s.add_argument("--seed")
        s.add_argument("--family")
        s.add_argument("--sigma2")
        s.add_argument("--beta")
        s.add_argument("--gamma")
        s.add_argument("--epsilon")
        s.add_argument("--truncation")
        s.add_argument("--atoms", help="'w:x1,x2; w:x1' atom list on the simplex")
        s.add_argument("--theta")
        s.add_argument("--alpha")
        s.add_argument("--x0", help="initial type frequencies, comma separated")
        s.add_argument("--n")
        s.add_argument("--t")
        s.add_argument("--dt")
        s.add_argument("--paths")
        s.add_argument("--mode", choices=["numeric", "exact", "symbolic"])
        s.add_argument("--b-max", dest="b_max")
        s.add_argument("--tol")
        s.add_argument("--order")
        s.add_argument("--z-max", dest="z_max")
        s.add_argument("--expect", help="expected verdict (reversibility)")
        s.add_argument("--check", action="store_const", const="true", help="exit 4 if |z| exceeds --z-max")
        s.add_argument("--grid-k", dest="grid_k")
        s.add_argument("--grid-l", dest="grid_l")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(args.command, flags, args.config)
        result = run(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, InconsistentRatesError, InfiniteRateError, NonErgodicError,
            KingmanDegenerateError, CFLError, NotImplementedError, ZeroDivisionError,
            FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(result, cfg, cfg["format"])
    if cfg.get("output"):
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return result.status


if __name__ == "__main__":
    sys.exit(main())

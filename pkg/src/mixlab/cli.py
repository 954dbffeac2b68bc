"""Command-line driver: one subcommand per experiment, reproducible reports.

Parameters come from ``--key=value`` flags and an optional ``--config`` file
of ``key=value`` lines; flags win. Exit status is 0 on success, 1 when a
scientific check fails and 2 on usage or resource errors.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import clt, cumulants, harish, homspace, lattice_lab
from .errors import ResourceError
from .group_core import a_diag, k_rot, random_sl

SCHEMA_VERSION = "1"


class UsageError(Exception):
    pass


def _floats(text):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


def _choice(*opts):
    def parse(text):
        if text not in opts:
            raise UsageError(f"expected one of {', '.join(opts)}, got {text!r}")
        return text

    return parse


OBSERVABLES = {
    "standard": homspace.standard_bump,
    "fallback": homspace.fallback_bump,
    "ball": lambda: homspace.Observable.ball(1.6j, 0.3, harmonic=1),
}

DEFAULT_FORMAT = {"count": "csv"}

# key -> (parser, default); a default of None marks a required key
COMMON = {"out": (str, "-"), "format": (_choice("json", "csv"), ""), "workers": (int, 1)}
COMMANDS = {
    "xi": ({"t_grid": (_floats, "10,100,1000,10000"), "exponent": (float, 0.9)}, False),
    "count": ({"t_max": (float, 80.0), "t_grid": (str, ""), "samples": (int, 1_000_000), "seed": (int, None)}, True),
    "wellround": (
        {"t": (float, 10.0), "rho": (float, 0.01), "delta": (float, 1.1), "samples": (int, 20_000), "seed": (int, None)},
        True,
    ),
    "correlate": (
        {"t_grid": (_floats, "1,2,4,8"), "samples": (int, 100_000), "observable": (_choice(*OBSERVABLES), "standard"), "seed": (int, None)},
        True,
    ),
    "configs": (
        {"d_grid": (_floats, "10,12,15,20"), "eps": (float, 0.01), "trials": (int, 20), "width": (float, 10.0), "seed": (int, None)},
        True,
    ),
    "cumulant-selftest": ({"seed": (int, 0), "functionals": (int, 100)}, False),
    "clt": (
        {
            "t_grid": (_floats, "50"),
            "n": (int, 10_000),
            "s": (float, 40.0),
            "sigma_samples": (int, 100_000),
            "observable": (_choice(*OBSERVABLES), "standard"),
            "seed": (int, None),
        },
        True,
    ),
    "exponents": (
        {"tau": (float, 0.5), "a": (float, 1.0), "b": (float, 1.0), "r": (int, 3), "delta": (float, 0.5), "r_max": (int, 6)},
        False,
    ),
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str = "-"
    format: str = "json"
    workers: int = 1

    def resolved(self):
        d = dict(self.params)
        d.update(out=self.out, format=self.format, workers=self.workers)
        return d


def read_config_file(path):
    values = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config file: {e}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        values[k.strip().replace("-", "_")] = v.strip()
    return values


def _parser(command):
    keys = dict(COMMON, **COMMANDS[command][0])
    p = argparse.ArgumentParser(prog=f"mixlab {command}", add_help=True)
    for k in keys:
        p.add_argument("--" + k.replace("_", "-"), dest=k, default=None)
    p.add_argument("--config", default=None)
    return p


def parse_config(args, file=None):
    """Resolve a RunConfig from an argument list and an optional key=value file."""
    args = list(args)
    if not args or args[0] not in COMMANDS:
        raise UsageError(f"expected a subcommand: {', '.join(COMMANDS)}")
    command = args[0]
    ns, extra = _parser(command).parse_known_args(args[1:])
    if extra:
        raise UsageError(f"unknown arguments: {' '.join(extra)}")
    keys = dict(COMMON, **COMMANDS[command][0])
    raw = {}
    path = ns.config or file
    if path:
        for k, v in read_config_file(path).items():
            if k not in keys:
                raise UsageError(f"unknown key {k!r} in config file")
            raw[k] = v
    for k in keys:
        v = getattr(ns, k)
        if v is not None:
            raw[k] = v
    values = {}
    for k, (parse, default) in keys.items():
        if k in raw:
            try:
                values[k] = parse(raw[k])
            except ValueError:
                raise UsageError(f"malformed value for {k}: {raw[k]!r}") from None
        elif k == "format":
            values[k] = DEFAULT_FORMAT.get(command, "json")
        elif default is None:
            raise UsageError(f"missing required key {k!r}" + (" (stochastic runs need a seed)" if k == "seed" else ""))
        else:
            values[k] = parse(default) if isinstance(default, str) and parse is not str else default
    if values["workers"] < 1:
        raise UsageError("workers must be >= 1")
    out, fmt, workers = values.pop("out"), values.pop("format"), values.pop("workers")
    return RunConfig(command, values, out, fmt, workers)


# ---------------------------------------------------------------- subcommands


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_xi(p, workers):
    ts = p["t_grid"]
    xi = [harish.xi_sl2(t) for t in ts]
    norm = [x * t ** p["exponent"] for x, t in zip(xi, ts)]
    decreasing = all(b < a for a, b in zip(norm, norm[1:]))
    res = {
        "t": ts,
        "xi": xi,
        "normalized": norm,
        "normalized_decreasing": decreasing,
        "xi_at_1": harish.xi_sl2(1.0),
        "xi_nonincreasing": all(b <= a + 1e-12 for a, b in zip(xi, xi[1:])),
    }
    rows = [[t, x, n] for t, x, n in zip(ts, xi, norm)]
    return res, ["t", "xi", "normalized"], rows, decreasing


def _count_grid(p):
    if p["t_grid"]:
        return _floats(p["t_grid"])
    t_max = p["t_max"]
    grid = [t for t in (5.0, 10.0, 20.0, 40.0, 80.0) if t < t_max]
    return grid + [t_max]


def run_count(p, workers):
    rep = lattice_lab.count_ratio_experiment(_count_grid(p), workers)
    cov = lattice_lab.covolume_estimate(p["samples"], p["seed"])
    product = rep.ratio_limit * cov.value
    ok = bool(rep.drift < 0.05 and 0.9 <= product <= 1.1) if len(rep.t_grid) > 1 else bool(0.9 <= product <= 1.1)
    res = dict(rep.to_json(), covolume=cov.value, covolume_se=cov.standard_error, ratio_times_covolume=product)
    return res, ["t", "count", "volume", "ratio"], [list(r) for r in rep.rows()], ok


def run_wellround(p, workers):
    rep = lattice_lab.well_rounded_check(p["t"], p["rho"], p["delta"], p["samples"], p["seed"])
    res = rep.to_json()
    header = ["key", "value"]
    rows = [[k, v] for k, v in sorted(res.items())]
    return res, header, rows, rep.holds


def run_correlate(p, workers):
    phi = OBSERVABLES[p["observable"]]()
    ests = [
        homspace.correlation([np.eye(2), homspace.flow_matrix(t)], [phi, phi], p["samples"], p["seed"], workers)
        for t in p["t_grid"]
    ]
    vals = [e.value for e in ests]
    C, delta = clt.fit_envelope(p["t_grid"], vals)
    res = {
        "t": p["t_grid"],
        "value": vals,
        "standard_error": [e.standard_error for e in ests],
        "envelope_C": C,
        "envelope_delta": delta,
        "observable": phi.to_json(),
    }
    rows = [[t, e.value, e.standard_error] for t, e in zip(p["t_grid"], ests)]
    return res, ["t", "value", "standard_error"], rows, bool(delta > 0)


def config_instance(rng, width):
    """Random pair (g, g k a(s) k') at Riemannian distance width + U[0, 2)."""
    g1 = random_sl(2, rng)
    w = width + 2.0 * rng.random()
    s = np.exp(w / np.sqrt(2.0))
    g2 = g1 @ k_rot(rng.uniform(0, 2 * np.pi)) @ a_diag(s) @ k_rot(rng.uniform(0, 2 * np.pi))
    return g1, g2


def run_configs(p, workers):
    ds = [lattice_lab.distance_set_approximation(D, p["eps"]) for D in p["d_grid"]]
    rng = np.random.default_rng([p["seed"], 0xC0F])
    trials = [lattice_lab.approximate_configuration(config_instance(rng, p["width"]), p["eps"]) for _ in range(p["trials"])]
    rate = sum(t.found for t in trials) / max(1, len(trials))
    ok = all(d.found for d in ds) and rate >= 0.8
    res = {
        "distance_set": [dict(d.to_json(), D=D) for D, d in zip(p["d_grid"], ds)],
        "trials": [{"found": t.found, "max_distance": t.max_distance} for t in trials],
        "success_rate": rate,
    }
    rows = [[D, d.found, d.delta, d.error] for D, d in zip(p["d_grid"], ds)]
    return res, ["D", "found", "delta", "error"], rows, ok


def cumulant_selftest(seed=0, functionals=100):
    rng = np.random.default_rng(seed)
    worst_rt = 0.0
    for _ in range(functionals):
        for r in range(1, 7):
            m = cumulants.MomentFunctional.from_function(r, lambda I: rng.normal())
            back = cumulants.moments_from_cumulants(cumulants.all_cumulants(m, r), r)
            worst_rt = max(worst_rt, max(abs(m[k] - back[k]) for k in m))
    worst_cond = 0.0
    for r in range(2, 6):
        for Q in cumulants.enumerate_partitions(r):
            if len(Q) < 2:
                continue
            m = cumulants.product_functional(Q, r, rng)
            worst_cond = max(worst_cond, abs(cumulants.conditional_cumulant(m, Q, r)))
    bell = [len(cumulants.enumerate_partitions(r)) for r in range(1, 7)]
    ok = worst_rt <= 1e-12 and worst_cond <= 1e-12 and bell == [1, 2, 5, 15, 52, 203]
    return {"round_trip_max_error": worst_rt, "conditional_max_abs": worst_cond, "bell": bell}, ok


def run_cumulant_selftest(p, workers):
    res, ok = cumulant_selftest(p["seed"], p["functionals"])
    rows = [["round_trip_max_error", res["round_trip_max_error"]], ["conditional_max_abs", res["conditional_max_abs"]]]
    return res, ["check", "value"], rows, ok


def run_clt(p, workers):
    phi = OBSERVABLES[p["observable"]]()
    underpowered = p["n"] < 1000
    n = p["n"]
    sigma = clt.variance_sigma2(phi, p["s"], p["sigma_samples"], p["seed"], workers=workers)
    used = p["observable"]
    if sigma.degenerate and used == "standard":
        phi, used = homspace.fallback_bump(), "fallback"
        sigma = clt.variance_sigma2(phi, p["s"], p["sigma_samples"], p["seed"], workers=workers)
    vals = homspace.map_chunks(lambda reps, rng: clt.ft_values(phi, p["t_grid"], reps), n, p["seed"], workers)
    reports = [clt._report(t, vals[:, j].copy(), sigma) for j, t in enumerate(p["t_grid"])]
    ok = not underpowered and all(all(r.passes.values()) for r in reports)
    res = {
        "observable_used": used,
        "observable": phi.to_json(),
        "sigma": sigma.to_json(),
        "reports": [r.to_json() for r in reports],
        "underpowered": underpowered,
    }
    header = ["t", "mean", "second_moment", "cum3", "cum4", "cum5", "ks"]
    rows = [[r.t, r.mean, r.second_moment, r.cumulants[3], r.cumulants[4], r.cumulants[5], r.ks] for r in reports]
    return res, header, rows, ok


def run_exponents(p, workers):
    e = cumulants.derive_exponent(cumulants.ExponentParams(p["tau"], p["a"], p["b"], p["r"]))
    chain = cumulants.exponent_chain(p["delta"], p["a"], p["b"], p["r_max"])
    ok = e.tau_prime > 0 and all(x > 0 for x in chain)
    res = {"derive": e.to_json(), "chain": chain}
    rows = [[r, tau] for r, tau in zip(range(2, p["r_max"] + 1), chain)]
    return res, ["r", "tau"], rows, ok


RUNNERS = {
    "xi": run_xi,
    "count": run_count,
    "wellround": run_wellround,
    "correlate": run_correlate,
    "configs": run_configs,
    "cumulant-selftest": run_cumulant_selftest,
    "clt": run_clt,
    "exponents": run_exponents,
}


def render(config, result, header, rows, passed):
    """Serialize a report; identical inputs give identical bytes."""
    if config.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": config.command,
            "config": config.resolved(),
            "workers": config.workers,
            "passed": bool(passed),
            "result": result,
        }
        return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION} command={config.command} workers={config.workers} passed={bool(passed)}\n")
    buf.write("# config " + json.dumps(_clean(config.resolved()), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def run(config):
    """Execute one configured experiment, write its report, return the exit status."""
    result, header, rows, passed = RUNNERS[config.command](config.params, config.workers)
    text = render(config, result, header, rows, passed)
    if config.out == "-":
        sys.stdout.write(text)
    else:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0 if passed else 1


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] in ("-h", "--help"):
        print(f"usage: mixlab {{{','.join(COMMANDS)}}} [--key value ...] [--config FILE]")
        return 0
    try:
        config = parse_config(argv)
        return run(config)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except ResourceError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

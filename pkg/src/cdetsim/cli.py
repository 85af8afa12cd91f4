"""Command line entry point.

    cdetsim simulate scenario.yaml [--set cdet.rw=8] [--seed 3] [--out run.csv] [--trace run.tsv]
    cdetsim sweep scenario.yaml --param cdet.rw=2,4,8,16 --seeds 1,2,3 [--jobs 4]
    cdetsim noise-figure --fa-db 20.04 --fant-db 3.01 --fr-db 10 --ga-db 0
    cdetsim validate scenario.yaml

Exit codes: 0 ok, 1 usage, 2 invalid scenario, 3 simulator invariant violated.
Relative output paths land in ``$CDETSIM_OUTPUT_DIR`` when it is set. Every
file output gets a ``.config.yaml`` echo of the fully resolved scenario next
to it.
"""

import argparse
import concurrent.futures
import itertools
import os
import sys

import numpy as np
import yaml

from cdetsim import __version__, noisefig
from cdetsim.kernel import SimulationError
from cdetsim.metrics import csv_text
from cdetsim.network import run_scenario
from cdetsim.scenario import ConfigError, dump_scenario, load_scenario

OUTPUT_DIR_ENV = "CDETSIM_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _value(text):
    """Parse an override value the way the scenario file would."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _split_assignment(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise UsageError("expected KEY=VALUE, got %r" % text)
    return key.strip(), value


def _output_path(path):
    if path is None or path == "-":
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _write(path, text):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _echo_config(path, scenario, extra=None):
    header = "# cdetsim %s\n" % __version__
    if extra:
        header += "".join("# %s\n" % line for line in extra)
    _write(path + ".config.yaml", header + dump_scenario(scenario))


def _load(path, overrides=(), seed=None):
    scenario = load_scenario(path)
    dotted = {}
    for item in overrides:
        key, value = _split_assignment(item)
        dotted[key] = _value(value)
    if seed is not None:
        dotted["seed"] = seed
    return scenario.replace(**dotted) if dotted else scenario


# ----- subcommands

def cmd_validate(args, out):
    scenario = _load(args.config, args.set)
    out.write("ok: %d stations, %g s, seed %d\n"
              % (scenario.stations.count, scenario.duration_s, scenario.seed))
    return EXIT_OK


def cmd_simulate(args, out):
    scenario = _load(args.config, args.set, args.seed)
    trace_path = _output_path(args.trace)
    result = run_scenario(scenario, trace=trace_path is not None)
    text = csv_text([((), result.metrics)])
    out_path = _output_path(args.out)
    if out_path is None:
        out.write(text)
    else:
        _write(out_path, text)
        _echo_config(out_path, scenario)
    if trace_path is not None:
        _write(trace_path, result.trace_text())
        _echo_config(trace_path, scenario)
    return EXIT_OK


def _sweep_point(scenario, dotted, seed):
    sc = scenario.replace(**dict(dotted, seed=seed))
    return run_scenario(sc).metrics


def cmd_sweep(args, out):
    scenario = _load(args.config, args.set)
    seeds = []
    for chunk in args.seeds.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            seeds.append(int(chunk))
        except ValueError:
            raise UsageError("seeds must be integers, got %r" % chunk) from None
    if not seeds:
        raise UsageError("--seeds needs at least one seed")
    names, axes = [], []
    for item in args.param:
        key, values = _split_assignment(item)
        parsed = [_value(v) for v in values.split(",") if v.strip()]
        if not parsed:
            raise UsageError("no values given for %s" % key)
        names.append(key)
        axes.append(parsed)
    points = list(itertools.product(*axes)) if axes else [()]
    # fail on bad keys or values before spending time on any run
    for point in points:
        scenario.replace(**dict(zip(names, point)))

    jobs = [(dict(zip(names, point)), point, seed) for point in points for seed in seeds]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_point, scenario, d, s) for d, _, s in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_sweep_point(scenario, d, s) for d, _, s in jobs]
    rows = [(point, m) for (_, point, _), m in zip(jobs, results)]
    text = csv_text(rows, extra_columns=names)
    out_path = _output_path(args.out)
    if out_path is None:
        out.write(text)
    else:
        _write(out_path, text)
        _echo_config(out_path, scenario,
                     ["sweep %s" % " ".join(args.param), "seeds %s" % args.seeds])
    return EXIT_OK


def _pick(linear_value, db_value, name, default=None):
    if linear_value is not None and db_value is not None:
        raise UsageError("give %s either linear or in dB, not both" % name)
    if db_value is not None:
        return noisefig.linear(db_value)
    if linear_value is not None:
        return linear_value
    if default is None:
        raise UsageError("missing %s (use --%s or --%s-db)" % (name, name, name))
    return default


def _range(text):
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError("range must be START:STOP:STEP, got %r" % text) from None
    if step <= 0 or stop < start:
        raise UsageError("range needs STEP > 0 and STOP >= START")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


NF_COLUMNS = ["freq_mhz", "f_ambient", "f_ambient_db", "f_antenna", "f_antenna_db",
              "f_receiver", "f_receiver_db", "g_antenna", "g_antenna_db",
              "f_system", "f_system_db", "f_system_approx", "f_system_approx_db",
              "approx_rel_error", "f_antenna_bound", "f_antenna_bound_db", "feasible"]


def _nf_row(freq, fa, fant, fr, ga):
    p = noisefig.NoiseFigureParams(fa, fant, fr, ga)
    fs = noisefig.system_nf(p)
    fsa = noisefig.approx_system_nf(fa, fant)
    bound = noisefig.antenna_nf_bound(fa, fr, ga)
    feasible = bound >= 1 and fant <= bound
    bound_db = noisefig.db(bound) if bound > 0 else float("nan")
    return [freq, fa, noisefig.db(fa), fant, noisefig.db(fant), fr, noisefig.db(fr),
            ga, noisefig.db(ga), fs, noisefig.db(fs), fsa, noisefig.db(fsa),
            (fs - fsa) / fs, bound, bound_db, "yes" if feasible else "infeasible"]


def cmd_noise_figure(args, out):
    fant = _pick(args.fant, args.fant_db, "fant")
    fr = _pick(args.fr, args.fr_db, "fr")
    table = noisefig.AmbientTable.from_csv(args.fa_table) if args.fa_table else None
    if args.freq_sweep:
        if table is None:
            raise UsageError("--freq-sweep needs --fa-table")
        if args.fa is not None or args.fa_db is not None:
            raise UsageError("--freq-sweep takes F_A from the table; drop --fa/--fa-db")
        freqs = _range(args.freq_sweep)
        fas = [table.f_ambient(f) for f in freqs]
    elif args.freq is not None:
        if table is None:
            raise UsageError("--freq needs --fa-table")
        freqs, fas = [args.freq], [table.f_ambient(args.freq)]
    else:
        freqs, fas = [None], [_pick(args.fa, args.fa_db, "fa")]
    if args.ga_db_sweep:
        if args.ga is not None or args.ga_db is not None:
            raise UsageError("--ga-db-sweep replaces --ga/--ga-db")
        gas = [noisefig.linear(g) for g in _range(args.ga_db_sweep)]
    else:
        gas = [_pick(args.ga, args.ga_db, "ga")]
    for fa in fas:
        if not fa > 1:
            raise UsageError("ambient noise factor F_A = %g must exceed 1 (0 dB): the system "
                             "noise factor is singular there" % fa)

    rows = [_nf_row(freq, fa, fant, fr, ga) for freq, fa in zip(freqs, fas) for ga in gas]
    out.write(",".join(NF_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(_nf_cell(v) for v in row) + "\n")
    return EXIT_OK


def _nf_cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if v != v:
        return "nan"
    return "%.12g" % v


# ----- parser

def build_parser():
    parser = _Parser(prog="cdetsim", description="CD-ET 802.11 simulator and noise-figure tool")
    parser.add_argument("--version", action="version", version="cdetsim " + __version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(p):
        p.add_argument("config", help="scenario YAML file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a scenario key by dotted path (repeatable)")

    p = sub.add_parser("simulate", help="run one scenario and print its metrics CSV")
    scenario_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="metrics CSV path (default stdout)")
    p.add_argument("--trace", help="write the event trace (tab-separated) here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid over several seeds")
    scenario_args(p)
    p.add_argument("--param", action="append", default=[], metavar="KEY=V1,V2,...",
                   help="swept key and its values (repeatable; grid is the product)")
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("noise-figure", help="system noise factor of an active-antenna receiver")
    for name, what in (("fa", "ambient noise factor"), ("fant", "active antenna noise factor"),
                       ("fr", "receiver noise factor"), ("ga", "active antenna power gain")):
        p.add_argument("--" + name, type=float, help=what + " (linear)")
        p.add_argument("--%s-db" % name, type=float, dest=name + "_db", help=what + " (dB)")
    p.add_argument("--ga-db-sweep", metavar="START:STOP:STEP",
                   help="sweep the gain in dB, inclusive "
                        "(write --ga-db-sweep=-20:20:5 for a negative start)")
    p.add_argument("--fa-table", help="CSV with freq_mhz,f_ambient_db columns")
    p.add_argument("--freq", type=float, help="frequency (MHz) to look up in --fa-table")
    p.add_argument("--freq-sweep", metavar="START:STOP:STEP", help="frequency sweep in MHz")
    p.set_defaults(func=cmd_noise_figure)

    p = sub.add_parser("validate", help="check a scenario file without running it")
    scenario_args(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print("cdetsim %s: %s" % (args.command, exc), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        where = getattr(args, "config", None)
        prefix = "%s: " % where if where and exc.line is not None else ""
        print("cdetsim %s: invalid scenario: %s%s" % (args.command, prefix, exc), file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print("cdetsim %s: %s" % (args.command, exc), file=sys.stderr)
        return EXIT_USAGE
    except SimulationError as exc:
        print("cdetsim %s: internal invariant violated: %s" % (args.command, exc), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

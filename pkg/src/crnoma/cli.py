"""Command line: ``crnoma {run,sweep,oracle,trace}``."""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time

import numpy as np

from . import harness, zoa
from ._accel import backend_name
from .errors import ConfigError, InfeasibleError
from .net_model import Scenario, generate_availability, generate_topology, read_config, topology_csv
from .oracle import exhaustive_pairing
from .pairing import pairing_csv, zoup
from .power import zouppa

EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: usage error: {message}\n")


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with scenario and experiment settings")
    common.add_argument("--seed", type=int, help="base seed (overrides the config file)")
    common.add_argument("--out", help=f"output directory (default ${harness.OUTPUT_ENV} or ./results)")
    common.add_argument("--reps", type=int, help="replications")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                        help="override one setting, repeatable")

    parser = _Parser(prog="crnoma", description="CR-NOMA energy-efficiency simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("run", parents=[common], help="one scenario, EE of every scheme")

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter, write rows.csv and summary.csv")
    p.add_argument("--axis", choices=harness.AXES)
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--schemes", help=f"comma-separated subset of {','.join(harness.SCHEMES)}")
    p.add_argument("--no-resume", action="store_true", help="start rows.csv afresh")

    p = sub.add_parser("oracle", parents=[common], help="ZOUP against exhaustive search on small instances")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--q", type=float, default=0.8, help="channel availability probability")
    p.add_argument("--instances", type=int, default=50)

    p = sub.add_parser("trace", parents=[common], help="ZOA best-fitness trace as CSV")
    p.add_argument("--stage", choices=("zoup", "zouppa"), default="zoup")
    p.add_argument("--dump-topology", action="store_true", help="also write topology.csv and pairs.csv")
    return parser


def _spec(args) -> harness.ExperimentSpec:
    mapping = read_config(args.config) if args.config else {}
    mapping.update(dict(args.set))
    for flag, key in (("axis", "axis"), ("values", "values"), ("schemes", "schemes")):
        if getattr(args, flag, None) is not None:
            mapping[key] = getattr(args, flag)
    if args.seed is not None:
        mapping["base_seed"] = str(args.seed)
    if args.reps is not None:
        mapping["replications"] = str(args.reps)
    if args.jobs < 1:
        raise ConfigError("jobs", f"must be >= 1, got {args.jobs}")
    return harness.spec_from_mapping(mapping)


def _fmt(x):
    return f"{x:.6g}" if math.isfinite(x) else "nan"


def cmd_run(args, spec):
    seed = harness.derive_seed(spec.base_seed, 0)
    rows = harness.run_replication(spec.base, spec.schemes, seed, spec.zoa, cycles=spec.cycles)
    print(f"{'scheme':<10} {'ee':>12} {'feasible':>9} {'qos_misses':>10} {'ms':>9}")
    for r in rows:
        print(f"{r.scheme:<10} {_fmt(r.ee):>12} {str(r.feasible):>9} {r.qos_misses:>10} {r.wall_ms:>9.1f}")
    return 0


def cmd_sweep(args, spec):
    if spec.axis is None:
        raise ConfigError("axis", "sweep needs --axis (or axis in the config file)")
    t0 = time.perf_counter()

    def progress(done, total):
        if done == total or done % 10 == 0:
            print(f"\r{done}/{total} items", end="" if done < total else "\n", file=sys.stderr, flush=True)

    rows_path, summary_path = harness.run_sweep(spec, args.out, jobs=args.jobs, resume=not args.no_resume,
                                                progress=progress)
    print(f"{'value':>10} {'scheme':<10} {'mean_ee':>12} {'std_ee':>12} {'n':>5}")
    for s in harness.summarize(harness.read_rows(rows_path)):
        print(f"{s['axis_value']:>10} {s['scheme']:<10} {_fmt(s['mean_ee']):>12} {_fmt(s['std_ee']):>12} {s['n']:>5}")
    print(f"wrote {rows_path} and {summary_path} in {time.perf_counter() - t0:.1f} s ({backend_name()})")
    return 0


def oracle_study(base: Scenario, instances: int, base_seed: int, zoa_config: zoa.ZoaConfig):
    """ZOUP and exhaustive EE on ``instances`` seeded small scenarios."""
    out = []
    for i in range(instances):
        rngs = harness._streams(harness.derive_seed(base_seed, i))
        topo = generate_topology(base, rngs["topology"])
        avail = generate_availability(base, rngs["availability"])
        best = exhaustive_pairing(base, topo, avail)
        try:
            z = zoup(base, topo, avail, zoa_config, rng=rngs["zoup_bpa"])
        except InfeasibleError as exc:
            z = exc.result
        gap = 1.0 - z.ee / best.best_ee if best.best_ee > 0 else 0.0
        out.append({"instance": i, "oracle_ee": best.best_ee, "zoup_ee": z.ee, "gap": gap,
                    "oracle_feasible": best.feasible, "combinations": best.enumerated_count})
    return out


def cmd_oracle(args, spec):
    base = spec.base.replace(n_users=args.n, m_channels=args.m, availability_prob=args.q)
    study = oracle_study(base, args.instances, spec.base_seed, spec.zoa)
    out = harness.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "oracle_gaps.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(study[0]), lineterminator="\n")
        writer.writeheader()
        for r in study:
            writer.writerow({**r, "oracle_ee": _fmt(r["oracle_ee"]), "zoup_ee": _fmt(r["zoup_ee"]),
                             "gap": _fmt(r["gap"]), "oracle_feasible": int(r["oracle_feasible"])})
    gaps = np.array([r["gap"] for r in study])
    print(f"instances {len(gaps)}, gap <= 2% in {np.mean(gaps <= 0.02):.0%}, "
          f"max gap {gaps.max():.4g}, ZOUP above oracle {int(np.sum(gaps < -1e-12))}")
    print(f"wrote {path}")
    return 0


def cmd_trace(args, spec):
    rngs = harness._streams(harness.derive_seed(spec.base_seed, 0))
    scenario = spec.base
    topo = generate_topology(scenario, rngs["topology"])
    avail = generate_availability(scenario, rngs["availability"])
    try:
        res = zoup(scenario, topo, avail, spec.zoa, rng=rngs["zoup_bpa"])
    except InfeasibleError as exc:
        res = exc.result
    trace, alloc = res.trace, None
    if args.stage == "zouppa":
        try:
            pa = zouppa(res.pairing, scenario, topo, spec.zoa, rng=rngs["zouppa"])
        except InfeasibleError as exc:
            pa = exc.result
        trace, alloc = pa.trace, pa.allocation
    out = harness.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trace_{args.stage}.csv"
    zoa.write_trace_csv(path, trace)
    if args.dump_topology:
        (out / "topology.csv").write_text(topology_csv(topo, avail), encoding="utf-8")
        (out / "pairs.csv").write_text(pairing_csv(res.pairing, alloc), encoding="utf-8")
    print(f"{len(trace) - 1} iterations, best fitness {_fmt(trace[-1])}; wrote {path}")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "trace": cmd_trace}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _spec(args)
        return COMMANDS[args.command](args, spec)
    except ConfigError as exc:
        if exc.param == "config":
            print(f"crnoma: configuration file error: {exc}", file=sys.stderr)
        else:
            print(f"crnoma: invalid parameter {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"crnoma: cannot write output: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

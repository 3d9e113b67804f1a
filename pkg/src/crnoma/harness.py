"""Monte-Carlo driver: replications, parameter sweeps and CSV output."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import zoa
from .errors import ConfigError, InfeasibleError
from .net_model import (Scenario, _coerce, generate_availability, generate_topology, read_config,
                        scenario_from_mapping)
from .pairing import (adjacent_pairing, oma_baseline, pairing_ee, random_pairing, upwo_pairing, validate_allocation,
                      validate_pairing, zoup)
from .power import rule_allocation, zouppa

SCHEMES = ("oma", "random", "adjacent", "upwo", "zoup", "zoup+fpa", "zoup+bpa", "zouppa")
AXES = ("snr_db", "beta2", "path_loss_exp", "n_users", "m_channels", "coverage_radius")
OUTPUT_ENV = "CRNOMA_OUTPUT_DIR"
ROW_FIELDS = ("axis_value", "scheme", "replication", "ee", "feasible", "violations", "qos_misses", "wall_ms")
# schemes whose power split promises the per-user QoS test; the others use a
# fixed rule, so their QoS misses are reported but not counted as violations
QOS_SCHEMES = ("zoup", "zoup+bpa", "zouppa")
SUMMARY_FIELDS = ("axis_value", "scheme", "n", "n_feasible", "mean_ee", "std_ee")

# independent random streams inside one replication, by purpose
_STREAMS = ("topology", "availability", "random", "zoup_bpa", "zoup_fpa", "zouppa")


@dataclass
class ExperimentSpec:
    base: Scenario = field(default_factory=Scenario)
    axis: str | None = None  # None runs the base scenario once per replication
    values: tuple = ()
    schemes: tuple = SCHEMES
    replications: int = 100
    base_seed: int = 0
    zoa: zoa.ZoaConfig = field(default_factory=zoa.ZoaConfig)
    # same topology/ZOA streams at every axis value (paired comparison across the axis)
    common_random_numbers: bool = True
    # ZOUP/ZOUPPA alternations for the zouppa scheme; 1 = single pass
    cycles: int = 1

    def __post_init__(self):
        self.values = tuple(self.values)
        self.schemes = tuple(self.schemes)
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ConfigError("schemes", f"unknown or empty scheme list {list(self.schemes)}; choose from {SCHEMES}")
        if self.replications < 1:
            raise ConfigError("replications", f"must be >= 1, got {self.replications}")
        if self.cycles < 1:
            raise ConfigError("cycles", f"must be >= 1, got {self.cycles}")
        if self.axis is None:
            if self.values:
                raise ConfigError("axis", "axis values given without an axis")
            return
        if self.axis not in AXES:
            raise ConfigError("axis", f"unknown sweep axis {self.axis!r}; choose from {AXES}")
        if not self.values:
            raise ConfigError("values", "sweep axis needs at least one value")
        for v in self.values:
            self.scenario_at(v)  # raises ConfigError naming the axis

    def scenario_at(self, value) -> Scenario:
        if self.axis is None:
            return self.base
        if self.axis in ("n_users", "m_channels"):
            if float(value) != int(value):
                raise ConfigError(self.axis, f"needs an integer, got {value}")
            value = int(value)
        return self.base.replace(**{self.axis: value})

    def points(self):
        return self.values if self.axis is not None else ("",)


@dataclass
class ResultRow:
    axis_value: object
    scheme: str
    replication: int
    ee: float
    feasible: bool
    wall_ms: float
    violations: int = 0  # broken constraints found by the validator
    qos_misses: int = 0  # pairs below their OMA rate, whether or not enforced


def _hash64(*parts) -> int:
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(base_seed: int, replication: int, axis_value=None) -> int:
    """``base_seed`` xor a 64-bit hash of the replication (and axis value, when given)."""
    key = ("rep", replication) if axis_value is None else ("point", repr(axis_value), replication)
    return (int(base_seed) ^ _hash64(*key)) & 0xFFFFFFFFFFFFFFFF


def _streams(seed):
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(_STREAMS, children)}


def _oma_problems(result, avail):
    problems = []
    if len(set(result.channels.tolist())) != len(result.channels):
        problems.append("channel assigned to more than one user")
    for u, c in zip(result.served.tolist(), result.channels.tolist()):
        if not avail.entries[u, c]:
            problems.append(f"C5: channel {c} not available to user {u}")
    return problems


def _zoup(scenario, topology, avail, cfg, rng, rule, initial_keys=None):
    try:
        return zoup(scenario, topology, avail, cfg, power_rule=rule, rng=rng, extra_seeds=initial_keys)
    except InfeasibleError as exc:
        return exc.result


def _zouppa(pairing, scenario, topology, cfg, rng):
    try:
        return zouppa(pairing, scenario, topology, cfg, rng=rng)
    except InfeasibleError as exc:
        return exc.result


def run_replication(scenario: Scenario, schemes=SCHEMES, seed: int = 0, zoa_config: zoa.ZoaConfig | None = None,
                    axis_value="", replication: int = 0, cycles: int = 1) -> list[ResultRow]:
    """Evaluate every scheme on one shared topology and availability draw.

    Rows come back in the order of ``schemes``.  A scheme that cannot serve
    everyone is recorded as infeasible and never stops the replication.  The
    schemes of ``QOS_SCHEMES`` are validated against C1 to C5, the rest
    against C2 to C5 (their fixed rules make no QoS promise).
    """
    cfg = zoa_config or zoa.ZoaConfig()
    rngs = _streams(seed)
    topology = generate_topology(scenario, rngs["topology"])
    avail = generate_availability(scenario, rngs["availability"])
    cache = {}

    def zoup_bpa():
        if "zoup" not in cache:
            t0 = time.perf_counter()
            cache["zoup"] = (_zoup(scenario, topology, avail, cfg, rngs["zoup_bpa"], "bpa"), time.perf_counter() - t0)
        return cache["zoup"]

    def checked(scheme, pairing, alloc):
        problems = validate_pairing(pairing, topology, avail)
        problems += validate_allocation(pairing, alloc, scenario, topology, check_qos=False)
        misses = [p for p in validate_allocation(pairing, alloc, scenario, topology) if p.startswith("C1")]
        n_bad = len(problems) + (len(misses) if scheme in QOS_SCHEMES else 0)
        return n_bad == 0, n_bad, len(misses)

    def pairing_row(scheme, pairing, rule):
        ee, _ = pairing_ee(pairing, scenario, topology, rule)
        return (ee, *checked(scheme, pairing, rule_allocation(pairing, scenario, topology, rule)))

    rows = []
    for scheme in schemes:
        t0 = time.perf_counter()
        if scheme == "oma":
            res = oma_baseline(scenario, topology, avail)
            problems = _oma_problems(res, avail)
            elapsed = time.perf_counter() - t0
            ee, feasible, n_bad, misses = res.ee, not problems, len(problems), 0
        elif scheme in ("random", "adjacent", "upwo"):
            if scheme == "random":
                try:
                    pairing = random_pairing(topology, avail, rngs["random"])
                except InfeasibleError as exc:
                    pairing = exc.result
            elif scheme == "adjacent":
                pairing = adjacent_pairing(topology, avail)
            else:
                pairing = upwo_pairing(topology, avail)
            elapsed = time.perf_counter() - t0
            ee, feasible, n_bad, misses = pairing_row(scheme, pairing, "bpa")
        elif scheme in ("zoup", "zoup+bpa"):
            res, elapsed = zoup_bpa()
            ee, feasible, n_bad, misses = pairing_row(scheme, res.pairing, "bpa")
        elif scheme == "zoup+fpa":
            res = _zoup(scenario, topology, avail, cfg, rngs["zoup_fpa"], "fpa")
            elapsed = time.perf_counter() - t0
            ee, feasible, n_bad, misses = pairing_row(scheme, res.pairing, "fpa")
        else:  # zouppa
            res, elapsed = zoup_bpa()
            t1 = time.perf_counter()
            best = None
            for cycle in range(cycles):
                if cycle:
                    res = _zoup(scenario, topology, avail, cfg, rngs["zouppa"], "bpa", initial_keys=[res.keys])
                pa = _zouppa(res.pairing, scenario, topology, cfg, rngs["zouppa"])
                if best is not None and pa.ee <= best[1].ee + cfg.epsilon:
                    break
                best = (res.pairing, pa)
            pairing, pa = best
            elapsed += time.perf_counter() - t1
            ee = pa.ee
            feasible, n_bad, misses = checked(scheme, pairing, pa.allocation)
        rows.append(ResultRow(axis_value, scheme, replication, float(ee), bool(feasible), elapsed * 1e3, n_bad,
                              misses))
    return rows


# --- sweeps -------------------------------------------------------------------

def _fmt_value(v):
    return "" if v == "" else repr(v) if isinstance(v, float) else str(v)


def _row_record(row: ResultRow):
    ee = "nan" if not math.isfinite(row.ee) else f"{row.ee:.6g}"
    return [_fmt_value(row.axis_value), row.scheme, row.replication, ee, int(row.feasible), row.violations,
            row.qos_misses, f"{row.wall_ms:.3f}"]


def _work(args):
    spec, value, rep = args
    seed = derive_seed(spec.base_seed, rep, None if spec.common_random_numbers else value)
    return run_replication(spec.scenario_at(value), spec.schemes, seed, spec.zoa, value, rep, spec.cycles)


def output_dir(path=None) -> Path:
    return Path(path or os.environ.get(OUTPUT_ENV) or "results")


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summarize(records):
    """Mean and sample deviation of EE per (axis value, scheme), first-seen order.

    ``records`` are dict rows as read back from the CSV, so the aggregates
    match what anyone recomputes from the file.  Non-finite EE is skipped.
    """
    groups: dict = {}
    for r in records:
        g = groups.setdefault((r["axis_value"], r["scheme"]), {"ee": [], "n": 0, "ok": 0})
        g["n"] += 1
        g["ok"] += int(r["feasible"])
        ee = float(r["ee"])
        if math.isfinite(ee):
            g["ee"].append(ee)
    out = []
    for (value, scheme), g in groups.items():
        mean = math.fsum(g["ee"]) / len(g["ee"]) if g["ee"] else math.nan
        std = statistics.stdev(g["ee"]) if len(g["ee"]) > 1 else 0.0
        out.append({"axis_value": value, "scheme": scheme, "n": g["n"], "n_feasible": g["ok"],
                    "mean_ee": mean, "std_ee": std})
    return out


def run_sweep(spec: ExperimentSpec, out_dir=None, jobs: int = 1, resume: bool = True, progress=None):
    """Run every (axis value, replication) and write ``rows.csv`` and ``summary.csv``.

    Rows are flushed as each item finishes; with ``resume`` items already
    present in ``rows.csv`` with all their schemes are skipped.  Worker count
    never changes file content apart from the wall-clock column.  Returns the
    two paths.
    """
    out = output_dir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows_path, summary_path = out / "rows.csv", out / "summary.csv"

    done = set()
    if resume and rows_path.exists():
        seen: dict = {}
        for r in read_rows(rows_path):
            seen.setdefault((r["axis_value"], int(r["replication"])), set()).add(r["scheme"])
        done = {k for k, s in seen.items() if set(spec.schemes) <= s}
    else:
        with open(rows_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(ROW_FIELDS)

    items = [(spec, v, rep) for v in spec.points() for rep in range(spec.replications)
             if (_fmt_value(v), rep) not in done]
    with open(rows_path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_work, items)
                for i, rows in enumerate(results):
                    writer.writerows(_row_record(r) for r in rows)
                    fh.flush()
                    if progress:
                        progress(i + 1, len(items))
        else:
            for i, item in enumerate(items):
                writer.writerows(_row_record(r) for r in _work(item))
                fh.flush()
                if progress:
                    progress(i + 1, len(items))

    summary = summarize(read_rows(rows_path))
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for s in summary:
            writer.writerow([s["axis_value"], s["scheme"], s["n"], s["n_feasible"], repr(s["mean_ee"]),
                             repr(s["std_ee"])])
    return rows_path, summary_path


# --- config -------------------------------------------------------------------

_ZOA_KEYS = {"population_size": "int", "max_iterations": "int", "patience": "int | None", "epsilon": "float",
             "defense_R": "float"}


def _split_list(raw):
    return [p.strip() for p in raw.split(",") if p.strip()]


def spec_from_mapping(mapping, base_spec: ExperimentSpec | None = None) -> ExperimentSpec:
    """ExperimentSpec from ``key = value`` strings.

    Scenario fields, ``axis``, ``values`` and ``schemes`` (comma lists),
    ``replications``, ``base_seed``, ``cycles``, ``common_random_numbers``
    and the ZOA keys ``population_size``, ``max_iterations``, ``patience``,
    ``epsilon`` and ``defense_R`` are accepted.
    """
    spec = base_spec or ExperimentSpec()
    scen_keys, changes, zoa_changes = {}, {}, {}
    for key, raw in mapping.items():
        if key == "axis":
            changes["axis"] = raw.strip() or None
        elif key == "values":
            vals = []
            for p in _split_list(raw):
                vals.append(_coerce("values", p, "float"))
            changes["values"] = tuple(vals)
        elif key == "schemes":
            changes["schemes"] = tuple(_split_list(raw))
        elif key in ("replications", "base_seed", "cycles"):
            changes[key] = _coerce(key, raw, "int")
        elif key == "common_random_numbers":
            if raw.strip().lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(key, f"expected a boolean, got {raw!r}")
            changes[key] = raw.strip().lower() in ("true", "1", "yes")
        elif key in _ZOA_KEYS:
            zoa_changes[key] = _coerce(key, raw, _ZOA_KEYS[key])
        else:
            scen_keys[key] = raw
    base = scenario_from_mapping(scen_keys, spec.base)
    if zoa_changes:
        try:
            changes["zoa"] = dataclasses.replace(spec.zoa, **zoa_changes)
        except ValueError as exc:
            raise ConfigError(next(iter(zoa_changes)), str(exc)) from None
    if changes.get("axis", spec.axis) in ("n_users", "m_channels") and "values" in changes:
        changes["values"] = tuple(int(v) if float(v).is_integer() else v for v in changes["values"])
    return dataclasses.replace(spec, base=base, **changes)


def load_spec(path) -> ExperimentSpec:
    return spec_from_mapping(read_config(path))

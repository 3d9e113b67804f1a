"""User pairing and channel assignment: ZOA-based pairing and the benchmarks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, zoa
from .errors import InfeasibleError
from .net_model import AvailabilityMatrix, Scenario, Topology, snr_linear
from .power import PENALTY, evaluate_allocation, rule_allocation
from .rates import QOS_TOL


@dataclass(frozen=True)
class Pairing:
    """Served pairs as ``(strong, weak)`` users, one channel per pair."""

    pairs: tuple = ()
    channels: tuple = ()
    unpaired: tuple = ()

    @property
    def feasible(self):
        return not self.unpaired

    def __len__(self):
        return len(self.pairs)


def _from_decoded(strong, weak, chan) -> Pairing:
    pairs, channels, unpaired = [], [], []
    for s, w, c in zip(strong.tolist(), weak.tolist(), chan.tolist()):
        if c >= 0:
            pairs.append((s, w))
            channels.append(c)
        else:
            unpaired.extend(sorted((s, w)))
    return Pairing(tuple(pairs), tuple(channels), tuple(sorted(unpaired)))


def _rule_args(scenario: Scenario | None, power_rule):
    if scenario is None or power_rule == "bpa":
        beta2 = 1.0 if scenario is None else scenario.beta2
        return dict(rule=kernels.RULE_BPA, beta2=beta2)
    if power_rule == "fpa":
        return dict(rule=kernels.RULE_FIXED, ds_fix=0.25, dw_fix=0.75)
    ds, dw = power_rule
    return dict(rule=kernels.RULE_FIXED, ds_fix=ds, dw_fix=dw)


def pair_order(order, topology: Topology, avail: AvailabilityMatrix, scenario: Scenario | None = None,
               optimize_channels=False, power_rule="bpa") -> Pairing:
    """Pair users ``order[0]-order[1], order[2]-order[3], ...`` and give each pair a channel.

    By default channels come from a maximum-cardinality matching that ignores
    rates.  With ``optimize_channels`` (needs ``scenario``) the assignment
    maximizes served pairs, then QoS-feasible pairs, then summed rate.
    """
    snr = 1.0 if scenario is None else snr_linear(scenario)
    weak_int = scenario is None or scenario.interference == "weak"
    strong, weak, chan, *_ = kernels.decode_order(
        np.asarray(order), snr * topology.gains, avail.entries,
        weak_interference=weak_int, optimize_channels=optimize_channels, **_rule_args(scenario, power_rule))
    return _from_decoded(strong, weak, chan)


def keys_to_order(keys):
    """Users by ascending key; equal keys keep index order."""
    return np.argsort(np.asarray(keys, dtype=float), kind="stable")


def order_to_keys(order):
    """Keys whose ascending sort reproduces ``order``."""
    n = len(order)
    keys = np.empty(n)
    keys[np.asarray(order)] = (np.arange(n) + 0.5) / n
    return keys


def decode_pairing(keys, topology: Topology, avail: AvailabilityMatrix, scenario: Scenario | None = None,
                   optimize_channels=False, power_rule="bpa") -> Pairing:
    """Random-key decoding: sort users by key and pair neighbours in that order."""
    return pair_order(keys_to_order(keys), topology, avail, scenario, optimize_channels, power_rule)


# --- benchmarks --------------------------------------------------------------

def _by_gain(topology: Topology):
    # descending mean gain, ties by user index
    return np.lexsort((np.arange(topology.n_users), -topology.user_gain))


def random_pairing(topology: Topology, avail: AvailabilityMatrix, rng, retries=100) -> Pairing:
    for _ in range(retries):
        p = pair_order(rng.permutation(topology.n_users), topology, avail)
        if p.feasible:
            return p
    raise InfeasibleError(f"random pairing left users {list(p.unpaired)} without a shared channel "
                          f"after {retries} draws", result=p)


def adjacent_pairing(topology: Topology, avail: AvailabilityMatrix) -> Pairing:
    return pair_order(_by_gain(topology), topology, avail)


def upwo_order(topology: Topology):
    ranked = _by_gain(topology)
    half = topology.n_users // 2
    order = np.empty(topology.n_users, dtype=int)
    order[0::2] = ranked[:half]
    order[1::2] = ranked[half:]
    return order


def upwo_pairing(topology: Topology, avail: AvailabilityMatrix) -> Pairing:
    """k-th strongest of the upper half with k-th strongest of the lower half."""
    return pair_order(upwo_order(topology), topology, avail)


@dataclass
class OmaResult:
    ee: float
    served: np.ndarray  # user indices
    channels: np.ndarray


def oma_baseline(scenario: Scenario, topology: Topology, avail: AvailabilityMatrix) -> OmaResult:
    """One user per channel at full cluster power.

    EE is averaged over all N meters, an unserved meter counting as zero, so
    the figure drops once meters outnumber channels.
    """
    chan = kernels.max_matching(avail.entries)
    served = np.flatnonzero(chan >= 0)
    snr = snr_linear(scenario)
    rates = 0.5 * np.log2(1.0 + snr * topology.gains[served, chan[served]])
    ee = math.fsum((rates / scenario.cluster_power).tolist()) / scenario.n_users
    return OmaResult(ee, served, chan[served])


# --- evaluation and validation -----------------------------------------------

def pairing_ee(pairing: Pairing, scenario: Scenario, topology: Topology, rule="bpa"):
    """Network EE of a pairing under a fixed power rule and its per-pair QoS flags."""
    alloc = rule_allocation(pairing, scenario, topology, rule)
    evals = evaluate_allocation(pairing, alloc, scenario, topology)
    qos = np.array([pe.rate_strong >= pe.oma_rate_strong - QOS_TOL and pe.rate_weak >= pe.oma_rate_weak - QOS_TOL
                    for pe in evals], dtype=bool)
    return math.fsum(pe.pair_ee for pe in evals), qos


def validate_pairing(pairing: Pairing, topology: Topology, avail: AvailabilityMatrix):
    """List every broken structural constraint (empty when valid).

    Checks: each user in exactly one pair, injective channels, both members
    free on their channel, strong member has the larger gain on it.
    """
    problems = []
    n = topology.n_users
    seen = {}
    for j, (s, w) in enumerate(pairing.pairs):
        for u in (s, w):
            if u in seen:
                problems.append(f"C4: user {u} in pairs {seen[u]} and {j}")
            seen[u] = j
    missing = sorted(set(range(n)) - set(seen))
    if missing:
        problems.append(f"C4: users {missing} not paired")
    if len(set(pairing.channels)) != len(pairing.channels):
        problems.append("channel assigned to more than one pair")
    for j, ((s, w), c) in enumerate(zip(pairing.pairs, pairing.channels)):
        if not (avail.entries[s, c] and avail.entries[w, c]):
            problems.append(f"C5: channel {c} of pair {j} not available to both users")
        if topology.gains[s, c] < topology.gains[w, c]:
            problems.append(f"pair {j}: strong user {s} has the smaller gain on channel {c}")
    return problems


def validate_allocation(pairing: Pairing, allocation, scenario: Scenario, topology: Topology, check_qos=True):
    """Power constraints C2, C3 and (optionally) the per-user QoS test C1."""
    problems = []
    cp = scenario.cluster_power
    for j in range(len(pairing)):
        ds, dw, pj = allocation.delta_strong[j], allocation.delta_weak[j], allocation.pair_power[j]
        if ds < -1e-12 or dw < -1e-12 or ds + dw > 1.0 + 1e-12 or not 0 < pj <= cp + 1e-12:
            problems.append(f"C2: pair {j} split ({ds:.6g}, {dw:.6g}) at {pj:.6g} W")
    if allocation.pair_power.sum() > scenario.power_budget + 1e-12:
        problems.append(f"C3: {allocation.pair_power.sum():.6g} W above {scenario.power_budget:.6g} W")
    if check_qos:
        for j, pe in enumerate(evaluate_allocation(pairing, allocation, scenario, topology)):
            if pe.rate_strong < pe.oma_rate_strong - QOS_TOL or pe.rate_weak < pe.oma_rate_weak - QOS_TOL:
                problems.append(f"C1: pair {j} below its OMA rate")
    return problems


# --- ZOA-based pairing ---------------------------------------------------------

@dataclass
class ZoupResult:
    pairing: Pairing
    ee: float
    qos_ok: np.ndarray
    feasible: bool
    keys: np.ndarray
    trace: list[float] = field(default_factory=list)


def zoup(scenario: Scenario, topology: Topology, avail: AvailabilityMatrix, zoa_config: zoa.ZoaConfig | None = None,
         power_rule="bpa", seed_heuristics=True, extra_seeds=None, rng=None) -> ZoupResult:
    """Search random-key vectors in [0, 1]^N for the pairing with the best EE.

    Each key vector is decoded into pairs, then channels are assigned to
    maximize served pairs, QoS-feasible pairs and rate in that order.  The
    fitness subtracts a fixed penalty per unpaired user and per pair below
    its OMA rate.  With ``seed_heuristics`` the UPWO and adjacent pairings
    join the initial population, followed by any ``extra_seeds`` key vectors.

    Raises InfeasibleError (carrying the best result) if the best candidate
    still pays a penalty.
    """
    n = scenario.n_users
    cfg = zoa_config or zoa.ZoaConfig()
    cfg = zoa.ZoaConfig(**{**cfg.__dict__, "dimension": n, "lower": 0.0, "upper": 1.0})
    x = snr_linear(scenario) * topology.gains
    rule = _rule_args(scenario, power_rule)
    weak_int = scenario.interference == "weak"

    def fitness(pop):
        return kernels.population_fitness(pop, x, avail.entries, weak_interference=weak_int,
                                          cluster_power=scenario.cluster_power, penalty=PENALTY, **rule)

    initial = []
    if seed_heuristics:
        initial += [order_to_keys(upwo_order(topology)), order_to_keys(_by_gain(topology))]
    if extra_seeds is not None:
        initial += [np.asarray(k, dtype=float) for k in extra_seeds]
    initial = np.array(initial) if initial else None
    result = zoa.optimize(fitness, cfg, initial=initial, vectorized=True, rng=rng)

    keys = result.best.position
    pairing = decode_pairing(keys, topology, avail, scenario, optimize_channels=True, power_rule=power_rule)
    ee, qos = pairing_ee(pairing, scenario, topology, power_rule)
    out = ZoupResult(pairing, ee, qos, bool(pairing.feasible and qos.all()), keys, result.trace)
    if not out.feasible:
        raise InfeasibleError(
            f"best pairing leaves users {list(pairing.unpaired)} unpaired and "
            f"{int((~qos).sum())} pairs below their OMA rate", result=out)
    return out


def pairing_csv(pairing: Pairing, allocation=None, pair_ee=None) -> str:
    """Pair index, strong user, weak user, channel, splits and pair EE."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pair", "strong_user", "weak_user", "channel", "delta_strong", "delta_weak", "pair_ee"])
    for j, ((s, w), c) in enumerate(zip(pairing.pairs, pairing.channels)):
        ds = "" if allocation is None else f"{allocation.delta_strong[j]:.6g}"
        dw = "" if allocation is None else f"{allocation.delta_weak[j]:.6g}"
        ee = "" if pair_ee is None else f"{pair_ee[j]:.6g}"
        writer.writerow([j, s, w, c, ds, dw, ee])
    return buf.getvalue()

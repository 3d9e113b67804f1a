"""Power split inside each NOMA cluster: fixed, beta-weighted and ZOA-optimized."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import zoa
from .errors import ConstraintViolation, InfeasibleError
from .net_model import Scenario, Topology, snr_linear
from .rates import QOS_TOL, evaluate_pair

FPA_WEAK = 0.75
FPA_STRONG = 0.25
PENALTY = 1e6


def fpa():
    """Fixed split ``(delta_weak, delta_strong)``."""
    return FPA_WEAK, FPA_STRONG


def qos_floor(x):
    """Smallest own-power share reaching the OMA rate without interference.

    ``log2(1 + d x) >= 0.5 log2(1 + x)``  iff  ``d >= 1 / (1 + sqrt(1 + x))``.
    """
    return 1.0 / (1.0 + np.sqrt(1.0 + x))


def weak_share_interval(x_strong, x_weak):
    """Weak-user shares ``[lo, hi]`` meeting both users' QoS, full cluster power.

    Valid for the weak-gain interference model; ``lo > hi`` marks a pair
    that no split can serve.  The weak bound is its QoS floor; the strong
    user's bound solves ``(1 - d) x_s / (d x_w + 1) = sqrt(1 + x_s) - 1``.
    A user with zero SNR has rate zero whatever the split, so its bound drops.
    """
    x_strong = np.asarray(x_strong, dtype=float)
    x_weak = np.asarray(x_weak, dtype=float)
    s = np.sqrt(1.0 + x_strong)
    lo = np.where(x_weak > 0, qos_floor(x_weak), 0.0)
    hi = np.where(x_strong > 0, s / (s + 1.0 + x_weak), 1.0)
    return lo, hi


def bpa(beta1, beta2, p_gain_strong, p_gain_weak):
    """Beta-weighted split; returns ``(delta_strong, delta_weak)``.

    Each weight multiplies one user's QoS floor, so the strong share never
    exceeds one half.
    """
    if not (0.0 <= beta1 <= 1.0 and 0.0 <= beta2 <= 1.0) or abs(beta1 + beta2 - 1.0) > 1e-9:
        raise ValueError(f"beta1 + beta2 must equal 1 with both in [0, 1], got {beta1}, {beta2}")
    delta_strong = beta1 * qos_floor(p_gain_strong) + beta2 * qos_floor(p_gain_weak)
    return delta_strong, 1.0 - delta_strong


@dataclass
class PowerAllocation:
    delta_strong: np.ndarray
    delta_weak: np.ndarray
    pair_power: np.ndarray

    def __post_init__(self):
        self.delta_strong = np.asarray(self.delta_strong, dtype=float)
        self.delta_weak = np.asarray(self.delta_weak, dtype=float)
        self.pair_power = np.broadcast_to(np.asarray(self.pair_power, dtype=float), self.delta_strong.shape).copy()


@dataclass
class ZouppaResult:
    allocation: PowerAllocation
    ee: float
    feasible: bool
    qos_ok: np.ndarray
    seed_ee: float  # EE of the BPA seed, penalties excluded
    trace: list[float] = field(default_factory=list)


def pair_snrs(pairing, scenario: Scenario, topology: Topology):
    """Received SNR ``x = snr * gain`` of each strong and weak user on its channel."""
    snr = snr_linear(scenario)
    strong = np.array([s for s, _ in pairing.pairs], dtype=int)
    weak = np.array([w for _, w in pairing.pairs], dtype=int)
    chan = np.array(pairing.channels, dtype=int)
    if strong.size == 0:
        return np.zeros(0), np.zeros(0)
    return snr * topology.gains[strong, chan], snr * topology.gains[weak, chan]


def rule_allocation(pairing, scenario: Scenario, topology: Topology, rule="bpa") -> PowerAllocation:
    """Allocation of a fixed rule: ``"bpa"``, ``"fpa"`` or a ``(delta_strong, delta_weak)`` tuple."""
    xs, xw = pair_snrs(pairing, scenario, topology)
    if rule == "bpa":
        ds, dw = bpa(scenario.beta1, scenario.beta2, xs, xw)
    elif rule == "fpa":
        dw, ds = fpa()
        ds, dw = np.full_like(xs, ds), np.full_like(xs, dw)
    else:
        ds, dw = np.full_like(xs, rule[0]), np.full_like(xs, rule[1])
    return PowerAllocation(ds, dw, np.full_like(xs, scenario.cluster_power))


def evaluate_allocation(pairing, allocation: PowerAllocation, scenario: Scenario, topology: Topology):
    """One PairEval per served pair."""
    snr = snr_linear(scenario)
    out = []
    for j, ((s, w), c) in enumerate(zip(pairing.pairs, pairing.channels)):
        out.append(evaluate_pair(snr, topology.gains[s, c], topology.gains[w, c],
                                 allocation.delta_strong[j], allocation.delta_weak[j],
                                 allocation.pair_power[j], scenario.cluster_power, scenario.interference))
    return out


def _score(pairing, alloc, scenario, topology):
    evals = evaluate_allocation(pairing, alloc, scenario, topology)
    qos = np.array([pe.rate_strong >= pe.oma_rate_strong - QOS_TOL and pe.rate_weak >= pe.oma_rate_weak - QOS_TOL
                    for pe in evals], dtype=bool)
    return math.fsum(pe.pair_ee for pe in evals), qos


def _split_objective(xs, xw, scenario, joint_power, decode):
    """Vectorized fitness over a population of decision vectors."""
    n_pairs = xs.shape[0]
    cp = scenario.cluster_power
    budget = scenario.power_budget
    oma_s = 0.5 * np.log2(1.0 + xs)
    oma_w = 0.5 * np.log2(1.0 + xw)
    x_int = xw if scenario.interference == "weak" else xs

    def fitness(pop):
        ds = decode(pop[:, :n_pairs])
        dw = 1.0 - ds
        if joint_power:
            frac = pop[:, n_pairs:]
            power = frac * cp
        else:
            frac = 1.0
            power = np.full_like(ds, cp)
        rw = np.log2(1.0 + dw * frac * xw)
        rs = np.log2(1.0 + ds * frac * xs / (dw * frac * x_int + 1.0))
        bad = (rs < oma_s - QOS_TOL) | (rw < oma_w - QOS_TOL)
        ee = ((rs + rw) / power).sum(axis=1)
        over = power.sum(axis=1) > budget + 1e-12
        return ee - PENALTY * (bad.sum(axis=1) + over)

    return fitness


def zouppa(pairing, scenario: Scenario, topology: Topology, zoa_config: zoa.ZoaConfig | None = None,
           joint_power=False, search_space="interval", rng=None) -> ZouppaResult:
    """ZOA search over the power split of every served pair.

    With ``search_space="interval"`` (weak-gain interference, fixed cluster
    power) each coordinate ``z`` in [0, 1] places the weak share inside the
    pair's QoS-feasible interval, ``lo + z (hi - lo)``; pairs with an empty
    interval fall back to ``z`` as the raw strong share.  ``"box"`` searches
    the strong share directly in [0, 1] and relies on the QoS penalty alone.
    The population is seeded with the BPA and FPA splits.  With
    ``joint_power`` the cluster powers are searched too, as fractions in
    [0.01, 1] of the cluster budget (box mode only).

    Raises InfeasibleError (carrying the best result) when some pair cannot
    meet the NOMA >= OMA rate test.
    """
    if search_space not in ("interval", "box"):
        raise ValueError(f"search_space must be 'interval' or 'box', got {search_space!r}")
    xs, xw = pair_snrs(pairing, scenario, topology)
    n_pairs = xs.shape[0]
    cp = scenario.cluster_power
    if not joint_power and n_pairs * cp > scenario.power_budget + 1e-12:
        raise ConstraintViolation("C3", f"{n_pairs} clusters at {cp} W exceed the {scenario.power_budget} W budget")
    if n_pairs == 0:
        empty = PowerAllocation(np.zeros(0), np.zeros(0), np.zeros(0))
        return ZouppaResult(empty, 0.0, True, np.zeros(0, bool), 0.0, [0.0])

    cfg = zoa_config or zoa.ZoaConfig()
    dim = 2 * n_pairs if joint_power else n_pairs
    lower = np.zeros(dim)
    upper = np.ones(dim)
    if joint_power:
        lower[n_pairs:] = 0.01
    cfg = zoa.ZoaConfig(**{**cfg.__dict__, "dimension": dim, "lower": lower, "upper": upper})

    use_interval = search_space == "interval" and scenario.interference == "weak" and not joint_power
    if use_interval:
        lo, hi = weak_share_interval(xs, xw)
        ok = hi >= lo
        width = np.where(ok, hi - lo, 1.0)
        scale = np.where(width > 0, width, 1.0)

        def decode(z):
            return np.where(ok, 1.0 - (lo + z * width), z)

        def encode(ds):
            return np.where(ok, np.clip((1.0 - ds - lo) / scale, 0.0, 1.0), ds)
    else:
        def decode(z):
            return z

        encode = decode

    bpa_s, _ = bpa(scenario.beta1, scenario.beta2, xs, xw)
    seeds = [encode(bpa_s), encode(np.full(n_pairs, FPA_STRONG))]
    if joint_power:
        # scale the seeds' cluster powers down to the budget
        frac0 = min(1.0, scenario.power_budget / (n_pairs * cp))
        seeds = [np.concatenate([s, np.full(n_pairs, max(frac0, 0.01))]) for s in seeds]
    seeds = np.array(seeds)

    objective = _split_objective(xs, xw, scenario, joint_power, decode)
    result = zoa.optimize(objective, cfg, initial=seeds, vectorized=True, rng=rng)

    best = result.best.position
    ds = decode(best[:n_pairs])
    frac = best[n_pairs:] if joint_power else np.ones(n_pairs)
    alloc = PowerAllocation(ds, 1.0 - ds, frac * cp)
    ee, qos = _score(pairing, alloc, scenario, topology)

    # the encoded seed may round off its QoS boundary; keep the exact BPA split
    # whenever the search did not beat it
    seed_alloc = PowerAllocation(bpa_s, 1.0 - bpa_s, np.full(n_pairs, cp))
    seed_ee, seed_qos = _score(pairing, seed_alloc, scenario, topology)
    if not joint_power and seed_qos.all() and (seed_ee >= ee or not qos.all()):
        alloc, ee, qos = seed_alloc, seed_ee, seed_qos

    out = ZouppaResult(alloc, ee, bool(qos.all()), qos, seed_ee, result.trace)
    if not out.feasible:
        bad = np.flatnonzero(~qos).tolist()
        raise InfeasibleError(f"no power split meets the QoS test for pairs {bad}", result=out)
    return out

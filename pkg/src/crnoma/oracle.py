"""Brute-force references for small instances.

Nothing here touches the metaheuristic or its random streams: results depend
on the instance alone.  Enumeration is lexicographic and only a strictly
better candidate replaces the incumbent, so ties go to the lowest index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .net_model import AvailabilityMatrix, Scenario, Topology, snr_linear
from .pairing import Pairing
from .power import PENALTY, bpa, fpa
from .rates import pair_rates

MAX_USERS = 8
MAX_CHANNELS = 6


@dataclass
class OracleResult:
    best_ee: float
    best_pairing: object  # Pairing, or None when no perfect matching exists
    best_delta: list
    enumerated_count: int
    feasible: bool = True  # every pair of the optimum meets its QoS test
    violations: int = 0


def perfect_matchings(users):
    """All ways to split ``users`` into unordered pairs, lexicographic order."""
    users = list(users)
    if not users:
        yield []
        return
    first, rest = users[0], users[1:]
    for i, partner in enumerate(rest):
        for tail in perfect_matchings(rest[:i] + rest[i + 1:]):
            yield [(first, partner)] + tail


def count_perfect_matchings(n):
    """``(n - 1)!!`` for even ``n``."""
    return math.prod(range(n - 1, 0, -2)) if n % 2 == 0 else 0


def _split(rule, beta2, xs, xw):
    if rule == "bpa":
        return bpa(1.0 - beta2, beta2, xs, xw)
    if rule == "fpa":
        dw, ds = fpa()
        return ds, dw
    return rule


def _pair_table(x, avail, rule, beta2, interference):
    """Rate sum, QoS flag, roles and split for every user pair on every channel."""
    n, m = x.shape
    table = {}
    for a, b in itertools.combinations(range(n), 2):
        for c in range(m):
            if not (avail[a, c] and avail[b, c]):
                continue
            s, w = (a, b) if x[a, c] >= x[b, c] else (b, a)
            ds, dw = _split(rule, beta2, x[s, c], x[w, c])
            rs, rw, ok = pair_rates(x[s, c], x[w, c], ds, dw, interference)
            table[a, b, c] = (float(rs + rw), bool(ok), (s, w), (float(ds), float(dw)))
    return table


def exhaustive_pairing(scenario: Scenario, topology: Topology, avail: AvailabilityMatrix,
                       delta_rule="bpa", enforce_qos=True) -> OracleResult:
    """Best pairing and channel map by full enumeration.

    ``delta_rule`` is ``"bpa"`` (with the scenario's beta2), ``"fpa"`` or a
    ``(delta_strong, delta_weak)`` tuple.  With ``enforce_qos`` the objective
    is the penalized fitness used by the pairing search: fewest QoS-violating
    pairs first, then highest EE.  Otherwise EE alone is maximized.
    """
    n, m = topology.n_users, topology.m_channels
    if n > MAX_USERS:
        raise ConfigError("n_users", f"instance too large for enumeration: {n} users > {MAX_USERS}")
    if m > MAX_CHANNELS:
        raise ConfigError("m_channels", f"instance too large for enumeration: {m} channels > {MAX_CHANNELS}")
    if n % 2:
        raise ConfigError("n_users", f"need an even number of users, got {n}")

    x = snr_linear(scenario) * topology.gains
    table = _pair_table(x, avail.entries, delta_rule, scenario.beta2, scenario.interference)
    cp = scenario.cluster_power
    n_pairs = n // 2

    best_key = (-math.inf,)
    best = OracleResult(-math.inf, None, [], 0, feasible=False, violations=n_pairs)
    count = 0
    for pairs in perfect_matchings(range(n)):
        for chans in itertools.permutations(range(m), n_pairs):
            entries = [table.get((a, b, c)) for (a, b), c in zip(pairs, chans)]
            if any(e is None for e in entries):
                continue
            count += 1
            ee = math.fsum(e[0] for e in entries) / cp
            bad = sum(not e[1] for e in entries)
            key = (ee - PENALTY * bad,) if enforce_qos else (ee,)
            if key > best_key:
                best_key = key
                best = OracleResult(
                    ee, Pairing(tuple(e[2] for e in entries), tuple(chans), ()),
                    [e[3] for e in entries], 0, feasible=bad == 0, violations=bad)
    best.enumerated_count = count
    return best


def grid_delta_search(gain_strong, gain_weak, snr, grid_step=1e-3, interference="weak", cluster_power=1.0):
    """Best strong-user share on the grid ``{0, step, ..., 1}``.

    The weak user takes the remainder.  Points failing either user's QoS test
    are discarded; returns ``(nan, -inf)`` when none survives.  Ties go to the
    smallest share.
    """
    if not 0 < grid_step <= 0.01:
        raise ConfigError("grid_step", f"must lie in (0, 0.01], got {grid_step}")
    steps = int(round(1.0 / grid_step))
    ds = np.minimum(np.arange(steps + 1) * grid_step, 1.0)
    rs, rw, ok = pair_rates(snr * gain_strong, snr * gain_weak, ds, 1.0 - ds, interference)
    ee = np.where(ok, (rs + rw) / cluster_power, -np.inf)
    i = int(np.argmax(ee))
    if not np.isfinite(ee[i]):
        return math.nan, -math.inf
    return float(ds[i]), float(ee[i])

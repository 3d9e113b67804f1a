"""OMA / uplink-NOMA achievable rates, the per-user QoS test and network EE.

Every rate takes the linear SNR ``p / sigma^2`` and a channel gain, so the
noise power never appears on its own.  All functions broadcast over numpy
arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation

# slack on rate comparisons; the optimum of the power split sits exactly on
# the weak user's QoS boundary
QOS_TOL = 1e-12
POWER_TOL = 1e-12


def oma_rate(snr, gain):
    return 0.5 * np.log2(1.0 + snr * gain)


def noma_weak_rate(snr, delta_weak, gain_weak):
    return np.log2(1.0 + delta_weak * snr * gain_weak)


def noma_strong_rate(snr, delta_strong, delta_weak, gain_strong, interference_gain=None):
    """Strong-user rate with the weak user's signal as residual interference.

    ``interference_gain`` defaults to ``gain_strong``, the literal form of the
    rate expression; pass the weak user's gain for the physical uplink model.
    """
    if interference_gain is None:
        interference_gain = gain_strong
    return np.log2(1.0 + delta_strong * snr * gain_strong / (delta_weak * snr * interference_gain + 1.0))


def pair_rates(x_strong, x_weak, delta_strong, delta_weak, interference="weak"):
    """Rates of a pair given received SNRs ``x = snr * gain``.

    Returns ``(rate_strong, rate_weak, qos_ok)``; ``qos_ok`` is the per-user
    test NOMA >= OMA for both members, with OMA at the full power.
    """
    x_int = x_weak if interference == "weak" else x_strong
    rate_w = np.log2(1.0 + delta_weak * x_weak)
    rate_s = np.log2(1.0 + delta_strong * x_strong / (delta_weak * x_int + 1.0))
    ok = (rate_s >= 0.5 * np.log2(1.0 + x_strong) - QOS_TOL) & (rate_w >= 0.5 * np.log2(1.0 + x_weak) - QOS_TOL)
    return rate_s, rate_w, ok


@dataclass(frozen=True)
class PairEval:
    rate_strong: float
    rate_weak: float
    oma_rate_strong: float
    oma_rate_weak: float
    pair_power: float
    delta_strong: float = 0.0
    delta_weak: float = 0.0

    @property
    def pair_ee(self):
        return (self.rate_strong + self.rate_weak) / self.pair_power


def evaluate_pair(snr, gain_strong, gain_weak, delta_strong, delta_weak,
                  pair_power=1.0, cluster_power=1.0, interference="weak") -> PairEval:
    """Evaluate one cluster transmitting at ``pair_power``.

    The OMA reference is always taken at ``cluster_power``, the maximum a
    meter may transmit.
    """
    eff = snr * pair_power / cluster_power
    x_int = gain_weak if interference == "weak" else gain_strong
    return PairEval(
        rate_strong=float(noma_strong_rate(eff, delta_strong, delta_weak, gain_strong, x_int)),
        rate_weak=float(noma_weak_rate(eff, delta_weak, gain_weak)),
        oma_rate_strong=float(oma_rate(snr, gain_strong)),
        oma_rate_weak=float(oma_rate(snr, gain_weak)),
        pair_power=float(pair_power),
        delta_strong=float(delta_strong),
        delta_weak=float(delta_weak),
    )


def qos_satisfied(pair_eval: PairEval) -> bool:
    return bool(
        pair_eval.rate_strong >= pair_eval.oma_rate_strong - QOS_TOL
        and pair_eval.rate_weak >= pair_eval.oma_rate_weak - QOS_TOL
    )


def network_ee(pairs, total_power=None, cluster_power=None) -> float:
    """Sum of per-cluster EE after checking the power constraints.

    C2 requires ``delta_strong + delta_weak <= 1`` and a positive pair power
    not above ``cluster_power`` (when given); C3 bounds the summed pair power
    by ``total_power`` (when given).
    """
    pairs = list(pairs)
    for j, pe in enumerate(pairs):
        if pe.delta_strong + pe.delta_weak > 1.0 + POWER_TOL:
            raise ConstraintViolation(
                "C2", f"pair {j} splits {pe.delta_strong + pe.delta_weak:.6g} > 1 of its power", j)
        if not pe.pair_power > 0 or (cluster_power is not None and pe.pair_power > cluster_power + POWER_TOL):
            raise ConstraintViolation("C2", f"pair {j} power {pe.pair_power:.6g} outside (0, {cluster_power}]", j)
    if total_power is not None:
        spent = math.fsum(pe.pair_power for pe in pairs)
        if spent > total_power + POWER_TOL:
            raise ConstraintViolation("C3", f"total pair power {spent:.6g} exceeds {total_power:.6g}")
    return math.fsum(pe.pair_ee for pe in pairs)

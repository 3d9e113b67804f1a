import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fixed_topology, instance
from crnoma import zoa
from crnoma.errors import ConstraintViolation, InfeasibleError
from crnoma.net_model import AvailabilityMatrix, Scenario
from crnoma.oracle import grid_delta_search
from crnoma.pairing import Pairing, pairing_ee, upwo_pairing, validate_allocation, zoup
from crnoma.power import bpa, fpa, qos_floor, rule_allocation, weak_share_interval, zouppa
from crnoma.rates import pair_rates


def test_fpa_values():
    assert fpa() == (0.75, 0.25)
    assert sum(fpa()) == 1.0


def test_bpa_values():
    assert bpa(0.5, 0.5, 0.0, 0.0) == (0.5, 0.5)
    ds, dw = bpa(0.0, 1.0, 10.0, 3.0)
    assert ds == pytest.approx(1 / 3, abs=1e-15) and dw == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(ValueError):
        bpa(0.5, 0.6, 1.0, 1.0)
    with pytest.raises(ValueError):
        bpa(1.5, -0.5, 1.0, 1.0)


def test_bpa_strong_share_at_most_half():
    rng = np.random.default_rng(0)
    b2 = rng.random(100_000)
    ds, dw = bpa(0.0, 1.0, 0, 0)  # scalar check of the rule itself
    ds, dw = np.vectorize(lambda b, a, c: bpa(1 - b, b, a, c))(b2, rng.exponential(1e3, b2.size),
                                                               rng.exponential(1e3, b2.size))
    assert np.all((ds > 0) & (ds <= 0.5))
    assert np.all(ds + dw == 1.0)


def test_qos_floor_is_exact():
    for x in (0.0, 0.3, 3.0, 1e4):
        d = qos_floor(x)
        assert math.log2(1 + d * x) == pytest.approx(0.5 * math.log2(1 + x), abs=1e-12)


# below ~1e-3 every rate gap drowns in the 1e-12 QoS slack
@given(xs=st.floats(1e-3, 1e4), xw=st.floats(1e-3, 1e4))
def test_feasible_interval_matches_grid(xs, xw):
    xs, xw = max(xs, xw), min(xs, xw)
    lo, hi = weak_share_interval(xs, xw)
    dw = np.linspace(0, 1, 2001)
    ok = pair_rates(xs, xw, 1 - dw, dw)[2]
    inside = (dw >= lo + 1e-9) & (dw <= hi - 1e-9)
    outside = (dw < lo - 1e-9) | (dw > hi + 1e-9)
    assert np.all(ok[inside]) and not np.any(ok[outside])
    assert hi >= lo - 1e-12  # always servable under weak-gain interference


def test_feasible_interval_zero_snr():
    assert tuple(map(float, weak_share_interval(0.0, 0.0))) == (0.0, 1.0)
    lo, hi = weak_share_interval(3.0, 0.0)
    assert (float(lo), float(hi)) == (0.0, pytest.approx(2 / 3))


def test_rule_allocation(small):
    sc, topo, avail = small
    p = upwo_pairing(topo, avail)
    a = rule_allocation(p, sc, topo, (0.4, 0.6))
    assert np.all(a.delta_strong == 0.4) and np.all(a.pair_power == sc.cluster_power)
    assert np.all(rule_allocation(p, sc, topo, "fpa").delta_weak == 0.75)


def _single_pair(seed, snr_db=30.0):
    sc = Scenario(n_users=2, m_channels=1, snr_db=snr_db, availability_prob=1.0)
    topo, _ = instance(sc, seed)
    g = topo.gains[:, 0]
    s, w = (0, 1) if g[0] >= g[1] else (1, 0)
    return sc, topo, Pairing(((s, w),), (0,), ())


def test_equal_gains_zero_db_beats_bpa():
    sc = Scenario(n_users=2, m_channels=1, snr_db=0.0)
    topo = fixed_topology([[0.7], [0.7]])
    p = Pairing(((0, 1),), (0,), ())
    res = zouppa(p, sc, topo)
    # equal gains make the summed rate independent of the split
    assert res.ee >= pairing_ee(p, sc, topo, "bpa")[0] * (1 - 1e-12)


def test_single_pair_close_to_grid():
    close = 0
    for seed in range(30):
        sc, topo, p = _single_pair(seed)
        (s, w), = p.pairs
        _, grid_ee = grid_delta_search(topo.gains[s, 0], topo.gains[w, 0], 1000.0)
        close += abs(zouppa(p, sc, topo).ee - grid_ee) <= 0.01 * grid_ee
    assert close >= 29


@pytest.mark.parametrize("space", ["interval", "box"])
def test_zouppa_dominates_bpa_and_is_valid(space):
    sc = Scenario(n_users=40, m_channels=30)
    for seed in range(5):
        topo, avail = instance(sc, seed)
        z = zoup(sc, topo, avail, rng=np.random.default_rng(seed))
        res = zouppa(z.pairing, sc, topo, search_space=space, rng=np.random.default_rng(seed))
        assert res.ee >= res.seed_ee == z.ee
        assert validate_allocation(z.pairing, res.allocation, sc, topo) == []
        assert np.all(np.diff(res.trace) >= 0)


def test_interval_search_beats_box_search():
    sc = Scenario(n_users=40, m_channels=30)
    topo, avail = instance(sc, 1)
    z = zoup(sc, topo, avail)
    assert zouppa(z.pairing, sc, topo).ee > zouppa(z.pairing, sc, topo, search_space="box").ee


def test_weak_user_ends_on_its_floor():
    sc, topo, p = _single_pair(3)
    res = zouppa(p, sc, topo, zoa.ZoaConfig(patience=None))
    (s, w), = p.pairs
    floor = qos_floor(1000.0 * topo.gains[w, 0])
    assert res.allocation.delta_weak[0] == pytest.approx(floor, rel=1e-3)


def test_joint_power_respects_budget():
    sc = Scenario(n_users=10, m_channels=8, total_power=3.0)
    topo, avail = instance(sc, 2)
    z = zoup(sc.replace(total_power=None), topo, avail)
    with pytest.raises(ConstraintViolation):
        zouppa(z.pairing, sc, topo)
    try:
        res = zouppa(z.pairing, sc, topo, joint_power=True)
    except InfeasibleError as err:
        res = err.result
    assert res.allocation.pair_power.sum() <= 3.0 + 1e-12
    assert np.all(res.allocation.pair_power <= sc.cluster_power)


def test_infeasible_pair_reported():
    # strong-gain interference: an unequal pair can never meet both QoS tests
    sc = Scenario(n_users=2, m_channels=1, interference="strong")
    topo = fixed_topology([[0.01], [0.001]])
    with pytest.raises(InfeasibleError, match=r"pairs \[0\]"):
        zouppa(Pairing(((0, 1),), (0,), ()), sc, topo)


def test_bad_search_space():
    sc, topo, p = _single_pair(0)
    with pytest.raises(ValueError):
        zouppa(p, sc, topo, search_space="sphere")


@pytest.mark.xfail(strict=True, reason="power-split headroom over BPA at 15 dB is about 0.2% in this channel model; "
                                       "see the decisions ledger")
def test_zouppa_gain_over_zoup_at_15db():
    sc = Scenario(snr_db=15.0)
    gains = []
    for seed in range(10):
        topo, avail = instance(sc, seed)
        z = zoup(sc, topo, avail, rng=np.random.default_rng(seed))
        gains.append(zouppa(z.pairing, sc, topo).ee / z.ee)
    assert np.mean(gains) >= 1.10

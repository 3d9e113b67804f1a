import collections
import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fixed_topology, instance
from crnoma import zoa
from crnoma.errors import InfeasibleError
from crnoma.net_model import AvailabilityMatrix, Scenario, snr_linear
from crnoma.pairing import (Pairing, adjacent_pairing, decode_pairing, keys_to_order, oma_baseline, order_to_keys,
                            pair_order, pairing_csv, pairing_ee, random_pairing, upwo_pairing, validate_pairing, zoup)
from crnoma.power import rule_allocation


def _all_true(n, m):
    return AvailabilityMatrix(np.ones((n, m), bool))


def test_two_users_one_channel():
    topo = fixed_topology([[0.2], [0.5]])
    p = decode_pairing([0.3, 0.9], topo, _all_true(2, 1))
    assert p.pairs == ((1, 0),) and p.channels == (0,) and p.unpaired == ()


def test_unique_matching_found_for_every_inducing_key():
    # users 0,1 share only channel 0; users 2,3 share only channel 1;
    # any other pairing has no common channel for some pair
    avail = AvailabilityMatrix([[1, 0], [1, 0], [0, 1], [0, 1]])
    topo = fixed_topology(np.random.default_rng(0).random((4, 2)))
    sc = Scenario(n_users=4, m_channels=2)
    rng = np.random.default_rng(1)
    found = 0
    for _ in range(300):
        keys = rng.random(4)
        order = keys_to_order(keys).tolist()
        pairs = {frozenset(order[0:2]), frozenset(order[2:4])}
        for opt in (False, True):
            p = decode_pairing(keys, topo, avail, sc, optimize_channels=opt)
            if pairs == {frozenset((0, 1)), frozenset((2, 3))}:
                assert p.feasible
                assert dict(zip(map(frozenset, p.pairs), p.channels)) == {frozenset((0, 1)): 0, frozenset((2, 3)): 1}
                found += 1
            else:
                assert not p.feasible and len(p.unpaired) == 4
    assert found > 0


def test_sorted_keys_pair_neighbours():
    topo = fixed_topology([1.0, 2.0, 3.0, 0.5, 0.7, 0.1], m=3)
    p = decode_pairing(np.linspace(0, 1, 6), topo, _all_true(6, 3))
    assert [frozenset(q) for q in p.pairs] == [frozenset((0, 1)), frozenset((2, 3)), frozenset((4, 5))]
    assert p.pairs == ((1, 0), (2, 3), (4, 5))


def test_order_keys_round_trip():
    order = np.random.default_rng(2).permutation(9)
    np.testing.assert_array_equal(keys_to_order(order_to_keys(order)), order)
    np.testing.assert_array_equal(keys_to_order([0.5, 0.5, 0.1]), [2, 0, 1])


def test_benchmarks_by_gain():
    topo = fixed_topology([4.0, 3.0, 2.0, 1.0], m=2)
    avail = _all_true(4, 2)
    assert adjacent_pairing(topo, avail).pairs == ((0, 1), (2, 3))
    assert upwo_pairing(topo, avail).pairs == ((0, 2), (1, 3))


def test_two_user_benchmarks_agree():
    topo = fixed_topology([0.1, 0.4])
    avail = _all_true(2, 1)
    rnd = random_pairing(topo, avail, np.random.default_rng(0))
    assert adjacent_pairing(topo, avail).pairs == rnd.pairs == ((1, 0),)


def test_random_pairing_uniform():
    topo = fixed_topology([4.0, 3.0, 2.0, 1.0], m=2)
    avail = _all_true(4, 2)
    rng = np.random.default_rng(6)
    counts = collections.Counter()
    for _ in range(10_000):
        p = random_pairing(topo, avail, rng)
        assert p.unpaired == ()
        counts[frozenset(frozenset(q) for q in p.pairs)] += 1
    assert len(counts) == 3
    assert all(abs(c / 10_000 - 1 / 3) < 0.02 for c in counts.values())


def test_random_pairing_gives_up():
    avail = AvailabilityMatrix([[1, 0], [0, 1]])
    with pytest.raises(InfeasibleError):
        random_pairing(fixed_topology([[1.0, 1.0], [2.0, 2.0]]), avail, np.random.default_rng(0), retries=5)


def test_adjacent_pairs_are_sorted_neighbours():
    sc = Scenario(n_users=20, m_channels=20, availability_prob=1.0)
    for seed in range(10):
        topo, avail = instance(sc, seed)
        ranked = np.argsort(-topo.user_gain, kind="stable").tolist()
        expected = {frozenset(ranked[i:i + 2]) for i in range(0, 20, 2)}
        assert {frozenset(q) for q in adjacent_pairing(topo, avail).pairs} == expected


def test_upwo_pairs_span_halves():
    sc = Scenario(n_users=20, m_channels=20, availability_prob=1.0)
    topo, avail = instance(sc, 4)
    top = set(np.argsort(-topo.user_gain, kind="stable")[:10].tolist())
    for s, w in upwo_pairing(topo, avail).pairs:
        assert (s in top) != (w in top)


def test_oma_examples():
    sc = Scenario(n_users=2, m_channels=2)
    topo = fixed_topology([[0.01, 0.01], [0.002, 0.002]])
    res = oma_baseline(sc, topo, _all_true(2, 2))
    r = 0.5 * np.log2(1 + 1000 * np.array([0.01, 0.002]))
    assert res.ee == pytest.approx(r.sum() / 2, abs=1e-12)
    sc = Scenario(n_users=10, m_channels=5)
    topo, _ = instance(sc, 0)
    assert len(oma_baseline(sc, topo, _all_true(10, 5)).served) == 5


def test_schemes_produce_valid_pairings():
    sc = Scenario(n_users=30, m_channels=20, availability_prob=0.6)
    for seed in range(5):
        topo, avail = instance(sc, seed)
        rng = np.random.default_rng(seed)
        schemes = [random_pairing(topo, avail, rng), adjacent_pairing(topo, avail), upwo_pairing(topo, avail),
                   zoup(sc, topo, avail, rng=rng).pairing]
        for p in schemes:
            assert validate_pairing(p, topo, avail) == []


def test_validator_reports_problems():
    topo = fixed_topology([[3.0, 1.0], [1.0, 3.0], [2.0, 2.0], [1.0, 1.0]])
    avail = AvailabilityMatrix([[1, 1], [1, 0], [1, 1], [1, 1]])
    bad = Pairing(((0, 1), (2, 3)), (1, 1), ())
    problems = validate_pairing(bad, topo, avail)
    assert any("more than one pair" in p for p in problems)
    assert any(p.startswith("C5") for p in problems)
    assert any("smaller gain" in p for p in problems)
    assert any(p.startswith("C4") for p in validate_pairing(Pairing(((0, 1),), (0,), ()), topo, avail))


def test_zoup_two_users_equals_the_pair():
    sc = Scenario(n_users=2, m_channels=1)
    topo, avail = instance(sc, 8)
    res = zoup(sc, topo, avail)
    assert res.ee == pytest.approx(pairing_ee(Pairing(res.pairing.pairs, (0,), ()), sc, topo)[0], abs=1e-12)


def test_zoup_infeasible_carries_result():
    # every pair shares the channel only if 0 pairs with 1, but then BPA fails QoS at beta2=0
    sc = Scenario(n_users=2, m_channels=1, beta2=0.0)
    topo, avail = instance(sc, 0)
    with pytest.raises(InfeasibleError) as err:
        zoup(sc, topo, avail)
    assert err.value.result is not None and not err.value.result.feasible


def test_zoup_beats_upwo_on_average():
    sc = Scenario()
    diffs = []
    for seed in range(5):
        topo, avail = instance(sc, seed)
        z = zoup(sc, topo, avail, rng=np.random.default_rng(seed))
        diffs.append(z.ee - pairing_ee(upwo_pairing(topo, avail), sc, topo)[0])
        assert np.all(np.diff(z.trace) >= 0)
    assert np.mean(diffs) > 0


def test_zoup_fitness_matches_reported_ee(small):
    sc, topo, avail = small
    res = zoup(sc, topo, avail, zoa.ZoaConfig(rng_seed=2))
    assert res.trace[-1] == pytest.approx(res.ee, rel=1e-12)


@given(seed=st.integers(0, 10**6))
def test_decode_deterministic(seed):
    sc = Scenario(n_users=8, m_channels=5, availability_prob=0.6)
    topo, avail = instance(sc, seed % 50)
    keys = np.random.default_rng(seed).random(8)
    assert decode_pairing(keys, topo, avail, sc, True) == decode_pairing(keys.copy(), topo, avail, sc, True)


def test_rate_aware_channels_never_worse(small):
    sc, topo, avail = small
    rng = np.random.default_rng(0)
    for _ in range(30):
        order = rng.permutation(8)
        plain = pair_order(order, topo, avail, sc)
        tuned = pair_order(order, topo, avail, sc, optimize_channels=True)
        assert len(tuned) == len(plain)
        e0, q0 = pairing_ee(plain, sc, topo)
        e1, q1 = pairing_ee(tuned, sc, topo)
        assert (q1.sum(), e1) >= (q0.sum(), e0 - 1e-12)


def test_pairing_csv():
    topo = fixed_topology([4.0, 3.0, 2.0, 1.0], m=2)
    sc = Scenario(n_users=4, m_channels=2)
    p = upwo_pairing(topo, _all_true(4, 2))
    alloc = rule_allocation(p, sc, topo, "fpa")
    rows = list(csv.reader(io.StringIO(pairing_csv(p, alloc, [1.0, 2.0]))))
    assert rows[0] == ["pair", "strong_user", "weak_user", "channel", "delta_strong", "delta_weak", "pair_ee"]
    assert rows[1][1:3] == ["0", "2"] and rows[1][4:] == ["0.25", "0.75", "1"]

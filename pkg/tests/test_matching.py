import itertools
import math
import random

import numpy as np
import pytest

from dyckmatch.errors import IndexOutOfRange, NotABridge, SizeMismatch
from dyckmatch.errors import TooLarge
from dyckmatch.matching import (Matching, OrderStatisticSet, cost,
                                count_optimal, decode_all, decode_many,
                                decode_mth, entropy, enumerate_optimal, h_lb,
                                is_optimal, is_optimal_many,
                                k_lb_profile, k_pi_profile, ordered_matching,
                                peak_stack_size, stack)
from dyckmatch.oracle import exhaustive_optima
from dyckmatch.paths import Instance, SignPath, from_instance

from conftest import all_bridges, random_bridge

P = SignPath.parse
ID2, SWAP2 = Matching((0, 1)), Matching((1, 0))

# A non-optimal matching on WWBBWBWBWBWB with arcs p1-p6, p2-p3, p4-p7,
# p5-p8, p9-p12, p10-p11, i.e. w1-b3, w2-b1, w3-b4, w4-b2, w5-b6, w6-b5.
# Its stack after point 5 holds both colours.
CROSSED_PATH = P("WWBBWBWBWBWB")
CROSSED_MATCHING = Matching.from_pairs([[1, 3], [2, 1], [3, 4], [4, 2], [5, 6], [6, 5]])


def random_instance(n, rng):
    coords = rng.random(2 * n)
    return Instance(tuple(coords[:n]), tuple(coords[n:]))


def test_cost_examples():
    assert cost(Instance((1,), (2,)), Matching((0,))) == 1
    sep = Instance((1, 2), (3, 4))
    assert cost(sep, ID2) == 4 and cost(sep, SWAP2) == 4
    nested = Instance((1, 4), (2, 3))
    assert cost(nested, ID2) == 2 and cost(nested, SWAP2) == 4
    with pytest.raises(SizeMismatch):
        cost(sep, Matching((0,)))


def test_k_pi_profile_examples():
    assert k_pi_profile(Instance((1, 2), (3, 4)), ID2).values == (0, 1, 2, 1, 0)
    assert k_pi_profile(Instance((0.7,), (0.2,)), Matching((0,))).values == (0, 1, 0)


def test_k_lb_profile_examples():
    prof = k_lb_profile(Instance((1, 2), (3, 4)))
    assert prof.values == (0, 1, 2, 1, 0) and h_lb(Instance((1, 2), (3, 4))) == 4
    prof = k_lb_profile(Instance((1, 3), (2, 4)))
    assert prof.values == (0, 1, 0, 1, 0) and h_lb(Instance((1, 3), (2, 4))) == 2


def test_profile_integral_equals_cost():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        inst = random_instance(n, rng)
        m = Matching(tuple(rng.permutation(n)))
        assert k_pi_profile(inst, m).integral() == pytest.approx(cost(inst, m), abs=1e-12)


def test_ordered_matching_attains_lower_bound():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        inst = random_instance(n, rng)
        assert cost(inst, ordered_matching(n)) == pytest.approx(h_lb(inst), rel=1e-12, abs=1e-12)


def test_cost_bounded_below_and_pointwise():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        inst = random_instance(n, rng)
        m = Matching(tuple(rng.permutation(n)))
        assert cost(inst, m) >= h_lb(inst) - 1e-12
        kpi = k_pi_profile(inst, m).values
        klb = k_lb_profile(inst).values
        assert all(a >= b for a, b in zip(kpi, klb))


def test_stacks_of_crossed_matching():
    assert stack(CROSSED_PATH, CROSSED_MATCHING, 2) == {("w", 1), ("w", 2)}
    assert stack(CROSSED_PATH, CROSSED_MATCHING, 5) == {("w", 1), ("b", 2), ("w", 3)}
    assert stack(CROSSED_PATH, CROSSED_MATCHING, 8) == frozenset()
    assert stack(CROSSED_PATH, CROSSED_MATCHING, 10) == {("w", 5), ("b", 5)}
    with pytest.raises(IndexOutOfRange):
        stack(CROSSED_PATH, CROSSED_MATCHING, 0)
    with pytest.raises(IndexOutOfRange):
        stack(CROSSED_PATH, CROSSED_MATCHING, 13)


def test_is_optimal_examples():
    assert is_optimal(P("WWBB"), ID2) and is_optimal(P("WWBB"), SWAP2)
    assert is_optimal(P("WBBW"), ID2) and not is_optimal(P("WBBW"), SWAP2)
    assert not is_optimal(CROSSED_PATH, CROSSED_MATCHING)


def test_is_optimal_agrees_with_stacks_definition(rnd):
    # slow reference: every stack empty or one colour
    for _ in range(300):
        n = rnd.randint(1, 6)
        path = random_bridge(n, rnd)
        perm = list(range(n))
        rnd.shuffle(perm)
        m = Matching(tuple(perm))
        ref = all(len({c for c, _ in stack(path, m, i)}) <= 1 for i in range(1, 2 * n + 1))
        assert is_optimal(path, m) == ref


def test_is_optimal_matches_cost_minimality():
    # on canonical integer instances, optimal == minimum cost over all N!
    for n in range(1, 6):
        for path in all_bridges(n):
            inst = _canonical(path)
            costs = {p: cost(inst, Matching(p)) for p in itertools.permutations(range(n))}
            best = min(costs.values())
            for p, c in costs.items():
                assert is_optimal(path, Matching(p)) == (c == best)


def _canonical(path):
    from dyckmatch.paths import to_canonical_instance
    return to_canonical_instance(path)


@pytest.mark.parametrize("path, z", [("WBWB", 1), ("WWBB", 2), ("WWWBBB", 6)])
def test_count_optimal_examples(path, z):
    fam = count_optimal(P(path))
    assert fam.Z == z
    assert math.prod(fam.radices) == fam.Z


def test_count_optimal_rejects_non_bridges():
    with pytest.raises(NotABridge):
        count_optimal(P("UUD"))
    with pytest.raises(NotABridge):
        entropy(P("UU"))


def test_count_is_big_integer():
    n = 300
    fam = count_optimal(P("U" * n + "D" * n))
    assert fam.Z == math.factorial(n)
    assert entropy(P("U" * n + "D" * n)) == pytest.approx(math.lgamma(n + 1), rel=1e-12)


@pytest.mark.parametrize("path, value", [
    ("WBWB", 0.0), ("WWBB", math.log(2)), ("WWWBBB", math.log(6)), ("", 0.0),
])
def test_entropy_examples(path, value):
    assert entropy(P(path)) == pytest.approx(value, abs=1e-15)


def test_entropy_is_log_z(rnd):
    for _ in range(200):
        path = random_bridge(rnd.randint(0, 80), rnd)
        assert entropy(path) == pytest.approx(math.log(count_optimal(path).Z), rel=1e-12, abs=1e-12)


def test_entropy_additive_over_concatenation(rnd):
    for _ in range(200):
        a = random_bridge(rnd.randint(0, 20), rnd)
        b = random_bridge(rnd.randint(0, 20), rnd)
        assert entropy(a + b) == pytest.approx(entropy(a) + entropy(b), abs=1e-12)
        assert count_optimal(a + b).Z == count_optimal(a).Z * count_optimal(b).Z


def test_decode_examples():
    assert decode_mth(P("WWBB"), 1).pairs() == [[1, 1], [2, 2]]
    assert decode_mth(P("WWBB"), 2).pairs() == [[1, 2], [2, 1]]
    assert decode_mth(P("WBWB"), 1) == ordered_matching(2)
    with pytest.raises(IndexOutOfRange):
        decode_mth(P("WWBB"), 3)
    with pytest.raises(IndexOutOfRange):
        decode_mth(P("WWBB"), 0)
    with pytest.raises(NotABridge):
        decode_mth(P("WWB"), 1)


def test_decode_first_is_ordered_matching(rnd):
    for _ in range(50):
        path = random_bridge(rnd.randint(1, 40), rnd)
        assert decode_mth(path, 1) == ordered_matching(path.size)


def _check_all_indices(path):
    fam = count_optimal(path)
    seen = set()
    for m in range(1, fam.Z + 1):
        match = decode_mth(path, m)
        assert is_optimal(path, match)
        seen.add(match)
    assert len(seen) == fam.Z


def test_decode_bijective_small():
    for n in range(0, 7):
        for path in all_bridges(n):
            _check_all_indices(path)


@pytest.mark.parametrize("n", [7, 8])
def test_decode_bijective_sampled(n, rnd):
    # sum of Z over all bridges is 3.4e5 (N=7) and 4.9e6 (N=8): sample bridges
    for _ in range(40):
        _check_all_indices(random_bridge(n, rnd))


def test_decode_random_indices_large(rnd):
    for _ in range(20):
        path = random_bridge(rnd.randint(20, 64), rnd)
        z = count_optimal(path).Z
        for _ in range(100):
            assert is_optimal(path, decode_mth(path, rnd.randint(1, z)))


def test_decoded_profiles_equal_lower_bound(rnd):
    for _ in range(50):
        path = random_bridge(rnd.randint(1, 64), rnd)
        inst = _canonical(path)
        z = count_optimal(path).Z
        klb = k_lb_profile(inst).values
        for m in (1, z, rnd.randint(1, z)):
            assert k_pi_profile(inst, decode_mth(path, m)).values == klb


def test_enumerate():
    assert len(list(enumerate_optimal(P("WWBB")))) == 2
    assert list(enumerate_optimal(P("WBWB"))) == [ordered_matching(2)]
    assert list(enumerate_optimal(SignPath(()))) == [Matching(())]


def test_enumerate_equals_decode_sequence(rnd):
    for _ in range(30):
        path = random_bridge(rnd.randint(1, 6), rnd)
        z = count_optimal(path).Z
        assert list(enumerate_optimal(path)) == [decode_mth(path, m) for m in range(1, z + 1)]


def test_enumerated_set_is_exact_argmin():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        inst = random_instance(n, rng)
        path = from_instance(inst)
        report = exhaustive_optima(inst)
        assert frozenset(enumerate_optimal(path)) == report.argmin_set
        assert report.degeneracy == count_optimal(path).Z


def test_order_statistic_set():
    rng = random.Random(5)
    s = OrderStatisticSet(100)
    ref = []
    for _ in range(2000):
        if ref and rng.random() < 0.45:
            r = rng.randrange(len(ref))
            assert s.select(r) == ref[r]
            s.remove(ref.pop(r))
        else:
            x = rng.randrange(100)
            if x not in ref:
                s.add(x)
                ref.append(x)
                ref.sort()
        assert len(s) == len(ref)
    with pytest.raises(IndexOutOfRange):
        s.select(len(ref))


def test_peak_stack_size():
    assert peak_stack_size(P("UUDD")) == 2
    assert peak_stack_size(P("UDUD")) == 1
    assert peak_stack_size(SignPath(())) == 0


def test_matching_serialisation():
    m = Matching.from_pairs([[1, 2], [2, 1]])
    assert m.perm == (1, 0)
    assert m.pairs() == [[1, 2], [2, 1]]
    with pytest.raises(ValueError):
        Matching((0, 0))


def test_batch_decoders_agree_with_decode_mth(rnd):
    for _ in range(150):
        path = random_bridge(rnd.randint(0, 7), rnd)
        z = count_optimal(path).Z
        table = decode_all(path)
        assert table.shape == (z, path.size)
        assert np.array_equal(table, decode_many(path, np.arange(1, z + 1)))
        for m in {1, z, rnd.randint(1, z)}:
            assert tuple(table[m - 1]) == decode_mth(path, m).perm


def test_batch_decoder_large_indices(rnd):
    path = random_bridge(40, rnd)
    z = count_optimal(path).Z
    ms = [1, z, z // 3 + 1, rnd.randint(1, z)]
    got = decode_many(path, ms)
    for row, m in zip(got, ms):
        assert tuple(row) == decode_mth(path, m).perm
    with pytest.raises(IndexOutOfRange):
        decode_many(path, [z + 1])
    with pytest.raises(TooLarge):
        decode_all(P("U" * 12 + "D" * 12), max_rows=1000)


def test_is_optimal_many(rnd):
    for _ in range(100):
        path = random_bridge(rnd.randint(1, 7), rnd)
        n = path.size
        perms = np.array([rnd.sample(range(n), n) for _ in range(40)])
        want = [is_optimal(path, Matching(tuple(q))) for q in perms]
        assert is_optimal_many(path, perms).tolist() == want
    with pytest.raises(SizeMismatch):
        is_optimal_many(P("UD"), np.zeros((3, 2), int))

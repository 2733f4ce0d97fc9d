import math

import pytest

from src.tiling import (
    GuardrailExceeded,
    Partition,
    TilingSequence,
    TilingSolver,
    bijection_check,
    column_estimate_holds,
    constrained,
    count_partitions,
    direct_minimal_partitions,
    enumerate_partitions,
    enumerate_tilings,
    exhaustive_minimum,
    kbox_check,
    kbox_families,
    minimal_partitions,
    padic_box,
    shortest_tilings,
    tilde_s,
    tiling_sweep,
    weight,
)


class TestPartitions:
    def test_enumeration_order(self):
        assert [k.k for k in enumerate_partitions(3, 2)] == [(3, 0), (2, 1)]

    def test_count(self):
        assert len(enumerate_partitions(4, 4)) == 5
        assert count_partitions(4, 4) == 5
        for r in range(0, 12):
            for d in range(1, 5):
                assert len(enumerate_partitions(r, d)) == count_partitions(r, d)

    def test_zero_is_a_single_vector(self):
        assert [k.k for k in enumerate_partitions(0, 3)] == [(0, 0, 0)]

    def test_rejects_increasing_vectors(self):
        with pytest.raises(ValueError):
            Partition((1, 2))

    def test_differences(self):
        assert Partition((5, 3, 3, 1)).differences() == [2, 0, 2, 1]

    def test_guardrail(self):
        with pytest.raises(GuardrailExceeded):
            enumerate_partitions(501, 2)
        with pytest.raises(GuardrailExceeded):
            enumerate_partitions(5, 13)


def test_weight():
    assert weight(Partition((1, 1, 1)), 2) == 1
    assert weight(Partition((3, 1)), 2) == 2
    assert weight(Partition((4, 0)), 3) == 2


def test_padic_box():
    box = padic_box(Partition((1, 1, 1)), 2)
    assert box.entries[:, 0].tolist() == [1, 1, 1]
    box = padic_box(Partition((2, 1)), 2)
    assert box.entries[0, 0] == 2
    assert box.rows() == [2, 1]
    box = padic_box(Partition((7, 4, 1)), 3)
    assert box.rows() == [7, 4, 1]
    assert box.max_entry() <= 2 * 2


def test_tilde_s_examples():
    assert tilde_s(3, {1, 3}, 2) == 1
    assert tilde_s(1, {2}, 2) == math.inf
    assert tilde_s(7, {1}, 2) == 3
    with pytest.raises(ValueError):
        tilde_s(0, {1}, 2)


def test_shortest_tilings_examples():
    assert [t.to_list() for t in shortest_tilings(3, {1, 3}, 2)] == [[[1, 0, 3]]]
    assert [t.to_list() for t in shortest_tilings(2, {1}, 2)] == [[[1, 1, 1]]]
    assert [t.to_list() for t in shortest_tilings(1, {1}, 2)] == [[[1, 0, 1]]]
    assert shortest_tilings(1, {2}, 2) == []
    with pytest.raises(GuardrailExceeded):
        shortest_tilings(600, {1}, 2)


def test_shortest_tilings_are_canonical():
    for t in shortest_tilings(12, {1, 2, 3}, 3):
        assert t.is_valid()
        assert t.weight == tilde_s(12, {1, 2, 3}, 3)


def test_tiling_sequence():
    t = TilingSequence(((1, 0, 3),), 3, frozenset({1, 3}), 2)
    assert t.is_valid()
    assert t.to_partition(3) == Partition((1, 1, 1))
    assert t.box(3).tolist() == [[1], [1], [1]]
    unordered = TilingSequence(((1, 1, 1), (1, 0, 1)), 3, frozenset({1}), 2)
    assert not unordered.is_valid()
    assert not TilingSequence(((2, 0, 3),), 6, frozenset({3}), 2).is_valid()


def test_enumerate_tilings():
    found = sorted(t.to_list() for t in enumerate_tilings(3, {1, 3}, 2))
    assert found == [[[1, 0, 1], [1, 1, 1]], [[1, 0, 3]]]


@pytest.mark.parametrize('S, p', [((1,), 2), ((2, 3), 2), ((1, 4), 3), ((3, 5, 7), 5), ((2,), 3)])
def test_knapsack_matches_exhaustive(S, p):
    solver = TilingSolver(S, p, 40)
    for r in range(1, 41):
        assert solver.minimum(r) == exhaustive_minimum(r, S, p)


def test_solver_range():
    solver = TilingSolver({1}, 2, 10)
    with pytest.raises(ValueError):
        solver.minimum(11)
    with pytest.raises(ValueError):
        TilingSolver(set(), 2, 10)


def test_constrained():
    assert constrained(Partition((1, 1, 1)), frozenset({3}))
    assert not constrained(Partition((2, 1, 1)), frozenset({3}))


@pytest.mark.parametrize('r, S, p, d', [(3, {1, 3}, 2, 3), (1, {2}, 2, 2), (6, {1, 2, 3}, 3, 3), (9, {2, 3}, 2, 4)])
def test_bijection(r, S, p, d):
    result = bijection_check(r, S, p, d)
    assert result.ok, result.reason
    assert result.tilings == result.minimal_partitions


def test_bijection_vacuous_case():
    result = bijection_check(1, {2}, 2, 2)
    assert result.tilde_s == math.inf
    assert result.tilings == 0


def test_bijection_needs_d_at_least_max_s():
    with pytest.raises(ValueError):
        bijection_check(3, {1, 5}, 2, 4)


def test_minimal_partitions():
    assert minimal_partitions(3, 3, 2) == [Partition((1, 1, 1))]


def test_column_estimate():
    assert column_estimate_holds(3, 2, 2)
    assert column_estimate_holds(4, 3, 1)
    assert not column_estimate_holds(12, 5, 1)


def test_kbox_tight_case():
    result = kbox_check(3, j=1, h=2, p=2)
    assert result.status == 'PASS'
    assert result.minimum == result.bound == 1


def test_kbox_holds():
    result = kbox_check(4, j=2, h=1, p=3)
    assert result.status == 'PASS'
    assert result.bound == 1


def test_kbox_flags_where_column_estimate_fails():
    result = kbox_check(9, j=3, h=1, p=5)
    assert result.status == 'FLAG'
    assert result.minimum < result.bound
    assert result.witness == Partition((1,) * 9 + (0,) * 3)
    assert result.cross_checked


@pytest.mark.parametrize('r, d, p', [(3, 3, 2), (9, 12, 5), (14, 6, 3), (20, 7, 2)])
def test_tiling_minimizers_match_direct_enumeration(r, d, p):
    least, direct = direct_minimal_partitions(r, d, p)
    assert least == TilingSolver(range(1, d + 1), p, r).minimum(r)
    assert set(direct) == set(minimal_partitions(r, d, p))


def test_kbox_cross_check_limit():
    assert kbox_check(12, j=2, h=1, p=3).cross_checked
    assert not kbox_check(40, j=2, h=1, p=3, direct_r_max=30).cross_checked
    assert kbox_check(40, j=2, h=1, p=3, direct_r_max=40).cross_checked


def test_kbox_families():
    families = kbox_families(12)
    assert (2, 2, 1) in families
    assert (5, 1, 3) in families
    assert all(j * (p ** h - 1) <= 12 for p, h, j in families)


def test_tiling_sweep_small():
    report = tiling_sweep(10, [(1,), (1, 3), (2, 5)], primes=(2, 3))
    assert report.passed, report.violations
    assert report.instances == 60
    assert report.bijections == 60


@pytest.mark.slow
def test_kbox_sweep_has_no_failures():
    from src.tiling import kbox_sweep

    results = kbox_sweep(300)
    assert not [r for r in results if r.status == 'FAIL']
    flagged = {(r.p, r.h, r.j) for r in results if r.status == 'FLAG'}
    assert flagged <= {(5, 1, 3)}


@pytest.mark.slow
def test_tiling_grid_acceptance_size():
    sets = [(1,), (2, 3), (1, 4, 9), (3, 5, 7, 11), (2, 6, 10, 12)]
    report = tiling_sweep(200, sets)
    assert report.passed, report.violations[:3]
    assert report.bijections >= 50

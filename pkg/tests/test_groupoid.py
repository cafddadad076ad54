"""Groupoid axioms, builders, divisible pairs, orbits, restriction, JSON I/O."""

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from groupavg.groupoid import (
    FiniteGroupAction,
    FiniteGroupoid,
    MalformedAction,
    NotInvariant,
    action_groupoid,
    cyclic_group,
    pair_groupoid,
    symmetric_group,
    trivial_groupoid,
)


def swap_action_on_two():
    z2 = cyclic_group(2)
    return FiniteGroupAction(z2, [1, 2], lambda g, u: (3 - u) if g == 1 else u)


# -- validate ----------------------------------------------------------------


def test_trivial_groupoid_is_valid():
    report = trivial_groupoid().validate()
    assert report.ok
    assert report.violations == []


@pytest.mark.parametrize("n_objects", [2, 3])
def test_pair_groupoid_is_valid(n_objects):
    G = pair_groupoid(list(range(n_objects)))
    assert G.n_arrows == n_objects**2
    assert G.validate().ok


@pytest.mark.parametrize("n", [1, 2, 5])
def test_cyclic_group_is_valid(n):
    G = cyclic_group(n)
    assert G.n_objects == 1
    assert G.n_arrows == n
    assert G.validate().ok


def test_symmetric_group_is_valid():
    G = symmetric_group(3)
    assert G.n_arrows == 6
    assert G.validate().ok


def test_corrupted_inverse_table_reports_only_that_arrow():
    P = pair_groupoid([0, 1])
    bad = dataclasses.replace(P, inverse=list(P.inverse))
    bad.inverse[1] = 1  # true inverse of arrow 1 is the opposite arrow
    report = bad.validate()
    assert not report.ok
    assert {v.rule for v in report.violations} == {"inverse"}
    assert all(1 in v.witness for v in report.violations)


def test_corrupted_compose_table_reported():
    P = pair_groupoid([0, 1])
    bad_compose = dict(P.compose)
    victim = next(k for k, v in bad_compose.items() if v != k[0])
    bad_compose[victim] = victim[0]
    bad = dataclasses.replace(P, compose=bad_compose)
    report = bad.validate()
    assert not report.ok
    assert any(v.rule in ("compose", "assoc", "unit", "inverse") for v in report.violations)


# -- action groupoids --------------------------------------------------------


def test_action_groupoid_z2_swap_on_two_points():
    A = action_groupoid(swap_action_on_two())
    assert A.n_objects == 2
    assert A.n_arrows == 4
    assert A.validate().ok
    assert A.orbits() == [[0, 1]]
    assert all(len(A.target_fiber(x)) == 2 for x in range(A.n_objects))


def test_action_groupoid_trivial_group_gives_units_only():
    act = FiniteGroupAction(cyclic_group(1), [1, 2, 3], lambda g, u: u)
    A = action_groupoid(act)
    assert A.n_arrows == 3
    assert sorted(A.unit) == [0, 1, 2]
    assert A.orbits() == [[0], [1], [2]]


def test_action_groupoid_group_bundle_over_one_point():
    act = FiniteGroupAction(cyclic_group(2), [1], lambda g, u: u)
    B = action_groupoid(act)
    assert B.n_objects == 1
    assert B.n_arrows == 2
    assert B.validate().ok


def test_action_groupoid_always_validates(s3_groupoid, z2_groupoid):
    assert s3_groupoid.validate().ok
    assert z2_groupoid.validate().ok


def test_malformed_action_identity():
    act = FiniteGroupAction(cyclic_group(2), [1, 2], lambda g, u: 1)
    with pytest.raises(MalformedAction):
        action_groupoid(act)


def test_malformed_action_compatibility():
    # act(g, -) is not a group action: applying the generator twice is not the identity
    act = FiniteGroupAction(cyclic_group(2), [1, 2], lambda g, u: 2 if g == 1 else u)
    with pytest.raises(MalformedAction):
        action_groupoid(act)


# -- divisible pairs ---------------------------------------------------------


def test_divisible_pairs_trivial_groupoid():
    assert trivial_groupoid().divisible_pairs() == [(0, 0, 0)]


def test_divisible_pairs_counts():
    assert len(pair_groupoid([0, 1]).divisible_pairs()) == 8
    assert len(action_groupoid(swap_action_on_two()).divisible_pairs()) == 8


def test_divisible_pairs_count_formula(s3_groupoid, z2_groupoid):
    for G in (pair_groupoid([0, 1, 2]), s3_groupoid, z2_groupoid):
        expected = sum(len(G.source_fiber(x)) ** 2 for x in range(G.n_objects))
        assert len(G.divisible_pairs()) == expected


def test_divisible_pair_quotient_solves_division(z2_groupoid, s3_groupoid):
    for G in (z2_groupoid, s3_groupoid):
        for g, h, q in G.divisible_pairs():
            assert G.src[g] == G.src[h]
            assert G.mul(q, h) == g


# -- orbits and left translation ----------------------------------------------


def test_orbits_two_orbit_action(z2_groupoid):
    assert z2_groupoid.orbits() == [[0, 1], [2]]


def test_left_translation_is_fiber_bijection(s3_groupoid, z2_groupoid):
    for G in (pair_groupoid([0, 1]), z2_groupoid, s3_groupoid):
        for g in G.arrows():
            dom = G.target_fiber(G.src[g])
            image = {G.mul(g, k) for k in dom}
            assert image == set(G.target_fiber(G.tgt[g]))


# -- restriction ---------------------------------------------------------------


def test_restrict_to_swapped_orbit(z2_groupoid):
    sub, kept = z2_groupoid.restrict([0, 1])
    assert sub.validate().ok
    assert sub.objects == [1, 2]
    assert kept == sorted(kept)
    assert sub.n_arrows == 4


def test_restrict_to_fixed_point_keeps_isotropy(z2_groupoid):
    sub, kept = z2_groupoid.restrict([2])
    assert sub.n_objects == 1
    assert sub.n_arrows == 2  # unit and the Z/2 isotropy arrow over the fixed point
    assert sub.validate().ok


def test_restrict_non_invariant_raises(z2_groupoid):
    with pytest.raises(NotInvariant):
        z2_groupoid.restrict([0])


@given(subset=st.sets(st.sampled_from([0, 1, 2]), min_size=1))
def test_restrict_accepts_exactly_orbit_unions(subset):
    G = action_groupoid(
        FiniteGroupAction(
            cyclic_group(2),
            [1, 2, 3],
            lambda g, u: {1: 2, 2: 1}.get(u, u) if g == 1 else u,
        )
    )
    splits_orbit = len(subset & {0, 1}) == 1
    if splits_orbit:
        with pytest.raises(NotInvariant):
            G.restrict(sorted(subset))
    else:
        sub, kept = G.restrict(sorted(subset))
        assert sub.validate().ok
        assert kept == sorted(kept)


# -- JSON ----------------------------------------------------------------------


def test_json_roundtrip(tmp_path, z2_groupoid):
    path = tmp_path / "groupoid.json"
    z2_groupoid.save(str(path))
    back = FiniteGroupoid.load(str(path))
    assert back.objects == z2_groupoid.objects
    assert back.src == z2_groupoid.src
    assert back.tgt == z2_groupoid.tgt
    assert back.compose == z2_groupoid.compose
    assert back.unit == z2_groupoid.unit
    assert back.inverse == z2_groupoid.inverse
    assert back.validate().ok


def test_from_json_rejects_sparse_arrow_ids():
    doc = trivial_groupoid().to_json_dict()
    doc["arrows"][0]["id"] = 1
    doc["inverses"] = {"1": 1}
    with pytest.raises(ValueError, match="dense"):
        FiniteGroupoid.from_json_dict(doc)

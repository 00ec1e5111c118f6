import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzycoarse.covers_asdim import (Cover, DisjointFamilies, ad_x_estimate, adx_radius, are_rt_disjoint,
                                      enlarge_family, lebesgue_pair_check, min_multiplicity_exhaustive,
                                      multiplicity, rt_disjointness, verify_asdim_witness)
from fuzzycoarse.exceptions import DomainError
from fuzzycoarse.fuzzy_space import ball, builtin_space, standard_space

PATH = builtin_space("path", 64)


def radius_r(R, t=1.0):
    """r with B(x, r, t) equal to the open metric ball of radius R."""
    return R / (t + R)


def intervals(step, length, n=64):
    return Cover(tuple(frozenset(range(a, min(a + length, n))) for a in range(0, n, step)))


@pytest.mark.parametrize("U, V, r, expected", [
    ({0}, {5}, 0.5, True),
    ({0}, {1}, 0.6, False),
    ({0, 1}, {0, 1}, 0.01, False),
])
def test_are_rt_disjoint_examples(U, V, r, expected):
    assert are_rt_disjoint(PATH, U, V, r, 1.0) is expected


def test_disjointness_reports_sup():
    chk = rt_disjointness(PATH, {0}, {1}, 0.6, 1.0)
    assert chk.sup == pytest.approx(0.5) and chk.pair == (0, 1) and not chk.boundary


@given(st.sets(st.integers(0, 63), min_size=1, max_size=6), st.sets(st.integers(0, 63), min_size=1, max_size=6),
       st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.1, 10))
@settings(max_examples=60, deadline=None)
def test_disjointness_symmetric_and_antitone(U, V, r1, r2, t):
    assert are_rt_disjoint(PATH, U, V, r1, t) == are_rt_disjoint(PATH, V, U, r1, t)
    lo, hi = sorted((r1, r2))
    if are_rt_disjoint(PATH, U, V, hi, t):
        assert are_rt_disjoint(PATH, U, V, lo, t)


def test_multiplicity_examples():
    assert multiplicity(Cover((frozenset({0, 1}), frozenset({2}))), 3) == 1
    assert multiplicity(intervals(4, 6), 64) == 2
    assert multiplicity(Cover((frozenset(range(5)), frozenset(range(4)))), 5) == 2
    with pytest.raises(DomainError, match="uncovered"):
        multiplicity(Cover((frozenset({0}),)), 3)


def test_duplicate_members_dropped_with_warning():
    with pytest.warns(UserWarning):
        c = Cover((frozenset({0, 1}), frozenset({1, 0})))
    assert len(c) == 1
    with pytest.raises(DomainError):
        Cover((frozenset(),))


def test_lebesgue_examples():
    whole = Cover((frozenset(range(64)),))
    assert lebesgue_pair_check(PATH, whole, 0.99, 100.0)
    two = builtin_space("path", 2)
    single = Cover((frozenset({0}), frozenset({1})))
    assert not lebesgue_pair_check(two, single, 0.9, 10.0)
    rep = lebesgue_pair_check(PATH, intervals(4, 6), 0.6, 1.0)
    assert rep.passed
    for x, j in enumerate(rep.containing):
        assert ball(PATH, x, 0.6, 1.0) <= intervals(4, 6).sets[j]


def test_lebesgue_failure_names_points():
    rep = lebesgue_pair_check(PATH, intervals(4, 4), 0.6, 1.0)
    assert not rep.passed and 3 in rep.failures and rep.containing[3] is None


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.1, 5), st.floats(0.1, 5))
@settings(max_examples=40, deadline=None)
def test_lebesgue_antitone(r1, r2, t1, t2):
    cover = intervals(8, 16)
    (rl, rh), (tl, th) = sorted((r1, r2)), sorted((t1, t2))
    if lebesgue_pair_check(PATH, cover, rh, th):
        assert lebesgue_pair_check(PATH, cover, rl, tl)


def test_enlarge_examples():
    assert enlarge_family(PATH, [{0, 1, 2, 3}], 0.6, 1.0) == [frozenset(range(5))]
    assert enlarge_family(PATH, [{10, 11}], 0.6, 1.0) == [frozenset({9, 10, 11, 12})]
    assert enlarge_family(PATH, [{5}, {9}], 1e-9, 1.0) == [frozenset({5}), frozenset({9})]


def path_families(R):
    fam0 = [range(8 * k, 8 * k + 4) for k in range(8)]
    fam1 = [range(8 * k + 4, 8 * k + 8) for k in range(8)]
    return DisjointFamilies.of(PATH, [fam0, fam1], radius_r(R), 1.0)


def test_asdim_witness_on_path():
    rep = verify_asdim_witness(PATH, path_families(1.5))
    assert rep.passed and rep.n == 1 and rep.covering
    assert all(f.worst_margin > 0 for f in rep.families)
    assert rep.bounded.holds(PATH, [(a, b) for a in range(4) for b in range(4)])


def test_asdim_witness_fails_at_radius_five():
    rep = verify_asdim_witness(PATH, path_families(5.5))
    assert not rep.passed
    bad = [f for f in rep.families if not f.passed]
    assert bad and all(abs(a - b) <= 5 for f in bad for a, b in [f.offending])


def test_asdim_zero_for_separated_clusters():
    d = np.full((6, 6), 100.0)
    for blk in ([0, 1, 2], [3, 4, 5]):
        d[np.ix_(blk, blk)] = 1.0
    np.fill_diagonal(d, 0.0)
    s = standard_space(d)
    fams = DisjointFamilies.of(s, [[[0, 1, 2], [3, 4, 5]]], radius_r(10.0), 1.0)
    assert verify_asdim_witness(s, fams).passed


def test_asdim_uncovered_reported():
    fams = DisjointFamilies.of(PATH, [[range(10)]], 0.5, 1.0)
    rep = verify_asdim_witness(PATH, fams)
    assert not rep.passed and not rep.covering and rep.uncovered[0] == 10


def test_enlarged_asdim_witness_has_lebesgue_pair():
    fams = path_families(1.5)
    grown = [enlarge_family(PATH, fam, 0.6, 1.0) for fam in fams.families]
    cover = Cover(tuple(s for fam in grown for s in fam))
    assert lebesgue_pair_check(PATH, cover, 0.6, 1.0)


def test_adx_radius_formula():
    s = builtin_space("path", 3)
    assert adx_radius(s, 0.6) == pytest.approx(1 - 0.5 * 0.16)


def test_adx_one_point():
    s = standard_space([[0.0]])
    tab = ad_x_estimate(s, 0.5, [0.1, 1.0, 10.0])
    assert [e.estimate for e in tab.entries] == [0, 0, 0]
    assert tab.label == "HEURISTIC UPPER BOUND"


def test_adx_path_at_most_one():
    bound = (radius_r(48.0), 1.0)
    tab = ad_x_estimate(PATH, 0.6, [0.25, 0.5, 1.0], bound=bound)
    assert all(e.estimate is not None and e.estimate <= 1 for e in tab.entries)
    for e in tab.entries:
        assert lebesgue_pair_check(PATH, e.cover, tab.r_prime, e.t)
        assert multiplicity(e.cover, 64) == e.multiplicity


def test_adx_interval_oracle():
    # hand-built cover: intervals of 48 points every 24 have multiplicity 2
    cover = intervals(24, 48)
    assert multiplicity(cover, 64) == 2
    assert lebesgue_pair_check(PATH, cover, adx_radius(PATH, 0.6), 1.0)


def test_adx_trivial_without_bound():
    tab = ad_x_estimate(PATH, 0.6, [1.0])
    assert tab.entries[0].estimate == 0 and any("trivially" in n for n in tab.notes)


def test_adx_unavailable_entry():
    tab = ad_x_estimate(PATH, 0.6, [2.0], bound=(radius_r(10.0), 1.0))
    assert tab.entries[0].estimate is None


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("Rb, t", [(6.0, 0.25), (8.0, 0.25), (10.0, 0.5)])
def test_greedy_is_upper_bound_of_exhaustive(seed, Rb, t):
    rng = np.random.default_rng(seed)
    pts = np.sort(rng.choice(18, 7, replace=False)).astype(float)
    s = standard_space(np.abs(pts[:, None] - pts[None]))
    bound = (radius_r(Rb), 1.0)
    tab = ad_x_estimate(s, 0.6, [t], bound=bound, seed=seed)
    exact = min_multiplicity_exhaustive(s, adx_radius(s, 0.6), t, bound)
    est = tab.entries[0].estimate
    if exact is None:
        assert est is None
    else:
        assert est is not None and est >= exact[0] - 1
        assert lebesgue_pair_check(s, exact[1], adx_radius(s, 0.6), t)


def test_exhaustive_finds_nontrivial_minimum():
    s = standard_space(np.abs(np.arange(7.0)[:, None] - np.arange(7.0)[None]))
    exact = min_multiplicity_exhaustive(s, adx_radius(s, 0.6), 0.25, (radius_r(5.0), 1.0))
    assert exact is not None and exact[0] == 2
    with pytest.raises(DomainError):
        min_multiplicity_exhaustive(PATH, 0.5, 1.0)


def test_adx_deterministic():
    a = ad_x_estimate(PATH, 0.6, [0.5], bound=(radius_r(48.0), 1.0), seed=3)
    b = ad_x_estimate(PATH, 0.6, [0.5], bound=(radius_r(48.0), 1.0), seed=3)
    assert a.entries[0].cover.key() == b.entries[0].cover.key()

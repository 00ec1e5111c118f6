import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzycoarse.covers_asdim import Cover, multiplicity
from fuzzycoarse.exceptions import CertificateError, DomainError
from fuzzycoarse.fuzzy_space import builtin_space, random_metric, standard_space, stationary_space
from fuzzycoarse.property_a import (ParamTuple, WitnessFamily, chain_length, chain_lengths, construct_from_cover,
                                    cover_level, cover_requirements, ex39_level, ex39_witness,
                                    fuzzy_to_metric_params, heights_map, metric_to_fuzzy_params, set_counts,
                                    subexp_bound, subexp_check, subexp_field, verify_metric_witness,
                                    verify_witness)

PATH10 = builtin_space("path", 10)
PATH64 = builtin_space("path", 64)
_i = np.arange(64)
# M = 0.4^|i-j|: closeness at r=0.65 is adjacency, and the Lebesgue balls stay small
GEOM = stationary_space(0.4 ** np.abs(_i[:, None] - _i[None]))


def interval_cover(step, length, n=64):
    return Cover(tuple(frozenset(range(a, min(a + length, n))) for a in range(0, n, step)))


def brute_counts(a, b):
    return len(a & b), len(a ^ b)


def test_param_tuple_domain():
    for bad in [(0.0, 0.5, 1.0), (1.0, 1.0, 1.0), (1.0, 0.5, 0.0), (math.inf, 0.5, 1.0)]:
        with pytest.raises(DomainError):
            ParamTuple(*bad)


def test_witness_rejects_level_zero():
    with pytest.raises(DomainError):
        WitnessFamily((frozenset({(0, 0)}),))
    with pytest.raises(DomainError):
        WitnessFamily.from_heights([[1, -1]])


def test_verify_singletons_on_sparse_space():
    s = standard_space(100.0 * np.abs(np.arange(5.0)[:, None] - np.arange(5.0)[None]))
    w = WitnessFamily(tuple(frozenset({(x, 1)}) for x in range(5)))
    cert = verify_witness(s, w, ParamTuple(0.1, 0.5, 1.0))
    assert cert.passed and cert.worst_ratio == 0.0 and cert.close_pairs == 0


@pytest.mark.parametrize("p", [ParamTuple(1e-6, 0.99, 100.0), ParamTuple(2.0, 0.1, 0.1)])
def test_verify_constant_family(p):
    w = WitnessFamily(tuple(frozenset({(0, 1), (3, 2)}) for _ in range(10)))
    cert = verify_witness(PATH10, w, p)
    assert cert.passed and cert.worst_ratio == 0.0
    assert 0 < cert.support_r < 1 and cert.support_t == PATH10.t_max


def test_verify_structural_failures():
    w = WitnessFamily(tuple([frozenset({(0, 1)})] * 9 + [frozenset()]))
    cert = verify_witness(PATH10, w, ParamTuple(1.0, 0.5, 1.0))
    assert not cert.passed and any("empty" in f for f in cert.failures)
    short = WitnessFamily((frozenset({(0, 1)}),))
    assert not verify_witness(PATH10, short, ParamTuple(1.0, 0.5, 1.0)).passed


def test_verify_names_the_bad_pair():
    w = WitnessFamily(tuple(frozenset({(x, 1)}) for x in range(10)))
    cert = verify_witness(PATH10, w, ParamTuple(1.0, 0.6, 1.0))
    assert not cert.passed and cert.worst_ratio == math.inf
    assert abs(cert.worst_pair[0] - cert.worst_pair[1]) == 1


@pytest.mark.parametrize("r, N", [(0.9, 10), (0.3, 1), (0.5, 2), (0.75, 4), (0.99, 100)])
def test_nat_product_level(r, N):
    assert ex39_level(r) == N
    gap = 1 - r
    # brute-force oracle with a decimal gap
    assert min(k for k in range(1, 1000) if 1 / (k + 1) < gap - 1e-12) == N


def test_nat_product_small_r_gives_singletons():
    res = ex39_witness(builtin_space("nat-product", 12), 0.3)
    assert res.N == 1
    assert all(res.witness.sets[x] == frozenset({(x, 1)}) for x in range(1, 12))


@pytest.mark.parametrize("eps", [1e-3, 0.5, 10.0])
def test_nat_product_witness_passes_n50(eps):
    s = builtin_space("nat-product", 50)
    res = ex39_witness(s, 0.9)
    assert res.N == 10 and res.support_ok and not res.clamped
    cert = verify_witness(s, res.witness, ParamTuple(eps, 0.9, 1.0))
    assert cert.passed and cert.worst_ratio == 0.0
    # oracle: every close pair (x != y) has both points <= N, hence identical sets
    m = s.matrix(1.0)
    for x, y in zip(*np.nonzero(np.triu(m > 0.1, 1))):
        assert x + 1 <= 10 and y + 1 <= 10


def test_nat_product_witness_requires_builtin():
    with pytest.raises(DomainError):
        ex39_witness(PATH10, 0.9)


def test_nat_product_witness_clamps_on_short_truncation():
    res = ex39_witness(builtin_space("nat-product", 5), 0.99)
    assert res.clamped and res.representative == 4


def test_chain_length_examples():
    assert chain_length(PATH10, "3", range(6), 0.6, 1.0, 20) == 3
    assert chain_length(PATH10, "5", range(6), 0.6, 1.0, 20) == 1
    assert chain_length(PATH10, "4", range(10), 0.6, 1.0, 7) == 7
    with pytest.raises(DomainError):
        chain_length(PATH10, "8", range(6), 0.6, 1.0, 5)


def test_chain_lengths_match_bfs_oracle():
    rng = np.random.default_rng(4)
    s = standard_space(random_metric(20, rng))
    adj = s.closeness(0.4, 1.0)
    U = set(rng.choice(20, 12, replace=False).tolist())
    got = chain_lengths(s, U, 0.4, 1.0, 50)
    for x in U:
        seen, frontier, steps = {x}, {x}, 0
        found = None
        while frontier and found is None:
            steps += 1
            frontier = {y for f in frontier for y in np.flatnonzero(adj[f]) if y not in seen}
            seen |= frontier
            if frontier - U:
                found = steps
        assert got[x] == (found if found is not None else 50)


@given(st.sets(st.integers(0, 19), min_size=1, max_size=20), st.integers(1, 8), st.floats(0.3, 0.9))
@settings(max_examples=50, deadline=None)
def test_chain_length_lipschitz(U, K, r):
    s = builtin_space("path", 20)
    lengths = chain_lengths(s, U, r, 1.0, K)
    close = s.closeness(r, 1.0)
    for x in U:
        for y in U:
            if close[x, y]:
                assert abs(int(lengths[x]) - int(lengths[y])) <= 1


@pytest.mark.parametrize("eps, n, K", [(0.5, 1, 8), (1.0, 1, 5), (0.1, 0, 12), (0.3, 2, 18)])
def test_cover_level(eps, n, K):
    assert cover_level(eps, n) == K


def test_cover_requirements_exponent():
    req = cover_requirements(PATH64, ParamTuple(0.5, 0.6, 1.0), 1)
    assert req.K == 8 and req.threshold == pytest.approx(0.4 ** 9)
    assert req.T == pytest.approx(8.0)


def test_construct_one_point():
    s = standard_space([[0.0]])
    w, rep = construct_from_cover(s, Cover((frozenset({0}),)), ParamTuple(0.5, 0.5, 1.0), 0)
    K = cover_level(0.5, 0)
    assert w.sets[0] == frozenset((0, lv) for lv in range(1, K + 1))
    assert rep.passed


def test_construct_on_path_uses_whole_space_member():
    cover = Cover((frozenset(range(64)), frozenset(range(32, 64))))
    p = ParamTuple(1.0, 0.6, 1.0)
    w, rep = construct_from_cover(PATH64, cover, p, 1)
    assert rep.passed and rep.max_projection <= 2 and rep.max_sym_diff <= 3
    assert verify_witness(PATH64, w, p).passed
    with pytest.raises(CertificateError) as err:
        construct_from_cover(PATH64, interval_cover(16, 32), p, 1)
    assert err.value.claim == "lebesgue"


@pytest.mark.parametrize("eps, step, length", [(1.0, 16, 32), (0.8, 16, 32)])
def test_construct_on_geometric_space(eps, step, length):
    p = ParamTuple(eps, 0.65, 1.0)
    cover = interval_cover(step, length)
    assert multiplicity(cover, 64) == 2
    w, rep = construct_from_cover(GEOM, cover, p, 1)
    assert rep.passed and rep.certificate.worst_ratio < eps
    assert rep.max_projection == 2 and rep.max_sym_diff <= 3
    # the chain heights are genuinely non-constant
    assert len(set(w.sizes.tolist())) > 1
    K = rep.requirements.K
    for x, y in zip(*np.nonzero(np.triu(GEOM.closeness(0.65, 1.0), 1))):
        assert w.counts(x, y)[0] >= K - 1


def test_construct_rejects_bad_claims():
    p = ParamTuple(1.0, 0.65, 1.0)
    with pytest.raises(CertificateError) as err:
        construct_from_cover(GEOM, interval_cover(8, 32), p, 1)
    assert err.value.claim == "multiplicity"
    with pytest.raises(CertificateError) as err:
        construct_from_cover(GEOM, Cover((frozenset(range(10)),)), p, 0)
    assert err.value.claim == "cover"


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_multiset_identity(seed):
    rng = np.random.default_rng(seed)
    h = rng.integers(0, 4, size=(6, 6))
    h[np.arange(6), np.arange(6)] += 1
    w = WitnessFamily.from_heights(h)
    assert w.is_prefix_form()
    assert np.array_equal(w.heights(6), h)
    for x in range(6):
        for y in range(6):
            inter, sym = w.counts(x, y)
            assert inter == np.minimum(h[x], h[y]).sum()
            assert sym == np.abs(h[x] - h[y]).sum()
            assert (inter, sym) == brute_counts(w.sets[x], w.sets[y]) == set_counts(w.sets[x], w.sets[y])


def test_general_sets_not_prefix():
    w = WitnessFamily((frozenset({(0, 2)}), frozenset({(0, 1), (1, 3)})))
    assert not w.is_prefix_form()
    assert w.counts(0, 1) == (0, 3)
    assert w.canonical().is_prefix_form()


def test_heights_map_labels():
    w = heights_map(PATH10, {"0": {"0": 2, "3": 1}})
    assert w.sets[0] == frozenset({(0, 1), (0, 2), (3, 1)}) and not w.sets[1]


@pytest.mark.parametrize("seed", range(4))
def test_metric_fuzzy_round_trip(seed):
    rng = np.random.default_rng(seed)
    d = random_metric(12, rng)
    s = standard_space(d)
    sets = [frozenset({(0, 1), (int(x), 1)}) for x in rng.integers(0, 3, 12)]
    w = WitnessFamily(tuple(sets))
    for eps, r, t in [(1.5, 0.5, 1.0), (0.7, 0.8, 2.0)]:
        e, R = metric_to_fuzzy_params(eps, r, t)
        assert R == pytest.approx(t * r / (1 - r))
        fuzzy = verify_witness(s, w, ParamTuple(eps, r, t))
        metric = verify_metric_witness(d, w, e, R)
        assert fuzzy.passed == metric.passed and fuzzy.close_pairs == metric.close_pairs
    for R in (0.5, 3.0):
        p = fuzzy_to_metric_params(1.0, R)
        assert verify_witness(s, w, p).passed == verify_metric_witness(d, w, 1.0, R).passed


def test_subexp_field_whole_cover():
    f = subexp_field(PATH10, Cover((frozenset(range(10)),)), 0.6, 4)
    assert np.allclose(f.vectors[:, 0], 1.0) and np.allclose(f.vectors[:, 1:], 0.0)
    assert f.support_ok


@pytest.mark.parametrize("t", [1, 2, 3])
def test_subexp_bound_on_path(t):
    path = builtin_space("path", 256)
    f = subexp_field(path, interval_cover(64, 128, 256), 0.6, 8)
    assert np.allclose(np.abs(f.vectors).sum(axis=1), 1.0)
    assert f.support_ok and f.multiplicity == 2
    chk = subexp_check(path, f, float(t))
    assert chk.passed and chk.pairs > 0 and chk.bound == pytest.approx(subexp_bound(2, t, 8))
    # direct oracle on adjacent points
    for x in range(255):
        assert np.abs(f.vectors[x] - f.vectors[x + 1]).sum() <= 2 * (1 - 2 ** (-2 * t / 8)) + 1e-12
    assert np.abs(f.vectors[5] - f.vectors[5]).sum() == 0


def test_subexp_field_deficient():
    with pytest.raises(DomainError, match="empty"):
        subexp_field(PATH64, interval_cover(16, 32), 0.6, 20)
    with pytest.raises(DomainError):
        subexp_field(PATH64, interval_cover(16, 32), 0.6, 0)

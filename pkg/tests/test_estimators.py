import numpy as np
import pytest
from sklearn.base import clone

from fuzzycoarse.estimators import CoarseEmbedding
from fuzzycoarse.exceptions import DomainError
from fuzzycoarse.fuzzy_space import builtin_space

D = np.abs(np.arange(24.0)[:, None] - np.arange(24.0)[None])


def test_fit_on_distance_matrix():
    est = CoarseEmbedding(n_levels=3)
    F = est.fit_transform(D)
    assert F.shape == (24, est.n_features_out_)
    assert est.diagnostics_.passed
    assert F[0].nnz == 0
    assert np.allclose(est.distances(), est.distances().T)
    assert est.report().passed


def test_fit_on_space_with_explicit_cover():
    space = builtin_space("path", 24)
    est = CoarseEmbedding(n_levels=3, cover=[list(range(24)), list(range(12, 24))]).fit(space)
    ref = CoarseEmbedding(n_levels=3).fit(D)
    assert est.cover_.sets == ref.cover_.sets
    assert np.allclose(est.distances(), ref.distances())


def test_clone_and_params():
    est = CoarseEmbedding(n_levels=4, base=2)
    assert clone(est).get_params() == est.get_params()


@pytest.mark.parametrize("bad", [np.zeros((3, 4)), np.zeros(5)])
def test_rejects_non_square(bad):
    with pytest.raises(DomainError):
        CoarseEmbedding().fit(bad)


def test_transform_requires_fit_and_same_space():
    with pytest.raises(DomainError):
        CoarseEmbedding().transform(D)
    est = CoarseEmbedding(n_levels=2).fit(D)
    with pytest.raises(DomainError):
        est.transform(D[:10, :10])

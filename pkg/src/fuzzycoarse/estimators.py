"""scikit-learn style wrapper around the block embedding.

Only fit/transform make sense here: the embedding is defined point by point
on a fixed finite space, so there is no out-of-sample transform.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .covers_asdim import Cover
from .embedding import EmbeddingConfig, build_from_cover, distortion_report
from .exceptions import DomainError
from .fuzzy_space import FuzzySpace, standard_space


class CoarseEmbedding(TransformerMixin, BaseEstimator):
    """Embed a finite fuzzy metric space through level witnesses built from a cover.

    Parameters
    ----------
    n_levels : number of blocks N.
    cover : list of point-index lists; the default is {X, far half}, where
        the far half holds the points below the median of M(base, ., t_max).
    base : base point index z with F(z) = 0.
    dim : cover dimension used by the witness construction.
    """

    def __init__(self, n_levels: int = 6, cover=None, base: int = 0, dim: int = 1):
        self.n_levels = n_levels
        self.cover = cover
        self.base = base
        self.dim = dim

    def _space(self, X) -> FuzzySpace:
        if isinstance(X, FuzzySpace):
            return X
        d = np.asarray(X, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DomainError("expected a FuzzySpace or a square distance matrix")
        return standard_space(d)

    def _default_cover(self, space: FuzzySpace) -> Cover:
        row = space.matrix(space.t_max)[self.base]
        far = np.flatnonzero(row < np.median(row)).tolist()
        sets = [list(range(space.n))] + ([far] if far else [])
        return Cover(tuple(sets))

    def fit(self, X, y=None):
        space = self._space(X)
        cover = Cover(tuple(self.cover)) if self.cover is not None else self._default_cover(space)
        cfg = EmbeddingConfig(N=self.n_levels, base=self.base)
        self.space_ = space
        self.cover_ = cover
        self.embedding_ = build_from_cover(space, cover, cfg, self.dim)
        self.diagnostics_ = self.embedding_.diagnostics
        self.n_features_out_ = self.embedding_.F.shape[1]
        return self

    def transform(self, X):
        """Sparse rows F(x) for the fitted points; X must be the fitted input."""
        if not hasattr(self, "embedding_"):
            raise DomainError("call fit first")
        if self._space(X).n != self.space_.n:
            raise DomainError("transform only applies to the fitted space")
        return self.embedding_.F

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).transform(X)

    def distances(self) -> np.ndarray:
        return self.embedding_.dist

    def report(self):
        return distortion_report(self.embedding_)

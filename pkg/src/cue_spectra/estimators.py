"""scikit-learn style transformers over stacks of eigenangle spectra.

Each row of ``X`` is one spectrum (N eigenangles in (-pi, pi]). The
transformers are stateless apart from recording the spectrum size seen in
``fit``, so they drop into a ``Pipeline`` ahead of any downstream estimator.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .logderiv import MesoscopicSpec, s_n
from .selberg import decompose, z0_for


def _check_spectra(X, n_expected=None):
    X = check_array(X, dtype=float, ensure_min_features=1)
    if np.any(np.abs(X) > np.pi + 1e-12):
        raise ValueError("eigenangles must lie in (-pi, pi]")
    if n_expected is not None and X.shape[1] != n_expected:
        raise ValueError(f"X has {X.shape[1]} eigenangles per row, fitted with {n_expected}")
    return X


class MesoscopicLinearStatistic(TransformerMixin, BaseEstimator):
    """Map spectra to the pair (S_N(g), S_N(h)) at scale ``l``.

    ``l=None`` uses ceil(sqrt(N)).
    """

    def __init__(self, l=None):
        self.l = l

    def fit(self, X, y=None):
        X = _check_spectra(X)
        n = X.shape[1]
        l = self.l if self.l is not None else math.ceil(math.sqrt(n))
        self.spec_ = MesoscopicSpec(n, l)
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = _check_spectra(X, self.n_features_in_)
        return np.column_stack([s_n(X, self.spec_, "g"), s_n(X, self.spec_, "h")])

    def get_feature_names_out(self, input_features=None):
        return np.array(["s_g", "s_h"], dtype=object)


class SelbergDecompositionTransformer(TransformerMixin, BaseEstimator):
    """Map spectra to |local sum|, |error term| and |P'/P(z)| at a real ``z``.

    ``z=None`` means z = 1; ``c`` is the window half-width in units of 1/N.
    """

    def __init__(self, c=1.0, z=None):
        self.c = c
        self.z = z

    def fit(self, X, y=None):
        X = _check_spectra(X)
        n = X.shape[1]
        if not 0 < self.c <= 1:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")
        z = 1.0 if self.z is None else float(self.z)
        if not z0_for(n) <= z <= 1:
            raise ValueError(f"z must lie in [1 - 1/N, 1], got {z}")
        self.z_ = z
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "z_")
        X = _check_spectra(X, self.n_features_in_)
        parts = decompose(X, self.z_, self.c)
        return np.abs(np.column_stack([parts.local_sum, parts.error, parts.full]))

    def get_feature_names_out(self, input_features=None):
        return np.array(["abs_local", "abs_error", "abs_full"], dtype=object)

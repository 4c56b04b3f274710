"""scikit-learn style front end: fit a code to a binary record matrix, transform to signatures."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import analysis, optimizer
from ._validation import check_binary_matrix, check_positive_int, check_probability
from .codegen import CodeSpec, build_codebook
from .models import SourceModel


class SuperimposedEncoder(TransformerMixin, BaseEstimator):
    """Superimposed coding of binary records into length ``n_bits`` signatures.

    design='uniform' gives every source bit the same code: ``scheme='fixed'``
    with ``weight`` (or one chosen from the record weight histogram so that
    signatures come out half-full) or ``scheme='binomial'`` with ``q``.
    design='per_bit' fits per-bit fixed weights from the observed bit
    frequencies, treating source bits as independent.
    """

    def __init__(self, n_bits=64, scheme="fixed", design="uniform", weight=None, q=None, seed=0):
        self.n_bits = n_bits
        self.scheme = scheme
        self.design = design
        self.weight = weight
        self.q = q
        self.seed = seed

    def fit(self, X, y=None):
        X = check_binary_matrix(X)
        n = check_positive_int(self.n_bits, "n_bits", 2)
        N = X.shape[1]
        self.n_features_in_ = N
        self.source_bit_freq_ = X.mean(axis=0)
        self.weight_hist_ = np.bincount(X.sum(axis=1), minlength=N + 1) / X.shape[0]
        self.plan_ = None
        self.report_ = None
        if self.design == "per_bit":
            if self.scheme != "fixed":
                raise ValueError("design='per_bit' only supports scheme='fixed'")
            p = np.clip(self.source_bit_freq_, 0.0, 1.0 - 1e-9)
            self.plan_ = optimizer.optimal_weights_independent(p, n)
            specs = self.plan_.specs()
        elif self.design == "uniform":
            if self.scheme == "fixed":
                if self.weight is None:
                    spec, self.report_ = optimizer.general_design(self.weight_hist_, N, n)
                else:
                    spec = CodeSpec.fixed(n, check_positive_int(self.weight, "weight"))
            elif self.scheme == "binomial":
                if self.q is None:
                    raise ValueError("scheme='binomial' needs q")
                spec = CodeSpec.binomial(n, check_probability(self.q, "q"))
            else:
                raise ValueError("scheme must be 'fixed' or 'binomial', got %r" % self.scheme)
            specs = [spec] * N
        else:
            raise ValueError("design must be 'uniform' or 'per_bit', got %r" % self.design)
        self.specs_ = specs
        self.codebook_ = build_codebook(specs, int(self.seed))
        self._words = self.codebook_.as_array()
        return self

    def transform(self, X):
        check_is_fitted(self, "codebook_")
        X = check_binary_matrix(X, n_features=self.n_features_in_)
        # OR of selected code words == (count of covering words) > 0
        return (X.astype(np.int32) @ self._words.astype(np.int32)) > 0

    def predicted_false_drop(self, query_weight):
        """Expected fraction of non-matching fitted records whose signature covers a weight-s query."""
        check_is_fitted(self, "codebook_")
        src = SourceModel.empirical(self.n_features_in_, self.weight_hist_)
        if self.design == "per_bit":
            raise NotImplementedError("only available for uniform designs")
        rec = analysis.target_weight_pmf(src, self.specs_[0])
        qry = analysis.target_weight_pmf(
            SourceModel.fixed_weight(self.n_features_in_, query_weight), self.specs_[0])
        return analysis.false_drop_exact(rec, qry)

    def screen(self, query, signatures):
        """Row indices of ``signatures`` that cover the signature of ``query``."""
        q = self.transform(np.atleast_2d(query))[0]
        sig = check_binary_matrix(signatures, "signatures", self.codebook_.n)
        return np.flatnonzero(~np.any(q & ~sig, axis=1))

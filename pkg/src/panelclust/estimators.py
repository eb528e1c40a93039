"""scikit-learn style wrappers around discovery and the three tests.

``X`` is the covariate array of shape (N, T, p) and ``y`` the outcome array
of shape (N, T); a :class:`~panelclust.panel.PanelData` may be passed as
``X`` with ``y=None``. Rows index units, so "samples" are units.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .art import art_test
from .bcl import DEFAULT_BCL_CONSTANT, bcl_test
from .cce import cce_t_test
from .clustering import ThresholdConfig, connected_components, threshold_adjacency
from .exceptions import InvalidConfig
from .longrun import KernelSpec, longrun_matrix
from .regression import pooled_ols, score_series
from .tuning import cross_validate
from .validation import check_alpha, check_clusters, check_panel, check_restriction

__all__ = ["AdaptiveClustering", "RandomizationTest", "ClusteredTTest", "ThresholdedHACTest"]


class AdaptiveClustering(ClusterMixin, BaseEstimator):
    """Group units whose score processes are dependent.

    Parameters
    ----------
    bandwidth : int or "auto"
        Bartlett bandwidth L; "auto" picks it by block cross-validation.
    threshold : float or "auto"
        Correlation cutoff in [0, 1]; "auto" picks it jointly with L.
    applied_to : {"correlation", "raw"}
    cv_comparator : {"signed", "absolute"}
    grid : TuningGrid, optional
        Search grid for the "auto" settings.

    Attributes
    ----------
    assignment_ : ClusterAssignment
    labels_ : ndarray of int
        Zero-based cluster labels, in order of first appearance.
    n_clusters_ : int
    longrun_ : LongRunMatrix
    bandwidth_, threshold_ : resolved tuning parameters
    cv_result_ : CvResult or None
    """

    def __init__(self, bandwidth="auto", threshold="auto", applied_to="correlation", cv_comparator="signed", grid=None):
        self.bandwidth = bandwidth
        self.threshold = threshold
        self.applied_to = applied_to
        self.cv_comparator = cv_comparator
        self.grid = grid

    def fit(self, X, y=None):
        panel = check_panel(X, y)
        fit = pooled_ols(panel)
        auto_bw, auto_eta = self.bandwidth == "auto", self.threshold == "auto"
        self.cv_result_ = None
        if auto_bw or auto_eta:
            cv = cross_validate(panel, self.grid, self.cv_comparator, fit)
            self.cv_result_ = cv
        self.bandwidth_ = self.cv_result_.best_bandwidth if auto_bw else int(self.bandwidth)
        self.threshold_ = self.cv_result_.best_threshold if auto_eta else float(self.threshold)
        config = ThresholdConfig(self.threshold_, self.applied_to)
        self.ols_ = fit
        self.longrun_ = longrun_matrix(score_series(panel, fit), KernelSpec(self.bandwidth_))
        self.assignment_ = connected_components(threshold_adjacency(self.longrun_, config))
        self.labels_ = self.assignment_.labels - 1
        self.n_clusters_ = self.assignment_.q_hat
        return self


class _RestrictionTest(BaseEstimator):
    """Shared plumbing: restriction, level, and result accessors."""

    def _setup(self, X, y):
        panel = check_panel(X, y)
        restriction = check_restriction(self.r, self.value, panel.n_covariates)
        return panel, restriction, check_alpha(self.alpha)

    def _store(self, result):
        self.result_ = result
        self.statistic_ = result.statistic
        self.pvalue_ = result.p_value
        self.phi_ = result.phi
        return self

    @property
    def reject_(self) -> bool:
        check_is_fitted(self, "result_")
        return self.result_.reject


class RandomizationTest(_RestrictionTest):
    """Sign-change randomization test over cluster-level estimates.

    ``fit(X, y, clusters)`` needs cluster labels, for instance
    ``AdaptiveClustering().fit(X, y).labels_``.
    """

    def __init__(self, r=None, value=0.0, alpha=0.10, scaling="sqrt_n", mode="auto", n_draws=9999,
                 deterministic=False, random_state=None):
        self.r = r
        self.value = value
        self.alpha = alpha
        self.scaling = scaling
        self.mode = mode
        self.n_draws = n_draws
        self.deterministic = deterministic
        self.random_state = random_state

    def fit(self, X, y=None, clusters=None):
        panel, restriction, alpha = self._setup(X, y)
        clusters = check_clusters(clusters, panel.n_units)
        result = art_test(
            panel, clusters, restriction, alpha,
            scaling=self.scaling, mode=self.mode, n_draws=self.n_draws,
            deterministic=self.deterministic, random_state=self.random_state,
        )
        return self._store(result)


class ClusteredTTest(_RestrictionTest):
    """Normal t-test with cluster-robust standard errors."""

    def __init__(self, r=None, value=0.0, alpha=0.10, variant="sandwich"):
        self.r = r
        self.value = value
        self.alpha = alpha
        self.variant = variant

    def fit(self, X, y=None, clusters=None):
        panel, restriction, alpha = self._setup(X, y)
        clusters = check_clusters(clusters, panel.n_units)
        return self._store(cce_t_test(panel, clusters, restriction, alpha, self.variant))


class ThresholdedHACTest(_RestrictionTest):
    """Normal t-test with the entrywise-thresholded long-run variance.

    ``bandwidth=None`` uses ``floor(sqrt(T))``.
    """

    def __init__(self, r=None, value=0.0, alpha=0.10, bandwidth=None, constant=DEFAULT_BCL_CONSTANT, keep="signed"):
        self.r = r
        self.value = value
        self.alpha = alpha
        self.bandwidth = bandwidth
        self.constant = constant
        self.keep = keep

    def fit(self, X, y=None):
        panel, restriction, alpha = self._setup(X, y)
        if self.bandwidth is not None and not np.isscalar(self.bandwidth):
            raise InvalidConfig("bandwidth must be an integer or None")
        kernel = None if self.bandwidth is None else KernelSpec(self.bandwidth)
        return self._store(bcl_test(panel, restriction, alpha, kernel, self.constant, self.keep))

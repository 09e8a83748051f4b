"""scikit-learn style wrappers.

``AuxiliarySearch`` fits auxiliary kernels to one problem; ``MarginEvaluator``
turns (problem, kernels) pairs into margin rows and admissibility labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ValidationError
from .model import AuxiliaryKernels, ProblemSpec, full_joint
from .region import theorem1_margins
from .search import AuxiliaryCertificate, SearchConfig, search


def _check_problem(problem):
    if not isinstance(problem, ProblemSpec):
        raise ValidationError(f"expected a ProblemSpec, got {type(problem).__name__}")
    return problem


class AuxiliarySearch(BaseEstimator):
    """Random-restart coordinate ascent as an estimator.

    After ``fit(problem)``: ``certificate_`` (None when nothing admissible was
    found), ``best_`` (best certificate regardless), ``report_`` and
    ``restart_objectives_``.
    """

    def __init__(self, restarts=8, iterations=1500, step=0.6, step_halflife=800,
                 objective="min-margin", w_size=None, u_size=None, v_size=None,
                 yhat1_size=None, yhat2_size=None, random_state=0):
        self.restarts = restarts
        self.iterations = iterations
        self.step = step
        self.step_halflife = step_halflife
        self.objective = objective
        self.w_size = w_size
        self.u_size = u_size
        self.v_size = v_size
        self.yhat1_size = yhat1_size
        self.yhat2_size = yhat2_size
        self.random_state = random_state

    def _config(self):
        p = self.get_params()
        seed = p.pop("random_state")
        return SearchConfig(seed=int(seed), **p)

    def fit(self, problem, y=None, warm_start=None):
        result = search(_check_problem(problem), self._config(), warm_start=warm_start)
        self.certificate_ = result.certificate
        self.best_ = result.best
        self.report_ = result.best.report
        self.restart_objectives_ = np.array([t.objective for t in result.restarts])
        return self

    def predict(self, problem=None):
        """True when the fitted search found an admissible certificate."""
        if not hasattr(self, "best_"):
            raise NotFittedError("AuxiliarySearch is not fitted")
        return self.certificate_ is not None

    def score(self, problem=None, y=None):
        if not hasattr(self, "best_"):
            raise NotFittedError("AuxiliarySearch is not fitted")
        return self.report_.min_margin


class MarginEvaluator(TransformerMixin, BaseEstimator):
    """Stateless: each sample is a (problem, kernels) pair."""

    def __init__(self, eps=1e-9):
        self.eps = eps

    def fit(self, X=None, y=None):
        return self

    def _reports(self, X):
        out = []
        for item in X:
            try:
                problem, kernels = item
            except (TypeError, ValueError):
                raise ValidationError("each sample must be a (problem, kernels) pair") from None
            if isinstance(kernels, AuxiliaryCertificate):
                kernels = kernels.kernels
            if not isinstance(kernels, AuxiliaryKernels):
                raise ValidationError("kernels must be AuxiliaryKernels or a certificate")
            joint = full_joint(_check_problem(problem), kernels)
            out.append(theorem1_margins(joint, eps=self.eps, eps_c=self.eps))
        return out

    def transform(self, X):
        """(n_samples, 6) array of m1, m2, m3, m4, c1, c2."""
        return np.array([r.values for r in self._reports(X)]).reshape(-1, 6)

    def predict(self, X):
        return np.array([r.admissible for r in self._reports(X)], dtype=bool)


__all__ = ["AuxiliarySearch", "MarginEvaluator"]

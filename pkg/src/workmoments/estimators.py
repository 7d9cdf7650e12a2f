"""scikit-learn style wrappers around the moment calculators.

Hyperparameters are the :class:`~workmoments.model.SystemParams` fields.
``fit`` evaluates the configured point and stores the results in attributes
with a trailing underscore; ``transform`` maps rows of parameter values
(columns named by ``param_columns``) to rows ``[W1, W2, W3]``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import mcwf
from .model import SystemParams
from .moments import moments_full, moments_rwa

_TRACKS = {"full": moments_full, "rwa": moments_rwa}


class _ParamsMixin:
    def _system(self, **changes):
        kw = {name: getattr(self, name) for name in SystemParams.field_names()}
        kw.update(changes)
        return SystemParams(**kw)

    def _rows(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.param_columns):
            raise ValueError(f"expected {len(self.param_columns)} columns {self.param_columns}, got {X.shape[1]}")
        return [dict(zip(self.param_columns, map(float, row))) for row in X]


class MasterEquationMoments(_ParamsMixin, TransformerMixin, BaseEstimator):
    """Deterministic moments from the master equation (``track`` is ``'full'`` or ``'rwa'``)."""

    def __init__(self, track="full", param_columns=("lambda0", "gamma_down"), omega0=1.0, beta=2.0,
                 gamma_down=0.01, lambda0=0.05, drive_omega=1.0, cycles=10.0, steps=10_000, offgrid_tau=False):
        self.track = track
        self.param_columns = param_columns
        self.omega0 = omega0
        self.beta = beta
        self.gamma_down = gamma_down
        self.lambda0 = lambda0
        self.drive_omega = drive_omega
        self.cycles = cycles
        self.steps = steps
        self.offgrid_tau = offgrid_tau

    def fit(self, X=None, y=None):
        if self.track not in _TRACKS:
            raise ValueError(f"track must be one of {sorted(_TRACKS)}")
        self.report_ = _TRACKS[self.track](self._system())
        self.moments_ = np.array([self.report_.W1, self.report_.W2, self.report_.W3])
        self.n_features_in_ = len(self.param_columns)
        return self

    def transform(self, X):
        check_is_fitted(self, "report_")
        out = []
        for changes in self._rows(X):
            r = _TRACKS[self.track](self._system(**changes))
            out.append([r.W1, r.W2, r.W3])
        return np.array(out)


class QuantumJumpMoments(_ParamsMixin, TransformerMixin, BaseEstimator):
    """Monte Carlo moments from the quantum-jump unravelling."""

    def __init__(self, n_traj=100_000, master_seed=0, param_columns=("lambda0", "gamma_down"), omega0=1.0,
                 beta=2.0, gamma_down=0.01, lambda0=0.05, drive_omega=1.0, cycles=10.0, steps=10_000,
                 offgrid_tau=False):
        self.n_traj = n_traj
        self.master_seed = master_seed
        self.param_columns = param_columns
        self.omega0 = omega0
        self.beta = beta
        self.gamma_down = gamma_down
        self.lambda0 = lambda0
        self.drive_omega = drive_omega
        self.cycles = cycles
        self.steps = steps
        self.offgrid_tau = offgrid_tau

    def fit(self, X=None, y=None):
        self.statistics_ = mcwf.run_ensemble(self._system(), self.n_traj, self.master_seed)
        self.moments_ = np.array(self.statistics_.moments)
        self.stderr_ = np.array(self.statistics_.stderr)
        self.n_features_in_ = len(self.param_columns)
        return self

    def transform(self, X):
        check_is_fitted(self, "statistics_")
        return np.array([
            mcwf.run_ensemble(self._system(**changes), self.n_traj, self.master_seed).moments
            for changes in self._rows(X)
        ])

"""scikit-learn compatible wrappers around the sensing chain.

Two-channel captures are passed as complex arrays of shape ``(n_samples, 2)``
with the reference in column 0 and the surveillance channel in column 1, so
the estimators slot into ``Pipeline`` / ``clone`` / ``get_params`` tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cancel import CleanConfig, NlmsConfig, NlmsStream
from .core import IqFrame
from .detect import CfarConfig, cfar_alpha, cfar_mask
from .record import EngineConfig, doppler_record


def check_iq_pair(X) -> np.ndarray:
    """Validate and return ``X`` as a ``(n_samples, 2)`` complex128 array."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected shape (n_samples, 2) [reference, surveillance], got {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains NaN or infinity")
    return X


def check_power_rows(X) -> np.ndarray:
    """Validate non-negative power profiles, shape ``(n_profiles, n_bins)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of power profiles, got shape {X.shape}")
    if np.any(X < 0) or not np.all(np.isfinite(X)):
        raise ValueError("power values must be finite and non-negative")
    return X


class NlmsCanceller(TransformerMixin, BaseEstimator):
    """Pre-CAF direct-signal canceller.

    ``fit`` adapts the taps on a training capture; ``transform`` continues
    adapting from the fitted taps and returns the cleaned surveillance channel.
    """

    def __init__(self, num_taps=32, step_mu=0.5, regularizer_eps=1e-9):
        self.num_taps = num_taps
        self.step_mu = step_mu
        self.regularizer_eps = regularizer_eps

    def _config(self) -> NlmsConfig:
        return NlmsConfig(self.num_taps, self.step_mu, self.regularizer_eps)

    def fit(self, X, y=None):
        X = check_iq_pair(X)
        stream = NlmsStream(self._config())
        stream.process(X[:, 0], X[:, 1])
        self.coef_ = stream.weights.copy()
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "coef_")
        X = check_iq_pair(X)
        return NlmsStream(self._config(), weights=self.coef_).process(X[:, 0], X[:, 1])


class DopplerSpectrogram(TransformerMixin, BaseEstimator):
    """Capture pair to Doppler record rows (dB).

    ``fit`` only records the Doppler axis and row times that ``transform``
    will produce for captures of the same length.
    """

    def __init__(self, sample_rate_hz=200e3, center_freq_hz=2.4e9, window_s=1.0, hop_s=0.1,
                 engine="direct", portion=0.10, batches=None, v_max_mps=3.0,
                 max_doppler_hz=50.0, downsample=1, nlms=False, clean=True):
        self.sample_rate_hz = sample_rate_hz
        self.center_freq_hz = center_freq_hz
        self.window_s = window_s
        self.hop_s = hop_s
        self.engine = engine
        self.portion = portion
        self.batches = batches
        self.v_max_mps = v_max_mps
        self.max_doppler_hz = max_doppler_hz
        self.downsample = downsample
        self.nlms = nlms
        self.clean = clean

    def _engine(self) -> EngineConfig:
        nlms = self.nlms if isinstance(self.nlms, NlmsConfig) else (NlmsConfig() if self.nlms else None)
        clean = self.clean if isinstance(self.clean, CleanConfig) else (CleanConfig() if self.clean else None)
        return EngineConfig(engine=self.engine, portion=self.portion, batches=self.batches,
                            v_max_mps=self.v_max_mps, max_doppler_hz=self.max_doppler_hz,
                            downsample=self.downsample, nlms=nlms, clean=clean)

    def _record(self, X):
        X = check_iq_pair(X)
        ref = IqFrame(X[:, 0], self.sample_rate_hz, self.center_freq_hz)
        surv = IqFrame(X[:, 1], self.sample_rate_hz, self.center_freq_hz)
        return doppler_record(ref, surv, self.window_s, self.hop_s, self._engine())

    def fit(self, X, y=None):
        rec = self._record(X)
        self.doppler_bins_hz_ = rec.bins_hz.copy()
        self.times_s_ = rec.times_s.copy()
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "doppler_bins_hz_")
        rec = self._record(X)
        if not np.allclose(rec.bins_hz, self.doppler_bins_hz_):
            raise ValueError("Doppler axis differs from the one seen in fit")
        return rec.rows_db


class CaCfarDetector(BaseEstimator):
    """Cell-averaging CFAR over rows of linear power; ``predict`` returns a boolean mask."""

    def __init__(self, num_train=16, num_guard=4, pfa=1e-3):
        self.num_train = num_train
        self.num_guard = num_guard
        self.pfa = pfa

    def fit(self, X=None, y=None):
        cfg = CfarConfig(self.num_train, self.num_guard, self.pfa)
        self.alpha_ = cfar_alpha(cfg.pfa, cfg.num_train)
        self.config_ = cfg
        return self

    def predict(self, X):
        check_is_fitted(self, "config_")
        X = check_power_rows(X)
        return np.vstack([cfar_mask(row, self.config_) for row in X])

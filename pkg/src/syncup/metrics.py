"""RMSE and Pearson correlation, shared by evaluation and cross-validation."""
from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import DegenerateVariance


def rmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def pearson_r(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pearson r and its two-sided p-value via the t-distribution.

    Raises DegenerateVariance when either series is constant (r undefined).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 paired samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(xc @ xc))
    sy = float(np.sqrt(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVariance("correlation undefined for a constant series")
    r = float(np.clip(xc @ yc / (sx * sy), -1.0, 1.0))
    n = len(x)
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * stats.t.sf(abs(t), df=n - 2))
    return r, p

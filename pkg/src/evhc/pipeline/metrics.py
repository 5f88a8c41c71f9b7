"""Forecast-error metrics.

All three metrics sum over stations inside: MAE and RMSE average that
station sum over samples, while WAPE divides total absolute error by
total true demand, which keeps it stable when true values approach zero.
"""
from __future__ import annotations

import numpy as np


def metrics(predictions: np.ndarray, truths: np.ndarray) -> tuple[float, float, float]:
    """Return (MAE, RMSE, WAPE). WAPE is a fraction, not a percentage.

    Inputs are [n_samples, n_stations]; 1-D inputs are treated as a single
    station column. Raises ValueError when all truths are zero (WAPE
    undefined).
    """
    pred = np.atleast_2d(np.asarray(predictions, dtype=float))
    true = np.atleast_2d(np.asarray(truths, dtype=float))
    if pred.shape != true.shape:
        raise ValueError("predictions and truths must have the same shape")
    err = pred - true
    mae = float(np.mean(np.sum(np.abs(err), axis=1)))
    rmse = float(np.sqrt(np.mean(np.sum(err ** 2, axis=1))))
    denom = float(np.sum(true))
    if denom == 0.0:
        raise ValueError("WAPE undefined: all true values are zero")
    wape = float(np.sum(np.abs(err)) / denom)
    return mae, rmse, wape

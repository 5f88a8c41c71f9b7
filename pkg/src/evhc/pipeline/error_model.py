"""Forecast-interval-conditioned error distributions.

The unit interval of normalized demand is cut into n_intervals equal bins;
each station's historical forecast errors are grouped by which bin the
deterministic forecast fell into and fitted as Gaussian mixtures (BIC
selects the component count). Bins with too few samples fall back to the
station's pooled error mixture. A probabilistic forecast is then the
fitted error mixture shifted by the deterministic forecast.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..mixtures import GaussianMixture, fit_gmm_bic, gmm_shift


def interval_index(p_hat: float, n_intervals: int) -> int:
    """1-based bin of a forecast in [0,1]; right-closed with clamping so
    every value maps to exactly one bin."""
    return int(min(max(np.ceil(p_hat * n_intervals), 1), n_intervals))


@dataclass(frozen=True)
class IntervalErrorModel:
    n_intervals: int
    station_ids: tuple[int, ...]
    per_station: dict[int, list[GaussianMixture | None]]
    counts: dict[int, list[int]]
    pooled: dict[int, GaussianMixture]

    def mixture_for(self, station: int, p_hat: float) -> GaussianMixture:
        j = interval_index(p_hat, self.n_intervals)
        g = self.per_station[station][j - 1]
        return g if g is not None else self.pooled[station]

    def to_dict(self) -> dict:
        return {
            "n_intervals": self.n_intervals,
            "stations": {
                str(sid): [
                    g.to_dict() if g is not None else None
                    for g in self.per_station[sid]
                ]
                for sid in self.station_ids
            },
            "counts": {str(sid): self.counts[sid] for sid in self.station_ids},
            "pooled": {str(sid): self.pooled[sid].to_dict()
                       for sid in self.station_ids},
        }

    @staticmethod
    def from_dict(doc: dict) -> "IntervalErrorModel":
        sids = tuple(sorted(int(s) for s in doc["stations"]))
        return IntervalErrorModel(
            n_intervals=int(doc["n_intervals"]),
            station_ids=sids,
            per_station={
                sid: [
                    GaussianMixture.from_dict(g) if g is not None else None
                    for g in doc["stations"][str(sid)]
                ]
                for sid in sids
            },
            counts={sid: list(doc["counts"][str(sid)]) for sid in sids},
            pooled={sid: GaussianMixture.from_dict(doc["pooled"][str(sid)])
                    for sid in sids},
        )

    def save(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path: Path) -> "IntervalErrorModel":
        with open(path, "r", encoding="utf-8") as fh:
            return IntervalErrorModel.from_dict(json.load(fh))


def build_interval_error_model(
    forecasts: np.ndarray,
    truths: np.ndarray,
    station_ids: tuple[int, ...],
    n_intervals: int = 100,
    min_samples: int = 30,
    seed: int = 0,
) -> IntervalErrorModel:
    """Fit per-interval error mixtures from historical (forecast, truth)
    pairs, both [n_samples, n_stations] in normalized units."""
    if n_intervals < 1:
        raise ValueError("n_intervals must be >= 1")
    forecasts = np.asarray(forecasts, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if forecasts.shape != truths.shape or forecasts.size == 0:
        raise ValueError("forecasts/truths must be equal-shaped and non-empty")
    errors = truths - forecasts

    per_station: dict[int, list[GaussianMixture | None]] = {}
    counts: dict[int, list[int]] = {}
    pooled: dict[int, GaussianMixture] = {}
    for col, sid in enumerate(station_ids):
        bins = np.array([
            interval_index(p, n_intervals) for p in forecasts[:, col]
        ])
        fits: list[GaussianMixture | None] = []
        cnt: list[int] = []
        for j in range(1, n_intervals + 1):
            sel = errors[bins == j, col]
            cnt.append(int(sel.size))
            if sel.size >= min_samples:
                fits.append(fit_gmm_bic(sel, seed=seed))
            else:
                fits.append(None)
        per_station[sid] = fits
        counts[sid] = cnt
        pooled[sid] = fit_gmm_bic(errors[:, col], seed=seed)
    return IntervalErrorModel(
        n_intervals=n_intervals,
        station_ids=tuple(station_ids),
        per_station=per_station,
        counts=counts,
        pooled=pooled,
    )


def fit_error_model_from_dataset(
    model, dataset, n_intervals: int = 100, min_samples: int = 30,
    seed: int = 0,
) -> IntervalErrorModel:
    """Deterministic forecasts over the train+val history, then interval
    fitting. The test split stays untouched."""
    from ..forecast.training import predict

    idx = np.sort(np.concatenate([dataset.splits["train"], dataset.splits["val"]]))
    if idx.size == 0:
        raise ValueError("empty history: no train/val samples")
    forecasts = predict(model, dataset.features[idx])
    truths = dataset.truths[idx]
    return build_interval_error_model(
        forecasts, truths, dataset.station_ids,
        n_intervals=n_intervals, min_samples=min_samples, seed=seed,
    )


def probabilistic_forecast(
    model, error_model: IntervalErrorModel, features: np.ndarray | torch.Tensor
) -> dict[int, GaussianMixture]:
    """Per-station demand mixture for one feature window: deterministic
    forecast, interval lookup, then error mixture shifted by the forecast."""
    from ..forecast.training import predict

    arr = np.asarray(features, dtype=float)
    if arr.ndim == 3:
        arr = arr[None]
    p_hat = predict(model, arr)[0]
    out = {}
    for col, sid in enumerate(error_model.station_ids):
        g = error_model.mixture_for(sid, float(p_hat[col]))
        out[sid] = gmm_shift(g, float(p_hat[col]))
    return out

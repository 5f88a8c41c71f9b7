"""Series normalization, feature windows, and split bookkeeping.

A sample couples one [channel x station x T] feature window with the
next-slot demand of every station. Channels are raw codes; the forecaster
embeds them:

    0: normalized demand history
    1: time-of-day slot index (0..95)
    2: day-of-week index (0..6)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .transactions import SLOT_MINUTES

log = logging.getLogger(__name__)

N_CHANNELS = 3
TOD_CARDINALITY = 24 * 60 // SLOT_MINUTES
DOW_CARDINALITY = 7


@dataclass(frozen=True)
class DemandSeries:
    station: int
    t0: datetime
    values: np.ndarray  # normalized demand in [0, 1]
    scale: float  # kW per normalized unit
    step_minutes: int = SLOT_MINUTES


def normalize(
    values: np.ndarray, train_mask: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """Scale a kW series by its training-split maximum.

    Values outside the training mask may exceed 1; they are clipped with a
    logged warning. An all-zero training split keeps the series unchanged
    (scale 1).
    """
    values = np.asarray(values, dtype=float)
    mask = np.ones(values.shape, dtype=bool) if train_mask is None else train_mask
    peak = float(values[mask].max()) if mask.any() else 0.0
    if peak <= 0.0:
        return values.copy(), 1.0
    out = values / peak
    over = out > 1.0
    if np.any(over):
        log.warning(
            "clipping %d normalized values above 1 (max %.4f)",
            int(over.sum()), float(out.max()),
        )
        out = np.minimum(out, 1.0)
    return out, peak


def denormalize(values: np.ndarray, scale: float) -> np.ndarray:
    return np.asarray(values, dtype=float) * scale


@dataclass(frozen=True)
class WindowedDataset:
    features: np.ndarray  # [n_samples, N_CHANNELS, n_stations, T]
    truths: np.ndarray  # [n_samples, n_stations]
    window_starts: np.ndarray  # slot index of each window's first slot
    splits: dict[str, np.ndarray]  # name -> sample indices
    station_ids: tuple[int, ...]
    scales: np.ndarray  # kW per unit, per station
    t0: datetime
    t_window: int

    def subset(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.splits[name]
        return self.features[idx], self.truths[idx]

    def slot_time(self, slot: int) -> datetime:
        return self.t0 + slot * timedelta(minutes=SLOT_MINUTES)


def window_and_split(
    kw_series: dict[int, np.ndarray],
    t0: datetime,
    t_window: int = 8,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    gaps: list[int] | None = None,
) -> WindowedDataset:
    """Slide length-T windows with next-slot targets, then randomly
    partition samples into train/val/test under the seed.

    Normalization scales come from the slots covered by training windows
    only; val/test values above the training peak are clipped (logged).
    `gaps` lists slot indices that start a new segment; windows never span
    one.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    station_ids = tuple(sorted(kw_series))
    arr_kw = np.stack([np.asarray(kw_series[s], dtype=float) for s in station_ids])
    n_stations, n_slots = arr_kw.shape
    if n_slots < t_window + 1:
        raise ValueError("series shorter than one window plus target")

    gap_set = set(gaps or [])
    starts = [
        w for w in range(n_slots - t_window)
        if not any(w < g <= w + t_window for g in gap_set)
    ]
    starts = np.asarray(starts, dtype=int)
    n_samples = len(starts)

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_samples)
    n_train = int(np.floor(ratios[0] * n_samples))
    n_val = int(np.floor(ratios[1] * n_samples))
    splits = {
        "train": np.sort(perm[:n_train]),
        "val": np.sort(perm[n_train:n_train + n_val]),
        "test": np.sort(perm[n_train + n_val:]),
    }

    train_mask = np.zeros(n_slots, dtype=bool)
    for i in splits["train"]:
        w = starts[i]
        train_mask[w:w + t_window + 1] = True
    arr_norm = np.empty_like(arr_kw)
    scales = np.empty(n_stations)
    for s in range(n_stations):
        arr_norm[s], scales[s] = normalize(arr_kw[s], train_mask)

    slot_idx = np.arange(n_slots)
    tod = (slot_idx % TOD_CARDINALITY).astype(float)
    start_dow = t0.weekday()
    dow = ((slot_idx // TOD_CARDINALITY + start_dow) % DOW_CARDINALITY).astype(float)

    features = np.empty((n_samples, N_CHANNELS, n_stations, t_window))
    truths = np.empty((n_samples, n_stations))
    for i, w in enumerate(starts):
        features[i, 0] = arr_norm[:, w:w + t_window]
        features[i, 1] = np.broadcast_to(tod[w:w + t_window], (n_stations, t_window))
        features[i, 2] = np.broadcast_to(dow[w:w + t_window], (n_stations, t_window))
        truths[i] = arr_norm[:, w + t_window]

    return WindowedDataset(
        features=features, truths=truths, window_starts=starts,
        splits=splits, station_ids=station_ids, scales=scales,
        t0=t0, t_window=t_window,
    )

"""Charging-transaction records, validity screening, and slot aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

SLOT_MINUTES = 15
SLOT = timedelta(minutes=SLOT_MINUTES)


@dataclass(frozen=True)
class ChargingTransaction:
    station: int
    start: datetime
    end: datetime
    energy_kwh: float
    mean_power_kw: float

    def duration_hours(self) -> float:
        return (self.end - self.start).total_seconds() / 3600.0


@dataclass(frozen=True)
class CleaningRules:
    min_energy_kwh: float = 1.0
    min_duration_min: float = 1.0
    max_duration_h: float = 24.0
    p_max_kw: float = 150.0


def clean_transactions(
    raw: list[ChargingTransaction], rules: CleaningRules = CleaningRules()
) -> tuple[list[ChargingTransaction], list[tuple[ChargingTransaction, str]]]:
    """Split raw transactions into (valid, rejected-with-reason)."""
    valid, rejected = [], []
    for tr in raw:
        dur_h = tr.duration_hours()
        if tr.energy_kwh < rules.min_energy_kwh:
            rejected.append((tr, "energy"))
        elif dur_h * 60.0 < rules.min_duration_min or dur_h > rules.max_duration_h:
            rejected.append((tr, "duration"))
        elif not (0.0 < tr.mean_power_kw <= rules.p_max_kw):
            rejected.append((tr, "power"))
        else:
            valid.append(tr)
    return valid, rejected


def aggregate(
    valid: list[ChargingTransaction],
    t0: datetime,
    n_slots: int,
) -> dict[int, np.ndarray]:
    """Spread each transaction's energy uniformly over the 15-minute slots
    it overlaps and return per-station average power (kW) per slot.

    Energy outside [t0, t0 + n_slots*15min) is dropped; within the grid the
    split is an exact partition, so summed slot energy equals summed
    transaction energy.
    """
    out: dict[int, np.ndarray] = {}
    slot_h = SLOT_MINUTES / 60.0
    for tr in valid:
        series = out.setdefault(tr.station, np.zeros(n_slots))
        dur_s = (tr.end - tr.start).total_seconds()
        if dur_s <= 0:
            continue
        first = int(np.floor((tr.start - t0) / SLOT))
        last = int(np.ceil((tr.end - t0) / SLOT))
        for k in range(max(first, 0), min(last, n_slots)):
            slot_start = t0 + k * SLOT
            ov_start = max(tr.start, slot_start)
            ov_end = min(tr.end, slot_start + SLOT)
            ov_s = (ov_end - ov_start).total_seconds()
            if ov_s <= 0:
                continue
            energy_k = tr.energy_kwh * ov_s / dur_s
            series[k] += energy_k / slot_h
    return out

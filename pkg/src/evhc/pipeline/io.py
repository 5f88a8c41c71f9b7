"""File formats for the data pipeline.

Transactions: CSV `station,start_iso8601,end_iso8601,energy_kwh,mean_power_kw`.
Series: CSV `station,timestamp,value`. Manifest: JSON with seed, split
indices, and per-station scales. All writers are byte-deterministic for
identical inputs.
"""
from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path

import numpy as np

from .dataset import WindowedDataset
from .transactions import ChargingTransaction

ISO = "%Y-%m-%dT%H:%M:%S"


def write_transactions_csv(path: Path, transactions: list[ChargingTransaction]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("station,start_iso8601,end_iso8601,energy_kwh,mean_power_kw\n")
        for tr in transactions:
            fh.write(
                f"{tr.station},{tr.start.strftime(ISO)},{tr.end.strftime(ISO)},"
                f"{tr.energy_kwh!r},{tr.mean_power_kw!r}\n"
            )


def read_transactions_csv(path: Path) -> list[ChargingTransaction]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("station,"):
            raise ValueError(f"unrecognized transactions header: {header!r}")
        for line in fh:
            st, a, b, e, p = line.rstrip("\n").split(",")
            out.append(ChargingTransaction(
                station=int(st),
                start=datetime.strptime(a, ISO),
                end=datetime.strptime(b, ISO),
                energy_kwh=float(e),
                mean_power_kw=float(p),
            ))
    return out


def write_series_csv(
    path: Path, series: dict[int, np.ndarray], t0: datetime, step_minutes: int = 15
) -> None:
    from datetime import timedelta
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("station,timestamp,value\n")
        for sid in sorted(series):
            vals = series[sid]
            for k, v in enumerate(vals):
                ts = (t0 + k * timedelta(minutes=step_minutes)).strftime(ISO)
                fh.write(f"{sid},{ts},{float(v)!r}\n")


def read_series_csv(path: Path) -> tuple[dict[int, np.ndarray], datetime]:
    per: dict[int, list[float]] = {}
    t0 = None
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("station,"):
            raise ValueError(f"unrecognized series header: {header!r}")
        for line in fh:
            st, ts, v = line.rstrip("\n").split(",")
            when = datetime.strptime(ts, ISO)
            if t0 is None or when < t0:
                t0 = when
            per.setdefault(int(st), []).append(float(v))
    return {k: np.asarray(v) for k, v in per.items()}, t0


def write_manifest(path: Path, dataset: WindowedDataset, seed: int) -> None:
    doc = {
        "seed": seed,
        "t0": dataset.t0.strftime(ISO),
        "t_window": dataset.t_window,
        "station_ids": list(dataset.station_ids),
        "scales_kw": [float(s) for s in dataset.scales],
        "window_starts": [int(w) for w in dataset.window_starts],
        "splits": {k: [int(i) for i in v] for k, v in dataset.splits.items()},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)

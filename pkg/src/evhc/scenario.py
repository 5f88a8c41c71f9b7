"""Bundled demand scenario for the 33-bus feeder."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .mixtures import GaussianMixture


def load_scenario(path: str | Path | None = None) -> dict:
    """Read a scenario file: per-station demand mixtures (per-unit) plus
    the default risk/satisfaction knobs.

    Returns {"station_gmms": {sid: GaussianMixture}, "epsilon": float,
    "n_segments": int, "varsigma": float}.
    """
    if path is None:
        ref = resources.files("evhc").joinpath("data/scenario_ieee33.json")
        with resources.as_file(ref) as p:
            doc = json.loads(Path(p).read_text(encoding="utf-8"))
    else:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    gmms = {}
    for sid, entry in doc["stations"].items():
        comp = entry["components"]
        gmms[int(sid)] = GaussianMixture(
            np.array([c["w"] for c in comp]),
            np.array([c["mu"] for c in comp]),
            np.array([c["sigma"] for c in comp]),
        )
    return {
        "station_gmms": gmms,
        "epsilon": float(doc.get("epsilon", 0.2)),
        "n_segments": int(doc.get("n_segments", 20)),
        "varsigma": float(doc.get("varsigma", 0.001)),
    }

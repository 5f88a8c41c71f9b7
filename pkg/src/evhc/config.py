"""Run configuration: one JSON file, CLI overrides, seeded sub-streams."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_SEED_LABELS = {"data": 0, "train": 1, "mc": 2, "errors": 3, "assess": 4}


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "seed": 0,
    "paths": {
        "network": None,  # null -> bundled 33-bus case
        "data_dir": "data",
        "out_dir": "out",
    },
    "pipeline": {
        "stations": 12,
        "days": 365,
        "t_window": 8,
        "ratios": [0.6, 0.2, 0.2],
        "n_intervals": 100,
        "min_interval_samples": 30,
        "scale_kw": None,  # null -> generator defaults
    },
    "train": {
        "learning_rate": 0.001,
        "batch_size": 64,
        "epochs": 60,
        "k_s": 3,
        "n_e": 10,
        "hidden": 16,
        "k_t": 2,
        "n_blocks": 2,
        "z_prime": 8,
        "mlp_hidden": 64,
        "embed_dim": 4,
    },
    "ppf": {
        "varsigma": 0.001,
        "input_cap": 3,
        "output_cap": 16,
        "mc_samples": 100_000,
        "focus_bus": 18,
    },
    "hc": {
        "epsilon": 0.2,
        "n_segments": 20,
        "gap_tol": 1e-4,
        "node_limit": 100_000,
        "lt_cap_factor": 4.0,
    },
    "assess": {
        "at": None,  # ISO timestamp; null -> first test-split evening slot
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


@dataclass
class RunConfig:
    raw: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULTS)))

    @staticmethod
    def load(path: str | Path | None, overrides: dict | None = None) -> "RunConfig":
        doc = json.loads(json.dumps(DEFAULTS))
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file not found: {p}")
            try:
                user = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
            unknown = set(user) - set(DEFAULTS)
            if unknown:
                raise ConfigError(f"unknown config sections: {sorted(unknown)}")
            doc = _merge(doc, user)
        if overrides:
            doc = _merge(doc, overrides)
        cfg = RunConfig(doc)
        cfg.validate()
        return cfg

    def __getitem__(self, key: str):
        return self.raw[key]

    def validate(self) -> None:
        pl = self.raw["pipeline"]
        if pl["days"] < 1:
            raise ConfigError("pipeline.days must be >= 1")
        if pl["stations"] < 1:
            raise ConfigError("pipeline.stations must be >= 1")
        if pl["t_window"] < 1:
            raise ConfigError("pipeline.t_window must be >= 1")
        if pl["n_intervals"] < 1:
            raise ConfigError("pipeline.n_intervals must be >= 1")
        ratios = pl["ratios"]
        if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) <= 0:
            raise ConfigError("pipeline.ratios must be three positive "
                              "fractions summing to 1")
        ppf = self.raw["ppf"]
        if not (0.0 < ppf["varsigma"] < 1.0):
            raise ConfigError("ppf.varsigma must lie strictly inside (0, 1)")
        if ppf["mc_samples"] < 1:
            raise ConfigError("ppf.mc_samples must be >= 1")
        hc = self.raw["hc"]
        eps = hc["epsilon"]
        eps_values = eps.values() if isinstance(eps, dict) else [eps]
        if any(not (0.0 < e < 1.0) for e in eps_values):
            raise ConfigError("hc.epsilon must lie strictly inside (0, 1)")
        if hc["n_segments"] < 1:
            raise ConfigError("hc.n_segments must be >= 1")
        tr = self.raw["train"]
        if tr["epochs"] < 1 or tr["batch_size"] < 1 or tr["learning_rate"] <= 0:
            raise ConfigError("train.epochs/batch_size/learning_rate must be "
                              "positive")

    def seed(self, label: str) -> int:
        """Labeled sub-seed derived from the root seed."""
        root = int(self.raw["seed"])
        ss = np.random.SeedSequence([root, _SEED_LABELS[label]])
        return int(ss.generate_state(1)[0])

    def data_dir(self) -> Path:
        return Path(self.raw["paths"]["data_dir"])

    def out_dir(self) -> Path:
        return Path(self.raw["paths"]["out_dir"])

    def echo(self, out_dir: Path, command: str) -> None:
        doc = {"command": command, "config": self.raw}
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "resolved_config.json", "w", encoding="utf-8",
                  newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

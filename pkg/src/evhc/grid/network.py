"""Radial distribution network model.

Buses and lines are stored in per-unit on the base MVA / base kV recorded
in the network file. Radiality (|lines| = |buses| - 1 plus connectivity)
is enforced at construction, so downstream solvers may assume a spanning
tree rooted at the single slack bus.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class NetworkError(ValueError):
    """Raised when a network file fails structural validation."""


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str  # "slack" | "load"
    p_load: float  # per-unit active demand
    q_load: float  # per-unit reactive demand
    station: int | None = None


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float  # per-unit
    x: float  # per-unit
    i_max: float  # per-unit current magnitude limit


@dataclass(frozen=True)
class DistributionNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    v_slack: float
    v_min: float
    v_max: float
    base_mva: float
    base_kv: float
    # derived indexing, filled in __post_init__
    slack: int = field(init=False, repr=False, default=0)

    def __post_init__(self):
        _validate(self)
        slack_ids = [b.id for b in self.buses if b.kind == "slack"]
        object.__setattr__(self, "slack", slack_ids[0])

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_line(self) -> int:
        return len(self.lines)

    @property
    def station_buses(self) -> dict[int, int]:
        """Map station id -> bus id, sorted by station id."""
        pairs = [(b.station, b.id) for b in self.buses if b.station is not None]
        return dict(sorted(pairs))

    def bus(self, bus_id: int) -> Bus:
        return self.buses[bus_id - 1]

    def children(self, bus_id: int) -> list[int]:
        """Bus ids fed from `bus_id` (lines oriented root -> leaf)."""
        return [ln.to_bus for ln in self.lines if ln.from_bus == bus_id]

    def parent_line(self, bus_id: int) -> Line | None:
        for ln in self.lines:
            if ln.to_bus == bus_id:
                return ln
        return None


def _validate(net: DistributionNetwork) -> None:
    n = len(net.buses)
    ids = [b.id for b in net.buses]
    if sorted(ids) != list(range(1, n + 1)):
        raise NetworkError("bus ids must be contiguous 1..n without duplicates")
    slack_ids = [b.id for b in net.buses if b.kind == "slack"]
    if len(slack_ids) != 1:
        raise NetworkError(f"exactly one slack bus required, found {len(slack_ids)}")
    stations = [b.station for b in net.buses if b.station is not None]
    if len(stations) != len(set(stations)):
        raise NetworkError("station ids must be unique")
    for b in net.buses:
        if not (abs(b.p_load) < 1e9 and abs(b.q_load) < 1e9):
            raise NetworkError(f"non-finite load at bus {b.id}")
    if len(net.lines) != n - 1:
        raise NetworkError(
            f"non-radial: {len(net.lines)} lines for {n} buses (need n-1)"
        )
    for ln in net.lines:
        if ln.r < 0 or ln.x < 0:
            raise NetworkError(f"negative impedance on line {ln.from_bus}-{ln.to_bus}")
        if ln.i_max <= 0:
            raise NetworkError(f"i_max must be positive on line {ln.from_bus}-{ln.to_bus}")
        if not (1 <= ln.from_bus <= n and 1 <= ln.to_bus <= n):
            raise NetworkError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus")
    # connectivity via union-find; with |lines| = n-1, connected <=> spanning tree
    parent = list(range(n + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ln in net.lines:
        ra, rb = find(ln.from_bus), find(ln.to_bus)
        if ra == rb:
            raise NetworkError(f"non-radial: cycle through line {ln.from_bus}-{ln.to_bus}")
        parent[ra] = rb
    roots = {find(i) for i in range(1, n + 1)}
    if len(roots) != 1:
        raise NetworkError("disconnected network")


def _orient_lines(buses: list[Bus], lines: list[Line], slack: int) -> list[Line]:
    """Reorient every line so `from` is on the slack side (root -> leaf)."""
    adj: dict[int, list[Line]] = {}
    for ln in lines:
        adj.setdefault(ln.from_bus, []).append(ln)
        adj.setdefault(ln.to_bus, []).append(ln)
    oriented, seen, stack = [], {slack}, [slack]
    while stack:
        b = stack.pop()
        for ln in adj.get(b, []):
            other = ln.to_bus if ln.from_bus == b else ln.from_bus
            if other in seen:
                continue
            seen.add(other)
            stack.append(other)
            if ln.from_bus == b:
                oriented.append(ln)
            else:
                oriented.append(Line(b, other, ln.r, ln.x, ln.i_max))
    oriented.sort(key=lambda ln: ln.to_bus)
    return oriented


def load_network(source: str | Path | dict) -> DistributionNetwork:
    """Parse a network JSON file (or pre-parsed dict) into a validated network.

    Raises NetworkError for structural problems and json.JSONDecodeError /
    KeyError for malformed files.
    """
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    buses = [
        Bus(
            id=int(b["id"]),
            kind=str(b["kind"]),
            p_load=float(b["p_load"]),
            q_load=float(b["q_load"]),
            station=int(b["station"]) if b.get("station") is not None else None,
        )
        for b in doc["buses"]
    ]
    lines = [
        Line(
            from_bus=int(ln["from"]),
            to_bus=int(ln["to"]),
            r=float(ln["r"]),
            x=float(ln["x"]),
            i_max=float(ln["i_max"]),
        )
        for ln in doc["lines"]
    ]
    slack_ids = [b.id for b in buses if b.kind == "slack"]
    if len(slack_ids) == 1 and len(lines) == len(buses) - 1:
        lines = _orient_lines(buses, lines, slack_ids[0])
    return DistributionNetwork(
        buses=tuple(buses),
        lines=tuple(lines),
        v_slack=float(doc["v_slack"]),
        v_min=float(doc["v_min"]),
        v_max=float(doc["v_max"]),
        base_mva=float(doc["base_mva"]),
        base_kv=float(doc["base_kv"]),
    )


def ieee33() -> DistributionNetwork:
    """The bundled 33-bus feeder with 12 charging stations."""
    ref = resources.files("evhc.grid").joinpath("data/ieee33.json")
    with resources.as_file(ref) as path:
        return load_network(path)

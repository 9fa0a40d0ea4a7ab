"""Open-plane movement with POI-driven destination choice.

Nodes travel in straight lines between waypoints.  On arrival a node pauses
for a time drawn from its group's pause range and then heads to the next
waypoint, which is a point of one of its POI groups with the configured
probability and a uniform point of the world rectangle otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import GroupConfig, PoiConfig, ScenarioConfig
from .routing import Buffer, NodeState


@dataclass
class PoiGroup:
    name: str
    points: np.ndarray  # shape (k, 2)


def place_pois(pois: Sequence[PoiConfig], seed: int) -> dict[str, PoiGroup]:
    """Draw each POI group's points uniformly inside its area."""
    rng = np.random.default_rng(seed)
    out = {}
    for p in pois:
        x0, y0, x1, y1 = p.area
        pts = np.column_stack([rng.uniform(x0, x1, p.count), rng.uniform(y0, y1, p.count)])
        out[p.name] = PoiGroup(p.name, pts)
    return out


def next_destination(selection: Sequence[tuple[PoiGroup, float]], rng: np.random.Generator,
                     width: float, height: float) -> np.ndarray:
    u = rng.random()
    acc = 0.0
    for group, p in selection:
        acc += p
        if u < acc and len(group.points):
            return group.points[rng.integers(len(group.points))].copy()
    return np.array([rng.uniform(0.0, width), rng.uniform(0.0, height)])


def step_position(pos: np.ndarray, dest: np.ndarray, speed: float,
                  dt: float) -> tuple[np.ndarray, bool]:
    """Advance ``speed * dt`` metres toward ``dest``; returns (pos, arrived)."""
    delta = dest - pos
    dist = float(np.hypot(*delta))
    travel = speed * dt
    if dist <= travel:
        return dest.copy(), True
    return pos + delta * (travel / dist), False


def build_population(cfg: ScenarioConfig) -> list[NodeState]:
    nodes = []
    for group in cfg.groups:
        for _ in range(group.count):
            nodes.append(NodeState(
                id=len(nodes),
                group=group,
                buffer=Buffer(cfg.buffer_bytes),
                radios=group.radios,
                generates=group.is_generator,
            ))
    return nodes


class Mobility:
    """Vectorised movement state for a whole population."""

    def __init__(self, groups: Sequence[GroupConfig], pois: dict[str, PoiGroup],
                 width: float, height: float, rng: np.random.Generator):
        self.groups = list(groups)
        self.width = width
        self.height = height
        self.rng = rng
        self.selection = [[(pois[name], p) for name, p in g.pois] for g in self.groups]
        n = len(self.groups)
        self.pos = np.column_stack([rng.uniform(0, width, n), rng.uniform(0, height, n)]) \
            if n else np.zeros((0, 2))
        self.dest = np.zeros((n, 2))
        self.speed = np.zeros(n)
        self.pause_until = np.zeros(n)
        for i in range(n):
            self._new_leg(i)

    @classmethod
    def for_nodes(cls, nodes: Sequence[NodeState], cfg: ScenarioConfig,
                  rng: np.random.Generator) -> "Mobility":
        pois = place_pois(cfg.pois, cfg.poi_seed)
        return cls([n.group for n in nodes], pois, cfg.world_width, cfg.world_height, rng)

    def _new_leg(self, i: int) -> None:
        g = self.groups[i]
        self.dest[i] = next_destination(self.selection[i], self.rng, self.width, self.height)
        self.speed[i] = self.rng.uniform(*g.speed)

    def step(self, now: float, dt: float) -> None:
        """Move every node that is not pausing by one tick of length ``dt``."""
        idx = np.nonzero(self.pause_until <= now)[0]
        if not len(idx):
            return
        delta = self.dest[idx] - self.pos[idx]
        dist = np.hypot(delta[:, 0], delta[:, 1])
        travel = self.speed[idx] * dt
        arrived = dist <= travel
        going = ~arrived
        if going.any():
            j = idx[going]
            self.pos[j] += delta[going] * (travel[going] / dist[going])[:, None]
        for i in idx[arrived]:
            self.pos[i] = self.dest[i]
            lo, hi = self.groups[i].pause
            self.pause_until[i] = now + self.rng.uniform(lo, hi)
            self._new_leg(i)

"""Range-based contact detection and timed transfers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .config import RadioConfig


@dataclass(frozen=True)
class Contact:
    a: int
    b: int
    up_since: float
    link: RadioConfig


@dataclass
class TransferJob:
    msg_id: int
    src: int
    dst: int
    started_at: float
    completes_at: float
    mode: str
    msg: Any = None  # snapshot of the copy being sent
    done: bool = False  # completed or aborted


def transfer_time(size_bytes: int, bandwidth_bps: float) -> float:
    if bandwidth_bps <= 0:
        raise ValueError("bandwidth must be positive")
    return size_bytes * 8 / bandwidth_bps


class ContactDetector:
    """Tracks which node pairs are within range of a shared radio.

    A pair is connected when both ends carry some radio whose range covers
    their distance; the link uses the fastest such radio.
    """

    def __init__(self, node_radios: Sequence[Sequence[str]], profiles: Sequence[RadioConfig]):
        n = len(node_radios)
        self.n = n
        self.profiles = sorted(profiles, key=lambda r: r.bandwidth_bps)
        # per radio: (profile index, pair mask of nodes both carrying it, range^2)
        self._masks = []
        for idx, prof in enumerate(self.profiles):
            has = np.array([prof.name in radios for radios in node_radios], dtype=bool)
            if has.any():
                self._masks.append((idx, np.outer(has, has), prof.range_m ** 2))
        self._upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        self.link = np.full((n, n), -1, dtype=np.int16)

    def links(self, positions: np.ndarray) -> np.ndarray:
        """Index into ``self.profiles`` of each pair's link, -1 when none."""
        diff = positions[:, None, :] - positions[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out = np.full((self.n, self.n), -1, dtype=np.int16)
        for idx, both, r2 in self._masks:
            out[both & (d2 <= r2)] = idx
        out[~self._upper] = -1
        return out

    def detect(self, positions: np.ndarray) -> tuple[list[tuple[int, int, RadioConfig]],
                                                     list[tuple[int, int]]]:
        """Returns ``(ups, downs)`` relative to the previous call."""
        if self.n < 2:
            return [], []
        new = self.links(positions)
        now_up = new >= 0
        was_up = self.link >= 0
        ups = np.argwhere(now_up & ~was_up)
        downs = np.argwhere(was_up & ~now_up)
        # a pair keeps the radio it connected on until the contact breaks
        keep = now_up & was_up
        new[keep] = self.link[keep]
        self.link = new
        up_list = [(int(a), int(b), self.profiles[new[a, b]]) for a, b in ups]
        down_list = [(int(a), int(b)) for a, b in downs]
        return up_list, down_list

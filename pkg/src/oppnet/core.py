"""Event queue, message lifecycle and the simulation run loop."""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .config import ScenarioConfig, validate
from .mobility import Mobility, build_population
from .radio import ContactDetector, TransferJob, transfer_time
from .routing import (STRATEGIES, BufferEntry, NodeState, Router, buffer_admit,
                      relayed_copy)
from .stats import StatsCollector, StatsReport


@dataclass(frozen=True)
class Message:
    id: int
    src: int
    dst: int
    size: int
    created_at: float
    ttl: float
    hops_remaining: Optional[int] = None  # None: bounded by TTL only
    hops: int = 0  # relays travelled by this copy

    @property
    def deadline(self) -> float:
        return self.created_at + self.ttl

    def is_dead(self, now: float) -> bool:
        return now > self.deadline


class EventKind(enum.IntEnum):
    MOVEMENT_UPDATE = 0
    CONTACT_CHECK = 1
    MESSAGE_GENERATION = 2
    TRANSFER_COMPLETE = 3
    TTL_SWEEP = 4
    LINK_UP = 5
    LINK_DOWN = 6
    MESSAGE_INJECT = 7
    SIM_END = 8


@dataclass(order=True)
class Event:
    fire_at: float
    last: int  # 1 only for SIM_END, so it trails every event at the horizon
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)


class EventQueue:
    """Min-heap ordered by ``(fire_at, seq)``; ties fire in insertion order."""

    def __init__(self):
        self._heap: list[Event] = []
        self._seq = itertools.count()

    def push(self, fire_at: float, kind: EventKind, payload: Any = None) -> Event:
        ev = Event(fire_at, int(kind is EventKind.SIM_END), next(self._seq), kind, payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)


def generate_message(src: int, now: float, rng: np.random.Generator, cfg: ScenarioConfig,
                     generators: Sequence[int], msg_id: int) -> Message:
    """New message from ``src`` to a uniformly chosen other generator."""
    others = [g for g in generators if g != src]
    dst = others[int(rng.integers(len(others)))]
    size = int(rng.integers(cfg.size_min, cfg.size_max, endpoint=True))
    ttl = float(cfg.ttls[int(rng.integers(len(cfg.ttls)))])
    return Message(msg_id, src, dst, size, now, ttl, cfg.hop_limit)


def next_generation_gap(rng: np.random.Generator, mean: float) -> float:
    return float(rng.exponential(mean))


def expire_messages(node: NodeState, now: float) -> list[BufferEntry]:
    """Remove every copy at ``node`` whose lifetime has passed.

    Expiry is strict: a copy created at 0 with a 3 h TTL survives at 10800 s
    and is gone at any later instant.  Returns the removed entries.
    """
    dead = [e.msg.id for e in node.buffer if e.msg.is_dead(now)]
    return [node.buffer.remove(i) for i in dead]


def make_router(cfg: ScenarioConfig) -> Router:
    if cfg.strategy == "epidemic":
        return STRATEGIES["epidemic"](cfg.seen_window)
    table = dict(seen_window=cfg.seen_window, p_init=cfg.p_init, alpha=cfg.alpha,
                 beta=cfg.beta, time_unit=cfg.time_unit, learn=cfg.learn)
    if cfg.strategy == "prophet":
        return STRATEGIES["prophet"](**table)
    return STRATEGIES["integrated"](threshold=cfg.threshold, wait_time=cfg.wait_time,
                                    max_copies=cfg.max_copies, knowledge=cfg.knowledge,
                                    **table)


@dataclass
class Link:
    src: int
    dst: int
    bandwidth: float
    queue: deque = field(default_factory=deque)
    queued: set = field(default_factory=set)
    job: Optional[TransferJob] = None


class Simulation:
    """One deterministic run of a scenario.

    With ``mobility=False`` and ``traffic=False`` nothing happens on its own;
    contacts and messages are then scripted through :meth:`schedule_contact`
    and :meth:`inject_message`.
    """

    def __init__(self, cfg: ScenarioConfig, seed: Optional[int] = None,
                 router: Optional[Router] = None, mobility: bool = True,
                 traffic: bool = True):
        validate(cfg)
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        ss = np.random.SeedSequence(self.seed)
        mob_ss, traffic_ss = ss.spawn(2)
        self.traffic_rng = np.random.default_rng(traffic_ss)
        self.router = router or make_router(cfg)
        self.nodes = build_population(cfg)
        for node in self.nodes:
            node.table = self.router.make_table(node.id)
        self.stats = StatsCollector()
        self.queue = EventQueue()
        self.now = 0.0
        self.links: dict[tuple[int, int], Link] = {}
        self.incoming: dict[int, set[int]] = {n.id: set() for n in self.nodes}
        self.single = cfg.transfers == "single"
        self.busy: dict[int, int] = {n.id: 0 for n in self.nodes}  # active jobs per node
        self._ids = itertools.count(1)
        self.generators = [n.id for n in self.nodes if n.generates]
        # (time, src, dst, msg_id, mode) for every completed transfer
        self.transfers: list[tuple[float, int, int, int, str]] = []
        self.mobility = None
        self.detector = None
        if mobility and self.nodes:
            self.mobility = Mobility.for_nodes(self.nodes, cfg, np.random.default_rng(mob_ss))
            self.detector = ContactDetector([n.radios for n in self.nodes], cfg.radios)
            self.queue.push(0.0, EventKind.CONTACT_CHECK, 0)
        if traffic and len(self.generators) > 1:
            for g in self.generators:
                gap = next_generation_gap(self.traffic_rng, cfg.traffic_interval)
                self.queue.push(gap, EventKind.MESSAGE_GENERATION, g)
        self.queue.push(cfg.sim_time, EventKind.SIM_END)

    # --- scripting ----------------------------------------------------------

    def schedule_contact(self, t_up: float, a: int, b: int, t_down: Optional[float] = None,
                         radio: str = "bluetooth") -> None:
        a, b = min(a, b), max(a, b)
        self.queue.push(t_up, EventKind.LINK_UP, (a, b, self.cfg.radio(radio)))
        if t_down is not None:
            self.queue.push(t_down, EventKind.LINK_DOWN, (a, b))

    def inject_message(self, t: float, src: int, dst: int, size: int, ttl: float,
                       hops_remaining: Optional[int] = None) -> int:
        msg_id = next(self._ids)
        msg = Message(msg_id, src, dst, size, t, ttl, hops_remaining)
        self.queue.push(t, EventKind.MESSAGE_INJECT, msg)
        return msg_id

    # --- run loop -----------------------------------------------------------

    def run(self) -> StatsReport:
        handlers = {
            EventKind.MOVEMENT_UPDATE: self._on_movement,
            EventKind.CONTACT_CHECK: self._on_contact_check,
            EventKind.MESSAGE_GENERATION: self._on_generation,
            EventKind.TRANSFER_COMPLETE: self._on_transfer_complete,
            EventKind.TTL_SWEEP: self._on_ttl_sweep,
            EventKind.LINK_UP: lambda p: self.link_up(*p),
            EventKind.LINK_DOWN: lambda p: self.link_down(*p),
            EventKind.MESSAGE_INJECT: self._add_message,
        }
        while True:
            ev = self.queue.pop()
            assert ev.fire_at >= self.now
            self.now = ev.fire_at
            if ev.kind is EventKind.SIM_END:
                break
            handlers[ev.kind](ev.payload)
        return self.finalize()

    def finalize(self) -> StatsReport:
        in_flight = sum(1 for link in self.links.values() if link.job is not None)
        open_times = tuple(self.now - e.received_at for n in self.nodes for e in n.buffer)
        return self.stats.finalize(self.now, in_flight, open_times)

    def timeseries(self, interval: Optional[float] = None) -> list[dict]:
        return self.stats.timeseries(interval or self.cfg.timeseries_interval, self.now)

    def _tick_time(self, k: int) -> float:
        return k * self.cfg.tick

    def _on_movement(self, k: int) -> None:
        self.mobility.step(self.now, self.cfg.tick)
        self.queue.push(self.now, EventKind.CONTACT_CHECK, k)

    def _on_contact_check(self, k: int) -> None:
        ups, downs = self.detector.detect(self.mobility.pos)
        for a, b in downs:
            self.link_down(a, b)
        for a, b, profile in ups:
            self.link_up(a, b, profile)
        t = self._tick_time(k + 1)
        if t <= self.cfg.sim_time:
            self.queue.push(t, EventKind.MOVEMENT_UPDATE, k + 1)

    def _on_generation(self, src: int) -> None:
        msg = generate_message(src, self.now, self.traffic_rng, self.cfg, self.generators,
                               next(self._ids))
        self._add_message(msg)
        gap = next_generation_gap(self.traffic_rng, self.cfg.traffic_interval)
        self.queue.push(self.now + gap, EventKind.MESSAGE_GENERATION, src)

    def _add_message(self, msg: Message) -> None:
        self.stats.record_created(msg.id, self.now)
        self.queue.push(math.nextafter(msg.deadline, math.inf), EventKind.TTL_SWEEP, msg.id)
        node = self.nodes[msg.src]
        admitted, evicted = buffer_admit(node, self.router.new_entry(msg, self.now, True))
        self._drop(evicted)
        if not admitted:
            self.stats.record_dropped()
            return
        self.router.on_new_message(self, node, msg.id, self.now)

    def _drop(self, entries) -> None:
        for e in entries:
            self.stats.record_dropped()
            self.stats.record_buffered(self.now - e.received_at)

    def _on_ttl_sweep(self, msg_id: int) -> None:
        for node in self.nodes:
            if msg_id in node.buffer:
                self._drop(expire_messages(node, self.now))
        for link in self.links.values():
            if link.job is not None and link.job.msg_id == msg_id:
                self._abort(link)
                if self.single:
                    self._wake(link.src, link.dst)
                else:
                    self._start_next(link)

    # --- contacts and transfers ---------------------------------------------

    def link_up(self, a: int, b: int, profile) -> None:
        if (a, b) in self.links:
            return
        self.links[(a, b)] = Link(a, b, profile.bandwidth_bps)
        self.links[(b, a)] = Link(b, a, profile.bandwidth_bps)
        na, nb = self.nodes[a], self.nodes[b]
        na.neighbors[b] = profile
        nb.neighbors[a] = profile
        self.router.on_contact(self, na, nb, self.now)

    def link_down(self, a: int, b: int) -> None:
        for key in ((a, b), (b, a)):
            link = self.links.pop(key, None)
            if link is None:
                continue
            if link.job is not None:
                self._abort(link)
            sender = self.nodes[link.src]
            for msg_id, mode in link.queue:
                self.router.on_aborted(sender, msg_id, mode)
        self.nodes[a].neighbors.pop(b, None)
        self.nodes[b].neighbors.pop(a, None)
        if self.single:
            self._wake(a, b)

    def _abort(self, link: Link) -> None:
        job = link.job
        job.done = True
        link.job = None
        self._release(job)
        self.stats.record_aborted()
        self.incoming[job.dst].discard(job.msg_id)
        self.router.on_aborted(self.nodes[job.src], job.msg_id, job.mode)

    def _release(self, job: TransferJob) -> None:
        self.busy[job.src] -= 1
        self.busy[job.dst] -= 1

    def _idle(self, link: Link) -> bool:
        if link.job is not None:
            return False
        return not self.single or (self.busy[link.src] == 0 and self.busy[link.dst] == 0)

    def _wake(self, *node_ids: int) -> None:
        """Offer freed nodes' waiting links a chance to start a transfer.

        Links whose next message is a direct delivery go first, then the
        rest in (src, dst) order, so the choice is deterministic.
        """
        waiting = []
        for x in node_ids:
            for n in self.nodes[x].neighbors:
                for key in ((x, n), (n, x)):
                    link = self.links.get(key)
                    if link is not None and link.queue and link.job is None:
                        waiting.append(link)
        dedup = {(l.src, l.dst): l for l in waiting}
        def key(link):
            entry = self.nodes[link.src].buffer.get(link.queue[0][0])
            direct = entry is not None and entry.msg.dst == link.dst
            return (not direct, link.src, link.dst)
        for link in sorted(dedup.values(), key=key):
            if self._idle(link):
                self._start_next(link)

    def enqueue(self, src: int, dst: int, msg_id: int, mode: str) -> bool:
        """Queue ``msg_id`` on the directed link src->dst; False if not queued."""
        link = self.links.get((src, dst))
        if link is None or msg_id in link.queued:
            return False
        if link.job is not None and link.job.msg_id == msg_id:
            return False
        link.queue.append((msg_id, mode))
        link.queued.add(msg_id)
        self.router.on_sent(self.nodes[src], msg_id, mode)
        if self._idle(link):
            self._start_next(link)
        return True

    def _start_next(self, link: Link) -> None:
        sender = self.nodes[link.src]
        receiver = self.nodes[link.dst]
        while link.queue:
            msg_id, mode = link.queue.popleft()
            link.queued.discard(msg_id)
            entry = sender.buffer.get(msg_id)
            if (entry is None or receiver.has(msg_id) or msg_id in self.incoming[receiver.id]
                    or entry.msg.is_dead(self.now)):
                self.router.on_aborted(sender, msg_id, mode)
                continue
            duration = transfer_time(entry.msg.size, link.bandwidth)
            job = TransferJob(msg_id, link.src, link.dst, self.now, self.now + duration, mode)
            job.msg = entry.msg
            link.job = job
            self.busy[link.src] += 1
            self.busy[link.dst] += 1
            self.incoming[receiver.id].add(msg_id)
            self.stats.record_started()
            self.queue.push(job.completes_at, EventKind.TRANSFER_COMPLETE, (link, job))
            return

    def _on_transfer_complete(self, payload) -> None:
        link, job = payload
        if job.done:
            return
        job.done = True
        link.job = None
        self._release(job)
        self.stats.record_relayed()
        self.incoming[job.dst].discard(job.msg_id)
        self.transfers.append((self.now, job.src, job.dst, job.msg_id, job.mode))
        self._receive(job)
        if self.single:
            self._wake(job.src, job.dst)
        elif self.links.get((link.src, link.dst)) is link:
            self._start_next(link)

    def _receive(self, job: TransferJob) -> None:
        msg = relayed_copy(job.msg)
        sender = self.nodes[job.src]
        receiver = self.nodes[job.dst]
        if receiver.id == msg.dst:
            if msg.id not in receiver.delivered:
                receiver.delivered.add(msg.id)
                self.stats.record_delivered(msg.id, self.now, self.now - msg.created_at,
                                            msg.hops, msg.ttl)
            if msg.id in sender.buffer:
                entry = sender.buffer.remove(msg.id)
                self.stats.record_buffered(self.now - entry.received_at)
            return
        if receiver.has(msg.id):
            return
        if not self.router.accept(receiver, msg, job.mode):
            self.stats.record_dropped()
            return
        admitted, evicted = buffer_admit(receiver, self.router.new_entry(msg, self.now, False))
        self._drop(evicted)
        if not admitted:
            self.stats.record_dropped()
            return
        self.router.on_new_message(self, receiver, msg.id, self.now)


def run(cfg: ScenarioConfig, seed: Optional[int] = None) -> StatsReport:
    return Simulation(cfg, seed).run()

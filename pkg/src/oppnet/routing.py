"""Routing strategies: Epidemic, PROPHET and the integrated protocol.

The strategies share one exchange skeleton.  When a contact comes up both
ends check their recently-seen cache, swap summary vectors and queue the
messages the other side is missing, filtered by the strategy's forwarding
rule.  Predictability tables are only kept by PROPHET and the integrated
router.
"""

from __future__ import annotations

import enum
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Optional

if TYPE_CHECKING:
    from .config import GroupConfig
    from .core import Message, Simulation

P_INIT = 0.75
BETA = 0.25
ALPHA = 0.98
TIME_UNIT = 30.0


# --- delivery predictability -------------------------------------------------

def direct_update(p: float, p_init: float = P_INIT) -> float:
    """Encounter update: ``P + (1 - P) * P_init``."""
    return p + (1.0 - p) * p_init


def aged(p: float, alpha: float, k: int) -> float:
    """Decay ``p`` by ``k`` whole time units."""
    return p * alpha ** k


def transitive_update(p_xz: float, p_xy: float, p_yz: float, beta: float = BETA) -> float:
    return p_xz + (1.0 - p_xz) * p_xy * p_yz * beta


@dataclass
class Row:
    probs: dict[int, float] = field(default_factory=dict)
    updated_at: float = 0.0


class PredictabilityTable:
    """Per-node matrix of delivery predictabilities.

    ``rows[owner]`` is the node's own row; rows for other subjects are copies
    learned through :func:`merge_matrices`, each stamped with the time the
    subject last updated it.  Only the own row is aged.
    """

    def __init__(self, owner: int, p_init: float = P_INIT, alpha: float = ALPHA,
                 beta: float = BETA, time_unit: float = TIME_UNIT):
        self.owner = owner
        self.p_init = p_init
        self.alpha = alpha
        self.beta = beta
        self.time_unit = time_unit
        self.rows: dict[int, Row] = {owner: Row()}
        self.aged_at = 0.0

    @property
    def own(self) -> dict[int, float]:
        return self.rows[self.owner].probs

    def get(self, dst: int) -> float:
        return self.own.get(dst, 0.0)

    def knowledge(self, subject: int, dst: int) -> float:
        """Best known P(subject, dst), 0 when no row has been learned."""
        row = self.rows.get(subject)
        if row is None:
            return 0.0
        return row.probs.get(dst, 0.0)

    def age(self, now: float) -> None:
        k = math.floor((now - self.aged_at) / self.time_unit)
        if k <= 0:
            return
        factor = self.alpha ** k
        own = self.own
        for dst in own:
            own[dst] *= factor
        self.aged_at += k * self.time_unit

    def update_direct(self, peer: int, now: float) -> None:
        self.own[peer] = direct_update(self.own.get(peer, 0.0), self.p_init)
        self.rows[self.owner].updated_at = now

    def update_transitive(self, peer: int, peer_row: dict[int, float]) -> None:
        own = self.own
        p_xy = own.get(peer, 0.0)
        if p_xy == 0.0:
            return
        for z, p_yz in peer_row.items():
            if z == self.owner or z == peer:
                continue
            own[z] = transitive_update(own.get(z, 0.0), p_xy, p_yz, self.beta)

    def snapshot(self) -> dict[int, float]:
        return dict(self.own)


def merge_matrices(table: PredictabilityTable, peer: PredictabilityTable) -> None:
    """Adopt every peer row that is strictly fresher than the local copy.

    The local own row is never replaced and equal stamps keep the local row.
    """
    for subject, row in peer.rows.items():
        if subject == table.owner:
            continue
        mine = table.rows.get(subject)
        if mine is None or row.updated_at > mine.updated_at:
            table.rows[subject] = Row(dict(row.probs), row.updated_at)


# --- buffers and node state ----------------------------------------------------

@dataclass
class BufferEntry:
    msg: "Message"
    received_at: float
    own: bool = False
    copies_left: Optional[int] = None
    wait_until: float = 0.0


class Buffer:
    """Bounded message store, insertion ordered (oldest received first)."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.used = 0
        self.entries: OrderedDict[int, BufferEntry] = OrderedDict()

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def get(self, msg_id: int) -> Optional[BufferEntry]:
        return self.entries.get(msg_id)

    def ids(self) -> set[int]:
        return set(self.entries)

    def add(self, entry: BufferEntry) -> None:
        self.entries[entry.msg.id] = entry
        self.used += entry.msg.size

    def remove(self, msg_id: int) -> BufferEntry:
        entry = self.entries.pop(msg_id)
        self.used -= entry.msg.size
        return entry

    def eviction_order(self) -> list[int]:
        relayed = [e.msg.id for e in self.entries.values() if not e.own]
        own = [e.msg.id for e in self.entries.values() if e.own]
        return relayed + own


@dataclass
class NodeState:
    id: int
    group: "GroupConfig"
    buffer: Buffer
    radios: tuple[str, ...] = ()
    generates: bool = True
    table: Optional[PredictabilityTable] = None
    recently_seen: dict[int, float] = field(default_factory=dict)
    delivered: set[int] = field(default_factory=set)
    neighbors: dict[int, object] = field(default_factory=dict)

    def has(self, msg_id: int) -> bool:
        return msg_id in self.buffer or msg_id in self.delivered


def buffer_admit(node: NodeState, entry: BufferEntry) -> tuple[bool, list[BufferEntry]]:
    """Store ``entry`` at ``node``, evicting oldest copies if needed.

    Returns ``(admitted, evicted)``.  Duplicates are rejected without side
    effects; a message larger than the whole buffer is rejected and the
    caller counts it as dropped.  Relayed copies are evicted before the
    node's own messages, each class oldest first.
    """
    buf = node.buffer
    msg = entry.msg
    if msg.id in buf:
        return False, []
    if msg.size > buf.capacity:
        return False, []
    evicted = []
    if buf.used + msg.size > buf.capacity:
        for victim in buf.eviction_order():
            evicted.append(buf.remove(victim))
            if buf.used + msg.size <= buf.capacity:
                break
    buf.add(entry)
    return True, evicted


# --- decisions -------------------------------------------------------------

class ForwardDecision(enum.Enum):
    DELIVER = "deliver"
    FORWARD = "forward"
    HOLD = "hold"
    DISCARD = "discard"
    BROADCAST = "broadcast"


def may_relay(msg: "Message", peer: int) -> bool:
    """Hop budget check: an exhausted copy only moves to its destination."""
    if peer == msg.dst:
        return True
    return msg.hops_remaining is None or msg.hops_remaining > 0


def prophet_decide(msg: "Message", node: NodeState, peer: NodeState) -> ForwardDecision:
    if peer.id == msg.dst:
        return ForwardDecision.DELIVER
    if peer.table.get(msg.dst) > node.table.get(msg.dst):
        return ForwardDecision.FORWARD
    return ForwardDecision.HOLD


def knows(p: float, floor: float = 0.0) -> bool:
    """Whether a predictability counts as context about the destination.

    Aging is multiplicative, so a predictability never returns to exactly
    zero once any meeting has been recorded; ``floor`` lets values too weak
    to forward on count as no knowledge.
    """
    return p > 0.0 and p >= floor


def integrated_decide(entry: BufferEntry, node: NodeState, peer: NodeState,
                      neighbors: Iterable[int], now: float, threshold: float,
                      knowledge_floor: Optional[float] = None) -> ForwardDecision:
    """Forwarding rule of the integrated router for one buffered copy.

    ``neighbors`` are the ids currently in contact with ``node``; their
    knowledge of the destination is read from ``node``'s merged matrix.  A
    neighbour knows the destination when its predictability is non-zero and
    at least ``knowledge_floor`` (default: the forwarding threshold).
    """
    floor = threshold if knowledge_floor is None else knowledge_floor
    msg = entry.msg
    if peer.id == msg.dst:
        return ForwardDecision.DELIVER
    budget_ok = entry.copies_left is None or entry.copies_left > 0
    if not budget_ok:
        return ForwardDecision.HOLD
    p_self = node.table.get(msg.dst)
    p_peer = peer.table.get(msg.dst)
    if p_peer > p_self and p_peer >= threshold:
        return ForwardDecision.FORWARD
    if now >= entry.wait_until and not any(
            knows(node.table.knowledge(n, msg.dst), floor) for n in neighbors):
        return ForwardDecision.BROADCAST
    return ForwardDecision.HOLD


def epidemic_exchange(a: NodeState, b: NodeState, now: float,
                      window: float) -> Optional[tuple[list[int], list[int]]]:
    """Summary-vector exchange between two nodes that just met.

    Returns ``(a_requests, b_requests)`` -- the ids each side asks the other
    for, in the holder's buffer order -- or ``None`` when the pair met within
    ``window`` seconds and the exchange is suppressed.  Updates the
    recently-seen caches of both nodes.
    """
    last = a.recently_seen.get(b.id)
    if last is not None and now - last < window:
        return None
    a.recently_seen[b.id] = now
    b.recently_seen[a.id] = now
    a_req = [e.msg.id for e in b.buffer if not a.has(e.msg.id) and may_relay(e.msg, a.id)]
    b_req = [e.msg.id for e in a.buffer if not b.has(e.msg.id) and may_relay(e.msg, b.id)]
    return a_req, b_req


def _delivery_first(ids: list[int], node: NodeState, peer: int) -> list[int]:
    direct = [i for i in ids if node.buffer.get(i).msg.dst == peer]
    return direct + [i for i in ids if node.buffer.get(i).msg.dst != peer]


# --- strategies -------------------------------------------------------------

class Router:
    """Base strategy; subclasses override :meth:`select`."""

    name = "base"
    uses_table = False

    def __init__(self, seen_window: float = 300.0):
        self.seen_window = seen_window

    def make_table(self, owner: int) -> Optional[PredictabilityTable]:
        return None

    def new_entry(self, msg: "Message", now: float, own: bool) -> BufferEntry:
        return BufferEntry(msg, now, own)

    def encounter(self, a: NodeState, b: NodeState, now: float) -> None:
        """Context bookkeeping run on every link-up."""

    def on_contact(self, sim: "Simulation", a: NodeState, b: NodeState, now: float) -> None:
        self.encounter(a, b, now)
        requests = epidemic_exchange(a, b, now, self.seen_window)
        if requests is None:
            return
        a_req, b_req = requests
        self.select(sim, b, a, _delivery_first(a_req, b, a.id), now)
        self.select(sim, a, b, _delivery_first(b_req, a, b.id), now)

    def on_new_message(self, sim: "Simulation", node: NodeState, msg_id: int, now: float) -> None:
        for peer_id in list(node.neighbors):
            peer = sim.nodes[peer_id]
            if msg_id not in node.buffer:
                return
            if not peer.has(msg_id) and may_relay(node.buffer.get(msg_id).msg, peer_id):
                self.select(sim, node, peer, [msg_id], now)

    def select(self, sim: "Simulation", node: NodeState, peer: NodeState,
               candidates: list[int], now: float) -> None:
        raise NotImplementedError

    def accept(self, node: NodeState, msg: "Message", mode: str) -> bool:
        return True

    def on_sent(self, node: NodeState, msg_id: int, mode: str) -> None:
        """Bookkeeping when a transfer from ``node`` is queued."""

    def on_aborted(self, node: NodeState, msg_id: int, mode: str) -> None:
        """Bookkeeping when a queued or running transfer is abandoned."""


class EpidemicRouter(Router):
    name = "epidemic"

    def select(self, sim, node, peer, candidates, now):
        for msg_id in candidates:
            sim.enqueue(node.id, peer.id, msg_id, "flood")


class ProphetRouter(Router):
    name = "prophet"
    uses_table = True

    def __init__(self, seen_window: float = 300.0, p_init: float = P_INIT,
                 alpha: float = ALPHA, beta: float = BETA, time_unit: float = TIME_UNIT,
                 learn: bool = True):
        super().__init__(seen_window)
        self.p_init = p_init
        self.alpha = alpha
        self.beta = beta
        self.time_unit = time_unit
        self.learn = learn

    def make_table(self, owner):
        return PredictabilityTable(owner, self.p_init, self.alpha, self.beta, self.time_unit)

    @staticmethod
    def order(node, peer, candidates):
        # deliverable copies first, then highest peer predictability first
        def key(msg_id):
            dst = node.buffer.get(msg_id).msg.dst
            return (dst != peer.id, -peer.table.get(dst))
        return sorted(candidates, key=key)

    def encounter(self, a, b, now):
        if not self.learn:
            return
        a.table.age(now)
        b.table.age(now)
        a.table.update_direct(b.id, now)
        b.table.update_direct(a.id, now)
        a_row, b_row = a.table.snapshot(), b.table.snapshot()
        a.table.update_transitive(b.id, b_row)
        b.table.update_transitive(a.id, a_row)

    def select(self, sim, node, peer, candidates, now):
        node.table.age(now)
        peer.table.age(now)
        for msg_id in self.order(node, peer, candidates):
            decision = prophet_decide(node.buffer.get(msg_id).msg, node, peer)
            if decision is ForwardDecision.DELIVER:
                sim.enqueue(node.id, peer.id, msg_id, "deliver")
            elif decision is ForwardDecision.FORWARD:
                sim.enqueue(node.id, peer.id, msg_id, "forward")


class IntegratedRouter(ProphetRouter):
    """Threshold forwarding with a timed flooding fallback and copy caps."""

    name = "integrated"

    def __init__(self, seen_window: float = 300.0, p_init: float = P_INIT,
                 alpha: float = ALPHA, beta: float = BETA, time_unit: float = TIME_UNIT,
                 threshold: float = 0.1, wait_time: float = 1800.0,
                 max_copies: Optional[int] = 8, learn: bool = True,
                 knowledge: str = "threshold"):
        super().__init__(seen_window, p_init, alpha, beta, time_unit, learn)
        self.threshold = threshold
        self.wait_time = wait_time
        self.max_copies = max_copies
        # "threshold": weak predictabilities do not block the fallback;
        # "nonzero": any recorded predictability does
        self.knowledge_floor = threshold if knowledge == "threshold" else 0.0

    def new_entry(self, msg, now, own):
        return BufferEntry(msg, now, own, self.max_copies, now + self.wait_time)

    def encounter(self, a, b, now):
        super().encounter(a, b, now)
        if self.learn:
            merge_matrices(a.table, b.table)
            merge_matrices(b.table, a.table)

    def select(self, sim, node, peer, candidates, now):
        node.table.age(now)
        peer.table.age(now)
        for msg_id in self.order(node, peer, candidates):
            entry = node.buffer.get(msg_id)
            if entry is None:
                continue
            decision = integrated_decide(entry, node, peer, node.neighbors, now,
                                         self.threshold, self.knowledge_floor)
            if decision is ForwardDecision.DELIVER:
                sim.enqueue(node.id, peer.id, msg_id, "deliver")
            elif decision is ForwardDecision.FORWARD:
                sim.enqueue(node.id, peer.id, msg_id, "forward")
            elif decision is ForwardDecision.BROADCAST:
                for n in sorted(node.neighbors):
                    if entry.copies_left is not None and entry.copies_left <= 0:
                        break
                    other = sim.nodes[n]
                    if not other.has(msg_id) and may_relay(entry.msg, n):
                        sim.enqueue(node.id, n, msg_id, "broadcast")

    def accept(self, node, msg, mode):
        if mode != "forward" or node.id == msg.dst:
            return True
        return node.table.get(msg.dst) >= self.threshold

    def on_sent(self, node, msg_id, mode):
        entry = node.buffer.get(msg_id)
        if entry is not None and entry.copies_left is not None and mode != "deliver":
            entry.copies_left -= 1

    def on_aborted(self, node, msg_id, mode):
        entry = node.buffer.get(msg_id)
        if entry is not None and entry.copies_left is not None and mode != "deliver":
            entry.copies_left += 1


STRATEGIES = {
    "epidemic": EpidemicRouter,
    "prophet": ProphetRouter,
    "integrated": IntegratedRouter,
}


def relayed_copy(msg: "Message") -> "Message":
    hops_remaining = None if msg.hops_remaining is None else msg.hops_remaining - 1
    return replace(msg, hops=msg.hops + 1, hops_remaining=hops_remaining)

import pytest

from oppnet.routing import (BufferEntry, EpidemicRouter, ForwardDecision, IntegratedRouter, ProphetRouter,
                            buffer_admit, epidemic_exchange, integrated_decide, may_relay,
                            prophet_decide, relayed_copy)

from helpers import MB, StubSim, message, node, put


# --- summary vectors ------------------------------------------------------------

def test_exchange_is_set_difference():
    a, b = node(0), node(1)
    m1, m2, m3 = message(1), message(2), message(3)
    put(a, m1), put(a, m2)
    put(b, message(2)), put(b, m3)
    a_req, b_req = epidemic_exchange(a, b, now=0.0, window=300.0)
    assert a_req == [3]
    assert b_req == [1]


def test_exhausted_hop_budget_only_reaches_destination():
    a, b = node(0), node(1)
    put(a, message(1, dst=5, hops_remaining=0))
    put(a, message(2, dst=1, hops_remaining=0))
    _, b_req = epidemic_exchange(a, b, 0.0, 300.0)
    assert b_req == [2]
    assert not may_relay(message(1, dst=5, hops_remaining=0), 1)
    assert may_relay(message(1, dst=1, hops_remaining=0), 1)
    assert may_relay(message(1, dst=5, hops_remaining=None), 1)


def test_relayed_copy_spends_one_hop():
    m = relayed_copy(message(1, hops_remaining=2))
    assert (m.hops, m.hops_remaining) == (1, 1)
    assert relayed_copy(message(1)).hops_remaining is None


def test_recently_seen_pair_skips_exchange():
    a, b = node(0), node(1)
    put(a, message(1))
    assert epidemic_exchange(a, b, 100.0, 300.0) is not None
    assert epidemic_exchange(a, b, 110.0, 300.0) is None
    assert epidemic_exchange(b, a, 399.0, 300.0) is None
    assert epidemic_exchange(b, a, 400.0, 300.0) == ([1], [])


def test_delivered_messages_are_not_requested_again():
    a, b = node(0), node(1)
    put(a, message(1, dst=1))
    b.delivered.add(1)
    assert epidemic_exchange(a, b, 0.0, 300.0) == ([], [])


# --- decisions -----------------------------------------------------------------

def tables(p_self, p_peer, dst=9):
    a, b = node(0), node(1)
    if p_self:
        a.table.own[dst] = p_self
    if p_peer:
        b.table.own[dst] = p_peer
    return a, b


@pytest.mark.parametrize("p_self,p_peer,expected", [
    (0.2, 0.5, ForwardDecision.FORWARD),
    (0.5, 0.5, ForwardDecision.HOLD),
    (0.6, 0.5, ForwardDecision.HOLD),
    (0.0, 0.0, ForwardDecision.HOLD),
])
def test_prophet_decide(p_self, p_peer, expected):
    a, b = tables(p_self, p_peer)
    assert prophet_decide(message(1, dst=9), a, b) is expected


def test_prophet_decide_delivers_to_destination():
    a, b = tables(0.9, 0.0)
    assert prophet_decide(message(1, dst=1), a, b) is ForwardDecision.DELIVER


def test_integrated_forward_spends_budget():
    router = IntegratedRouter()
    a, b = tables(0.2, 0.4)
    entry = put(a, message(1), copies=3, wait_until=1e9)
    a.neighbors[1] = object()
    sim = StubSim(router, [a, b])
    router.select(sim, a, b, [1], now=0.0)
    assert sim.sent == [(0, 1, 1, "forward")]
    assert entry.copies_left == 2


def test_integrated_forward_needs_threshold():
    a, b = tables(0.01, 0.05)
    entry = put(a, message(1), copies=3, wait_until=1e9)
    assert integrated_decide(entry, a, b, [1], 0.0, 0.1) is ForwardDecision.HOLD
    assert integrated_decide(entry, a, b, [1], 0.0, 0.0) is ForwardDecision.FORWARD


def test_integrated_broadcasts_to_every_neighbour():
    router = IntegratedRouter()
    a, b, c = node(0), node(1), node(2)
    entry = put(a, message(1, dst=9), copies=2, wait_until=100.0)
    a.neighbors = {1: None, 2: None}
    sim = StubSim(router, [a, b, c])
    assert integrated_decide(entry, a, b, a.neighbors, 99.0, 0.1) is ForwardDecision.HOLD
    router.select(sim, a, b, [1], now=100.0)
    assert sim.sent == [(0, 1, 1, "broadcast"), (0, 2, 1, "broadcast")]
    assert entry.copies_left == 0


def test_integrated_no_broadcast_when_a_neighbour_knows():
    a, b, c = node(0), node(1), node(2)
    a.table.rows[2] = type(a.table.rows[0])({9: 0.3}, 5.0)
    entry = put(a, message(1, dst=9), copies=2, wait_until=0.0)
    decision = integrated_decide(entry, a, b, [1, 2], 100.0, 0.1)
    assert decision is ForwardDecision.HOLD


def test_integrated_exhausted_budget_only_delivers():
    a, b = tables(0.0, 0.9)
    entry = put(a, message(1, dst=9), copies=0)
    assert integrated_decide(entry, a, b, [1], 1e6, 0.1) is ForwardDecision.HOLD
    entry = put(a, message(2, dst=1), copies=0)
    assert integrated_decide(entry, a, b, [1], 1e6, 0.1) is ForwardDecision.DELIVER


def test_integrated_abort_refunds_budget():
    router = IntegratedRouter()
    a = node(0)
    entry = put(a, message(1), copies=1)
    router.on_sent(a, 1, "broadcast")
    assert entry.copies_left == 0
    router.on_aborted(a, 1, "broadcast")
    assert entry.copies_left == 1
    router.on_sent(a, 1, "deliver")
    assert entry.copies_left == 1


def test_integrated_receiver_threshold_applies_to_forwarded_copies():
    router = IntegratedRouter(threshold=0.1)
    r = node(3)
    m = message(1, dst=9)
    assert not router.accept(r, m, "forward")
    assert router.accept(r, m, "broadcast")
    r.table.own[9] = 0.1
    assert router.accept(r, m, "forward")
    assert router.accept(node(9), m, "forward")


def test_prophet_sends_deliverable_then_best_peer_first():
    router = ProphetRouter()
    a, b = node(0), node(1)
    for mid, dst in ((1, 7), (2, 8), (3, 1)):
        put(a, message(mid, dst=dst))
    b.table.own.update({7: 0.3, 8: 0.6})
    sim = StubSim(router, [a, b])
    router.select(sim, a, b, [1, 2, 3], now=0.0)
    assert sim.sent == [(0, 1, 3, "deliver"), (0, 1, 2, "forward"), (0, 1, 1, "forward")]


def test_epidemic_floods_candidates():
    router = EpidemicRouter()
    a, b = node(0, table=False), node(1, table=False)
    sim = StubSim(router, [a, b])
    router.select(sim, a, b, [4, 5], 0.0)
    assert [s[2:] for s in sim.sent] == [(4, "flood"), (5, "flood")]


# --- buffer ----------------------------------------------------------------------

def test_admit_evicts_oldest_until_room():
    n = node(0, capacity=20 * MB)
    for i in range(19):
        put(n, message(i, size=MB), at=float(i))
    assert n.buffer.used == 19 * MB
    ok, evicted = buffer_admit(n, BufferEntry(message(99, size=2 * MB), 50.0))
    assert ok
    assert [e.msg.id for e in evicted] == [0]
    assert n.buffer.used == 20 * MB
    assert 99 in n.buffer and 0 not in n.buffer


def test_admit_evicts_relayed_before_own():
    n = node(0, capacity=3 * MB)
    put(n, message(1, size=MB), at=0.0, own=True)
    put(n, message(2, size=MB), at=1.0)
    put(n, message(3, size=MB), at=2.0)
    ok, evicted = buffer_admit(n, BufferEntry(message(4, size=2 * MB), 3.0))
    assert ok
    assert [e.msg.id for e in evicted] == [2, 3]
    assert list(n.buffer.entries) == [1, 4]


def test_admit_rejects_duplicate_without_side_effects():
    n = node(0)
    put(n, message(1))
    before = (n.buffer.used, list(n.buffer.entries))
    assert buffer_admit(n, BufferEntry(message(1), 5.0)) == (False, [])
    assert (n.buffer.used, list(n.buffer.entries)) == before


def test_admit_rejects_oversize():
    n = node(0, capacity=20 * MB)
    put(n, message(1))
    assert buffer_admit(n, BufferEntry(message(2, size=25 * MB), 0.0)) == (False, [])
    assert 1 in n.buffer


def test_weak_neighbour_knowledge_and_the_knowledge_floor():
    a, b = node(0), node(1)
    a.table.rows[1] = type(a.table.rows[0])({9: 0.05}, 5.0)
    entry = put(a, message(1, dst=9), copies=2, wait_until=0.0)
    # a trace left by aging is below the forwarding threshold: no knowledge
    assert integrated_decide(entry, a, b, [1], 100.0, 0.1) is ForwardDecision.BROADCAST
    # literal rule: any non-zero value counts as knowledge
    assert integrated_decide(entry, a, b, [1], 100.0, 0.1, 0.0) is ForwardDecision.HOLD
    assert IntegratedRouter(knowledge="nonzero").knowledge_floor == 0.0
    assert IntegratedRouter(threshold=0.2).knowledge_floor == 0.2

"""Small builders shared by the unit tests."""

from oppnet.config import GroupConfig
from oppnet.core import Message
from oppnet.routing import Buffer, BufferEntry, NodeState, PredictabilityTable

MB = 1024 * 1024
GROUP = GroupConfig("g", 1, "pedestrian", (1.0, 1.0), (0.0, 0.0))


def node(nid, capacity=20 * MB, table=True):
    n = NodeState(nid, GROUP, Buffer(capacity), ("bluetooth",))
    if table:
        n.table = PredictabilityTable(nid)
    return n


def message(mid, src=0, dst=9, size=1000, created=0.0, ttl=3600.0, hops_remaining=None):
    return Message(mid, src, dst, size, created, ttl, hops_remaining)


def put(n, msg, at=0.0, own=False, copies=None, wait_until=0.0):
    entry = BufferEntry(msg, at, own, copies, wait_until)
    n.buffer.add(entry)
    return entry


class StubSim:
    """Records enqueue calls the way the simulator would accept them."""

    def __init__(self, router, nodes):
        self.router = router
        self.nodes = {n.id: n for n in nodes}
        self.sent = []

    def enqueue(self, src, dst, msg_id, mode):
        self.sent.append((src, dst, msg_id, mode))
        self.router.on_sent(self.nodes[src], msg_id, mode)
        return True

"""Abstract a Network into an immutable knowledge-graph snapshot."""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from kgsdn.netsim.model import Drop, Flood, FlowEntry, Network, Output, flow_id
from kgsdn.ontology import EX, GEO, NET, RDF_TYPE, integer
from kgsdn.rdf import Graph, Iri, Literal

log = logging.getLogger(__name__)

DEFAULT_INTERVAL = 5.0

_NODE_CLASS = {
    "Switch": NET.Switch,
    "Host": NET.Host,
    "AccessPoint": NET.AccessPoint,
    "Station": NET.Station,
}


@dataclass(frozen=True)
class Snapshot:
    graph: Graph
    taken_at: float
    triple_count: int
    network_version: int = -1


def node_iri(node_id: str) -> Iri:
    return EX[node_id]


def point_iri(node_id: str) -> Iri:
    return EX[f"point-{node_id}"]


def flow_iri(switch_id: str, entry: FlowEntry) -> Iri:
    return EX[flow_id(switch_id, entry)]


def action_iri(switch_id: str, entry: FlowEntry) -> Iri:
    return EX[f"{flow_id(switch_id, entry)}-action"]


def local_name(iri: Iri) -> str:
    """Inverse of the ``ex:`` minting used for element ids."""
    base = EX.base
    if not iri.value.startswith(base):
        raise ValueError(f"{iri.value} is not in the ex: namespace")
    return iri.value[len(base):]


def _flow_triples(g: Graph, net: Network, switch_id: str, entry: FlowEntry) -> None:
    add = g.add
    flow = flow_iri(switch_id, entry)
    add(node_iri(switch_id), NET.hasFlow, flow)
    add(flow, RDF_TYPE, NET.Flow)
    add(flow, NET.priority, integer(entry.priority))
    add(flow, NET.cookie, integer(entry.cookie))
    add(flow, NET.tableId, integer(entry.table_id))
    add(flow, NET.flags, integer(entry.flags))
    add(flow, NET.idleTimeout, integer(entry.idle_timeout))
    add(flow, NET.hardTimeout, integer(entry.hard_timeout))
    m = entry.match
    if m.in_port is not None:
        add(flow, NET.inPort, EX[net.port_by_number(switch_id, m.in_port).id])
    if m.dst_mac is not None:
        add(flow, NET.matchDst, Literal(m.dst_mac))
    if m.ethertype is not None:
        add(flow, NET.matchEthType, Literal(m.ethertype.value))
    action = action_iri(switch_id, entry)
    add(flow, NET.hasFlowAction, action)
    if isinstance(entry.action, Output):
        add(action, RDF_TYPE, NET.OutputAction)
        add(action, NET.toPort, EX[net.port_by_number(switch_id, entry.action.port).id])
    elif isinstance(entry.action, Drop):
        add(action, RDF_TYPE, NET.DropAction)
    elif isinstance(entry.action, Flood):
        add(action, RDF_TYPE, NET.FloodAction)


def build_graph(net: Network) -> Graph:
    g = Graph()
    add = g.add
    for node in net.nodes.values():
        subject = node_iri(node.id)
        point = point_iri(node.id)
        add(subject, RDF_TYPE, _NODE_CLASS[node.kind.value])
        add(subject, GEO.location, point)
        add(point, GEO.long, Literal(node.location[0]))
        add(point, GEO.lat, Literal(node.location[1]))
        if node.mac is not None:
            add(subject, NET.hasMAC, Literal(node.mac))
        if node.dpid is not None:
            add(subject, NET.hasID, Literal(node.dpid))
        for pid in node.ports:
            port = EX[pid]
            add(subject, NET.hasPort, port)
            add(port, RDF_TYPE, NET.Interface)
            add(port, NET.portNumber, integer(net.ports[pid].number))
    for link in net.links.values():
        add(EX[link.id], NET["from"], EX[link.a])
        add(EX[link.id], NET.to, EX[link.b])
    for switch_id, table in net.tables.items():
        for entry in table.entries:
            _flow_triples(g, net, switch_id, entry)
    return g


def snapshot(net: Network) -> Snapshot:
    """Full rebuild of the knowledge graph from the current network state."""
    g = build_graph(net).freeze()
    return Snapshot(graph=g, taken_at=time.monotonic(), triple_count=len(g),
                    network_version=net.version)


class PeriodicSnapshotter:
    """Handle returned by :func:`run_periodic`."""

    def __init__(self, net, interval: float,
                 publish: Callable[[Snapshot], None],
                 lock: Optional[threading.Lock] = None):
        if interval <= 0:
            raise ValueError("interval must be positive")
        self.net = net
        self.interval = interval
        self._publish = publish
        self._lock = lock
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="kg-refresh", daemon=True)
        self.latest: Optional[Snapshot] = None
        self.published = 0

    def start(self) -> "PeriodicSnapshotter":
        self._thread.start()
        return self

    def _take(self) -> Snapshot:
        net = self.net() if callable(self.net) else self.net
        return snapshot(net)

    def _run(self):
        while not self._stop.wait(self.interval):
            if self._lock is not None:
                with self._lock:
                    snap = self._take()
            else:
                snap = self._take()
            if self._stop.is_set():
                break
            # a single reference assignment: readers see old or new, never partial
            self.latest = snap
            self.published += 1
            try:
                self._publish(snap)
            except Exception:
                log.exception("snapshot sink failed")

    def stop(self, timeout: Optional[float] = None) -> None:
        self._stop.set()
        if self._thread.is_alive() and threading.current_thread() is not self._thread:
            self._thread.join(timeout)

    @property
    def running(self) -> bool:
        return self._thread.is_alive()


def run_periodic(net, interval: float = DEFAULT_INTERVAL,
                 publish: Callable[[Snapshot], None] = lambda snap: None,
                 lock: Optional[threading.Lock] = None) -> PeriodicSnapshotter:
    """Snapshot ``net`` every ``interval`` seconds until ``stop()``.

    The first snapshot is taken one interval after the call. ``net`` may also
    be a zero-argument callable returning the network to snapshot, e.g. one
    that reloads a session file. Pass ``lock`` if other threads mutate the
    network; it is held while a snapshot is built.
    """
    return PeriodicSnapshotter(net, interval, publish, lock).start()

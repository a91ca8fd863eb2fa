"""Technology-independent management operations.

Every operation reads topology and flow state through SPARQL queries over an
immutable snapshot; only flow installation and removal touch the Network.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from kgsdn.errors import (DisconnectedTopology, InvalidRequest, MissingToPort,
                          NoPath, NoSuchHost, NoSuchPort, NoSuchSwitch)
from kgsdn.kg import Snapshot, local_name, node_iri, snapshot
from kgsdn.netsim.model import (Drop, EtherType, Flood, FlowEntry, Match,
                                Network, Output)
from kgsdn.ontology import NET
from kgsdn.rdf import Iri
from kgsdn.sparql import evaluate, parse_query

FORWARD_PRIORITY = 1
FIREWALL_PRIORITY = 10
ACTION_TYPES = ("output", "drop", "flood")
_MAC = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")

_PREAMBLE = "PREFIX net: <http://purl.org/toco/>\n"

Q_KIND = parse_query(_PREAMBLE + "SELECT ?t WHERE { ?n a ?t }")
Q_MAC = parse_query(_PREAMBLE + "SELECT ?mac WHERE { ?n net:hasMAC ?mac }")
Q_OF_CLASS = parse_query(_PREAMBLE + "SELECT ?n WHERE { ?n a ?cls }")
Q_PORTS = parse_query(_PREAMBLE + """
SELECT ?num WHERE { ?n net:hasPort ?p . ?p net:portNumber ?num }""")
# Links are stored directionally; neighbours are the union of both readings.
Q_LINKED_FROM = parse_query(_PREAMBLE + """
SELECT ?m ?lp ?rp WHERE {
  ?n net:hasPort ?p . ?l net:from ?p . ?l net:to ?q . ?m net:hasPort ?q .
  ?p net:portNumber ?lp . ?q net:portNumber ?rp
}""")
Q_LINKED_TO = parse_query(_PREAMBLE + """
SELECT ?m ?lp ?rp WHERE {
  ?n net:hasPort ?p . ?l net:to ?p . ?l net:from ?q . ?m net:hasPort ?q .
  ?p net:portNumber ?lp . ?q net:portNumber ?rp
}""")
Q_FLOWS = parse_query(_PREAMBLE + """
SELECT ?f ?prio ?cookie ?table ?flags ?idle ?hard ?atype WHERE {
  ?sw net:hasFlow ?f .
  ?f net:priority ?prio . ?f net:cookie ?cookie . ?f net:tableId ?table .
  ?f net:flags ?flags . ?f net:idleTimeout ?idle . ?f net:hardTimeout ?hard .
  ?f net:hasFlowAction ?a . ?a a ?atype
}""")
Q_FLOW_IN_PORT = parse_query(_PREAMBLE + """
SELECT ?f ?num WHERE { ?sw net:hasFlow ?f . ?f net:inPort ?p . ?p net:portNumber ?num }""")
Q_FLOW_DST = parse_query(_PREAMBLE + """
SELECT ?f ?mac WHERE { ?sw net:hasFlow ?f . ?f net:matchDst ?mac }""")
Q_FLOW_ETH = parse_query(_PREAMBLE + """
SELECT ?f ?eth WHERE { ?sw net:hasFlow ?f . ?f net:matchEthType ?eth }""")
Q_FLOW_TO_PORT = parse_query(_PREAMBLE + """
SELECT ?f ?num WHERE {
  ?sw net:hasFlow ?f . ?f net:hasFlowAction ?a . ?a net:toPort ?p . ?p net:portNumber ?num
}""")

_SWITCH_CLASSES = {NET.Switch, NET.AccessPoint}
_HOST_CLASSES = {NET.Host, NET.Station}
_ACTION_NAMES = {NET.OutputAction: "output", NET.DropAction: "drop", NET.FloodAction: "flood"}


@dataclass(frozen=True)
class PathResult:
    hops: tuple[str, ...]
    ports: tuple[int, ...]

    @property
    def hop_count(self) -> int:
        return len(self.hops) - 1

    def __str__(self):
        return " ".join(self.hops)


@dataclass(frozen=True)
class FlowRecord:
    """A flow entry as read back from the knowledge graph."""
    seq: int
    cookie: int
    table_id: int
    priority: int
    flags: int
    idle_timeout: int
    hard_timeout: int
    in_port: Optional[int]
    dst_mac: Optional[str]
    ethertype: Optional[str]
    action: str
    to_port: Optional[int]

    @classmethod
    def from_entry(cls, entry: FlowEntry) -> "FlowRecord":
        a = entry.action
        return cls(
            seq=entry.seq, cookie=entry.cookie, table_id=entry.table_id,
            priority=entry.priority, flags=entry.flags,
            idle_timeout=entry.idle_timeout, hard_timeout=entry.hard_timeout,
            in_port=entry.match.in_port, dst_mac=entry.match.dst_mac,
            ethertype=entry.match.ethertype.value if entry.match.ethertype else None,
            action="output" if isinstance(a, Output) else "drop" if isinstance(a, Drop) else "flood",
            to_port=a.port if isinstance(a, Output) else None,
        )

    def render(self) -> str:
        fields = []
        if self.in_port is not None:
            fields.append(f"in_port={self.in_port}")
        if self.dst_mac is not None:
            fields.append(f"dl_dst={self.dst_mac}")
        if self.ethertype is not None:
            fields.append(f"eth_type={self.ethertype}")
        action = f"output:{self.to_port}" if self.action == "output" else self.action
        return (f"cookie={self.cookie}, table={self.table_id}, priority={self.priority}, "
                f"match={{{', '.join(fields)}}}, action={action}")


def render_flows(entries: Iterable[FlowEntry]) -> list[str]:
    """Render Network-side entries exactly as dump_all_flows renders KG-side ones."""
    return [FlowRecord.from_entry(e).render() for e in entries]


def _int(term) -> int:
    return int(term.lexical)


class TopologyView:
    """Read-only accessors over one snapshot, memoised per node.

    Valid for exactly as long as the snapshot it wraps, which never changes.
    """

    def __init__(self, snap: Snapshot):
        self.snapshot = snap
        self.graph = snap.graph
        self._kind: dict[str, Optional[Iri]] = {}
        self._neighbors: dict[str, list[tuple[str, int, int]]] = {}
        self._flows: dict[str, list[FlowRecord]] = {}
        self._macs: dict[str, str] = {}

    def _run(self, q, **initial):
        return evaluate(q, self.graph, initial)

    def kind(self, node_id: str) -> Optional[Iri]:
        if node_id not in self._kind:
            kinds = self._run(Q_KIND, n=node_iri(node_id)).column("t")
            found = [k for k in kinds if k in _SWITCH_CLASSES or k in _HOST_CLASSES]
            self._kind[node_id] = found[0] if found else None
        return self._kind[node_id]

    def is_switch(self, node_id: str) -> bool:
        return self.kind(node_id) in _SWITCH_CLASSES

    def is_host(self, node_id: str) -> bool:
        return self.kind(node_id) in _HOST_CLASSES

    def require_switch(self, node_id: str) -> str:
        if not self.is_switch(node_id):
            raise NoSuchSwitch(node_id)
        return node_id

    def require_host(self, node_id: str) -> str:
        if not self.is_host(node_id):
            raise NoSuchHost(node_id)
        return node_id

    def mac(self, host_id: str) -> str:
        if host_id not in self._macs:
            self.require_host(host_id)
            self._macs[host_id] = self._run(Q_MAC, n=node_iri(host_id)).column("mac")[0].lexical
        return self._macs[host_id]

    def _all_of(self, classes) -> list[str]:
        out = []
        for cls in sorted(classes, key=Iri.sort_key):
            out.extend(local_name(n) for n in self._run(Q_OF_CLASS, cls=cls).column("n"))
        return sorted(out, key=_natural)

    def hosts(self) -> list[str]:
        return self._all_of(_HOST_CLASSES)

    def switches(self) -> list[str]:
        return self._all_of(_SWITCH_CLASSES)

    def port_numbers(self, node_id: str) -> set[int]:
        return {_int(t) for t in self._run(Q_PORTS, n=node_iri(node_id)).column("num")}

    def neighbors(self, node_id: str) -> list[tuple[str, int, int]]:
        """(neighbour id, local port number, remote port number), sorted."""
        if node_id not in self._neighbors:
            out = []
            for q in (Q_LINKED_FROM, Q_LINKED_TO):
                for m, lp, rp in self._run(q, n=node_iri(node_id)):
                    out.append((local_name(m), _int(lp), _int(rp)))
            self._neighbors[node_id] = sorted(out)
        return self._neighbors[node_id]

    def flows(self, switch_id: str) -> list[FlowRecord]:
        """Flow entries of a switch in table order, read from the graph."""
        if switch_id in self._flows:
            return self._flows[switch_id]
        sw = node_iri(switch_id)
        extra = {}
        for q, key in ((Q_FLOW_IN_PORT, "in_port"), (Q_FLOW_DST, "dst_mac"),
                       (Q_FLOW_ETH, "ethertype"), (Q_FLOW_TO_PORT, "to_port")):
            for f, value in self._run(q, sw=sw):
                v = _int(value) if key in ("in_port", "to_port") else value.lexical
                extra.setdefault(f, {})[key] = v
        records = []
        for f, prio, cookie, table, flags, idle, hard, atype in self._run(Q_FLOWS, sw=sw):
            if atype not in _ACTION_NAMES:
                continue
            fields = extra.get(f, {})
            records.append(FlowRecord(
                seq=int(local_name(f).rsplit("-", 1)[1]),
                cookie=_int(cookie), table_id=_int(table), priority=_int(prio),
                flags=_int(flags), idle_timeout=_int(idle), hard_timeout=_int(hard),
                in_port=fields.get("in_port"), dst_mac=fields.get("dst_mac"),
                ethertype=fields.get("ethertype"), action=_ACTION_NAMES[atype],
                to_port=fields.get("to_port"),
            ))
        records.sort(key=lambda r: (-r.priority, r.seq))
        self._flows[switch_id] = records
        return records

    # --- shortest paths -------------------------------------------------

    def distances(self, target: str, sources: Iterable[str] = ()) -> dict[str, int]:
        """Hop distances to ``target``; hosts other than the target do not relay.

        Stops once every node in ``sources`` has been labelled; at that point
        every node closer than the farthest source is labelled too, which is
        all a path walk needs.
        """
        dist = {target: 0}
        remaining = set(sources) - {target}
        frontier = [target]
        exhaustive = not remaining
        while frontier and (remaining or exhaustive):
            nxt = []
            for u in frontier:
                if u != target and not self.is_switch(u):
                    continue
                for v, _, _ in self.neighbors(u):
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
                        remaining.discard(v)
            frontier = nxt
        return dist

    def walk(self, src: str, dst: str, dist: dict[str, int]) -> PathResult:
        if src not in dist:
            raise NoPath(f"{src} -> {dst}")
        hops = [src]
        ports = []
        cur = src
        while cur != dst:
            step = min(
                ((v, lp) for v, lp, _ in self.neighbors(cur)
                 if dist.get(v) == dist[cur] - 1 and (v == dst or self.is_switch(v))),
                default=None,
            )
            if step is None:
                raise NoPath(f"{src} -> {dst}")
            ports.append(step[1])
            hops.append(step[0])
            cur = step[0]
        return PathResult(tuple(hops), tuple(ports))

    def path(self, src: str, dst: str) -> PathResult:
        return self.walk(src, dst, self.distances(dst, [src]))


def _natural(node_id: str):
    m = re.match(r"^(\D*)(\d*)(.*)$", node_id)
    head, num, tail = m.groups()
    return (head, int(num) if num else -1, tail)


def _split(items) -> list[str]:
    if items is None:
        return []
    if isinstance(items, str):
        items = items.split(",")
    return [x.strip() for x in items if x.strip()]


class ManagementAPI:
    """The seven management operations over one Network."""

    def __init__(self, net: Network):
        self.net = net
        self._snap: Optional[Snapshot] = None
        self._view: Optional[TopologyView] = None

    # --- snapshot handling ----------------------------------------------

    def refresh(self) -> Snapshot:
        """Take a fresh snapshot now (used to pre-build before timing)."""
        self._snap = snapshot(self.net)
        self._view = TopologyView(self._snap)
        return self._snap

    @property
    def snapshot(self) -> Snapshot:
        return self.view().snapshot

    def view(self) -> TopologyView:
        if self._snap is None or self._snap.network_version != self.net.version:
            self.refresh()
        return self._view

    # --- installation helpers -------------------------------------------

    def _install(self, switch_id: str, entry: FlowEntry) -> FlowEntry:
        return self.net.install_flow(switch_id, entry)

    @staticmethod
    def _has_arp_flood(records: Iterable[FlowRecord]) -> bool:
        return any(r.ethertype == EtherType.ARP.value and r.action == "flood"
                   and r.in_port is None and r.dst_mac is None for r in records)

    # --- operations -----------------------------------------------------

    def add_flow(self, switch_id: str, dst: Optional[str] = None,
                 in_port: Optional[int] = None, action_type: str = "output",
                 to_port: Optional[int] = None) -> FlowEntry:
        view = self.view()
        view.require_switch(switch_id)
        action_type = action_type.lower()
        if action_type not in ACTION_TYPES:
            raise InvalidRequest(f"action_type must be one of {', '.join(ACTION_TYPES)}")
        if action_type == "output" and to_port is None:
            raise MissingToPort(f"output action on {switch_id} needs to_port")
        if action_type != "output" and to_port is not None:
            raise InvalidRequest(f"to_port only applies to output actions")
        if dst is not None and not _MAC.match(dst.lower()):
            raise InvalidRequest(f"bad MAC address {dst!r}")
        ports = view.port_numbers(switch_id)
        for number in (in_port, to_port):
            if number is not None and number not in ports:
                raise NoSuchPort(f"{switch_id} has no port {number}")
        action = {"output": lambda: Output(to_port), "drop": Drop, "flood": Flood}[action_type]()
        entry = FlowEntry(action=action,
                          match=Match(in_port=in_port, dst_mac=dst.lower() if dst else None))
        return self._install(switch_id, entry)

    def delete_flow(self, in_hosts: Sequence[str], out_hosts: Sequence[str]) -> int:
        """Remove the entries that forward traffic from ``in_hosts`` to ``out_hosts``.

        For each (src, dst) pair the shortest path is replayed and every entry
        on a switch along it whose destination match is dst is removed.
        """
        view = self.view()
        in_hosts, out_hosts = _split(in_hosts), _split(out_hosts)
        for h in in_hosts + out_hosts:
            view.require_host(h)
        doomed: dict[str, set[str]] = {}
        for dst in out_hosts:
            sources = [s for s in in_hosts if s != dst]
            if not sources:
                continue
            dist = view.distances(dst, sources)
            mac = view.mac(dst)
            for src in sources:
                if src not in dist:
                    continue
                for hop in view.walk(src, dst, dist).hops[1:-1]:
                    doomed.setdefault(hop, set()).add(mac)
        removed = 0
        for sw in sorted(doomed, key=_natural):
            macs = doomed[sw]
            removed += self.net.remove_flows(sw, lambda e: e.match.dst_mac in macs)
        return removed

    def add_arp_flow(self, switch_id: str) -> bool:
        view = self.view()
        view.require_switch(switch_id)
        if self._has_arp_flood(view.flows(switch_id)):
            return False
        self._install(switch_id, FlowEntry(action=Flood(), match=Match(ethertype=EtherType.ARP),
                                           priority=FORWARD_PRIORITY))
        return True

    def dump_all_flows(self, switch_id: str) -> list[str]:
        view = self.view()
        view.require_switch(switch_id)
        return [r.render() for r in view.flows(switch_id)]

    def connect_all(self, hosts: Optional[Sequence[str]] = None) -> int:
        """Install forwarding so every listed host reaches every other.

        Returns the number of entries installed. Without ``hosts`` every host
        in the network is used.
        """
        view = self.view()
        hosts = _split(hosts) if hosts is not None else view.hosts()
        if not hosts:
            raise InvalidRequest("connect_all needs at least one host")
        hosts = list(dict.fromkeys(hosts))
        for h in hosts:
            view.require_host(h)

        arp_switches: dict[str, None] = {}
        for h in hosts:
            for v, _, _ in view.neighbors(h):
                if view.is_switch(v):
                    arp_switches.setdefault(v, None)
        forwarding: dict[tuple[str, str], int] = {}
        for dst in hosts:
            sources = [s for s in hosts if s != dst]
            if not sources:
                continue
            dist = view.distances(dst, sources)
            mac = view.mac(dst)
            for src in sources:
                if src not in dist:
                    raise DisconnectedTopology(f"no path from {src} to {dst}")
                path = view.walk(src, dst, dist)
                for hop, port in zip(path.hops[1:-1], path.ports[1:]):
                    arp_switches.setdefault(hop, None)
                    forwarding.setdefault((hop, mac), port)

        installed = 0
        for sw in arp_switches:
            if not self._has_arp_flood(view.flows(sw)):
                self._install(sw, FlowEntry(action=Flood(), match=Match(ethertype=EtherType.ARP),
                                            priority=FORWARD_PRIORITY))
                installed += 1
        present = {}
        for (sw, mac), port in forwarding.items():
            if sw not in present:
                present[sw] = {r.dst_mac for r in view.flows(sw)
                               if r.action == "output" and r.in_port is None
                               and r.dst_mac is not None and r.ethertype is None}
            if mac in present[sw]:
                continue
            self._install(sw, FlowEntry(action=Output(port), match=Match(dst_mac=mac),
                                        priority=FORWARD_PRIORITY))
            present[sw].add(mac)
            installed += 1
        return installed

    def segments(self, switches: Sequence[str]) -> dict[str, str]:
        """Map every node to its nearest listed switch (ties: smaller id)."""
        view = self.view()
        switches = sorted(dict.fromkeys(_split(switches)))
        best: dict[str, tuple[int, str]] = {}
        for sw in switches:
            view.require_switch(sw)
            for node, d in view.distances(sw).items():
                if node not in best or (d, sw) < best[node]:
                    best[node] = (d, sw)
        return {node: sw for node, (_, sw) in best.items()}

    def build_firewall(self, switches: Sequence[str],
                       allowed_hosts: Sequence[str] = ()) -> int:
        """Block cross-segment traffic except between allowed hosts.

        Hosts are grouped by nearest listed switch. Every switch-to-switch
        link whose ends fall in different segments gets, on each side, a
        priority-10 Drop per non-allowed host of the local segment, matching
        packets that enter over that link. Returns the number of entries
        installed.
        """
        view = self.view()
        switches = _split(switches)
        if len(set(switches)) < 2:
            raise InvalidRequest("a firewall needs at least two switches")
        allowed = set(_split(allowed_hosts))
        for sw in switches:
            view.require_switch(sw)
        for h in allowed:
            view.require_host(h)
        segment = self.segments(switches)
        members: dict[str, list[str]] = {}
        for node, sw in segment.items():
            if view.is_host(node):
                members.setdefault(sw, []).append(node)

        planned = []
        for u in sorted(segment, key=_natural):
            if not view.is_switch(u):
                continue
            for v, lp, _ in view.neighbors(u):
                if not view.is_switch(v) or segment.get(v, segment[u]) == segment[u]:
                    continue
                for h in sorted(members.get(segment[u], []), key=_natural):
                    if h not in allowed:
                        planned.append((u, lp, view.mac(h)))

        installed = 0
        existing: dict[str, set] = {}
        for sw, port, mac in planned:
            if sw not in existing:
                existing[sw] = {(r.in_port, r.dst_mac) for r in view.flows(sw)
                                if r.action == "drop" and r.priority == FIREWALL_PRIORITY}
            if (port, mac) in existing[sw]:
                continue
            self._install(sw, FlowEntry(action=Drop(), match=Match(in_port=port, dst_mac=mac),
                                        priority=FIREWALL_PRIORITY))
            existing[sw].add((port, mac))
            installed += 1
        return installed

    def find_path(self, hosts: Sequence[str]) -> PathResult:
        hosts = _split(hosts)
        if len(hosts) != 2 or hosts[0] == hosts[1]:
            raise InvalidRequest("find_path takes exactly two distinct hosts")
        view = self.view()
        src, dst = (view.require_host(h) for h in hosts)
        return view.path(src, dst)

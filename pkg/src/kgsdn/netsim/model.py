"""Simulated SDN state: nodes, ports, links and per-switch flow tables."""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from kgsdn.errors import InvalidSpec, NoSuchHost, NoSuchPort, NoSuchSwitch


class NodeKind(str, enum.Enum):
    SWITCH = "Switch"
    HOST = "Host"
    ACCESS_POINT = "AccessPoint"
    STATION = "Station"

    @property
    def forwards(self) -> bool:
        """Switches and access points hold flow tables."""
        return self in (NodeKind.SWITCH, NodeKind.ACCESS_POINT)


class EtherType(str, enum.Enum):
    ARP = "ARP"
    IPV4 = "IPv4"


BROADCAST_MAC = "ff:ff:ff:ff:ff:ff"


@dataclass
class Node:
    id: str
    kind: NodeKind
    mac: Optional[str] = None
    dpid: Optional[str] = None
    location: tuple[str, str] = ("0.000", "0.000")
    ports: list[str] = field(default_factory=list)

    @property
    def is_switch(self) -> bool:
        return self.kind.forwards


@dataclass(frozen=True)
class Port:
    id: str
    owner: str
    number: int


@dataclass(frozen=True)
class Link:
    id: str
    a: str
    b: str


@dataclass(frozen=True)
class Match:
    in_port: Optional[int] = None
    dst_mac: Optional[str] = None
    ethertype: Optional[EtherType] = None

    def matches(self, in_port: int, dst_mac: str, ethertype: EtherType) -> bool:
        return (
            (self.in_port is None or self.in_port == in_port)
            and (self.dst_mac is None or self.dst_mac == dst_mac)
            and (self.ethertype is None or self.ethertype == ethertype)
        )


@dataclass(frozen=True)
class Output:
    port: int


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Flood:
    pass


Action = Union[Output, Drop, Flood]


@dataclass(frozen=True)
class FlowEntry:
    action: Action
    match: Match = Match()
    priority: int = 1
    cookie: int = 0
    table_id: int = 0
    flags: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    # assigned by FlowTable.insert; orders entries of equal priority
    seq: Optional[int] = None

    @property
    def sort_key(self):
        return (-self.priority, self.seq)


def _entry_key(entry: FlowEntry):
    return entry.sort_key


class FlowTable:
    """Priority-ordered flow entries with a destination-MAC side index.

    The side index only narrows candidate lists for lookup; the winning entry
    is always the first matching one in (descending priority, insertion)
    order.
    """

    def __init__(self):
        self.entries: list[FlowEntry] = []
        self.next_seq = 1
        self._by_dst: dict[str, list[FlowEntry]] = {}
        self._any_dst: list[FlowEntry] = []

    def insert(self, entry: FlowEntry) -> FlowEntry:
        if entry.seq is None:
            entry = replace(entry, seq=self.next_seq)
        self.next_seq = max(self.next_seq, entry.seq + 1)
        key = _entry_key
        bisect.insort(self.entries, entry, key=key)
        if entry.match.dst_mac is None:
            bisect.insort(self._any_dst, entry, key=key)
        else:
            bisect.insort(self._by_dst.setdefault(entry.match.dst_mac, []), entry, key=key)
        return entry

    def remove_if(self, predicate: Callable[[FlowEntry], bool]) -> int:
        keep = [e for e in self.entries if not predicate(e)]
        removed = len(self.entries) - len(keep)
        if removed:
            self._rebuild(keep)
        return removed

    def _rebuild(self, entries):
        self.entries = sorted(entries, key=_entry_key)
        self._by_dst = {}
        self._any_dst = []
        for e in self.entries:
            if e.match.dst_mac is None:
                self._any_dst.append(e)
            else:
                self._by_dst.setdefault(e.match.dst_mac, []).append(e)

    def lookup(self, in_port: int, dst_mac: str, ethertype: EtherType) -> Optional[FlowEntry]:
        best = None
        for candidates in (self._by_dst.get(dst_mac, ()), self._any_dst):
            for e in candidates:
                if e.match.matches(in_port, dst_mac, ethertype):
                    if best is None or e.sort_key < best.sort_key:
                        best = e
                    break
        return best

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, FlowTable):
            return NotImplemented
        return self.entries == other.entries and self.next_seq == other.next_seq


def flow_id(switch_id: str, entry: FlowEntry) -> str:
    return f"flow-{switch_id}-{entry.seq}"


class Network:
    """Mutable network state; single writer.

    ``version`` increases on every mutation so that cached knowledge-graph
    snapshots can tell whether they are stale.
    """

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.ports: dict[str, Port] = {}
        self.links: dict[str, Link] = {}
        self.tables: dict[str, FlowTable] = {}
        self.version = 0
        # generating TopoSpec, if any; informational only
        self.spec = None
        self._port_link: dict[str, str] = {}
        self._port_by_number: dict[tuple[str, int], str] = {}
        self._macs: set[str] = set()

    # --- construction ---------------------------------------------------

    def add_node(self, node_id: str, kind: NodeKind, mac=None, dpid=None,
                 location=("0.000", "0.000")) -> Node:
        if node_id in self.nodes:
            raise InvalidSpec(f"duplicate node id {node_id}")
        kind = NodeKind(kind)
        if not kind.forwards and mac is None:
            raise InvalidSpec(f"{node_id}: hosts and stations need a MAC")
        if mac is not None and mac in self._macs:
            raise InvalidSpec(f"duplicate MAC {mac}")
        node = Node(node_id, kind, mac=mac, dpid=dpid, location=tuple(location))
        self.nodes[node_id] = node
        if kind.forwards:
            self.tables[node_id] = FlowTable()
        if mac is not None:
            self._macs.add(mac)
        self.version += 1
        return node

    def add_port(self, owner: str, number: Optional[int] = None,
                 port_id: Optional[str] = None) -> Port:
        node = self.nodes.get(owner)
        if node is None:
            raise InvalidSpec(f"no node {owner}")
        if not node.is_switch and node.ports:
            raise InvalidSpec(f"{owner}: hosts and stations have exactly one port")
        if number is None:
            number = 1 + max((self.ports[p].number for p in node.ports), default=0)
        if number < 1 or (owner, number) in self._port_by_number:
            raise InvalidSpec(f"{owner}: bad or duplicate port number {number}")
        if port_id is None:
            suffix = "wlan" if node.kind in (NodeKind.STATION, NodeKind.ACCESS_POINT) else "eth"
            port_id = f"{owner}-{suffix}{number}"
        if port_id in self.ports:
            raise InvalidSpec(f"duplicate port id {port_id}")
        port = Port(port_id, owner, number)
        self.ports[port_id] = port
        self._port_by_number[(owner, number)] = port_id
        node.ports.append(port_id)
        self.version += 1
        return port

    def add_link(self, a: str, b: str, link_id: Optional[str] = None) -> Link:
        if a == b or a not in self.ports or b not in self.ports:
            raise InvalidSpec(f"bad link endpoints {a}, {b}")
        if a in self._port_link or b in self._port_link:
            raise InvalidSpec(f"port already linked: {a} or {b}")
        if link_id is None:
            link_id = f"link{len(self.links) + 1}"
        if link_id in self.links:
            raise InvalidSpec(f"duplicate link id {link_id}")
        link = Link(link_id, a, b)
        self.links[link_id] = link
        self._port_link[a] = link_id
        self._port_link[b] = link_id
        self.version += 1
        return link

    def connect(self, upper: str, lower: str) -> Link:
        """Link two nodes through fresh ports; ``upper`` becomes ``from``."""
        pa = self.add_port(upper)
        pb = self.add_port(lower)
        return self.add_link(pa.id, pb.id)

    # --- queries --------------------------------------------------------

    def switch(self, switch_id: str) -> Node:
        node = self.nodes.get(switch_id)
        if node is None or not node.is_switch:
            raise NoSuchSwitch(switch_id)
        return node

    def host(self, host_id: str) -> Node:
        node = self.nodes.get(host_id)
        if node is None or node.is_switch:
            raise NoSuchHost(host_id)
        return node

    def hosts(self) -> list[Node]:
        return [n for n in self.nodes.values() if not n.is_switch]

    def switches(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.is_switch]

    def port_by_number(self, owner: str, number: int) -> Optional[Port]:
        pid = self._port_by_number.get((owner, number))
        return self.ports[pid] if pid is not None else None

    def peer(self, port_id: str) -> Optional[Port]:
        link_id = self._port_link.get(port_id)
        if link_id is None:
            return None
        link = self.links[link_id]
        return self.ports[link.b if link.a == port_id else link.a]

    def neighbors(self, node_id: str) -> list[str]:
        out = []
        for pid in self.nodes[node_id].ports:
            other = self.peer(pid)
            if other is not None:
                out.append(other.owner)
        return out

    # --- flow tables ----------------------------------------------------

    def install_flow(self, switch_id: str, entry: FlowEntry) -> FlowEntry:
        self.switch(switch_id)
        if isinstance(entry.action, Output) and self.port_by_number(switch_id, entry.action.port) is None:
            raise NoSuchPort(f"{switch_id} has no port {entry.action.port}")
        in_port = entry.match.in_port
        if in_port is not None and self.port_by_number(switch_id, in_port) is None:
            raise NoSuchPort(f"{switch_id} has no port {in_port}")
        installed = self.tables[switch_id].insert(entry)
        self.version += 1
        return installed

    def remove_flows(self, switch_id: str, predicate: Callable[[FlowEntry], bool]) -> int:
        self.switch(switch_id)
        removed = self.tables[switch_id].remove_if(predicate)
        if removed:
            self.version += 1
        return removed

    def flows(self, switch_id: str) -> list[FlowEntry]:
        self.switch(switch_id)
        return list(self.tables[switch_id].entries)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.ports == other.ports
            and self.links == other.links
            and self.tables == other.tables
        )

    def __repr__(self):
        return (f"<Network {len(self.nodes)} nodes, {len(self.links)} links, "
                f"{sum(len(t) for t in self.tables.values())} flows>")

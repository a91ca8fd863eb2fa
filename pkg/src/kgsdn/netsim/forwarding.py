"""Packet-forwarding oracle used to check what the installed flows actually do."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from kgsdn.netsim.model import (BROADCAST_MAC, Drop, EtherType, Flood, Network,
                                Output)

DEFAULT_TTL = 64


@dataclass(frozen=True)
class Packet:
    src_mac: str
    dst_mac: str
    ethertype: EtherType = EtherType.IPV4
    ttl: int = DEFAULT_TTL

    def __post_init__(self):
        if self.ttl <= 0:
            raise ValueError("ttl must be positive at injection")


@dataclass(frozen=True)
class Delivered:
    host: str


@dataclass(frozen=True)
class Dropped:
    reason: str


@dataclass(frozen=True)
class Flooded:
    hosts: frozenset


@dataclass(frozen=True)
class Looped:
    pass


def forward(net: Network, from_host: str, packet: Packet):
    """Trace ``packet`` injected at ``from_host`` through the flow tables.

    Returns Delivered, Dropped, Looped, or Flooded when any switch on the way
    applied a Flood action. Flooded copies are tracked with a visited-switch
    set, so each switch floods a given packet at most once.
    """
    src = net.host(from_host)
    if not src.ports:
        return Dropped("no-port")

    flooding = False
    visited: set[str] = set()
    received: set[str] = set()
    outcome = None
    # items: (egress port id, remaining ttl)
    work = deque([(src.ports[0], packet.ttl)])
    while work:
        egress, ttl = work.popleft()
        ingress = net.peer(egress)
        if ingress is None:
            outcome = Dropped("no-link")
            continue
        node = net.nodes[ingress.owner]
        if not node.is_switch:
            if flooding:
                if node.id != from_host:
                    received.add(node.id)
            elif node.mac == packet.dst_mac:
                outcome = Delivered(node.id)
            else:
                outcome = Dropped("wrong-host")
            continue
        if flooding:
            if node.id in visited:
                continue
            visited.add(node.id)
        if ttl <= 0:
            outcome = Looped()
            continue
        entry = net.tables[node.id].lookup(ingress.number, packet.dst_mac, packet.ethertype)
        if entry is None:
            outcome = Dropped("table-miss")
            continue
        action = entry.action
        if isinstance(action, Drop):
            outcome = Dropped("drop")
        elif isinstance(action, Output):
            port = net.port_by_number(node.id, action.port)
            work.append((port.id, ttl - 1))
        elif isinstance(action, Flood):
            if not flooding:
                flooding = True
                visited.add(node.id)
            for pid in node.ports:
                if pid != ingress.id:
                    work.append((pid, ttl - 1))
    if flooding:
        return Flooded(frozenset(received))
    return outcome


def ipv4(net: Network, src: str, dst: str) -> Packet:
    return Packet(net.host(src).mac, net.host(dst).mac, EtherType.IPV4)


def arp_request(net: Network, src: str) -> Packet:
    return Packet(net.host(src).mac, BROADCAST_MAC, EtherType.ARP)


def delivers(net: Network, src: str, dst: str) -> bool:
    """One direction of :func:`reachable`."""
    return forward(net, src, ipv4(net, src, dst)) == Delivered(dst)


def reachable(net: Network, h1: str, h2: str) -> bool:
    """Bidirectional delivery, the stand-in for ping."""
    net.host(h1)
    net.host(h2)
    if h1 == h2:
        return True
    return delivers(net, h1, h2) and delivers(net, h2, h1)

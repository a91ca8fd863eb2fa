"""Deterministic SDN simulator."""
from kgsdn.netsim.forwarding import (Delivered, Dropped, Flooded, Looped, Packet,
                                     arp_request, delivers, forward, ipv4,
                                     reachable)
from kgsdn.netsim.io import load_network, network_from_dict, network_to_dict, save_network
from kgsdn.netsim.model import (BROADCAST_MAC, Drop, EtherType, Flood, FlowEntry,
                                FlowTable, Link, Match, Network, Node, NodeKind,
                                Output, Port, flow_id)
from kgsdn.netsim.topology import TopoSpec, build_topology, expected_counts, mac_for

__all__ = [
    "BROADCAST_MAC", "Delivered", "Drop", "Dropped", "EtherType", "Flood",
    "Flooded", "FlowEntry", "FlowTable", "Link", "Looped", "Match", "Network",
    "Node", "NodeKind", "Output", "Packet", "Port", "TopoSpec", "arp_request",
    "build_topology", "delivers", "expected_counts", "flow_id", "forward",
    "ipv4", "load_network", "mac_for", "network_from_dict", "network_to_dict",
    "reachable", "save_network",
]

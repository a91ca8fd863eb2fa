import pytest
from hypothesis import given, strategies as st

from kgsdn.api import ManagementAPI
from kgsdn.errors import InvalidSpec, NoSuchHost, NoSuchPort, NoSuchSwitch
from kgsdn.netsim import (Delivered, Drop, Dropped, EtherType, Flood, Flooded, FlowEntry,
                          Looped, Match, NodeKind, Output, Packet, TopoSpec, arp_request,
                          build_topology, forward, ipv4, reachable)
from kgsdn.netsim.io import load_network, network_from_dict, network_to_dict, save_network

import oracles


# --- topology generation -----------------------------------------------------

def test_single5_has_six_nodes():
    net = build_topology(TopoSpec.single(5))
    assert len(net.nodes) == 6
    assert len(net.switches()) == 1 and len(net.hosts()) == 5


def test_tree22_counts():
    net = build_topology(TopoSpec.tree(2, 2))
    assert len(net.switches()) == 3 and len(net.hosts()) == 4
    assert len(net.links) == 6


def test_single1_smallest():
    net = build_topology(TopoSpec.single(1))
    assert len(net.nodes) == 2 and len(net.links) == 1


@pytest.mark.parametrize("spec", [
    TopoSpec.single(0), TopoSpec.linear(0), TopoSpec.tree(0, 2), TopoSpec.tree(2, 1),
    TopoSpec.single(-3),
])
def test_invalid_spec(spec):
    with pytest.raises(InvalidSpec):
        build_topology(spec)


@given(st.integers(1, 30))
def test_single_formula(k):
    assert len(build_topology(TopoSpec.single(k)).nodes) == k + 1


@given(st.integers(1, 30))
def test_linear_formula(n):
    net = build_topology(TopoSpec.linear(n))
    assert len(net.nodes) == 2 * n
    assert len(net.links) == 2 * n - 1


@given(st.integers(1, 3), st.integers(2, 4))
def test_tree_formula(d, f):
    net = build_topology(TopoSpec.tree(d, f))
    assert len(net.nodes) == sum(f ** i for i in range(d)) + f ** d
    assert len(net.hosts()) == f ** d
    # connected and acyclic
    assert len(net.links) == len(net.nodes) - 1
    assert len(oracles.bfs_hops(net, "s1", relays=set(net.nodes))) == len(net.nodes)


def test_wifi_kinds_keep_structure():
    wired = build_topology(TopoSpec.tree(2, 2))
    wifi = build_topology(TopoSpec.tree(2, 2, kind="wifi"))
    assert {n.kind for n in wifi.nodes.values()} == {NodeKind.ACCESS_POINT, NodeKind.STATION}
    assert len(wifi.nodes) == len(wired.nodes) and len(wifi.links) == len(wired.links)


def test_deterministic():
    assert build_topology(TopoSpec.tree(2, 3)) == build_topology(TopoSpec.tree(2, 3))


def test_macs_unique_and_hosts_single_ported():
    net = build_topology(TopoSpec.tree(3, 3))
    macs = [h.mac for h in net.hosts()]
    assert len(set(macs)) == len(macs)
    assert all(len(h.ports) == 1 for h in net.hosts())
    assert net.host("h1").mac == "00:00:00:00:00:01"


def test_tree_of_depth_three_fanout_five():
    net = build_topology(TopoSpec.tree(3, 5))
    assert (len(net.switches()), len(net.hosts())) == (31, 125)


# --- flow tables ---------------------------------------------------------------

def test_install_and_order():
    net = build_topology(TopoSpec.single(2))
    net.install_flow("s1", FlowEntry(Output(1), Match(dst_mac="00:00:00:00:00:01"), priority=1))
    net.install_flow("s1", FlowEntry(Drop(), priority=10))
    net.install_flow("s1", FlowEntry(Output(2), priority=1))
    assert [e.priority for e in net.flows("s1")] == [10, 1, 1]
    # ties keep insertion order
    assert [e.action for e in net.flows("s1")][1:] == [Output(1), Output(2)]


def test_install_errors():
    net = build_topology(TopoSpec.single(2))
    with pytest.raises(NoSuchPort):
        net.install_flow("s1", FlowEntry(Output(99)))
    with pytest.raises(NoSuchSwitch):
        net.install_flow("s9", FlowEntry(Drop()))
    with pytest.raises(NoSuchSwitch):
        net.install_flow("h1", FlowEntry(Drop()))


def test_remove_flows():
    net = build_topology(TopoSpec.single(2))
    net.install_flow("s1", FlowEntry(Drop()))
    net.install_flow("s1", FlowEntry(Flood()))
    assert net.remove_flows("s1", lambda e: False) == 0
    assert len(net.flows("s1")) == 2
    assert net.remove_flows("s1", lambda e: True) == 2
    assert net.flows("s1") == []
    with pytest.raises(NoSuchSwitch):
        net.remove_flows("s7", lambda e: True)


def test_remove_dst_entries_after_connect_all():
    net = build_topology(TopoSpec.single(2))
    ManagementAPI(net).connect_all()
    h2 = net.host("h2").mac
    net.remove_flows("s1", lambda e: e.match.dst_mac == h2)
    assert forward(net, "h1", ipv4(net, "h1", "h2")) == Dropped("table-miss")
    assert forward(net, "h2", ipv4(net, "h2", "h1")) == Delivered("h1")


# --- forwarding ---------------------------------------------------------------

def test_empty_tables_table_miss():
    net = build_topology(TopoSpec.linear(3))
    assert forward(net, "h1", ipv4(net, "h1", "h3")) == Dropped("table-miss")
    hosts = [h.id for h in net.hosts()]
    assert not any(reachable(net, a, b) for a in hosts for b in hosts if a != b)


def test_single2_connect_all_delivers():
    net = build_topology(TopoSpec.single(2))
    ManagementAPI(net).connect_all()
    # s1-eth1 faces h1, s1-eth2 faces h2, so dst=h2 uses output:2
    assert forward(net, "h1", ipv4(net, "h1", "h2")) == Delivered("h2")


def test_single3_all_pairs():
    net = build_topology(TopoSpec.single(3))
    ManagementAPI(net).connect_all()
    assert all(reachable(net, a, b) for a in ("h1", "h2", "h3") for b in ("h1", "h2", "h3"))


def test_arp_flood_reaches_other_hosts():
    net = build_topology(TopoSpec.single(4))
    net.install_flow("s1", FlowEntry(Flood(), Match(ethertype=EtherType.ARP)))
    assert forward(net, "h2", arp_request(net, "h2")) == Flooded(frozenset({"h1", "h3", "h4"}))


def test_arp_flood_across_switches():
    net = build_topology(TopoSpec.tree(2, 2))
    for sw in net.switches():
        net.install_flow(sw.id, FlowEntry(Flood(), Match(ethertype=EtherType.ARP)))
    assert forward(net, "h1", arp_request(net, "h1")) == Flooded(frozenset({"h2", "h3", "h4"}))


def test_higher_priority_drop_wins():
    net = build_topology(TopoSpec.single(2))
    ManagementAPI(net).connect_all()
    assert forward(net, "h1", ipv4(net, "h1", "h2")) == Delivered("h2")
    net.install_flow("s1", FlowEntry(Drop(), Match(dst_mac=net.host("h2").mac), priority=10))
    assert forward(net, "h1", ipv4(net, "h1", "h2")) == Dropped("drop")


def test_wrong_host_not_delivered():
    net = build_topology(TopoSpec.single(3))
    net.install_flow("s1", FlowEntry(Output(3), Match(dst_mac=net.host("h2").mac)))
    out = forward(net, "h1", ipv4(net, "h1", "h2"))
    assert out == Dropped("wrong-host")


def test_loop_detected():
    net = build_topology(TopoSpec.linear(2))
    # s1 sends everything to s2 and s2 sends everything back
    s1_up = [p for p in net.switch("s1").ports if net.peer(p).owner == "s2"][0]
    s2_down = [p for p in net.switch("s2").ports if net.peer(p).owner == "s1"][0]
    net.install_flow("s1", FlowEntry(Output(net.ports[s1_up].number)))
    net.install_flow("s2", FlowEntry(Output(net.ports[s2_down].number)))
    assert forward(net, "h1", ipv4(net, "h1", "h2")) == Looped()


def test_forward_unknown_host():
    net = build_topology(TopoSpec.single(1))
    with pytest.raises(NoSuchHost):
        forward(net, "h9", Packet("00:00:00:00:00:01", "00:00:00:00:00:02"))


def test_packet_ttl_must_be_positive():
    with pytest.raises(ValueError):
        Packet("00:00:00:00:00:01", "00:00:00:00:00:02", ttl=0)


def test_forwarding_deterministic():
    def run():
        net = build_topology(TopoSpec.tree(2, 3))
        ManagementAPI(net).connect_all(["h1", "h5", "h9"])
        return [forward(net, a, ipv4(net, a, b)) for a in ("h1", "h5", "h9") for b in ("h1", "h5", "h9")]
    assert run() == run()


# --- persistence ---------------------------------------------------------------

@pytest.mark.parametrize("spec", [TopoSpec.single(3), TopoSpec.linear(4), TopoSpec.tree(2, 2, kind="wifi")])
def test_session_round_trip(tmp_path, spec):
    net = build_topology(spec)
    api = ManagementAPI(net)
    api.connect_all()
    api.add_flow(net.switches()[0].id, action_type="drop", in_port=1)
    path = tmp_path / "s.json"
    save_network(net, path, spec)
    back = load_network(path)
    assert back == net
    assert [e.seq for e in back.flows("s1" if spec.kind == "wired" else "ap1")] == \
        [e.seq for e in net.flows("s1" if spec.kind == "wired" else "ap1")]


def test_shape_only_document():
    net = network_from_dict({"shape": "tree", "parameters": {"depth": 2, "fanout": 2}, "kind": "wired"})
    assert net == build_topology(TopoSpec.tree(2, 2))


def test_round_trip_dict_keeps_next_seq():
    net = build_topology(TopoSpec.single(2))
    net.install_flow("s1", FlowEntry(Drop()))
    net.install_flow("s1", FlowEntry(Flood()))
    net.remove_flows("s1", lambda e: isinstance(e.action, Flood))
    back = network_from_dict(network_to_dict(net))
    assert back.install_flow("s1", FlowEntry(Drop())).seq == 3

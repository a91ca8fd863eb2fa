import threading
import time

import pytest
from hypothesis import given, strategies as st

from kgsdn.api import ManagementAPI
from kgsdn.kg import DEFAULT_INTERVAL, local_name, run_periodic, snapshot
from kgsdn.netsim import (Drop, EtherType, Flood, FlowEntry, Match, Network, Output, TopoSpec,
                          build_topology, flow_id)
from kgsdn.ontology import EX, EX_NS, GEO, NET, RDF_TYPE
from kgsdn.rdf import Iri, Literal, Triple

import oracles


def test_single1_has_18_triples():
    snap = snapshot(build_topology(TopoSpec.single(1)))
    assert snap.triple_count == 18 == len(snap.graph)


def test_empty_network():
    snap = snapshot(Network())
    assert snap.triple_count == 0


def test_fragment_substructure():
    net = build_topology(TopoSpec.single(1))
    g = snapshot(net).graph
    sw_port, host_port = "s1-eth1", "h1-eth1"
    link = next(iter(net.links.values()))
    assert net.ports[link.a].id == sw_port and net.ports[link.b].id == host_port
    expected = [
        Triple(EX.s1, NET.hasPort, EX[sw_port]),
        Triple(EX[link.id], NET["from"], EX[sw_port]),
        Triple(EX[link.id], NET.to, EX[host_port]),
        Triple(EX.h1, NET.hasPort, EX[host_port]),
        Triple(EX.s1, GEO.location, EX["point-s1"]),
    ]
    for t in expected:
        assert t in g
    assert len(g.match(EX["point-s1"], GEO.long, None)) == 1
    assert len(g.match(EX["point-s1"], GEO.lat, None)) == 1
    assert all(type(t.object) is Literal for t in g.match(EX["point-s1"], None, None))


@given(st.sampled_from([TopoSpec.single(3), TopoSpec.linear(3), TopoSpec.tree(2, 2)]),
       st.lists(st.tuples(st.sampled_from(["output", "drop", "flood"]),
                          st.booleans(), st.booleans(), st.booleans()), max_size=6))
def test_flow_triples_grow_by_rule(spec, flows):
    net = build_topology(spec)
    before = snapshot(net).triple_count
    expected = before
    sw = net.switches()[0]
    for action, with_in, with_dst, with_eth in flows:
        match = Match(in_port=1 if with_in else None,
                      dst_mac=net.hosts()[0].mac if with_dst else None,
                      ethertype=EtherType.ARP if with_eth else None)
        act = {"output": Output(1), "drop": Drop(), "flood": Flood()}[action]
        entry = net.install_flow(sw.id, FlowEntry(act, match))
        expected += oracles.flow_triple_count(entry)
        assert snapshot(net).triple_count == expected


def _element_names(net):
    names = set(net.nodes) | set(net.ports) | set(net.links)
    names |= {f"point-{n}" for n in net.nodes}
    for sw, table in net.tables.items():
        for e in table.entries:
            names |= {flow_id(sw, e), f"{flow_id(sw, e)}-action"}
    return names


@given(st.sampled_from([TopoSpec.single(4), TopoSpec.linear(4), TopoSpec.tree(2, 3)]), st.booleans())
def test_abstraction_is_bijective(spec, with_flows):
    net = build_topology(spec)
    if with_flows:
        ManagementAPI(net).connect_all()
    g = snapshot(net).graph
    minted = {local_name(t) for t in g.terms() if type(t) is Iri and t.value.startswith(EX_NS)}
    assert minted == _element_names(net)
    # every node, port and link appears as a subject
    subjects = {local_name(t.subject) for t in g}
    assert set(net.nodes) | set(net.ports) | set(net.links) <= subjects


def test_snapshot_is_immutable_and_independent():
    net = build_topology(TopoSpec.single(2))
    first = snapshot(net)
    frozen = set(first.graph)
    net.install_flow("s1", FlowEntry(Drop()))
    second = snapshot(net)
    assert set(first.graph) == frozen
    assert second.triple_count == first.triple_count + 10
    assert set(second.graph) - set(first.graph)
    assert first.graph.frozen and second.graph.frozen


def test_default_interval():
    assert DEFAULT_INTERVAL == 5.0


def test_stop_before_first_tick():
    seen = []
    handle = run_periodic(build_topology(TopoSpec.single(1)), 10.0, seen.append)
    handle.stop()
    assert seen == [] and handle.published == 0
    assert not handle.running


def test_periodic_refresh_sees_mutation():
    net = build_topology(TopoSpec.single(2))
    lock = threading.Lock()
    seen = []
    tick = threading.Event()

    def publish(snap):
        seen.append(snap)
        tick.set()

    handle = run_periodic(net, 0.02, publish, lock=lock)
    try:
        assert tick.wait(5)
        with lock:
            net.install_flow("s1", FlowEntry(Drop()))
            target = net.version
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and not any(s.network_version == target for s in seen):
            time.sleep(0.01)
    finally:
        handle.stop()
    old = seen[0]
    new = next(s for s in seen if s.network_version == target)
    added = set(new.graph) - set(old.graph)
    assert Triple(EX.s1, NET.hasFlow, EX[flow_id("s1", net.flows("s1")[0])]) in added
    assert old.triple_count == len(old.graph)
    assert handle.latest is seen[-1]


def test_periodic_accepts_callable():
    calls = []
    done = threading.Event()

    def source():
        calls.append(1)
        return build_topology(TopoSpec.single(1))

    handle = run_periodic(source, 0.01, lambda s: done.set())
    try:
        assert done.wait(5)
    finally:
        handle.stop()
    assert calls and handle.latest.triple_count == 18


def test_rejects_nonpositive_interval():
    with pytest.raises(ValueError):
        run_periodic(Network(), 0)

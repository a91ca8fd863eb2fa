"""JSON documents for networks.

One format serves both as topology file and as session file. A document with
only ``shape``/``parameters``/``kind`` is generated on load; a document with
``nodes`` is taken literally, including flow tables. See docs/session.md.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from kgsdn.errors import InvalidSpec
from kgsdn.netsim.model import (Drop, EtherType, Flood, FlowEntry, Match,
                                Network, NodeKind, Output)
from kgsdn.netsim.topology import TopoSpec, build_topology

FORMAT = "kgsdn-network"
VERSION = 1


def _action_to_json(action) -> dict:
    if isinstance(action, Output):
        return {"type": "output", "port": action.port}
    if isinstance(action, Drop):
        return {"type": "drop"}
    return {"type": "flood"}


def _action_from_json(doc: dict):
    kind = doc.get("type")
    if kind == "output":
        return Output(int(doc["port"]))
    if kind == "drop":
        return Drop()
    if kind == "flood":
        return Flood()
    raise InvalidSpec(f"unknown action type {kind!r}")


def entry_to_json(entry: FlowEntry) -> dict:
    m = entry.match
    return {
        "seq": entry.seq,
        "cookie": entry.cookie,
        "table_id": entry.table_id,
        "priority": entry.priority,
        "flags": entry.flags,
        "idle_timeout": entry.idle_timeout,
        "hard_timeout": entry.hard_timeout,
        "match": {
            "in_port": m.in_port,
            "dst_mac": m.dst_mac,
            "ethertype": m.ethertype.value if m.ethertype else None,
        },
        "action": _action_to_json(entry.action),
    }


def entry_from_json(doc: dict) -> FlowEntry:
    m = doc.get("match") or {}
    eth = m.get("ethertype")
    return FlowEntry(
        action=_action_from_json(doc["action"]),
        match=Match(
            in_port=m.get("in_port"),
            dst_mac=m.get("dst_mac"),
            ethertype=EtherType(eth) if eth else None,
        ),
        priority=int(doc.get("priority", 1)),
        cookie=int(doc.get("cookie", 0)),
        table_id=int(doc.get("table_id", 0)),
        flags=int(doc.get("flags", 0)),
        idle_timeout=int(doc.get("idle_timeout", 0)),
        hard_timeout=int(doc.get("hard_timeout", 0)),
        seq=doc.get("seq"),
    )


def network_to_dict(net: Network, spec: Optional[TopoSpec] = None) -> dict:
    doc: dict = {"format": FORMAT, "version": VERSION}
    spec = spec or net.spec
    if spec is not None:
        doc.update(shape=spec.shape, parameters=spec.parameters, kind=spec.kind)
    else:
        doc.update(shape="custom")
    doc["nodes"] = [
        {
            "id": n.id,
            "kind": n.kind.value,
            "mac": n.mac,
            "dpid": n.dpid,
            "location": {"long": n.location[0], "lat": n.location[1]},
            "ports": [
                {"id": pid, "number": net.ports[pid].number} for pid in n.ports
            ],
        }
        for n in net.nodes.values()
    ]
    doc["links"] = [{"id": l.id, "a": l.a, "b": l.b} for l in net.links.values()]
    doc["flows"] = {
        sw: {"next_seq": table.next_seq,
             "entries": [entry_to_json(e) for e in table.entries]}
        for sw, table in net.tables.items()
        if table.entries or table.next_seq > 1
    }
    return doc


def spec_from_dict(doc: dict) -> Optional[TopoSpec]:
    shape = doc.get("shape")
    if shape in (None, "custom"):
        return None
    params = doc.get("parameters") or {}
    unknown = set(params) - {"k", "n", "depth", "fanout"}
    if unknown:
        raise InvalidSpec(f"unknown parameters {sorted(unknown)}")
    return TopoSpec(shape, kind=doc.get("kind", "wired"), **params)


def network_from_dict(doc: dict) -> Network:
    if "nodes" not in doc:
        spec = spec_from_dict(doc)
        if spec is None:
            raise InvalidSpec("document has neither a shape nor explicit nodes")
        return build_topology(spec)

    net = Network()
    try:
        for n in doc["nodes"]:
            loc = n.get("location") or {}
            net.add_node(
                n["id"], NodeKind(n["kind"]), mac=n.get("mac"), dpid=n.get("dpid"),
                location=(loc.get("long", "0.000"), loc.get("lat", "0.000")),
            )
            for p in n.get("ports", []):
                net.add_port(n["id"], number=p.get("number"), port_id=p.get("id"))
        for l in doc.get("links", []):
            if "a" in l and l["a"] in net.ports:
                net.add_link(l["a"], l["b"], link_id=l.get("id"))
            else:
                # node-level link in a hand-written topology: mint fresh ports
                net.connect(l["from"], l["to"])
        for sw, table_doc in (doc.get("flows") or {}).items():
            table = net.tables.get(sw)
            if table is None:
                raise InvalidSpec(f"flows for unknown switch {sw}")
            for e in table_doc.get("entries", []):
                net.install_flow(sw, entry_from_json(e))
            table.next_seq = max(table.next_seq, int(table_doc.get("next_seq", 1)))
        net.spec = spec_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed network document: {exc!r}") from None
    return net


def load_network(path) -> Network:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: not JSON ({exc})") from None
    return network_from_dict(doc)


def save_network(net: Network, path, spec: Optional[TopoSpec] = None) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net, spec), indent=2) + "\n",
                          encoding="utf-8")

"""Deterministic generators for the single, linear and tree topology families.

Naming follows Mininet: switches ``s1..``, hosts ``h1..`` (``ap``/``sta`` for
WiFi), ports ``<node>-eth<N>``, MACs ``00:00:00:00:00:NN`` by host index and
dpids by switch index. Tree switches are numbered in preorder and each parent
links to a child only after the child's subtree is built, as TreeTopo does.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from kgsdn.errors import InvalidSpec
from kgsdn.netsim.model import Network, NodeKind

SHAPES = ("single", "linear", "tree")
KINDS = ("wired", "wifi")
GRID_WIDTH = 32


@dataclass(frozen=True)
class TopoSpec:
    shape: str
    k: Optional[int] = None
    n: Optional[int] = None
    depth: Optional[int] = None
    fanout: Optional[int] = None
    kind: str = "wired"

    @classmethod
    def single(cls, k: int, kind: str = "wired") -> "TopoSpec":
        return cls("single", k=k, kind=kind)

    @classmethod
    def linear(cls, n: int, kind: str = "wired") -> "TopoSpec":
        return cls("linear", n=n, kind=kind)

    @classmethod
    def tree(cls, depth: int, fanout: int, kind: str = "wired") -> "TopoSpec":
        return cls("tree", depth=depth, fanout=fanout, kind=kind)

    @property
    def parameters(self) -> dict:
        if self.shape == "single":
            return {"k": self.k}
        if self.shape == "linear":
            return {"n": self.n}
        return {"depth": self.depth, "fanout": self.fanout}

    def describe(self) -> str:
        args = ",".join(str(v) for v in self.parameters.values())
        suffix = "-wifi" if self.kind == "wifi" else ""
        return f"{self.shape}({args}){suffix}"

    def validate(self) -> None:
        if self.shape not in SHAPES:
            raise InvalidSpec(f"unknown shape {self.shape!r}")
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown kind {self.kind!r}")

        def need(name, value, low):
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise InvalidSpec(f"{self.shape}: {name} must be an integer >= {low}, got {value!r}")

        if self.shape == "single":
            need("k", self.k, 1)
        elif self.shape == "linear":
            need("n", self.n, 1)
        else:
            need("depth", self.depth, 1)
            need("fanout", self.fanout, 2)


def expected_counts(spec: TopoSpec) -> tuple[int, int]:
    """(switches, hosts) implied by the shape parameters."""
    if spec.shape == "single":
        return 1, spec.k
    if spec.shape == "linear":
        return spec.n, spec.n
    switches = sum(spec.fanout ** i for i in range(spec.depth))
    return switches, spec.fanout ** spec.depth


def mac_for(index: int) -> str:
    return ":".join(f"{b:02x}" for b in index.to_bytes(6, "big"))


class _Builder:
    def __init__(self, kind: str):
        wifi = kind == "wifi"
        self.net = Network()
        self.switch_kind = NodeKind.ACCESS_POINT if wifi else NodeKind.SWITCH
        self.host_kind = NodeKind.STATION if wifi else NodeKind.HOST
        self.switch_prefix = "ap" if wifi else "s"
        self.host_prefix = "sta" if wifi else "h"
        self.switch_count = 0
        self.host_count = 0

    def _location(self):
        idx = len(self.net.nodes)
        return (f"{idx % GRID_WIDTH:.3f}", f"{idx // GRID_WIDTH:.3f}")

    def switch(self) -> str:
        self.switch_count += 1
        node_id = f"{self.switch_prefix}{self.switch_count}"
        self.net.add_node(node_id, self.switch_kind, dpid=str(self.switch_count),
                          location=self._location())
        return node_id

    def host(self) -> str:
        self.host_count += 1
        node_id = f"{self.host_prefix}{self.host_count}"
        self.net.add_node(node_id, self.host_kind, mac=mac_for(self.host_count),
                          location=self._location())
        return node_id


def build_topology(spec: TopoSpec) -> Network:
    spec.validate()
    b = _Builder(spec.kind)
    net = b.net
    if spec.shape == "single":
        sw = b.switch()
        for _ in range(spec.k):
            net.connect(sw, b.host())
    elif spec.shape == "linear":
        switches = [b.switch() for _ in range(spec.n)]
        hosts = [b.host() for _ in range(spec.n)]
        for sw, h in zip(switches, hosts):
            net.connect(sw, h)
        for left, right in zip(switches, switches[1:]):
            net.connect(left, right)
    else:
        def add_tree(depth: int) -> str:
            if depth == 0:
                return b.host()
            sw = b.switch()
            for _ in range(spec.fanout):
                child = add_tree(depth - 1)
                net.connect(sw, child)
            return sw

        add_tree(spec.depth)
    net.spec = spec
    return net

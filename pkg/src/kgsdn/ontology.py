"""Vocabulary used by the network knowledge graph, plus a structural checker.

Terms follow the ToCo telecom ontology where it names them; the handful of
properties it does not name (match fields, port numbers, datapath ids, the
concrete action classes) live in the same namespace so queries read
uniformly. See docs/ontology.md for the full inventory.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

from kgsdn.errors import UnknownPrefix
from kgsdn.rdf import Graph, Iri, Literal

NET_NS = "http://purl.org/toco/"
GEO_NS = "http://www.w3.org/2003/01/geo/wgs84_pos#"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
EX_NS = "http://example.org/"

PREFIXES = MappingProxyType({
    "net": NET_NS,
    "geo": GEO_NS,
    "rdf": RDF_NS,
    "xsd": XSD_NS,
    "ex": EX_NS,
})


class Namespace:
    """Attribute access mints IRIs: ``NET.hasPort`` -> <...toco/hasPort>."""

    def __init__(self, base: str):
        self._base = base
        self._cache: dict[str, Iri] = {}

    def __getattr__(self, local: str) -> Iri:
        if local.startswith("_"):
            raise AttributeError(local)
        return self[local]

    def __getitem__(self, local: str) -> Iri:
        iri = self._cache.get(local)
        if iri is None:
            iri = self._cache[local] = Iri(self._base + local)
        return iri

    @property
    def base(self) -> str:
        return self._base


NET = Namespace(NET_NS)
GEO = Namespace(GEO_NS)
RDF = Namespace(RDF_NS)
XSD = Namespace(XSD_NS)
EX = Namespace(EX_NS)

RDF_TYPE = RDF.type

NODE_CLASSES = frozenset({NET.Switch, NET.Host, NET.AccessPoint, NET.Station})
ACTION_CLASSES = frozenset({NET.OutputAction, NET.DropAction, NET.FloodAction})

CLASS_CURIES = (
    "net:Switch", "net:Host", "net:AccessPoint", "net:Station",
    "net:Interface", "net:Link", "net:Flow", "net:Action",
    "net:OutputAction", "net:DropAction", "net:FloodAction",
)
PROPERTY_CURIES = (
    "net:hasPort", "net:from", "net:to", "net:hasFlow", "net:hasFlowAction",
    "net:toPort", "net:inPort", "net:matchDst", "net:matchEthType",
    "net:hasMAC", "net:hasID", "net:portNumber", "net:flags",
    "net:priority", "net:cookie", "net:tableId", "net:idleTimeout",
    "net:hardTimeout", "geo:location", "geo:long", "geo:lat", "rdf:type",
)


def expand(curie: str, extra_prefixes=None) -> Iri:
    """Expand ``prefix:local`` against the fixed table (plus any extras)."""
    prefix, sep, local = curie.partition(":")
    if not sep:
        raise UnknownPrefix(f"not a prefixed name: {curie!r}")
    namespace = None
    if extra_prefixes and prefix in extra_prefixes:
        namespace = extra_prefixes[prefix]
    elif prefix in PREFIXES:
        namespace = PREFIXES[prefix]
    if namespace is None:
        raise UnknownPrefix(prefix)
    return Iri(namespace + local)


def integer(value: int) -> Literal:
    return Literal(str(int(value)), XSD.integer)


@dataclass(frozen=True, order=True)
class Violation:
    rule: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.rule}] {self.subject}: {self.message}"


def _objects(g: Graph, s, p) -> list:
    return [t.object for t in g.match(s, p, None)]


def validate_snapshot(g: Graph) -> list[Violation]:
    """Check the structural rules a generated snapshot must satisfy.

    a. a node with ports is typed as Switch, Host, AccessPoint or Station
    b. a link has exactly one ``from`` and one ``to``, each an owned port
    c. a flow has exactly one action; an output action has exactly one
       ``toPort``
    d. a location point has exactly one ``long`` and one ``lat`` literal
    """
    out: list[Violation] = []

    owners = {t.subject for t in g.match(None, NET.hasPort, None)}
    for node in sorted(owners, key=Iri.sort_key):
        types = set(_objects(g, node, RDF_TYPE))
        if not types & NODE_CLASSES:
            out.append(Violation("a", node.value, "port owner lacks a node type"))

    owned_ports = {t.object for t in g.match(None, NET.hasPort, None)}
    links = {t.subject for t in g.match(None, NET["from"], None)}
    links |= {t.subject for t in g.match(None, NET.to, None)}
    links |= {t.subject for t in g.match(None, RDF_TYPE, NET.Link)}
    for link in sorted(links, key=Iri.sort_key):
        for prop in ("from", "to"):
            ends = _objects(g, link, NET[prop])
            if len(ends) != 1:
                out.append(Violation(
                    "b", link.value, f"expected one net:{prop}, found {len(ends)}"))
            elif ends[0] not in owned_ports:
                out.append(Violation(
                    "b", link.value, f"net:{prop} target is not an owned port"))

    for t in g.match(None, RDF_TYPE, NET.Flow):
        flow = t.subject
        actions = _objects(g, flow, NET.hasFlowAction)
        if len(actions) != 1:
            out.append(Violation(
                "c", flow.value, f"expected one net:hasFlowAction, found {len(actions)}"))
            continue
        action = actions[0]
        if type(action) is Iri and (action, RDF_TYPE, NET.OutputAction) in g:
            targets = _objects(g, action, NET.toPort)
            if len(targets) != 1:
                out.append(Violation(
                    "c", action.value, f"output action needs one net:toPort, found {len(targets)}"))

    points = {t.object for t in g.match(None, GEO.location, None)}
    for point in sorted(points, key=lambda term: term.sort_key()):
        if type(point) is not Iri:
            out.append(Violation("d", point.n3(), "location is not a resource"))
            continue
        for prop in ("long", "lat"):
            values = _objects(g, point, GEO[prop])
            if len(values) != 1 or type(values[0]) is not Literal:
                out.append(Violation(
                    "d", point.value, f"expected one literal geo:{prop}, found {len(values)}"))

    return sorted(out)

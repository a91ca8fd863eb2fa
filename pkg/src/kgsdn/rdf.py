"""In-memory RDF triple store and the N-Triples dialect it reads and writes."""
from __future__ import annotations

import re
from typing import Iterable, Iterator, NamedTuple, Optional, Union

from kgsdn.errors import ParseError

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_ILLEGAL_IRI_CHARS = re.compile(r"[\s<>\"]")


class Iri:
    __slots__ = ("value",)

    def __init__(self, value: str):
        if not value or _ILLEGAL_IRI_CHARS.search(value) or not _SCHEME.match(value):
            raise ValueError(f"not an absolute IRI: {value!r}")
        self.value = value

    def __eq__(self, other):
        return type(other) is Iri and other.value == self.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return f"Iri({self.value!r})"

    def sort_key(self):
        return (0, self.value, "")

    def n3(self) -> str:
        return f"<{self.value}>"


class Literal:
    __slots__ = ("lexical", "datatype")

    def __init__(self, lexical: str, datatype: Optional[Iri] = None):
        if not isinstance(lexical, str):
            raise TypeError("literal lexical form must be a str")
        if datatype is not None and type(datatype) is not Iri:
            raise TypeError("literal datatype must be an Iri")
        self.lexical = lexical
        self.datatype = datatype

    def __eq__(self, other):
        return (
            type(other) is Literal
            and other.lexical == self.lexical
            and other.datatype == self.datatype
        )

    def __hash__(self):
        return hash((self.lexical, self.datatype))

    def __repr__(self):
        if self.datatype is None:
            return f"Literal({self.lexical!r})"
        return f"Literal({self.lexical!r}, {self.datatype!r})"

    def sort_key(self):
        return (1, self.lexical, self.datatype.value if self.datatype else "")

    def n3(self) -> str:
        text = f'"{_escape(self.lexical)}"'
        if self.datatype is not None:
            text += f"^^<{self.datatype.value}>"
        return text


Term = Union[Iri, Literal]


class Triple(NamedTuple):
    subject: Iri
    predicate: Iri
    object: Term

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


def make_triple(s: Term, p: Term, o: Term) -> Triple:
    if type(s) is not Iri or type(p) is not Iri:
        raise TypeError("subject and predicate must be IRIs")
    if type(o) not in (Iri, Literal):
        raise TypeError("object must be an IRI or a literal")
    return Triple(s, p, o)


def triple_key(t: Triple):
    return (t.subject.sort_key(), t.predicate.sort_key(), t.object.sort_key())


class Graph:
    """A set of triples with hash indexes.

    Indexes are kept by subject, predicate, object, (subject, predicate) and
    (predicate, object). Any pattern with at least one bound position is
    answered from an index bucket; only the all-wildcard pattern iterates the
    whole set.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set()
        self._by_s: dict[Term, set[Triple]] = {}
        self._by_p: dict[Term, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self._by_sp: dict[tuple, set[Triple]] = {}
        self._by_po: dict[tuple, set[Triple]] = {}
        self._frozen = False
        for t in triples:
            self.insert(t)

    def freeze(self) -> "Graph":
        """Forbid further mutation. Returns self for chaining."""
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _check_mutable(self):
        if self._frozen:
            raise TypeError("graph is frozen")

    def insert(self, t: Triple) -> bool:
        self._check_mutable()
        if t in self._triples:
            return False
        if type(t) is not Triple:
            t = make_triple(*t)
        s, p, o = t
        self._triples.add(t)
        self._by_s.setdefault(s, set()).add(t)
        self._by_p.setdefault(p, set()).add(t)
        self._by_o.setdefault(o, set()).add(t)
        self._by_sp.setdefault((s, p), set()).add(t)
        self._by_po.setdefault((p, o), set()).add(t)
        return True

    def add(self, s: Term, p: Term, o: Term) -> bool:
        return self.insert(make_triple(s, p, o))

    def remove(self, t: Triple) -> bool:
        self._check_mutable()
        if t not in self._triples:
            return False
        s, p, o = t
        self._triples.discard(t)
        for index, key in (
            (self._by_s, s),
            (self._by_p, p),
            (self._by_o, o),
            (self._by_sp, (s, p)),
            (self._by_po, (p, o)),
        ):
            bucket = index[key]
            bucket.discard(t)
            if not bucket:
                del index[key]
        return True

    def _candidates(self, s, p, o):
        if s is not None and p is not None and o is not None:
            t = Triple(s, p, o)
            return (t,) if t in self._triples else ()
        if s is not None and p is not None:
            return self._by_sp.get((s, p), ())
        if p is not None and o is not None:
            return self._by_po.get((p, o), ())
        if s is not None:
            # (s, ?, o) is filtered from the subject bucket
            return self._by_s.get(s, ())
        if o is not None:
            return self._by_o.get(o, ())
        if p is not None:
            return self._by_p.get(p, ())
        return self._triples

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> list[Triple]:
        """Return the triples matching the bound positions, sorted."""
        found = self._candidates(s, p, o)
        if s is not None and o is not None and p is None:
            found = [t for t in found if t.object == o]
        return sorted(found, key=triple_key)

    def estimate(self, s=None, p=None, o=None) -> int:
        """Size of the index bucket that would answer the pattern.

        An upper bound on the result size, used for join ordering.
        """
        return len(self._candidates(s, p, o))

    def terms(self) -> set[Term]:
        out: set[Term] = set()
        for s, p, o in self._triples:
            out.update((s, p, o))
        return out

    def __contains__(self, t) -> bool:
        return t in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=triple_key))

    def __len__(self) -> int:
        return len(self._triples)

    def size(self) -> int:
        return len(self._triples)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self):
        return f"<Graph with {len(self)} triples>"

    def copy(self) -> "Graph":
        return Graph(self._triples)


# --- N-Triples ---------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def serialize_ntriples(g: Graph) -> bytes:
    lines = sorted(t.n3().encode("utf-8") + b"\n" for t in g._triples)
    return b"".join(lines)


_IRI_TOKEN = re.compile(r"<([^<>\s\"]*)>")
_WS = re.compile(r"[ \t]+")


def _read_iri(line: str, pos: int, lineno: int) -> tuple[Iri, int]:
    m = _IRI_TOKEN.match(line, pos)
    if not m:
        raise ParseError(lineno, f"expected IRI at column {pos + 1}")
    try:
        return Iri(m.group(1)), m.end()
    except ValueError as exc:
        raise ParseError(lineno, str(exc)) from None


def _read_literal(line: str, pos: int, lineno: int) -> tuple[Literal, int]:
    # pos points at the opening quote
    chars = []
    i = pos + 1
    n = len(line)
    while True:
        if i >= n:
            raise ParseError(lineno, "unterminated literal")
        ch = line[i]
        if ch == '"':
            i += 1
            break
        if ch == "\\":
            if i + 1 >= n or line[i + 1] not in _UNESCAPES:
                raise ParseError(lineno, f"bad escape at column {i + 1}")
            chars.append(_UNESCAPES[line[i + 1]])
            i += 2
            continue
        chars.append(ch)
        i += 1
    datatype = None
    if line.startswith("^^", i):
        datatype, i = _read_iri(line, i + 2, lineno)
    return Literal("".join(chars), datatype), i


def _skip_ws(line: str, pos: int, lineno: int, required: bool = True) -> int:
    m = _WS.match(line, pos)
    if not m:
        if required:
            raise ParseError(lineno, f"expected whitespace at column {pos + 1}")
        return pos
    return m.end()


def parse_ntriples(data: Union[bytes, str]) -> Graph:
    """Parse the dialect written by :func:`serialize_ntriples`.

    Blank lines are ignored. The first malformed line raises ParseError.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    g = Graph()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        pos = _skip_ws(line, 0, lineno, required=False)
        s, pos = _read_iri(line, pos, lineno)
        pos = _skip_ws(line, pos, lineno)
        p, pos = _read_iri(line, pos, lineno)
        pos = _skip_ws(line, pos, lineno)
        if line.startswith("<", pos):
            o, pos = _read_iri(line, pos, lineno)
        elif line.startswith('"', pos):
            o, pos = _read_literal(line, pos, lineno)
        else:
            raise ParseError(lineno, f"expected object at column {pos + 1}")
        pos = _skip_ws(line, pos, lineno)
        if line[pos:].rstrip() != ".":
            raise ParseError(lineno, "missing terminal ' .'")
        g.insert(Triple(s, p, o))
    return g

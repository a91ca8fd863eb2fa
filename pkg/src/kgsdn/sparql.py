"""A small SPARQL subset: SELECT [DISTINCT] over basic graph patterns with
``=`` / ``!=`` filters.

Grammar::

    query   := prefix* SELECT DISTINCT? (var+ | '*') WHERE? '{' body '}'
    prefix  := PREFIX pname_ns ':' <iri>
    body    := (pattern '.'? | filter '.'?)*
    pattern := term term term
    filter  := FILTER '(' var ('=' | '!=') (term | var) ')'
    term    := <iri> | prefix:local | "literal" ('^^' iri)? | integer | 'a' | var

``a`` abbreviates rdf:type and bare integers are xsd:integer literals.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union

from kgsdn.errors import QuerySyntaxError, UnknownPrefix
from kgsdn.ontology import RDF_TYPE, XSD, expand
from kgsdn.rdf import Graph, Iri, Literal, Term


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return f"?{self.name}"


Slot = Union[Term, Variable]


class TriplePattern(NamedTuple):
    s: Slot
    p: Slot
    o: Slot

    def variables(self) -> list[Variable]:
        return [x for x in self if type(x) is Variable]


@dataclass(frozen=True)
class Constraint:
    lhs: Variable
    op: str  # "=" or "!="
    rhs: Slot

    def holds(self, binding: dict) -> bool:
        left = binding[self.lhs]
        right = binding[self.rhs] if type(self.rhs) is Variable else self.rhs
        return (left == right) == (self.op == "=")

    def variables(self) -> list[Variable]:
        out = [self.lhs]
        if type(self.rhs) is Variable:
            out.append(self.rhs)
        return out


@dataclass(frozen=True)
class Query:
    patterns: tuple[TriplePattern, ...]
    projection: Optional[tuple[Variable, ...]] = None  # None means '*'
    distinct: bool = False
    filters: tuple[Constraint, ...] = ()
    prefixes: dict = field(default_factory=dict, compare=False)

    def pattern_variables(self) -> list[Variable]:
        seen: dict[Variable, None] = {}
        for tp in self.patterns:
            for v in tp.variables():
                seen.setdefault(v, None)
        return list(seen)

    @property
    def selected(self) -> tuple[Variable, ...]:
        if self.projection is None:
            return tuple(self.pattern_variables())
        return self.projection


@dataclass
class BindingSet:
    variables: tuple[str, ...]
    rows: list[tuple[Term, ...]]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def as_dicts(self) -> list[dict[str, Term]]:
        return [dict(zip(self.variables, row)) for row in self.rows]

    def column(self, name: str) -> list[Term]:
        i = self.variables.index(name)
        return [row[i] for row in self.rows]

    def to_tsv(self) -> str:
        lines = ["\t".join(f"?{v}" for v in self.variables)]
        lines.extend("\t".join(t.n3() for t in row) for row in self.rows)
        return "\n".join(lines) + "\n"


# --- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_\-]+(?:\.[A-Za-z0-9_\-]+)*)?)
  | (?P<number>[+-]?\d+)
  | (?P<word>[A-Za-z]+)
  | (?P<punct>\^\^|!=|[{}().*=])
""", re.VERBOSE)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


class _Tok(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QuerySyntaxError(pos, "a token")
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "word":
                value = value.upper() if value != "a" else value
            toks.append(_Tok(kind, value, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected: str):
        raise QuerySyntaxError(self.tok.pos, expected)

    def is_word(self, word: str) -> bool:
        return self.tok.kind == "word" and self.tok.text == word

    def expect_word(self, word: str):
        if not self.is_word(word):
            self.fail(word)
        self.take()

    def expect_punct(self, p: str):
        if self.tok.kind != "punct" or self.tok.text != p:
            self.fail(repr(p))
        self.take()

    def at_punct(self, p: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == p

    def query(self) -> Query:
        while self.is_word("PREFIX"):
            self.take()
            t = self.take()
            if t.kind != "pname" or not t.text.endswith(":") or t.text.count(":") != 1:
                self.i -= 1
                self.fail("prefix name ending in ':'")
            iri = self.take()
            if iri.kind != "iri":
                self.i -= 1
                self.fail("namespace IRI")
            self.prefixes[t.text[:-1]] = iri.text[1:-1]
        self.expect_word("SELECT")
        distinct = False
        if self.is_word("DISTINCT"):
            self.take()
            distinct = True
        projection: Optional[list[tuple[Variable, int]]] = None
        if self.at_punct("*"):
            self.take()
        else:
            projection = []
            while self.tok.kind == "var":
                t = self.take()
                projection.append((Variable(t.text[1:]), t.pos))
            if not projection:
                self.fail("variable or '*'")
        if self.is_word("WHERE"):
            self.take()
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[tuple[Constraint, int]] = []
        while not self.at_punct("}"):
            if self.tok.kind == "eof":
                self.fail("'}'")
            if self.is_word("FILTER"):
                filters.append(self.filter())
            else:
                patterns.append(TriplePattern(self.slot(), self.slot(), self.slot()))
            if self.at_punct("."):
                self.take()
        self.take()
        if self.tok.kind != "eof":
            self.fail("end of query")

        bound = {v for tp in patterns for v in tp.variables()}
        for var, pos in projection or ():
            if var not in bound:
                raise QuerySyntaxError(pos, f"{var} to occur in a triple pattern")
        for c, pos in filters:
            for var in c.variables():
                if var not in bound:
                    raise QuerySyntaxError(pos, f"{var} to occur in a triple pattern")
        return Query(
            patterns=tuple(patterns),
            projection=None if projection is None else tuple(v for v, _ in projection),
            distinct=distinct,
            filters=tuple(c for c, _ in filters),
            prefixes=dict(self.prefixes),
        )

    def filter(self) -> tuple[Constraint, int]:
        start = self.take().pos
        self.expect_punct("(")
        if self.tok.kind != "var":
            self.fail("variable")
        lhs = Variable(self.take().text[1:])
        if self.at_punct("=") or self.at_punct("!="):
            op = self.take().text
        else:
            self.fail("'=' or '!='")
        rhs = self.slot()
        self.expect_punct(")")
        return Constraint(lhs, op, rhs), start

    def iri(self, t: _Tok) -> Iri:
        if t.kind == "iri":
            try:
                return Iri(t.text[1:-1])
            except ValueError:
                raise QuerySyntaxError(t.pos, "an absolute IRI") from None
        try:
            return expand(t.text, self.prefixes)
        except UnknownPrefix:
            raise
        except ValueError:
            raise QuerySyntaxError(t.pos, "a valid prefixed name") from None

    def slot(self) -> Slot:
        t = self.take()
        if t.kind == "var":
            return Variable(t.text[1:])
        if t.kind in ("iri", "pname"):
            return self.iri(t)
        if t.kind == "word" and t.text == "a":
            return RDF_TYPE
        if t.kind == "number":
            return Literal(str(int(t.text)), XSD.integer)
        if t.kind == "string":
            body = re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)),
                          t.text[1:-1])
            datatype = None
            if self.at_punct("^^"):
                self.take()
                dt = self.take()
                if dt.kind not in ("iri", "pname"):
                    self.i -= 1
                    self.fail("datatype IRI")
                datatype = self.iri(dt)
            return Literal(body, datatype)
        self.i -= 1
        self.fail("a term or variable")


def parse_query(text: str) -> Query:
    return _Parser(text).query()


# --- evaluation --------------------------------------------------------------

def _plan(q: Query, g: Graph, bound: set) -> list[TriplePattern]:
    """Greedy join order: most bound positions first, then smallest bucket."""
    remaining = list(enumerate(q.patterns))
    bound = set(bound)
    order = []
    while remaining:
        def score(item):
            idx, tp = item
            n_bound = sum(1 for x in tp if type(x) is not Variable or x in bound)
            consts = [None if type(x) is Variable else x for x in tp]
            return (-n_bound, g.estimate(*consts), idx)

        best = min(remaining, key=score)
        remaining.remove(best)
        order.append(best[1])
        bound.update(best[1].variables())
    return order


def _solutions(order, filters, g: Graph, binding: dict, depth: int) -> Iterator[dict]:
    if depth == len(order):
        yield binding
        return
    tp = order[depth]
    probe = []
    for x in tp:
        if type(x) is Variable:
            probe.append(binding.get(x))
        else:
            probe.append(x)
    for triple in g.match(*probe):
        ext = binding
        ok = True
        for slot, value in zip(tp, triple):
            if type(slot) is Variable:
                have = ext.get(slot)
                if have is None:
                    if ext is binding:
                        ext = dict(binding)
                    ext[slot] = value
                elif have != value:
                    ok = False
                    break
        if not ok:
            continue
        if any(all(v in ext for v in c.variables()) and not c.holds(ext)
               for c in filters):
            continue
        yield from _solutions(order, filters, g, ext, depth + 1)


def _row_key(row):
    return tuple(t.sort_key() for t in row)


def evaluate(q: Query, g: Graph, initial: Optional[dict] = None) -> BindingSet:
    """Evaluate ``q`` over ``g`` with standard BGP semantics.

    ``initial`` pre-binds variables (keys may be Variable or str) and acts
    like extra constants in the patterns.
    """
    start: dict = {}
    for k, v in (initial or {}).items():
        start[k if type(k) is Variable else Variable(k)] = v
    if any(all(v in start for v in c.variables()) and not c.holds(start)
           for c in q.filters):
        return BindingSet(tuple(v.name for v in q.selected), [])
    order = _plan(q, g, set(start))
    selected = q.selected
    rows = [tuple(b[v] for v in selected)
            for b in _solutions(order, q.filters, g, start, 0)]
    if q.distinct:
        rows = list(set(rows))
    rows.sort(key=_row_key)
    return BindingSet(tuple(v.name for v in selected), rows)


def query(g: Graph, text: str, **initial) -> BindingSet:
    """Parse and evaluate in one call; keyword arguments pre-bind variables."""
    return evaluate(parse_query(text), g, initial)

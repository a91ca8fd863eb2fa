"""Timing harness for knowledge-graph generation, API calls and store lookups.

All durations are medians. Results go to CSV with a fixed column set.
"""
from __future__ import annotations

import csv
import gc
import io
import random
import statistics
import time
from dataclasses import astuple, dataclass, fields
from typing import Callable, Iterable, Optional, Sequence

from kgsdn.api import ManagementAPI
from kgsdn.kg import snapshot
from kgsdn.netsim.io import network_from_dict, network_to_dict
from kgsdn.netsim.topology import TopoSpec, build_topology
from kgsdn.ontology import EX, XSD
from kgsdn.rdf import Graph, Iri, Literal, Triple, serialize_ntriples, triple_key

MIN_REPS = 5
CSV_COLUMNS = ("experiment", "shape", "node_count", "triple_count", "duration_ns", "repetitions")


@dataclass(frozen=True)
class BenchRecord:
    experiment: str
    shape: str
    node_count: int
    triple_count: int
    duration_ns: int
    repetitions: int


def _check_reps(reps: int) -> None:
    if reps < MIN_REPS:
        raise ValueError(f"reps must be >= {MIN_REPS}, got {reps}")


def _timed(fn: Callable[[], object]) -> int:
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter_ns()
        fn()
        return time.perf_counter_ns() - start
    finally:
        if gc_was_enabled:
            gc.enable()


def _median_ns(samples: Sequence[int]) -> int:
    return int(statistics.median(samples))


def bench_kg_generation(specs: Iterable[TopoSpec], reps: int = MIN_REPS) -> list[BenchRecord]:
    """Time snapshot + N-Triples serialization per topology."""
    _check_reps(reps)
    records = []
    for spec in specs:
        net = build_topology(spec)
        sink = io.BytesIO()
        counts = []

        def run():
            snap = snapshot(net)
            sink.seek(0)
            sink.truncate()
            sink.write(serialize_ntriples(snap.graph))
            counts.append(snap.triple_count)

        samples = [_timed(run) for _ in range(reps)]
        records.append(BenchRecord("kg_generation", spec.describe(), len(net.nodes),
                                   counts[-1], _median_ns(samples), reps))
    return records


def bench_api(op: str, specs: Iterable[TopoSpec], reps: int = MIN_REPS,
              hosts: Optional[Sequence[str]] = None) -> list[BenchRecord]:
    """Time one management call per topology, snapshot pre-built.

    ``connect_all`` uses the first two hosts (or ``hosts``). ``build_firewall``
    runs on a fully connected network, between the first and last switch,
    allowing the first and last host.
    """
    if op not in ("connect_all", "build_firewall"):
        raise ValueError(f"unsupported operation {op!r}")
    _check_reps(reps)
    records = []
    for spec in specs:
        base = build_topology(spec)
        prep = ManagementAPI(base)
        all_hosts = prep.view().hosts()
        switches = prep.view().switches()
        if op == "build_firewall":
            if len(switches) < 2:
                raise ValueError(f"{spec.describe()}: a firewall needs two switches")
            prep.connect_all()
        doc = network_to_dict(base)
        samples = []
        triple_count = 0
        for _ in range(reps):
            api = ManagementAPI(network_from_dict(doc))
            triple_count = api.refresh().triple_count
            if op == "connect_all":
                chosen = list(hosts) if hosts else all_hosts[:2]
                samples.append(_timed(lambda: api.connect_all(chosen)))
            else:
                pair = [switches[0], switches[-1]]
                allow = [all_hosts[0], all_hosts[-1]]
                samples.append(_timed(lambda: api.build_firewall(pair, allow)))
        records.append(BenchRecord(op, spec.describe(), len(base.nodes), triple_count,
                                   _median_ns(samples), reps))
    return records


class ScanBaselineStore:
    """Flat triple list answered by full scans, the list-database stand-in.

    Terms are dictionary-encoded to integers and each triple carries one
    packed integer key per probe shape, so a probe is a C-level pass
    (``list.index``) over a list of ints. Every probe still walks all n
    entries; nothing maps keys to positions.
    """

    _BITS = 21

    def __init__(self, triples: Iterable[Triple] = ()):
        self.triples: list[Triple] = []
        self._ids: dict = {}
        self._columns: dict[str, list[int]] = {shape: [] for shape in ("s", "p", "o", "sp", "po", "spo")}
        seen = set()
        for t in triples:
            if t in seen:
                continue
            seen.add(t)
            s, p, o = (self._ids.setdefault(x, len(self._ids)) for x in t)
            if len(self._ids) >= 1 << self._BITS:
                raise ValueError("too many distinct terms for the packed key width")
            self.triples.append(t)
            for shape, key in self._keys(s, p, o).items():
                self._columns[shape].append(key)

    def _keys(self, s, p, o) -> dict[str, int]:
        b = self._BITS
        return {"s": s, "p": p, "o": o, "sp": (s << b) | p, "po": (p << b) | o,
                "spo": (s << 2 * b) | (p << b) | o}

    def __len__(self):
        return len(self.triples)

    def match(self, s=None, p=None, o=None) -> list[Triple]:
        ids = self._ids
        key = []
        for term in (s, p, o):
            if term is None:
                key.append(None)
            elif term in ids:
                key.append(ids[term])
            else:
                return []
        ks, kp, ko = key
        shape = "".join(c for c, k in zip("spo", key) if k is not None)
        if not shape:
            return sorted(self.triples, key=triple_key)
        filter_object = shape == "so"
        if filter_object:
            shape = "s"
        probe = self._keys(ks or 0, kp or 0, ko or 0)[shape]
        column = self._columns[shape]
        found = []
        i = -1
        try:
            while True:
                i = column.index(probe, i + 1)
                found.append(self.triples[i])
        except ValueError:
            pass
        if filter_object:
            found = [t for t in found if t.object == o]
        return sorted(found, key=triple_key)


def synthetic_graph_triples(size: int, seed: int = 0) -> list[Triple]:
    """``size`` distinct triples whose index buckets stay small at every size.

    About ten triples per subject, ten predicates, and an object pool that
    grows with the store.
    """
    rng = random.Random(seed)
    n_subjects = max(1, size // 10)
    n_objects = max(2, size // 5)
    base = EX.base
    preds = [Iri(f"{base}p{i}") for i in range(10)]
    out: set[Triple] = set()
    while len(out) < size:
        s = Iri(f"{base}r{rng.randrange(n_subjects)}")
        p = preds[rng.randrange(10)]
        j = rng.randrange(n_objects)
        o = Iri(f"{base}o{j}") if j % 2 else Literal(str(j), XSD.integer)
        out.add(Triple(s, p, o))
    return sorted(out, key=triple_key)


# bound shapes whose result size does not grow with the store
PROBE_SHAPES = ("spo", "sp", "s", "po")


def make_probes(triples: Sequence[Triple], count: int, seed: int = 1) -> list[tuple]:
    rng = random.Random(seed)
    probes = []
    for _ in range(count):
        s, p, o = triples[rng.randrange(len(triples))]
        shape = PROBE_SHAPES[rng.randrange(len(PROBE_SHAPES))]
        probes.append((s if "s" in shape else None, p if "p" in shape else None,
                       o if "o" in shape else None))
    return probes


def _probe_latency(match, probes) -> tuple[int, list]:
    """Median single-probe latency over one pass, plus the results."""
    results = []
    samples = []
    clock = time.perf_counter_ns
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for s, p, o in probes:
            t0 = clock()
            r = match(s, p, o)
            samples.append(clock() - t0)
            results.append(r)
    finally:
        if gc_was_enabled:
            gc.enable()
    return _median_ns(samples), results


def bench_lookup(sizes: Sequence[int], probes: int = 10_000, reps: int = MIN_REPS,
                 seed: int = 0) -> tuple[list[BenchRecord], list[BenchRecord]]:
    """Indexed Graph vs ScanBaselineStore on identical probe workloads.

    Each repetition times every probe individually; its value is the median
    probe latency, and the record holds the median over repetitions. Results
    of the two stores are compared on the first pass and any difference
    raises AssertionError before anything is recorded.
    """
    _check_reps(reps)
    if probes < 1000:
        raise ValueError("need at least 1000 probes")
    indexed, scanned = [], []
    for size in sizes:
        triples = synthetic_graph_triples(size, seed)
        graph = Graph(triples)
        scan = ScanBaselineStore(triples)
        workload = make_probes(triples, probes, seed + 1)
        for store, out, name in ((graph, indexed, "lookup_indexed"),
                                 (scan, scanned, "lookup_scan")):
            samples = []
            for rep in range(reps):
                latency, results = _probe_latency(store.match, workload)
                samples.append(latency)
                if rep == 0:
                    if store is graph:
                        reference = results
                    elif results != reference:
                        raise AssertionError(f"stores disagree at size {size}")
                del results
            out.append(BenchRecord(name, f"synthetic({size})", 0, len(store),
                                   _median_ns(samples), reps))
    return indexed, scanned


def sort_records(records: Iterable[BenchRecord]) -> list[BenchRecord]:
    return sorted(records, key=lambda r: (r.experiment, r.node_count, r.triple_count, r.shape))


def write_csv(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in sort_records(records):
            w.writerow(astuple(r))


def read_csv(path) -> list[BenchRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    types = {f.name: f.type for f in fields(BenchRecord)}
    return [BenchRecord(**{k: (int(v) if types[k] in (int, "int") else v)
                           for k, v in row.items()}) for row in rows]


def linear_fit_r2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line through (xs, ys)."""
    slope, intercept = statistics.linear_regression(xs, ys)
    mean_y = statistics.fmean(ys)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    return 1.0 - ss_res / ss_tot if ss_tot else 1.0


# desk-scale defaults for the CLI
KG_SPECS = tuple(TopoSpec.single(k) for k in (10, 50, 100, 200, 400, 800))
API_SPECS = {
    "connect_all": tuple(TopoSpec.tree(d, 2) for d in range(1, 8)),
    "build_firewall": tuple(TopoSpec.linear(n) for n in (2, 4, 8, 16, 32, 64)),
}
LOOKUP_SIZES = (1_000, 10_000, 100_000)

import csv

import pytest

from kgsdn import bench
from kgsdn.netsim import TopoSpec
from kgsdn.rdf import Graph

import oracles


def test_rejects_too_few_reps():
    with pytest.raises(ValueError):
        bench.bench_kg_generation([TopoSpec.single(2)], reps=1)
    with pytest.raises(ValueError):
        bench.bench_api("connect_all", [TopoSpec.single(2)], reps=4)
    with pytest.raises(ValueError):
        bench.bench_lookup([1000], reps=1)


def test_empty_spec_list():
    assert bench.bench_kg_generation([], reps=5) == []
    assert bench.bench_api("connect_all", [], reps=5) == []


def test_kg_record_counts():
    (rec,) = bench.bench_kg_generation([TopoSpec.single(5)], reps=5)
    assert rec.experiment == "kg_generation"
    assert rec.shape == "single(5)"
    assert rec.node_count == 6
    assert rec.triple_count == oracles.schema_triple_count("single", k=5)
    assert rec.duration_ns > 0 and rec.repetitions == 5


def test_api_records():
    (rec,) = bench.bench_api("build_firewall", [TopoSpec.linear(4)], reps=5)
    assert rec.experiment == "build_firewall" and rec.node_count == 8
    # the firewall runs on a connected network, so flow triples are counted
    assert rec.triple_count > oracles.schema_triple_count("linear", n=4)


def test_unknown_api_op():
    with pytest.raises(ValueError):
        bench.bench_api("dump_all_flows", [TopoSpec.single(2)])


def test_scan_store_matches_graph():
    triples = bench.synthetic_graph_triples(2000, seed=3)
    assert len(set(triples)) == 2000
    g = Graph(triples)
    scan = bench.ScanBaselineStore(triples + triples[:10])
    assert len(scan) == 2000
    for s, p, o in bench.make_probes(triples, 300, seed=4):
        assert scan.match(s, p, o) == g.match(s, p, o) == oracles.scan_match(triples, s, p, o)
    s, p, o = triples[0]
    assert scan.match(s, None, o) == g.match(s, None, o)
    assert scan.match() == g.match()


def test_lookup_needs_enough_probes():
    with pytest.raises(ValueError):
        bench.bench_lookup([1000], probes=10, reps=5)


def test_lookup_small_run():
    indexed, scanned = bench.bench_lookup([1000, 2000], probes=1000, reps=5)
    assert [r.shape for r in indexed] == ["synthetic(1000)", "synthetic(2000)"]
    assert [r.experiment for r in scanned] == ["lookup_scan"] * 2
    assert [r.triple_count for r in scanned] == [1000, 2000]


def test_csv_schema(tmp_path):
    records = bench.bench_kg_generation([TopoSpec.single(20), TopoSpec.single(3)], reps=5)
    records += bench.bench_api("connect_all", [TopoSpec.tree(1, 2)], reps=5)
    out = tmp_path / "bench.csv"
    bench.write_csv(records, out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["experiment", "shape", "node_count", "triple_count", "duration_ns", "repetitions"]
    keys = [(r[0], int(r[2])) for r in rows[1:]]
    assert keys == sorted(keys)
    assert bench.read_csv(out) == bench.sort_records(records)


def test_r2_of_exact_line():
    assert bench.linear_fit_r2([1, 2, 3, 4], [3, 5, 7, 9]) == pytest.approx(1.0)
    assert bench.linear_fit_r2([1, 2, 3, 4], [1, 4, 1, 4]) < 0.5

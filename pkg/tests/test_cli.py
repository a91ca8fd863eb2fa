import io
import json

import pytest

from kgsdn.cli import build_parser, main
from kgsdn.kg import DEFAULT_INTERVAL
from kgsdn.netsim import TopoSpec, build_topology
from kgsdn.netsim.io import load_network


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def session(tmp_path):
    path = str(tmp_path / "net.json")
    assert run("topo", "create", "--shape", "single", "--k", "2", "--out", path)[0] == 0
    return path


def test_topo_create_shapes(tmp_path):
    for argv, spec in ((["--shape", "linear", "--n", "3"], TopoSpec.linear(3)),
                       (["--shape", "tree", "--depth", "2", "--fanout", "3"], TopoSpec.tree(2, 3)),
                       (["--shape", "single", "--k", "4", "--wifi"], TopoSpec.single(4, kind="wifi"))):
        path = tmp_path / "t.json"
        assert run("topo", "create", *argv, "--out", str(path))[0] == 0
        assert load_network(path) == build_topology(spec)
        assert json.loads(path.read_text())["shape"] == spec.shape


def test_invalid_spec_exit_2(tmp_path):
    code, _, err = run("topo", "create", "--shape", "single", "--k", "0", "--out", str(tmp_path / "x"))
    assert code == 2
    assert err.startswith("InvalidSpec")
    assert len(err.strip().splitlines()) == 1


def test_missing_shape_parameter(tmp_path):
    code, _, err = run("topo", "create", "--shape", "tree", "--depth", "2", "--out", str(tmp_path / "x"))
    assert code == 2 and "--fanout" in err


def test_usage_errors():
    assert run()[0] == 2
    assert run("api", "dump-flows")[0] == 2
    assert run("nonsense")[0] == 2


def test_domain_error_exit_1(session):
    code, out, err = run("api", "dump-flows", "--session", session, "--switch", "s9")
    assert code == 1 and out == ""
    assert err == "NoSuchSwitch: s9\n"
    code, _, err = run("api", "add-flow", "--session", session, "--switch", "s1")
    assert code == 1 and err.startswith("MissingToPort:")


def test_missing_session_file(tmp_path):
    code, _, err = run("api", "dump-flows", "--session", str(tmp_path / "nope.json"), "--switch", "s1")
    assert code == 1 and len(err.splitlines()) == 1


def test_watch_default_interval():
    args = build_parser().parse_args(["kg", "snapshot", "--topo", "a", "--out", "b", "--watch"])
    assert args.interval == DEFAULT_INTERVAL == 5.0


def test_mutations_persist(session):
    assert run("api", "connect-all", "--session", session)[1] == "installed 3 flow entries\n"
    assert len(load_network(session).flows("s1")) == 3
    assert run("api", "delete-flow", "--session", session, "--in-hosts", "h1", "--out-hosts", "h2")[1] \
        == "removed 1 flow entries\n"
    assert len(load_network(session).flows("s1")) == 2
    assert run("api", "add-arp-flow", "--session", session, "--switch", "s1")[1] == "already present\n"


def test_add_flow_output(session):
    code, out, _ = run("api", "add-flow", "--session", session, "--switch", "s1",
                       "--dst", "00:00:00:00:00:02", "--in-port", "1", "--to-port", "2")
    assert code == 0
    assert out == "cookie=0, table=0, priority=1, match={in_port=1, dl_dst=00:00:00:00:00:02}, action=output:2\n"


def test_firewall_one_liner(tmp_path):
    path = str(tmp_path / "l.json")
    run("topo", "create", "--shape", "linear", "--n", "3", "--out", path)
    run("api", "connect-all", "--session", path)
    code, out, _ = run("api", "firewall", "--session", path, "--switches", "s1,s3", "--allow", "h1,h3")
    assert code == 0 and out.startswith("installed ")
    drops = [e for e in load_network(path).flows("s2") if e.priority == 10]
    assert drops


def test_snapshot_and_query(session, tmp_path):
    nt = tmp_path / "n.nt"
    code, out, _ = run("kg", "snapshot", "--topo", session, "--out", str(nt))
    assert code == 0 and out == f"wrote 31 triples to {nt}\n"
    code, out, _ = run("query", "--kg", str(nt), "--text",
                       "SELECT ?h ?mac WHERE { ?h a net:Host . ?h net:hasMAC ?mac }")
    assert out == ('?h\t?mac\n'
                   '<http://example.org/h1>\t"00:00:00:00:00:01"\n'
                   '<http://example.org/h2>\t"00:00:00:00:00:02"\n')
    code, _, err = run("query", "--kg", str(nt), "--text", "SELECT ?x WHERE {")
    assert code == 1 and err.startswith("QuerySyntaxError:")


def test_watch_writes_snapshots(session, tmp_path):
    nt = tmp_path / "w.nt"
    code, out, _ = run("kg", "snapshot", "--topo", session, "--out", str(nt),
                       "--watch", "--interval", "0.05", "--ticks", "2")
    assert code == 0
    assert out.count("wrote 31 triples") == 2
    assert nt.read_bytes().count(b"\n") == 31


def test_bench_kg_csv(tmp_path):
    out = tmp_path / "b.csv"
    code, text, _ = run("bench", "kg", "--out", str(out))
    assert code == 0
    assert out.read_text().splitlines()[0] == "experiment,shape,node_count,triple_count,duration_ns,repetitions"
    assert len(out.read_text().splitlines()) == 7


def test_bench_rejects_low_reps(tmp_path):
    code, _, err = run("bench", "kg", "--out", str(tmp_path / "b.csv"), "--reps", "1")
    assert code == 1 and "reps" in err

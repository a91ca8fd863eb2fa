"""Command-line entry point: one invocation per management task.

Networks persist between invocations in a JSON session file; see
docs/session.md.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
import threading
from pathlib import Path

from kgsdn import bench
from kgsdn.api import ManagementAPI, render_flows
from kgsdn.errors import InvalidSpec, KgsdnError
from kgsdn.kg import DEFAULT_INTERVAL, run_periodic, snapshot
from kgsdn.netsim.io import load_network, save_network
from kgsdn.netsim.topology import TopoSpec, build_topology
from kgsdn.rdf import parse_ntriples, serialize_ntriples
from kgsdn.sparql import evaluate, parse_query

log = logging.getLogger("kgsdn")


class UsageError(Exception):
    pass


def _csv(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- topo --------------------------------------------------------------------

def cmd_topo_create(args, out):
    if args.shape == "single":
        spec = TopoSpec.single(args.k)
    elif args.shape == "linear":
        spec = TopoSpec.linear(args.n)
    else:
        spec = TopoSpec.tree(args.depth, args.fanout)
    if args.wifi:
        spec = TopoSpec(spec.shape, spec.k, spec.n, spec.depth, spec.fanout, kind="wifi")
    net = build_topology(spec)
    save_network(net, args.out, spec)
    print(f"wrote {args.out}: {spec.describe()}, {len(net.nodes)} nodes, "
          f"{len(net.links)} links", file=out)


# --- kg ----------------------------------------------------------------------

def cmd_kg_snapshot(args, out):
    if not args.watch:
        snap = snapshot(load_network(args.topo))
        _atomic_write(args.out, serialize_ntriples(snap.graph))
        print(f"wrote {snap.triple_count} triples to {args.out}", file=out)
        return
    done = threading.Event()

    def publish(snap):
        _atomic_write(args.out, serialize_ntriples(snap.graph))
        print(f"wrote {snap.triple_count} triples to {args.out}", file=out, flush=True)
        if args.ticks and handle.published >= args.ticks:
            done.set()

    handle = run_periodic(lambda: load_network(args.topo), args.interval, publish)
    try:
        done.wait()
    except KeyboardInterrupt:
        pass
    finally:
        handle.stop()


# --- query -------------------------------------------------------------------

def cmd_query(args, out):
    if (args.file is None) == (args.text is None):
        raise UsageError("give exactly one of --file or --text")
    text = Path(args.file).read_text(encoding="utf-8") if args.file else args.text
    graph = parse_ntriples(Path(args.kg).read_bytes())
    out.write(evaluate(parse_query(text), graph).to_tsv())


# --- api ---------------------------------------------------------------------

def _session(args) -> ManagementAPI:
    return ManagementAPI(load_network(args.session))


def _save(args, api: ManagementAPI) -> None:
    save_network(api.net, args.session)


def cmd_add_flow(args, out):
    api = _session(args)
    entry = api.add_flow(args.switch, dst=args.dst, in_port=args.in_port,
                         action_type=args.action, to_port=args.to_port)
    _save(args, api)
    print(render_flows([entry])[0], file=out)


def cmd_delete_flow(args, out):
    api = _session(args)
    removed = api.delete_flow(_csv(args.in_hosts), _csv(args.out_hosts))
    _save(args, api)
    print(f"removed {removed} flow entries", file=out)


def cmd_add_arp_flow(args, out):
    api = _session(args)
    installed = api.add_arp_flow(args.switch)
    _save(args, api)
    print("installed" if installed else "already present", file=out)


def cmd_dump_flows(args, out):
    for line in _session(args).dump_all_flows(args.switch):
        print(line, file=out)


def cmd_connect_all(args, out):
    api = _session(args)
    installed = api.connect_all(_csv(args.hosts) if args.hosts else None)
    _save(args, api)
    print(f"installed {installed} flow entries", file=out)


def cmd_firewall(args, out):
    api = _session(args)
    installed = api.build_firewall(_csv(args.switches), _csv(args.allow or ""))
    _save(args, api)
    print(f"installed {installed} drop entries", file=out)


def cmd_find_path(args, out):
    print(_session(args).find_path(_csv(args.hosts)), file=out)


# --- bench -------------------------------------------------------------------

def cmd_bench(args, out):
    if args.experiment == "kg":
        records = bench.bench_kg_generation(bench.KG_SPECS, args.reps)
    elif args.experiment == "api":
        records = bench.bench_api(args.op, bench.API_SPECS[args.op], args.reps)
    else:
        indexed, scanned = bench.bench_lookup(bench.LOOKUP_SIZES, args.probes, args.reps)
        records = indexed + scanned
    bench.write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}", file=out)


# --- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kgsdn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    topo = sub.add_parser("topo", help="topology files").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    create = topo.add_parser("create", help="generate a topology")
    create.add_argument("--shape", choices=("single", "linear", "tree"), required=True)
    create.add_argument("--k", type=int)
    create.add_argument("--n", type=int)
    create.add_argument("--depth", type=int)
    create.add_argument("--fanout", type=int)
    create.add_argument("--wifi", action="store_true", help="access points and stations")
    create.add_argument("--out", required=True)
    create.set_defaults(func=cmd_topo_create)

    kg = sub.add_parser("kg", help="knowledge graph").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    snap = kg.add_parser("snapshot", help="write the knowledge graph as N-Triples")
    snap.add_argument("--topo", required=True, help="topology or session file")
    snap.add_argument("--out", required=True)
    snap.add_argument("--watch", action="store_true", help="refresh periodically")
    snap.add_argument("--interval", type=float, default=DEFAULT_INTERVAL)
    snap.add_argument("--ticks", type=int, default=0,
                      help="with --watch, stop after this many snapshots (0: run forever)")
    snap.set_defaults(func=cmd_kg_snapshot)

    q = sub.add_parser("query", help="run a SELECT query over an .nt file")
    q.add_argument("--kg", required=True)
    q.add_argument("--file")
    q.add_argument("--text")
    q.set_defaults(func=cmd_query)

    api = sub.add_parser("api", help="management operations").add_subparsers(
        dest="action", required=True, parser_class=_Parser)

    def op(name, func, help):
        sp = api.add_parser(name, help=help)
        sp.add_argument("--session", required=True)
        sp.set_defaults(func=func)
        return sp

    sp = op("add-flow", cmd_add_flow, "add a flow entry to a switch")
    sp.add_argument("--switch", required=True)
    sp.add_argument("--dst")
    sp.add_argument("--in-port", type=int)
    sp.add_argument("--action", choices=("output", "drop", "flood"), default="output")
    sp.add_argument("--to-port", type=int)
    sp = op("delete-flow", cmd_delete_flow, "delete flows between host lists")
    sp.add_argument("--in-hosts", required=True)
    sp.add_argument("--out-hosts", required=True)
    sp = op("add-arp-flow", cmd_add_arp_flow, "add an ARP flood entry if needed")
    sp.add_argument("--switch", required=True)
    sp = op("dump-flows", cmd_dump_flows, "list a switch's flow entries")
    sp.add_argument("--switch", required=True)
    sp = op("connect-all", cmd_connect_all, "connect hosts pairwise")
    sp.add_argument("--hosts", help="comma-separated; default all hosts")
    sp = op("firewall", cmd_firewall, "firewall between switches")
    sp.add_argument("--switches", required=True)
    sp.add_argument("--allow", help="hosts that stay connected")
    sp = op("find-path", cmd_find_path, "shortest path between two hosts")
    sp.add_argument("--hosts", required=True)

    b = sub.add_parser("bench", help="benchmarks")
    b.add_argument("experiment", choices=("kg", "api", "lookup"))
    b.add_argument("--out", required=True)
    b.add_argument("--reps", type=int, default=bench.MIN_REPS)
    b.add_argument("--op", choices=("connect_all", "build_firewall"), default="connect_all")
    b.add_argument("--probes", type=int, default=10_000)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        if args.command == "topo" and args.shape is not None:
            needed = {"single": ("k",), "linear": ("n",), "tree": ("depth", "fanout")}[args.shape]
            missing = [f"--{n}" for n in needed if getattr(args, n) is None]
            if missing:
                raise UsageError(f"--shape {args.shape} needs {' '.join(missing)}")
        args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return 2
    except InvalidSpec as exc:
        print(f"InvalidSpec: {exc}", file=err)
        return 2
    except KgsdnError as exc:
        print(f"{exc.name}: {exc}", file=err)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command surface: validate, route add, run, bench, trace.

Exit codes, one per error path:

    0  success
    1  run finished but packets were dropped
    2  command-line usage error (argparse)
    3  config parse error (missing/unreadable/unstructured file)
    4  config or route validation error
    5  pipeline contract error while running (misconfiguration)
    6  output I/O error
    7  bench could not fit a regression (insufficient no-loss points)

Normal output goes to stdout; structured error objects go to stderr as
single-line JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from srv6sfc import errors
from srv6sfc.bench import (
    SCENARIO_AWARE,
    SCENARIO_UNAWARE,
    CapacityModel,
    format_regression_table,
    points_csv,
    regression_csv,
    run_sweep,
)
from srv6sfc.chain import ClassifierRule, SidKind, classify
from srv6sfc.config import ScenarioConfig, load_config, render_config, route_add
from srv6sfc.dataplane import encapsulate
from srv6sfc.sim import NodeRole, flow_payload, inject
from srv6sfc.wire import hexdump, serialize_packet, udp_packet
from ipaddress import IPv6Address

EXIT_OK = 0
EXIT_DROPPED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CONTRACT = 5
EXIT_IO = 6
EXIT_BENCH = 7

SCENARIOS = {
    "aware": (SCENARIO_AWARE, SidKind.SR_AWARE),
    "unaware": (SCENARIO_UNAWARE, SidKind.SR_UNAWARE),
}


def _error(kind: str, detail) -> None:
    print(json.dumps({"error": kind, "detail": detail}), file=sys.stderr)


def _default_ingress(config: ScenarioConfig) -> str:
    if config.bench.flow_ingress is not None:
        return config.bench.flow_ingress
    for node in config.nodes:
        if node.role is NodeRole.INGRESS_EDGE:
            return node.node_id
    return config.nodes[0].node_id


def cmd_validate(args) -> int:
    config = load_config(args.config)
    print(
        f"config OK: {len(config.nodes)} nodes, {len(config.links)} links, "
        f"{len(config.sids)} sids, {len(config.chains)} chains, "
        f"{len(config.rules)} rules"
    )
    return EXIT_OK


def cmd_route(args) -> int:
    tokens = list(args.tokens)
    shape = "route add PREFIX via NEXTHOP encap seg SID[,SID...]"
    if (
        len(tokens) != 7
        or tokens[0] != "add"
        or tokens[2] != "via"
        or tokens[4] != "encap"
        or tokens[5] != "seg"
    ):
        _error("UsageError", f"expected: {shape}")
        return EXIT_USAGE
    config = load_config(args.config)
    updated = route_add(
        config,
        tokens[1],
        tokens[3],
        [s for s in tokens[6].split(",") if s],
        node_id=args.node,
        chain_id=args.chain_id,
    )
    text = render_config(updated)
    if args.in_place:
        Path(args.config).write_text(text, encoding="utf-8")
        print(f"updated {args.config}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    network = config.build_network()
    ingress = args.ingress or _default_ingress(config)
    src = IPv6Address(args.src)
    dst = IPv6Address(args.dst)
    terminal_only = args.trace == "terminal"

    delivered = 0
    dropped = 0
    drop_reasons: dict[str, int] = {}
    for i in range(args.count):
        inner = udp_packet(
            src,
            dst,
            flow_payload(i, args.payload_bytes),
            src_port=args.sport,
            dst_port=args.dport,
        )
        result = inject(network, ingress, inner, terminal_only=terminal_only)
        jsonl = result.trace.to_jsonl()
        if jsonl:
            print(jsonl)
        if result.delivered:
            delivered += 1
        else:
            dropped += 1
            reason = result.outcome.reason
            drop_reasons[reason] = drop_reasons.get(reason, 0) + 1

    ledgers = {}
    for node_id in sorted(network.ledgers):
        ledger = network.ledgers[node_id]
        f, d, e = ledger.counts()
        if (f, d, e) != (0, 0, 0):
            ledgers[node_id] = {"f": f, "d": d, "e": e, "cost_units": ledger.total_cost()}
    print(
        json.dumps(
            {
                "summary": {
                    "count": args.count,
                    "delivered": delivered,
                    "dropped": dropped,
                    "status": "ok" if dropped == 0 else "dropped",
                    "drop_reasons": dict(sorted(drop_reasons.items())),
                    "ledgers": ledgers,
                }
            }
        )
    )
    return EXIT_OK if dropped == 0 else EXIT_DROPPED


def cmd_bench(args) -> int:
    config = load_config(args.config)
    bench = config.bench
    names = ["aware", "unaware"] if args.scenario == "both" else [args.scenario]
    rates = (
        [float(r) for r in args.rates.split(",") if r] if args.rates else list(bench.rates)
    )
    runs = args.runs if args.runs is not None else bench.runs
    noise = args.noise if args.noise is not None else bench.noise
    seed = args.seed if args.seed is not None else bench.seed

    reports = []
    for name in names:
        label, kind = SCENARIOS[name]
        model = bench.model_for(name)
        if args.capacity is not None:
            model = CapacityModel(args.capacity, args.k0 if args.k0 is not None else 0.0)
        if model is None:
            _error("ValidationError", f"no capacity model for scenario {name!r}")
            return EXIT_VALIDATION
        network = config.build_network(kind_override=kind)
        reports.append(
            run_sweep(
                network,
                config.flow(),
                model,
                scenario=label,
                rates=rates,
                runs=runs,
                noise_pct=noise,
                seed=seed,
            )
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "points.csv").write_text(points_csv(reports), encoding="utf-8")
    (out_dir / "regression.csv").write_text(regression_csv(reports), encoding="utf-8")
    print(format_regression_table(reports))
    print(f"wrote {out_dir / 'points.csv'} and {out_dir / 'regression.csv'}", file=sys.stderr)

    refused = [r for r in reports if r.regression is None]
    if refused:
        for report in refused:
            _error(
                "InsufficientPoints",
                f"{report.scenario}: regression refused ({report.regression_error}); "
                f"need at least 2 distinct no-loss rates",
            )
        return EXIT_BENCH
    return EXIT_OK


def cmd_trace(args) -> int:
    config = load_config(args.config)
    ingress = args.ingress or _default_ingress(config)
    inner = udp_packet(
        IPv6Address(args.src),
        IPv6Address(args.dst),
        flow_payload(0, args.payload_bytes),
        src_port=args.sport,
        dst_port=args.dport,
    )
    registry = config.build_registry()
    rules = [
        ClassifierRule(r.network, r.chain_id) for r in config.rules if r.node_id == ingress
    ]
    chain_id = classify(rules, inner.header.dst)
    packet = inner
    if chain_id is not None:
        packet = encapsulate(inner, registry.chain(chain_id))
    print(hexdump(serialize_packet(packet)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srv6sfc",
        description="SRv6 service-chaining simulator and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and cross-check a scenario config")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser(
        "route", help="route add PREFIX via NEXTHOP encap seg SID[,SID...]"
    )
    p.add_argument("tokens", nargs="+")
    p.add_argument("--config", required=True)
    p.add_argument("--node", help="node to install on (default: first ingress edge)")
    p.add_argument("--chain-id", help="chain id (default: derived from the prefix)")
    p.add_argument("--in-place", action="store_true", help="rewrite the config file")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("run", help="inject packets and print trace + ledger summary")
    p.add_argument("config")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--ingress")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--payload-bytes", type=int, default=1024)
    p.add_argument("--sport", type=int, default=40000)
    p.add_argument("--dport", type=int, default=5201)
    p.add_argument("--trace", choices=("full", "terminal"), default="full")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="rate sweep, region labels, regression CSVs")
    p.add_argument("config")
    p.add_argument("--scenario", choices=("aware", "unaware", "both"), default="both")
    p.add_argument("--rates", help="comma-separated pps list (default from config)")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float, help="percent jitter on utilization")
    p.add_argument("--capacity", type=float, help="override capacity model")
    p.add_argument("--k0", type=float, help="baseline overhead for --capacity")
    p.add_argument("--out", default="bench-out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("trace", help="hex-dump the packet as encapsulated at ingress")
    p.add_argument("config")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--ingress")
    p.add_argument("--payload-bytes", type=int, default=8)
    p.add_argument("--sport", type=int, default=40000)
    p.add_argument("--dport", type=int, default=5201)
    p.set_defaults(func=cmd_trace)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.ParseError as exc:
        _error("ParseError", str(exc))
        return EXIT_PARSE
    except errors.ValidationError as exc:
        _error("ValidationError", exc.problems)
        return EXIT_VALIDATION
    except (errors.BadPrefix, errors.UnknownSegment) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_VALIDATION
    except errors.BenchError as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_BENCH
    except errors.SfcError as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_CONTRACT
    except OSError as exc:
        _error("IOError", str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

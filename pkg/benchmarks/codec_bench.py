#!/usr/bin/env python3
"""Compare the compiled wire codec against the pure-Python fallback.

Times parse, serialize, a full round trip, and the end-to-end testbed
walk per backend. The walk path calls through ``srv6sfc.wire`` module
attributes, so swapping the backend swaps the whole pipeline's codec.

    python benchmarks/codec_bench.py [--seconds 0.5] [--payload 1024]
"""

from __future__ import annotations

import argparse
import sys
import time
from ipaddress import IPv6Address
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import SINK, SRC, chain_testbed  # noqa: E402
from srv6sfc import wire  # noqa: E402
from srv6sfc.sim import inject  # noqa: E402
from srv6sfc.wire import udp_packet  # noqa: E402


def rate(fn, seconds: float) -> float:
    """Calls per second over roughly ``seconds`` of wall time."""
    count = 0
    started = time.perf_counter()
    deadline = started + seconds
    while time.perf_counter() < deadline:
        for _ in range(200):
            fn()
        count += 200
    return count / (time.perf_counter() - started)


def build_sample(payload_size: int):
    from srv6sfc.chain import VnfChain
    from srv6sfc.dataplane import encapsulate

    inner = udp_packet(SRC, SINK, bytes(payload_size))
    chain = VnfChain(
        "c1", (IPv6Address("BBBB::2"), IPv6Address("CCCC::2")), IPv6Address("AAAA::2")
    )
    return wire.serialize_packet(encapsulate(inner, chain))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=0.5, help="time budget per cell")
    parser.add_argument("--payload", type=int, default=1024)
    args = parser.parse_args()

    backends = wire.available_backends()
    if len(backends) < 2:
        print("note: compiled codec not built; timing the fallback only", file=sys.stderr)

    blob = build_sample(args.payload)
    rows: dict[str, dict[str, float]] = {}
    for name in backends:
        wire.set_backend(name)
        packet = wire.parse_packet(blob)
        network, _ = chain_testbed(1)
        inner = udp_packet(SRC, SINK, bytes(args.payload))

        rows[name] = {
            "parse": rate(lambda: wire.parse_packet(blob), args.seconds),
            "serialize": rate(lambda: wire.serialize_packet(packet), args.seconds),
            "roundtrip": rate(
                lambda: wire.parse_packet(wire.serialize_packet(packet)), args.seconds
            ),
            "inject": rate(
                lambda: inject(network, "er1", inner, terminal_only=True), args.seconds
            ),
        }

    operations = ("parse", "serialize", "roundtrip", "inject")
    header = f"{'op':<12}" + "".join(f"{name + ' [op/s]':>18}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(f"packet: {len(blob)} bytes on the wire, payload {args.payload}")
    print(header)
    for op in operations:
        line = f"{op:<12}" + "".join(f"{rows[name][op]:>18,.0f}" for name in backends)
        if len(backends) == 2:
            line += f"{rows['cython'][op] / rows['python'][op]:>9.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Shared fixtures: codec backends, packet generators, testbed builders."""

from __future__ import annotations

import random
from ipaddress import IPv6Address, IPv6Network

import pytest

from srv6sfc.chain import ChainRegistry, ClassifierRule, Sid, SidKind, VnfChain
from srv6sfc.dataplane import PassThroughRouter, UnitCosts, Vnf, VnfPermission
from srv6sfc.sim import Network, Node, NodeRole, build_network
from srv6sfc.wire import Ipv6Header, Packet, SegmentRoutingHeader
from srv6sfc.wire import _codec_py

try:
    from srv6sfc.wire import _codec_cy
except ImportError:
    _codec_cy = None

CODEC_BACKENDS = [pytest.param(_codec_py, id="python")]
if _codec_cy is not None:
    CODEC_BACKENDS.append(pytest.param(_codec_cy, id="cython"))


@pytest.fixture(params=CODEC_BACKENDS)
def codec(request):
    """Runs the test once per available codec backend."""
    return request.param


# Hand-derived testbed packet: outer AAAA::2 -> BBBB::2 with SRH
# [CCCC::2, BBBB::2] (segments_left=1), inner EEEE::2 -> DDDD::2 UDP
# 40000 -> 5201 carrying b"payload!". Computed from the field layouts,
# not from the serializer.
TESTBED_GOLDEN_HEX = (
    "60000000" "0060" "2b" "40"
    "aaaa" + "00" * 13 + "02"
    "bbbb" + "00" * 13 + "02"
    "29" "04" "04" "01" "01" "00" "0000"
    "cccc" + "00" * 13 + "02"
    "bbbb" + "00" * 13 + "02"
    "60000000" "0010" "11" "40"
    "eeee" + "00" * 13 + "02"
    "dddd" + "00" * 13 + "02"
    "9c40" "1451" "0010" "0000"
    "7061796c6f616421"
)
TESTBED_GOLDEN = bytes.fromhex(TESTBED_GOLDEN_HEX)


def random_valid_packet(rng: random.Random) -> Packet:
    """A structurally valid packet: random addresses, optional SRH of up
    to five segments, random short payload."""
    payload = rng.randbytes(rng.randrange(0, 64))
    if rng.random() < 0.6:
        count = rng.randint(1, 5)
        srh = SegmentRoutingHeader(
            next_header=rng.choice((17, 41, 59)),
            hdr_ext_len=2 * count,
            routing_type=4,
            segments_left=rng.randrange(count),
            last_entry=count - 1,
            flags=rng.randrange(256),
            tag=rng.randrange(65536),
            segment_list=tuple(IPv6Address(rng.randbytes(16)) for _ in range(count)),
        )
        next_header = 43
        srh_len = srh.byte_length
    else:
        srh = None
        next_header = rng.choice((17, 41, 59))
        srh_len = 0
    header = Ipv6Header(
        version=6,
        traffic_class=rng.randrange(256),
        flow_label=rng.randrange(1 << 20),
        payload_length=srh_len + len(payload),
        next_header=next_header,
        hop_limit=rng.randrange(256),
        src=IPv6Address(rng.randbytes(16)),
        dst=IPv6Address(rng.randbytes(16)),
    )
    return Packet(header=header, srh=srh, payload=payload)


def random_junk(rng: random.Random, serialize) -> bytes:
    """Arbitrary bytes: raw noise or a mutated/truncated valid packet."""
    roll = rng.random()
    if roll < 0.5:
        return rng.randbytes(rng.randrange(0, 120))
    data = bytearray(serialize(random_valid_packet(rng)))
    if roll < 0.7 and data:
        for _ in range(rng.randint(1, 4)):
            data[rng.randrange(len(data))] = rng.randrange(256)
    elif roll < 0.85:
        del data[rng.randrange(len(data) + 1) :]
    else:
        data.extend(rng.randbytes(rng.randrange(1, 16)))
    return bytes(data)


# Programmatic single-NFV-node testbed --------------------------------------

ER1 = IPv6Address("AAAA::2")
SRC = IPv6Address("EEEE::2")
ER2 = IPv6Address("CCCC::2")
SINK = IPv6Address("DDDD::2")


def chain_testbed(
    n_vnfs: int = 1,
    kind: SidKind = SidKind.SR_UNAWARE,
    behaviors=None,
    permission: VnfPermission = VnfPermission.INSERT_NEXT_ONLY,
    units: UnitCosts = UnitCosts(),
    extra_sids: tuple[Sid, ...] = (),
) -> tuple[Network, VnfChain]:
    """er1 -- nfv -- er2 with ``n_vnfs`` VNFs of one kind on the middle
    node and a chain through all of them; mirrors the bundled config."""
    vnf_addresses = [IPv6Address(f"BBBB::{i + 2:x}") for i in range(n_vnfs)]
    registry = ChainRegistry()
    for address in vnf_addresses:
        registry.add_sid(Sid(address=address, kind=kind, host_node="nfv"))
    registry.add_sid(Sid(address=ER2, kind=SidKind.EGRESS_ENDPOINT, host_node="er2"))
    for sid in extra_sids:
        registry.add_sid(sid)
    chain = VnfChain(
        chain_id="c1",
        segments=tuple(vnf_addresses) + (ER2,),
        ingress_source=ER1,
    )
    registry.register_chain(chain)

    if behaviors is None:
        behaviors = [PassThroughRouter() for _ in range(n_vnfs)]
    vnfs = tuple(
        Vnf(sid=registry.sid(address), behavior=behavior, permission=permission)
        for address, behavior in zip(vnf_addresses, behaviors)
    )

    nodes = [
        Node(
            node_id="er1",
            role=NodeRole.INGRESS_EDGE,
            addresses=(ER1, SRC),
            rules=(ClassifierRule(IPv6Network("DDDD::/64"), "c1"),),
            routing_table=(
                (IPv6Network("BBBB::/64"), "nfv"),
                (IPv6Network("CCCC::/64"), "nfv"),
                (IPv6Network("DDDD::/64"), "nfv"),
            ),
        ),
        Node(
            node_id="nfv",
            role=NodeRole.NFV_NODE,
            addresses=(IPv6Address("AAAA::1"), IPv6Address("BBBB::1"), IPv6Address("CCCC::1")),
            hosted_vnfs=vnfs,
            routing_table=(
                (IPv6Network("AAAA::/64"), "er1"),
                (IPv6Network("EEEE::/64"), "er1"),
                (IPv6Network("CCCC::/64"), "er2"),
                (IPv6Network("DDDD::/64"), "er2"),
            ),
        ),
        Node(
            node_id="er2",
            role=NodeRole.EGRESS_EDGE,
            addresses=(ER2, SINK),
            routing_table=(
                (IPv6Network("AAAA::/64"), "nfv"),
                (IPv6Network("EEEE::/64"), "nfv"),
            ),
        ),
    ]
    network = build_network(nodes, [("er1", "nfv"), ("nfv", "er2")], registry, units)
    return network, chain


@pytest.fixture
def testbed_config_path():
    from importlib.resources import files

    return str(files("srv6sfc") / "configs" / "testbed.cfg")

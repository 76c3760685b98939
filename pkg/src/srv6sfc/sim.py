"""Deterministic topology and packet-walking engine.

A network is a set of nodes joined by links, with static routing tables
and one shared chain registry. Packets are walked one at a time; there
is no event-time interleaving, so identical inputs always produce
identical traces and ledgers. Rates and capacity enter only via the
benchmark's analytic model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from ipaddress import IPv6Address, IPv6Network

from srv6sfc import errors
from srv6sfc.chain import ChainRegistry, ClassifierRule, classify, longest_prefix_match
from srv6sfc.dataplane import (
    CostLedger,
    NfvNodeState,
    UnitCosts,
    Vnf,
    connector_process,
    egress_process,
    encapsulate,
)
from srv6sfc.trace import EventKind, Trace
from srv6sfc.wire import Packet, udp_packet

# Visits to individual nodes before a walk is declared stuck; the outer
# hop limit normally fires first, this is a guard for local loops.
MAX_NODE_VISITS = 4096


class NodeRole(Enum):
    INGRESS_EDGE = "ingress-edge"
    EGRESS_EDGE = "egress-edge"
    NFV_NODE = "nfv-node"
    PLAIN_ROUTER = "router"


@dataclass
class Node:
    """One router. The role is descriptive; behavior follows from what
    the node carries (rules classify, hosted VNFs intercept, addresses
    terminate)."""

    node_id: str
    role: NodeRole
    addresses: tuple[IPv6Address, ...]
    hosted_vnfs: tuple[Vnf, ...] = ()
    rules: tuple[ClassifierRule, ...] = ()
    routing_table: tuple[tuple[IPv6Network, str], ...] = ()

    def __post_init__(self):
        self.addresses = tuple(self.addresses)
        self.hosted_vnfs = tuple(self.hosted_vnfs)
        self.rules = tuple(self.rules)
        self.routing_table = tuple(self.routing_table)


class Network:
    """Validated topology plus per-node ledgers. Immutable during a run
    apart from the ledgers and the packet uid counter."""

    def __init__(
        self,
        nodes: dict[str, Node],
        links: set[frozenset[str]],
        registry: ChainRegistry,
        units: UnitCosts = UnitCosts(),
    ):
        self.nodes = nodes
        self.links = links
        self.registry = registry
        self.units = units
        self.ledgers: dict[str, CostLedger] = {}
        self._local: dict[str, frozenset[IPv6Address]] = {}
        self._states: dict[str, NfvNodeState] = {}
        self._next_uid = 0
        for node in nodes.values():
            ledger = self.ledgers[node.node_id] = CostLedger(units)
            self._local[node.node_id] = frozenset(node.addresses) | frozenset(
                vnf.sid.address for vnf in node.hosted_vnfs
            )
            if node.hosted_vnfs:
                self._states[node.node_id] = NfvNodeState(
                    node_id=node.node_id,
                    vnfs={vnf.sid.address: vnf for vnf in node.hosted_vnfs},
                    registry=registry,
                    ledger=ledger,
                    route=partial(_route_lookup, node),
                )

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise errors.UnknownNodeRef(f"no node {node_id!r}") from None

    def linked(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.links

    def local_addresses(self, node_id: str) -> frozenset[IPv6Address]:
        return self._local[node_id]

    def connector_state(self, node_id: str) -> NfvNodeState | None:
        return self._states.get(node_id)

    def next_uid(self) -> int:
        uid = self._next_uid
        self._next_uid = uid + 1
        return uid

    def reset_ledgers(self) -> None:
        for node_id in self.ledgers:
            self.ledgers[node_id] = CostLedger(self.units)
            state = self._states.get(node_id)
            if state is not None:
                state.ledger = self.ledgers[node_id]

    def nfv_node_ids(self) -> tuple[str, ...]:
        return tuple(
            node_id for node_id, node in self.nodes.items() if node.role is NodeRole.NFV_NODE
        )


def _route_lookup(node: Node, dst: IPv6Address) -> str | None:
    return longest_prefix_match(node.routing_table, dst)


def build_network(
    nodes: list[Node],
    links: list[tuple[str, str]],
    registry: ChainRegistry,
    units: UnitCosts = UnitCosts(),
) -> Network:
    """Assemble and validate a network; any dangling reference raises."""
    if not nodes:
        raise errors.InvalidTopology("a network needs at least one node")
    by_id: dict[str, Node] = {}
    for node in nodes:
        if node.node_id in by_id:
            raise errors.InvalidTopology(f"duplicate node id {node.node_id!r}")
        by_id[node.node_id] = node

    link_set: set[frozenset[str]] = set()
    for a, b in links:
        for end in (a, b):
            if end not in by_id:
                raise errors.UnknownNodeRef(f"link ({a}, {b}) references unknown node {end!r}")
        if a == b:
            raise errors.InvalidTopology(f"self-link on {a!r}")
        link_set.add(frozenset((a, b)))

    for node in by_id.values():
        for network_prefix, next_hop in node.routing_table:
            if next_hop not in by_id:
                raise errors.UnknownNodeRef(
                    f"{node.node_id!r} routes {network_prefix} via unknown node {next_hop!r}"
                )
            if frozenset((node.node_id, next_hop)) not in link_set:
                raise errors.UnreachableNextHop(
                    f"{node.node_id!r} routes {network_prefix} via {next_hop!r}, "
                    f"which is not a linked neighbor"
                )
        for vnf in node.hosted_vnfs:
            if vnf.sid.host_node != node.node_id:
                raise errors.InvalidTopology(
                    f"VNF {vnf.sid.address} declares host {vnf.sid.host_node!r} "
                    f"but lives on {node.node_id!r}"
                )
            if vnf.sid.address not in registry.sid_table:
                raise errors.UnknownSid(f"hosted VNF SID {vnf.sid.address} not in the registry")
        if node.hosted_vnfs and node.role is not NodeRole.NFV_NODE:
            raise errors.InvalidTopology(f"{node.node_id!r} hosts VNFs but is {node.role.value}")
        if node.rules and node.role not in (NodeRole.INGRESS_EDGE, NodeRole.EGRESS_EDGE):
            raise errors.InvalidTopology(
                f"{node.node_id!r} carries classifier rules but is {node.role.value}"
            )

    return Network(by_id, link_set, registry, units)


# Walk outcomes ----------------------------------------------------------

@dataclass(frozen=True)
class Delivered:
    packet: Packet
    node_id: str


@dataclass(frozen=True)
class Dropped:
    node_id: str
    reason: str


@dataclass(frozen=True)
class InjectResult:
    outcome: Delivered | Dropped
    trace: Trace

    @property
    def delivered(self) -> bool:
        return isinstance(self.outcome, Delivered)


def _decrement_hop(packet: Packet) -> Packet | None:
    """One inter-node hop: None when the hop limit is exhausted."""
    hop_limit = packet.header.hop_limit
    if hop_limit <= 1:
        return None
    return replace(packet, header=replace(packet.header, hop_limit=hop_limit - 1))


def inject(
    network: Network,
    ingress: str,
    inner: Packet,
    *,
    terminal_only: bool = False,
) -> InjectResult:
    """Walk one packet from the ingress node to a terminal event.

    Classification and encapsulation happen at the ingress when a rule
    matches; otherwise the packet travels as plain IPv6. Every injected
    packet ends in exactly one Delivered or Dropped.
    """
    node = network.node(ingress)
    uid = network.next_uid()
    packet = replace(inner, uid=uid)
    trace = Trace(uid, terminal_only=terminal_only)

    chain_id = classify(node.rules, packet.header.dst)
    if chain_id is not None:
        trace.add(node.node_id, EventKind.CLASSIFIED, chain_id)
        packet = encapsulate(packet, network.registry.chain(chain_id))
        trace.add(node.node_id, EventKind.ENCAPSULATED, str(packet.header.dst))

    visits = 0
    while True:
        visits += 1
        if visits > MAX_NODE_VISITS:
            trace.add(node.node_id, EventKind.DROPPED, "node visit budget exceeded")
            return InjectResult(Dropped(node.node_id, "node visit budget exceeded"), trace)

        state = network.connector_state(node.node_id)
        if packet.srh is not None and state is not None and packet.header.dst in state.vnfs:
            result = connector_process(state, packet, emit=partial(trace.add, node.node_id))
            if result.dropped:
                return InjectResult(Dropped(node.node_id, result.drop_reason or "dropped"), trace)
            (packet, port), = result.outputs
            if port is None:
                if packet.header.dst in network.local_addresses(node.node_id):
                    continue
                reason = f"no route to {packet.header.dst}"
                trace.add(node.node_id, EventKind.DROPPED, reason)
                return InjectResult(Dropped(node.node_id, reason), trace)
            nxt = _decrement_hop(packet)
            if nxt is None:
                trace.add(node.node_id, EventKind.DROPPED, "hop limit exceeded")
                return InjectResult(Dropped(node.node_id, "hop limit exceeded"), trace)
            packet = nxt
            trace.add(node.node_id, EventKind.FORWARDED, port)
            node = network.node(port)
            continue

        if packet.header.dst in network.local_addresses(node.node_id):
            if packet.is_encapsulated:
                packet = egress_process(packet)
                trace.add(node.node_id, EventKind.DECAPSULATED, None)
                continue
            trace.add(node.node_id, EventKind.DELIVERED, str(packet.header.dst))
            return InjectResult(Delivered(packet, node.node_id), trace)

        next_hop = longest_prefix_match(node.routing_table, packet.header.dst)
        if next_hop is None:
            reason = f"no route to {packet.header.dst}"
            trace.add(node.node_id, EventKind.DROPPED, reason)
            return InjectResult(Dropped(node.node_id, reason), trace)
        network.ledgers[node.node_id].add(uid, f=1)  # plain router cost
        nxt = _decrement_hop(packet)
        if nxt is None:
            trace.add(node.node_id, EventKind.DROPPED, "hop limit exceeded")
            return InjectResult(Dropped(node.node_id, "hop limit exceeded"), trace)
        packet = nxt
        trace.add(node.node_id, EventKind.FORWARDED, next_hop)
        node = network.node(next_hop)


# Flows -------------------------------------------------------------------

@dataclass(frozen=True)
class FlowSpec:
    ingress: str
    src: IPv6Address
    dst: IPv6Address
    count: int = 1
    payload_size: int = 1024
    src_port: int = 40000
    dst_port: int = 5201


@dataclass
class FlowSummary:
    delivered: int = 0
    dropped: int = 0
    drop_reasons: dict[str, int] = field(default_factory=dict)
    # Per-node (f, d, e) counter deltas accumulated by this flow.
    ledger_deltas: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    delivered_packets: list[Packet] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.delivered + self.dropped


def flow_payload(uid: int, size: int) -> bytes:
    """Deterministic per-packet payload so bit-exactness is meaningful."""
    if size <= 0:
        return b""
    word = uid.to_bytes(8, "big")
    return (word * ((size + 7) // 8))[:size]


def run_flow(network: Network, flow: FlowSpec, *, keep_delivered: bool = False) -> FlowSummary:
    """Inject ``flow.count`` packets and summarize outcomes and costs."""
    if flow.count < 1:
        raise ValueError(f"flow count must be >= 1, got {flow.count}")
    before = {node_id: ledger.counts() for node_id, ledger in network.ledgers.items()}
    summary = FlowSummary()
    for i in range(flow.count):
        inner = udp_packet(
            flow.src,
            flow.dst,
            flow_payload(i, flow.payload_size),
            src_port=flow.src_port,
            dst_port=flow.dst_port,
        )
        result = inject(network, flow.ingress, inner, terminal_only=True)
        if result.delivered:
            summary.delivered += 1
            if keep_delivered:
                summary.delivered_packets.append(result.outcome.packet)
        else:
            summary.dropped += 1
            reason = result.outcome.reason
            summary.drop_reasons[reason] = summary.drop_reasons.get(reason, 0) + 1
    for node_id, ledger in network.ledgers.items():
        f0, d0, e0 = before[node_id]
        f1, d1, e1 = ledger.counts()
        delta = (f1 - f0, d1 - d0, e1 - e0)
        if delta != (0, 0, 0):
            summary.ledger_deltas[node_id] = delta
    return summary

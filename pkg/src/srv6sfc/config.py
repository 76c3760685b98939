"""Scenario configuration: a line-oriented, sectioned text format.

Sections hold one declaration per line; ``key=value`` tokens carry the
details. The format is diff-friendly on purpose so scenario files can
serve as golden fixtures. Loading validates everything up front and
reports all problems at once, not just the first.

    [nodes]    <id> <role> addrs=<addr,...>
    [links]    <id> <id>
    [sids]     <addr> kind=<sr-aware|sr-unaware|egress> node=<id> [iface=<single|west|east>]
    [vnfs]     <addr> behavior=<spec> [permission=<level>]
    [chains]   <id> segs=<addr,...> src=<addr> [direction=<uni|east|west>]
    [rules]    <node> <prefix> chain=<id>
    [routes]   <node> <prefix> via <node>
    [bench]    flow / model / rates / runs / noise / seed / payload / units

Behavior specs: ``passthrough``, ``prefix-filter:<prefix>``,
``payload-stamp:<byte>``, ``chain-editor:insert-after:<sid+sid>``,
``chain-editor:insert-at:<pos>:<sid+sid>``, ``chain-editor:replace:<sid+sid>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace
from ipaddress import AddressValueError, IPv6Address, IPv6Network, NetmaskValueError
from pathlib import Path

from srv6sfc import errors
from srv6sfc.bench import CapacityModel
from srv6sfc.chain import (
    ChainDirection,
    ChainRegistry,
    ClassifierRule,
    Sid,
    SidKind,
    VnfChain,
    VnfInterface,
)
from srv6sfc.dataplane import (
    ChainEditor,
    PassThroughRouter,
    PayloadStamper,
    PrefixFilter,
    SegmentListEdit,
    UnitCosts,
    Vnf,
    VnfPermission,
)
from srv6sfc.sim import FlowSpec, Network, Node, NodeRole, build_network

SECTION_ORDER = ("nodes", "links", "sids", "vnfs", "chains", "rules", "routes", "bench")


@dataclass(frozen=True)
class NodeDecl:
    node_id: str
    role: NodeRole
    addresses: tuple[IPv6Address, ...]


@dataclass(frozen=True)
class VnfDecl:
    address: IPv6Address
    behavior_spec: str
    permission: VnfPermission = VnfPermission.INSERT_NEXT_ONLY


@dataclass(frozen=True)
class RuleDecl:
    node_id: str
    network: IPv6Network
    chain_id: str


@dataclass(frozen=True)
class RouteDecl:
    node_id: str
    network: IPv6Network
    via: str


@dataclass(frozen=True)
class BenchSection:
    flow_src: IPv6Address | None = None
    flow_dst: IPv6Address | None = None
    flow_ingress: str | None = None
    models: tuple[tuple[str, CapacityModel], ...] = ()
    rates: tuple[float, ...] = (1000.0, 3000.0, 6000.0, 9000.0, 12000.0, 13000.0)
    runs: int = 30
    noise: float = 1.0
    seed: int = 42
    payload: int = 1024
    units: UnitCosts = UnitCosts()

    def model_for(self, scenario: str) -> CapacityModel | None:
        table = dict(self.models)
        return table.get(scenario, table.get("default"))


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: tuple[NodeDecl, ...]
    links: tuple[tuple[str, str], ...]
    sids: tuple[Sid, ...]
    vnfs: tuple[VnfDecl, ...]
    chains: tuple[VnfChain, ...]
    rules: tuple[RuleDecl, ...]
    routes: tuple[RouteDecl, ...]
    bench: BenchSection = BenchSection()
    path: str = field(default="<memory>", compare=False)

    def sid_for(self, address: IPv6Address, kind_override: SidKind | None = None) -> Sid:
        for sid in self.sids:
            if sid.address == address:
                if kind_override is not None and sid.kind is not SidKind.EGRESS_ENDPOINT:
                    return dc_replace(sid, kind=kind_override)
                return sid
        raise errors.UnknownSid(f"no SID declared at {address}")

    def build_registry(self, kind_override: SidKind | None = None) -> ChainRegistry:
        registry = ChainRegistry()
        for sid in self.sids:
            registry.add_sid(self.sid_for(sid.address, kind_override))
        for chain in self.chains:
            registry.register_chain(chain)
        return registry

    def build_network(self, kind_override: SidKind | None = None) -> Network:
        registry = self.build_registry(kind_override)
        vnf_decls = {decl.address: decl for decl in self.vnfs}
        nodes = []
        for decl in self.nodes:
            hosted = []
            for sid in self.sids:
                if sid.host_node != decl.node_id or sid.kind is SidKind.EGRESS_ENDPOINT:
                    continue
                vnf_decl = vnf_decls.get(sid.address)
                if vnf_decl is None:
                    continue
                hosted.append(
                    Vnf(
                        sid=registry.sid(sid.address),
                        behavior=behavior_from_spec(vnf_decl.behavior_spec),
                        permission=vnf_decl.permission,
                    )
                )
            nodes.append(
                Node(
                    node_id=decl.node_id,
                    role=decl.role,
                    addresses=decl.addresses,
                    hosted_vnfs=tuple(hosted),
                    rules=tuple(
                        ClassifierRule(rule.network, rule.chain_id)
                        for rule in self.rules
                        if rule.node_id == decl.node_id
                    ),
                    routing_table=tuple(
                        (route.network, route.via)
                        for route in self.routes
                        if route.node_id == decl.node_id
                    ),
                )
            )
        return build_network(nodes, list(self.links), registry, self.bench.units)

    def flow(self, count: int = 1, payload_size: int | None = None) -> FlowSpec:
        bench = self.bench
        if bench.flow_src is None or bench.flow_dst is None or bench.flow_ingress is None:
            raise errors.ValidationError(
                ["bench flow is not configured (flow src=... dst=... ingress=...)"]
            )
        return FlowSpec(
            ingress=bench.flow_ingress,
            src=bench.flow_src,
            dst=bench.flow_dst,
            count=count,
            payload_size=bench.payload if payload_size is None else payload_size,
        )


# Behavior factory ---------------------------------------------------------

def _parse_sid_list(text: str) -> tuple[IPv6Address, ...]:
    return tuple(IPv6Address(part) for part in text.split("+") if part)


def behavior_from_spec(spec: str):
    """Instantiate a VNF behavior from its config spelling."""
    kind, _, rest = spec.partition(":")
    if kind == "passthrough":
        return PassThroughRouter()
    if kind == "prefix-filter":
        return PrefixFilter(IPv6Network(rest, strict=False))
    if kind == "payload-stamp":
        return PayloadStamper(int(rest, 0))
    if kind == "chain-editor":
        edit_kind, _, args = rest.partition(":")
        if edit_kind == "insert-after":
            return ChainEditor(SegmentListEdit.insert_after_current(_parse_sid_list(args)))
        if edit_kind == "insert-at":
            position, _, sids = args.partition(":")
            return ChainEditor(SegmentListEdit.insert_at(int(position), _parse_sid_list(sids)))
        if edit_kind == "replace":
            return ChainEditor(SegmentListEdit.replace(_parse_sid_list(args)))
        raise errors.ValidationError([f"unknown chain-editor edit {edit_kind!r}"])
    raise errors.ValidationError([f"unknown behavior {spec!r}"])


# Parsing -------------------------------------------------------------------

def _split_kv(tokens: list[str]) -> dict[str, str]:
    pairs = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        pairs[key] = value
    return pairs


class _Collector:
    """Accumulates declarations and problems while scanning the file."""

    def __init__(self, path: str):
        self.path = path
        self.problems: list[str] = []
        self.nodes: list[NodeDecl] = []
        self.links: list[tuple[str, str]] = []
        self.sids: list[Sid] = []
        self.vnfs: list[VnfDecl] = []
        self.chains: list[VnfChain] = []
        self.rules: list[RuleDecl] = []
        self.routes: list[RouteDecl] = []
        self.bench_kwargs: dict = {}
        self.bench_models: list[tuple[str, CapacityModel]] = []

    def problem(self, line_no: int, message: str) -> None:
        self.problems.append(f"line {line_no}: {message}")


def _parse_line(collector: _Collector, section: str, line_no: int, line: str) -> None:
    tokens = line.split()
    try:
        if section == "nodes":
            kv = _split_kv(tokens[2:])
            collector.nodes.append(
                NodeDecl(
                    node_id=tokens[0],
                    role=NodeRole(tokens[1]),
                    addresses=tuple(IPv6Address(a) for a in kv["addrs"].split(",") if a),
                )
            )
        elif section == "links":
            if len(tokens) != 2:
                raise ValueError("a link needs exactly two node ids")
            collector.links.append((tokens[0], tokens[1]))
        elif section == "sids":
            kv = _split_kv(tokens[1:])
            collector.sids.append(
                Sid(
                    address=IPv6Address(tokens[0]),
                    kind=SidKind(kv["kind"]),
                    host_node=kv["node"],
                    interface=VnfInterface(kv.get("iface", "single")),
                )
            )
        elif section == "vnfs":
            kv = _split_kv(tokens[1:])
            collector.vnfs.append(
                VnfDecl(
                    address=IPv6Address(tokens[0]),
                    behavior_spec=kv["behavior"],
                    permission=VnfPermission(kv.get("permission", "insert-next-only")),
                )
            )
        elif section == "chains":
            kv = _split_kv(tokens[1:])
            collector.chains.append(
                VnfChain(
                    chain_id=tokens[0],
                    segments=tuple(IPv6Address(a) for a in kv["segs"].split(",") if a),
                    ingress_source=IPv6Address(kv["src"]),
                    direction=ChainDirection(kv.get("direction", "uni")),
                )
            )
        elif section == "rules":
            kv = _split_kv(tokens[2:])
            collector.rules.append(
                RuleDecl(
                    node_id=tokens[0],
                    network=IPv6Network(tokens[1], strict=False),
                    chain_id=kv["chain"],
                )
            )
        elif section == "routes":
            if len(tokens) != 4 or tokens[2] != "via":
                raise ValueError("expected: <node> <prefix> via <node>")
            collector.routes.append(
                RouteDecl(
                    node_id=tokens[0],
                    network=IPv6Network(tokens[1], strict=False),
                    via=tokens[3],
                )
            )
        elif section == "bench":
            _parse_bench_line(collector, tokens)
        else:
            raise ValueError(f"unknown section [{section}]")
    except (KeyError, ValueError, AddressValueError, NetmaskValueError, errors.SfcError) as exc:
        detail = str(exc) or type(exc).__name__
        if isinstance(exc, KeyError):
            detail = f"missing {exc} field"
        collector.problem(line_no, detail)


def _parse_bench_line(collector: _Collector, tokens: list[str]) -> None:
    keyword = tokens[0]
    if keyword == "flow":
        kv = _split_kv(tokens[1:])
        collector.bench_kwargs["flow_src"] = IPv6Address(kv["src"])
        collector.bench_kwargs["flow_dst"] = IPv6Address(kv["dst"])
        collector.bench_kwargs["flow_ingress"] = kv["ingress"]
    elif keyword == "model":
        scenario = tokens[1]
        if scenario not in ("aware", "unaware", "default"):
            raise ValueError(f"model scenario must be aware/unaware/default, got {scenario!r}")
        kv = _split_kv(tokens[2:])
        collector.bench_models.append(
            (scenario, CapacityModel(float(kv["capacity"]), float(kv.get("k0", "0"))))
        )
    elif keyword == "rates":
        collector.bench_kwargs["rates"] = tuple(float(r) for r in tokens[1].split(",") if r)
    elif keyword == "runs":
        collector.bench_kwargs["runs"] = int(tokens[1])
    elif keyword == "noise":
        collector.bench_kwargs["noise"] = float(tokens[1])
    elif keyword == "seed":
        collector.bench_kwargs["seed"] = int(tokens[1])
    elif keyword == "payload":
        collector.bench_kwargs["payload"] = int(tokens[1])
    elif keyword == "units":
        kv = _split_kv(tokens[1:])
        collector.bench_kwargs["units"] = UnitCosts(
            f=float(kv.get("f", "1.0")), d=float(kv.get("d", "0.5")), e=float(kv.get("e", "0.5"))
        )
    else:
        raise ValueError(f"unknown bench keyword {keyword!r}")


def parse_config_text(text: str, path: str = "<memory>") -> ScenarioConfig:
    """Parse and cross-validate; raises ValidationError with every
    problem found, or ParseError when the document has no structure."""
    collector = _Collector(path)
    section: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTION_ORDER:
                collector.problem(line_no, f"unknown section [{section}]")
                section = None
            continue
        if section is None:
            raise errors.ParseError(f"declaration before any section: {line!r}", line_no)
        _parse_line(collector, section, line_no, line)

    config = ScenarioConfig(
        nodes=tuple(collector.nodes),
        links=tuple(collector.links),
        sids=tuple(collector.sids),
        vnfs=tuple(collector.vnfs),
        chains=tuple(collector.chains),
        rules=tuple(collector.rules),
        routes=tuple(collector.routes),
        bench=BenchSection(models=tuple(collector.bench_models), **collector.bench_kwargs),
        path=path,
    )
    problems = collector.problems + _semantic_problems(config)
    if problems:
        raise errors.ValidationError(problems)
    return config


def _semantic_problems(config: ScenarioConfig) -> list[str]:
    problems: list[str] = []
    node_ids = set()
    for decl in config.nodes:
        if decl.node_id in node_ids:
            problems.append(f"duplicate node id {decl.node_id!r}")
        node_ids.add(decl.node_id)
    if not config.nodes:
        problems.append("no nodes declared")

    links = {frozenset(pair) for pair in config.links}
    for a, b in config.links:
        for end in (a, b):
            if end not in node_ids:
                problems.append(f"link ({a}, {b}) references unknown node {end!r}")

    sid_addresses = set()
    for sid in config.sids:
        if sid.address in sid_addresses:
            problems.append(f"duplicate SID declaration for {sid.address}")
        sid_addresses.add(sid.address)
        if sid.host_node not in node_ids:
            problems.append(f"SID {sid.address} hosted on unknown node {sid.host_node!r}")

    vnf_addresses = set()
    for vnf in config.vnfs:
        if vnf.address not in sid_addresses:
            problems.append(f"VNF declared for unknown SID {vnf.address}")
        vnf_addresses.add(vnf.address)
        try:
            behavior_from_spec(vnf.behavior_spec)
        except (errors.SfcError, ValueError) as exc:
            problems.append(f"VNF {vnf.address}: bad behavior spec {vnf.behavior_spec!r} ({exc})")

    chain_ids = set()
    for chain in config.chains:
        chain_ids.add(chain.chain_id)
        for address in chain.segments:
            if address not in sid_addresses:
                problems.append(
                    f"chain {chain.chain_id!r} references undeclared SID {address}"
                )

    for rule in config.rules:
        if rule.node_id not in node_ids:
            problems.append(f"rule on unknown node {rule.node_id!r}")
        if rule.chain_id not in chain_ids:
            problems.append(f"rule for unknown chain {rule.chain_id!r}")

    for route in config.routes:
        if route.node_id not in node_ids:
            problems.append(f"route on unknown node {route.node_id!r}")
        elif route.via not in node_ids:
            problems.append(f"route on {route.node_id!r} via unknown node {route.via!r}")
        elif frozenset((route.node_id, route.via)) not in links:
            problems.append(
                f"route on {route.node_id!r} via {route.via!r}: not a linked neighbor"
            )

    if config.bench.flow_ingress is not None and config.bench.flow_ingress not in node_ids:
        problems.append(f"bench flow ingress {config.bench.flow_ingress!r} is not a node")

    if not problems:
        # Registry-level rules (egress-last, interface match, univocal
        # mapping) only make sense once the references resolve.
        try:
            config.build_registry()
        except errors.SfcError as exc:
            problems.append(f"{type(exc).__name__}: {exc}")
    return problems


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise errors.ParseError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text, str(path))


# Rendering ------------------------------------------------------------------

def render_config(config: ScenarioConfig) -> str:
    """Canonical text form; loading it back yields an equal config."""
    out: list[str] = []

    out.append("[nodes]")
    for decl in config.nodes:
        addrs = ",".join(str(a) for a in decl.addresses)
        out.append(f"{decl.node_id} {decl.role.value} addrs={addrs}")

    out.append("")
    out.append("[links]")
    for a, b in config.links:
        out.append(f"{a} {b}")

    out.append("")
    out.append("[sids]")
    for sid in config.sids:
        line = f"{sid.address} kind={sid.kind.value} node={sid.host_node}"
        if sid.interface is not VnfInterface.SINGLE:
            line += f" iface={sid.interface.value}"
        out.append(line)

    out.append("")
    out.append("[vnfs]")
    for vnf in config.vnfs:
        out.append(
            f"{vnf.address} behavior={vnf.behavior_spec} permission={vnf.permission.value}"
        )

    out.append("")
    out.append("[chains]")
    for chain in config.chains:
        segs = ",".join(str(a) for a in chain.segments)
        out.append(
            f"{chain.chain_id} segs={segs} src={chain.ingress_source} "
            f"direction={chain.direction.value}"
        )

    out.append("")
    out.append("[rules]")
    for rule in config.rules:
        out.append(f"{rule.node_id} {rule.network} chain={rule.chain_id}")

    out.append("")
    out.append("[routes]")
    for route in config.routes:
        out.append(f"{route.node_id} {route.network} via {route.via}")

    bench = config.bench
    out.append("")
    out.append("[bench]")
    if bench.flow_src is not None:
        out.append(f"flow src={bench.flow_src} dst={bench.flow_dst} ingress={bench.flow_ingress}")
    for scenario, model in bench.models:
        out.append(
            f"model {scenario} capacity={model.capacity!r} k0={model.baseline_overhead_k0!r}"
        )
    out.append("rates " + ",".join(repr(rate) for rate in bench.rates))
    out.append(f"runs {bench.runs}")
    out.append(f"noise {bench.noise!r}")
    out.append(f"seed {bench.seed}")
    out.append(f"payload {bench.payload}")
    out.append(f"units f={bench.units.f!r} d={bench.units.d!r} e={bench.units.e!r}")
    out.append("")
    return "\n".join(out)


# Route installation ----------------------------------------------------------

def route_add(
    config: ScenarioConfig,
    prefix_text: str,
    via_text: str,
    segment_texts: list[str],
    *,
    node_id: str | None = None,
    chain_id: str | None = None,
) -> ScenarioConfig:
    """Install a classifier rule, its chain, and a route in one step,
    mirroring `route add PREFIX via NEXTHOP encap seg SID,...`.

    Re-adding an identical route is a no-op.
    """
    try:
        prefix = IPv6Network(prefix_text, strict=False)
    except (AddressValueError, NetmaskValueError, ValueError) as exc:
        raise errors.BadPrefix(f"bad prefix {prefix_text!r}: {exc}") from exc
    try:
        via = IPv6Address(via_text)
        segments = tuple(IPv6Address(s) for s in segment_texts)
    except (AddressValueError, ValueError) as exc:
        raise errors.BadPrefix(f"bad address: {exc}") from exc

    declared = {sid.address for sid in config.sids}
    for segment in segments:
        if segment not in declared:
            raise errors.UnknownSegment(f"segment {segment} is not a declared SID")

    if node_id is None:
        for decl in config.nodes:
            if decl.role is NodeRole.INGRESS_EDGE:
                node_id = decl.node_id
                break
        else:
            raise errors.ValidationError(["no ingress-edge node to install the route on"])
    node = next((d for d in config.nodes if d.node_id == node_id), None)
    if node is None:
        raise errors.ValidationError([f"unknown node {node_id!r}"])
    if not node.addresses:
        raise errors.ValidationError([f"node {node_id!r} has no addresses for ingress source"])

    via_node = next((d for d in config.nodes if via in d.addresses), None)
    if via_node is None:
        raise errors.ValidationError([f"via address {via} is not owned by any node"])

    ingress_source = node.addresses[0]
    if chain_id is None:
        # Reuse a chain that already encodes this path; the kernel
        # command would be a no-op for an already-installed route.
        reusable = next(
            (
                c
                for c in config.chains
                if c.segments == segments
                and c.ingress_source == ingress_source
                and c.direction is ChainDirection.UNIDIRECTIONAL
            ),
            None,
        )
        chain_id = (
            reusable.chain_id
            if reusable is not None
            else f"rt-{prefix.network_address.compressed}-{prefix.prefixlen}"
        )
    chain = VnfChain(
        chain_id=chain_id,
        segments=segments,
        ingress_source=ingress_source,
        direction=ChainDirection.UNIDIRECTIONAL,
    )
    rule = RuleDecl(node_id=node_id, network=prefix, chain_id=chain_id)
    route = RouteDecl(node_id=node_id, network=prefix, via=via_node.node_id)

    existing = next((c for c in config.chains if c.chain_id == chain_id), None)
    if existing is not None and existing != chain:
        raise errors.ValidationError(
            [f"chain {chain_id!r} already exists with different segments"]
        )

    new_chains = config.chains if existing is not None else config.chains + (chain,)
    new_rules = config.rules if rule in config.rules else config.rules + (rule,)
    new_routes = config.routes if route in config.routes else config.routes + (route,)
    updated = dc_replace(config, chains=new_chains, rules=new_rules, routes=new_routes)

    problems = _semantic_problems(updated)
    if problems:
        raise errors.ValidationError(problems)
    return updated

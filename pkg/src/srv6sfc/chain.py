"""Service chains, the SID registry, and ingress classification.

A chain is an ordered list of SID addresses ending in an egress
endpoint. SR-unaware SIDs are subject to the univocal-mapping rule:
each of their egress interfaces may feed at most one chain, because
return traffic from such a VNF carries no segment header and the
connector must be able to re-associate it statelessly. Interfaces are
tracked per SID, so one VNF instance can serve an eastbound and a
westbound chain through different interfaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from ipaddress import IPv6Address, IPv6Network
from typing import Iterable, TypeVar

from srv6sfc import errors

T = TypeVar("T")


class SidKind(Enum):
    SR_AWARE = "sr-aware"
    SR_UNAWARE = "sr-unaware"
    EGRESS_ENDPOINT = "egress"


class VnfInterface(Enum):
    SINGLE = "single"
    WEST = "west"
    EAST = "east"


class ChainDirection(Enum):
    UNIDIRECTIONAL = "uni"
    EASTBOUND = "east"
    WESTBOUND = "west"


# Which egress interface a chain of a given direction traverses.
DIRECTION_INTERFACE = {
    ChainDirection.UNIDIRECTIONAL: VnfInterface.SINGLE,
    ChainDirection.EASTBOUND: VnfInterface.EAST,
    ChainDirection.WESTBOUND: VnfInterface.WEST,
}


@dataclass(frozen=True)
class Sid:
    """One segment endpoint: a VNF instance interface or an egress router.

    ``interface`` names the VNF interface this SID's traffic exits from;
    plain unidirectional VNFs use SINGLE.
    """

    address: IPv6Address
    kind: SidKind
    host_node: str
    interface: VnfInterface = VnfInterface.SINGLE


@dataclass(frozen=True)
class VnfChain:
    """Ordered SID addresses a packet must traverse; last one is the egress.

    ``ingress_source`` becomes the outer source address at encapsulation.
    """

    chain_id: str
    segments: tuple[IPv6Address, ...]
    ingress_source: IPv6Address
    direction: ChainDirection = ChainDirection.UNIDIRECTIONAL

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise errors.InvalidChain(f"chain {self.chain_id!r} has no segments")
        seen = set()
        for address in self.segments:
            if address in seen:
                raise errors.DuplicateSidInChain(
                    f"chain {self.chain_id!r} lists {address} twice"
                )
            seen.add(address)

    @property
    def egress(self) -> IPv6Address:
        return self.segments[-1]


@dataclass(frozen=True)
class ClassifierRule:
    """Destination-prefix match installing a chain; longest prefix wins,
    then earliest-installed."""

    network: IPv6Network
    chain_id: str


def longest_prefix_match(entries: Iterable[tuple[IPv6Network, T]], address: IPv6Address) -> T | None:
    """Generic LPM over (prefix, value) pairs; earliest entry wins ties."""
    best: T | None = None
    best_len = -1
    for network, value in entries:
        if address in network and network.prefixlen > best_len:
            best = value
            best_len = network.prefixlen
    return best


def classify(rules: Iterable[ClassifierRule], dst: IPv6Address) -> str | None:
    """Chain id for a destination, or None to proceed as plain IPv6."""
    return longest_prefix_match(((r.network, r.chain_id) for r in rules), dst)


def next_after(chain: VnfChain, sid: IPv6Address) -> IPv6Address:
    """The successor segment of ``sid`` within the chain."""
    try:
        index = chain.segments.index(sid)
    except ValueError:
        raise errors.SidNotInChain(f"{sid} not in chain {chain.chain_id!r}") from None
    if index == len(chain.segments) - 1:
        raise errors.SidIsLast(f"{sid} is the final segment of chain {chain.chain_id!r}")
    return chain.segments[index + 1]


class ChainRegistry:
    """SIDs, chains, and the (address, interface) -> chain bookkeeping.

    Built at startup, read-only during a simulation run. Registration is
    atomic: a chain that fails validation leaves the registry untouched.
    """

    def __init__(self):
        self.chains: dict[str, VnfChain] = {}
        self.sid_table: dict[IPv6Address, Sid] = {}
        self.mapping: dict[tuple[IPv6Address, VnfInterface], str] = {}

    def add_sid(self, sid: Sid) -> None:
        existing = self.sid_table.get(sid.address)
        if existing is not None and existing != sid:
            raise errors.DuplicateSidAddress(f"{sid.address} already registered as {existing}")
        self.sid_table[sid.address] = sid

    def sid(self, address: IPv6Address) -> Sid:
        try:
            return self.sid_table[address]
        except KeyError:
            raise errors.UnknownSid(f"no SID registered at {address}") from None

    def chain(self, chain_id: str) -> VnfChain:
        try:
            return self.chains[chain_id]
        except KeyError:
            raise errors.UnknownChain(f"no chain {chain_id!r}") from None

    def mapped_chain(self, address: IPv6Address, interface: VnfInterface) -> str | None:
        return self.mapping.get((address, interface))

    def _validate_chain(self, chain: VnfChain) -> list[tuple[IPv6Address, VnfInterface]]:
        """All univocal-mapping keys the chain would claim; raises on any
        contract violation without mutating the registry."""
        required = DIRECTION_INTERFACE[chain.direction]
        keys: list[tuple[IPv6Address, VnfInterface]] = []
        for address in chain.segments:
            sid = self.sid(address)
            if sid.kind is SidKind.EGRESS_ENDPOINT:
                continue
            if sid.interface is not required:
                raise errors.InterfaceMismatch(
                    f"chain {chain.chain_id!r} ({chain.direction.value}) traverses "
                    f"{address} whose interface is {sid.interface.value}, "
                    f"needs {required.value}"
                )
            if sid.kind is SidKind.SR_UNAWARE:
                keys.append((address, sid.interface))
        last = self.sid(chain.segments[-1])
        if last.kind is not SidKind.EGRESS_ENDPOINT:
            raise errors.InvalidChain(
                f"chain {chain.chain_id!r} must end at an egress endpoint, "
                f"got {last.kind.value} at {last.address}"
            )
        for key in keys:
            owner = self.mapping.get(key)
            if owner is not None and owner != chain.chain_id:
                raise errors.UnivocalMappingViolation(
                    f"SR-unaware interface ({key[0]}, {key[1].value}) already "
                    f"feeds chain {owner!r}; cannot also feed {chain.chain_id!r}"
                )
        return keys

    def register_chain(self, chain: VnfChain) -> None:
        """Add or replace a chain. Re-registering the identical chain is a
        no-op; a changed chain under the same id releases its old mappings
        first."""
        previous = self.chains.get(chain.chain_id)
        if previous == chain:
            return
        if previous is not None:
            self.unregister_chain(chain.chain_id)
            try:
                keys = self._validate_chain(chain)
            except errors.ChainError:
                self._commit(previous, self._validate_chain(previous))
                raise
        else:
            keys = self._validate_chain(chain)
        self._commit(chain, keys)

    def _commit(self, chain: VnfChain, keys: list[tuple[IPv6Address, VnfInterface]]) -> None:
        self.chains[chain.chain_id] = chain
        for key in keys:
            self.mapping[key] = chain.chain_id

    def unregister_chain(self, chain_id: str) -> None:
        chain = self.chain(chain_id)
        del self.chains[chain_id]
        for key, owner in list(self.mapping.items()):
            if owner == chain.chain_id:
                del self.mapping[key]

    def register_bidirectional(self, east: VnfChain, west: VnfChain) -> None:
        """Register an eastbound/westbound pair atomically.

        Interfaces keep the directions apart, so one VNF instance may
        appear in both chains through its E and W interface SIDs.
        """
        if east.direction is not ChainDirection.EASTBOUND:
            raise errors.InterfaceMismatch(
                f"chain {east.chain_id!r} is {east.direction.value}, expected eastbound"
            )
        if west.direction is not ChainDirection.WESTBOUND:
            raise errors.InterfaceMismatch(
                f"chain {west.chain_id!r} is {west.direction.value}, expected westbound"
            )
        east_keys = self._validate_chain(east)
        # Validate west against the state east will produce.
        self._commit(east, east_keys)
        try:
            west_keys = self._validate_chain(west)
        except errors.ChainError:
            self.unregister_chain(east.chain_id)
            raise
        self._commit(west, west_keys)

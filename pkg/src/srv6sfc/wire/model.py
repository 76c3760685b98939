"""Wire-format data model: IPv6 fixed header, the segment routing
extension header (routing type 4), and a minimal UDP carrier.

All multi-byte fields are big-endian. The segment list is stored in
reverse path order: ``segment_list[0]`` is the final segment and
``segments_left`` indexes the active entry, counting down as the packet
progresses. Chains written in forward path order are reversed on entry
(see :meth:`SegmentRoutingHeader.from_path`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from ipaddress import IPv6Address

from srv6sfc import errors

NEXT_HEADER_UDP = 17
NEXT_HEADER_IPV6 = 41      # IPv6-in-IPv6: payload is a full inner packet
NEXT_HEADER_ROUTING = 43   # routing extension header follows
NEXT_HEADER_NONE = 59      # no payload at all

SRH_ROUTING_TYPE = 4
IPV6_HEADER_LEN = 40
SRH_FIXED_LEN = 8
SEGMENT_LEN = 16
UDP_HEADER_LEN = 8
DEFAULT_HOP_LIMIT = 64
MAX_PAYLOAD_LEN = 0xFFFF


@dataclass(frozen=True, slots=True)
class Ipv6Header:
    """Fixed 40-byte IPv6 header.

     0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |Version| Traffic Class |           Flow Label                  |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |         Payload Length        |  Next Header  |   Hop Limit   |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |                         Source Address        (16 octets)     |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |                      Destination Address      (16 octets)     |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+

    ``payload_length`` counts everything after these 40 bytes, including
    any extension header.
    """

    version: int
    traffic_class: int
    flow_label: int
    payload_length: int
    next_header: int
    hop_limit: int
    src: IPv6Address
    dst: IPv6Address


@dataclass(frozen=True, slots=True)
class SegmentRoutingHeader:
    """Routing extension header of type 4 carrying the segment list.

     0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7 0 1 2 3 4 5 6 7
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    | Next Header   |  Hdr Ext Len  | Routing Type=4| Segments Left |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |  Last Entry   |     Flags     |              Tag              |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |            Segment List[0]  (final segment, 16 octets)        |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |            ...                                                 |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+

    ``hdr_ext_len`` is in 8-octet units excluding the first 8 octets, so
    it equals ``2 * len(segment_list)``. TLVs are not supported; the
    length law is exact. ``flags`` and ``tag`` are carried opaquely.
    """

    next_header: int
    hdr_ext_len: int
    routing_type: int
    segments_left: int
    last_entry: int
    flags: int
    tag: int
    segment_list: tuple[IPv6Address, ...]

    @classmethod
    def from_path(
        cls,
        path: tuple[IPv6Address, ...] | list[IPv6Address],
        *,
        segments_left: int | None = None,
        next_header: int = NEXT_HEADER_IPV6,
        flags: int = 0,
        tag: int = 0,
    ) -> "SegmentRoutingHeader":
        """Build an SRH from segments given in forward path order.

        ``segments_left`` defaults to pointing at the first path segment.
        """
        segs = tuple(reversed(tuple(path)))
        n = len(segs)
        if n == 0:
            raise errors.InvariantViolation("segment list must not be empty")
        if segments_left is None:
            segments_left = n - 1
        return cls(
            next_header=next_header,
            hdr_ext_len=2 * n,
            routing_type=SRH_ROUTING_TYPE,
            segments_left=segments_left,
            last_entry=n - 1,
            flags=flags,
            tag=tag,
            segment_list=segs,
        )

    @property
    def path_segments(self) -> tuple[IPv6Address, ...]:
        """Segment list in forward path order."""
        return tuple(reversed(self.segment_list))

    @property
    def byte_length(self) -> int:
        return SRH_FIXED_LEN + SEGMENT_LEN * len(self.segment_list)


@dataclass(frozen=True, slots=True)
class Packet:
    """One IPv6 packet: header, optional SRH, opaque payload bytes.

    When the effective next header is IPv6-in-IPv6 the payload is a full
    serialized inner packet. ``uid`` is a simulator-assigned identifier;
    it is never serialized and never takes part in equality.
    """

    header: Ipv6Header
    srh: SegmentRoutingHeader | None
    payload: bytes
    uid: int | None = field(default=None, compare=False)

    @property
    def effective_next_header(self) -> int:
        """Protocol of the payload, looking through the SRH if present."""
        return self.srh.next_header if self.srh is not None else self.header.next_header

    @property
    def is_encapsulated(self) -> bool:
        return self.effective_next_header == NEXT_HEADER_IPV6


def active_segment(srh: SegmentRoutingHeader) -> IPv6Address:
    """The segment the packet is currently travelling toward."""
    if not 0 <= srh.segments_left < len(srh.segment_list):
        raise errors.InvariantViolation(
            f"segments_left {srh.segments_left} outside segment list of "
            f"length {len(srh.segment_list)}"
        )
    return srh.segment_list[srh.segments_left]


def validate_packet(packet: Packet) -> None:
    """Check every serializability invariant; raise InvariantViolation.

    Serialization calls this first so that a malformed in-memory packet
    is reported as a construction bug rather than emitted as bad bytes.
    """
    h = packet.header
    if h.version != 6:
        raise errors.InvariantViolation(f"version must be 6, got {h.version}")
    if not 0 <= h.traffic_class <= 0xFF:
        raise errors.InvariantViolation(f"traffic_class out of range: {h.traffic_class}")
    if not 0 <= h.flow_label <= 0xFFFFF:
        raise errors.InvariantViolation(f"flow_label out of range: {h.flow_label}")
    if not 0 <= h.next_header <= 0xFF:
        raise errors.InvariantViolation(f"next_header out of range: {h.next_header}")
    if not 0 <= h.hop_limit <= 0xFF:
        raise errors.InvariantViolation(f"hop_limit out of range: {h.hop_limit}")

    srh = packet.srh
    srh_len = 0
    if srh is not None:
        if h.next_header != NEXT_HEADER_ROUTING:
            raise errors.InvariantViolation(
                "SRH present but header.next_header != routing (43)"
            )
        n = len(srh.segment_list)
        if n == 0:
            raise errors.InvariantViolation("segment list must not be empty")
        if srh.routing_type != SRH_ROUTING_TYPE:
            raise errors.InvariantViolation(
                f"routing_type must be {SRH_ROUTING_TYPE}, got {srh.routing_type}"
            )
        if srh.last_entry != n - 1:
            raise errors.InvariantViolation(
                f"last_entry {srh.last_entry} != {n - 1} for {n} segments"
            )
        if not 0 <= srh.segments_left <= srh.last_entry:
            raise errors.InvariantViolation(
                f"segments_left {srh.segments_left} exceeds last_entry {srh.last_entry}"
            )
        if srh.hdr_ext_len != 2 * n:
            raise errors.InvariantViolation(
                f"hdr_ext_len {srh.hdr_ext_len} != 2 * {n} segments"
            )
        if not 0 <= srh.next_header <= 0xFF:
            raise errors.InvariantViolation(f"SRH next_header out of range: {srh.next_header}")
        if not 0 <= srh.flags <= 0xFF:
            raise errors.InvariantViolation(f"SRH flags out of range: {srh.flags}")
        if not 0 <= srh.tag <= 0xFFFF:
            raise errors.InvariantViolation(f"SRH tag out of range: {srh.tag}")
        srh_len = srh.byte_length
    elif h.next_header == NEXT_HEADER_ROUTING:
        raise errors.InvariantViolation("header.next_header is routing (43) but no SRH attached")

    expected = srh_len + len(packet.payload)
    if h.payload_length != expected:
        raise errors.InvariantViolation(
            f"payload_length {h.payload_length} != SRH {srh_len} + payload {len(packet.payload)}"
        )
    if expected > MAX_PAYLOAD_LEN:
        raise errors.InvariantViolation(f"payload too long for 16-bit length: {expected}")


# UDP carrier ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class UdpHeader:
    """8-byte UDP header. The checksum is carried opaquely, never computed."""

    src_port: int
    dst_port: int
    length: int
    checksum: int = 0


def encode_udp(src_port: int, dst_port: int, data: bytes, checksum: int = 0) -> bytes:
    """Datagram bytes for ``data`` with the length field filled in."""
    length = UDP_HEADER_LEN + len(data)
    if length > MAX_PAYLOAD_LEN:
        raise errors.InvariantViolation(f"UDP datagram too long: {length}")
    for name, value in (("src_port", src_port), ("dst_port", dst_port), ("checksum", checksum)):
        if not 0 <= value <= 0xFFFF:
            raise errors.InvariantViolation(f"UDP {name} out of range: {value}")
    return (
        src_port.to_bytes(2, "big")
        + dst_port.to_bytes(2, "big")
        + length.to_bytes(2, "big")
        + checksum.to_bytes(2, "big")
        + data
    )


def decode_udp(data: bytes) -> tuple[UdpHeader, bytes]:
    if len(data) < UDP_HEADER_LEN:
        raise errors.TruncatedPacket(f"UDP needs 8 bytes, got {len(data)}")
    header = UdpHeader(
        src_port=int.from_bytes(data[0:2], "big"),
        dst_port=int.from_bytes(data[2:4], "big"),
        length=int.from_bytes(data[4:6], "big"),
        checksum=int.from_bytes(data[6:8], "big"),
    )
    if header.length != len(data):
        raise errors.TruncatedPacket(
            f"UDP length field {header.length} != {len(data)} bytes present"
        )
    return header, data[UDP_HEADER_LEN:]


def udp_packet(
    src: IPv6Address,
    dst: IPv6Address,
    payload: bytes = b"",
    *,
    src_port: int = 40000,
    dst_port: int = 5201,
    hop_limit: int = DEFAULT_HOP_LIMIT,
    traffic_class: int = 0,
    flow_label: int = 0,
    uid: int | None = None,
) -> Packet:
    """Convenience builder for a plain IPv6+UDP packet with correct lengths."""
    datagram = encode_udp(src_port, dst_port, payload)
    header = Ipv6Header(
        version=6,
        traffic_class=traffic_class,
        flow_label=flow_label,
        payload_length=len(datagram),
        next_header=NEXT_HEADER_UDP,
        hop_limit=hop_limit,
        src=src,
        dst=dst,
    )
    return Packet(header=header, srh=None, payload=datagram, uid=uid)

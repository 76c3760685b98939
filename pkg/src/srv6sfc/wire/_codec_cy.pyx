# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled packet codec. Same contract as ``_codec_py``, same
exception types; the two backends are interchangeable and parity-tested.

boundscheck is off, so every read below is guarded by an explicit
length check first; arbitrary input must never reach past the buffer.
"""

from ipaddress import IPv6Address

from srv6sfc import errors
from srv6sfc.wire.model import Ipv6Header, Packet, SegmentRoutingHeader

BACKEND_NAME = "cython"

cdef enum:
    IPV6_HEADER_LEN = 40
    SRH_FIXED_LEN = 8
    SEGMENT_LEN = 16
    NEXT_HEADER_ROUTING = 43
    SRH_ROUTING_TYPE = 4
    MAX_PAYLOAD_LEN = 0xFFFF


def parse_packet(data):
    """Parse one packet, bit-exactly; re-serializing returns the input."""
    cdef bytes raw = data if type(data) is bytes else bytes(data)
    cdef const unsigned char* b = raw
    cdef Py_ssize_t n = len(raw)
    cdef Py_ssize_t total, offset, srh_len, seg_base, i
    cdef unsigned int version, traffic_class, flow_label, payload_length
    cdef unsigned int next_header, hop_limit
    cdef unsigned int routing_type, hdr_ext_len, seg_count, segments_left, last_entry

    if n < IPV6_HEADER_LEN:
        raise errors.TruncatedPacket(f"need 40 bytes for the fixed header, got {n}")

    version = b[0] >> 4
    if version != 6:
        raise errors.BadVersion(f"version nibble is {version}, not 6")
    traffic_class = ((b[0] & 0x0F) << 4) | (b[1] >> 4)
    flow_label = ((b[1] & 0x0F) << 16) | (b[2] << 8) | b[3]
    payload_length = (b[4] << 8) | b[5]
    next_header = b[6]
    hop_limit = b[7]

    total = IPV6_HEADER_LEN + payload_length
    if n < total:
        raise errors.TruncatedPacket(
            f"payload_length declares {payload_length} bytes, only {n - IPV6_HEADER_LEN} present"
        )
    if n > total:
        raise errors.TrailingBytes(f"{n - total} bytes beyond the declared packet")

    header = Ipv6Header(
        version=6,
        traffic_class=traffic_class,
        flow_label=flow_label,
        payload_length=payload_length,
        next_header=next_header,
        hop_limit=hop_limit,
        src=IPv6Address(raw[8:24]),
        dst=IPv6Address(raw[24:40]),
    )

    srh = None
    offset = IPV6_HEADER_LEN
    if next_header == NEXT_HEADER_ROUTING:
        if payload_length < SRH_FIXED_LEN:
            raise errors.TruncatedPacket("routing header overruns the declared payload")
        routing_type = b[offset + 2]
        if routing_type != SRH_ROUTING_TYPE:
            raise errors.BadRoutingType(f"routing_type {routing_type}, expected {SRH_ROUTING_TYPE}")
        hdr_ext_len = b[offset + 1]
        if hdr_ext_len == 0 or hdr_ext_len % 2 != 0:
            raise errors.MalformedSrh(f"hdr_ext_len {hdr_ext_len} is not a positive even value")
        seg_count = hdr_ext_len // 2
        srh_len = SRH_FIXED_LEN + 8 * hdr_ext_len
        if payload_length < <unsigned int>srh_len:
            raise errors.TruncatedPacket(
                f"SRH needs {srh_len} bytes, payload declares {payload_length}"
            )
        segments_left = b[offset + 3]
        last_entry = b[offset + 4]
        if last_entry != seg_count - 1:
            raise errors.MalformedSrh(
                f"last_entry {last_entry} inconsistent with hdr_ext_len {hdr_ext_len}"
            )
        if segments_left > last_entry:
            raise errors.MalformedSrh(
                f"segments_left {segments_left} exceeds last_entry {last_entry}"
            )
        seg_base = offset + SRH_FIXED_LEN
        segments = []
        for i in range(seg_count):
            segments.append(
                IPv6Address(raw[seg_base + i * SEGMENT_LEN : seg_base + (i + 1) * SEGMENT_LEN])
            )
        srh = SegmentRoutingHeader(
            next_header=b[offset],
            hdr_ext_len=hdr_ext_len,
            routing_type=routing_type,
            segments_left=segments_left,
            last_entry=last_entry,
            flags=b[offset + 5],
            tag=(b[offset + 6] << 8) | b[offset + 7],
            segment_list=tuple(segments),
        )
        offset += srh_len

    return Packet(header=header, srh=srh, payload=raw[offset:total])


def serialize_packet(packet):
    """Emit network byte order; the exact inverse of :func:`parse_packet`."""
    header = packet.header
    srh = packet.srh
    payload = packet.payload

    cdef long version = header.version
    cdef long traffic_class = header.traffic_class
    cdef long flow_label = header.flow_label
    cdef long payload_length = header.payload_length
    cdef long next_header = header.next_header
    cdef long hop_limit = header.hop_limit
    cdef Py_ssize_t payload_len = len(payload)
    cdef Py_ssize_t srh_len = 0
    cdef Py_ssize_t seg_count = 0
    cdef long segments_left = 0, last_entry = 0, hdr_ext_len = 0
    cdef long srh_next = 0, srh_flags = 0, srh_tag = 0, routing_type = 0

    if version != 6:
        raise errors.InvariantViolation(f"version must be 6, got {version}")
    if not 0 <= traffic_class <= 0xFF:
        raise errors.InvariantViolation(f"traffic_class out of range: {traffic_class}")
    if not 0 <= flow_label <= 0xFFFFF:
        raise errors.InvariantViolation(f"flow_label out of range: {flow_label}")
    if not 0 <= next_header <= 0xFF:
        raise errors.InvariantViolation(f"next_header out of range: {next_header}")
    if not 0 <= hop_limit <= 0xFF:
        raise errors.InvariantViolation(f"hop_limit out of range: {hop_limit}")

    if srh is not None:
        if next_header != NEXT_HEADER_ROUTING:
            raise errors.InvariantViolation(
                "SRH present but header.next_header != routing (43)"
            )
        seg_count = len(srh.segment_list)
        if seg_count == 0:
            raise errors.InvariantViolation("segment list must not be empty")
        routing_type = srh.routing_type
        if routing_type != SRH_ROUTING_TYPE:
            raise errors.InvariantViolation(
                f"routing_type must be {SRH_ROUTING_TYPE}, got {routing_type}"
            )
        last_entry = srh.last_entry
        if last_entry != seg_count - 1:
            raise errors.InvariantViolation(
                f"last_entry {last_entry} != {seg_count - 1} for {seg_count} segments"
            )
        segments_left = srh.segments_left
        if not 0 <= segments_left <= last_entry:
            raise errors.InvariantViolation(
                f"segments_left {segments_left} exceeds last_entry {last_entry}"
            )
        hdr_ext_len = srh.hdr_ext_len
        if hdr_ext_len != 2 * seg_count:
            raise errors.InvariantViolation(
                f"hdr_ext_len {hdr_ext_len} != 2 * {seg_count} segments"
            )
        srh_next = srh.next_header
        srh_flags = srh.flags
        srh_tag = srh.tag
        if not 0 <= srh_next <= 0xFF:
            raise errors.InvariantViolation(f"SRH next_header out of range: {srh_next}")
        if not 0 <= srh_flags <= 0xFF:
            raise errors.InvariantViolation(f"SRH flags out of range: {srh_flags}")
        if not 0 <= srh_tag <= 0xFFFF:
            raise errors.InvariantViolation(f"SRH tag out of range: {srh_tag}")
        srh_len = SRH_FIXED_LEN + SEGMENT_LEN * seg_count
    elif next_header == NEXT_HEADER_ROUTING:
        raise errors.InvariantViolation("header.next_header is routing (43) but no SRH attached")

    if payload_length != srh_len + payload_len:
        raise errors.InvariantViolation(
            f"payload_length {payload_length} != SRH {srh_len} + payload {payload_len}"
        )
    if payload_length > MAX_PAYLOAD_LEN:
        raise errors.InvariantViolation(f"payload too long for 16-bit length: {payload_length}")

    out = bytearray(IPV6_HEADER_LEN + payload_length)
    cdef unsigned char* o = out
    o[0] = 0x60 | <unsigned char>(traffic_class >> 4)
    o[1] = <unsigned char>(((traffic_class & 0x0F) << 4) | (flow_label >> 16))
    o[2] = <unsigned char>((flow_label >> 8) & 0xFF)
    o[3] = <unsigned char>(flow_label & 0xFF)
    o[4] = <unsigned char>(payload_length >> 8)
    o[5] = <unsigned char>(payload_length & 0xFF)
    o[6] = <unsigned char>next_header
    o[7] = <unsigned char>hop_limit
    out[8:24] = header.src.packed
    out[24:40] = header.dst.packed

    cdef Py_ssize_t offset = IPV6_HEADER_LEN
    if srh is not None:
        o[offset] = <unsigned char>srh_next
        o[offset + 1] = <unsigned char>hdr_ext_len
        o[offset + 2] = <unsigned char>routing_type
        o[offset + 3] = <unsigned char>segments_left
        o[offset + 4] = <unsigned char>last_entry
        o[offset + 5] = <unsigned char>srh_flags
        o[offset + 6] = <unsigned char>(srh_tag >> 8)
        o[offset + 7] = <unsigned char>(srh_tag & 0xFF)
        offset += SRH_FIXED_LEN
        for segment in srh.segment_list:
            out[offset : offset + SEGMENT_LEN] = segment.packed
            offset += SEGMENT_LEN

    if payload_len:
        out[offset:] = payload
    return bytes(out)

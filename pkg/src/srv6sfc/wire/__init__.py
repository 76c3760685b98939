"""Packet wire codec with a compiled fast path.

``parse_packet`` / ``serialize_packet`` come from the active backend:
the Cython extension when it is built, otherwise the pure-Python
reference codec. Setting ``SRV6SFC_PURE_PY`` in the environment forces
the fallback. :func:`set_backend` swaps backends at runtime; modules
that want to honour a swap should call through this module
(``wire.parse_packet(...)``) rather than binding the function once.
"""

from __future__ import annotations

import os

from srv6sfc.wire import _codec_py
from srv6sfc.wire.model import (
    DEFAULT_HOP_LIMIT,
    IPV6_HEADER_LEN,
    MAX_PAYLOAD_LEN,
    NEXT_HEADER_IPV6,
    NEXT_HEADER_NONE,
    NEXT_HEADER_ROUTING,
    NEXT_HEADER_UDP,
    SEGMENT_LEN,
    SRH_FIXED_LEN,
    SRH_ROUTING_TYPE,
    UDP_HEADER_LEN,
    Ipv6Header,
    Packet,
    SegmentRoutingHeader,
    UdpHeader,
    active_segment,
    decode_udp,
    encode_udp,
    udp_packet,
    validate_packet,
)

__all__ = [
    "DEFAULT_HOP_LIMIT",
    "IPV6_HEADER_LEN",
    "MAX_PAYLOAD_LEN",
    "NEXT_HEADER_IPV6",
    "NEXT_HEADER_NONE",
    "NEXT_HEADER_ROUTING",
    "NEXT_HEADER_UDP",
    "SEGMENT_LEN",
    "SRH_FIXED_LEN",
    "SRH_ROUTING_TYPE",
    "UDP_HEADER_LEN",
    "Ipv6Header",
    "Packet",
    "SegmentRoutingHeader",
    "UdpHeader",
    "active_backend",
    "active_segment",
    "available_backends",
    "decode_udp",
    "encode_udp",
    "hexdump",
    "parse_packet",
    "serialize_packet",
    "set_backend",
    "udp_packet",
    "validate_packet",
]

_BACKENDS = {"python": _codec_py}

try:
    from srv6sfc.wire import _codec_cy

    _BACKENDS["cython"] = _codec_cy
except ImportError:
    _codec_cy = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active_name


def set_backend(name: str) -> None:
    """Rebind parse/serialize to the named backend ("python" or "cython")."""
    global parse_packet, serialize_packet, _active_name
    try:
        codec = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}") from None
    parse_packet = codec.parse_packet
    serialize_packet = codec.serialize_packet
    _active_name = name


if os.environ.get("SRV6SFC_PURE_PY"):
    set_backend("python")
elif "cython" in _BACKENDS:
    set_backend("cython")
else:
    set_backend("python")


def hexdump(data: bytes) -> str:
    """Classic dump: offset, 16 hex bytes in two groups, ASCII gutter."""
    lines = []
    for base in range(0, len(data), 16):
        chunk = data[base : base + 16]
        left = " ".join(f"{byte:02x}" for byte in chunk[:8])
        right = " ".join(f"{byte:02x}" for byte in chunk[8:])
        gutter = "".join(chr(byte) if 0x20 <= byte < 0x7F else "." for byte in chunk)
        lines.append(f"{base:08x}  {left:<23}  {right:<23}  |{gutter}|")
    return "\n".join(lines)

"""Open Sound Control 1.0 wire codec.

Bit-exact encoder/decoder for the subset of OSC 1.0 the engine speaks:
messages with int32 ('i'), float32 ('f'), string ('s') and blob ('b')
arguments, plus bundles. Everything is big-endian and 4-byte aligned per
the OSC 1.0 spec. One packet per UDP datagram.

Float arguments are quantized to IEEE-754 single precision on encode
(that is what the 'f' tag carries), so decode(encode(m)) == m holds for
messages whose floats are float32-representable.

All functions here are pure and thread-safe.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

IMMEDIATELY = 1  # OSC timetag value meaning "process now"

_SUPPORTED_TAGS = frozenset("ifsb")


class OscError(Exception):
    """Base class for every codec error."""


class InvalidAddress(OscError):
    pass


class InteriorNul(OscError):
    pass


class Truncated(OscError):
    pass


class Misaligned(OscError):
    pass


class BadTypeTag(OscError):
    pass


class BadHeader(OscError):
    pass


@dataclass(frozen=True)
class OscMessage:
    """An OSC message: address pattern plus ordered typed arguments.

    Argument Python types map to wire tags: int -> 'i', float -> 'f',
    str -> 's', bytes -> 'b'.
    """

    address: str
    args: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def type_tags(self) -> str:
        return "," + "".join(_tag_for(a) for a in self.args)


@dataclass(frozen=True)
class OscBundle:
    """An OSC bundle: 64-bit NTP-style timetag plus nested packets."""

    timetag: int = IMMEDIATELY
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))


def _tag_for(arg) -> str:
    # bool is an int subclass; encode it as int32 like any int.
    if isinstance(arg, bool) or isinstance(arg, int):
        return "i"
    if isinstance(arg, float):
        return "f"
    if isinstance(arg, str):
        return "s"
    if isinstance(arg, (bytes, bytearray)):
        return "b"
    raise OscError(f"unsupported argument type {type(arg).__name__}")


def _pad_string(s: str) -> bytes:
    """NUL-terminate and pad to a 4-byte boundary (at least one NUL)."""
    raw = s.encode("utf-8")
    if b"\x00" in raw:
        raise InteriorNul(f"string argument contains NUL: {s!r}")
    pad = 4 - (len(raw) % 4)
    return raw + b"\x00" * pad


def _pad_blob(data: bytes) -> bytes:
    n = len(data)
    pad = (4 - n % 4) % 4
    return struct.pack(">i", n) + bytes(data) + b"\x00" * pad


def encode_message(msg: OscMessage) -> bytes:
    """Encode a message: padded address, padded type tags, packed args."""
    if not msg.address or not msg.address.startswith("/"):
        raise InvalidAddress(f"address must start with '/': {msg.address!r}")
    out = [_pad_string(msg.address), _pad_string(msg.type_tags)]
    for arg in msg.args:
        tag = _tag_for(arg)
        if tag == "i":
            try:
                out.append(struct.pack(">i", int(arg)))
            except struct.error as e:
                raise OscError(f"int32 out of range: {arg}") from e
        elif tag == "f":
            out.append(struct.pack(">f", arg))
        elif tag == "s":
            out.append(_pad_string(arg))
        else:
            out.append(_pad_blob(arg))
    return b"".join(out)


def _read_string(data: bytes, pos: int) -> tuple[str, int]:
    end = data.find(b"\x00", pos)
    if end < 0:
        raise Truncated("unterminated string")
    raw = data[pos:end]
    # Skip the NUL plus padding up to the next 4-byte boundary.
    pos = end + 1
    pos += (4 - pos % 4) % 4
    if pos > len(data):
        raise Truncated("string padding runs past end of packet")
    try:
        return raw.decode("utf-8"), pos
    except UnicodeDecodeError as e:
        raise OscError("string is not valid UTF-8") from e


def decode_message(data: bytes) -> OscMessage:
    """Inverse of encode_message on its image.

    Raises Truncated when the packet ends early, Misaligned when its
    length is off the 4-byte grid or bytes trail the last argument, and
    BadTypeTag for tag characters outside {i, f, s, b}.
    """
    if len(data) < 8:
        raise Truncated(f"message needs at least 8 bytes, got {len(data)}")
    if len(data) % 4 != 0:
        raise Misaligned(f"length {len(data)} is not a multiple of 4")
    address, pos = _read_string(data, 0)
    if not address.startswith("/"):
        raise InvalidAddress(f"address must start with '/': {address!r}")
    tags, pos = _read_string(data, pos)
    if not tags.startswith(","):
        raise BadTypeTag(f"type tag string must start with ',': {tags!r}")
    args = []
    for tag in tags[1:]:
        if tag not in _SUPPORTED_TAGS:
            raise BadTypeTag(f"unsupported type tag {tag!r}")
        if tag in ("i", "f"):
            if pos + 4 > len(data):
                raise Truncated("argument runs past end of packet")
            (value,) = struct.unpack_from(">i" if tag == "i" else ">f", data, pos)
            args.append(int(value) if tag == "i" else float(value))
            pos += 4
        elif tag == "s":
            value, pos = _read_string(data, pos)
            args.append(value)
        else:
            if pos + 4 > len(data):
                raise Truncated("blob size runs past end of packet")
            (size,) = struct.unpack_from(">i", data, pos)
            pos += 4
            if size < 0:
                raise OscError(f"negative blob size {size}")
            if pos + size > len(data):
                raise Truncated("blob data runs past end of packet")
            args.append(data[pos : pos + size])
            pos += size + (4 - size % 4) % 4
            if pos > len(data):
                raise Truncated("blob padding runs past end of packet")
    if pos != len(data):
        raise Misaligned(f"{len(data) - pos} trailing bytes after last argument")
    return OscMessage(address, tuple(args))


def encode_bundle(bundle: OscBundle) -> bytes:
    """Encode '#bundle\\0', 8-byte timetag, then size-prefixed elements."""
    if not 0 <= bundle.timetag < 2**64:
        raise OscError(f"timetag out of uint64 range: {bundle.timetag}")
    out = [b"#bundle\x00", struct.pack(">Q", bundle.timetag)]
    for el in bundle.elements:
        payload = encode_packet(el)
        out.append(struct.pack(">i", len(payload)))
        out.append(payload)
    return b"".join(out)


def decode_bundle(data: bytes) -> OscBundle:
    if len(data) < 16:
        raise Truncated(f"bundle needs at least 16 bytes, got {len(data)}")
    if not data.startswith(b"#bundle\x00"):
        raise BadHeader("missing '#bundle' header")
    if len(data) % 4 != 0:
        raise Misaligned(f"length {len(data)} is not a multiple of 4")
    (timetag,) = struct.unpack_from(">Q", data, 8)
    pos = 16
    elements = []
    while pos < len(data):
        if pos + 4 > len(data):
            raise Truncated("element size runs past end of bundle")
        (size,) = struct.unpack_from(">i", data, pos)
        pos += 4
        if size < 0 or size % 4 != 0:
            raise Misaligned(f"element size {size} is not a positive multiple of 4")
        if pos + size > len(data):
            raise Truncated("element runs past end of bundle")
        elements.append(decode_packet(data[pos : pos + size]))
        pos += size
    return OscBundle(timetag, tuple(elements))


def encode_packet(packet) -> bytes:
    if isinstance(packet, OscBundle):
        return encode_bundle(packet)
    if isinstance(packet, OscMessage):
        return encode_message(packet)
    raise OscError(f"not an OSC packet: {type(packet).__name__}")


def decode_packet(data: bytes):
    """Decode a datagram into a message or bundle, never crashing:
    malformed input raises a structured OscError subclass."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise OscError("packet must be bytes")
    data = bytes(data)
    if data.startswith(b"#bundle\x00"):
        return decode_bundle(data)
    return decode_message(data)


def flatten(packet) -> list[OscMessage]:
    """All messages inside a packet, bundles recursed, order preserved.

    Timetags are carried but not scheduled on: the engine treats every
    inbound packet as immediate.
    """
    if isinstance(packet, OscMessage):
        return [packet]
    out: list[OscMessage] = []
    for el in packet.elements:
        out.extend(flatten(el))
    return out


def address_matches(pattern: str, address: str) -> bool:
    """Exact match, or prefix match when the pattern ends in a single '*'."""
    if pattern.endswith("*"):
        return address.startswith(pattern[:-1])
    return pattern == address

"""OSC 1.0 codec: byte layouts, round trips, structured failure."""

import random
import struct

import pytest

from sonarm import osc


def f32(x: float) -> float:
    """Quantize to what the 'f' tag can carry."""
    return struct.unpack(">f", struct.pack(">f", x))[0]


def random_message(rng: random.Random, depth: int = 0) -> osc.OscMessage:
    address = "/" + "/".join(
        "".join(rng.choice("abcdefgh") for _ in range(rng.randint(1, 6)))
        for _ in range(rng.randint(1, 3))
    )
    args = []
    for _ in range(rng.randint(0, 6)):
        kind = rng.randrange(4)
        if kind == 0:
            args.append(rng.randint(-(2**31), 2**31 - 1))
        elif kind == 1:
            args.append(f32(rng.uniform(-1e6, 1e6)))
        elif kind == 2:
            args.append("".join(rng.choice("xyz /#,*") for _ in range(rng.randint(0, 12))))
        else:
            args.append(bytes(rng.randrange(256) for _ in range(rng.randint(0, 20))))
    return osc.OscMessage(address, tuple(args))


def random_packet(rng: random.Random, depth: int = 0):
    if depth < 2 and rng.random() < 0.25:
        return osc.OscBundle(
            timetag=rng.randrange(2**64),
            elements=tuple(random_packet(rng, depth + 1) for _ in range(rng.randint(0, 3))),
        )
    return random_message(rng)


# -- hand-computed byte layouts ---------------------------------------------


def test_encode_no_arg_message_layout():
    # "/p" padded to 4 bytes, "," padded to 4 bytes: 8 bytes total.
    data = osc.encode_message(osc.OscMessage("/p"))
    assert data == b"/p\x00\x00,\x00\x00\x00"


def test_encode_single_zero_float():
    # IEEE-754 zero is all-zero bytes; 4 (addr) + 4 (tags) + 4 (arg) = 12.
    data = osc.encode_message(osc.OscMessage("/a", (0.0,)))
    assert len(data) == 12
    assert data[-4:] == b"\x00\x00\x00\x00"


def test_encode_tcp_pose_layout():
    # 12 (address "/tcp/pose" padded) + 8 (",ffffff" padded) + 24 (6 floats).
    msg = osc.OscMessage("/tcp/pose", tuple(float(i) for i in range(6)))
    data = osc.encode_message(msg)
    assert len(data) == 44
    assert data[:12] == b"/tcp/pose\x00\x00\x00"
    assert data[12:20] == b",ffffff\x00"
    floats = struct.unpack(">6f", data[20:])
    assert list(floats) == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]


def test_encode_empty_bundle_immediately():
    data = osc.encode_bundle(osc.OscBundle(timetag=1))
    assert data == b"#bundle\x00" + b"\x00" * 7 + b"\x01"
    assert len(data) == 16


def test_blob_padding():
    data = osc.encode_message(osc.OscMessage("/b", (b"abcde",)))
    # addr 4 + tags 4 + size 4 + 5 data + 3 pad
    assert len(data) == 20
    assert data[8:12] == struct.pack(">i", 5)
    assert data[12:17] == b"abcde"
    assert data[17:] == b"\x00\x00\x00"


# -- round trips -------------------------------------------------------------


def test_roundtrip_simple():
    msg = osc.OscMessage("/tcp/pose", (1.5, -2.25, 0.0, 3.0, -4.5, 6.75))
    assert osc.decode_message(osc.encode_message(msg)) == msg


def test_roundtrip_all_types():
    msg = osc.OscMessage("/mix", (7, -1, 0.5, "hello", b"\x01\x02\x03", ""))
    assert osc.decode_message(osc.encode_message(msg)) == msg


def test_roundtrip_randomized_messages():
    rng = random.Random(42)
    for _ in range(2000):
        msg = random_message(rng)
        data = osc.encode_message(msg)
        assert len(data) % 4 == 0
        assert osc.decode_message(data) == msg


def test_roundtrip_randomized_packets_with_bundles():
    rng = random.Random(7)
    for _ in range(500):
        packet = random_packet(rng)
        data = osc.encode_packet(packet)
        assert len(data) % 4 == 0
        assert osc.decode_packet(data) == packet


def test_nested_bundle_depth_two_roundtrips():
    inner = osc.OscBundle(timetag=123456, elements=(osc.OscMessage("/x", (1,)),))
    outer = osc.OscBundle(timetag=1, elements=(inner, osc.OscMessage("/y")))
    assert osc.decode_packet(osc.encode_packet(outer)) == outer


def test_bundle_of_one_empty_arg_message_roundtrips():
    b = osc.OscBundle(timetag=1, elements=(osc.OscMessage("/m"),))
    assert osc.decode_bundle(osc.encode_bundle(b)) == b


# -- errors -------------------------------------------------------------------


def test_missing_leading_slash_rejected():
    with pytest.raises(osc.InvalidAddress):
        osc.encode_message(osc.OscMessage("nope"))
    with pytest.raises(osc.InvalidAddress):
        osc.encode_message(osc.OscMessage(""))


def test_interior_nul_rejected():
    with pytest.raises(osc.InteriorNul):
        osc.encode_message(osc.OscMessage("/s", ("a\x00b",)))


def test_three_byte_input_truncated():
    with pytest.raises(osc.Truncated):
        osc.decode_message(b"/a\x00")


def test_unknown_type_tag():
    data = b"/a\x00\x00,q\x00\x00" + b"\x00" * 4
    with pytest.raises(osc.BadTypeTag):
        osc.decode_message(data)


def test_misaligned_length():
    good = osc.encode_message(osc.OscMessage("/a", (1,)))
    with pytest.raises(osc.Misaligned):
        osc.decode_message(good + b"\x00\x00")  # 4-aligned? no: +2
    with pytest.raises(osc.Misaligned):
        osc.decode_message(good + b"\x00\x00\x00\x00")  # aligned but trailing


def test_truncated_argument():
    # claims one int arg but supplies no bytes for it
    data = b"/a\x00\x00,i\x00\x00"
    with pytest.raises(osc.Truncated):
        osc.decode_message(data)


def test_bad_bundle_header():
    with pytest.raises(osc.BadHeader):
        osc.decode_bundle(b"#bundlX\x00" + b"\x00" * 8)


def test_fuzz_decode_never_crashes():
    rng = random.Random(1234)
    for _ in range(20000):
        n = rng.randint(0, 64)
        data = bytes(rng.randrange(256) for _ in range(n))
        try:
            osc.decode_packet(data)
        except osc.OscError:
            pass  # structured failure is the contract


def test_fuzz_mutated_valid_packets():
    rng = random.Random(99)
    base = osc.encode_message(osc.OscMessage("/tcp/pose", (0.1, 0.2, 0.3, 1.0, 2.0, 3.0)))
    for _ in range(5000):
        data = bytearray(base)
        for _ in range(rng.randint(1, 4)):
            data[rng.randrange(len(data))] = rng.randrange(256)
        try:
            osc.decode_packet(bytes(data))
        except osc.OscError:
            pass


# -- address matching ---------------------------------------------------------


def test_address_matching():
    assert osc.address_matches("/collab/pos", "/collab/pos")
    assert not osc.address_matches("/collab/pos", "/collab/pose")
    assert osc.address_matches("/env/*", "/env/light")
    assert osc.address_matches("/env/*", "/env/")
    assert not osc.address_matches("/env/*", "/envx/light")

"""Mapping layer: parsing, curves, evaluation, round trips."""

import math

import pytest

from sonarm import mapping
from sonarm.mapping import (
    BadRange,
    Curve,
    DuplicateSink,
    MappingSyntaxError,
    MissingSignal,
    SignalId,
    UnknownSink,
    apply_curve,
    evaluate,
    parse_mapping,
    parse_routes,
    route_from_dict,
    serialize_mapping,
)

SINKS = {"master.gain_db", "lp1.cutoff_hz", "voice0.level"}

FIXTURE = """\
routes:
  - source: tcp_speed
    in: [0.0, 1.5]
    curve: linear
    out: [200.0, 4000.0]
    smooth_ms: 60.0
    sink: lp1.cutoff_hz
  - source: proximity
    in: [0.0, 2.0]
    curve: {type: exponential, k: 2.0}
    out: [-24.0, 0.0]
    smooth_ms: 120.0
    sink: master.gain_db
"""


def test_empty_routes_is_valid():
    spec = parse_mapping("routes: []", valid_sinks=SINKS)
    assert spec.routes == ()
    assert parse_mapping("", valid_sinks=SINKS).routes == ()


def test_duplicate_sink_rejected():
    route = {"source": "tcp_speed", "in": [0, 1], "out": [0, 1], "sink": "voice0.level"}
    with pytest.raises(DuplicateSink):
        parse_routes([route, dict(route)], valid_sinks=SINKS)


def test_unknown_sink_rejected():
    route = {"source": "tcp_speed", "in": [0, 1], "out": [0, 1], "sink": "bogus.param"}
    with pytest.raises(UnknownSink):
        route_from_dict(route, valid_sinks=SINKS)


def test_bad_range_rejected():
    with pytest.raises(BadRange):
        route_from_dict({"source": "tcp_speed", "in": [1, 1], "out": [0, 1], "sink": "voice0.level"})
    with pytest.raises(BadRange):
        route_from_dict({"source": "tcp_speed", "in": [2, 1], "out": [0, 1], "sink": "voice0.level"})
    with pytest.raises(BadRange):
        route_from_dict(
            {"source": "tcp_speed", "in": [0, 1], "out": [0, 1], "sink": "voice0.level", "smooth_ms": -1}
        )


def test_inverted_out_range_is_legal():
    r = route_from_dict({"source": "proximity", "in": [0, 2], "out": [0, -24], "sink": "master.gain_db"})
    assert r.out_lo == 0.0 and r.out_hi == -24.0


def test_yaml_syntax_error_carries_line():
    bad = "routes:\n  - source: tcp_speed\n    in: [0, 1\n"
    with pytest.raises(MappingSyntaxError) as exc:
        parse_mapping(bad)
    assert exc.value.line is not None


def test_signal_id_parse_and_str():
    assert str(SignalId.parse("joint_speed.3")) == "joint_speed.3"
    assert str(SignalId.parse("tcp_speed")) == "tcp_speed"
    assert str(SignalId.parse("env.light")) == "env.light"
    with pytest.raises(MappingSyntaxError):
        SignalId.parse("joint_speed.9")
    with pytest.raises(MappingSyntaxError):
        SignalId.parse("warp_factor")


def test_undeclared_env_signal_rejected():
    route = {"source": "env.light", "in": [0, 1], "out": [0, 1], "sink": "voice0.level"}
    with pytest.raises(MappingSyntaxError):
        route_from_dict(route, valid_sinks=SINKS, env_names=set())
    ok = route_from_dict(route, valid_sinks=SINKS, env_names={"light"})
    assert ok.source.name == "light"


def test_fixture_roundtrip_is_normal_form():
    spec = parse_mapping(FIXTURE, valid_sinks=SINKS)
    text = serialize_mapping(spec)
    spec2 = parse_mapping(text, valid_sinks=SINKS)
    assert spec2 == spec
    assert serialize_mapping(spec2) == text


# -- curves ---------------------------------------------------------------------


def test_curve_endpoints_preserved():
    for curve in (Curve("linear"), Curve("exponential", 2.0), Curve("exponential", -3.0),
                  Curve("logarithmic", 2.0), Curve("logarithmic", 0.5)):
        assert apply_curve(0.0, curve) == 0.0
        assert abs(apply_curve(1.0, curve) - 1.0) < 1e-12


def test_linear_midpoint():
    assert apply_curve(0.5, Curve("linear")) == 0.5


def test_exponential_k2_midpoint_value():
    # (e^1 - 1) / (e^2 - 1): evaluated independently with math.e
    expected = (math.e - 1.0) / (math.e**2 - 1.0)
    assert abs(expected - 0.2689414213699951) < 1e-15
    assert abs(apply_curve(0.5, Curve("exponential", 2.0)) - expected) < 1e-12


def test_logarithmic_inverts_exponential():
    c = Curve("exponential", 2.0)
    inv = Curve("logarithmic", 2.0)
    for x in (0.0, 0.1, 0.33, 0.5, 0.77, 1.0):
        assert abs(apply_curve(apply_curve(x, c), inv) - x) < 1e-12


# -- evaluation -------------------------------------------------------------------


def demo_spec() -> mapping.MappingSpec:
    return parse_routes(
        [
            {"source": "proximity", "in": [0.0, 2.0], "curve": "linear",
             "out": [0.0, -24.0], "smooth_ms": 100.0, "sink": "master.gain_db"},
            {"source": "tcp_speed", "in": [0.0, 1.5], "curve": "linear",
             "out": [200.0, 4000.0], "smooth_ms": 50.0, "sink": "lp1.cutoff_hz"},
        ],
        valid_sinks=SINKS,
    )


def base_signals() -> dict:
    return {"proximity": 0.5, "tcp_speed": 0.0}


def test_evaluate_matches_hand_computed_example():
    # proximity 0.5 on in [0,2] -> out [0,-24] linear = -6.0
    out = dict(evaluate(demo_spec(), base_signals()))
    assert abs(out["master.gain_db"] - (-6.0)) < 1e-12


def test_evaluate_endpoints_and_clamping():
    spec = demo_spec()
    out = dict(evaluate(spec, {"proximity": 0.0, "tcp_speed": 0.0}))
    assert out["master.gain_db"] == 0.0
    assert out["lp1.cutoff_hz"] == 200.0
    out = dict(evaluate(spec, {"proximity": 99.0, "tcp_speed": -5.0}))
    assert out["master.gain_db"] == -24.0
    assert out["lp1.cutoff_hz"] == 200.0


def test_evaluate_preserves_route_order():
    spec = demo_spec()
    sinks = [sink for sink, _ in evaluate(spec, base_signals())]
    assert sinks == ["master.gain_db", "lp1.cutoff_hz"]


def test_evaluate_missing_signal():
    with pytest.raises(MissingSignal):
        evaluate(demo_spec(), {"proximity": 0.5})


def test_evaluate_pure():
    spec = demo_spec()
    sig = base_signals()
    assert evaluate(spec, sig) == evaluate(spec, sig)


def test_outputs_within_span_and_monotone():
    for curve in ("linear", {"type": "exponential", "k": 3.0}, {"type": "logarithmic", "k": 2.0}):
        for out_range in ([0.0, 10.0], [10.0, 0.0]):
            spec = parse_routes(
                [{"source": "tcp_speed", "in": [0.0, 1.0], "curve": curve,
                  "out": out_range, "sink": "lp1.cutoff_hz"}],
                valid_sinks=SINKS,
            )
            lo, hi = min(out_range), max(out_range)
            last = None
            ascending = out_range[1] > out_range[0]
            for x in [-1.0, 0.0, 0.1, 0.4, 0.75, 1.0, 2.0]:
                (_, y), = evaluate(spec, {"tcp_speed": x})
                assert lo - 1e-12 <= y <= hi + 1e-12
                if last is not None:
                    assert (y >= last - 1e-12) if ascending else (y <= last + 1e-12)
                last = y


def test_spec_upsert_and_delete():
    spec = demo_spec()
    new_route = route_from_dict(
        {"source": "proximity", "in": [0.0, 1.0], "out": [0.0, 1.0], "sink": "master.gain_db"},
        valid_sinks=SINKS,
    )
    updated = spec.with_route(new_route)
    assert len(updated.routes) == 2  # replaced, not appended
    assert updated.routes[0].in_hi == 1.0
    assert spec.routes[0].in_hi == 2.0  # original untouched
    removed = updated.without_sink("master.gain_db")
    assert removed.sinks() == ["lp1.cutoff_hz"]

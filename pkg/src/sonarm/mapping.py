"""Signal-to-parameter mapping: routes with ranges, curves and smoothing.

A route clamps its source signal into an input range, normalizes to
[0, 1], shapes it through a curve, and denormalizes into the output
range (which may be inverted). Smoothing is *not* applied here; each
route's smooth_ms rides along to the DSP parameter layer, which is the
single smoothing authority.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

DEFAULT_CURVE_K = 2.0

_PLAIN_SIGNALS = ("tcp_speed", "tcp_height", "proximity")
_INDEXED_SIGNALS = ("joint_speed", "joint_pos")


class MappingError(Exception):
    pass


class MappingSyntaxError(MappingError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


class UnknownSink(MappingError):
    pass


class DuplicateSink(MappingError):
    pass


class BadRange(MappingError):
    pass


class MissingSignal(MappingError):
    pass


@dataclass(frozen=True)
class SignalId:
    """A mapping source: kinematic signal, context signal, or env float."""

    kind: str
    index: int | None = None
    name: str | None = None

    @staticmethod
    def parse(text: str) -> "SignalId":
        text = str(text).strip()
        if text in _PLAIN_SIGNALS:
            return SignalId(kind=text)
        head, _, tail = text.partition(".")
        if head in _INDEXED_SIGNALS and tail != "":
            try:
                idx = int(tail)
            except ValueError:
                raise MappingSyntaxError(f"bad joint index in signal {text!r}")
            if not 0 <= idx <= 5:
                raise MappingSyntaxError(f"joint index must be 0..5 in {text!r}")
            return SignalId(kind=head, index=idx)
        if head == "env" and tail != "":
            return SignalId(kind="env", name=tail)
        raise MappingSyntaxError(f"unknown signal {text!r}")

    def __str__(self) -> str:
        if self.index is not None:
            return f"{self.kind}.{self.index}"
        if self.name is not None:
            return f"{self.kind}.{self.name}"
        return self.kind


@dataclass(frozen=True)
class Curve:
    type: str = "linear"  # linear | exponential | logarithmic
    k: float = DEFAULT_CURVE_K

    @staticmethod
    def parse(obj) -> "Curve":
        if obj is None:
            return Curve()
        if isinstance(obj, str):
            if obj not in ("linear", "exponential", "logarithmic"):
                raise MappingSyntaxError(f"unknown curve {obj!r}")
            return Curve(type=obj)
        if isinstance(obj, dict):
            ctype = obj.get("type", "linear")
            if ctype not in ("linear", "exponential", "logarithmic"):
                raise MappingSyntaxError(f"unknown curve {ctype!r}")
            k = float(obj.get("k", DEFAULT_CURVE_K))
            if ctype != "linear" and k == 0.0:
                raise MappingSyntaxError("curve k must be nonzero")
            return Curve(type=ctype, k=k)
        raise MappingSyntaxError(f"bad curve spec {obj!r}")

    def to_obj(self):
        if self.type == "linear":
            return "linear"
        return {"type": self.type, "k": self.k}


def apply_curve(x: float, curve: Curve) -> float:
    """Shape normalized x in [0,1]; endpoints map to themselves."""
    if curve.type == "linear":
        return x
    ek = math.expm1(curve.k)  # e^k - 1
    if curve.type == "exponential":
        return math.expm1(curve.k * x) / ek
    # logarithmic: inverse of the exponential curve with the same k
    return math.log1p(x * ek) / curve.k


@dataclass(frozen=True)
class MappingRoute:
    source: SignalId
    in_lo: float
    in_hi: float
    curve: Curve
    out_lo: float
    out_hi: float
    smooth_ms: float
    sink: str
    clamp: bool = True  # always true in v1

    def validate(self) -> None:
        if not self.in_lo < self.in_hi:
            raise BadRange(f"route {self.sink!r}: in range lo must be < hi")
        if self.smooth_ms < 0:
            raise BadRange(f"route {self.sink!r}: smooth_ms must be >= 0")
        if not all(
            math.isfinite(v) for v in (self.in_lo, self.in_hi, self.out_lo, self.out_hi)
        ):
            raise BadRange(f"route {self.sink!r}: ranges must be finite")


@dataclass(frozen=True)
class MappingSpec:
    routes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))

    def sinks(self) -> list[str]:
        return [r.sink for r in self.routes]

    def with_route(self, route: MappingRoute) -> "MappingSpec":
        """Upsert by sink, preserving route order for existing sinks."""
        routes = list(self.routes)
        for i, r in enumerate(routes):
            if r.sink == route.sink:
                routes[i] = route
                return MappingSpec(tuple(routes))
        routes.append(route)
        return MappingSpec(tuple(routes))

    def without_sink(self, sink: str) -> "MappingSpec":
        return MappingSpec(tuple(r for r in self.routes if r.sink != sink))


def route_from_dict(d: dict, valid_sinks=None, env_names=None) -> MappingRoute:
    if not isinstance(d, dict):
        raise MappingSyntaxError(f"route must be a mapping, got {type(d).__name__}")
    try:
        source = SignalId.parse(d["source"])
        in_range = d["in"]
        out_range = d["out"]
        sink = str(d["sink"])
    except KeyError as e:
        raise MappingSyntaxError(f"route missing field {e.args[0]!r}")
    if not (isinstance(in_range, (list, tuple)) and len(in_range) == 2):
        raise MappingSyntaxError("'in' must be a [lo, hi] pair")
    if not (isinstance(out_range, (list, tuple)) and len(out_range) == 2):
        raise MappingSyntaxError("'out' must be a [lo, hi] pair")
    route = MappingRoute(
        source=source,
        in_lo=float(in_range[0]),
        in_hi=float(in_range[1]),
        curve=Curve.parse(d.get("curve")),
        out_lo=float(out_range[0]),
        out_hi=float(out_range[1]),
        smooth_ms=float(d.get("smooth_ms", 0.0)),
        sink=sink,
    )
    route.validate()
    if env_names is not None and source.kind == "env" and source.name not in env_names:
        raise MappingSyntaxError(f"env signal {source.name!r} not declared in config")
    if valid_sinks is not None and sink not in valid_sinks:
        raise UnknownSink(sink)
    return route


def route_to_dict(route: MappingRoute) -> dict:
    return {
        "source": str(route.source),
        "in": [route.in_lo, route.in_hi],
        "curve": route.curve.to_obj(),
        "out": [route.out_lo, route.out_hi],
        "smooth_ms": route.smooth_ms,
        "sink": route.sink,
    }


def parse_routes(objs, valid_sinks=None, env_names=None) -> MappingSpec:
    """Build a validated spec from a list of route dicts."""
    if objs is None:
        objs = []
    if not isinstance(objs, list):
        raise MappingSyntaxError("'routes' must be a list")
    routes = []
    seen = set()
    for obj in objs:
        route = route_from_dict(obj, valid_sinks=valid_sinks, env_names=env_names)
        if route.sink in seen:
            raise DuplicateSink(route.sink)
        seen.add(route.sink)
        routes.append(route)
    return MappingSpec(tuple(routes))


def parse_mapping(text: str, valid_sinks=None, env_names=None) -> MappingSpec:
    """Parse a YAML mapping document: {routes: [...]}. Syntax errors carry
    the line number when the YAML parser provides one."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise MappingSyntaxError(str(e.problem), line=line)
    except yaml.YAMLError as e:
        raise MappingSyntaxError(str(e))
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise MappingSyntaxError("mapping document must be a YAML mapping")
    return parse_routes(doc.get("routes", []), valid_sinks=valid_sinks, env_names=env_names)


def serialize_mapping(spec: MappingSpec) -> str:
    doc = {"routes": [route_to_dict(r) for r in spec.routes]}
    return yaml.safe_dump(doc, sort_keys=False)


def evaluate(spec: MappingSpec, signals: dict) -> list[tuple[str, float]]:
    """Map a signal snapshot through every route, in route order.

    Pure: identical snapshots give identical outputs. Outputs always lie
    within the closed interval spanned by the route's out range.
    """
    out = []
    for route in spec.routes:
        key = str(route.source)
        if key not in signals:
            raise MissingSignal(key)
        x = float(signals[key])
        x = min(max(x, route.in_lo), route.in_hi)
        t = (x - route.in_lo) / (route.in_hi - route.in_lo)
        y = apply_curve(t, route.curve)
        value = route.out_lo + y * (route.out_hi - route.out_lo)
        out.append((route.sink, value))
    return out

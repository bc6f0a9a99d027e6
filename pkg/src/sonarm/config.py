"""Session configuration and trajectory scripts.

One human-readable YAML document describes a whole session: rates, robot
geometry, voices, DSP graph, mapping, speakers, transports. load/parse
validate every field and report all problems at once with dotted paths;
save(load(x)) is idempotent (normalized output is stable).

Scripts are time-ordered event lists used by the offline renderer (and
the fake-clock realtime twin) as a reproducible stand-in for live
interaction.
"""

from __future__ import annotations

import math
import pathlib
from dataclasses import dataclass, field, replace

import yaml

from . import dsp, mapping, robot, spatial
from .sources import MotorVoiceParams

DEFAULT_SAMPLE_RATE = 48000
DEFAULT_BLOCK_SIZE = 256
DEFAULT_CONTROL_RATE = 100.0

ENGINE_PARAM_SPECS = {
    # address: (lo, hi, default_smooth_ms) for engine-level smoothed params
    "blend.mix": (0.0, 1.0, 20.0),
    "drone.freq_hz": (20.0, 2000.0, 30.0),
    "drone.level": (0.0, 1.0, 30.0),
    "spatial.point_send": (0.0, 1.0, 20.0),
}
for _i in range(6):
    ENGINE_PARAM_SPECS[f"voice{_i}.level"] = (0.0, 1.0, 30.0)


class ConfigInvalid(Exception):
    """Carries (path, message) pairs for every failed field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


class ScriptUnordered(Exception):
    pass


@dataclass(frozen=True)
class SteeringConfig:
    gain: float = 0.5
    damping: float = 0.01


@dataclass(frozen=True)
class DroneConfig:
    level: float = 0.4
    init_freq_hz: float = 110.0


@dataclass(frozen=True)
class FeedConfig:
    path: str
    loop: bool = True
    gain: float = 1.0


@dataclass(frozen=True)
class SpeakerConfig:
    ring_deg: tuple[float, ...] = (45.0, 135.0, 225.0, 315.0)
    point_source: bool = True
    point_send: float = 0.5
    rolloff: str = "inverse"
    reference_m: float = 1.0
    listener_center: tuple[float, float] = (0.0, 0.0)

    def layout(self) -> spatial.SpeakerLayout:
        return spatial.SpeakerLayout(
            ring_azimuths=tuple(math.radians(a) for a in self.ring_deg),
            has_point_source=self.point_source,
        )


@dataclass(frozen=True)
class OscConfig:
    in_port: int = 9000
    out_port: int = 9001
    out_host: str = "127.0.0.1"


@dataclass(frozen=True)
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8080


@dataclass(frozen=True)
class SessionConfig:
    sample_rate: int = DEFAULT_SAMPLE_RATE
    block_size: int = DEFAULT_BLOCK_SIZE
    control_rate: float = DEFAULT_CONTROL_RATE
    seed: int = 0
    mode: str = "offline"
    kinematics: robot.KinematicParams = field(default_factory=robot.default_params)
    init_q: tuple[float, ...] = (0.0, -1.2, 1.6, -0.4, 1.5707963267948966, 0.0)
    collaborator_start: tuple[float, float, float] = (1.5, 1.5, 0.5)
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    voices: tuple[MotorVoiceParams, ...] = tuple(MotorVoiceParams() for _ in range(6))
    voice_levels: tuple[float, ...] = (1.0,) * 6
    feeds: tuple[FeedConfig, ...] = ()
    drone: DroneConfig = field(default_factory=DroneConfig)
    blend_mix: float = 0.35
    graph: tuple[dsp.NodeSpec, ...] = ()
    output_node: str = "master"
    mapping: mapping.MappingSpec = field(default_factory=mapping.MappingSpec)
    speakers: SpeakerConfig = field(default_factory=SpeakerConfig)
    env_signals: tuple[str, ...] = ()
    osc: OscConfig = field(default_factory=OscConfig)
    api: ApiConfig = field(default_factory=ApiConfig)

    @property
    def tick_dt(self) -> float:
        return 1.0 / self.control_rate

    def param_addresses(self) -> list[str]:
        """Every settable parameter address: graph params plus the
        engine-level blend/drone/voice/spatial params."""
        graph = dsp.Graph(list(self.graph), self.sample_rate, self.block_size)
        return sorted(graph.param_addresses() + list(ENGINE_PARAM_SPECS))


def default_graph() -> tuple[dsp.NodeSpec, ...]:
    return (
        dsp.NodeSpec(
            id="lp1", kind="biquad",
            params={"type": "lowpass", "cutoff_hz": 1200.0, "q": 0.707},
            inputs=["blend"],
        ),
        dsp.NodeSpec(
            id="shimmer", kind="pitchshift",
            params={"ratio": 1.5, "window_ms": 64.0},
            inputs=["lp1"],
        ),
        dsp.NodeSpec(
            id="shimmer_gain", kind="gain",
            params={"gain_db": -14.0},
            inputs=["shimmer"],
        ),
        dsp.NodeSpec(
            id="echo", kind="delay",
            params={"time_ms": 240.0, "feedback": 0.3, "mix": 0.25},
            inputs=["lp1"],
        ),
        dsp.NodeSpec(
            id="master", kind="mixer",
            params={"gain_db": -6.0},
            inputs=["echo", "shimmer_gain"],
        ),
    )


def default_mapping_routes() -> list[dict]:
    """The shipped demo mapping: approach quiets the master, speed opens
    the filter, TCP height pitches the drone, joint speeds push voices."""
    routes = [
        {"source": "proximity", "in": [0.0, 2.0], "curve": "linear",
         "out": [-24.0, 0.0], "smooth_ms": 120.0, "sink": "master.gain_db"},
        {"source": "tcp_speed", "in": [0.0, 1.5],
         "curve": {"type": "exponential", "k": 2.0},
         "out": [200.0, 4000.0], "smooth_ms": 60.0, "sink": "lp1.cutoff_hz"},
        {"source": "tcp_height", "in": [0.0, 1.4], "curve": "linear",
         "out": [70.0, 280.0], "smooth_ms": 150.0, "sink": "drone.freq_hz"},
    ]
    for i in range(6):
        routes.append(
            {"source": f"joint_speed.{i}", "in": [0.0, 2.1], "curve": "linear",
             "out": [0.25, 1.0], "smooth_ms": 80.0, "sink": f"voice{i}.level"}
        )
    return routes


def default_config() -> SessionConfig:
    # The demo caps joint speed well below the hardware-style default so the
    # arm audibly *tracks* the collaborator instead of snapping to it; the
    # whole approach then plays out in the proximity->attenuation mapping.
    kin = replace(robot.default_params(), max_joint_speed=0.6)
    cfg = SessionConfig(graph=default_graph(), kinematics=kin)
    spec = mapping.parse_routes(
        default_mapping_routes(),
        valid_sinks=set(cfg.param_addresses()),
        env_names=set(cfg.env_signals),
    )
    return replace(cfg, mapping=spec)


# ---------------------------------------------------------------------------
# parsing


class _Reader:
    """Walks a parsed YAML tree collecting (path, message) errors."""

    def __init__(self, doc: dict):
        self.doc = doc if isinstance(doc, dict) else {}
        self.errors: list[tuple[str, str]] = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def get(self, obj, path, key, default):
        if not isinstance(obj, dict):
            return default
        return obj.get(key, default)

    def number(self, obj, path, key, default, kind=float, lo=None, hi=None, lo_open=False):
        raw = self.get(obj, path, key, default)
        full = f"{path}.{key}" if path else key
        try:
            val = kind(raw)
        except (TypeError, ValueError):
            self.fail(full, f"expected a number, got {raw!r}")
            return kind(default)
        if lo is not None and (val <= lo if lo_open else val < lo):
            self.fail(full, f"must be {'>' if lo_open else '>='} {lo}, got {val}")
        if hi is not None and val > hi:
            self.fail(full, f"must be <= {hi}, got {val}")
        return val

    def vector(self, obj, path, key, default, n, kind=float):
        raw = self.get(obj, path, key, list(default))
        full = f"{path}.{key}" if path else key
        if not isinstance(raw, (list, tuple)) or len(raw) != n:
            self.fail(full, f"expected a list of {n} numbers")
            return tuple(default)
        try:
            return tuple(kind(v) for v in raw)
        except (TypeError, ValueError):
            self.fail(full, "entries must be numbers")
            return tuple(default)


def parse_config(text: str) -> SessionConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigInvalid([("document", f"not valid YAML: {e}")])
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigInvalid([("document", "top level must be a YAML mapping")])

    r = _Reader(doc)
    audio = doc.get("audio", {})
    sample_rate = r.number(audio, "audio", "sample_rate", DEFAULT_SAMPLE_RATE, int, lo=1000)
    block_size = r.number(audio, "audio", "block_size", DEFAULT_BLOCK_SIZE, int, lo=0, lo_open=True)
    control = doc.get("control", {})
    control_rate = r.number(control, "control", "rate_hz", DEFAULT_CONTROL_RATE, float, lo=0, lo_open=True)
    if block_size > 0 and control_rate > sample_rate / block_size:
        r.fail("control.rate_hz", f"must be <= sample_rate/block_size = {sample_rate / block_size:.3f}")

    seed = r.number(doc, "", "seed", 0, int, lo=0)
    mode = str(doc.get("mode", "offline"))
    if mode not in ("offline", "realtime"):
        r.fail("mode", f"must be 'offline' or 'realtime', got {mode!r}")

    # robot
    rb = doc.get("robot", {})
    defaults = robot.default_params()
    rows = []
    raw_rows = r.get(rb, "robot", "dh", None)
    if raw_rows is None:
        rows = list(defaults.rows)
    elif not isinstance(raw_rows, list) or len(raw_rows) != 6:
        r.fail("robot.dh", "expected 6 rows")
        rows = list(defaults.rows)
    else:
        for i, row in enumerate(raw_rows):
            if not isinstance(row, dict):
                r.fail(f"robot.dh[{i}]", "expected a mapping with a/d/alpha")
                rows.append(defaults.rows[i])
                continue
            try:
                rows.append(robot.DhRow(
                    a=float(row.get("a", 0.0)),
                    d=float(row.get("d", 0.0)),
                    alpha=float(row.get("alpha", 0.0)),
                ))
            except (TypeError, ValueError):
                r.fail(f"robot.dh[{i}]", "a/d/alpha must be numbers")
                rows.append(defaults.rows[i])
    limits = rb.get("limits", {}) if isinstance(rb, dict) else {}
    lo = r.vector(limits, "robot.limits", "lo", defaults.limits_lo, 6)
    hi = r.vector(limits, "robot.limits", "hi", defaults.limits_hi, 6)
    max_speed = r.number(rb, "robot", "max_joint_speed", defaults.max_joint_speed, float, lo=0, lo_open=True)
    standoff = r.number(rb, "robot", "standoff_m", defaults.standoff_m, float, lo=0)
    init_q = r.vector(rb, "robot", "init_q", SessionConfig.init_q, 6)
    kin = robot.KinematicParams(
        rows=tuple(rows), limits_lo=lo, limits_hi=hi,
        max_joint_speed=max_speed, standoff_m=standoff,
    )
    try:
        kin.validate()
        for i in range(6):
            if not lo[i] <= init_q[i] <= hi[i]:
                r.fail(f"robot.init_q[{i}]", "outside joint limits")
    except ValueError as e:
        r.fail("robot", str(e))

    st = doc.get("steering", {})
    steering = SteeringConfig(
        gain=r.number(st, "steering", "gain", 0.5, float, lo=0, lo_open=True, hi=1.0),
        damping=r.number(st, "steering", "damping", 0.01, float, lo=0, lo_open=True),
    )
    collab = r.vector(doc, "", "collaborator_start", SessionConfig.collaborator_start, 3)

    # voices
    voices = []
    raw_voices = doc.get("voices")
    if raw_voices is None:
        voices = [MotorVoiceParams() for _ in range(6)]
    elif not isinstance(raw_voices, list) or len(raw_voices) != 6:
        r.fail("voices", "expected 6 voice parameter sets")
        voices = [MotorVoiceParams() for _ in range(6)]
    else:
        for i, rv in enumerate(raw_voices):
            if not isinstance(rv, dict):
                r.fail(f"voices[{i}]", "expected a mapping")
                voices.append(MotorVoiceParams())
                continue
            try:
                v = MotorVoiceParams(
                    base_freq=float(rv.get("base_freq", 110.0)),
                    freq_per_radps=float(rv.get("freq_per_radps", 40.0)),
                    n_harmonics=int(rv.get("n_harmonics", 5)),
                    harmonic_rolloff=float(rv.get("harmonic_rolloff", 0.55)),
                    noise_level=float(rv.get("noise_level", 0.08)),
                    idle_floor=float(rv.get("idle_floor", 0.12)),
                    amp_per_radps=float(rv.get("amp_per_radps", 0.35)),
                )
                v.validate()
                voices.append(v)
            except (TypeError, ValueError) as e:
                r.fail(f"voices[{i}]", str(e))
                voices.append(MotorVoiceParams())
    voice_levels = r.vector(doc, "", "voice_levels", (1.0,) * 6, 6)

    feeds = []
    for i, rf in enumerate(doc.get("feeds", []) or []):
        if not isinstance(rf, dict) or "path" not in rf:
            r.fail(f"feeds[{i}]", "expected a mapping with a 'path'")
            continue
        feeds.append(FeedConfig(
            path=str(rf["path"]),
            loop=bool(rf.get("loop", True)),
            gain=float(rf.get("gain", 1.0)),
        ))

    dr = doc.get("drone", {})
    drone = DroneConfig(
        level=r.number(dr, "drone", "level", 0.4, float, lo=0.0, hi=1.0),
        init_freq_hz=r.number(dr, "drone", "init_freq_hz", 110.0, float, lo=1.0),
    )
    blend_mix = r.number(doc, "", "blend_mix", 0.35, float, lo=0.0, hi=1.0)

    # graph
    specs = []
    raw_graph = doc.get("graph", [])
    if not isinstance(raw_graph, list):
        r.fail("graph", "expected a list of node specs")
        raw_graph = []
    for i, rn in enumerate(raw_graph):
        if not isinstance(rn, dict) or "id" not in rn or "kind" not in rn:
            r.fail(f"graph[{i}]", "node needs 'id' and 'kind'")
            continue
        params = rn.get("params", {}) or {}
        inputs = rn.get("inputs", []) or []
        if not isinstance(params, dict) or not isinstance(inputs, list):
            r.fail(f"graph[{i}]", "'params' must be a mapping and 'inputs' a list")
            continue
        specs.append(dsp.NodeSpec(
            id=str(rn["id"]), kind=str(rn["kind"]),
            params=dict(params), inputs=[str(x) for x in inputs],
        ))
    output_node = str(doc.get("output_node", "master"))

    reserved = {"blend", "drone", "spatial", "consequential", "synthetic"}
    reserved |= {f"voice{i}" for i in range(6)}
    for spec in specs:
        if spec.id in reserved:
            r.fail("graph", f"node id {spec.id!r} is reserved for engine buses/params")

    graph_addresses: set[str] = set(ENGINE_PARAM_SPECS)
    try:
        graph = dsp.Graph(specs, sample_rate, max(block_size, 1))
        graph_addresses |= set(graph.param_addresses())
        if specs and output_node not in graph.nodes:
            r.fail("output_node", f"{output_node!r} is not a node id")
    except (dsp.GraphError, dsp.OutOfRange) as e:
        r.fail("graph", str(e))

    env_signals = tuple(str(n) for n in (doc.get("env_signals", []) or []))

    # mapping
    ms = mapping.MappingSpec()
    raw_mapping = doc.get("mapping", {}) or {}
    if not isinstance(raw_mapping, dict):
        r.fail("mapping", "expected a mapping with 'routes'")
    else:
        try:
            ms = mapping.parse_routes(
                raw_mapping.get("routes", []),
                valid_sinks=graph_addresses,
                env_names=set(env_signals),
            )
        except mapping.MappingError as e:
            r.fail("mapping", f"{type(e).__name__}: {e}")

    sp = doc.get("speakers", {})
    ring_raw = r.get(sp, "speakers", "ring_deg", [45.0, 135.0, 225.0, 315.0])
    if not isinstance(ring_raw, list) or len(ring_raw) < 2:
        r.fail("speakers.ring_deg", "expected a list of >= 2 azimuths (degrees)")
        ring_raw = [45.0, 135.0, 225.0, 315.0]
    rolloff = str(r.get(sp, "speakers", "rolloff", "inverse"))
    if rolloff not in ("inverse", "none"):
        r.fail("speakers.rolloff", f"must be 'inverse' or 'none', got {rolloff!r}")
        rolloff = "inverse"
    speakers = SpeakerConfig(
        ring_deg=tuple(float(a) for a in ring_raw),
        point_source=bool(r.get(sp, "speakers", "point_source", True)),
        point_send=r.number(sp, "speakers", "point_send", 0.5, float, lo=0.0, hi=1.0),
        rolloff=rolloff,
        reference_m=r.number(sp, "speakers", "reference_m", 1.0, float, lo=0, lo_open=True),
        listener_center=r.vector(sp, "speakers", "listener_center", (0.0, 0.0), 2),
    )
    try:
        speakers.layout().validate()
    except ValueError as e:
        r.fail("speakers.ring_deg", str(e))

    osc_raw = doc.get("osc", {})
    osc_cfg = OscConfig(
        in_port=r.number(osc_raw, "osc", "in_port", 9000, int, lo=1, hi=65535),
        out_port=r.number(osc_raw, "osc", "out_port", 9001, int, lo=1, hi=65535),
        out_host=str(r.get(osc_raw, "osc", "out_host", "127.0.0.1")),
    )
    api_raw = doc.get("api", {})
    api_cfg = ApiConfig(
        host=str(r.get(api_raw, "api", "host", "127.0.0.1")),
        port=r.number(api_raw, "api", "port", 8080, int, lo=1, hi=65535),
    )

    if r.errors:
        raise ConfigInvalid(r.errors)

    return SessionConfig(
        sample_rate=sample_rate, block_size=block_size, control_rate=control_rate,
        seed=seed, mode=mode, kinematics=kin, init_q=init_q,
        collaborator_start=collab, steering=steering,
        voices=tuple(voices), voice_levels=voice_levels, feeds=tuple(feeds),
        drone=drone, blend_mix=blend_mix, graph=tuple(specs),
        output_node=output_node, mapping=ms, speakers=speakers,
        env_signals=env_signals, osc=osc_cfg, api=api_cfg,
    )


def load_config(path) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as f:
        cfg = parse_config(f.read())
    # feed paths are relative to the config file, not the process cwd
    base = pathlib.Path(path).resolve().parent
    if cfg.feeds:
        cfg = replace(
            cfg,
            feeds=tuple(
                f if pathlib.Path(f.path).is_absolute()
                else replace(f, path=str(base / f.path))
                for f in cfg.feeds
            ),
        )
    return cfg


def serialize_config(cfg: SessionConfig) -> str:
    doc = {
        "audio": {"sample_rate": cfg.sample_rate, "block_size": cfg.block_size},
        "control": {"rate_hz": cfg.control_rate},
        "seed": cfg.seed,
        "mode": cfg.mode,
        "robot": {
            "dh": [{"a": row.a, "d": row.d, "alpha": row.alpha} for row in cfg.kinematics.rows],
            "limits": {"lo": list(cfg.kinematics.limits_lo), "hi": list(cfg.kinematics.limits_hi)},
            "max_joint_speed": cfg.kinematics.max_joint_speed,
            "standoff_m": cfg.kinematics.standoff_m,
            "init_q": list(cfg.init_q),
        },
        "steering": {"gain": cfg.steering.gain, "damping": cfg.steering.damping},
        "collaborator_start": list(cfg.collaborator_start),
        "voices": [
            {
                "base_freq": v.base_freq, "freq_per_radps": v.freq_per_radps,
                "n_harmonics": v.n_harmonics, "harmonic_rolloff": v.harmonic_rolloff,
                "noise_level": v.noise_level, "idle_floor": v.idle_floor,
                "amp_per_radps": v.amp_per_radps,
            }
            for v in cfg.voices
        ],
        "voice_levels": list(cfg.voice_levels),
        "feeds": [{"path": f.path, "loop": f.loop, "gain": f.gain} for f in cfg.feeds],
        "drone": {"level": cfg.drone.level, "init_freq_hz": cfg.drone.init_freq_hz},
        "blend_mix": cfg.blend_mix,
        "graph": [
            {"id": s.id, "kind": s.kind, "params": dict(s.params), "inputs": list(s.inputs)}
            for s in cfg.graph
        ],
        "output_node": cfg.output_node,
        "mapping": {"routes": [mapping.route_to_dict(rt) for rt in cfg.mapping.routes]},
        "speakers": {
            "ring_deg": list(cfg.speakers.ring_deg),
            "point_source": cfg.speakers.point_source,
            "point_send": cfg.speakers.point_send,
            "rolloff": cfg.speakers.rolloff,
            "reference_m": cfg.speakers.reference_m,
            "listener_center": list(cfg.speakers.listener_center),
        },
        "env_signals": list(cfg.env_signals),
        "osc": {"in_port": cfg.osc.in_port, "out_port": cfg.osc.out_port, "out_host": cfg.osc.out_host},
        "api": {"host": cfg.api.host, "port": cfg.api.port},
    }
    return yaml.safe_dump(doc, sort_keys=False)


def save_config(cfg: SessionConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_config(cfg))


# ---------------------------------------------------------------------------
# trajectory scripts


@dataclass(frozen=True)
class ScriptEvent:
    t: float
    kind: str  # collab | param | route | delete_route
    payload: object


@dataclass(frozen=True)
class TrajectoryScript:
    events: tuple[ScriptEvent, ...] = ()


def parse_script(text: str) -> TrajectoryScript:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigInvalid([("script", f"not valid YAML: {e}")])
    if doc is None:
        return TrajectoryScript()
    raw = doc.get("events", []) if isinstance(doc, dict) else None
    if raw is None or not isinstance(raw, list):
        raise ConfigInvalid([("script.events", "expected a list of events")])
    events = []
    last_t = None
    for i, ev in enumerate(raw):
        if not isinstance(ev, dict) or "t" not in ev:
            raise ConfigInvalid([(f"script.events[{i}]", "event needs a 't'")])
        t = float(ev["t"])
        if last_t is not None and t < last_t:
            raise ScriptUnordered(f"event {i} at t={t} precedes t={last_t}")
        last_t = t
        if "collab" in ev:
            pos = ev["collab"]
            if not (isinstance(pos, (list, tuple)) and len(pos) == 3):
                raise ConfigInvalid([(f"script.events[{i}].collab", "expected [x, y, z]")])
            events.append(ScriptEvent(t, "collab", tuple(float(c) for c in pos)))
        elif "param" in ev:
            p = ev["param"]
            if not (isinstance(p, dict) and "address" in p and "value" in p):
                raise ConfigInvalid([(f"script.events[{i}].param", "needs address and value")])
            events.append(ScriptEvent(t, "param", (
                str(p["address"]), float(p["value"]),
                float(p["smooth_ms"]) if "smooth_ms" in p else None,
            )))
        elif "route" in ev:
            events.append(ScriptEvent(t, "route", dict(ev["route"])))
        elif "delete_route" in ev:
            events.append(ScriptEvent(t, "delete_route", str(ev["delete_route"])))
        else:
            raise ConfigInvalid([(f"script.events[{i}]", "unknown event kind")])
    return TrajectoryScript(tuple(events))


def load_script(path) -> TrajectoryScript:
    with open(path, "r", encoding="utf-8") as f:
        return parse_script(f.read())

"""Engine runtime: control loop, audio path, OSC I/O, offline rendering.

Two execution contexts exist in realtime mode: a control context (ticks:
steering, signal snapshot, mapping, OSC egress, API commands) and an
audio context (block rendering). They communicate one way each: a bounded
parameter-update queue control->audio, and latest-value boxes (signal
frame audio<-control, meters control<-audio). CPython reference
assignment is atomic, which is this engine's realization of the
triple-buffered snapshot.

Offline rendering and the fake-clock realtime twin run the identical
single-threaded interleave of ticks and blocks on the exact sample grid,
which is why identical inputs give bit-identical output.
"""

from __future__ import annotations

import logging
import math
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import dsp, mapping, osc, robot, spatial
from .blocks import AudioBlock, new_buffer, new_buffer_2d
from .config import (
    ENGINE_PARAM_SPECS,
    ConfigInvalid,
    ScriptEvent,
    SessionConfig,
    TrajectoryScript,
)
from .sources import FileFeed, MotorVoice, SineDrone, blend
from .wav import write_wav_float32

log = logging.getLogger(__name__)


class ValidationFailed(Exception):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class LatestValue:
    """Single-slot snapshot box; reference swap is atomic under the GIL."""

    def __init__(self, value=None):
        self._value = value

    def set(self, value) -> None:
        self._value = value

    def get(self):
        return self._value


@dataclass(frozen=True)
class SignalFrame:
    """What the audio path needs from one control tick."""

    tick: int
    time_s: float
    joint_speeds: tuple[float, ...]
    tcp_position: tuple[float, float, float]
    signals: dict


@dataclass(frozen=True)
class StateSnapshot:
    seq: int
    tick: int
    time_s: float
    q: tuple[float, ...]
    qdot: tuple[float, ...]
    links: tuple[robot.Pose, ...]
    tcp: robot.Pose
    collaborator: tuple[float, float, float]
    proximity: float
    tcp_speed: float
    mapping_spec: mapping.MappingSpec
    meters: tuple[float, ...]
    blend_mix: float
    near_singularity: bool
    unknown_osc: int
    speakers_ring_deg: tuple[float, ...]
    speakers_point_source: bool

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "seq": self.seq,
            "tick": self.tick,
            "time_s": self.time_s,
            "joints": {"q": list(self.q), "qdot": list(self.qdot)},
            "links": [
                {"pos": list(p.position), "rpy": list(p.rpy)} for p in self.links
            ],
            "tcp": {"pos": list(self.tcp.position), "rpy": list(self.tcp.rpy)},
            "collaborator": list(self.collaborator),
            "proximity": self.proximity,
            "tcp_speed": self.tcp_speed,
            "mapping": {"routes": [mapping.route_to_dict(r) for r in self.mapping_spec.routes]},
            "meters": list(self.meters),
            "blend_mix": self.blend_mix,
            "near_singularity": self.near_singularity,
            "unknown_osc": self.unknown_osc,
            "speakers": {
                "ring_deg": list(self.speakers_ring_deg),
                "point_source": self.speakers_point_source,
            },
        }


class Pending:
    """Reply slot for a command submitted to the control loop."""

    def __init__(self):
        self._event = threading.Event()
        self._result = None
        self._error: Exception | None = None

    def resolve(self, result) -> None:
        self._result = result
        self._event.set()

    def reject(self, error: Exception) -> None:
        self._error = error
        self._event.set()

    def wait(self, timeout: float = 2.0):
        if not self._event.wait(timeout):
            raise TimeoutError("engine did not answer (is the control loop running?)")
        if self._error is not None:
            raise self._error
        return self._result


@dataclass
class MeterSubscription:
    outbox: deque
    rate_hz: float
    next_due: float = 0.0


class AudioPath:
    """Everything on the block path: sources, blend, graph, spatializer.

    Built fully at construction; render_block reuses preallocated buffers
    only (see blocks.allocation_count).
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        sr, bs = config.sample_rate, config.block_size
        self.sample_rate = sr
        self.block_size = bs
        self.graph = dsp.Graph(list(config.graph), sr, bs)
        self.output_node = config.output_node
        self.voices = [
            MotorVoice(v, sr, bs, seed=[config.seed, i])
            for i, v in enumerate(config.voices)
        ]
        self.feeds = [
            FileFeed(f.path, sr, bs, loop=f.loop, gain=f.gain) for f in config.feeds
        ]
        self.drone = SineDrone(sr, bs)
        self.spatializer = spatial.Spatializer(
            config.speakers.layout(), sr, bs,
            rolloff=config.speakers.rolloff,
            reference_m=config.speakers.reference_m,
            listener_center=config.speakers.listener_center,
        )
        initial = {
            "blend.mix": config.blend_mix,
            "drone.freq_hz": config.drone.init_freq_hz,
            "drone.level": config.drone.level,
            "spatial.point_send": config.speakers.point_send,
        }
        for i in range(6):
            initial[f"voice{i}.level"] = config.voice_levels[i]
        self._params: dict[str, dsp.SmoothedParam] = {}
        for addr, (lo, hi, smooth) in ENGINE_PARAM_SPECS.items():
            self._params[addr] = dsp.SmoothedParam(initial[addr], lo, hi, smooth, sr, bs)
        self.addresses = set(self.graph.param_addresses()) | set(self._params)

        self._queue: deque = deque(maxlen=4096)
        self._conseq = new_buffer(bs)
        self._blend = new_buffer(bs)
        self._mix_scratch = new_buffer(bs)
        channels = self.spatializer.layout.channels
        self._sq = new_buffer_2d(channels, bs)
        self._meter = new_buffer(channels)
        self.meters_box = LatestValue((0.0,) * channels)
        self.dropped_updates = 0

    @property
    def channels(self) -> int:
        return self.spatializer.layout.channels

    def param_bounds(self, address: str) -> tuple[float, float]:
        if address in ENGINE_PARAM_SPECS:
            lo, hi, _ = ENGINE_PARAM_SPECS[address]
            return lo, hi
        p = self.graph.get_param(address)  # raises UnknownAddress
        return p.lo, p.hi

    def enqueue_param(self, address: str, value: float, smooth_ms: float | None = None) -> None:
        self._queue.append((address, value, smooth_ms))

    def _apply_param(self, address: str, value: float, smooth_ms) -> None:
        p = self._params.get(address)
        if p is not None:
            p.set_target(value, smooth_ms)
        else:
            self.graph.set_param(address, value, smooth_ms)

    def render_block(self, frame: SignalFrame | None) -> np.ndarray:
        while True:
            try:
                address, value, smooth = self._queue.popleft()
            except IndexError:
                break
            try:
                self._apply_param(address, value, smooth)
            except dsp.UnknownAddress:
                self.dropped_updates += 1

        speeds = frame.joint_speeds if frame is not None else (0.0,) * 6
        conseq = self._conseq
        conseq.fill(0.0)
        for i, voice in enumerate(self.voices):
            buf = voice.process(speeds[i]).samples[0]
            level = self._params[f"voice{i}.level"].advance()
            if level != 1.0:
                buf *= level
            conseq += buf
        for feed in self.feeds:
            conseq += feed.process().samples[0]

        freq = self._params["drone.freq_hz"].advance()
        level = self._params["drone.level"].advance()
        synth = self.drone.process(freq, level)

        mix = self._params["blend.mix"].ramp(self._mix_scratch)
        blended = blend(
            AudioBlock(conseq, self.sample_rate), synth, mix, out=self._blend
        )

        graph_inputs = {
            "blend": blended.samples[0],
            "consequential": conseq,
            "synthetic": synth.samples[0],
        }
        outs = self.graph.process_block(graph_inputs)
        master = outs.get(self.output_node, blended.samples[0])

        pos = frame.tcp_position if frame is not None else (0.0, 0.0, 0.0)
        src = spatial.source_from_point(pos, self.spatializer.listener_center)
        point = self._params["spatial.point_send"].advance()
        out = self.spatializer.process(master, src, point)

        np.multiply(out, out, out=self._sq)
        np.sum(self._sq, axis=1, out=self._meter)
        self._meter /= self.block_size
        np.sqrt(self._meter, out=self._meter)
        self.meters_box.set(tuple(float(x) for x in self._meter))
        return out


class Engine:
    """Control-side state owner: robot, collaborator, mapping, OSC, API."""

    def __init__(self, config: SessionConfig, audio: AudioPath,
                 osc_send=None, capture_osc: bool = False):
        self.config = config
        self.audio = audio
        self.state = robot.JointState(q=tuple(config.init_q), qdot=(0.0,) * 6, t=0.0)
        self.collaborator = robot.CollaboratorState(tuple(config.collaborator_start), 0.0)
        self.env = {name: 0.0 for name in config.env_signals}
        self.mapping_spec = config.mapping
        self.blend_mix = config.blend_mix
        self.tick_count = 0
        self.time_s = 0.0
        self.unknown_osc = 0
        self.malformed_osc = 0
        self.tick_errors = 0
        self.near_singularity = False
        self._prev_tcp: tuple[robot.Pose, float] | None = None
        self._inbox: deque = deque(maxlen=4096)
        self._commands: deque = deque()
        self._subs: list[MeterSubscription] = []
        self._subs_lock = threading.Lock()
        self.signal_box = LatestValue(None)
        self.snapshot_box = LatestValue(None)
        self.osc_send = osc_send
        self.osc_capture: list[osc.OscMessage] | None = [] if capture_osc else None

    # -- inputs ------------------------------------------------------------

    def inject_packet(self, packet) -> None:
        """Thread-safe: called from the OSC receive context."""
        self._inbox.append(packet)

    def submit(self, cmd: dict) -> Pending:
        """Thread-safe: called from the API context."""
        pending = Pending()
        self._commands.append((cmd, pending))
        return pending

    def add_subscription(self, outbox: deque, rate_hz: float) -> None:
        with self._subs_lock:
            self._subs.append(
                MeterSubscription(outbox=outbox, rate_hz=rate_hz, next_due=self.time_s)
            )

    def remove_subscriptions(self, outbox: deque) -> None:
        with self._subs_lock:
            self._subs = [s for s in self._subs if s.outbox is not outbox]

    def apply_script_event(self, ev: ScriptEvent) -> None:
        if ev.kind == "collab":
            self.collaborator = robot.CollaboratorState(ev.payload, self.time_s)
        elif ev.kind == "param":
            address, value, smooth = ev.payload
            lo, hi = self.audio.param_bounds(address)
            self.audio.enqueue_param(address, min(max(value, lo), hi), smooth)
        elif ev.kind == "route":
            route = mapping.route_from_dict(
                ev.payload, valid_sinks=self.audio.addresses,
                env_names=set(self.config.env_signals),
            )
            self.mapping_spec = self.mapping_spec.with_route(route)
        elif ev.kind == "delete_route":
            self.mapping_spec = self.mapping_spec.without_sink(ev.payload)

    # -- OSC ---------------------------------------------------------------

    def _ingress(self, msg: osc.OscMessage) -> None:
        if msg.address == "/collab/pos":
            if len(msg.args) == 3 and all(isinstance(a, (int, float)) for a in msg.args):
                pos = tuple(float(a) for a in msg.args)
                if all(math.isfinite(c) for c in pos):
                    self.collaborator = robot.CollaboratorState(pos, self.time_s)
                    return
            self.malformed_osc += 1
            log.warning("malformed /collab/pos args: %r", msg.args)
        elif osc.address_matches("/env/*", msg.address):
            name = msg.address[len("/env/"):]
            if name not in self.env:
                self.unknown_osc += 1
            elif len(msg.args) == 1 and isinstance(msg.args[0], (int, float)):
                self.env[name] = float(msg.args[0])
            else:
                self.malformed_osc += 1
                log.warning("malformed /env/%s args: %r", name, msg.args)
        else:
            self.unknown_osc += 1

    def _egress_messages(self, fk: robot.FkResult) -> list[osc.OscMessage]:
        tcp = fk.tcp
        msgs = [osc.OscMessage("/tcp/pose", tcp.position + tcp.rpy)]
        for i, link in enumerate(fk.links):
            msgs.append(osc.OscMessage(f"/link/{i}/rpy", link.rpy))
        return msgs

    # -- commands ----------------------------------------------------------

    def _apply_command(self, cmd: dict) -> dict:
        op = cmd.get("cmd")
        if op == "set_collaborator":
            try:
                pos = tuple(float(c) for c in cmd["pos"])
            except (KeyError, TypeError, ValueError):
                raise ValidationFailed("pos", "expected pos: [x, y, z]")
            if len(pos) != 3 or not all(math.isfinite(c) for c in pos):
                raise ValidationFailed("pos", "expected 3 finite coordinates")
            self.collaborator = robot.CollaboratorState(pos, self.time_s)
            return {"position": list(pos)}
        if op == "set_param":
            address = str(cmd.get("address", ""))
            try:
                value = float(cmd["value"])
            except (KeyError, TypeError, ValueError):
                raise ValidationFailed("value", "expected a numeric value")
            try:
                lo, hi = self.audio.param_bounds(address)
            except dsp.UnknownAddress:
                raise ValidationFailed("address", f"unknown parameter {address!r}")
            accepted = min(max(value, lo), hi)
            smooth = cmd.get("smooth_ms")
            self.audio.enqueue_param(address, accepted, smooth)
            if address == "blend.mix":
                self.blend_mix = accepted
            return {"address": address, "value": accepted}
        if op == "set_mix":
            try:
                value = float(cmd["value"])
            except (KeyError, TypeError, ValueError):
                raise ValidationFailed("value", "expected a numeric value")
            accepted = min(max(value, 0.0), 1.0)
            self.audio.enqueue_param("blend.mix", accepted, None)
            self.blend_mix = accepted
            return {"value": accepted}
        if op == "set_route":
            d = cmd.get("route")
            if not isinstance(d, dict):
                raise ValidationFailed("route", "expected a route object")
            try:
                route = mapping.route_from_dict(
                    d, valid_sinks=self.audio.addresses,
                    env_names=set(self.config.env_signals),
                )
            except mapping.UnknownSink as e:
                raise ValidationFailed("sink", f"unknown sink {e}")
            except mapping.BadRange as e:
                raise ValidationFailed("range", str(e))
            except mapping.MappingError as e:
                raise ValidationFailed("route", str(e))
            self.mapping_spec = self.mapping_spec.with_route(route)
            return {"route": mapping.route_to_dict(route)}
        if op == "delete_route":
            sink = str(cmd.get("sink", ""))
            if sink not in self.mapping_spec.sinks():
                raise ValidationFailed("sink", f"no route for sink {sink!r}")
            self.mapping_spec = self.mapping_spec.without_sink(sink)
            return {"sink": sink}
        if op == "subscribe_meters":
            try:
                rate = float(cmd["rate_hz"])
            except (KeyError, TypeError, ValueError):
                raise ValidationFailed("rate_hz", "expected a numeric rate")
            if not 0 < rate <= self.config.control_rate:
                raise ValidationFailed(
                    "rate_hz", f"must be in (0, {self.config.control_rate}]"
                )
            outbox = cmd.get("_outbox")
            if outbox is None:
                raise ValidationFailed("rate_hz", "no stream outbox attached")
            self.add_subscription(outbox, rate)
            return {"rate_hz": rate}
        raise ValidationFailed("cmd", f"unknown command {op!r}")

    # -- the tick ----------------------------------------------------------

    def tick(self, dt: float) -> None:
        """One control step. Component errors are counted, never raised."""
        while True:
            try:
                packet = self._inbox.popleft()
            except IndexError:
                break
            try:
                for msg in osc.flatten(packet):
                    self._ingress(msg)
            except Exception:
                self.malformed_osc += 1

        get_state_waiters = []
        while True:
            try:
                cmd, pending = self._commands.popleft()
            except IndexError:
                break
            if cmd.get("cmd") == "get_state":
                get_state_waiters.append(pending)
                continue
            try:
                data = self._apply_command(cmd)
                data["tick"] = self.tick_count  # the tick this command applied at
                pending.resolve(data)
            except ValidationFailed as e:
                pending.reject(e)
            except Exception as e:  # defensive: a command never kills the tick
                pending.reject(ValidationFailed("cmd", f"internal error: {e}"))

        try:
            result = robot.steer_towards(
                self.state, self.collaborator,
                gain=self.config.steering.gain,
                damping=self.config.steering.damping,
                dt=dt, params=self.config.kinematics,
            )
            self.state = result.state
            self.near_singularity = result.near_singularity
        except Exception:
            self.tick_errors += 1
            log.exception("steering step failed; holding pose")
            self.state = robot.JointState(self.state.q, (0.0,) * 6, self.state.t + dt)

        fk = robot.forward_kinematics(self.state.q, self.config.kinematics)
        now = self.state.t
        if self._prev_tcp is not None:
            prev_pose, prev_t = self._prev_tcp
            speed = robot.tcp_speed(prev_pose, prev_t, fk.tcp, now)
        else:
            speed = 0.0
        self._prev_tcp = (fk.tcp, now)
        prox = robot.proximity(self.collaborator, fk.tcp)

        signals = {
            "tcp_speed": speed,
            "tcp_height": fk.tcp.position[2],
            "proximity": prox,
        }
        for i in range(6):
            signals[f"joint_speed.{i}"] = abs(self.state.qdot[i])
            signals[f"joint_pos.{i}"] = self.state.q[i]
        for name, value in self.env.items():
            signals[f"env.{name}"] = value

        spec = self.mapping_spec
        try:
            for (sink, value), route in zip(mapping.evaluate(spec, signals), spec.routes):
                self.audio.enqueue_param(sink, value, route.smooth_ms)
        except mapping.MappingError:
            self.tick_errors += 1
            log.exception("mapping evaluation failed; parameters unchanged this tick")

        self.signal_box.set(SignalFrame(
            tick=self.tick_count,
            time_s=self.time_s,
            joint_speeds=tuple(abs(v) for v in self.state.qdot),
            tcp_position=fk.tcp.position,
            signals=dict(signals),
        ))

        msgs = self._egress_messages(fk)
        if self.osc_capture is not None:
            self.osc_capture.extend(msgs)
        if self.osc_send is not None:
            try:
                self.osc_send(msgs)
            except Exception:
                self.tick_errors += 1
                log.exception("OSC egress failed")

        snapshot = StateSnapshot(
            seq=self.tick_count,
            tick=self.tick_count,
            time_s=self.time_s,
            q=self.state.q,
            qdot=self.state.qdot,
            links=fk.links,
            tcp=fk.tcp,
            collaborator=self.collaborator.position,
            proximity=prox,
            tcp_speed=speed,
            mapping_spec=spec,
            meters=self.audio.meters_box.get(),
            blend_mix=self.blend_mix,
            near_singularity=self.near_singularity,
            unknown_osc=self.unknown_osc,
            speakers_ring_deg=self.config.speakers.ring_deg,
            speakers_point_source=self.config.speakers.point_source,
        )
        self.snapshot_box.set(snapshot)

        with self._subs_lock:
            subs = list(self._subs)
        for sub in subs:
            while self.time_s >= sub.next_due - 1e-12:
                sub.outbox.append(snapshot)
                sub.next_due += 1.0 / sub.rate_hz

        for pending in get_state_waiters:
            pending.resolve({"snapshot": snapshot.to_dict(), "tick": self.tick_count})

        self.tick_count += 1
        self.time_s += dt


# ---------------------------------------------------------------------------
# clocks and sinks


class FakeClock:
    """Virtual time: sleeping just advances the clock."""

    def __init__(self, start: float = 0.0):
        self.t = float(start)

    def now(self) -> float:
        return self.t

    def sleep_until(self, t: float) -> None:
        if t > self.t:
            self.t = t


class WallClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep_until(self, t: float) -> None:
        delta = t - time.monotonic()
        if delta > 0:
            time.sleep(delta)


class NullSink:
    def write(self, block: np.ndarray) -> None:
        pass


class CaptureSink:
    def __init__(self):
        self.blocks: list[np.ndarray] = []

    def write(self, block: np.ndarray) -> None:
        self.blocks.append(np.array(block, dtype=np.float32))

    def frames(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros((0, 1), dtype=np.float32)
        return np.concatenate([b.T for b in self.blocks], axis=0)


# ---------------------------------------------------------------------------
# the session loop (offline render and its fake-clock realtime twin)


class SessionLoop:
    """Interleaves control ticks and audio blocks on the exact sample grid.

    A control tick k is due at sample round(k * sr / control_rate); every
    tick due at or before a block's first sample runs before that block
    is rendered. Script events apply at the first tick at or after their
    own sample time, exactly like OSC arrivals.
    """

    def __init__(self, config: SessionConfig, script: TrajectoryScript | None = None,
                 clock=None, pace: bool = False, osc_send=None, capture_osc: bool = False):
        self.config = config
        self.script = script or TrajectoryScript()
        self.clock = clock
        self.pace = pace
        self.audio = AudioPath(config)
        self.engine = Engine(config, self.audio, osc_send=osc_send, capture_osc=capture_osc)

    def run(self, duration_s: float) -> np.ndarray:
        """Render duration_s seconds; returns float32 frames (n, channels)."""
        cfg = self.config
        sr, bs = cfg.sample_rate, cfg.block_size
        total = int(round(duration_s * sr))
        n_blocks = -(-total // bs) if total > 0 else 0
        out = np.zeros((n_blocks * bs, self.audio.channels), dtype=np.float32)

        events = list(self.script.events)
        ev_samples = [int(round(ev.t * sr)) for ev in events]
        ev_i = 0
        k = 0
        dt = cfg.tick_dt
        t0 = self.clock.now() if (self.pace and self.clock) else 0.0

        for b in range(n_blocks):
            s = b * bs
            while int(round(k * sr / cfg.control_rate)) <= s:
                tick_sample = int(round(k * sr / cfg.control_rate))
                while ev_i < len(events) and ev_samples[ev_i] <= tick_sample:
                    try:
                        self.engine.apply_script_event(events[ev_i])
                    except Exception:
                        self.engine.tick_errors += 1
                    ev_i += 1
                self.engine.tick(dt)
                k += 1
            if self.pace and self.clock:
                self.clock.sleep_until(t0 + s / sr)
            frame = self.engine.signal_box.get()
            block = self.audio.render_block(frame)
            out[s : s + bs, :] = block.T
        return out[:total]


def render_offline(config: SessionConfig, script: TrajectoryScript | None,
                   duration_s: float) -> bytes:
    """Deterministic offline render to multichannel float32 WAV bytes."""
    if config.mode != "offline":
        raise ConfigInvalid([("mode", "render_offline requires mode: offline")])
    loop = SessionLoop(config, script)
    frames = loop.run(duration_s)
    return write_wav_float32(frames, config.sample_rate)


# ---------------------------------------------------------------------------
# realtime transports


class OscReceiver(threading.Thread):
    """UDP receive context: decodes datagrams and enqueues packets only."""

    def __init__(self, engine: Engine, host: str, port: int):
        super().__init__(daemon=True, name="osc-recv")
        self.engine = engine
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.settimeout(0.2)
        self.bad_datagrams = 0
        self._stop = threading.Event()

    def run(self) -> None:
        while not self._stop.is_set():
            try:
                data, _ = self.sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                self.engine.inject_packet(osc.decode_packet(data))
            except osc.OscError:
                self.bad_datagrams += 1

    def stop(self) -> None:
        self._stop.set()
        try:
            self.sock.close()
        except OSError:
            pass


class OscSender:
    def __init__(self, host: str, port: int):
        self.addr = (host, port)
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def __call__(self, msgs) -> None:
        for m in msgs:
            self.sock.sendto(osc.encode_packet(m), self.addr)

    def close(self) -> None:
        self.sock.close()


class RealtimeRunner:
    """Production mode: a control thread and an audio thread, paced by a
    clock, plus optional OSC transports. The audio thread never blocks on
    the control thread."""

    def __init__(self, config: SessionConfig, sink=None, clock=None,
                 osc_send=None, capture_osc: bool = False):
        self.config = config
        self.clock = clock or WallClock()
        self.sink = sink or NullSink()
        self.audio = AudioPath(config)
        self.engine = Engine(config, self.audio, osc_send=osc_send, capture_osc=capture_osc)
        self._running = threading.Event()
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        self._running.set()
        t0 = self.clock.now()
        ctrl = threading.Thread(target=self._control_loop, args=(t0,), daemon=True, name="control")
        aud = threading.Thread(target=self._audio_loop, args=(t0,), daemon=True, name="audio")
        self._threads = [ctrl, aud]
        ctrl.start()
        aud.start()

    def _control_loop(self, t0: float) -> None:
        dt = self.config.tick_dt
        k = 0
        while self._running.is_set():
            self.clock.sleep_until(t0 + k * dt)
            if not self._running.is_set():
                break
            self.engine.tick(dt)
            k += 1

    def _audio_loop(self, t0: float) -> None:
        sr, bs = self.config.sample_rate, self.config.block_size
        b = 0
        while self._running.is_set():
            self.clock.sleep_until(t0 + b * bs / sr)
            if not self._running.is_set():
                break
            block = self.audio.render_block(self.engine.signal_box.get())
            self.sink.write(block)
            b += 1

    def stop(self) -> None:
        self._running.clear()
        for t in self._threads:
            t.join(timeout=2.0)

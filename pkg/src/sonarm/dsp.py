"""Block-based DSP graph with click-free smoothed parameters.

Six node kinds (gain, biquad, delay, ringmod, pitchshift, mixer) wired
into an acyclic graph evaluated in topological order, ties broken by node
id so evaluation never depends on insertion order. Feedback edges are
rejected at build time.

Parameters are one-pole smoothed: per-sample coefficient
alpha = exp(-1/(tau_ms * sr / 1000)), tau 0 jumps immediately. Gain-like
nodes consume full per-sample ramps; slow parameters (filter cutoff,
delay feedback) sample the same trajectory at block boundaries.

Every buffer is preallocated through blocks.new_buffer, so
blocks.allocation_count() is flat while blocks are processed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import new_buffer

_LN10_OVER_20 = math.log(10.0) / 20.0


class GraphError(Exception):
    pass


class CycleDetected(GraphError):
    pass


class MissingInput(GraphError):
    pass


class UnknownAddress(GraphError):
    pass


class OutOfRange(Exception):
    pass


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)


@dataclass(frozen=True)
class ParamSpec:
    lo: float
    hi: float
    default: float
    smooth_ms: float


class SmoothedParam:
    """One-pole smoothing toward a clamped target."""

    def __init__(self, value: float, lo: float, hi: float, tau_ms: float,
                 sample_rate: int, block_size: int):
        self.lo = lo
        self.hi = hi
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.current = self._clamp(value)
        self.target = self.current
        self._pow = new_buffer(block_size)
        self._set_tau(tau_ms)

    def _clamp(self, v: float) -> float:
        return min(max(float(v), self.lo), self.hi)

    def _set_tau(self, tau_ms: float) -> None:
        self.tau_ms = max(0.0, float(tau_ms))
        if self.tau_ms == 0.0:
            self.alpha = 0.0
            self._pow.fill(0.0)
        else:
            self.alpha = math.exp(-1.0 / (self.tau_ms * self.sample_rate / 1000.0))
            self._pow.fill(self.alpha)
            np.cumprod(self._pow, out=self._pow)  # pow[k] = alpha^(k+1)

    def set_target(self, value: float, smooth_ms: float | None = None) -> float:
        """Clamp and set the target; returns the accepted value."""
        if smooth_ms is not None and smooth_ms != self.tau_ms:
            self._set_tau(smooth_ms)
        self.target = self._clamp(value)
        return self.target

    def _snap(self) -> None:
        if abs(self.current - self.target) <= 1e-12 * max(1.0, abs(self.target)):
            self.current = self.target

    def ramp(self, out: np.ndarray) -> np.ndarray:
        """Fill out with the per-sample trajectory and advance one block."""
        if self.current == self.target or self.alpha == 0.0:
            self.current = self.target
            out.fill(self.target)
            return out
        np.multiply(self._pow, self.current - self.target, out=out)
        out += self.target
        self.current = float(out[-1])
        self._snap()
        return out

    def advance(self, n: int | None = None) -> float:
        """Advance n samples (default one block) and return the new value."""
        if n is None:
            n = self.block_size
        if self.current != self.target and self.alpha > 0.0:
            self.current = self.target + (self.current - self.target) * self.alpha**n
            self._snap()
        else:
            self.current = self.target
        return self.current


def biquad_coeffs(kind: str, cutoff_hz: float, q: float, sample_rate: int):
    """Normalized (b0, b1, b2, a1, a2) from the audio-EQ cookbook forms."""
    if not 0.0 < cutoff_hz < sample_rate / 2.0:
        raise OutOfRange(f"cutoff {cutoff_hz} Hz outside (0, {sample_rate / 2})")
    if not q > 0.0:
        raise OutOfRange(f"Q must be > 0, got {q}")
    w0 = 2.0 * math.pi * cutoff_hz / sample_rate
    cs = math.cos(w0)
    alpha = math.sin(w0) / (2.0 * q)
    if kind == "lowpass":
        b0 = (1.0 - cs) / 2.0
        b1 = 1.0 - cs
        b2 = b0
    elif kind == "highpass":
        b0 = (1.0 + cs) / 2.0
        b1 = -(1.0 + cs)
        b2 = b0
    elif kind == "bandpass":
        b0 = alpha
        b1 = 0.0
        b2 = -alpha
    else:
        raise OutOfRange(f"unknown biquad type {kind!r}")
    a0 = 1.0 + alpha
    return (b0 / a0, b1 / a0, b2 / a0, -2.0 * cs / a0, (1.0 - alpha) / a0)


class _Node:
    kind = "?"
    PARAMS: dict[str, ParamSpec] = {}
    min_inputs = 1
    max_inputs = 1

    def __init__(self, spec: NodeSpec, sample_rate: int, block_size: int):
        self.id = spec.id
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.out = new_buffer(block_size)
        self.params: dict[str, SmoothedParam] = {}
        known = set(self.PARAMS) | set(getattr(self, "STATIC_PARAMS", ()))
        for name in spec.params:
            if name not in known:
                raise GraphError(f"node {spec.id!r}: unknown param {name!r} for kind {self.kind}")
        for name, ps in self.PARAMS.items():
            value = spec.params.get(name, ps.default)
            if not ps.lo <= float(value) <= ps.hi:
                raise OutOfRange(
                    f"node {spec.id!r}: param {name}={value} outside [{ps.lo}, {ps.hi}]"
                )
            self.params[name] = SmoothedParam(
                value, ps.lo, ps.hi, ps.smooth_ms, sample_rate, block_size
            )

    def process(self, ins: list[np.ndarray]) -> None:
        raise NotImplementedError

    def reset(self) -> None:
        """Zero internal signal state (delay lines, filter memory)."""


def _db_ramp_to_linear(ramp: np.ndarray) -> np.ndarray:
    ramp *= _LN10_OVER_20
    np.exp(ramp, out=ramp)
    return ramp


class GainNode(_Node):
    kind = "gain"
    PARAMS = {"gain_db": ParamSpec(-80.0, 24.0, 0.0, 20.0)}

    def __init__(self, spec, sample_rate, block_size):
        super().__init__(spec, sample_rate, block_size)
        self._scratch = new_buffer(block_size)

    def process(self, ins):
        g = _db_ramp_to_linear(self.params["gain_db"].ramp(self._scratch))
        np.multiply(ins[0], g, out=self.out)


class MixerNode(_Node):
    kind = "mixer"
    PARAMS = {"gain_db": ParamSpec(-80.0, 24.0, 0.0, 20.0)}
    max_inputs = 64

    def __init__(self, spec, sample_rate, block_size):
        super().__init__(spec, sample_rate, block_size)
        self._scratch = new_buffer(block_size)

    def process(self, ins):
        np.copyto(self.out, ins[0])
        for x in ins[1:]:
            self.out += x
        g = _db_ramp_to_linear(self.params["gain_db"].ramp(self._scratch))
        self.out *= g


class BiquadNode(_Node):
    kind = "biquad"
    STATIC_PARAMS = ("type",)

    def __init__(self, spec, sample_rate, block_size):
        self.PARAMS = {
            "cutoff_hz": ParamSpec(1.0, 0.49 * sample_rate, 1000.0, 30.0),
            "q": ParamSpec(0.05, 20.0, 0.707, 30.0),
        }
        super().__init__(spec, sample_rate, block_size)
        self.type = spec.params.get("type", "lowpass")
        if self.type not in ("lowpass", "highpass", "bandpass"):
            raise OutOfRange(f"node {spec.id!r}: unknown biquad type {self.type!r}")
        self._z1 = 0.0
        self._z2 = 0.0
        self._last = (None, None)
        self._coeffs = biquad_coeffs(
            self.type, self.params["cutoff_hz"].current, self.params["q"].current,
            sample_rate,
        )

    def process(self, ins):
        cutoff = self.params["cutoff_hz"].advance()
        q = self.params["q"].advance()
        if (cutoff, q) != self._last:
            self._coeffs = biquad_coeffs(self.type, cutoff, q, self.sample_rate)
            self._last = (cutoff, q)
        b0, b1, b2, a1, a2 = self._coeffs
        z1, z2 = self._z1, self._z2
        x = ins[0]
        out = self.out
        for i in range(self.block_size):
            xi = x[i]
            y = b0 * xi + z1
            z1 = b1 * xi - a1 * y + z2
            z2 = b2 * xi - a2 * y
            out[i] = y
        self._z1, self._z2 = z1, z2

    def reset(self):
        self._z1 = 0.0
        self._z2 = 0.0


class DelayNode(_Node):
    kind = "delay"
    MAX_DELAY_MS = 2000.0
    PARAMS = {
        "time_ms": ParamSpec(0.0, MAX_DELAY_MS, 250.0, 50.0),
        "feedback": ParamSpec(0.0, 0.95, 0.0, 30.0),
        "mix": ParamSpec(0.0, 1.0, 0.5, 30.0),
    }

    def __init__(self, spec, sample_rate, block_size):
        super().__init__(spec, sample_rate, block_size)
        self._len = int(self.MAX_DELAY_MS / 1000.0 * sample_rate) + 4
        self._buf = new_buffer(self._len)
        self._w = 0
        self._time_scratch = new_buffer(block_size)

    def process(self, ins):
        dly = self.params["time_ms"].ramp(self._time_scratch)
        fb = self.params["feedback"].advance()
        mix = self.params["mix"].advance()
        sr_ms = self.sample_rate / 1000.0
        buf = self._buf
        length = self._len
        w = self._w
        x = ins[0]
        out = self.out
        dry = 1.0 - mix
        for i in range(self.block_size):
            d = dly[i] * sr_ms
            if d < 1.0:
                d = 1.0
            elif d > length - 2:
                d = length - 2
            rp = w - d
            i0 = int(rp // 1.0)
            frac = rp - i0
            i0 %= length
            i1 = i0 + 1
            if i1 == length:
                i1 = 0
            y = buf[i0] * (1.0 - frac) + buf[i1] * frac
            xi = x[i]
            buf[w] = xi + fb * y
            out[i] = xi * dry + y * mix
            w += 1
            if w == length:
                w = 0
        self._w = w

    def reset(self):
        self._buf.fill(0.0)
        self._w = 0


class RingmodNode(_Node):
    kind = "ringmod"
    PARAMS = {
        "freq_hz": ParamSpec(0.0, 8000.0, 220.0, 30.0),
        "depth": ParamSpec(0.0, 1.0, 1.0, 20.0),
    }

    def __init__(self, spec, sample_rate, block_size):
        super().__init__(spec, sample_rate, block_size)
        self._phase = 0.0
        self._ph_scratch = new_buffer(block_size)
        self._depth_scratch = new_buffer(block_size)

    def process(self, ins):
        ph = self.params["freq_hz"].ramp(self._ph_scratch)
        ph *= 2.0 * math.pi / self.sample_rate
        np.cumsum(ph, out=ph)
        ph += self._phase
        self._phase = float(ph[-1] % (2.0 * math.pi))
        np.sin(ph, out=ph)
        d = self.params["depth"].ramp(self._depth_scratch)
        # carrier = (1 - depth) + depth * sin
        ph *= d
        ph += 1.0
        ph -= d
        np.multiply(ins[0], ph, out=self.out)

    def reset(self):
        self._phase = 0.0


class PitchShiftNode(_Node):
    """Dual-tap delay-line shifter with triangular crossfade.

    The two taps sit half a window apart; triangular gains sum to exactly
    one, so the output never exceeds the input peak. At ratio exactly 1
    the taps freeze, which on a fresh node reduces to a pure delay of
    window/2 samples (the fixed line latency).
    """

    kind = "pitchshift"
    STATIC_PARAMS = ("window_ms",)
    PARAMS = {"ratio": ParamSpec(0.25, 4.0, 1.0, 30.0)}

    def __init__(self, spec, sample_rate, block_size):
        super().__init__(spec, sample_rate, block_size)
        window_ms = float(spec.params.get("window_ms", 64.0))
        if not 4.0 <= window_ms <= 500.0:
            raise OutOfRange(f"node {spec.id!r}: window_ms {window_ms} outside [4, 500]")
        w = int(round(window_ms / 1000.0 * sample_rate))
        self._window = w + (w % 2)  # even, so window/2 is an exact delay
        self.latency_samples = self._window // 2
        self._len = self._window + 4
        self._buf = new_buffer(self._len)
        self._w = 0
        self._phi = 0.5  # tap phase in [0,1); 0.5 = full-gain center tap
        self._ratio_scratch = new_buffer(block_size)

    def process(self, ins):
        ratio = self.params["ratio"].ramp(self._ratio_scratch)
        buf = self._buf
        length = self._len
        window = self._window
        w = self._w
        phi = self._phi
        x = ins[0]
        out = self.out
        for i in range(self.block_size):
            buf[w] = x[i]
            r = ratio[i]
            if r != 1.0:
                phi = (phi + (1.0 - r) / window) % 1.0
            acc = 0.0
            for tap in (phi, phi + 0.5 if phi < 0.5 else phi - 0.5):
                g = 1.0 - abs(2.0 * tap - 1.0)
                if g == 0.0:
                    continue
                rp = w - tap * window
                i0 = int(rp // 1.0)
                frac = rp - i0
                i0 %= length
                i1 = i0 + 1
                if i1 == length:
                    i1 = 0
                acc += g * (buf[i0] * (1.0 - frac) + buf[i1] * frac)
            out[i] = acc
            w += 1
            if w == length:
                w = 0
        self._w = w
        self._phi = phi

    def reset(self):
        self._buf.fill(0.0)
        self._w = 0
        self._phi = 0.5


NODE_KINDS = {
    cls.kind: cls
    for cls in (GainNode, MixerNode, BiquadNode, DelayNode, RingmodNode, PitchShiftNode)
}


class Graph:
    """An acyclic audio graph compiled from NodeSpecs.

    process_block takes named external input buffers and returns a dict
    of node id -> output buffer (views into preallocated storage).
    """

    def __init__(self, specs, sample_rate: int, block_size: int, debug: bool = False):
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.debug = debug
        ids = [s.id for s in specs]
        if len(set(ids)) != len(ids):
            raise GraphError("node ids must be unique")
        id_set = set(ids)
        if any("." in i for i in id_set):
            raise GraphError("node ids must not contain '.'")

        self.nodes: dict[str, _Node] = {}
        for spec in specs:
            cls = NODE_KINDS.get(spec.kind)
            if cls is None:
                raise GraphError(f"unknown node kind {spec.kind!r}")
            node = cls(spec, sample_rate, block_size)
            n_in = len(spec.inputs)
            if not cls.min_inputs <= n_in <= cls.max_inputs:
                raise GraphError(
                    f"node {spec.id!r}: kind {spec.kind} takes "
                    f"{cls.min_inputs}..{cls.max_inputs} inputs, got {n_in}"
                )
            self.nodes[spec.id] = node

        self._inputs = {s.id: list(s.inputs) for s in specs}
        self.external_inputs = sorted(
            {name for ins in self._inputs.values() for name in ins if name not in id_set}
        )
        self._order = self._topo_sort(id_set)
        self._fin_scratch = (
            np.empty(block_size, dtype=bool) if debug else None
        )

    def _topo_sort(self, id_set) -> list[str]:
        # Kahn's algorithm; the ready set is kept sorted by node id so the
        # evaluation order is independent of spec insertion order.
        deps = {
            nid: {src for src in ins if src in id_set}
            for nid, ins in self._inputs.items()
        }
        ready = sorted(nid for nid, d in deps.items() if not d)
        order = []
        remaining = {nid: set(d) for nid, d in deps.items() if d}
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            newly = []
            for other, d in remaining.items():
                d.discard(nid)
                if not d:
                    newly.append(other)
            for other in newly:
                del remaining[other]
            ready = sorted(ready + newly)
        if remaining:
            raise CycleDetected(f"cycle through nodes: {sorted(remaining)}")
        return order

    def process_block(self, inputs: dict) -> dict:
        outs: dict[str, np.ndarray] = {}
        for nid in self._order:
            node = self.nodes[nid]
            ins = []
            for src in self._inputs[nid]:
                if src in outs:
                    ins.append(outs[src])
                elif src in inputs:
                    buf = inputs[src]
                    ins.append(buf.samples[0] if hasattr(buf, "samples") else buf)
                else:
                    raise MissingInput(f"node {nid!r}: input {src!r} not provided")
            node.process(ins)
            if self.debug:
                np.isfinite(node.out, out=self._fin_scratch)
                if not self._fin_scratch.all():
                    raise FloatingPointError(f"node {nid!r} emitted non-finite samples")
            outs[nid] = node.out
        return outs

    def set_param(self, address: str, value: float, smooth_ms: float | None = None) -> float:
        node_id, _, param = address.partition(".")
        node = self.nodes.get(node_id)
        if node is None or param not in node.params:
            raise UnknownAddress(address)
        return node.params[param].set_target(value, smooth_ms)

    def get_param(self, address: str) -> SmoothedParam:
        node_id, _, param = address.partition(".")
        node = self.nodes.get(node_id)
        if node is None or param not in node.params:
            raise UnknownAddress(address)
        return node.params[param]

    def param_addresses(self) -> list[str]:
        return sorted(
            f"{nid}.{p}" for nid, node in self.nodes.items() for p in node.params
        )

    def reset_state(self) -> None:
        for node in self.nodes.values():
            node.reset()

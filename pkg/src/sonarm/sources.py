"""Sound sources feeding the blend stage.

The consequential side is simulated: one synthetic motor voice per joint
(harmonic stack plus noise, driven by joint speed) and optional WAV file
feeds standing in for contact-microphone recordings. The synthetic side
defaults to a slow sine drone whose pitch the mapping layer ties to TCP
height. blend() crossfades the two buses.

All sources render into buffers preallocated at construction; the
per-block path allocates nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import AudioBlock, BlockMismatch, new_buffer
from .wav import read_wav_mono


@dataclass(frozen=True)
class MotorVoiceParams:
    """Harmonic-stack voice for one articulation point.

    Pitch: f = base_freq + freq_per_radps * |omega|.
    Amplitude: clamp(idle_floor + amp_per_radps * |omega|, 0, 1); the
    harmonic stack is normalized so |sample| <= amplitude * (1 + noise_level).
    """

    base_freq: float = 110.0
    freq_per_radps: float = 40.0
    n_harmonics: int = 5
    harmonic_rolloff: float = 0.55
    noise_level: float = 0.08
    idle_floor: float = 0.12
    amp_per_radps: float = 0.35

    def validate(self) -> None:
        if not self.base_freq > 0:
            raise ValueError("base_freq must be > 0")
        if self.n_harmonics < 1:
            raise ValueError("n_harmonics must be >= 1")
        if not 0 <= self.harmonic_rolloff <= 1:
            raise ValueError("harmonic_rolloff must be in [0, 1]")
        if self.idle_floor < 0:
            raise ValueError("idle_floor must be >= 0")
        if self.noise_level < 0:
            raise ValueError("noise_level must be >= 0")
        if self.freq_per_radps < 0 or self.amp_per_radps < 0:
            raise ValueError("per-rad/s slopes must be >= 0")


class MotorVoice:
    """Stateful renderer: phase-continuous across blocks, seeded noise."""

    def __init__(self, params: MotorVoiceParams, sample_rate: int, block_size: int, seed: int):
        params.validate()
        self.params = params
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.phase = 0.0  # fundamental phase, radians
        self._rng = np.random.default_rng(seed)
        self._out = new_buffer(block_size)
        self._phases = new_buffer(block_size)
        self._scratch = new_buffer(block_size)
        self._noise = new_buffer(block_size)
        self._ramp = new_buffer(block_size)
        self._ramp[:] = np.arange(1, block_size + 1)
        weights = np.array(
            [params.harmonic_rolloff**h for h in range(params.n_harmonics)]
        )
        self._weights = weights / weights.sum()

    def process(self, joint_velocity: float) -> AudioBlock:
        """Render one block for the given joint velocity (rad/s)."""
        p = self.params
        w = abs(joint_velocity)
        amp = min(max(p.idle_floor + p.amp_per_radps * w, 0.0), 1.0)
        freq = p.base_freq + p.freq_per_radps * w

        step = 2 * math.pi * freq / self.sample_rate
        # Phase of the fundamental at samples 1..n past the stored phase.
        np.multiply(self._ramp, step, out=self._phases)
        self._phases += self.phase

        out = self._out
        out.fill(0.0)
        for h, weight in enumerate(self._weights, start=1):
            np.multiply(self._phases, float(h), out=self._scratch)
            np.sin(self._scratch, out=self._scratch)
            self._scratch *= weight
            out += self._scratch

        self._rng.random(out=self._noise)
        self._noise *= 2.0
        self._noise -= 1.0
        self._noise *= p.noise_level
        out += self._noise
        out *= amp

        self.phase = float(self._phases[-1] % (2 * math.pi))
        return AudioBlock(out, self.sample_rate)


class SineDrone:
    """The default synthetic element: a phase-continuous sine voice."""

    def __init__(self, sample_rate: int, block_size: int):
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.phase = 0.0
        self._out = new_buffer(block_size)
        self._phases = new_buffer(block_size)
        self._ramp = new_buffer(block_size)
        self._ramp[:] = np.arange(1, block_size + 1)

    def process(self, freq_hz: float, level: float) -> AudioBlock:
        step = 2 * math.pi * max(freq_hz, 0.0) / self.sample_rate
        np.multiply(self._ramp, step, out=self._phases)
        self._phases += self.phase
        self.phase = float(self._phases[-1] % (2 * math.pi))
        np.sin(self._phases, out=self._out)
        self._out *= level
        return AudioBlock(self._out, self.sample_rate)


class FileFeed:
    """Sequential block reads from a pre-loaded WAV, looping or running dry.

    The file is decoded, downmixed and resampled once at construction;
    process() just copies slices, so reads are deterministic given the
    cursor and allocation-free.
    """

    def __init__(self, path, sample_rate: int, block_size: int, loop: bool = True, gain: float = 1.0):
        self.data = read_wav_mono(path, sample_rate)
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.loop = loop
        self.gain = gain
        self.cursor = 0
        self._out = new_buffer(block_size)

    def process(self) -> AudioBlock:
        out = self._out
        n = self.block_size
        total = len(self.data)
        if total == 0:
            out.fill(0.0)
            return AudioBlock(out, self.sample_rate)
        if self.loop:
            filled = 0
            while filled < n:
                take = min(n - filled, total - self.cursor)
                out[filled : filled + take] = self.data[self.cursor : self.cursor + take]
                self.cursor = (self.cursor + take) % total
                filled += take
        else:
            take = max(0, min(n, total - self.cursor))
            out[:take] = self.data[self.cursor : self.cursor + take]
            out[take:] = 0.0
            self.cursor = min(self.cursor + n, total)
        if self.gain != 1.0:
            out *= self.gain
        return AudioBlock(out, self.sample_rate)


def blend(consequential: AudioBlock, synthetic: AudioBlock, mix, out: np.ndarray | None = None) -> AudioBlock:
    """Linear crossfade: (1-mix)*consequential + mix*synthetic.

    mix may be a scalar or a per-sample array (the engine passes a
    smoothed ramp). Endpoints reproduce the corresponding input
    sample-exactly.
    """
    consequential.require_match(synthetic)
    a = consequential.samples
    b = synthetic.samples
    if out is None:
        out = np.empty_like(a)
    out = out.reshape(a.shape)
    if np.isscalar(mix) and mix == 0.0:
        np.copyto(out, a)
    elif np.isscalar(mix) and mix == 1.0:
        np.copyto(out, b)
    else:
        np.subtract(b, a, out=out)
        np.multiply(out, mix, out=out)
        out += a
    return AudioBlock(out, consequential.sample_rate)

"""Multichannel output: equal-power ring panning plus a point source.

The ring is any set of >= 2 azimuths (rad, from +x, counterclockwise,
listener at the configured center). A mono source is panned pairwise
between the two adjacent ring speakers (sum of squared gains = 1), with
optional inverse-distance rolloff clamped so gain never exceeds 1. The
point source channel sits at the robot base and receives a fixed,
distance-independent send; on disk and on the wire it is always the last
channel after the ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import AudioBlock, new_buffer, new_buffer_2d

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpeakerLayout:
    ring_azimuths: tuple[float, ...]
    has_point_source: bool = True

    def validate(self) -> None:
        ring = self.ring_azimuths
        if len(ring) < 2:
            raise ValueError("ring needs at least 2 speakers")
        for az in ring:
            if not 0.0 <= az < TWO_PI:
                raise ValueError(f"ring azimuth {az} outside [0, 2*pi)")
        if any(b <= a for a, b in zip(ring, ring[1:])):
            raise ValueError("ring azimuths must be strictly increasing")

    @property
    def ring_size(self) -> int:
        return len(self.ring_azimuths)

    @property
    def channels(self) -> int:
        return self.ring_size + (1 if self.has_point_source else 0)

    @property
    def point_source_channel(self) -> int:
        return self.ring_size  # always the last channel


def default_layout() -> SpeakerLayout:
    """Four ring speakers at 45/135/225/315 degrees plus the base point
    source: five channels."""
    quad = tuple(math.radians(a) for a in (45.0, 135.0, 225.0, 315.0))
    return SpeakerLayout(ring_azimuths=quad, has_point_source=True)


def pan_gains(azimuth: float, layout: SpeakerLayout, out: np.ndarray | None = None) -> np.ndarray:
    """Equal-power gains over the ring: only the two speakers adjacent to
    the azimuth are nonzero, g1=cos(theta*pi/2), g2=sin(theta*pi/2)."""
    ring = layout.ring_azimuths
    n = len(ring)
    if out is None:
        out = np.zeros(n)
    else:
        out.fill(0.0)
    az = azimuth % TWO_PI
    if az < ring[0] or az >= ring[-1]:
        # wrap-around segment: last speaker -> first speaker through 0/2pi
        i, j = n - 1, 0
        span = ring[0] + TWO_PI - ring[-1]
        theta = ((az - ring[-1]) % TWO_PI) / span
    else:
        i = int(np.searchsorted(ring, az, side="right")) - 1
        j = i + 1
        theta = (az - ring[i]) / (ring[j] - ring[i])
    out[i] = math.cos(theta * math.pi / 2.0)
    out[j] = math.sin(theta * math.pi / 2.0)
    return out


@dataclass(frozen=True)
class SourcePosition:
    """Sonified source (the TCP) projected to the horizontal plane."""

    position: tuple[float, float, float]
    distance: float


def source_from_point(position, listener_center=(0.0, 0.0)) -> SourcePosition:
    dx = position[0] - listener_center[0]
    dy = position[1] - listener_center[1]
    return SourcePosition(
        position=tuple(float(c) for c in position),
        distance=math.hypot(dx, dy),
    )


def _rolloff_gain(kind: str, distance: float, reference_m: float) -> float:
    if kind == "none":
        return 1.0
    if kind == "inverse":
        if distance <= reference_m:
            return 1.0  # clamped below the reference distance
        return reference_m / distance
    raise ValueError(f"unknown rolloff {kind!r}")


class Spatializer:
    """Block renderer: mono in, layout.channels out, all preallocated."""

    def __init__(self, layout: SpeakerLayout, sample_rate: int, block_size: int,
                 rolloff: str = "inverse", reference_m: float = 1.0,
                 listener_center=(0.0, 0.0)):
        layout.validate()
        _rolloff_gain(rolloff, 1.0, 1.0)  # validate kind early
        self.layout = layout
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.rolloff = rolloff
        self.reference_m = reference_m
        self.listener_center = (float(listener_center[0]), float(listener_center[1]))
        self.out = new_buffer_2d(layout.channels, block_size)
        self._gains = new_buffer(layout.ring_size)

    def process(self, mono: np.ndarray, src: SourcePosition, point_send: float) -> np.ndarray:
        az = math.atan2(
            src.position[1] - self.listener_center[1],
            src.position[0] - self.listener_center[0],
        )
        pan_gains(az, self.layout, out=self._gains)
        roll = _rolloff_gain(self.rolloff, src.distance, self.reference_m)
        for c in range(self.layout.ring_size):
            np.multiply(mono, self._gains[c] * roll, out=self.out[c])
        if self.layout.has_point_source:
            np.multiply(mono, point_send, out=self.out[self.layout.point_source_channel])
        return self.out


def spatialize(block: AudioBlock, src: SourcePosition, layout: SpeakerLayout,
               distance_rolloff: str = "none", point_send: float = 0.0,
               reference_m: float = 1.0, listener_center=(0.0, 0.0)) -> AudioBlock:
    """One-shot functional form of Spatializer.process."""
    if not block.is_mono:
        raise ValueError("spatialize expects a mono block")
    sp = Spatializer(
        layout, block.sample_rate, block.block_size,
        rolloff=distance_rolloff, reference_m=reference_m,
        listener_center=listener_center,
    )
    out = sp.process(block.samples[0], src, point_send)
    return AudioBlock(out.copy(), block.sample_rate)

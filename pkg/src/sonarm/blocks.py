"""Audio block type and the counted buffer pool.

Every audio buffer and scratch array used on the block-processing path
must come from new_buffer()/new_buffer_2d() so that allocation_count()
can prove the hot path allocates nothing after startup: build everything,
snapshot the counter, process, assert the counter did not move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_allocations = 0


class BlockMismatch(Exception):
    """Two blocks that must agree in shape/sample rate do not."""


def new_buffer(n: int) -> np.ndarray:
    """Zeroed float64 mono buffer, counted."""
    global _allocations
    _allocations += 1
    return np.zeros(n, dtype=np.float64)


def new_buffer_2d(channels: int, n: int) -> np.ndarray:
    global _allocations
    _allocations += 1
    return np.zeros((channels, n), dtype=np.float64)


def allocation_count() -> int:
    return _allocations


@dataclass
class AudioBlock:
    """A fixed-length frame of float samples, shape (channels, block_size)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.samples.ndim == 1:
            self.samples = self.samples.reshape(1, -1)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def block_size(self) -> int:
        return self.samples.shape[1]

    @property
    def is_mono(self) -> bool:
        return self.channels == 1

    def require_match(self, other: "AudioBlock") -> None:
        if self.samples.shape != other.samples.shape:
            raise BlockMismatch(
                f"shape {self.samples.shape} vs {other.samples.shape}"
            )
        if self.sample_rate != other.sample_rate:
            raise BlockMismatch(
                f"sample rate {self.sample_rate} vs {other.sample_rate}"
            )

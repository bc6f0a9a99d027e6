"""RIFF/WAV reading and writing for the engine's supported formats.

Read: PCM16, PCM24, float32; any channel count (downmixed to mono by
averaging); resampled to the engine rate with linear interpolation.
Fixed-point conversion: int16 / 32768, int24/int32 / 2^31 (scipy loads
24-bit left-justified into int32, so this is raw24 / 2^23).

Write: float32 interleaved, any channel count.
"""

from __future__ import annotations

import io

import numpy as np
from scipy.io import wavfile


class UnsupportedFormat(Exception):
    pass


class FileUnreadable(Exception):
    pass


def read_wav_mono(path, target_rate: int) -> np.ndarray:
    """Load a WAV as mono float64 at target_rate."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as e:
        raise FileUnreadable(str(e)) from e
    except Exception as e:
        raise FileUnreadable(f"{path}: {e}") from e

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormat(f"{path}: dtype {data.dtype} (want PCM16/24 or float32)")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    if rate != target_rate and len(samples) > 0:
        n_out = max(1, int(round(len(samples) * target_rate / rate)))
        t_in = np.arange(len(samples)) / rate
        t_out = np.arange(n_out) / target_rate
        samples = np.interp(t_out, t_in, samples)
    return samples


def write_wav_float32(frames: np.ndarray, sample_rate: int) -> bytes:
    """Encode (n_frames, channels) float data as an interleaved float32 WAV."""
    buf = io.BytesIO()
    wavfile.write(buf, sample_rate, np.ascontiguousarray(frames, dtype=np.float32))
    return buf.getvalue()

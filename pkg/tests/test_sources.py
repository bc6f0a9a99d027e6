"""Motor voices, file feeds, the blend crossfade, and WAV ingestion."""

import io
import math
import struct

import numpy as np
import pytest
from scipy.io import wavfile

from sonarm.blocks import AudioBlock, BlockMismatch
from sonarm.sources import FileFeed, MotorVoice, MotorVoiceParams, SineDrone, blend
from sonarm.wav import FileUnreadable, UnsupportedFormat, read_wav_mono

SR = 48000
BS = 256


def render_seconds(voice: MotorVoice, omega: float, seconds: float) -> np.ndarray:
    blocks = int(seconds * SR / BS)
    return np.concatenate([voice.process(omega).samples[0].copy() for _ in range(blocks)])


# -- motor voice ---------------------------------------------------------------


def test_idle_rms_matches_analytic_value():
    p = MotorVoiceParams()
    voice = MotorVoice(p, SR, BS, seed=1)
    x = render_seconds(voice, 0.0, 1.0)
    # harmonics are orthogonal over a long window; uniform noise has power 1/3
    weights = np.array([p.harmonic_rolloff**h for h in range(p.n_harmonics)])
    weights /= weights.sum()
    stack_power = float(np.sum(weights**2) / 2.0)
    expected = p.idle_floor * math.sqrt(stack_power + p.noise_level**2 / 3.0)
    measured = float(np.sqrt((x**2).mean()))
    assert abs(measured - expected) / expected < 0.05


def _dominant_freq(x: np.ndarray) -> float:
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    return float(np.fft.rfftfreq(len(x), 1 / SR)[np.argmax(spec)])


def test_fundamental_tracks_joint_speed():
    p = MotorVoiceParams(n_harmonics=1, noise_level=0.0)
    for omega in (0.0, 1.0, 2.0):
        voice = MotorVoice(p, SR, BS, seed=2)
        x = render_seconds(voice, omega, 1.0)
        expected = p.base_freq + p.freq_per_radps * omega
        assert abs(_dominant_freq(x) - expected) < 2.0  # FFT bin resolution


def test_phase_continuous_across_blocks():
    p = MotorVoiceParams(n_harmonics=1, noise_level=0.0, idle_floor=1.0, amp_per_radps=0.0)
    voice = MotorVoice(p, SR, BS, seed=3)
    a = voice.process(0.0).samples[0].copy()
    b = voice.process(0.0).samples[0].copy()
    boundary_jump = abs(b[0] - a[-1])
    max_intra = max(np.abs(np.diff(a)).max(), np.abs(np.diff(b)).max())
    assert boundary_jump <= max_intra + 1e-12


def test_output_bounded():
    rng = np.random.default_rng(4)
    for _ in range(25):
        p = MotorVoiceParams(
            base_freq=rng.uniform(40, 800),
            freq_per_radps=rng.uniform(0, 200),
            n_harmonics=int(rng.integers(1, 12)),
            harmonic_rolloff=rng.uniform(0, 1),
            noise_level=rng.uniform(0, 0.5),
            idle_floor=rng.uniform(0, 1),
            amp_per_radps=rng.uniform(0, 2),
        )
        voice = MotorVoice(p, SR, BS, seed=5)
        for omega in (0.0, 1.0, 10.0):
            x = voice.process(omega).samples[0]
            assert np.all(np.abs(x) <= 1.0 + p.noise_level + 1e-9)


def test_rms_monotone_in_joint_speed():
    p = MotorVoiceParams()
    rms = []
    for omega in (0.0, 0.5, 1.0, 2.0):
        voice = MotorVoice(p, SR, BS, seed=6)
        x = render_seconds(voice, omega, 0.5)
        rms.append(float(np.sqrt((x**2).mean())))
    assert all(b >= a for a, b in zip(rms, rms[1:]))


def test_voice_deterministic_given_seed():
    p = MotorVoiceParams()
    a = render_seconds(MotorVoice(p, SR, BS, seed=9), 1.0, 0.25)
    b = render_seconds(MotorVoice(p, SR, BS, seed=9), 1.0, 0.25)
    assert np.array_equal(a, b)


def test_params_validation():
    with pytest.raises(ValueError):
        MotorVoiceParams(base_freq=0.0).validate()
    with pytest.raises(ValueError):
        MotorVoiceParams(n_harmonics=0).validate()
    with pytest.raises(ValueError):
        MotorVoiceParams(harmonic_rolloff=1.5).validate()
    with pytest.raises(ValueError):
        MotorVoiceParams(idle_floor=-0.1).validate()


# -- WAV reading ---------------------------------------------------------------


def _wav_bytes(data: np.ndarray, sr: int = SR) -> str:
    buf = io.BytesIO()
    wavfile.write(buf, sr, data)
    return buf


def test_silent_wav_gives_zero_blocks(tmp_path):
    path = tmp_path / "silence.wav"
    wavfile.write(path, SR, np.zeros(1000, dtype=np.int16))
    feed = FileFeed(path, SR, BS, loop=True)
    for _ in range(8):
        assert np.all(feed.process().samples == 0.0)


def test_one_sample_loop_repeats(tmp_path):
    path = tmp_path / "one.wav"
    wavfile.write(path, SR, np.array([16384], dtype=np.int16))
    feed = FileFeed(path, SR, BS, loop=True)
    x = feed.process().samples[0]
    assert np.all(x == 16384 / 32768.0)


def test_pcm16_full_scale_conversion(tmp_path):
    path = tmp_path / "fs.wav"
    wavfile.write(path, SR, np.array([32767, -32768, 0], dtype=np.int16))
    data = read_wav_mono(path, SR)
    assert data[0] == 32767 / 32768.0
    assert data[1] == -1.0
    assert data[2] == 0.0


def test_pcm24_conversion(tmp_path):
    # hand-built 24-bit PCM RIFF: full-scale positive, negative, zero
    samples = [8388607, -8388608, 0]
    payload = b"".join(struct.pack("<i", s)[0:3] for s in samples)
    hdr = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, SR, SR * 3, 3, 24)
    path = tmp_path / "p24.wav"
    path.write_bytes(hdr + fmt + b"data" + struct.pack("<I", len(payload)) + payload)
    data = read_wav_mono(path, SR)
    assert abs(data[0] - 8388607 / 8388608.0) < 1e-12
    assert data[1] == -1.0
    assert data[2] == 0.0


def test_float32_passthrough_and_downmix(tmp_path):
    path = tmp_path / "f32.wav"
    stereo = np.stack([np.full(100, 0.5, np.float32), np.full(100, -0.25, np.float32)], axis=1)
    wavfile.write(path, SR, stereo)
    data = read_wav_mono(path, SR)
    assert np.allclose(data, 0.125)  # mean of the channels


def test_resampling_linear(tmp_path):
    path = tmp_path / "slow.wav"
    ramp = np.linspace(-1, 1, 24000, dtype=np.float32)
    wavfile.write(path, 24000, ramp)
    data = read_wav_mono(path, SR)
    assert abs(len(data) - 48000) <= 1
    # a linear ramp survives linear interpolation
    assert np.allclose(data[: len(data) // 2 * 2 : 2][:11999], ramp[:11999], atol=1e-4)


def test_unsupported_format_rejected(tmp_path):
    path = tmp_path / "u8.wav"
    wavfile.write(path, SR, np.array([0, 128, 255], dtype=np.uint8))
    with pytest.raises(UnsupportedFormat):
        read_wav_mono(path, SR)


def test_unreadable_file_rejected(tmp_path):
    path = tmp_path / "garbage.wav"
    path.write_bytes(b"this is not a RIFF file at all")
    with pytest.raises(FileUnreadable):
        read_wav_mono(path, SR)
    with pytest.raises(FileUnreadable):
        read_wav_mono(tmp_path / "missing.wav", SR)


def test_feed_no_loop_runs_dry(tmp_path):
    path = tmp_path / "short.wav"
    wavfile.write(path, SR, np.full(300, 0.5, dtype=np.float32))
    feed = FileFeed(path, SR, BS, loop=False)
    first = feed.process().samples[0].copy()
    second = feed.process().samples[0].copy()
    third = feed.process().samples[0]
    assert np.all(first == 0.5)
    assert np.all(second[: 300 - BS] == 0.5)
    assert np.all(second[300 - BS :] == 0.0)
    assert np.all(third == 0.0)


def test_feed_deterministic_given_cursor(tmp_path):
    path = tmp_path / "noise.wav"
    rng = np.random.default_rng(0)
    wavfile.write(path, SR, rng.standard_normal(1000).astype(np.float32))
    a = FileFeed(path, SR, BS, loop=True)
    b = FileFeed(path, SR, BS, loop=True)
    for _ in range(10):
        assert np.array_equal(a.process().samples, b.process().samples)


# -- blend ---------------------------------------------------------------------


def _blocks():
    rng = np.random.default_rng(11)
    a = AudioBlock(rng.standard_normal(BS), SR)
    b = AudioBlock(rng.standard_normal(BS), SR)
    return a, b


def test_blend_endpoints_sample_exact():
    a, b = _blocks()
    assert np.array_equal(blend(a, b, 0.0).samples, a.samples)
    assert np.array_equal(blend(a, b, 1.0).samples, b.samples)


def test_blend_half_of_identical_inputs_is_identity():
    a, _ = _blocks()
    a2 = AudioBlock(a.samples.copy(), SR)
    out = blend(a, a2, 0.5)
    assert np.allclose(out.samples, a.samples, atol=1e-15)


def test_blend_linearity():
    a, b = _blocks()
    for m in (0.0, 0.25, 0.5, 0.9):
        lhs = blend(a, b, m).samples + blend(b, a, m).samples
        assert np.allclose(lhs, a.samples + b.samples, atol=1e-7)


def test_blend_mismatch_rejected():
    a, _ = _blocks()
    short = AudioBlock(np.zeros(BS // 2), SR)
    with pytest.raises(BlockMismatch):
        blend(a, short, 0.5)
    wrong_rate = AudioBlock(np.zeros(BS), SR * 2)
    with pytest.raises(BlockMismatch):
        blend(a, wrong_rate, 0.5)


def test_drone_is_clean_sine():
    drone = SineDrone(SR, BS)
    x = np.concatenate([drone.process(220.0, 0.5).samples[0].copy() for _ in range(200)])
    assert abs(_dominant_freq(x) - 220.0) < 2.0
    assert abs(float(np.sqrt((x**2).mean())) - 0.5 / math.sqrt(2)) < 0.01

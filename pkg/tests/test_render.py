import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactsynth.errors import FormatError, ParameterError
from contactsynth.force import ForceSignal
from contactsynth.modal import IrField, ModalIR, synthesize_ir
from contactsynth.render import (AudioBuffer, RenderSettings, normalize, read_wav,
                                 render_time_varying, write_wav)

from conftest import random_bank
from oracles import dense_render, rel_l2

FS = 44100


def as_triple(ir):
    return (ir.frequencies, ir.amplitudes, ir.decays)


def test_settings_defaults_and_validation():
    s = RenderSettings()
    assert (s.sample_rate, s.morph_block, s.t0, s.output_peak) == (44100, 64, 0.5, 0.5)
    assert s.ir_length == 22050
    for bad in (dict(sample_rate=0), dict(morph_block=0), dict(morph_block=2.5),
                dict(t0=0), dict(output_peak=0), dict(output_peak=1.5)):
        with pytest.raises(ParameterError):
            RenderSettings(**bad)


def test_audio_buffer_invariants():
    with pytest.raises(ParameterError):
        AudioBuffer(FS, np.array([0.0, np.inf]))
    with pytest.raises(ParameterError):
        AudioBuffer(FS, np.zeros((2, 2)))


def test_impulse_gives_ir():
    ir = random_bank(np.random.default_rng(0), 12, t0=0.05)
    settings = RenderSettings(t0=0.05)
    f = np.zeros(300)
    f[0] = 1.0
    y = render_time_varying(ForceSignal(FS, f), IrField(((0.0, ir),)), np.zeros(300), settings)
    h = synthesize_ir(ir, FS)
    assert len(y) == 300 + h.size
    np.testing.assert_array_equal(y.samples[:h.size], h)
    np.testing.assert_array_equal(y.samples[h.size:], 0.0)


def test_zero_force():
    field = IrField(((0.0, random_bank(np.random.default_rng(1), 5)),
                     (1.0, random_bank(np.random.default_rng(2), 5))),
                    random_bank(np.random.default_rng(3), 5), 0.5)
    y = render_time_varying(np.zeros(2000), field, np.linspace(0, 1, 2000),
                            RenderSettings(t0=0.1))
    assert not np.any(y.samples)


def test_length_mismatch():
    field = IrField(((0.0, random_bank(np.random.default_rng(1), 5)),))
    with pytest.raises(ParameterError):
        render_time_varying(np.zeros(100), field, np.zeros(99))


def test_empty_force():
    field = IrField(((0.0, random_bank(np.random.default_rng(1), 5)),))
    y = render_time_varying(np.zeros(0), field, np.zeros(0), RenderSettings(t0=0.01))
    assert len(y) == 441 and not np.any(y.samples)


def test_constant_field_is_standard_convolution():
    rng = np.random.default_rng(4)
    ir = random_bank(rng, 30, t0=0.1)
    f = rng.standard_normal(5000)
    y = render_time_varying(f, IrField(((0.3, ir),)), rng.uniform(0, 1, 5000),
                            RenderSettings(t0=0.1))
    ref = np.convolve(f, synthesize_ir(ir, FS))
    assert rel_l2(y.samples[:ref.size], ref) <= 1e-12


@pytest.mark.parametrize("block", [1, 7, 64, 2000])
def test_matches_dense_oracle(block):
    rng = np.random.default_rng(block)
    a, b = random_bank(rng, 6, t0=0.05), random_bank(rng, 4, t0=0.05)
    scr = random_bank(rng, 3, t0=0.05)
    T1 = 2500
    s = 0.5 + 0.5 * np.sin(np.linspace(0, 5, T1))
    f = rng.standard_normal(T1)
    field = IrField(((0.1, a), (0.9, b)), scr, 0.4)
    y = render_time_varying(f, field, s, RenderSettings(t0=0.05, morph_block=block))
    ref = dense_render(f, [(0.1, as_triple(a)), (0.9, as_triple(b))], s, round(0.05 * FS), FS,
                       block, as_triple(scr), 0.4)
    assert rel_l2(y.samples, ref) <= 1e-9


def test_three_anchor_field_matches_oracle():
    rng = np.random.default_rng(11)
    irs = [random_bank(rng, 5, t0=0.03) for _ in range(3)]
    T1 = 3000
    s = np.clip(np.linspace(-0.1, 1.1, T1), 0, 1)
    f = rng.standard_normal(T1)
    field = IrField(tuple(zip((0.0, 0.4, 1.0), irs)))
    y = render_time_varying(f, field, s, RenderSettings(t0=0.03, morph_block=16))
    ref = dense_render(f, [(p, as_triple(ir)) for p, ir in zip((0.0, 0.4, 1.0), irs)], s,
                       round(0.03 * FS), FS, 16)
    assert rel_l2(y.samples, ref) <= 1e-9


def test_linearity_in_force():
    rng = np.random.default_rng(5)
    field = IrField(((0.0, random_bank(rng, 8, t0=0.05)), (1.0, random_bank(rng, 8, t0=0.05))),
                    random_bank(rng, 4, t0=0.05), 0.3)
    s = np.linspace(0, 1, 4000)
    f1, f2 = rng.standard_normal(4000), rng.standard_normal(4000)
    st_ = RenderSettings(t0=0.05)
    y12 = render_time_varying(f1 + f2, field, s, st_).samples
    y1 = render_time_varying(f1, field, s, st_).samples
    y2 = render_time_varying(f2, field, s, st_).samples
    assert rel_l2(y1 + y2, y12) <= 1e-12


def test_block_size_convergence():
    rng = np.random.default_rng(6)
    a = random_bank(rng, 10, t0=0.05)
    b = ModalIR.from_arrays(a.frequencies * 1.05, a.amplitudes * 1.3, a.decays * 0.9, 0.05)
    field = IrField(((0.0, a), (1.0, b)))
    n = 8192
    s = 0.5 - 0.5 * np.cos(np.linspace(0, 2 * np.pi, n))
    f = rng.standard_normal(n)
    outs = [render_time_varying(f, field, s, RenderSettings(t0=0.05, morph_block=blk)).samples
            for blk in (64, 32, 16, 8)]
    diffs = [np.linalg.norm(outs[i] - outs[i + 1]) for i in range(3)]
    assert diffs[0] > diffs[1] > diffs[2] > 0


def test_nyquist_modes_are_silent():
    low = ModalIR.from_arrays([1000.0], [1.0], [10.0], 0.02)
    both = ModalIR.from_arrays([1000.0, 30000.0], [1.0, 1.0], [10.0, 10.0], 0.02)
    f = np.random.default_rng(7).standard_normal(3000)
    s = np.linspace(0, 1, 3000)
    st_ = RenderSettings(t0=0.02, morph_block=8)
    ya = render_time_varying(f, IrField(((0.0, low), (1.0, low))), s, st_)
    yb = render_time_varying(f, IrField(((0.0, both), (1.0, both))), s, st_)
    np.testing.assert_allclose(yb.samples, ya.samples, rtol=0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), block=st.integers(1, 300), t1=st.integers(1, 3000))
def test_output_finite_and_matches_oracle(seed, block, t1):
    rng = np.random.default_rng(seed)
    a, b = random_bank(rng, 3, t0=0.01), random_bank(rng, 3, t0=0.01)
    f = rng.standard_normal(t1) * 10 ** rng.uniform(-3, 3)
    s = rng.uniform(-0.2, 1.2, t1)
    field = IrField(((0.2, a), (0.7, b)))
    y = render_time_varying(f, field, s, RenderSettings(t0=0.01, morph_block=block))
    assert np.all(np.isfinite(y.samples))
    ref = dense_render(f, [(0.2, as_triple(a)), (0.7, as_triple(b))], s, 441, FS, block)
    assert rel_l2(y.samples, ref) <= 1e-9


def test_normalize():
    buf = AudioBuffer(FS, np.array([0.0, 2.0, -1.0]))
    out, scale = normalize(buf, 0.5)
    assert scale == 0.25
    np.testing.assert_array_equal(out.samples, [0.0, 0.5, -0.25])
    silent = AudioBuffer(FS, np.zeros(4))
    out, scale = normalize(silent, 0.5)
    assert scale == 1.0 and out is silent


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(0.01, 1.0))
def test_normalize_idempotent(values, peak):
    once, _ = normalize(AudioBuffer(FS, np.array(values)), peak)
    twice, _ = normalize(once, peak)
    assert once.samples.tobytes() == twice.samples.tobytes()
    if np.any(once.samples):
        assert np.max(np.abs(once.samples)) == peak


def test_wav_round_trip(tmp_path):
    x = np.random.default_rng(8).uniform(-1, 1, 1000)
    x[:3] = [1.0, -1.0, 0.0]
    write_wav(AudioBuffer(22050, x), tmp_path / "a.wav")
    y = read_wav(tmp_path / "a.wav")
    assert y.sample_rate == 22050
    assert np.max(np.abs(y.samples - x)) <= 1 / 32767
    raw = (tmp_path / "a.wav").read_bytes()
    assert raw[0:4] == b"RIFF" and raw[8:12] == b"WAVE"
    with wave.open(str(tmp_path / "a.wav")) as w:
        assert (w.getnchannels(), w.getsampwidth()) == (1, 2)


def test_wav_quantization_and_clipping(tmp_path):
    write_wav(AudioBuffer(FS, np.array([0.5, 1.5, -1.5, 1 / 32767 * 0.49])), tmp_path / "q.wav")
    with wave.open(str(tmp_path / "q.wav")) as w:
        q = np.frombuffer(w.readframes(4), "<i2")
    np.testing.assert_array_equal(q, [16384, 32767, -32768, 0])


def write_raw_wav(path, channels, width, frames):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(FS)
        w.writeframes(frames)


def test_read_stereo_rejected(tmp_path):
    write_raw_wav(tmp_path / "s.wav", 2, 2, bytes(16))
    with pytest.raises(FormatError):
        read_wav(tmp_path / "s.wav")


def test_read_non_wav(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"not a wave file at all")
    with pytest.raises(FormatError):
        read_wav(tmp_path / "x.wav")
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "missing.wav")


@pytest.mark.parametrize("width,dtype", [(1, None), (3, None), (4, "<i4")])
def test_read_other_pcm_widths(tmp_path, width, dtype):
    if width == 1:
        frames = bytes([128, 255, 1])
        expected = [0.0, 127 / 127, -127 / 127]
    elif width == 3:
        frames = bytes([0, 0, 0, 0xFF, 0xFF, 0x7F, 0x01, 0x00, 0x80])
        expected = [0.0, 1.0, -1.0]
    else:
        frames = np.array([0, 2147483647, -2147483647], dtype).tobytes()
        expected = [0.0, 1.0, -1.0]
    write_raw_wav(tmp_path / "w.wav", 1, width, frames)
    np.testing.assert_allclose(read_wav(tmp_path / "w.wav").samples, expected, atol=1e-12)

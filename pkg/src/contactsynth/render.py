"""Time-varying convolution of the contact force with location-dependent IRs.

Every force sample excites the total impulse response belonging to the
location where it occurred, truncated to ``t0`` seconds:

    y[t] = sum_m f[m] * h_{s(m)}[t - m],   0 <= t - m < T0

IRs are refreshed once per ``morph_block`` excitation samples. The surface
part is evaluated per block with a bank of complex one-pole resonators
(compiled), blocks that share one IR are merged and long merged runs go
through plain convolution. The scraper part is position independent and is a
plain convolution too. Plain convolutions use FFTs unless the force is
sparse enough for direct accumulation to be cheaper.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from ._kernels import ring_segments
from .errors import FormatError, ParameterError
from .modal import DECAY_FLOOR, IrField, modal_sum, phase_cycles

DEFAULT_SAMPLE_RATE = 44100
# Merged runs at least this long use FFT convolution instead of resonators.
FFT_SEGMENT = 1024


@dataclass(frozen=True)
class RenderSettings:
    sample_rate: int = DEFAULT_SAMPLE_RATE
    morph_block: int = 64
    t0: float = 0.5
    output_peak: float = 0.5

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        if int(self.morph_block) != self.morph_block or self.morph_block < 1:
            raise ParameterError("morph_block must be a positive integer")
        if not self.t0 > 0:
            raise ParameterError("t0 must be positive")
        if not 0 < self.output_peak <= 1:
            raise ParameterError("output_peak must lie in (0, 1]")

    @property
    def ir_length(self) -> int:
        return int(round(self.t0 * self.sample_rate))


@dataclass(frozen=True)
class AudioBuffer:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ParameterError("audio buffers are mono")
        if not np.all(np.isfinite(x)):
            raise ParameterError("audio samples must be finite")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def block_modes(field: IrField, positions):
    """Surface mode parameters for each block position, as padded arrays.

    Mirrors :func:`contactsynth.modal.ir_at_position` row by row; unused
    slots have zero amplitude.

    Returns:
        ``(frequencies, amplitudes, decays)`` of shape ``(len(positions), K)``.
    """
    s = np.asarray(positions, dtype=np.float64)
    anchors = field.anchors
    K = max(len(ir) for _, ir in anchors)
    freq = np.ones((s.size, K))
    amp = np.zeros((s.size, K))
    dec = np.zeros((s.size, K))

    def put(rows, ir, k=None):
        k = len(ir) if k is None else k
        freq[rows, :k] = ir.frequencies[:k]
        amp[rows, :k] = ir.amplitudes[:k]
        dec[rows, :k] = ir.decays[:k]

    pos = np.array([p for p, _ in anchors])
    if len(anchors) == 1:
        put(slice(None), anchors[0][1])
        return freq, amp, dec
    first = s <= pos[0]
    last = ~first & (s >= pos[-1])
    put(first, anchors[0][1])
    put(last, anchors[-1][1])
    inner = ~(first | last)
    seg = np.searchsorted(pos, s, side="right") - 1
    for i in np.unique(seg[inner]):
        rows = np.nonzero(inner & (seg == i))[0]
        (s0, a), (s1, b) = anchors[i], anchors[i + 1]
        k = min(len(a), len(b))
        w = (s[rows] - s0) / (s1 - s0)
        put(rows[w == 0.0], a, k)
        put(rows[w == 1.0], b, k)
        mid = rows[(w > 0.0) & (w < 1.0)]
        if mid.size == 0:
            continue
        wm = ((s[mid] - s0) / (s1 - s0))[:, None]
        u = 1.0 - wm
        da = np.maximum(a.decays[:k], DECAY_FLOOR)
        db = np.maximum(b.decays[:k], DECAY_FLOOR)
        freq[mid, :k] = a.frequencies[:k] ** u * b.frequencies[:k] ** wm
        amp[mid, :k] = a.amplitudes[:k] ** u * b.amplitudes[:k] ** wm
        dec[mid, :k] = da ** u * db ** wm
    return freq, amp, dec


def _convolve_into(out, start, f, ir):
    """Add ``f * ir`` to ``out[start:]``, directly when ``f`` is sparse enough."""
    nz = np.flatnonzero(f)
    n = f.size + ir.size - 1
    if nz.size * ir.size <= 4 * n * np.log2(n + 1):
        for m in nz:
            out[start + m:start + m + ir.size] += f[m] * ir
    else:
        out[start:start + n] += fftconvolve(f, ir)


def _segments(freq, amp, dec, block, total):
    """Merge consecutive blocks that carry identical mode rows."""
    nb = freq.shape[0]
    same = np.zeros(nb, dtype=bool)
    if nb > 1:
        same[1:] = (np.all(freq[1:] == freq[:-1], axis=1)
                    & np.all(amp[1:] == amp[:-1], axis=1)
                    & np.all(dec[1:] == dec[:-1], axis=1))
    heads = np.nonzero(~same)[0]
    starts = heads * block
    stops = np.append(heads[1:] * block, total)
    return heads, starts, stops


def _poles(freq, dec, sample_rate, n0):
    step = (-dec + 2j * np.pi * freq) / sample_rate
    pole = np.exp(step)
    # pole**n0 with the phase reduced to whole cycles first.
    cycles = phase_cycles(freq, n0, sample_rate)
    tail = np.exp(-dec * n0 / sample_rate) * np.exp(2j * np.pi * cycles)
    return pole, tail


def render_time_varying(force, field: IrField, path_position,
                        settings: RenderSettings = RenderSettings()) -> AudioBuffer:
    """Convolve a force signal with the IR field along the path.

    Args:
        force: ForceSignal or 1D array of length T1.
        field: surface anchors, scraper response and its weight.
        path_position: normalized location s(t) in [0, 1], length T1.
        settings: sample rate, IR refresh block, IR duration.

    Returns:
        Unnormalized AudioBuffer of length T1 + T0.
    """
    f = np.asarray(getattr(force, "f", force), dtype=np.float64)
    s = np.asarray(path_position, dtype=np.float64)
    if f.ndim != 1 or s.shape != f.shape:
        raise ParameterError(
            f"force ({f.shape}) and path positions ({s.shape}) must be 1D of equal length")
    fs = settings.sample_rate
    n0 = settings.ir_length
    block = int(settings.morph_block)
    T1 = f.size
    out = np.zeros(T1 + n0)
    if T1 == 0 or n0 == 0:
        return AudioBuffer(fs, out)

    freq, amp, dec = block_modes(field, s[::block])
    amp = np.where(freq < 0.5 * fs, amp, 0.0)
    heads, starts, stops = _segments(freq, amp, dec, block, T1)
    long_run = (stops - starts >= FFT_SEGMENT) | (heads.size == 1)

    for h, a, b in zip(heads[long_run], starts[long_run], stops[long_run]):
        _convolve_into(out, a, f[a:b], modal_sum(freq[h], amp[h], dec[h], n0, fs))

    short = ~long_run
    if np.any(short):
        rows = heads[short]
        pole, tail = _poles(freq[rows], dec[rows], fs, n0)
        ring_segments(f, starts[short].astype(np.int64), stops[short].astype(np.int64),
                      np.ascontiguousarray(pole.real), np.ascontiguousarray(pole.imag),
                      np.ascontiguousarray(amp[rows]), np.ascontiguousarray(tail.real),
                      np.ascontiguousarray(tail.imag), n0, out)

    scraper = field.scraper_ir
    if scraper is not None and field.eta > 0:
        sf, sa, sd = scraper.frequencies, scraper.amplitudes, scraper.decays
        keep = sf < 0.5 * fs
        _convolve_into(out, 0, f, modal_sum(sf[keep], field.eta * sa[keep], sd[keep], n0, fs))
    return AudioBuffer(fs, out)


def normalize(buf: AudioBuffer, output_peak=0.5):
    """Scale ``buf`` so its peak magnitude equals ``output_peak``.

    Returns:
        ``(AudioBuffer, scale)``; silent buffers come back unchanged with
        scale 1.0.
    """
    peak = float(np.max(np.abs(buf.samples))) if len(buf) else 0.0
    if peak == 0.0 or peak == output_peak:
        return buf, 1.0
    scale = output_peak / peak
    return AudioBuffer(buf.sample_rate, buf.samples / peak * output_peak), scale


def write_wav(buf: AudioBuffer, path) -> None:
    """Write 16-bit PCM mono; samples map to ``round(x * 32767)``, clipped."""
    q = np.clip(np.rint(buf.samples * 32767.0), -32768, 32767).astype("<i2")
    with open(path, "wb") as fh, wave.open(fh, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(buf.sample_rate))
        w.writeframes(q.tobytes())


_PCM_SCALE = {1: 127.0, 2: 32767.0, 3: 8388607.0, 4: 2147483647.0}


def _decode_pcm(raw, width):
    if width == 1:
        return np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0
    if width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        return np.where(v >= 1 << 23, v - (1 << 24), v).astype(np.float64)
    return np.frombuffer(raw, dtype=f"<i{width}").astype(np.float64)


def read_wav(path) -> AudioBuffer:
    """Read a mono integer-PCM WAV file into [-1, 1] floats.

    Raises:
        FormatError: not RIFF/WAVE, not integer PCM, or more than one channel.
    """
    if not Path(path).exists():
        raise FileNotFoundError(path)
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if channels != 1:
        raise FormatError(f"{path}: expected mono, found {channels} channels")
    if width not in _PCM_SCALE:
        raise FormatError(f"{path}: unsupported sample width {width}")
    return AudioBuffer(rate, _decode_pcm(raw, width) / _PCM_SCALE[width])

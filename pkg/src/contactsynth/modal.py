"""Impulse responses as banks of exponentially decaying sinusoids.

Covers estimation of a mode bank from a recorded response, log-domain
morphing between banks measured at different locations, resynthesis and the
weighted union of surface and scraper banks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import get_window
from scipy.special import sindg

from .errors import DegenerateInputError, FormatError, ParameterError

MAX_MODES = 50
MAX_MIXED_MODES = 100
MIN_PEAK_SEPARATION_HZ = 20.0
ENVELOPE_HOP = 256
ENVELOPE_FRAME = 2048
ENVELOPE_FLOOR = 1e-2
DECAY_FLOOR = 1e-6
# Fraction of the response faded out before peak picking.
TAIL_TAPER = 0.25


@dataclass(frozen=True)
class Mode:
    frequency: float
    amplitude: float
    decay: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ParameterError(f"mode frequency must be positive, got {self.frequency!r}")
        if not self.amplitude > 0:
            raise ParameterError(f"mode amplitude must be positive, got {self.amplitude!r}")
        if self.decay < 0:
            raise ParameterError(f"mode decay must be non-negative, got {self.decay!r}")


@dataclass(frozen=True)
class ModalIR:
    """Mode bank with a finite duration ``t0`` in seconds.

    Modes are stored in ascending frequency order. Banks built from
    measurements hold at most :data:`MAX_MODES` modes; mixtures of a surface
    and a scraper bank may hold up to :data:`MAX_MIXED_MODES`.
    """

    modes: tuple = field(default_factory=tuple)
    t0: float = 0.5

    def __post_init__(self):
        modes = tuple(sorted(self.modes, key=lambda m: m.frequency))
        if len(modes) > MAX_MIXED_MODES:
            raise ParameterError(f"too many modes ({len(modes)})")
        if not self.t0 > 0:
            raise ParameterError("t0 must be positive")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self):
        return len(self.modes)

    @classmethod
    def from_arrays(cls, frequencies, amplitudes, decays, t0=0.5):
        return cls(tuple(Mode(float(f), float(a), float(d))
                         for f, a, d in zip(frequencies, amplitudes, decays)), t0)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([m.amplitude for m in self.modes])

    @property
    def decays(self) -> np.ndarray:
        return np.array([m.decay for m in self.modes])


@dataclass(frozen=True)
class IrField:
    """Location-dependent surface response plus a fixed scraper response.

    Attributes:
        anchors: ``(s, ModalIR)`` pairs with strictly increasing ``s`` in [0, 1].
        scraper_ir: response of the scraping (or rolling) object.
        eta: weight of the scraper response.
    """

    anchors: tuple
    scraper_ir: ModalIR | None = None
    eta: float = 0.0

    def __post_init__(self):
        anchors = tuple((float(s), ir) for s, ir in self.anchors)
        if not anchors:
            raise ParameterError("an IrField needs at least one anchor")
        pos = np.array([s for s, _ in anchors])
        if np.any(pos < 0) or np.any(pos > 1) or np.any(np.diff(pos) <= 0):
            raise ParameterError("anchor positions must increase strictly within [0, 1]")
        if self.eta < 0:
            raise ParameterError("eta must be non-negative")
        banks = [ir for _, ir in anchors]
        if self.scraper_ir is not None:
            banks.append(self.scraper_ir)
        if any(len(ir) > MAX_MODES for ir in banks):
            raise ParameterError(f"field impulse responses are limited to {MAX_MODES} modes")
        object.__setattr__(self, "anchors", anchors)


def _envelope_gain(decay, sample_rate, window):
    # Bias of a windowed amplitude estimate of a decaying exponential,
    # relative to its value at the frame center.
    n = np.arange(window.size) - 0.5 * (window.size - 1)
    return np.sum(window * np.exp(-decay * n / sample_rate)) / np.sum(window)


def _pick_peaks(mag, freqs, n_modes, min_sep):
    interior = (mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])
    idx = np.nonzero(interior)[0] + 1
    idx = idx[np.argsort(mag[idx])[::-1]]
    logmag = np.log(np.maximum(mag, 1e-300))
    bin_hz = freqs[1] - freqs[0]
    chosen = []
    for i in idx:
        a, b, c = logmag[i - 1], logmag[i], logmag[i + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        f = freqs[i] + shift * bin_hz
        if all(abs(f - g) >= min_sep for g in chosen):
            chosen.append(f)
            if len(chosen) == n_modes:
                break
    return chosen


def extract_modes(waveform, sample_rate, n_modes=MAX_MODES) -> ModalIR:
    """Estimate the strongest decaying-sinusoid modes of a recorded response.

    Frequencies come from the largest local maxima of one long magnitude
    spectrum (parabolic interpolation on log magnitude, at least 20 Hz
    apart). Each mode's decay and initial amplitude come from a straight-line
    fit to its log envelope, tracked by demodulating windowed frames at the
    mode frequency every 256 samples, over the span where the envelope stays
    above 1 % of its peak.

    Args:
        waveform: mono response, at least 4096 samples.
        sample_rate: sampling rate in Hz.
        n_modes: number of modes to keep.

    Returns:
        ModalIR with modes sorted by frequency and ``t0`` equal to the input
        duration.
    """
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1 or x.size < 4096:
        raise ParameterError("waveform must be mono with at least 4096 samples")
    if n_modes < 1:
        raise ParameterError("n_modes must be at least 1")
    if not np.max(np.abs(x)) >= 1e-9:
        raise DegenerateInputError("input is silent")

    # Fading the tail keeps truncation sidelobes of slow modes from
    # outranking weak modes.
    taper = np.ones(x.size)
    n_tail = int(TAIL_TAPER * x.size)
    taper[x.size - n_tail:] = np.hanning(2 * n_tail)[n_tail:]
    nfft = 1 << int(np.ceil(np.log2(x.size)) + 1)
    mag = np.abs(np.fft.rfft(x * taper, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    picks = _pick_peaks(mag, freqs, n_modes, MIN_PEAK_SEPARATION_HZ)

    frame = min(ENVELOPE_FRAME, x.size)
    window = get_window("blackmanharris", frame, fftbins=False)
    starts = np.arange(0, x.size - frame + 1, ENVELOPE_HOP)
    frames = np.lib.stride_tricks.sliding_window_view(x, frame)[starts]
    centers = (starts + 0.5 * (frame - 1)) / sample_rate
    n = np.arange(frame)
    wsum = window.sum()

    modes = []
    for f in picks:
        carrier = window * np.exp(-2j * np.pi * f * n / sample_rate)
        env = 2.0 * np.abs(frames @ carrier) / wsum
        peak = int(np.argmax(env))
        if env[peak] <= 0:
            continue
        above = env >= ENVELOPE_FLOOR * env[peak]
        end = peak
        while end + 1 < env.size and above[end + 1]:
            end += 1
        if end - peak >= 1:
            slope, intercept = np.polyfit(centers[peak:end + 1], np.log(env[peak:end + 1]), 1)
            decay = max(-slope, 0.0)
            amp = np.exp(intercept)
        else:
            decay = 0.0
            amp = env[peak]
        amp /= _envelope_gain(decay, sample_rate, window)
        if amp > 0 and 0 < f < 0.5 * sample_rate:
            modes.append(Mode(float(f), float(amp), float(decay)))
    if not modes:
        raise DegenerateInputError("no spectral peaks found")
    return ModalIR(tuple(modes), x.size / sample_rate)


def morph_modes(a: ModalIR, b: ModalIR, w) -> ModalIR:
    """Geometric interpolation of rank-paired modes, ``w`` in [0, 1].

    Modes are paired by ascending frequency; the longer bank is truncated to
    the shorter one. Frequency, amplitude and decay (floored at 1e-6) are
    interpolated in the log domain, so ``w = 0.5`` gives geometric means.
    """
    if not 0.0 <= w <= 1.0:
        raise ParameterError(f"morph weight must lie in [0, 1], got {w!r}")
    k = min(len(a), len(b))
    if w == 0.0:
        return ModalIR(a.modes[:k], a.t0)
    if w == 1.0:
        return ModalIR(b.modes[:k], b.t0)
    fa, fb = a.frequencies[:k], b.frequencies[:k]
    aa, ab = a.amplitudes[:k], b.amplitudes[:k]
    da = np.maximum(a.decays[:k], DECAY_FLOOR)
    db = np.maximum(b.decays[:k], DECAY_FLOOR)
    u = 1.0 - w
    return ModalIR.from_arrays(fa ** u * fb ** w, aa ** u * ab ** w, da ** u * db ** w,
                               max(a.t0, b.t0))


def ir_at_position(field: IrField, s) -> ModalIR:
    """Surface mode bank at normalized path position ``s``."""
    anchors = field.anchors
    if s <= anchors[0][0] or len(anchors) == 1:
        return anchors[0][1]
    if s >= anchors[-1][0]:
        return anchors[-1][1]
    pos = [p for p, _ in anchors]
    i = int(np.searchsorted(pos, s, side="right")) - 1
    s0, ir0 = anchors[i]
    s1, ir1 = anchors[i + 1]
    return morph_modes(ir0, ir1, (s - s0) / (s1 - s0))


def phase_cycles(frequency, steps, sample_rate):
    """Fractional part of ``frequency * steps / sample_rate``, without drift.

    The frequency is split into a single-precision head, whose product with
    an integer step count below 2**24 is exact and can be reduced exactly by
    ``fmod``, plus a tiny tail. This keeps the phase accurate to about one
    ulp however many cycles have elapsed.
    """
    f = np.asarray(frequency, dtype=np.float64)
    n = np.asarray(steps, dtype=np.float64)
    head = f.astype(np.float32).astype(np.float64)
    tail = f - head
    whole = np.fmod(head * n, sample_rate)
    return np.mod((whole + tail * n) / sample_rate, 1.0)


def modal_sum(frequencies, amplitudes, decays, length, sample_rate) -> np.ndarray:
    """Sample ``sum_i a_i * exp(-d_i * tau) * sin(2 pi f_i tau)`` on ``length`` steps."""
    steps = np.arange(int(length), dtype=np.float64)
    tau = steps / sample_rate
    out = np.zeros(steps.size)
    for fi, ai, di in zip(frequencies, amplitudes, decays):
        if ai == 0:
            continue
        # Whole cycles removed first keeps quadrant samples exact.
        out += ai * np.exp(-di * tau) * sindg(360.0 * phase_cycles(fi, steps, sample_rate))
    return out


def synthesize_ir(ir: ModalIR, sample_rate, length=None) -> np.ndarray:
    """Sum of decaying sinusoids, ``round(t0 * sample_rate)`` samples long.

    Modes at or above Nyquist are dropped with a warning.
    """
    if len(ir) == 0:
        raise DegenerateInputError("cannot synthesize an empty mode bank")
    n = int(round(ir.t0 * sample_rate)) if length is None else int(length)
    f, amp, d = ir.frequencies, ir.amplitudes, ir.decays
    keep = f < 0.5 * sample_rate
    if not np.all(keep):
        warnings.warn(f"dropped {int(np.sum(~keep))} mode(s) at or above Nyquist",
                      RuntimeWarning, stacklevel=2)
    return modal_sum(f[keep], amp[keep], d[keep], n, sample_rate)


def mix_ir(surface: ModalIR, scraper: ModalIR | None, eta) -> ModalIR:
    """Union of surface modes and scraper modes scaled by ``eta``.

    Only the :data:`MAX_MIXED_MODES` largest-amplitude modes survive.
    """
    if eta < 0:
        raise ParameterError("eta must be non-negative")
    if scraper is None or eta == 0:
        return surface
    modes = list(surface.modes) + [Mode(m.frequency, eta * m.amplitude, m.decay)
                                   for m in scraper.modes]
    if len(modes) > MAX_MIXED_MODES:
        modes = sorted(modes, key=lambda m: m.amplitude, reverse=True)[:MAX_MIXED_MODES]
    return ModalIR(tuple(modes), max(surface.t0, scraper.t0))


def save_mir(ir: ModalIR, path) -> None:
    """Write a ``.mir`` text file: a ``MIR1 t0=...`` line, then one mode per line."""
    lines = [f"MIR1 t0={ir.t0!r}"]
    lines += [f"{m.frequency!r} {m.amplitude!r} {m.decay!r}" for m in ir.modes]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mir(path) -> ModalIR:
    text = Path(path).read_text()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "MIR1" or not head[1].startswith("t0="):
        raise FormatError(f"{path}: expected 'MIR1 t0=<seconds>' header")
    try:
        t0 = float(head[1][3:])
        rows = [tuple(float(v) for v in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if any(len(r) != 3 for r in rows):
        raise FormatError(f"{path}: each mode line needs 'frequency amplitude decay'")
    if len(rows) > MAX_MODES:
        raise FormatError(f"{path}: {len(rows)} modes exceed the limit of {MAX_MODES}")
    try:
        return ModalIR(tuple(Mode(*r) for r in rows), t0)
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from exc

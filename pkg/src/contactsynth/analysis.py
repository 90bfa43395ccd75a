"""Comparison utilities for rendered sounds and listener responses."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, FormatError, ParameterError


def confusion_similarity(recorded, synth) -> float:
    """``1 - ||C_rec - C_syn||_F / ||C_rec||_F`` for two confusion matrices."""
    a = np.asarray(recorded, dtype=np.float64)
    b = np.asarray(synth, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    if not np.any(a):
        raise DegenerateInputError("reference confusion matrix is all zeros")
    return float(1.0 - _scaled_norm(a - b) / _scaled_norm(a))


def _scaled_norm(m):
    # Frobenius norm that does not underflow for tiny entries.
    peak = np.max(np.abs(m))
    return peak * np.linalg.norm(m / peak) if peak > 0 else 0.0


def validate_confusion(matrix, atol=1e-9) -> np.ndarray:
    """Check a square, non-negative, row-stochastic matrix and return it."""
    c = np.asarray(matrix, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ParameterError(f"confusion matrix must be square, got shape {c.shape}")
    if np.any(c < 0):
        raise ParameterError("confusion matrix entries must be non-negative")
    if not np.allclose(c.sum(axis=1), 1.0, rtol=0, atol=atol):
        raise ParameterError("confusion matrix rows must sum to 1")
    return c


def load_confusion_csv(path) -> np.ndarray:
    try:
        c = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return validate_confusion(c)


def spectral_centroid(samples, sample_rate) -> float:
    """Magnitude-weighted mean frequency of the whole signal, in Hz."""
    x = np.asarray(samples, dtype=np.float64)
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, 1.0 / sample_rate)
    total = mag.sum()
    if total == 0:
        return 0.0
    return float(np.sum(freqs * mag) / total)

"""Surface depth maps: generation, SDM1 file I/O and periodic sampling.

Heights are in meters on a regular grid whose row index is ``y`` and column
index is ``x``. All coordinates wrap periodically, so any point on the plane
maps onto the stored patch.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, TruncationError

#: Horizontal resolution of the confocal scans the model was tuned on.
DEFAULT_SPACING = 5.6e-6

SDM_MAGIC = b"SDM1"
_SDM_HEADER = struct.Struct("<4sIIdd")

# Node snapping tolerance in grid units; keeps sampling at i*dx exact.
_SNAP = 1e-9


@dataclass(frozen=True)
class SurfaceDepthMap:
    """Immutable 2D height grid.

    Attributes:
        heights: array of shape ``(ny, nx)`` in meters.
        dx: grid spacing along x (m per sample).
        dy: grid spacing along y (m per sample).
    """

    heights: np.ndarray
    dx: float = DEFAULT_SPACING
    dy: float = DEFAULT_SPACING

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64)
        if h.ndim != 2:
            raise ParameterError(f"heights must be 2D, got shape {h.shape}")
        ny, nx = h.shape
        if nx < 4 or ny < 4:
            raise ParameterError(f"grid must be at least 4x4, got {nx}x{ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ParameterError("grid spacing must be positive")
        if not np.all(np.isfinite(h)):
            raise ParameterError("heights must be finite")
        h.flags.writeable = False
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))

    @property
    def nx(self) -> int:
        return self.heights.shape[1]

    @property
    def ny(self) -> int:
        return self.heights.shape[0]

    @property
    def size(self) -> tuple[float, float]:
        """Physical period ``(Lx, Ly)`` of the wrapped patch in meters."""
        return self.nx * self.dx, self.ny * self.dy


def generate_fractal_surface(nx, ny, dx=DEFAULT_SPACING, spectral_exponent=2.0,
                             rms_height=1e-5, seed=0, dy=None) -> SurfaceDepthMap:
    """Periodic random surface with a power-law radial spectrum.

    White Gaussian noise is shaped in the 2D Fourier domain so that power
    falls off as ``1/f**spectral_exponent``, the DC term is removed and the
    result is rescaled to the requested RMS height. Heights are rounded to
    single precision so that they survive an SDM1 round trip bit-exactly.

    Args:
        nx, ny: grid size in samples (>= 4 each).
        dx: grid spacing in meters; ``dy`` defaults to ``dx``.
        spectral_exponent: power-law exponent in [0, 4]; 0 gives white noise.
        rms_height: standard deviation of the heights in meters (> 0).
        seed: seed for :func:`numpy.random.default_rng`.

    Returns:
        SurfaceDepthMap with zero mean and standard deviation ``rms_height``.
    """
    nx, ny = int(nx), int(ny)
    if nx < 4 or ny < 4:
        raise ParameterError(f"grid must be at least 4x4, got {nx}x{ny}")
    if not rms_height > 0:
        raise ParameterError("rms_height must be positive")
    if not 0.0 <= spectral_exponent <= 4.0:
        raise ParameterError("spectral_exponent must lie in [0, 4]")
    dy = dx if dy is None else dy

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((ny, nx))
    spec = np.fft.rfft2(noise)
    fy = np.fft.fftfreq(ny, d=dy)[:, None]
    fx = np.fft.rfftfreq(nx, d=dx)[None, :]
    radial = np.hypot(fx, fy)
    radial[0, 0] = 1.0
    spec *= radial ** (-0.5 * spectral_exponent)
    spec[0, 0] = 0.0
    base = np.fft.irfft2(spec, s=(ny, nx))
    base -= base.mean()
    scale = rms_height / base.std()
    heights = (base * scale).astype(np.float32).astype(np.float64)
    return SurfaceDepthMap(heights, dx, dy)


def save_depth_map(surface: SurfaceDepthMap, path) -> None:
    """Write ``surface`` in the SDM1 format (float32 heights, row-major)."""
    header = _SDM_HEADER.pack(SDM_MAGIC, surface.nx, surface.ny, surface.dx, surface.dy)
    payload = np.ascontiguousarray(surface.heights, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_depth_map(path) -> SurfaceDepthMap:
    """Read an SDM1 file.

    Raises:
        FileNotFoundError: the file does not exist.
        FormatError: bad magic or a header shorter than 28 bytes.
        TruncationError: fewer height values than ``nx * ny``.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != SDM_MAGIC:
        raise FormatError(f"{path}: not an SDM1 file (magic {data[:4]!r})")
    if len(data) < _SDM_HEADER.size:
        raise TruncationError(f"{path}: header truncated")
    _, nx, ny, dx, dy = _SDM_HEADER.unpack_from(data)
    n = nx * ny
    payload = data[_SDM_HEADER.size:]
    if len(payload) < 4 * n:
        raise TruncationError(
            f"{path}: header declares {nx}x{ny} heights, payload holds {len(payload) // 4}")
    heights = np.frombuffer(payload, dtype="<f4", count=n).astype(np.float64)
    try:
        return SurfaceDepthMap(heights.reshape(ny, nx), dx, dy)
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _snap(u):
    r = np.rint(u)
    return np.where(np.abs(u - r) < _SNAP, r, u)


def _bilinear(surface, x, y):
    h = surface.heights
    u = _snap(np.asarray(x, dtype=np.float64) / surface.dx)
    v = _snap(np.asarray(y, dtype=np.float64) / surface.dy)
    i0 = np.floor(u)
    j0 = np.floor(v)
    fx = u - i0
    fy = v - j0
    i0 = i0.astype(np.int64) % surface.nx
    j0 = j0.astype(np.int64) % surface.ny
    i1 = (i0 + 1) % surface.nx
    j1 = (j0 + 1) % surface.ny
    return ((1.0 - fx) * (1.0 - fy) * h[j0, i0] + fx * (1.0 - fy) * h[j0, i1]
            + (1.0 - fx) * fy * h[j1, i0] + fx * fy * h[j1, i1])


def sample_surface(surface: SurfaceDepthMap, x, y):
    """Height and derivatives of the bilinearly interpolated surface.

    ``x`` and ``y`` may be scalars or arrays of equal shape (meters). First
    derivatives use central differences with step ``dx`` (resp. ``dy``),
    second derivatives the 3-point stencil, all in SI units.

    Returns:
        Tuple ``(z, dz_dx, dz_dy, d2z_dx2, d2z_dy2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx, dy = surface.dx, surface.dy
    z = _bilinear(surface, x, y)
    zxp = _bilinear(surface, x + dx, y)
    zxm = _bilinear(surface, x - dx, y)
    zyp = _bilinear(surface, x, y + dy)
    zym = _bilinear(surface, x, y - dy)
    dz_dx = (zxp - zxm) / (2.0 * dx)
    dz_dy = (zyp - zym) / (2.0 * dy)
    d2z_dx2 = (zxp - 2.0 * z + zxm) / (dx * dx)
    d2z_dy2 = (zyp - 2.0 * z + zym) / (dy * dy)
    return z, dz_dx, dz_dy, d2z_dx2, d2z_dy2

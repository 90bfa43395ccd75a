"""Constrained scraper trajectory S derived from the surface and normal force.

The raw surface curvature seen along the path is soft-clipped by a tanh whose
limit depends on the normal force, smoothed with a Gaussian moving average
whose width follows the same limit, and integrated back along the path to
recover the slopes and the height of the contact point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d, uniform_filter1d

from .errors import ParameterError
from .surface import sample_surface

#: Audio rate at which the smoothing widths below are specified.
REFERENCE_RATE = 44100
#: Trajectory-average Gaussian half-window, in samples at REFERENCE_RATE.
MEAN_HALF_WINDOW = 5
#: Moving-mean window used to detrend integrated slopes and heights.
DETREND_WINDOW = 1024

DEFAULT_ZETA = 0.95
DEFAULT_ALPHA_MAX = 0.05
DEFAULT_ALPHA_MIN = 0.01
# Half-window per unit alpha, so that the mid-range alpha gives MEAN_HALF_WINDOW.
DEFAULT_SMOOTHING_GAIN = MEAN_HALF_WINDOW / (0.5 * (DEFAULT_ALPHA_MAX + DEFAULT_ALPHA_MIN))

_BOUNDS_RTOL = 1e-9


@dataclass(frozen=True)
class NonlinearityParams:
    """Shape of the force-dependent curvature limit.

    Attributes:
        zeta: exponent mapping normalized force to the blend weight.
        alpha_max: tanh scale at minimal normal force (loosest tracking).
        alpha_min: tanh scale at maximal normal force.
        smoothing_gain: Gaussian half-window in samples (at 44.1 kHz) per
            unit alpha; 0 disables smoothing.
    """

    zeta: float = DEFAULT_ZETA
    alpha_max: float = DEFAULT_ALPHA_MAX
    alpha_min: float = DEFAULT_ALPHA_MIN
    smoothing_gain: float = DEFAULT_SMOOTHING_GAIN

    def __post_init__(self):
        if not 0 < self.alpha_min <= self.alpha_max:
            raise ParameterError("need 0 < alpha_min <= alpha_max")
        if not self.zeta > 0:
            raise ParameterError("zeta must be positive")
        if self.smoothing_gain < 0:
            raise ParameterError("smoothing_gain must be non-negative")


@dataclass(frozen=True)
class ContactPathSignals:
    """Constrained contact trajectory sampled in time.

    ``S`` is in meters, slopes are dimensionless and curvatures in 1/m.
    """

    sample_rate: float
    S: np.ndarray
    dSdx: np.ndarray
    dSdy: np.ndarray
    d2Sdx2: np.ndarray
    d2Sdy2: np.ndarray
    alpha_x: np.ndarray
    alpha_y: np.ndarray

    def __post_init__(self):
        n = self.S.shape
        for name in ("dSdx", "dSdy", "d2Sdx2", "d2Sdy2", "alpha_x", "alpha_y"):
            if getattr(self, name).shape != n:
                raise ParameterError("contact path series must share one length")

    def __len__(self):
        return self.S.size


def alpha_of_normal_force(N, n_min, n_max, params: NonlinearityParams = NonlinearityParams()):
    """Curvature-limit scale for normal force ``N`` (scalar or array).

    Falls from ``alpha_max`` at ``n_min`` to ``alpha_min`` at ``n_max``. With
    ``n_min == n_max`` (constant force) the result is ``alpha_max``.
    """
    N = np.asarray(N, dtype=np.float64)
    if n_max < n_min:
        raise ParameterError("need n_min <= n_max")
    if n_max == n_min:
        return np.full(N.shape, params.alpha_max)[()]
    lo = n_min - _BOUNDS_RTOL * abs(n_min)
    hi = n_max + _BOUNDS_RTOL * abs(n_max)
    if np.any(N < lo) or np.any(N > hi):
        raise ParameterError(f"normal force outside [{n_min!r}, {n_max!r}]")
    frac = np.clip((N - n_min) / (n_max - n_min), 0.0, 1.0)
    nu = frac ** params.zeta
    return ((1.0 - nu) * params.alpha_max + nu * params.alpha_min)[()]


def constrain_curvature(c, alpha):
    """Soft-clip curvature ``c`` to the open interval (-1/alpha, 1/alpha)."""
    c = np.asarray(c, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ParameterError("alpha must be positive")
    out = np.tanh(alpha * c) / alpha
    # tanh rounds to exactly 1 far out; keep the limit open.
    limit = np.nextafter(1.0 / alpha, 0.0)
    return np.clip(out, -limit, limit)[()]


def gaussian_kernel(half_window: int) -> np.ndarray:
    """Unit-sum Gaussian with std ``half_window / 2`` on ``+-2 * half_window``."""
    if half_window <= 0:
        return np.ones(1)
    k = np.arange(-2 * half_window, 2 * half_window + 1, dtype=np.float64)
    sigma = 0.5 * half_window
    w = np.exp(-0.5 * (k / sigma) ** 2)
    return w / w.sum()


def gaussian_smooth(series, half_window):
    """Gaussian moving average with reflected edges.

    ``half_window`` is either an integer or an integer array with one entry
    per sample, in which case each output sample uses its own kernel.
    """
    x = np.asarray(series, dtype=np.float64)
    hw = np.asarray(half_window)
    if np.any(hw < 0):
        raise ParameterError("half_window must be non-negative")
    if hw.ndim == 0:
        hw = int(hw)
        if hw == 0:
            return x.copy()
        return correlate1d(x, gaussian_kernel(hw), mode="reflect")
    hw = hw.astype(np.int64)
    if hw.shape != x.shape:
        raise ParameterError("per-sample half_window must match the series length")
    out = x.copy()
    for h in np.unique(hw):
        if h == 0:
            continue
        mask = hw == h
        out[mask] = correlate1d(x, gaussian_kernel(int(h)), mode="reflect")[mask]
    return out


def _detrend(series):
    if series.size == 0:
        return series
    return series - uniform_filter1d(series, DETREND_WINDOW, mode="reflect")


def _path_integral(rate, step):
    return _detrend(np.cumsum(rate * step))


def build_contact_path(surface, traj, bounds, params: NonlinearityParams = NonlinearityParams(),
                       nonlinearity=True, smoothing=True) -> ContactPathSignals:
    """Constrained trajectory of the contact point along ``traj``.

    Args:
        surface: the scraped SurfaceDepthMap.
        traj: MotionTrajectory whose normal force lies within ``bounds``.
        bounds: ``(N_min, N_max)`` used to normalize the normal force.
        params: nonlinearity and smoothing parameters.
        nonlinearity: apply the tanh curvature limit.
        smoothing: apply the force-dependent Gaussian moving average.

    Returns:
        ContactPathSignals sampled at ``traj.sample_rate``.
    """
    _, _, _, zxx, zyy = sample_surface(surface, traj.x, traj.y)
    alpha = np.broadcast_to(
        alpha_of_normal_force(traj.normal_force, bounds[0], bounds[1], params), zxx.shape)
    if nonlinearity:
        cxx = constrain_curvature(zxx, alpha)
        cyy = constrain_curvature(zyy, alpha)
    else:
        cxx, cyy = zxx, zyy
    if smoothing and params.smoothing_gain > 0:
        scale = params.smoothing_gain * traj.sample_rate / REFERENCE_RATE
        hw = np.rint(scale * alpha).astype(np.int64)
        cxx = gaussian_smooth(cxx, hw)
        cyy = gaussian_smooth(cyy, hw)

    step_x = np.diff(traj.x, prepend=traj.x[:1])
    step_y = np.diff(traj.y, prepend=traj.y[:1])
    dSdx = _path_integral(cxx, step_x)
    dSdy = _path_integral(cyy, step_y)
    S = _detrend(np.cumsum(dSdx * step_x + dSdy * step_y))
    alpha = np.array(alpha)
    return ContactPathSignals(traj.sample_rate, S, dSdx, dSdy, np.asarray(cxx),
                              np.asarray(cyy), alpha, alpha.copy())

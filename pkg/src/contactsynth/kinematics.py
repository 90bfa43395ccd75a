"""Macroscopic motion: scraping paths, rolling rotation and normal force N(t)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (ContactLossError, DegenerateMotionError, FormatError,
                     ParameterError, SingularityError)

DEFAULT_SAMPLE_RATE = 44100
GRAVITY = 9.81

# Torso lies towards -x; the normal force falls off along +x.
DEFAULT_TORSO_AXIS = (1.0, 0.0)

# 1 - mu*tan(theta) below this counts as the pole.
_POLE_TOL = 1e-12


def _frozen_array(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MotionTrajectory:
    """Sampled contact-point motion.

    Attributes:
        sample_rate: control rate in Hz (normally the audio rate).
        x, y: position series in meters.
        vx, vy: velocity series in m/s.
        normal_force: macroscopic normal force N(t) in newtons.
    """

    sample_rate: float
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    normal_force: np.ndarray

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        arrays = {}
        for name in ("x", "y", "vx", "vy", "normal_force"):
            arr = _frozen_array(getattr(self, name))
            if arr.ndim != 1:
                raise ParameterError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} must be finite")
            arrays[name] = arr
        n = {a.size for a in arrays.values()}
        if len(n) != 1:
            raise ParameterError("all trajectory series must have the same length")
        if np.any(arrays["normal_force"] <= 0):
            raise ContactLossError("normal force must stay positive along the trajectory")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.x.size

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def time(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    def with_normal_force(self, normal_force) -> "MotionTrajectory":
        return replace(self, normal_force=np.broadcast_to(
            np.asarray(normal_force, dtype=np.float64), self.x.shape))


@dataclass(frozen=True)
class ShmParams:
    """Hand-held cylinder in simple harmonic back-and-forth motion.

    Attributes:
        m: scraper mass (kg).
        g: gravitational acceleration (m/s^2).
        omega: angular frequency of the motion (rad/s).
        L: motion amplitude (m).
        theta: cylinder angle from horizontal (rad), in [0, pi/2).
        mu: friction coefficient.
    """

    m: float = 0.1
    g: float = GRAVITY
    omega: float = 2.0 * math.pi * 1.5
    L: float = 0.05
    theta: float = 0.3
    mu: float = 0.3

    def __post_init__(self):
        if not self.m > 0:
            raise ParameterError("mass must be positive")
        if self.omega < 0 or self.L < 0:
            raise ParameterError("omega and L must be non-negative")
        if not 0.0 <= self.theta < math.pi / 2:
            raise ParameterError("theta must lie in [0, pi/2)")
        if 1.0 - self.mu * math.tan(self.theta) <= _POLE_TOL:
            raise SingularityError(
                f"mu*tan(theta) = {self.mu * math.tan(self.theta)!r} reaches the pole at 1")


@dataclass(frozen=True)
class RollMotion:
    """Angular motion of an eccentric ball.

    ``theta`` here is the angular displacement of the ball, unrelated to
    :attr:`ShmParams.theta`.
    """

    sample_rate: float
    R: float
    r: float
    theta: np.ndarray
    omega: np.ndarray
    m: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.r < self.R:
            raise ParameterError("need 0 <= r < R")
        if not self.m > 0:
            raise ParameterError("ball mass must be positive")
        theta = _frozen_array(self.theta)
        omega = _frozen_array(self.omega)
        if theta.shape != omega.shape:
            raise ParameterError("theta and omega must have the same length")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)

    def __len__(self):
        return self.theta.size


class MotionKind(str, enum.Enum):
    BACK_AND_FORTH = "back_and_forth"
    CIRCULAR = "circular"
    SINGLE_LINE_SHORT = "single_line_short"
    SINGLE_LINE_LONG = "single_line_long"
    FOUR_SCRAPES_LINE = "four_scrapes_line"


def normal_force_bounds(p: ShmParams) -> tuple[float, float]:
    """Normal force at the near (max) and far (min) ends of an SHM stroke.

    Returns:
        ``(N_min, N_max)`` in newtons.

    Raises:
        SingularityError: ``mu * tan(theta)`` reaches 1.
        ContactLossError: ``N_min <= 0``.
    """
    tan_t = math.tan(p.theta)
    denom = 1.0 - p.mu * tan_t
    if denom <= _POLE_TOL:
        raise SingularityError("mu*tan(theta) reaches the pole at 1")
    weight = p.m * p.g
    swing = p.omega ** 2 * p.m * p.L * tan_t
    n_max = (weight + swing) / denom
    n_min = (weight - swing) / denom
    if n_min <= 0:
        raise ContactLossError(f"N_min = {n_min:.6g} N: scraper would lose contact")
    return n_min, n_max


def normal_force_profile(traj: MotionTrajectory, bounds, axis=DEFAULT_TORSO_AXIS):
    """Fill N(t) by interpolating between the bounds along the torso axis.

    ``axis`` points away from the torso; the closest point along it gets
    ``N_max`` and the farthest ``N_min``.
    """
    n_min, n_max = bounds
    if n_min > n_max:
        raise ParameterError("bounds must be ordered (N_min, N_max)")
    ax = np.asarray(axis, dtype=np.float64)
    ax = ax / np.linalg.norm(ax)
    d = traj.x * ax[0] + traj.y * ax[1]
    d_lo, d_hi = d.min(), d.max()
    if not d_hi > d_lo:
        raise DegenerateMotionError("trajectory has zero extent along the torso axis")
    frac = (d - d_lo) / (d_hi - d_lo)
    return traj.with_normal_force(n_max + (n_min - n_max) * frac)


def _raised_cosine_strokes(t, duration, extent, strokes):
    stroke_time = duration / strokes
    k = np.minimum(np.floor(t / stroke_time), strokes - 1)
    tau = (t - k * stroke_time) / stroke_time
    phase = 2.0 * np.pi * tau
    x = k * extent + extent * (tau - np.sin(phase) / (2.0 * np.pi))
    vx = (extent / stroke_time) * (1.0 - np.cos(phase))
    return x, vx


def make_scrape_motion(kind, speed_scale=1.0, duration=2.0,
                       sample_rate=DEFAULT_SAMPLE_RATE, shm=None, extent=0.1,
                       axis=DEFAULT_TORSO_AXIS) -> MotionTrajectory:
    """Ideal analytic scraping trajectory with its normal-force profile.

    Back-and-forth is simple harmonic along x with peak-to-peak ``extent`` at
    ``shm.omega * speed_scale``. The circle has circumference ``extent`` and
    is traversed at that same angular rate. Line motions are rest-to-rest
    raised-cosine strokes along x spanning the whole duration (one stroke of
    length ``extent``, or four consecutive ones for ``FOUR_SCRAPES_LINE``);
    ``speed_scale`` does not apply to them.

    The normal-force bounds come from :func:`normal_force_bounds` evaluated
    with the effective angular frequency.
    """
    try:
        kind = MotionKind(kind)
    except ValueError:
        raise ParameterError(f"unknown motion kind {kind!r}") from None
    if not (duration > 0 and sample_rate > 0 and extent > 0 and speed_scale > 0):
        raise ParameterError("duration, sample_rate, extent and speed_scale must be positive")
    shm = ShmParams() if shm is None else shm
    omega = shm.omega * speed_scale
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    zeros = np.zeros(n)

    if kind is MotionKind.BACK_AND_FORTH:
        amp = 0.5 * extent
        x, y = amp * np.sin(omega * t), zeros
        vx, vy = amp * omega * np.cos(omega * t), zeros
    elif kind is MotionKind.CIRCULAR:
        radius = extent / (2.0 * np.pi)
        x, y = radius * np.cos(omega * t), radius * np.sin(omega * t)
        vx, vy = -radius * omega * np.sin(omega * t), radius * omega * np.cos(omega * t)
    else:
        strokes = 4 if kind is MotionKind.FOUR_SCRAPES_LINE else 1
        x, vx = _raised_cosine_strokes(t, n / sample_rate, extent, strokes)
        y, vy = zeros, zeros

    bounds = normal_force_bounds(replace(shm, omega=omega))
    traj = MotionTrajectory(sample_rate, x, y, vx, vy, np.full(n, bounds[1]))
    return normal_force_profile(traj, bounds, axis)


def make_roll_motion(R, r, m=0.05, surface_incline=0.0, initial_omega=10.0,
                     duration=2.0, sample_rate=DEFAULT_SAMPLE_RATE, g=GRAVITY) -> RollMotion:
    """Rolling on an incline under constant angular acceleration.

    A positive incline rises in the direction of positive rotation, so a ball
    started with ``initial_omega > 0`` rolls up and decelerates.
    """
    if not sample_rate > 0:
        raise ParameterError("sample_rate must be positive")
    if initial_omega == 0 and surface_incline == 0:
        raise DegenerateMotionError("a ball at rest on a level surface makes no sound")
    accel = -g * math.sin(surface_incline) / R
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    theta = initial_omega * t + 0.5 * accel * t * t
    omega = initial_omega + accel * t
    return RollMotion(sample_rate, R, r, theta, omega, m)


def rolling_normal_profile(roll: RollMotion, g=GRAVITY) -> np.ndarray:
    """Support force of an eccentric ball, clamped to keep 5 % of its weight.

    Largest when the center of mass sits below the geometric center
    (``theta = 0``) and smallest at the top.
    """
    weight = roll.m * g
    n = roll.m * (g + roll.r * roll.omega ** 2 * np.cos(roll.theta))
    return np.maximum(n, 0.05 * weight)


def load_trajectory(path, sample_rate=DEFAULT_SAMPLE_RATE, normal_force=1.0) -> MotionTrajectory:
    """Read a ``t,x,y`` text file and resample it to ``sample_rate``.

    Lines starting with ``#`` are ignored. Positions are linearly
    interpolated, velocities taken by central differences and N(t) set to
    the constant ``normal_force``.
    """
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.shape[1] != 3 or data.shape[0] < 2:
        raise FormatError(f"{path}: expected at least two 't,x,y' rows")
    t, x, y = data.T
    if np.any(np.diff(t) <= 0):
        raise FormatError(f"{path}: time column must be strictly increasing")
    n = int(math.floor((t[-1] - t[0]) * sample_rate + 1e-9)) + 1
    tq = t[0] + np.arange(n) / sample_rate
    xq = np.interp(tq, t, x)
    yq = np.interp(tq, t, y)
    dt = 1.0 / sample_rate
    vx = np.gradient(xq, dt) if n > 1 else np.zeros(1)
    vy = np.gradient(yq, dt) if n > 1 else np.zeros(1)
    return MotionTrajectory(sample_rate, xq, yq, vx, vy, np.full(n, float(normal_force)))


def save_trajectory(traj: MotionTrajectory, path) -> None:
    """Write positions as ``t,x,y`` rows with a ``#`` header."""
    rows = np.column_stack([traj.time, traj.x, traj.y])
    np.savetxt(path, rows, delimiter=",", fmt="%.17g", header="t,x,y")


def path_position(traj: MotionTrajectory, axis=DEFAULT_TORSO_AXIS) -> np.ndarray:
    """Normalized location s(t) in [0, 1] along the torso axis.

    Used to index location-dependent impulse responses; a trajectory with no
    extent along the axis maps to s = 0 everywhere.
    """
    ax = np.asarray(axis, dtype=np.float64)
    ax = ax / np.linalg.norm(ax)
    d = traj.x * ax[0] + traj.y * ax[1]
    span = d.max() - d.min()
    if span <= 0:
        return np.zeros_like(d)
    return (d - d.min()) / span

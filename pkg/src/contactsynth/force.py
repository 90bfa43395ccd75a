"""Audio-rate contact force for scraping and rolling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .kinematics import MotionTrajectory, RollMotion, rolling_normal_profile

DEFAULT_BETA1 = 0.05
DEFAULT_BETA2 = 1.0
DEFAULT_DISSIPATION = 0.1


@dataclass(frozen=True)
class ScrapeParams:
    """Scraper mass ``m_p`` (kg) and horizontal-force gain/exponent."""

    m_p: float = 0.1
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2

    def __post_init__(self):
        if not self.m_p > 0:
            raise ParameterError("m_p must be positive")
        if self.beta1 < 0 or not self.beta2 > 0:
            raise ParameterError("need beta1 >= 0 and beta2 > 0")


@dataclass(frozen=True)
class RollParams:
    """Rolling contact stiffness and dissipation.

    Attributes:
        k: equivalent spring constant (N/m^1.5).
        dissipation: nonlinear damping constant lambda.
        static_offset: penetration kept after mean removal (m); ``None``
            means the ball's eccentricity ``r``.
    """

    k: float = 1e6
    dissipation: float = DEFAULT_DISSIPATION
    static_offset: float | None = None

    def __post_init__(self):
        if not self.k > 0:
            raise ParameterError("spring constant must be positive")
        if self.dissipation < 0:
            raise ParameterError("dissipation must be non-negative")


@dataclass(frozen=True)
class ForceSignal:
    sample_rate: float
    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if not np.all(np.isfinite(f)):
            raise ParameterError("force signal must be finite")
        object.__setattr__(self, "f", f)

    def __len__(self):
        return self.f.size

    @property
    def duration(self) -> float:
        return self.f.size / self.sample_rate


def _check_lengths(path, traj):
    if len(path) != len(traj):
        raise ParameterError(
            f"contact path has {len(path)} samples but trajectory has {len(traj)}")
    if path.sample_rate != traj.sample_rate:
        raise ParameterError("contact path and trajectory sample rates differ")


def vertical_force(path, traj: MotionTrajectory, m_p):
    """Force from pressing the scraper along the curved trajectory."""
    _check_lengths(path, traj)
    return m_p * (path.d2Sdx2 * traj.vx ** 2 + path.d2Sdy2 * traj.vy ** 2)


def horizontal_force(path, traj: MotionTrajectory, p: ScrapeParams):
    """Non-negative force from collisions with surface asperities."""
    _check_lengths(path, traj)
    return p.beta1 * np.abs(traj.vx * path.dSdx + traj.vy * path.dSdy) ** p.beta2


def total_scrape_force(path, traj: MotionTrajectory, p: ScrapeParams = ScrapeParams()) -> ForceSignal:
    return ForceSignal(traj.sample_rate,
                       vertical_force(path, traj, p.m_p) + horizontal_force(path, traj, p))


def rolling_com_position(theta, R, r):
    """Horizontal position of the center of mass of an eccentric ball."""
    return R * np.asarray(theta) - r * np.sin(theta)


def roll_trajectory(roll: RollMotion, g=9.81) -> MotionTrajectory:
    """Contact-point trajectory of a rolling ball, with its periodic N(t)."""
    x = rolling_com_position(roll.theta, roll.R, roll.r)
    vx = (roll.R - roll.r * np.cos(roll.theta)) * roll.omega
    zeros = np.zeros_like(x)
    return MotionTrajectory(roll.sample_rate, x, zeros, vx, zeros,
                            rolling_normal_profile(roll, g))


def _com_velocity(x, sample_rate):
    if x.size < 2:
        return np.zeros_like(x)
    return np.gradient(x, 1.0 / sample_rate)


def penetration(path, roll: RollMotion, static_offset=None):
    """Penetration depth and its rate for a ball rolling along ``path``.

    The depth is taken relative to its mean, shifted by ``static_offset``
    (default ``roll.r``) and clamped at zero; the rate is zero wherever
    contact is lost.

    Returns:
        Tuple ``(rho, rho_dot)``.
    """
    if len(path) != len(roll):
        raise ParameterError("contact path and roll motion lengths differ")
    offset = roll.r if static_offset is None else static_offset
    R, r = roll.R, roll.r
    x = rolling_com_position(roll.theta, R, r)
    x_dot = _com_velocity(x, roll.sample_rate)
    rho_raw = R - r * np.cos(x / R) + path.S
    rho = np.maximum(rho_raw - rho_raw.mean() + offset, 0.0)
    rho_dot = (r / R) * x_dot * np.sin(x / R) + x_dot * path.dSdx
    rho_dot = np.where(rho > 0, rho_dot, 0.0)
    return rho, rho_dot


def rolling_force(rho, rho_dot, p: RollParams = RollParams()):
    """Hertz-like elastic force with nonlinear dissipation."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise ParameterError("penetration depth must be non-negative")
    r32 = rho ** 1.5
    return p.k * r32 + p.dissipation * r32 * np.asarray(rho_dot)


def total_rolling_force(path, roll: RollMotion, sp: ScrapeParams = ScrapeParams(),
                        rp: RollParams = RollParams()) -> ForceSignal:
    """Scrape-like asperity and curvature terms plus the rolling force."""
    rho, rho_dot = penetration(path, roll, rp.static_offset)
    x = rolling_com_position(roll.theta, roll.R, roll.r)
    v = _com_velocity(x, roll.sample_rate)
    asperity = sp.beta1 * np.abs(path.dSdx * v) ** sp.beta2
    curvature = sp.m_p * path.d2Sdx2 * v ** 2
    return ForceSignal(roll.sample_rate, asperity + curvature + rolling_force(rho, rho_dot, rp))

"""Single-ellipse fire spread math.

Fire from a point ignition under one wind/soil-wetness condition grows as an
ellipse elongated along the wind. Spread speed peaks at ``u_max`` in the
downwind direction, is damped by low wind and wet soil, and the back-spread
speed is a fixed fraction of the head speed. All speeds are m/s; geometry is
km; wind angles are radians from the +x axis.

The scalar entry points (``speeds``, ``ellipse_from_ignition``) build one
ellipse; the field functions (``wind_factor``, ``moisture_factor``,
``spread_speed``, ``length_breadth_ratio``) and ``branch_endpoints`` accept
numpy arrays so callers can evaluate whole frontiers at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

M_PER_KM = 1000.0


@dataclass(frozen=True)
class SpreadParams:
    """Tuning constants of the spread model (defaults are the standard ones).

    u_max_ms         : maximum head spread speed (m/s)
    windless_gain    : wind-factor floor at zero wind
    wetness_cutoff   : volumetric soil-water fraction at which spread stops
    backspread_ratio : upwind speed as a fraction of head speed
    wind_sq_scale    : (m/s)^2 scale of the wind-factor exponential
    elongation_gain  : asymptotic extra length-to-breadth ratio at high wind
    elongation_rate  : per-(m/s) rate of the elongation exponential
    """

    u_max_ms: float = 0.13
    windless_gain: float = 0.1
    wetness_cutoff: float = 0.35
    backspread_ratio: float = 0.2
    wind_sq_scale: float = 2500.0
    elongation_gain: float = 10.0
    elongation_rate: float = 0.017


DEFAULT_PARAMS = SpreadParams()


@dataclass(frozen=True)
class WindSample:
    """Wind speed (m/s, >= 0) and direction angle from the +x axis, (-pi, pi]."""

    speed_ms: float
    theta_rad: float

    def __post_init__(self) -> None:
        if self.speed_ms < 0:
            raise ValueError(f"wind speed must be >= 0, got {self.speed_ms}")
        if not -math.pi < self.theta_rad <= math.pi:
            raise ValueError(f"theta_rad must be in (-pi, pi], got {self.theta_rad}")

    @classmethod
    def from_uv(cls, u10: float, v10: float) -> "WindSample":
        """Build from eastward/northward components; calm wind gets theta = 0."""
        speed = math.hypot(u10, v10)
        if speed == 0.0:
            return cls(0.0, 0.0)
        theta = math.atan2(v10, u10)
        if theta <= -math.pi:
            theta = math.pi
        return cls(speed, theta)


@dataclass(frozen=True)
class SpreadSpeeds:
    """Head (u_p), back (u_b), and lateral (v) spread speeds in m/s."""

    u_p: float
    u_b: float
    v: float


@dataclass(frozen=True)
class FireEllipse:
    """One burn ellipse grown from ``ignition_xy`` over a single timestep.

    The ignition point sits on the major axis: the downwind vertex is
    ``u_p * dt`` ahead of it and the upwind vertex ``u_b * dt`` behind it,
    so the center leads the ignition by ``(u_p - u_b) / 2 * dt``.
    """

    ignition_xy: tuple[float, float]
    center_xy: tuple[float, float]
    semi_major_km: float
    semi_minor_km: float
    theta_rad: float
    t_created: int


def wind_factor(ws_ms, params: SpreadParams = DEFAULT_PARAMS):
    """Wind damping factor in [windless_gain, 1): 1 - (1-g0)*exp(-ws^2/scale).

    Evaluated as g0 + (1-g0)*(-expm1(...)), which hits the g0 floor
    exactly at calm and keeps precision for light winds.
    """
    ws = np.asarray(ws_ms, dtype=float)
    if np.any(ws < 0):
        raise ValueError("wind speed must be >= 0")
    g0 = params.windless_gain
    out = g0 + (1.0 - g0) * -np.expm1(-(ws * ws) / params.wind_sq_scale)
    return float(out) if np.isscalar(ws_ms) else out


def moisture_factor(beta_root, params: SpreadParams = DEFAULT_PARAMS):
    """Soil-wetness damping factor (1 - beta_m)^2, zero at/above the cutoff."""
    beta = np.asarray(beta_root, dtype=float)
    if np.any(beta < 0):
        raise ValueError("soil wetness must be >= 0")
    beta_m = np.minimum(beta / params.wetness_cutoff, 1.0)
    out = (1.0 - beta_m) ** 2
    return float(out) if np.isscalar(beta_root) else out


def spread_speed(ws_ms, beta_root, params: SpreadParams = DEFAULT_PARAMS):
    """Head spread speed u_p = u_max * wind_factor * moisture_factor (m/s)."""
    out = params.u_max_ms * wind_factor(ws_ms, params) * moisture_factor(beta_root, params)
    return float(out) if np.isscalar(ws_ms) and np.isscalar(beta_root) else out


def length_breadth_ratio(ws_ms, params: SpreadParams = DEFAULT_PARAMS):
    """Ellipse length-to-breadth ratio, 1 at calm, approaching 1+gain from below."""
    ws = np.asarray(ws_ms, dtype=float)
    if np.any(ws < 0):
        raise ValueError("wind speed must be >= 0")
    out = 1.0 + params.elongation_gain * (1.0 - np.exp(-params.elongation_rate * ws))
    return float(out) if np.isscalar(ws_ms) else out


def speeds(ws_ms: float, beta_root: float, params: SpreadParams = DEFAULT_PARAMS) -> SpreadSpeeds:
    """All three spread speeds for one wind/wetness condition.

    v follows from the length-to-breadth ratio: L_B = (u_p + u_b) / (2 v).
    """
    u_p = spread_speed(ws_ms, beta_root, params)
    u_b = params.backspread_ratio * u_p
    v = (u_p + u_b) / (2.0 * length_breadth_ratio(ws_ms, params))
    return SpreadSpeeds(u_p=u_p, u_b=u_b, v=v)


def ellipse_from_ignition(
    ignition_xy: tuple[float, float],
    wind: WindSample,
    beta_root: float,
    dt_s: float,
    t: int,
    params: SpreadParams = DEFAULT_PARAMS,
) -> FireEllipse:
    """Grow the ellipse reached after ``dt_s`` seconds from a point ignition."""
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    sp = speeds(wind.speed_ms, beta_root, params)
    dt_km = dt_s / M_PER_KM
    semi_major = (sp.u_p + sp.u_b) * dt_km / 2.0
    semi_minor = sp.v * dt_km
    offset = (sp.u_p - sp.u_b) * dt_km / 2.0
    cos_t, sin_t = math.cos(wind.theta_rad), math.sin(wind.theta_rad)
    x0, y0 = ignition_xy
    return FireEllipse(
        ignition_xy=(x0, y0),
        center_xy=(x0 + offset * cos_t, y0 + offset * sin_t),
        semi_major_km=semi_major,
        semi_minor_km=semi_minor,
        theta_rad=wind.theta_rad,
        t_created=t,
    )


def axis_endpoints(e: FireEllipse) -> np.ndarray:
    """The four axis endpoints as a (4, 2) array.

    Order: downwind vertex, upwind vertex, then the two minor-axis endpoints.
    """
    cos_t, sin_t = math.cos(e.theta_rad), math.sin(e.theta_rad)
    cx, cy = e.center_xy
    a, b = e.semi_major_km, e.semi_minor_km
    return np.array(
        [
            [cx + a * cos_t, cy + a * sin_t],
            [cx - a * cos_t, cy - a * sin_t],
            [cx - b * sin_t, cy + b * cos_t],
            [cx + b * sin_t, cy - b * cos_t],
        ]
    )


def branch_endpoints(
    points: np.ndarray,
    u10: np.ndarray,
    v10: np.ndarray,
    swvl1: np.ndarray,
    dt_s: float,
    params: SpreadParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """Axis endpoints of the ellipse grown at every point, shape (n, 4, 2).

    Vector form of ellipse_from_ignition + axis_endpoints; a zero-speed point
    yields four copies of itself. Calm wind uses theta = 0.
    """
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    pts = np.asarray(points, dtype=float)
    u = np.asarray(u10, dtype=float)
    v = np.asarray(v10, dtype=float)
    ws = np.hypot(u, v)
    theta = np.where(ws > 0, np.arctan2(v, u), 0.0)

    u_p = spread_speed(ws, swvl1, params)
    u_b = params.backspread_ratio * u_p
    v_lat = (u_p + u_b) / (2.0 * length_breadth_ratio(ws, params))

    dt_km = dt_s / M_PER_KM
    a = (u_p + u_b) * dt_km / 2.0
    b = v_lat * dt_km
    offset = (u_p - u_b) * dt_km / 2.0
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cx = pts[:, 0] + offset * cos_t
    cy = pts[:, 1] + offset * sin_t

    out = np.empty((len(pts), 4, 2))
    out[:, 0, 0] = cx + a * cos_t
    out[:, 0, 1] = cy + a * sin_t
    out[:, 1, 0] = cx - a * cos_t
    out[:, 1, 1] = cy - a * sin_t
    out[:, 2, 0] = cx - b * sin_t
    out[:, 2, 1] = cy + b * cos_t
    out[:, 3, 0] = cx + b * sin_t
    out[:, 3, 1] = cy - b * cos_t
    return out

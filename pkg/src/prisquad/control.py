"""Inner control loops: PD position, PID velocity, PI yaw, and the
pure-pursuit tracker that turns a reference trajectory into foot velocity
commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ValidationError, wrap_angle
from .trajectory import TrajectoryCurve


@dataclass(frozen=True)
class PidGains:
    """Gains and saturation limits of one loop (units per loop).

    ``output_filter_tau`` enables an optional first-order low-pass on the
    command; zero (the default) leaves the output unfiltered.
    """

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    output_limit: float = math.inf
    integral_limit: float = math.inf
    output_filter_tau: float = 0.0

    def __post_init__(self) -> None:
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValidationError("gains must be >= 0")
        if self.output_limit <= 0 or self.integral_limit <= 0:
            raise ValidationError("limits must be > 0")
        if self.output_filter_tau < 0:
            raise ValidationError("filter time constant must be >= 0")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    filtered: float = 0.0


def _clamp(value: float, limit: float) -> float:
    return max(-limit, min(limit, value))


def pd_step(gains: PidGains, error: float, prev_error: float, dt: float) -> float:
    """One proportional-derivative update with a backward-difference derivative."""
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    raw = gains.kp * error + gains.kd * (error - prev_error) / dt
    return _clamp(raw, gains.output_limit)


def pid_step(
    gains: PidGains, error: float, state: PidState, dt: float
) -> tuple[float, PidState]:
    """One parallel PID update.

    The integral accumulates error * dt and is clamped to the integral limit
    (anti-windup); the output is clamped to the output limit and, when a
    filter time constant is set, smoothed first-order.  Returns the command
    and the successor state.
    """
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    integral = _clamp(state.integral + error * dt, gains.integral_limit)
    raw = (
        gains.kp * error
        + gains.ki * integral
        + gains.kd * (error - state.prev_error) / dt
    )
    out = _clamp(raw, gains.output_limit)
    if gains.output_filter_tau > 0.0:
        out = state.filtered + dt / (gains.output_filter_tau + dt) * (out - state.filtered)
    return out, PidState(integral=integral, prev_error=error, filtered=out)


def yaw_pi_step(
    gains: PidGains, yaw_error: float, state: PidState, dt: float
) -> tuple[float, PidState]:
    """PI step for the steering loop with wrap-aware error handling."""
    error = wrap_angle(yaw_error)
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    integral = _clamp(state.integral + error * dt, gains.integral_limit)
    raw = gains.kp * error + gains.ki * integral
    return _clamp(raw, gains.output_limit), PidState(integral=integral, prev_error=error)


@dataclass
class TrackingError:
    """Shape-lookup trajectory errors: where the foot should be minus where it is."""

    error_x: float
    error_y: float


def tracking_errors(
    curve: TrajectoryCurve, segment: str, actual: tuple[float, float]
) -> TrackingError:
    """Positional errors against a trajectory segment.

    ``error_x`` compares the actual x with the segment x at the actual height;
    ``error_y`` compares the actual height with the segment height at the
    actual x.  Raises :class:`~prisquad.trajectory.SegmentQueryError` when the
    segment is not single-valued in the queried variable.
    """
    seg = curve.segment(segment)
    x_required = seg.x_at_y(actual[1])
    y_required = seg.y_at_x(actual[0])
    return TrackingError(error_x=x_required - actual[0], error_y=y_required - actual[1])


@dataclass
class PurePursuitState:
    """Mutable tracker state: fixed lookahead plus the last goal phase.

    The goal phase never decreases within a stride, which prevents the goal
    point from jumping backwards where the path passes close to itself.
    """

    lookahead: float
    curve: TrajectoryCurve
    last_goal_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.lookahead <= 0:
            raise ValidationError("lookahead must be > 0")


def _as_path(reference) -> np.ndarray:
    if isinstance(reference, TrajectoryCurve):
        return reference.swing_points
    return np.asarray(reference, dtype=float)


def pure_pursuit_goal(
    reference,
    current: tuple[float, float],
    phase_hint: float,
    lookahead: float,
) -> tuple[np.ndarray, float]:
    """Goal point a fixed distance ahead on the reference path.

    Walks the path polyline forward from ``phase_hint`` (a fraction of total
    path length) and returns the first point whose distance from ``current``
    equals ``lookahead``, found by circle-segment intersection.  If the
    remaining path lies entirely within the lookahead circle the path end
    point is returned.  The result is ``(goal_xy, goal_phase)``.
    """
    if lookahead <= 0:
        raise ValidationError("lookahead must be > 0")
    path = _as_path(reference)
    if isinstance(reference, TrajectoryCurve):
        cumlen = reference.swing_cumlen
    else:
        deltas = np.diff(path, axis=0)
        cumlen = np.concatenate(([0.0], np.cumsum(np.hypot(deltas[:, 0], deltas[:, 1]))))
    total = float(cumlen[-1])
    if total <= 0:
        return path[-1].copy(), 1.0
    p = np.asarray(current, dtype=float)
    start_len = min(max(phase_hint, 0.0), 1.0) * total
    i0 = int(np.searchsorted(cumlen, start_len, side="right")) - 1
    i0 = min(max(i0, 0), len(path) - 2)
    for i in range(i0, len(path) - 1):
        a = path[i] if i > i0 else _interp(path, cumlen, i, start_len)
        b = path[i + 1]
        hit = _circle_segment_exit(p, lookahead, a, b)
        if hit is not None:
            goal, t = hit
            seg_start = cumlen[i] if i > i0 else start_len
            goal_len = seg_start + t * (cumlen[i + 1] - seg_start)
            return goal, goal_len / total
    return path[-1].copy(), 1.0


def _interp(path: np.ndarray, cumlen: np.ndarray, i: int, arc: float) -> np.ndarray:
    span = cumlen[i + 1] - cumlen[i]
    t = 0.0 if span <= 0 else (arc - cumlen[i]) / span
    return path[i] + t * (path[i + 1] - path[i])

def _circle_segment_exit(
    center: np.ndarray, radius: float, a: np.ndarray, b: np.ndarray
):
    """First point along segment a->b at exactly ``radius`` from ``center``,
    searching only where the path leaves the circle."""
    d = b - a
    f = a - center
    aa = float(d @ d)
    if aa == 0.0:
        return None
    bb = 2.0 * float(f @ d)
    cc = float(f @ f) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    for t in ((-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)):
        if 0.0 <= t <= 1.0:
            # keep only crossings heading outward (distance increasing)
            if bb + 2.0 * aa * t >= 0.0:
                return a + t * d, t
    return None


def pure_pursuit_velocity(
    current: tuple[float, float], goal: tuple[float, float], speed_ref: float
) -> np.ndarray:
    """Velocity of magnitude ``speed_ref`` pointing from the foot at the goal."""
    if speed_ref <= 0:
        raise ValidationError("speed_ref must be > 0")
    d = np.asarray(goal, dtype=float) - np.asarray(current, dtype=float)
    norm = math.hypot(d[0], d[1])
    if norm == 0.0:
        return np.zeros(2)
    return speed_ref * d / norm


def envelope_speed(direction: np.ndarray, vx_cap: float, vy_cap: float) -> float:
    """Largest speed along ``direction`` that keeps both axes inside their caps."""
    dx, dy = direction
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return 0.0
    limits = []
    if abs(dx) > 1e-12:
        limits.append(vx_cap * norm / abs(dx))
    if abs(dy) > 1e-12:
        limits.append(vy_cap * norm / abs(dy))
    return min(limits)

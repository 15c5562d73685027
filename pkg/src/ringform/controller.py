"""Per-vehicle sign control law on bearing measurements.

Each vehicle sees only two unit vectors: the bearing toward its successor
and the bearing toward its predecessor. The commanded velocity is the
difference of incident bearings gated by the sign of the local angle
error, so its speed never exceeds 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SignPolicy:
    """Sign function with a symmetric deadband around zero.

    Errors of magnitude at most ``deadband`` map to zero, which lets a
    fixed-step integration come to an exact stop instead of chattering.
    """

    deadband: float = 1e-6

    def __post_init__(self):
        if self.deadband < 0:
            raise ValueError("deadband must be nonnegative")


def deadband_sign(x, deadband: float):
    """sgn(x) forced to 0 whenever |x| <= deadband. Works elementwise."""
    x = np.asarray(x, dtype=float)
    s = np.where(np.abs(x) <= deadband, 0.0, np.sign(x))
    return s if s.ndim else float(s)


@dataclass(frozen=True)
class LocalMeasurement:
    """What one vehicle can sense: two incident bearings and its target.

    ``g_next`` points toward the successor, ``g_prev_neg`` toward the
    predecessor (the reversed incoming bearing), and ``target_cos`` is
    cos(theta*) for this vehicle.
    """

    g_next: np.ndarray
    g_prev_neg: np.ndarray
    target_cos: float


def local_error(m: LocalMeasurement) -> float:
    """Angle error cos(theta) - cos(theta*) from local bearings only.

    cos(theta) equals the inner product of the two incident bearings as
    seen by the vehicle, so no angle extraction is needed.
    """
    return float(m.g_next @ m.g_prev_neg) - m.target_cos


def control_velocity(m: LocalMeasurement, policy: SignPolicy = SignPolicy()) -> np.ndarray:
    """Commanded velocity sgn(eps) * (g_next - g_prev).

    The bearing difference is g_next + g_prev_neg since g_prev_neg is
    already the reversed incoming bearing. When the two bearings coincide
    (subtended angle pi) the direction vanishes and the command is zero
    regardless of the error sign.
    """
    s = deadband_sign(local_error(m), policy.deadband)
    return s * (m.g_next + m.g_prev_neg)

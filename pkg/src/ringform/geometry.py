"""Planar geometry primitives for bearing-based control.

Vectors are numpy arrays of shape (2,). Bearings are unit vectors and
angles are radians. The subtended-angle convention: the angle at vehicle i
is the counterclockwise rotation taking -g_{i-1} (the bearing back toward
the previous vehicle) onto g_i (the bearing toward the next vehicle), so
it always lies in [0, 2*pi).
"""

from __future__ import annotations

import numpy as np

from .errors import CollocatedVehicles

TWO_PI = 2.0 * np.pi

# Pairwise distance at or below which bearings are treated as undefined.
COLLOCATION_EPS = 1e-9


def vec(x: float, y: float) -> np.ndarray:
    """Build a float 2-vector."""
    return np.array([float(x), float(y)])


def wrap_angle(alpha: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    return float(np.mod(alpha, TWO_PI))


def rotation_matrix(alpha: float) -> np.ndarray:
    """Counterclockwise rotation matrix for angle alpha."""
    c = np.cos(alpha)
    s = np.sin(alpha)
    return np.array([[c, -s], [s, c]])


def rotate(alpha: float, v: np.ndarray) -> np.ndarray:
    """Rotate v counterclockwise by alpha radians."""
    return rotation_matrix(alpha) @ v


def perp(g: np.ndarray) -> np.ndarray:
    """Rotate g by +90 degrees: perp((x, y)) = (-y, x)."""
    return np.array([-g[1], g[0]])


def project_out(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project v onto the orthogonal complement of the unit vector g."""
    return v - (g @ v) * g


def projector(g: np.ndarray) -> np.ndarray:
    """Matrix of project_out: I - g g^T for a unit vector g."""
    return np.eye(2) - np.outer(g, g)


def bearing_from_to(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Unit vector pointing from src toward dst.

    Raises CollocatedVehicles when the points are closer than the
    collocation threshold, since no direction is defined there.
    """
    e = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    d = float(np.hypot(e[0], e[1]))
    if d <= COLLOCATION_EPS:
        raise CollocatedVehicles(f"points are {d:.3e} apart, bearing undefined")
    return e / d


def subtended_angle(g_i: np.ndarray, g_im1: np.ndarray) -> float:
    """Angle in [0, 2*pi) rotating -g_im1 counterclockwise onto g_i.

    g_i is the bearing from a vehicle to its successor on the ring and
    g_im1 the bearing from its predecessor to it; both must be unit.
    """
    u = -np.asarray(g_im1, dtype=float)
    c = float(g_i @ u)
    s = float(g_i @ perp(u))
    return wrap_angle(np.arctan2(s, c))

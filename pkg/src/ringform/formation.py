"""Ring formation state, target specification, and feasibility checks.

Vehicles are ordered around a cycle: vehicle i points a bearing g_i at
vehicle i+1 (indices mod n). The subtended angle theta_i at vehicle i
relates g_i and g_{i-1}; its collection determines the formation shape
up to translation, rotation, and edge lengths.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import lsq_linear
from scipy.spatial.distance import pdist

from .errors import CollocatedVehicles, InfeasibleTarget
from .geometry import COLLOCATION_EPS, TWO_PI, wrap_angle

# Targets closer than this to {0, pi} are treated as degenerate.
ASSUMPTION_EPS = 1e-6

# Allowed mismatch between initial and target angle sums.
SUM_TOL = 1e-9

# Tolerances internal to target realization.
_CLOSURE_TOL = 1e-8
_EQUAL_LENGTH_TOL = 1e-9


def _edge_vectors(z: np.ndarray) -> np.ndarray:
    """Edge vectors e_i = z_{i+1} - z_i around the ring, shape (n, 2)."""
    return np.roll(z, -1, axis=0) - z


def _bearing_vectors(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit bearings along each edge and the edge lengths."""
    e = _edge_vectors(z)
    lengths = np.hypot(e[:, 0], e[:, 1])
    return e / lengths[:, None], lengths


def _subtended_angles(g: np.ndarray) -> np.ndarray:
    """Angle at each vehicle between its two incident bearings, in [0, 2pi)."""
    u = -np.roll(g, 1, axis=0)
    c = np.einsum("ij,ij->i", g, u)
    s = u[:, 0] * g[:, 1] - u[:, 1] * g[:, 0]
    return np.mod(np.arctan2(s, c), TWO_PI)


def _min_pairwise_distance(z: np.ndarray) -> float:
    return float(pdist(z).min())


def _side_of(theta: float, eps: float = 0.0) -> str | None:
    """Which open half of (0, 2pi) an angle lies in, None if degenerate."""
    if theta <= eps or abs(theta - np.pi) <= eps or theta >= TWO_PI - eps:
        return None
    return "lower" if theta < np.pi else "upper"


@dataclass(frozen=True)
class TargetSpec:
    """Desired subtended angle, in radians, for each vehicle."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or a.size < 3:
            raise ValueError("need at least 3 target angles")
        if not np.all(np.isfinite(a)):
            raise ValueError("target angles must be finite")
        a = np.mod(a, TWO_PI)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @classmethod
    def from_degrees(cls, degrees) -> "TargetSpec":
        return cls(np.radians(np.asarray(degrees, dtype=float)))

    @property
    def n(self) -> int:
        return self.angles.size

    @cached_property
    def cos_angles(self) -> np.ndarray:
        c = np.cos(self.angles)
        c.setflags(write=False)
        return c

    def sides(self, eps: float = 0.0) -> tuple[str | None, ...]:
        """Half-plane flag per target angle; None marks a degenerate target."""
        return tuple(_side_of(float(t), eps) for t in self.angles)

    def assumption_ok(self, eps: float = ASSUMPTION_EPS) -> bool:
        """True when every target stays eps away from the degenerate set {0, pi}."""
        return all(s is not None for s in self.sides(eps))


@dataclass(frozen=True)
class FormationState:
    """Immutable positions of n >= 3 vehicles, shape (n, 2).

    Construction rejects non-finite coordinates and near-collocated
    vehicles, so derived bearings are always well defined.
    """

    positions: np.ndarray

    def __post_init__(self):
        z = np.array(self.positions, dtype=float)
        if z.ndim != 2 or z.shape[1] != 2 or z.shape[0] < 3:
            raise ValueError(f"positions must have shape (n>=3, 2), got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("positions must be finite")
        d = _min_pairwise_distance(z)
        if d <= COLLOCATION_EPS:
            raise CollocatedVehicles(
                f"minimum pairwise distance {d:.3e} at or below {COLLOCATION_EPS:.0e}"
            )
        z.setflags(write=False)
        object.__setattr__(self, "positions", z)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def edges(self) -> np.ndarray:
        """Edge vectors z_{i+1} - z_i, shape (n, 2)."""
        e = _edge_vectors(self.positions)
        e.setflags(write=False)
        return e

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        l = np.hypot(self.edges[:, 0], self.edges[:, 1])
        l.setflags(write=False)
        return l

    @cached_property
    def bearings(self) -> np.ndarray:
        """Unit bearing g_i from vehicle i toward vehicle i+1, shape (n, 2)."""
        g = self.edges / self.edge_lengths[:, None]
        g.setflags(write=False)
        return g

    @cached_property
    def angles(self) -> np.ndarray:
        """Subtended angle theta_i at each vehicle, in [0, 2pi)."""
        t = _subtended_angles(self.bearings)
        t.setflags(write=False)
        return t

    def min_distance(self) -> float:
        """Minimum pairwise distance over all vehicle pairs."""
        return _min_pairwise_distance(self.positions)

    def translated(self, offset: np.ndarray) -> "FormationState":
        return FormationState(self.positions + np.asarray(offset, dtype=float))


def errors(state: FormationState, spec: TargetSpec) -> np.ndarray:
    """Per-vehicle angle error eps_i = cos(theta_i) - cos(theta_i*).

    Computed directly from bearings as -g_i . g_{i-1} - cos(theta_i*),
    which is the quantity each vehicle can measure locally.
    """
    if state.n != spec.n:
        raise ValueError(f"state has n={state.n} but spec has n={spec.n}")
    g = state.bearings
    g_prev = np.roll(g, 1, axis=0)
    return -np.einsum("ij,ij->i", g, g_prev) - spec.cos_angles


def angle_sum(state: FormationState) -> float:
    """Sum of all subtended angles; invariant along closed-loop motion."""
    return float(state.angles.sum())


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the pre-run checks relating a state to its target."""

    angle_sum_initial: float
    angle_sum_target: float
    sum_residual: float
    sum_ok: bool
    assumption_ok: bool
    initial_sides: tuple
    target_sides: tuple
    sides_ok: bool

    @property
    def ok(self) -> bool:
        return self.sum_ok and self.assumption_ok and self.sides_ok


def validate_feasibility(
    state: FormationState,
    spec: TargetSpec,
    sum_tol: float = SUM_TOL,
    assumption_eps: float = ASSUMPTION_EPS,
) -> FeasibilityReport:
    """Check angle-sum compatibility, target nondegeneracy, and side match.

    The angle sum is conserved by the closed loop, so it must agree with
    the target's sum up front. Each theta_i(0) must also lie in the same
    open half (0, pi) or (pi, 2pi) as its target; an initial angle of
    exactly pi has no side and fails the check.
    """
    s0 = angle_sum(state)
    st = float(spec.angles.sum())
    residual = abs(s0 - st)
    initial_sides = tuple(_side_of(float(t)) for t in state.angles)
    target_sides = spec.sides(assumption_eps)
    sides_ok = all(
        a is not None and a == b for a, b in zip(initial_sides, target_sides)
    )
    return FeasibilityReport(
        angle_sum_initial=s0,
        angle_sum_target=st,
        sum_residual=residual,
        sum_ok=residual <= sum_tol,
        assumption_ok=spec.assumption_ok(assumption_eps),
        initial_sides=initial_sides,
        target_sides=target_sides,
        sides_ok=sides_ok,
    )


def realize_target(spec: TargetSpec, scale: float = 1.0) -> FormationState:
    """Construct positions whose subtended angles equal the targets.

    Bearing directions follow from the angle recursion; edge lengths are
    then chosen to close the polygon. Equal lengths are used when the
    bearings already sum to zero, otherwise a bounded least-squares picks
    positive lengths. The shortest edge is normalized to ``scale``.

    Raises InfeasibleTarget when the targets are degenerate or no closed
    realization exists (for instance when the angle sum is incompatible
    with a closed ring).
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not spec.assumption_ok():
        raise InfeasibleTarget("targets touch the degenerate set {0, pi}")
    n = spec.n
    headings = np.zeros(n)
    headings[1:] = np.cumsum(np.pi + spec.angles[1:])
    g = np.column_stack([np.cos(headings), np.sin(headings)])

    if np.linalg.norm(g.sum(axis=0)) < _EQUAL_LENGTH_TOL:
        lengths = np.full(n, scale)
    else:
        # Solve sum_i l_i g_i = 0 with lengths bounded away from zero.
        res = lsq_linear(g.T, np.zeros(2), bounds=(0.1 * scale, np.inf))
        lengths = res.x * (scale / res.x.min())

    closure = lengths @ g
    if np.linalg.norm(closure) > _CLOSURE_TOL:
        raise InfeasibleTarget(
            f"polygon closure residual {np.linalg.norm(closure):.3e}"
        )
    z = np.zeros((n, 2))
    z[1:] = np.cumsum(lengths[:-1, None] * g[:-1], axis=0)
    state = FormationState(z)

    gap = np.abs(state.angles - spec.angles)
    gap = np.minimum(gap, TWO_PI - gap)
    if gap.max() > _CLOSURE_TOL:
        raise InfeasibleTarget(
            f"realized angles deviate from targets by {gap.max():.3e}"
        )
    return state


def perturb(state: FormationState, magnitude: float, seed: int) -> FormationState:
    """Displace every vehicle i.i.d. uniformly in a disk of given radius.

    The draw order (all direction angles first, then all radii) is part
    of the determinism contract: the same seed always yields the same
    perturbed formation.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be nonnegative")
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, TWO_PI, state.n)
    r = magnitude * np.sqrt(rng.uniform(0.0, 1.0, state.n))
    offset = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    return FormationState(state.positions + offset)

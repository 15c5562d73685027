"""Fixed-step closed-loop simulation of the sign-controlled ring.

The update is synchronous explicit Euler: every vehicle computes its
velocity from the same pre-step state, then all positions advance by
dt times that velocity. A run is converged once every commanded
velocity is exactly zero (all errors inside the deadband) while the
Lyapunov value is at or below the convergence tolerance; from that
moment the state can never change again, and the first such time is
reported as t_f.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CollisionImminent, InfeasibleScenario
from .formation import (
    FormationState,
    TargetSpec,
    _bearing_vectors,
    validate_feasibility,
)
from .geometry import COLLOCATION_EPS

# Fraction of the initial minimum distance used as the default collision floor.
_DEFAULT_FLOOR_FRACTION = 1e-3

# Soft cap on recorded scalars before sample decimation kicks in.
_RECORD_BUDGET = 1_000_000


@dataclass
class SimConfig:
    """Integration constants and stopping thresholds for one run.

    ``collision_floor=None`` resolves to 1e-3 times the initial minimum
    pairwise distance. ``record_stride=None`` records every step until
    the trajectory would exceed a memory budget, then decimates evenly
    (the initial sample, any stopping transition, and the final sample
    are always kept).
    """

    dt: float = 1e-3
    t_max: float = 20.0
    convergence_tol: float = 1e-3
    deadband: float = 1e-6
    collision_floor: float | None = None
    settle_window: float = 0.2
    record_stride: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.deadband < 0:
            raise ValueError("deadband must be nonnegative")
        if self.collision_floor is not None and self.collision_floor < COLLOCATION_EPS:
            raise ValueError("collision_floor must be at least the collocation threshold")
        if self.settle_window < 0:
            raise ValueError("settle_window must be nonnegative")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled closed-loop trajectory plus stopping metadata.

    Arrays share a leading sample axis of length m: ``t`` (m,),
    ``positions`` (m, n, 2), ``errors`` (m, n), ``lyapunov`` (m,),
    ``min_distance`` (m,), ``speeds`` (m, n).

    ``t_f`` is the first time the formation froze with the Lyapunov
    value at or below tolerance (None unless converged), while
    ``first_below_tol`` is the first time the Lyapunov value alone
    dipped to tolerance. ``event`` is one of "converged", "timeout",
    "collision", "stalled".
    """

    t: np.ndarray
    positions: np.ndarray
    errors: np.ndarray
    lyapunov: np.ndarray
    min_distance: np.ndarray
    speeds: np.ndarray
    converged: bool
    t_f: float | None
    first_below_tol: float | None
    t_star: float
    collision_floor: float
    event: str

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def initial_state(self) -> FormationState:
        return FormationState(self.positions[0])

    def final_state(self) -> FormationState:
        return FormationState(self.positions[-1])


def collision_horizon(state: FormationState) -> float:
    """Time horizon d_min / 4 below which no collision can occur.

    Relative speeds are bounded by 4, so the closest pair needs at least
    this long to meet.
    """
    return state.min_distance() / 4.0


@lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n, 1)


def _min_dist(z: np.ndarray) -> float:
    d = z[:, None, :] - z[None, :, :]
    d2 = d[..., 0] ** 2 + d[..., 1] ** 2
    return float(np.sqrt(d2[_triu(z.shape[0])].min()))


def _derive(z: np.ndarray, cos_star: np.ndarray, deadband: float):
    """Bearings, errors, Lyapunov value, and commanded velocities at z."""
    g, _ = _bearing_vectors(z)
    g_prev = np.roll(g, 1, axis=0)
    eps = -np.einsum("ij,ij->i", g, g_prev) - cos_star
    s = np.where(np.abs(eps) <= deadband, 0.0, np.sign(eps))
    u = s[:, None] * (g - g_prev)
    return g, eps, float(np.abs(eps).sum()), u


def step(state: FormationState, spec: TargetSpec, cfg: SimConfig) -> FormationState:
    """One synchronous Euler step of the closed loop.

    Raises CollisionImminent when the stepped minimum distance is at or
    below the collision floor (resolved against the current state when
    the config leaves it unset).
    """
    if state.n != spec.n:
        raise ValueError(f"state has n={state.n} but spec has n={spec.n}")
    floor = cfg.collision_floor
    if floor is None:
        floor = _DEFAULT_FLOOR_FRACTION * state.min_distance()
    _, _, _, u = _derive(state.positions, spec.cos_angles, cfg.deadband)
    z_new = state.positions + cfg.dt * u
    if _min_dist(z_new) <= floor:
        raise CollisionImminent(
            f"step would reduce minimum distance to {_min_dist(z_new):.3e}"
        )
    return FormationState(z_new)


class _Recorder:
    """Accumulates decimated samples, always keeping marked steps."""

    def __init__(self, stride: int):
        self.stride = stride
        self.rows = []
        self._last_k = -1

    def add(self, k, t, z, eps, V, dmin, spd, force=False):
        if k == self._last_k:
            return
        if force or k % self.stride == 0:
            self._last_k = k
            self.rows.append((t, z.copy(), eps.copy(), V, dmin, spd.copy()))

    def arrays(self):
        t, z, eps, V, dmin, spd = zip(*self.rows)
        return (
            np.array(t),
            np.array(z),
            np.array(eps),
            np.array(V),
            np.array(dmin),
            np.array(spd),
        )


def run(
    state0: FormationState,
    spec: TargetSpec,
    cfg: SimConfig,
    force: bool = False,
) -> TrajectoryRecord:
    """Simulate until the formation freezes, collides, or times out.

    Feasibility of (state0, spec) is checked first and an infeasible
    pairing raises InfeasibleScenario unless ``force`` is set. After
    convergence the loop keeps sampling for ``settle_window`` seconds to
    expose the frozen tail, then stops.
    """
    if state0.n != spec.n:
        raise ValueError(f"state has n={state0.n} but spec has n={spec.n}")
    report = validate_feasibility(state0, spec)
    if not report.ok and not force:
        raise InfeasibleScenario("initial state fails feasibility checks", report)

    d0 = state0.min_distance()
    floor = cfg.collision_floor
    if floor is None:
        floor = _DEFAULT_FLOOR_FRACTION * d0
    t_star = d0 / 4.0

    n = state0.n
    cos_star = spec.cos_angles
    n_steps = max(1, int(round(cfg.t_max / cfg.dt)))
    stride = cfg.record_stride
    if stride is None:
        stride = max(1, int(np.ceil(n * (n_steps + 1) / _RECORD_BUDGET)))

    rec = _Recorder(stride)
    z = state0.positions.copy()
    converged = False
    t_f = None
    first_below = None
    event = "timeout"

    k = 0
    while True:
        t = k * cfg.dt
        _, eps, V, u = _derive(z, cos_star, cfg.deadband)
        spd = np.hypot(u[:, 0], u[:, 1])
        dmin = _min_dist(z)
        stopped = not np.any(u)

        if first_below is None and V <= cfg.convergence_tol:
            first_below = t
        if stopped and not converged:
            if V <= cfg.convergence_tol:
                converged = True
                t_f = t
                event = "converged"
                rec.add(k, t, z, eps, V, dmin, spd, force=True)
            else:
                # Frozen short of tolerance: nothing will ever move again.
                event = "stalled"
                rec.add(k, t, z, eps, V, dmin, spd, force=True)
                break

        done = k >= n_steps or (converged and t >= t_f + cfg.settle_window)
        rec.add(k, t, z, eps, V, dmin, spd, force=done)
        if done:
            break

        z_new = z + cfg.dt * u
        dmin_new = _min_dist(z_new)
        if dmin_new <= floor:
            event = "collision"
            t_arr, z_arr, e_arr, v_arr, d_arr, s_arr = rec.arrays()
            partial = TrajectoryRecord(
                t=t_arr, positions=z_arr, errors=e_arr, lyapunov=v_arr,
                min_distance=d_arr, speeds=s_arr, converged=False, t_f=None,
                first_below_tol=first_below, t_star=t_star,
                collision_floor=floor, event=event,
            )
            raise CollisionImminent(
                f"minimum distance would reach {dmin_new:.3e} at t={t + cfg.dt:.6g}",
                record=partial,
            )
        z = z_new
        k += 1

    t_arr, z_arr, e_arr, v_arr, d_arr, s_arr = rec.arrays()
    return TrajectoryRecord(
        t=t_arr, positions=z_arr, errors=e_arr, lyapunov=v_arr,
        min_distance=d_arr, speeds=s_arr, converged=converged, t_f=t_f,
        first_below_tol=first_below, t_star=t_star,
        collision_floor=floor, event=event,
    )


def half_step_deviation(
    state0: FormationState,
    spec: TargetSpec,
    cfg: SimConfig,
    t_check: float,
) -> float:
    """Max position deviation at t_check between dt and dt/2 integrations.

    Diagnostic for discretization error in place of adaptive stepping.
    """
    def integrate(dt: float) -> np.ndarray:
        z = state0.positions.copy()
        for _ in range(int(round(t_check / dt))):
            _, _, _, u = _derive(z, spec.cos_angles, cfg.deadband)
            z = z + dt * u
        return z

    za = integrate(cfg.dt)
    zb = integrate(cfg.dt / 2.0)
    return float(np.abs(za - zb).max())

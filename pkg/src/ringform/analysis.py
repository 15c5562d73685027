"""Lyapunov machinery, error dynamics structure, and run certificates.

Away from sign switches the error vector evolves as d(eps)/dt =
-A sgn(eps) for a state-dependent symmetric positive semidefinite
matrix A with a cyclic tridiagonal pattern. This module assembles A,
exposes the quantities appearing in the convergence argument (the
Lyapunov value, its generalized gradient box, the incidence/diagonal
factorization, the cycle spectral gap), and evaluates the finite-time
and displacement certificates on simulated trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated, NotConverged
from .formation import FormationState, TargetSpec, errors

# Absolute tolerance for the structural hypotheses of spectral checks.
_HYPOTHESIS_TOL = 1e-9

# Secant width below which w_factor switches to its limit value.
_W_SINGULARITY = 1e-7


def lyapunov(eps: np.ndarray) -> float:
    """Lyapunov value V = sum_i |eps_i|."""
    return float(np.abs(np.asarray(eps, dtype=float)).sum())


@dataclass(frozen=True)
class GradientBox:
    """Componentwise interval enclosure of the generalized gradient of V.

    Component i is the singleton {sgn(eps_i)} when eps_i is nonzero and
    the full interval [-1, 1] when eps_i = 0.
    """

    lower: np.ndarray
    upper: np.ndarray

    def least_norm(self) -> np.ndarray:
        """Smallest-norm element of the box; equals sgn(eps) componentwise."""
        return np.clip(0.0, self.lower, self.upper)

    def contains(self, eta: np.ndarray) -> bool:
        eta = np.asarray(eta, dtype=float)
        return bool(np.all(self.lower <= eta) and np.all(eta <= self.upper))


def gradient_box(eps: np.ndarray) -> GradientBox:
    eps = np.asarray(eps, dtype=float)
    s = np.sign(eps)
    lower = np.where(eps != 0.0, s, -1.0)
    upper = np.where(eps != 0.0, s, 1.0)
    lower.setflags(write=False)
    upper.setflags(write=False)
    return GradientBox(lower=lower, upper=upper)


@dataclass(frozen=True)
class ErrorMatrix:
    """The matrix A of the error dynamics at one formation state."""

    matrix: np.ndarray
    state: FormationState

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def quadratic_form(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matrix @ x)


def _projectors(g: np.ndarray) -> np.ndarray:
    """Stack of 2x2 projectors I - g_i g_i^T, shape (n, 2, 2)."""
    return np.eye(2) - g[:, :, None] * g[:, None, :]


def assemble_A(state: FormationState) -> ErrorMatrix:
    """Assemble the error-dynamics matrix A from bearings and edge lengths.

    Row i has nonzero entries only at columns i-1, i, i+1 (mod n):
      a_{i,i-1} = g_i^T P_{i-1} g_{i-2} / |e_{i-1}|
      a_{i,i}   = g_i^T P_{i-1} g_i / |e_{i-1}| + g_{i-1}^T P_i g_{i-1} / |e_i|
      a_{i,i+1} = g_{i-1}^T P_i g_{i+1} / |e_i|
    where P_j projects onto the complement of bearing g_j.
    """
    g = state.bearings
    lengths = state.edge_lengths
    n = state.n
    P = _projectors(g)
    A = np.zeros((n, n))
    for i in range(n):
        im1 = (i - 1) % n
        im2 = (i - 2) % n
        ip1 = (i + 1) % n
        A[i, im1] = g[i] @ P[im1] @ g[im2] / lengths[im1]
        A[i, i] = (
            g[i] @ P[im1] @ g[i] / lengths[im1]
            + g[im1] @ P[i] @ g[im1] / lengths[i]
        )
        A[i, ip1] = g[im1] @ P[i] @ g[ip1] / lengths[i]
    return ErrorMatrix(matrix=A, state=state)


def projector_quadratic_sum(state: FormationState, x: np.ndarray) -> float:
    """x^T A x written as a sum of projected squares, without forming A.

    Each term is (x_{i+1} g_{i+1} + x_i g_{i-1})^T P_i (...) / |e_i|,
    which is nonnegative, so positive semidefiniteness of A is explicit.
    """
    x = np.asarray(x, dtype=float)
    g = state.bearings
    lengths = state.edge_lengths
    P = _projectors(g)
    total = 0.0
    n = state.n
    for i in range(n):
        ip1 = (i + 1) % n
        im1 = (i - 1) % n
        v = x[ip1] * g[ip1] + x[i] * g[im1]
        total += (v @ P[i] @ v) / lengths[i]
    return float(total)


def lie_derivative_value(state: FormationState, spec: TargetSpec) -> float:
    """Value -sgn(eps)^T A sgn(eps) of the Lyapunov derivative at a state.

    Uses the exact sign (no deadband), matching the least-norm element
    of the gradient box. Nonpositive everywhere; strictly negative off
    the target set under the feasibility assumptions.
    """
    eps = errors(state, spec)
    s = np.sign(eps)
    A = assemble_A(state).matrix
    return float(-(s @ A @ s))


@dataclass(frozen=True)
class CycleFactorization:
    """Factors of the gradient image h = E D eta.

    ``incidence`` is the cyclic difference matrix ((Ey)_i = y_i - y_{i+1})
    and ``diag`` carries sin(theta_i) on its diagonal, each sine computed
    directly from bearing cross products.
    """

    incidence: np.ndarray
    diag: np.ndarray

    def sin_values(self) -> np.ndarray:
        return np.diag(self.diag).copy()


def cycle_incidence(n: int) -> np.ndarray:
    """Cyclic difference matrix E with rows (..., 1, -1, ...)."""
    if n < 3:
        raise ValueError("need n >= 3")
    E = np.eye(n)
    idx = np.arange(n)
    E[idx, (idx + 1) % n] = -1.0
    return E


def cycle_factorization(state: FormationState) -> CycleFactorization:
    g = state.bearings
    g_prev = np.roll(g, 1, axis=0)
    sines = g[:, 0] * g_prev[:, 1] - g[:, 1] * g_prev[:, 0]
    return CycleFactorization(
        incidence=cycle_incidence(state.n),
        diag=np.diag(sines),
    )


def lambda2_cycle(n: int) -> float:
    """Second-smallest eigenvalue of E^T E for the n-cycle."""
    E = cycle_incidence(n)
    vals = np.linalg.eigvalsh(E.T @ E)
    return float(vals[1])


@dataclass(frozen=True)
class InfimumCheck:
    """Result of sampling x^T B x over mixed-sign unit vectors."""

    n: int
    n_samples: int
    bound: float
    min_value: float
    ratio: float
    passed: bool
    best_vector: np.ndarray


def sampled_infimum_check(
    B: np.ndarray,
    samples: int = 100_000,
    seed: int = 0,
    slack: float = 1e-9,
) -> InfimumCheck:
    """Monte Carlo check that x^T B x >= lambda_2(B)/n on mixed-sign unit x.

    B must be symmetric positive semidefinite with a simple zero
    eigenvalue whose eigenvector is the all-ones vector; anything else
    raises HypothesisViolated. Samples are standard normal vectors,
    redrawn while all components share one sign, then normalized.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise HypothesisViolated("B must be square")
    n = B.shape[0]
    if not np.allclose(B, B.T, atol=1e-12):
        raise HypothesisViolated("B must be symmetric")
    vals = np.linalg.eigvalsh(B)
    if vals[0] < -_HYPOTHESIS_TOL:
        raise HypothesisViolated(f"B has negative eigenvalue {vals[0]:.3e}")
    if np.linalg.norm(B @ np.ones(n)) > _HYPOTHESIS_TOL * max(1.0, abs(vals[-1])):
        raise HypothesisViolated("the all-ones vector is not in the kernel of B")
    lam2 = float(vals[1])
    if lam2 <= _HYPOTHESIS_TOL:
        raise HypothesisViolated(f"spectral gap {lam2:.3e} is not positive")

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, n))
    while True:
        same = np.abs(np.sign(x).sum(axis=1)) == n
        if not same.any():
            break
        x[same] = rng.standard_normal((int(same.sum()), n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)

    qf = np.einsum("bi,ij,bj->b", x, B, x)
    i_min = int(np.argmin(qf))
    bound = lam2 / n
    min_value = float(qf[i_min])
    return InfimumCheck(
        n=n,
        n_samples=samples,
        bound=bound,
        min_value=min_value,
        ratio=min_value / bound,
        passed=min_value >= bound - slack,
        best_vector=x[i_min].copy(),
    )


def angle_sum_series(record) -> np.ndarray:
    """Sum of subtended angles at every recorded sample.

    The closed loop conserves this sum exactly, so the series exposes
    the discretization drift of a run.
    """
    z = record.positions
    e = np.roll(z, -1, axis=1) - z
    g = e / np.hypot(e[..., 0], e[..., 1])[..., None]
    u = -np.roll(g, 1, axis=1)
    c = np.einsum("...i,...i->...", g, u)
    s = u[..., 0] * g[..., 1] - u[..., 1] * g[..., 0]
    theta = np.mod(np.arctan2(s, c), 2.0 * np.pi)
    return theta.sum(axis=1)


def w_factor(theta: float, theta_star: float) -> float:
    """Secant slope (cos(theta) - cos(theta*)) / (theta - theta*).

    Near the removable singularity theta = theta* the limit -sin(theta*)
    is returned. Negative when both angles lie in (0, pi), positive when
    both lie in (pi, 2 pi).
    """
    d = theta - theta_star
    if abs(d) < _W_SINGULARITY:
        return float(-np.sin(theta_star))
    return float((np.cos(theta) - np.cos(theta_star)) / d)


def convergence_rate(beta: float, lambda2: float, gamma: float, n: int) -> float:
    """Lyapunov decay rate kappa = beta * lambda2 / (gamma * n).

    beta lower-bounds the squared sines of the subtended angles, gamma
    upper-bounds the total edge length, and lambda2 is the cycle
    spectral gap. Positive whenever beta is.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if n < 3:
        raise ValueError("need n >= 3")
    return beta * lambda2 / (gamma * n)


@dataclass(frozen=True)
class CertificateReport:
    """Certificate quantities and pass/fail flags for one converged run.

    ``time_bound`` is V(0)/kappa and must dominate t_f;
    ``displacement_bound`` is 2 V(0)/kappa and must dominate every
    vehicle's total displacement; ``horizon_ok`` reports whether the
    formation froze before the collision-safe horizon t_star.
    """

    n: int
    gamma: float
    beta: float
    lambda2: float
    kappa: float
    v0: float
    t_f: float
    t_star: float
    time_bound: float
    time_ok: bool
    max_displacement: float
    displacement_bound: float
    displacement_ok: bool
    horizon_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.time_ok and self.displacement_ok and self.horizon_ok


def certify(record, spec: TargetSpec) -> CertificateReport:
    """Evaluate the finite-time and displacement certificates on a run.

    gamma and beta are taken as the worst values observed along the
    recorded samples, so the bounds hold with constants the trajectory
    actually exhibited. Raises NotConverged for unfinished runs.
    """
    if not record.converged or record.t_f is None:
        raise NotConverged(f"run ended with event {record.event!r}")
    z = record.positions
    e = np.roll(z, -1, axis=1) - z
    lengths = np.hypot(e[..., 0], e[..., 1])
    g = e / lengths[..., None]
    g_prev = np.roll(g, 1, axis=1)
    sines = g[..., 0] * g_prev[..., 1] - g[..., 1] * g_prev[..., 0]

    n = record.n
    gamma = float(lengths.sum(axis=1).max())
    beta = float((sines**2).min())
    lam2 = lambda2_cycle(n)
    kappa = convergence_rate(beta, lam2, gamma, n)

    v0 = float(record.lyapunov[0])
    t_f = float(record.t_f)
    time_bound = v0 / kappa if kappa > 0 else np.inf

    i_f = int(np.searchsorted(record.t, t_f))
    disp = np.linalg.norm(z[i_f] - z[0], axis=1)
    max_disp = float(disp.max())
    disp_bound = 2.0 * v0 / kappa if kappa > 0 else np.inf

    return CertificateReport(
        n=n,
        gamma=gamma,
        beta=beta,
        lambda2=lam2,
        kappa=kappa,
        v0=v0,
        t_f=t_f,
        t_star=float(record.t_star),
        time_bound=float(time_bound),
        time_ok=bool(t_f <= time_bound),
        max_displacement=max_disp,
        displacement_bound=float(disp_bound),
        displacement_ok=bool(max_disp <= disp_bound),
        horizon_ok=bool(t_f < record.t_star),
    )

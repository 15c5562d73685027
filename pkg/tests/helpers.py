"""Shared test utilities."""

from pathlib import Path

import numpy as np

from ringform import FormationState

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# Shape name -> (target angles in degrees, bundled perturbation seed).
BENCHMARK_SHAPES = {
    "triangle": ([45.0, 45.0, 90.0], 0),
    "square": ([90.0] * 4, 0),
    "pentagram": ([36.0] * 5, 1),
    "octagon": ([135.0] * 8, 0),
}


def random_valid_state(rng, n=None, min_dist=0.25, box=3.0) -> FormationState:
    """Rejection-sample positions with a safe minimum pairwise distance."""
    if n is None:
        n = int(rng.integers(3, 9))
    while True:
        z = rng.uniform(-box, box, (n, 2))
        d = z[:, None, :] - z[None, :, :]
        dist = np.hypot(d[..., 0], d[..., 1])
        dist[np.diag_indices(n)] = np.inf
        if dist.min() > min_dist:
            return FormationState(z)


def random_unit(rng, size=None) -> np.ndarray:
    """Uniformly random unit vectors, shape (size, 2) or (2,)."""
    phi = rng.uniform(0.0, 2.0 * np.pi, size)
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)

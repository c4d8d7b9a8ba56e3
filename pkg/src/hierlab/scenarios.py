"""Default scenario data shared by the CLI and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .dynamics import Nonlinearity, VectorField
from .measures import AtomicMeasure
from .rng import DEFAULT_SEED, STREAM_ATOMS, complex_normal, make_rng
from .space import ModelSpace

DEFAULT_WEIGHTS = (0.5, 0.3, 0.2)
DEFAULT_NORMS = (1.0, 0.8, 0.6)


def default_measure(space: ModelSpace, seed: int = DEFAULT_SEED, weights=DEFAULT_WEIGHTS, norms=DEFAULT_NORMS) -> AtomicMeasure:
    """Seeded atoms with coefficients decaying like 1/a_k, rescaled to the given l2 norms.

    The decay keeps the atoms in a small Z_1 ball, where the fixed-step flow
    conserves mass to ~1e-11 at dt = 1e-3.
    """
    rng = make_rng(seed, STREAM_ATOMS)
    z = complex_normal(rng, (len(weights), space.dim_m)) / space.a_weights
    z *= (np.asarray(norms) / np.linalg.norm(z, axis=1))[:, None]
    return AtomicMeasure(np.asarray(weights, dtype=float), z)


def default_field(space: ModelSpace, lam: float = 1.0) -> VectorField:
    return VectorField.nls(space, Nonlinearity.cubic(lam))

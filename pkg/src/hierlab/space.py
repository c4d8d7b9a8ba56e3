"""Truncated Fourier model of the rigged Hilbert scale on the one-dimensional torus.

Vectors are plain complex numpy arrays whose last axis runs over the retained
modes.  The operator ``A = -Laplacian + 1`` is diagonal in the mode basis with
entries ``a_k = 1 + (2 pi k)^2``, so every scale norm is a weighted l2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelSpace:
    """Mode space C^m with diagonal A and free propagator U(t) = exp(it Laplacian).

    Parameters
    ----------
    mode_labels : tuple of int
        Fourier indices of the retained modes, in basis order.
    s, sigma : float
        Regularity index of the state space and of the dual test space.
    """

    mode_labels: tuple[int, ...]
    s: float = 1.0
    sigma: float = 1.0
    omega: np.ndarray = field(init=False, repr=False, compare=False)
    a_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(int(k) for k in self.mode_labels)
        if not labels:
            raise ValueError("mode space needs at least one mode")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode labels: {labels}")
        object.__setattr__(self, "mode_labels", labels)
        omega = (2.0 * np.pi * np.asarray(labels, dtype=float)) ** 2
        omega.setflags(write=False)
        a = 1.0 + omega
        a.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "a_weights", a)

    @classmethod
    def truncated(cls, K: int = 2, s: float = 1.0, sigma: float = 1.0) -> "ModelSpace":
        """Modes -K..K (m = 2K+1), the default model."""
        if K < 0:
            raise ValueError("cutoff K must be nonnegative")
        return cls(tuple(range(-K, K + 1)), s=s, sigma=sigma)

    @property
    def dim_m(self) -> int:
        return len(self.mode_labels)

    @property
    def is_symmetric(self) -> bool:
        return sorted(self.mode_labels) == sorted(-k for k in self.mode_labels)

    def index(self, label: int) -> int:
        """Position of Fourier mode ``label`` in the basis."""
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise KeyError(f"mode {label} not retained in {self.mode_labels}") from None

    def basis_vector(self, label: int) -> np.ndarray:
        e = np.zeros(self.dim_m, dtype=complex)
        e[self.index(label)] = 1.0
        return e

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim_m, dtype=complex)

    def scale_norm(self, x, tau: float) -> float | np.ndarray:
        """(sum_i a_i^tau |x_i|^2)^(1/2); broadcasts over leading axes."""
        x = np.asarray(x)
        return np.sqrt(np.sum(self.a_weights**tau * np.abs(x) ** 2, axis=-1))

    def inner(self, y, x, tau: float = 0.0):
        """<y, x>_tau, conjugate-linear in ``y``."""
        return np.sum(self.a_weights**tau * np.conj(y) * x, axis=-1)

    def free_propagate(self, x, t: float) -> np.ndarray:
        """Coordinatewise (U(t)x)_k = exp(-i t omega_k) x_k."""
        return np.exp(-1j * t * self.omega) * np.asarray(x, dtype=complex)

    def describe(self) -> dict:
        return {"mode_labels": list(self.mode_labels), "s": self.s, "sigma": self.sigma}


def as_state(x, space: ModelSpace) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != space.dim_m:
        raise ValueError(f"state has {x.shape[-1]} coordinates, space has {space.dim_m}")
    return x

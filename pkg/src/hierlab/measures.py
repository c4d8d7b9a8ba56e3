"""Atomic U(1)-invariant probability measures on the closed unit ball.

An ``AtomicMeasure`` stores orbit representatives: atom i stands for the
uniform distribution on the circle {e^{i theta} x_i}.  Every functional below is
either gauge invariant by construction or averaged over the circle with an
N_theta-point trapezoid rule, which is spectrally accurate for these periodic
integrands.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

N_THETA = 32
BALL_SLACK = 1e-12


@dataclass(frozen=True)
class AtomicMeasure:
    weights: np.ndarray
    points: np.ndarray  # (n_atoms, m)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        x = np.asarray(self.points, dtype=complex)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[0] != w.size:
            raise ValueError(f"{w.size} weights for points of shape {x.shape}")
        if np.any(w < 0):
            raise ValueError("negative atom weight")
        keep = w > 0
        w, x = w[keep], x[keep]
        if w.size == 0:
            raise ValueError("measure has no atoms with positive weight")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, not 1")
        w = w / total
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms > 1.0 + BALL_SLACK):
            raise ContractViolation(f"atom outside the unit ball (norm {norms.max():.15g})")
        w.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", x)

    @classmethod
    def dirac(cls, x) -> "AtomicMeasure":
        return cls(np.ones(1), np.asarray(x, dtype=complex)[None, :])

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    @property
    def dim_m(self) -> int:
        return self.points.shape[1]

    def rotated(self, phases) -> "AtomicMeasure":
        """Same measure, atoms presented with different orbit representatives."""
        phases = np.broadcast_to(np.asarray(phases, dtype=float), (self.n_atoms,))
        return AtomicMeasure(self.weights, np.exp(1j * phases)[:, None] * self.points)

    def permuted(self, order) -> "AtomicMeasure":
        order = np.asarray(order)
        return AtomicMeasure(self.weights[order], self.points[order])

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"w": float(w), "re": x.real.tolist(), "im": x.imag.tolist()}
                for w, x in zip(self.weights, self.points)
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "AtomicMeasure":
        atoms = data["atoms"]
        w = [a["w"] for a in atoms]
        x = [np.asarray(a["re"]) + 1j * np.asarray(a["im"]) for a in atoms]
        return cls(np.asarray(w), np.asarray(x))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def mix(mu: AtomicMeasure, nu: AtomicMeasure, t: float) -> AtomicMeasure:
    """t mu + (1-t) nu."""
    w = np.concatenate([t * mu.weights, (1 - t) * nu.weights])
    return AtomicMeasure(w, np.vstack([mu.points, nu.points]))


def overlaps(mu: AtomicMeasure, y) -> np.ndarray:
    """<y, x_i> for each atom; ``y`` may be a stack of test vectors (n_y, m)."""
    y = np.asarray(y, dtype=complex)
    return np.conj(y) @ mu.points.T


def moment(mu: AtomicMeasure, y, k: int):
    """sum_i w_i |<y, x_i>|^{2k}; vectorized over a stack of y."""
    return np.abs(overlaps(mu, y)) ** (2 * k) @ mu.weights


def gauge_angles(n_theta: int = N_THETA) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def orbit_points(mu: AtomicMeasure, n_theta: int = N_THETA) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes of the orbit average: points (n_atoms, n_theta, m) and weights (n_atoms, n_theta)."""
    ph = np.exp(1j * gauge_angles(n_theta))
    pts = ph[None, :, None] * mu.points[:, None, :]
    w = np.repeat(mu.weights[:, None] / n_theta, n_theta, axis=1)
    return pts, w


def characteristic(mu: AtomicMeasure, y, n_theta: int = N_THETA):
    """mu(exp(2 i pi Re<y, .>)) with gauge quadrature; vectorized over a stack of y."""
    r = overlaps(mu, y)  # (..., n_atoms)
    ph = np.exp(1j * gauge_angles(n_theta))
    vals = np.exp(2j * np.pi * np.real(r[..., None] * ph)).mean(axis=-1)
    return vals @ mu.weights


def characteristic_series(mu: AtomicMeasure, y, k_max: int = 25):
    """Partial sum of sum_k (-1)^k pi^{2k} / (k!)^2 moment_k."""
    total = 0.0
    coef = 1.0
    for k in range(k_max + 1):
        if k:
            coef *= -(np.pi**2) / (k * k)
        total = total + coef * moment(mu, y, k)
    return total


def gauge_guard(mu: AtomicMeasure, y, n_theta: int = N_THETA) -> float:
    """Change of the characteristic functional when N_theta doubles."""
    return float(np.max(np.abs(characteristic(mu, y, 2 * n_theta) - characteristic(mu, y, n_theta))))


def check_equivariance(f, points, n_samples: int = 3, tol: float = 1e-10, seed: int = 0) -> float:
    """max |f(e^{i theta} x) - e^{i theta} f(x)| over sampled phases; raises above tol."""
    rng = np.random.default_rng(seed)
    x = np.asarray(points, dtype=complex)
    fx = np.asarray(f(x))
    worst = 0.0
    scale = max(1.0, float(np.max(np.abs(fx), initial=0.0)))
    for theta in rng.uniform(0, 2 * np.pi, n_samples):
        ph = np.exp(1j * theta)
        worst = max(worst, float(np.max(np.abs(f(ph * x) - ph * fx), initial=0.0)))
    if worst > tol * scale:
        raise ContractViolation(f"map is not U(1)-equivariant (defect {worst:.3e})")
    return worst


def pushforward(mu: AtomicMeasure, f, check: bool = True) -> AtomicMeasure:
    """Atoms (w_i, f(x_i)); ``f`` maps a stack of points to a stack of points."""
    if check:
        check_equivariance(f, mu.points)
    return AtomicMeasure(mu.weights, np.asarray(f(mu.points), dtype=complex))


def weak_narrow_defect(mu: AtomicMeasure, nu: AtomicMeasure, test_set, k_max: int) -> float:
    """max over y and k <= k_max of |moment(mu,y,k) - moment(nu,y,k)|."""
    Y = np.atleast_2d(np.asarray(test_set, dtype=complex))
    if Y.shape[0] == 0:
        raise ValueError("empty test set")
    return float(max(np.max(np.abs(moment(mu, Y, k) - moment(nu, Y, k))) for k in range(1, k_max + 1)))


def tightness_defect(mu: AtomicMeasure, N: int, eps: float) -> float:
    """Weight of atoms whose tail energy sum_{i >= N} |x_i|^2 is >= eps (0-based basis positions)."""
    if not 1 <= N <= mu.dim_m:
        raise ValueError(f"N={N} outside 1..{mu.dim_m}")
    tail = np.sum(np.abs(mu.points[:, N:]) ** 2, axis=1)
    return float(mu.weights[tail >= eps].sum())

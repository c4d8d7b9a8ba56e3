"""Hierarchy operators C+-, the residual of the integrated hierarchy equation,
the (A1) bound, and the kernel form B+- of the interaction term.

Pairing convention: inner products are conjugate-linear in the bra slot, so
C+_{j,k} = sum_i w_i |x_i^k><x_i^{j-1} (x) v(t,x_i) (x) x_i^{k-j}| and
C-_{j,k} = (C+_{j,k})^*.  The bra vector is not symmetric; the canonical path
builds it on the full tensor product and compresses with J^*.  After that
compression every j gives the same operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .definetti import Hierarchy, phi
from .dynamics import Nonlinearity, VectorField
from .measures import AtomicMeasure
from .quadrature import simpson_cumulative, uniform_step
from .space import ModelSpace
from .symtensor import (
    DEFAULT_K_MAX,
    SymOperator,
    annihilators,
    isometry,
    partial_trace_full,
    pure_tensor,
    pure_tensor_full,
    trace_norm,
    weight_operator,
    weighted_trace_norm,
)


@dataclass
class HierarchyTrajectory:
    times: np.ndarray
    hierarchies: list
    measures: list
    R_bound: float

    @classmethod
    def from_measures(cls, times, measures, K_max: int, R_bound: float, k_max_cap: int = DEFAULT_K_MAX):
        hs = [phi(mu, K_max, k_max_cap) for mu in measures]
        return cls(np.asarray(times, dtype=float), hs, list(measures), float(R_bound))

    @property
    def K_max(self) -> int:
        return self.hierarchies[0].K_max


def _check_indices(j: int, k: int):
    if not 1 <= j <= k:
        raise IndexError(f"need 1 <= j <= k, got j={j}, k={k}")


def bra_vectors(points, velocities, k: int) -> np.ndarray:
    """J^*(x^{j-1} (x) v (x) x^{k-j}) for a stack of atoms; independent of j.

    Equals k^{-1/2} sum_l v_l a_l^* applied to the (k-1)-boson pure tensor of x.
    """
    points = np.atleast_2d(points)
    velocities = np.atleast_2d(velocities)
    m = points.shape[-1]
    base = pure_tensor(points, k - 1, max(k, DEFAULT_K_MAX))  # (n, D_{k-1})
    ops = annihilators(m, k - 1)  # each D_{k-1} x D_k
    out = np.zeros((points.shape[0], ops[0].shape[1]), dtype=complex)
    for l, A in enumerate(ops):
        out += velocities[:, l : l + 1] * (base @ A)
    return out / np.sqrt(k)


def c_plus(mu: AtomicMeasure, t: float, j: int, k: int, vf: VectorField) -> SymOperator:
    _check_indices(j, k)
    v = vf(t, mu.points)
    kets = pure_tensor(mu.points, k, max(k, DEFAULT_K_MAX))
    bras = bra_vectors(mu.points, v, k)
    M = (kets.T * mu.weights) @ bras.conj()
    return SymOperator(k, mu.dim_m, M, hermitian=False)


def c_minus(mu: AtomicMeasure, t: float, j: int, k: int, vf: VectorField) -> SymOperator:
    return c_plus(mu, t, j, k, vf).adjoint()


def c_plus_full(mu: AtomicMeasure, t: float, j: int, k: int, vf: VectorField) -> np.ndarray:
    """C+_{j,k} on the full tensor product, before compression (oracle path)."""
    _check_indices(j, k)
    v = vf(t, mu.points)
    m = mu.dim_m
    M = np.zeros((m**k, m**k), dtype=complex)
    for w, x, vx in zip(mu.weights, mu.points, v):
        ket = pure_tensor_full(x, k)
        bra = np.kron(np.kron(pure_tensor_full(x, j - 1), vx), pure_tensor_full(x, k - j))
        M += w * np.outer(ket, bra.conj())
    return M


def c_plus_canonical(mu: AtomicMeasure, t: float, j: int, k: int, vf: VectorField) -> SymOperator:
    J = isometry(mu.dim_m, k)
    return SymOperator(k, mu.dim_m, J.T @ c_plus_full(mu, t, j, k, vf) @ J, hermitian=False)


def generator(mu: AtomicMeasure, t: float, k: int, vf: VectorField) -> np.ndarray:
    """sum_j (C+_{j,k} + C-_{j,k}) as a matrix on the k-boson space."""
    C = c_plus(mu, t, 1, k, vf).matrix
    return k * (C + C.conj().T)


@dataclass
class ResidualCurve:
    times: np.ndarray
    values: np.ndarray
    k: int

    @property
    def max(self) -> float:
        return float(np.max(self.values, initial=0.0))


def hierarchy_residual(traj: HierarchyTrajectory, vf: VectorField, k: int, a_weights, sigma: float = 1.0) -> ResidualCurve:
    """|| A^{-sigma/2}-weighted [gamma_t - gamma_t0 - int sum_j (C+ + C-)] ||_1 at the even grid points."""
    h = uniform_step(traj.times)
    if not 1 <= k <= traj.K_max:
        raise IndexError(f"k={k} outside 1..{traj.K_max}")
    G = np.array([generator(mu, t, k, vf) for t, mu in zip(traj.times, traj.measures)])
    idx, integral = simpson_cumulative(G, h)
    g0 = traj.hierarchies[0][k]
    vals = []
    for n, I in zip(idx, integral):
        gt = traj.hierarchies[n][k]
        diff = SymOperator(k, g0.m, gt.matrix - g0.matrix - I, hermitian=False)
        vals.append(trace_norm(weight_operator(diff, a_weights, -sigma)))
    return ResidualCurve(traj.times[idx], np.asarray(vals), k)


def integrand_hermiticity(mu: AtomicMeasure, t: float, k: int, vf: VectorField) -> float:
    G = generator(mu, t, k, vf)
    return float(np.max(np.abs(G - G.conj().T)))


# kernel form


def pair_potential_full(space: ModelSpace, vhat: Nonlinearity) -> np.ndarray:
    """Two-particle multiplication operator V(x_1 - x_2) on C^m (x) C^m.

    <e_{k+q} e_{p-q} | V | e_k e_p> = Vhat_q, modes leaving the cutoff dropped.
    """
    labels = space.mode_labels
    pos = {lab: i for i, lab in enumerate(labels)}
    m = len(labels)
    V = np.zeros((m * m, m * m))
    for a, ka in enumerate(labels):
        for b, kb in enumerate(labels):
            for kc in labels:
                q = kc - ka
                d = pos.get(kb - q)
                if d is not None:
                    V[pos[kc] * m + d, a * m + b] += vhat.coefficient(q)
    return V


def _two_body_on(V2: np.ndarray, m: int, n_factors: int, i: int, j: int) -> np.ndarray:
    """Embed a two-body operator acting on factors i < j (1-based) of an n-fold product."""
    n = m**n_factors
    T = V2.reshape(m, m, m, m)
    eye = np.eye(n).reshape((m,) * n_factors + (n,))
    # apply T to axes (i-1, j-1) of every basis column
    out = np.tensordot(T, eye, axes=([2, 3], [i - 1, j - 1]))
    out = np.moveaxis(out, [0, 1], [i - 1, j - 1])
    return out.reshape(n, n)


def b_plus_full(gamma_kp1: SymOperator, space: ModelSpace, nl: Nonlinearity, j: int, k: int) -> np.ndarray:
    """Tr_{k+1}[V_{j,k+1} gamma^(k+1)] on the full k-fold tensor product."""
    _check_indices(j, k)
    if gamma_kp1.k != k + 1:
        raise ValueError("need the (k+1)-particle component")
    m = space.dim_m
    J = isometry(m, k + 1)
    full = J @ gamma_kp1.matrix @ J.T
    V = _two_body_on(pair_potential_full(space, nl), m, k + 1, j, k + 1)
    return partial_trace_full(V @ full, m, k + 1)


def kernel_correspondence_check(mu: AtomicMeasure, space: ModelSpace, nl: Nonlinearity, j: int, k: int) -> dict:
    """Compare the kernel form B+-_{j,k} with the C construction at t = 0.

    With g placed in the ket slot, B+ = i C-_{j,k} and B- = (B+)^* = -i C+_{j,k}.
    Defects are trace norms, both on the full product and after compression.
    """
    gamma = phi(mu, k + 1, max(k + 1, DEFAULT_K_MAX))[k + 1]
    vf = VectorField.nls(space, nl)
    Bp = b_plus_full(gamma, space, nl, j, k)
    Cp = c_plus_full(mu, 0.0, j, k, vf)
    Cm = Cp.conj().T
    J = isometry(space.dim_m, k)
    full_plus = trace_norm(Bp - 1j * Cm)
    full_minus = trace_norm(Bp.conj().T + 1j * Cp)
    comp_plus = trace_norm(J.T @ (Bp - 1j * Cm) @ J)
    comp_fast = trace_norm(J.T @ Bp @ J - 1j * c_minus(mu, 0.0, j, k, vf).matrix)
    return {
        "j": j,
        "k": k,
        "defect_plus": full_plus,
        "defect_minus": full_minus,
        "defect_compressed": comp_plus,
        "defect_fast_path": comp_fast,
        "defect": max(full_plus, full_minus, comp_plus, comp_fast),
        "norm_b_plus": trace_norm(Bp),
    }


def a1_check(traj: HierarchyTrajectory, s: float, R: float, a_weights, slack: float = 1e-9) -> tuple[bool, dict]:
    """weighted_trace_norm(gamma_t^(k), s)^{1/2k} <= R (1 + slack) for all t and k."""
    worst = 0.0
    for h in traj.hierarchies:
        for k in range(1, h.K_max + 1):
            val = weighted_trace_norm(h[k], a_weights, s)
            worst = max(worst, val ** (1.0 / (2 * k)) / R)
    a = np.asarray(a_weights, dtype=float)
    atom_worst = max(float(np.max(np.sqrt(np.sum(a**s * np.abs(mu.points) ** 2, axis=1)))) for mu in traj.measures) / R
    ok = worst <= 1.0 + slack
    return ok, {"worst_ratio": worst, "atom_ratio": atom_worst, "atoms_within": atom_worst <= 1.0 + slack}


def combinatorial_identity(k: int) -> tuple[int, int]:
    """(2k C(2k-1, k), k C(2k, k)); equal for every k >= 1."""
    from math import comb

    return 2 * k * comb(2 * k - 1, k), k * comb(2 * k, k)

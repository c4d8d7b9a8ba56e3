"""Bosonic n-body model on the mode truncation, exact evolution, reduced density
matrices, the BBGKY residual, and the propagation-of-chaos table.

The n-particle sector is the symmetric space with the colex occupation basis of
``symtensor``.  The Hamiltonian is

    H = sum_k omega_k a_k^* a_k + (1/2n) sum_{k,p,q} W_q a_{k+q}^* a_{p-q}^* a_p a_k

with momenta outside the cutoff dropped, and states evolve by exp(-itH).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Nonlinearity, VectorField, flow
from .errors import CapacityError
from .hierarchy import _two_body_on, pair_potential_full
from .space import ModelSpace
from .symtensor import (
    SymOperator,
    _exponents,
    annihilators,
    isometry,
    occupation_basis,
    partial_trace_full,
    sym_dim,
    trace_norm,
)

DIM_CAP = 500


def _check_dim(m: int, n: int, cap: int = DIM_CAP) -> int:
    D = sym_dim(m, n)
    if D > cap:
        raise CapacityError(f"n={n}, m={m} gives dimension {D} > cap {cap}")
    return D


@dataclass
class NBodyHamiltonian:
    matrix: np.ndarray
    n: int
    space: ModelSpace
    nl: Nonlinearity
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def eig(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(self.matrix)
        return self._eig


def _pair_annihilator(m: int, n: int, k: int, p: int) -> np.ndarray:
    """a_p a_k from the n- to the (n-2)-particle sector."""
    return annihilators(m, n - 2)[p] @ annihilators(m, n - 1)[k]


def build_hamiltonian(space: ModelSpace, nl: Nonlinearity, n: int, cap: int = DIM_CAP) -> NBodyHamiltonian:
    m = space.dim_m
    _check_dim(m, n, cap)
    basis = np.asarray(occupation_basis(m, n), dtype=float).reshape(-1, m)
    H = np.diag(basis @ space.omega).astype(complex)
    if n >= 2 and nl.kind != "zero":
        labels = space.mode_labels
        pos = {lab: i for i, lab in enumerate(labels)}
        pairs = {}

        def pair(k, p):
            if (k, p) not in pairs:
                pairs[(k, p)] = _pair_annihilator(m, n, k, p)
            return pairs[(k, p)]

        for k, lk in enumerate(labels):
            for p, lp in enumerate(labels):
                for lq in range(-2 * max(map(abs, labels)) - 1, 2 * max(map(abs, labels)) + 2):
                    w = nl.coefficient(lq)
                    k2, p2 = pos.get(lk + lq), pos.get(lp - lq)
                    if w == 0.0 or k2 is None or p2 is None:
                        continue
                    H += (w / (2.0 * n)) * (pair(k2, p2).T @ pair(k, p))
    herm = np.max(np.abs(H - H.conj().T))
    if herm > 1e-12 * max(1.0, np.abs(H).max()):
        raise AssertionError(f"Hamiltonian not Hermitian ({herm:.2e})")
    return NBodyHamiltonian(0.5 * (H + H.conj().T), n, space, nl)


def product_state(phi, n: int) -> np.ndarray:
    """Occupation coordinates of phi^{(x)n} (no particle-number capacity check)."""
    phi = np.asarray(phi, dtype=complex)
    alphas, coef = _exponents(phi.size, n)
    return coef * np.prod(phi ** alphas, axis=-1)


def evolve(psi, H: NBodyHamiltonian, t: float) -> np.ndarray:
    """exp(-itH) psi by spectral calculus."""
    E, V = H.eig
    return V @ (np.exp(-1j * t * E) * (V.conj().T @ np.asarray(psi, dtype=complex)))


def evolve_many(psi, H: NBodyHamiltonian, times) -> np.ndarray:
    E, V = H.eig
    c = V.conj().T @ np.asarray(psi, dtype=complex)
    ph = np.exp(-1j * np.outer(np.asarray(times, dtype=float), E))
    return (ph * c) @ V.T


def _lowering(m: int, n: int, k: int) -> np.ndarray:
    """Stack of a^beta / sqrt(beta!) for |beta| = k, shape (D_k, D_{n-k}, D_n)."""
    out = []
    for beta in occupation_basis(m, k):
        M = np.eye(sym_dim(m, n))
        level = n
        for l, b in enumerate(beta):
            for _ in range(b):
                M = annihilators(m, level - 1)[l] @ M
                level -= 1
        out.append(M / math.sqrt(math.prod(math.factorial(b) for b in beta)))
    return np.asarray(out)


def marginal(psi, m: int, n: int, k: int) -> SymOperator:
    """k-particle reduced density matrix, trace one.

    <beta|gamma|alpha> = <Psi| a^*alpha a^beta |Psi> / (C(n,k) sqrt(alpha! beta!)).
    ``psi`` is a state vector or a density matrix on the n-particle sector.
    """
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    L = _lowering(m, n, k)
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 1:
        Phi = L @ psi  # (D_k, D_{n-k})
        G = Phi @ Phi.conj().T
    else:
        G = np.einsum("bcn,nr,acr->ba", L, psi, L.conj())
    return SymOperator(k, m, G / math.comb(n, k))


def marginal_brute(psi, m: int, n: int, k: int) -> SymOperator:
    """Oracle: embed in the full product, trace out the last n-k factors, compress."""
    J = isometry(m, n)
    full = J @ np.asarray(psi, dtype=complex)
    rho = np.outer(full, full.conj())
    for r in range(n, k, -1):
        rho = partial_trace_full(rho, m, r)
    Jk = isometry(m, k)
    return SymOperator(k, m, Jk.T @ rho @ Jk)


def _one_body_full(space: ModelSpace, k: int) -> np.ndarray:
    m = space.dim_m
    h = np.zeros(m**k)
    grid = np.indices((m,) * k).reshape(k, -1)
    for f in range(k):
        h += space.omega[grid[f]]
    return np.diag(h)


def bbgky_rhs(gamma_k: SymOperator, gamma_kp1: SymOperator, space: ModelSpace, nl: Nonlinearity, n: int) -> np.ndarray:
    """d/dt gamma^(k) predicted by the BBGKY hierarchy, on the k-boson space.

    -i [H0, g_k] - (i/n) sum_{i<j<=k} [W_ij, g_k] - i (n-k)/n sum_j Tr_{k+1}[W_{j,k+1}, g_{k+1}]
    """
    m = space.dim_m
    k = gamma_k.k
    Jk, Jk1 = isometry(m, k), isometry(m, k + 1)
    gk = Jk @ gamma_k.matrix @ Jk.T
    gk1 = Jk1 @ gamma_kp1.matrix @ Jk1.T
    W2 = pair_potential_full(space, nl)
    H0 = _one_body_full(space, k)
    out = -1j * (H0 @ gk - gk @ H0)
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            W = _two_body_on(W2, m, k, i, j)
            out += (-1j / n) * (W @ gk - gk @ W)
    for j in range(1, k + 1):
        W = _two_body_on(W2, m, k + 1, j, k + 1)
        out += (-1j * (n - k) / n) * partial_trace_full(W @ gk1 - gk1 @ W, m, k + 1)
    return Jk.T @ out @ Jk


def bbgky_residual(psi0, H: NBodyHamiltonian, k: int, times) -> np.ndarray:
    """Trace-norm gap between the centered difference of gamma^(k) and the BBGKY right side.

    ``times`` is a uniform grid; the residual is returned at interior points.
    """
    n = H.n
    if k + 1 > n:
        raise ValueError(f"BBGKY residual needs k + 1 <= n (k={k}, n={n})")
    m = H.space.dim_m
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    states = evolve_many(psi0, H, times)
    gam = [marginal(s, m, n, k) for s in states]
    out = []
    for i in range(1, times.size - 1):
        deriv = (gam[i + 1].matrix - gam[i - 1].matrix) / (2 * dt)
        rhs = bbgky_rhs(gam[i], marginal(states[i], m, n, k + 1), H.space, H.nl, n)
        out.append(trace_norm(deriv - rhs))
    return np.asarray(out)


def mean_field(phi0, space: ModelSpace, nl: Nonlinearity, t1: float, dt: float = 1e-4) -> np.ndarray:
    """phi_t1 = U(t1) x(t1), x the interaction-picture solution."""
    if t1 == 0:
        return np.asarray(phi0, dtype=complex)
    res = flow(phi0, 0.0, t1, VectorField.nls(space, nl), min(dt, t1))
    return space.free_propagate(res.final, t1)


def chaos_experiment(phi0, space: ModelSpace, nl: Nonlinearity, n_list, t1: float, k: int = 1,
                     timings: bool = False, cap: int = DIM_CAP) -> list[dict]:
    """epsilon_k(n) = || gamma_n^(k)(t1) - |phi_t1^k><phi_t1^k| ||_1 for each n."""
    phi0 = np.asarray(phi0, dtype=complex)
    for n in n_list:
        _check_dim(space.dim_m, n, cap)
    phit = mean_field(phi0, space, nl, t1)
    ref = product_state(phit, k)
    ref_op = np.outer(ref, ref.conj())
    rows = []
    for n in n_list:
        start = time.perf_counter()
        H = build_hamiltonian(space, nl, n, cap)
        psi = evolve(product_state(phi0, n), H, t1)
        g = marginal(psi, space.dim_m, n, k)
        eps = trace_norm(g.matrix - ref_op)
        row = {"n": int(n), "k": int(k), "epsilon": eps}
        row["runtime_ms"] = (time.perf_counter() - start) * 1e3 if timings else None
        rows.append(row)
    return rows


def energy_expectation(psi, H: NBodyHamiltonian) -> float:
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ H.matrix @ psi))

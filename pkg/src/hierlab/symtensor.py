"""Symmetric tensor algebra on the k-boson space over C^m.

Basis of the symmetric subspace: occupation tuples alpha (sum alpha = k) in
colexicographic order, i.e. sorted by the reversed tuple.  The basis vector for
alpha is the normalized symmetrization of e_{i_1} x ... x e_{i_k}.

Two paths are kept side by side.  The canonical one embeds into the full tensor
product through the isometry J, works there, and compresses back with J^*.  The
occupation path uses ladder operators and is checked against the canonical one.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError

DEFAULT_K_MAX = 4
HARD_K_MAX = 6


def check_capacity(k: int, k_max: int = DEFAULT_K_MAX) -> None:
    if k < 0:
        raise ValueError("particle number must be nonnegative")
    if k_max > HARD_K_MAX:
        raise CapacityError(f"K_max={k_max} exceeds hard limit {HARD_K_MAX}")
    if k > k_max:
        raise CapacityError(f"k={k} exceeds K_max={k_max}")


def _count(word, m: int) -> tuple[int, ...]:
    out = [0] * m
    for i in word:
        out[i] += 1
    return tuple(out)


@lru_cache(maxsize=None)
def occupation_basis(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All occupation tuples of length m summing to k, colex order."""
    combos = itertools.combinations_with_replacement(range(m), k)
    alphas = {_count(c, m) for c in combos}
    return tuple(sorted(alphas, key=lambda a: a[::-1]))


@lru_cache(maxsize=None)
def _basis_index(m: int, k: int) -> dict:
    return {a: i for i, a in enumerate(occupation_basis(m, k))}


def sym_dim(m: int, k: int) -> int:
    return math.comb(m + k - 1, k)


def multinomial(alpha) -> int:
    out = math.factorial(sum(alpha))
    for a in alpha:
        out //= math.factorial(a)
    return out


@lru_cache(maxsize=None)
def _isometry(m: int, k: int) -> np.ndarray:
    basis = occupation_basis(m, k)
    index = _basis_index(m, k)
    J = np.zeros((m**k, len(basis)))
    for flat, word in enumerate(itertools.product(range(m), repeat=k)):
        alpha = _count(word, m)
        col = index[alpha]
        J[flat, col] = 1.0 / math.sqrt(multinomial(alpha))
    J.setflags(write=False)
    return J


def isometry(m: int, k: int) -> np.ndarray:
    """J: symmetric occupation basis -> full tensor product (row index = word, first factor slowest)."""
    return _isometry(m, k)


@lru_cache(maxsize=None)
def _symmetrizer(m: int, k: int) -> np.ndarray:
    n = m**k
    S = np.zeros((n, n))
    eye = np.eye(n).reshape((m,) * k + (n,))
    for perm in itertools.permutations(range(k)):
        S += np.transpose(eye, perm + (k,)).reshape(n, n)
    S /= math.factorial(k)
    S.setflags(write=False)
    return S


def symmetrizer(m: int, k: int) -> np.ndarray:
    """S_k = (1/k!) sum over permutations of the factors, on the full tensor space."""
    return _symmetrizer(m, k)


@lru_cache(maxsize=None)
def _ladder(m: int, k: int) -> tuple[np.ndarray, ...]:
    """Annihilators a_l as (D_k x D_{k+1}) matrices, a_l|alpha> = sqrt(alpha_l)|alpha - e_l>."""
    src = occupation_basis(m, k + 1)
    dst = _basis_index(m, k)
    ops = []
    for l in range(m):
        A = np.zeros((len(dst), len(src)))
        for j, alpha in enumerate(src):
            if alpha[l]:
                beta = list(alpha)
                beta[l] -= 1
                A[dst[tuple(beta)], j] = math.sqrt(alpha[l])
        A.setflags(write=False)
        ops.append(A)
    return tuple(ops)


def annihilators(m: int, k: int) -> tuple[np.ndarray, ...]:
    """Ladder operators mapping the (k+1)-boson space to the k-boson space."""
    return _ladder(m, k)


@dataclass(frozen=True)
class SymOperator:
    """Dense operator on the k-boson space, matrix in the colex occupation basis."""

    k: int
    m: int
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        D = sym_dim(self.m, self.k)
        if M.shape != (D, D):
            raise ValueError(f"matrix shape {M.shape} does not match dim {D} of k={self.k}, m={self.m}")
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return np.trace(self.matrix)

    def __add__(self, other: "SymOperator") -> "SymOperator":
        _check_same(self, other)
        return SymOperator(self.k, self.m, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other: "SymOperator") -> "SymOperator":
        _check_same(self, other)
        return SymOperator(self.k, self.m, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def scaled(self, c) -> "SymOperator":
        return SymOperator(self.k, self.m, c * self.matrix, self.hermitian and np.isreal(c))

    def adjoint(self) -> "SymOperator":
        return SymOperator(self.k, self.m, self.matrix.conj().T, self.hermitian)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "dim": self.dim,
            "basis": [list(a) for a in occupation_basis(self.m, self.k)],
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymOperator":
        basis = data["basis"]
        m = len(basis[0])
        M = np.asarray(data["re"]) + 1j * np.asarray(data["im"])
        return cls(int(data["k"]), m, M)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _check_same(a: SymOperator, b: SymOperator):
    if (a.k, a.m) != (b.k, b.m):
        raise ValueError(f"operators on different spaces: (k={a.k}, m={a.m}) vs (k={b.k}, m={b.m})")


def zero_operator(m: int, k: int) -> SymOperator:
    D = sym_dim(m, k)
    return SymOperator(k, m, np.zeros((D, D), dtype=complex))


@lru_cache(maxsize=None)
def _exponents(m: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    basis = np.asarray(occupation_basis(m, k), dtype=int).reshape(-1, m)
    coef = np.sqrt([multinomial(a) for a in basis])
    return basis, coef


def pure_tensor(x, k: int, k_max: int = DEFAULT_K_MAX) -> np.ndarray:
    """Occupation coordinates of x^{(x)k}: sqrt(k!/alpha!) prod x_j^alpha_j.

    ``x`` may carry leading batch axes; the output replaces the last axis.
    """
    check_capacity(k, k_max)
    x = np.asarray(x, dtype=complex)
    m = x.shape[-1]
    alphas, coef = _exponents(m, k)
    powers = np.prod(x[..., None, :] ** alphas, axis=-1)
    return coef * powers


def pure_tensor_full(x, k: int) -> np.ndarray:
    """x^{(x)k} on the full tensor product (oracle path)."""
    x = np.asarray(x, dtype=complex)
    out = np.ones(1, dtype=complex)
    for _ in range(k):
        out = np.kron(out, x)
    return out


def rank_one_projector(x, k: int, k_max: int = DEFAULT_K_MAX) -> SymOperator:
    """|x^k><x^k| on the k-boson space."""
    v = pure_tensor(x, k, k_max)
    return SymOperator(k, np.asarray(x).shape[-1], np.outer(v, v.conj()))


def mixture(weights, points, k: int, k_max: int = DEFAULT_K_MAX) -> SymOperator:
    """sum_i w_i |x_i^k><x_i^k| with index-ordered reduction."""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    V = pure_tensor(points, k, k_max)
    w = np.asarray(weights, dtype=float)
    M = (V.T * w) @ V.conj()
    return SymOperator(k, points.shape[-1], M)


def embed(gamma: SymOperator) -> np.ndarray:
    """J gamma J^* on the full tensor product."""
    J = isometry(gamma.m, gamma.k)
    return J @ gamma.matrix @ J.T


def compress(M: np.ndarray, m: int, k: int) -> SymOperator:
    """J^* M J for an operator M on the full k-fold tensor product."""
    J = isometry(m, k)
    return SymOperator(k, m, J.T @ M @ J, hermitian=False)


def partial_trace_full(M: np.ndarray, m: int, n_factors: int) -> np.ndarray:
    """Trace of the last factor of an operator on the n-fold tensor product."""
    rest = m ** (n_factors - 1)
    T = M.reshape(rest, m, rest, m)
    return np.einsum("aibi->ab", T)


def partial_trace(gamma: SymOperator, k_max: int = DEFAULT_K_MAX) -> SymOperator:
    """Tr_{k+1} on the symmetric subspace, canonical full-tensor path."""
    kp1 = gamma.k
    if kp1 < 1:
        raise ValueError("partial trace needs at least one particle")
    check_capacity(kp1, k_max)
    red = partial_trace_full(embed(gamma), gamma.m, kp1)
    out = compress(red, gamma.m, kp1 - 1)
    return SymOperator(out.k, out.m, out.matrix, gamma.hermitian)


def partial_trace_fast(gamma: SymOperator) -> SymOperator:
    """Occupation-basis partial trace, (1/(k+1)) sum_l a_l gamma a_l^*."""
    kp1 = gamma.k
    if kp1 < 1:
        raise ValueError("partial trace needs at least one particle")
    ops = annihilators(gamma.m, kp1 - 1)
    D = sym_dim(gamma.m, kp1 - 1)
    acc = np.zeros((D, D), dtype=complex)
    for A in ops:
        acc += A @ gamma.matrix @ A.T
    return SymOperator(kp1 - 1, gamma.m, acc / kp1, gamma.hermitian)


def trace_norm(M) -> float:
    """Sum of singular values."""
    if isinstance(M, SymOperator):
        M = M.matrix
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def occupation_weights(a_weights, k: int, tau: float) -> np.ndarray:
    """prod_j a_j^(tau alpha_j / 2) on the occupation basis."""
    a = np.asarray(a_weights, dtype=float)
    alphas, _ = _exponents(len(a), k)
    return np.prod(a ** (0.5 * tau * alphas), axis=-1)


def weight_operator(gamma: SymOperator, a_weights, tau: float) -> np.ndarray:
    w = occupation_weights(a_weights, gamma.k, tau)
    return w[:, None] * gamma.matrix * w[None, :]


def weighted_trace_norm(gamma: SymOperator, a_weights, tau: float) -> float:
    """|| (A^{tau/2})^{(x)k} gamma (A^{tau/2})^{(x)k} ||_1."""
    return trace_norm(weight_operator(gamma, a_weights, tau))

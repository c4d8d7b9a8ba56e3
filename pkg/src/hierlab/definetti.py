"""The map from measures to hierarchies, its structural checks, the sphere lifting
x -> Psi_n(x), and weak-*/trace-norm topology experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .measures import AtomicMeasure
from .rng import STREAM_COMPACTS, DEFAULT_SEED, complex_normal, make_rng
from .symtensor import (
    DEFAULT_K_MAX,
    SymOperator,
    check_capacity,
    isometry,
    mixture,
    occupation_basis,
    partial_trace,
    pure_tensor,
    sym_dim,
    trace_norm,
)

TOL = 1e-10


@dataclass(frozen=True)
class Hierarchy:
    """Components gamma^(1..K_max) on the k-boson spaces over C^m."""

    components: tuple[SymOperator, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        for k, g in enumerate(comps, start=1):
            if g.k != k:
                raise ValueError(f"component {k} has particle number {g.k}")
        object.__setattr__(self, "components", comps)

    @property
    def K_max(self) -> int:
        return len(self.components)

    @property
    def m(self) -> int:
        return self.components[0].m

    def __getitem__(self, k: int) -> SymOperator:
        if not 1 <= k <= self.K_max:
            raise IndexError(f"k={k} outside 1..{self.K_max}")
        return self.components[k - 1]

    def traces(self) -> list[float]:
        return [float(np.real(g.trace())) for g in self.components]

    def structure_defects(self) -> dict:
        """Hermiticity, spectrum in [0, 1], and invariance under the symmetrizer."""
        herm, lo, hi, sym = 0.0, 0.0, 0.0, 0.0
        for g in self.components:
            herm = max(herm, g.hermiticity_defect())
            ev = np.linalg.eigvalsh(0.5 * (g.matrix + g.matrix.conj().T))
            lo = max(lo, float(-ev.min()))
            hi = max(hi, float(ev.max() - 1.0))
            J = isometry(g.m, g.k)
            full = J @ g.matrix @ J.T
            # the symmetric subspace is the range of J J^*, so S full S = full there
            P = J @ J.T
            sym = max(sym, float(np.max(np.abs(P @ full @ P - full))))
        return {"hermiticity": herm, "negativity": lo, "excess_over_one": hi, "symmetry": sym}

    def to_json(self, model: dict | None = None) -> str:
        return json.dumps({"K_max": self.K_max, "model": model or {}, "components": [g.to_json() for g in self.components]})


def phi(mu: AtomicMeasure, K_max: int, k_max_cap: int = DEFAULT_K_MAX) -> Hierarchy:
    """gamma^(k) = sum_i w_i |x_i^k><x_i^k| for k = 1..K_max."""
    check_capacity(K_max, k_max_cap)
    return Hierarchy(tuple(mixture(mu.weights, mu.points, k, k_max=k_max_cap) for k in range(1, K_max + 1)))


def hierarchy_distance(a: Hierarchy, b: Hierarchy) -> list[float]:
    return [trace_norm(x.matrix - y.matrix) for x, y in zip(a.components, b.components)]


def sphere_concentration_test(gamma: Hierarchy, tol: float = TOL) -> tuple[bool, dict]:
    """Tr gamma^(k) = 1 for all k; also reports the single-k verdict, which must agree."""
    tr = gamma.traces()
    per_k = [abs(t - 1.0) <= tol for t in tr]
    verdict = all(per_k)
    return verdict, {"traces": tr, "per_k": per_k, "first_k_verdict": per_k[0], "consistent": len(set(per_k)) == 1}


def trace_compatibility_test(gamma: Hierarchy, tol: float = TOL) -> tuple[bool, list[float]]:
    """defect_k = || Tr_{k+1} gamma^(k+1) - gamma^(k) ||_1 for k < K_max."""
    if gamma.K_max < 2:
        raise ValueError("trace compatibility needs K_max >= 2")
    cap = max(DEFAULT_K_MAX, gamma.K_max)
    defects = [
        trace_norm(partial_trace(gamma[k + 1], k_max=cap).matrix - gamma[k].matrix) for k in range(1, gamma.K_max)
    ]
    return all(d <= tol for d in defects), defects


def psi_lift_point(x, n: int) -> np.ndarray:
    """Psi_n(x) = (sqrt(1 - sum_{j != n} |x_j|^2) - x_n) e_n + x, with n a 1-based position."""
    x = np.array(x, dtype=complex)
    idx = n - 1
    if not 0 <= idx < x.shape[-1]:
        raise ValueError(f"lift mode {n} outside 1..{x.shape[-1]}")
    rest = np.sum(np.abs(x) ** 2, axis=-1) - np.abs(x[..., idx]) ** 2
    rad = 1.0 - rest
    if np.any(rad < -1e-12):
        raise ValueError(f"negative radicand {np.min(rad):.3e}: point outside the unit ball")
    x[..., idx] = np.sqrt(np.clip(rad, 0.0, None))
    return x


def psi_lift(mu: AtomicMeasure, n: int) -> AtomicMeasure:
    return AtomicMeasure(mu.weights, psi_lift_point(mu.points, n))


def weak_star_test_family(m: int, k: int, seed: int = DEFAULT_SEED, n_random: int = 10) -> list[np.ndarray]:
    """All matrix units |e_a><e_b| when k <= 2, then seeded random operators of unit operator norm."""
    D = sym_dim(m, k)
    tests = []
    if k <= 2:
        for a in range(D):
            for b in range(D):
                E = np.zeros((D, D), dtype=complex)
                E[a, b] = 1.0
                tests.append(E)
    rng = make_rng(seed, STREAM_COMPACTS * 100 + k)
    for _ in range(n_random):
        M = complex_normal(rng, (D, D))
        tests.append(M / np.linalg.norm(M, 2))
    return tests


def mode_compression(m: int, k: int, n: int) -> np.ndarray:
    """P^{(x)k} on the k-boson space, P the projection killing basis position n (1-based)."""
    keep = np.array([a[n - 1] == 0 for a in occupation_basis(m, k)], dtype=float)
    return np.diag(keep)


def weak_star_defect(g_a: np.ndarray, g_b: np.ndarray, tests) -> float:
    diff = g_a - g_b
    return float(max((abs(np.trace(K @ diff)) for K in tests), default=0.0))


def weak_star_lifting_demo(mu: AtomicMeasure, k: int, n_list, compact_test=None, seed: int = DEFAULT_SEED) -> list[dict]:
    """Compare gamma_n^(k) = phi(Psi_n mu)^(k) with gamma^(k) = phi(mu)^(k) along n_list.

    Columns: ``weak_star`` against the test family compressed away from mode n,
    ``compact`` the trace norm of K (gamma_n - gamma) for a fixed compact K
    (default |e_1^k><e_1^k|), ``trace_gap`` and ``trace_distance``.
    """
    m = mu.dim_m
    base = mixture(mu.weights, mu.points, k, k_max=max(k, DEFAULT_K_MAX)).matrix
    if compact_test is None:
        e1 = np.zeros(m)
        e1[0] = 1.0
        v = pure_tensor(e1, k, max(k, DEFAULT_K_MAX))
        compact_test = np.outer(v, v.conj())
    family = weak_star_test_family(m, k, seed)
    rows = []
    for n in n_list:
        lifted = psi_lift(mu, n)
        g_n = mixture(lifted.weights, lifted.points, k, k_max=max(k, DEFAULT_K_MAX)).matrix
        P = mode_compression(m, k, n)
        tests = [P @ K @ P for K in family]
        rows.append(
            {
                "n": int(n),
                "weak_star": weak_star_defect(g_n, base, tests),
                "compact": trace_norm(compact_test @ (g_n - base)),
                "trace_gap": float(abs(np.trace(g_n - base))),
                "trace_distance": trace_norm(g_n - base),
            }
        )
    return rows


def kadec_klee_experiment(sequence, limit: Hierarchy, tests=None, tol: float = 1e-8, seed: int = DEFAULT_SEED) -> dict:
    """Weak-* defect, trace gap and trace-norm distance per element and k.

    ``tests`` is None (the default family), or a callable (index, k) -> list of
    test operators.  The KK* consistency flag is violated only when the last
    element has weak-* defect and trace gap below tol but trace distance above it.
    """
    rows = []
    for i, g in enumerate(sequence):
        for k in range(1, limit.K_max + 1):
            fam = tests(i, k) if tests is not None else weak_star_test_family(limit.m, k, seed)
            diff = g[k].matrix - limit[k].matrix
            rows.append(
                {
                    "index": i,
                    "k": k,
                    "weak_star": weak_star_defect(g[k].matrix, limit[k].matrix, fam),
                    "trace_gap": float(abs(np.trace(diff))),
                    "trace_distance": trace_norm(diff),
                }
            )
    last = len(sequence) - 1
    consistent = True
    for r in rows:
        if r["index"] == last and r["weak_star"] <= tol and r["trace_gap"] <= tol:
            consistent &= r["trace_distance"] <= np.sqrt(tol)
    return {"rows": rows, "kk_consistent": bool(consistent)}


def _sym_product(u, v, m: int) -> np.ndarray:
    """Occupation coordinates of the symmetrization of u (x) v."""
    J = isometry(m, 2)
    return J.T @ np.kron(u, v)


def reconstruct(gamma: Hierarchy, tol: float = 1e-9) -> AtomicMeasure:
    """Recover a measure with at most two atoms off the origin from its hierarchy.

    Independent directions: the eigenvectors of gamma^(1) span the atoms, and the
    pure squares z (x) z inside the range of gamma^(2) pick them out.  Collinear
    atoms: the radii follow from a Prony fit to Tr gamma^(k), k <= 4.  Mass not
    accounted for sits at the origin.
    """
    m = gamma.m
    g1 = gamma[1].matrix
    ev, U = np.linalg.eigh(0.5 * (g1 + g1.conj().T))
    rank = int(np.sum(ev > tol))
    if rank == 0:
        return AtomicMeasure(np.ones(1), np.zeros((1, m)))
    if rank == 1:
        xhat = U[:, -1]
        if gamma.K_max < 4:
            raise ValueError("collinear reconstruction needs K_max >= 4")
        mom = np.array([np.real(gamma[k].trace()) for k in range(1, 5)])
        return _collinear(xhat, mom, tol)
    if rank > 2:
        raise ValueError("more than two independent atoms")
    u1, u2 = U[:, -1], U[:, -2]
    g2 = gamma[2].matrix
    ev2, U2 = np.linalg.eigh(0.5 * (g2 + g2.conj().T))
    R2 = U2[:, ev2 > tol]
    span = np.column_stack([_sym_product(u1, u1, m), _sym_product(u1, u2, m) + _sym_product(u2, u1, m), _sym_product(u2, u2, m)])
    outside = span - R2 @ (R2.conj().T @ span)
    left, _, _ = np.linalg.svd(outside)
    c = left[:, 0].conj() @ outside
    dirs = []
    if abs(c[0]) < tol:
        dirs.append(u1)
        roots = [-c[2] / c[1]] if abs(c[1]) > tol else []
    else:
        roots = np.roots(c)
    for a in roots:
        z = a * u1 + u2
        dirs.append(z / np.linalg.norm(z))
    dirs = dirs[:2]
    # gamma1 = sum c_i |d_i><d_i|, gamma2 = sum e_i |d_i^2><d_i^2|
    A1 = np.column_stack([np.outer(d, d.conj()).ravel() for d in dirs])
    c1 = np.real(np.linalg.lstsq(A1, g1.ravel(), rcond=None)[0])
    sq = [pure_tensor(d, 2) for d in dirs]
    A2 = np.column_stack([np.outer(s, s.conj()).ravel() for s in sq])
    c2 = np.real(np.linalg.lstsq(A2, g2.ravel(), rcond=None)[0])
    r2 = c2 / c1
    w = c1**2 / c2
    pts = [np.sqrt(r) * d for r, d in zip(r2, dirs)]
    return _with_origin(w, pts, m, tol)


def _collinear(xhat, mom, tol):
    m = xhat.size
    # m_k = sum_i w_i rho_i^k; Prony on m_1..m_4 for two nodes
    M = np.array([[mom[1], mom[0]], [mom[2], mom[1]]])
    if abs(np.linalg.det(M)) > tol * max(1.0, np.abs(M).max() ** 2):
        p, q = np.linalg.solve(M, mom[2:4])
        rho = np.real(np.roots([1.0, -p, -q]))
        V = np.array([rho, rho**2])
        w = np.linalg.solve(V, mom[:2])
    else:
        rho = np.array([mom[1] / mom[0]])
        w = np.array([mom[0] / rho[0]])
    pts = [np.sqrt(r) * xhat for r in rho]
    return _with_origin(w, pts, m, tol)


def _with_origin(w, pts, m, tol):
    w = list(np.asarray(w, dtype=float))
    pts = [np.asarray(p, dtype=complex) for p in pts]
    rest = 1.0 - sum(w)
    if rest > tol:
        w.append(rest)
        pts.append(np.zeros(m, dtype=complex))
    w = np.asarray(w)
    return AtomicMeasure(w / w.sum(), np.asarray(pts))

"""Measure-valued side of the duality: the characteristic equation, the weak
(cylindrical) form of the Liouville equation, the pushforward construction, and
the duality / uniqueness / existence harnesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .definetti import hierarchy_distance, phi
from .dynamics import Nonlinearity, VectorField, flow
from .errors import ContractViolation
from .hierarchy import HierarchyTrajectory, a1_check, hierarchy_residual
from .measures import N_THETA, AtomicMeasure, check_equivariance, gauge_angles, moment
from .quadrature import simpson_cumulative, simpson_total, uniform_step
from .rng import (
    DEFAULT_SEED,
    STREAM_CORRUPTION,
    STREAM_CYLINDRICAL,
    STREAM_TEST_VECTORS,
    complex_normal,
    make_rng,
)
from .space import ModelSpace

TOL = 1e-6


@dataclass
class MeasureTrajectory:
    times: np.ndarray
    measures: list
    R: float = np.inf
    generated_by: str | None = None

    @property
    def weights(self) -> np.ndarray:
        return self.measures[0].weights

    def points(self) -> np.ndarray:
        """(n_t, n_atoms, m) stack; requires a common atom count."""
        return np.stack([mu.points for mu in self.measures])


@dataclass
class PathEnsemble:
    """Weighted (initial point, trajectory) pairs; e_t pushes it to mu_t."""

    weights: np.ndarray
    initial: np.ndarray
    paths: np.ndarray  # (n_atoms, n_t, m)
    times: np.ndarray

    def evaluate(self, index: int) -> AtomicMeasure:
        return AtomicMeasure(self.weights, self.paths[:, index, :])


def liouville_from_flow(mu0: AtomicMeasure, vf: VectorField, t0: float, t1: float, dt: float, R: float = np.inf):
    """Push mu0 along the numerical flow; returns (MeasureTrajectory, PathEnsemble)."""
    check_equivariance(lambda x: vf(t0, x), mu0.points)
    res = flow(mu0.points, t0, t1, vf, dt)
    if vf.conservative:
        # project back onto the mass shell so unit atoms stay in the closed ball;
        # the correction is O(drift) and keeps the fourth-order accuracy
        n0 = np.linalg.norm(mu0.points, axis=1)
        nt = np.linalg.norm(res.states, axis=2)
        scale = np.divide(n0, nt, out=np.ones_like(nt), where=nt > 0)
        res.states[:] = res.states * scale[..., None]
    measures = [AtomicMeasure(mu0.weights, s) for s in res.states]
    traj = MeasureTrajectory(res.times, measures, R, vf.label)
    paths = np.transpose(res.states, (1, 0, 2))
    return traj, PathEnsemble(mu0.weights, mu0.points.copy(), paths, res.times)


def constant_trajectory(mu: AtomicMeasure, times) -> MeasureTrajectory:
    times = np.asarray(times, dtype=float)
    return MeasureTrajectory(times, [mu] * times.size, generated_by="constant")


# characteristic equation


def _orbit(points, n_theta):
    ph = np.exp(1j * gauge_angles(n_theta))
    return ph[:, None, None] * points[None, :, :]  # (n_theta, n_atoms, m)


def characteristic_terms(mu: AtomicMeasure, t: float, vf: VectorField, Y, n_theta: int = N_THETA):
    """(mu(e^{2i pi Re<y,.>}), mu(e^{2i pi Re<y,x>} Re<v(t,x),y>)) for each y in the stack Y."""
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    orb = _orbit(mu.points, n_theta)
    vel = vf(t, orb)
    r = np.real(np.einsum("ym,tam->yta", Y.conj(), orb))
    q = np.real(np.einsum("ym,tam->yta", Y.conj(), vel))
    e = np.exp(2j * np.pi * r)
    w = mu.weights / n_theta
    return np.einsum("yta,a->y", e, w), np.einsum("yta,a->y", e * q, w)


def characteristic_residual(traj: MeasureTrajectory, vf: VectorField, Y, n_theta: int = N_THETA):
    """|K(t)| at the even grid points for every y in Y; returns (times, array (n_y, n_even))."""
    h = uniform_step(traj.times)
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    chi = np.empty((traj.times.size, Y.shape[0]), dtype=complex)
    integrand = np.empty_like(chi)
    for n, (t, mu) in enumerate(zip(traj.times, traj.measures)):
        chi[n], integrand[n] = characteristic_terms(mu, t, vf, Y, n_theta)
    idx, I = simpson_cumulative(integrand, h)
    K = chi[idx] - chi[0] - 2j * np.pi * I
    return traj.times[idx], np.abs(K).T


def test_vector_battery(m: int, seed: int = DEFAULT_SEED, count: int = 16) -> np.ndarray:
    """Basis vectors followed by seeded random unit vectors."""
    rng = make_rng(seed, STREAM_TEST_VECTORS)
    basis = np.eye(m, dtype=complex)[: min(m, count)]
    extra = complex_normal(rng, (count - basis.shape[0], m))
    extra /= np.linalg.norm(extra, axis=1)[:, None]
    return np.vstack([basis, extra])


# weak form with cylindrical tests


def _bump(s):
    """exp(-1/(1-s^2)) on (-1, 1), zero outside, with its derivative."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    val = np.zeros_like(s)
    der = np.zeros_like(s)
    si = s[inside]
    d = 1.0 - si * si
    val[inside] = np.exp(-1.0 / d)
    der[inside] = val[inside] * (-2.0 * si / d**2)
    return val, der


@dataclass(frozen=True)
class CylindricalTest:
    """phi(t, x) = chi(t) trig(2 pi c.p) prod_i bump(p_i / rho), p_i = Re<z_i, x>_{-sigma}."""

    z: np.ndarray  # (n_z, m)
    c: np.ndarray  # (n_z,)
    rho: float
    window: tuple[float, float]
    kind: str = "cos"
    sigma: float = 1.0

    def chi(self, t):
        a, b = self.window
        s = (2.0 * np.asarray(t, dtype=float) - a - b) / (b - a)
        val, der = _bump(s)
        return val, der * 2.0 / (b - a)

    def profile(self, p):
        """psi(p) and its gradient in p; p has shape (..., n_z)."""
        arg = 2.0 * np.pi * p @ self.c
        if self.kind == "cos":
            tr, dtr = np.cos(arg), -np.sin(arg)
        else:
            tr, dtr = np.sin(arg), np.cos(arg)
        b, db = _bump(p / self.rho)
        prod = np.prod(b, axis=-1)
        grad = dtr[..., None] * 2.0 * np.pi * self.c * prod[..., None]
        for i in range(p.shape[-1]):
            others = np.prod(np.delete(b, i, axis=-1), axis=-1)
            grad[..., i] += tr * others * db[..., i] / self.rho
        return tr * prod, grad


def weak_form_residual(traj: MeasureTrajectory, vf: VectorField, test: CylindricalTest, a_weights, n_theta: int = N_THETA) -> float:
    """int int (d_t phi + Re<v, grad phi>_{-sigma}) dmu_t dt, Simpson in time."""
    h = uniform_step(traj.times)
    lo, hi = test.window
    if lo < traj.times[0] or hi > traj.times[-1]:
        raise ValueError("test window must lie inside the time grid")
    wz = np.asarray(a_weights, dtype=float) ** (-test.sigma) * test.z  # A^{-sigma} z
    vals = np.empty(traj.times.size)
    for n, (t, mu) in enumerate(zip(traj.times, traj.measures)):
        chi, dchi = test.chi(t)
        if chi == 0.0 and dchi == 0.0:
            vals[n] = 0.0
            continue
        orb = _orbit(mu.points, n_theta)
        p = np.real(np.einsum("zm,tam->taz", wz.conj(), orb))
        dp = np.real(np.einsum("zm,tam->taz", wz.conj(), vf(t, orb)))
        psi, grad = test.profile(p)
        integrand = dchi * psi + chi * np.sum(grad * dp, axis=-1)
        vals[n] = np.einsum("ta,a->", integrand, mu.weights / n_theta)
    return float(simpson_total(vals, h))


def cylindrical_battery(m: int, t0: float, t1: float, seed: int = DEFAULT_SEED, count: int = 8, sigma: float = 1.0) -> list:
    rng = make_rng(seed, STREAM_CYLINDRICAL)
    tests = []
    span = t1 - t0
    for i in range(count):
        n_z = 1 + i % 2
        z = complex_normal(rng, (n_z, m))
        z /= np.linalg.norm(z, axis=1)[:, None]
        c = rng.uniform(0.5, 2.0, n_z)
        rho = float(rng.uniform(0.4, 1.2))
        a = t0 + span * rng.uniform(0.02, 0.3)
        b = t1 - span * rng.uniform(0.02, 0.3)
        tests.append(CylindricalTest(z, c, rho, (float(a), float(b)), "cos" if i % 4 < 2 else "sin", sigma))
    return tests


# harnesses


def corrupt(traj: MeasureTrajectory, index: int | None = None, seed: int = DEFAULT_SEED) -> MeasureTrajectory:
    """Replace one atom at one interior even grid time by a random ball point."""
    rng = make_rng(seed, STREAM_CORRUPTION)
    n_t = len(traj.measures)
    if index is None:
        index = 2 * (n_t // 4)
    mu = traj.measures[index]
    pts = mu.points.copy()
    atom = int(np.argmax(mu.weights))
    z = complex_normal(rng, pts.shape[1])
    pts[atom] = 0.9 * z / np.linalg.norm(z)
    measures = list(traj.measures)
    measures[index] = AtomicMeasure(mu.weights, pts)
    return MeasureTrajectory(traj.times, measures, traj.R, "corrupted")


@dataclass
class DualityReport:
    hierarchy: dict
    characteristic: float
    weak_form: float
    tol: float
    verdict: str
    direction: str
    curves: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_json(self) -> dict:
        return {
            "residuals": {
                "hierarchy": [self.hierarchy[k] for k in sorted(self.hierarchy)],
                "characteristic": self.characteristic,
                "weak_form": self.weak_form,
            },
            "tol": self.tol,
            "direction": self.direction,
            "verdict": self.verdict,
        }


def duality_check(mtraj: MeasureTrajectory, vf: VectorField, K_max: int, space: ModelSpace,
                  tol: float = TOL, seed: int = DEFAULT_SEED, Y=None, tests=None) -> DualityReport:
    """Both residual families small, or both large: the biconditional holds."""
    htraj = HierarchyTrajectory.from_measures(mtraj.times, mtraj.measures, K_max, mtraj.R, max(K_max, 4))
    hier, curves = {}, {}
    for k in range(1, K_max + 1):
        curve = hierarchy_residual(htraj, vf, k, space.a_weights, space.sigma)
        hier[k] = curve.max
        curves[f"hierarchy_{k}"] = curve
    if Y is None:
        Y = test_vector_battery(space.dim_m, seed)
    times, K = characteristic_residual(mtraj, vf, Y)
    curves["characteristic"] = (times, K)
    char = float(K.max())
    if tests is None:
        tests = cylindrical_battery(space.dim_m, mtraj.times[0], mtraj.times[-1], seed, sigma=space.sigma)
    weak = max(abs(weak_form_residual(mtraj, vf, tst, space.a_weights)) for tst in tests)
    h_small = max(hier.values()) <= tol
    c_small = char <= tol
    direction = {(True, True): "both_small", (False, False): "both_large"}.get((h_small, c_small), "mixed")
    verdict = "PASS" if h_small == c_small else "FAIL"
    return DualityReport(hier, char, weak, tol, verdict, direction, curves)


def uniqueness_experiment(mu_a: AtomicMeasure, mu_b: AtomicMeasure, vf: VectorField, t0: float, t1: float, dt: float,
                          K_max: int, tol: float = 1e-10, seed: int = DEFAULT_SEED) -> dict:
    """Equal initial hierarchies must stay equal along the pushforward dynamics."""
    ga, gb = phi(mu_a, K_max, max(K_max, 4)), phi(mu_b, K_max, max(K_max, 4))
    initial = hierarchy_distance(ga, gb)
    for k, d in enumerate(initial, start=1):
        if d > tol:
            Y = test_vector_battery(mu_a.dim_m, seed)
            gaps = np.abs(moment(mu_a, Y, k) - moment(mu_b, Y, k))
            best = int(np.argmax(gaps))
            return {
                "accepted": False,
                "reason": "initial hierarchies differ",
                "k": k,
                "trace_distance": d,
                "moment_gap": float(gaps[best]),
                "test_vector": best,
                "initial_distances": initial,
            }
    ta, _ = liouville_from_flow(mu_a, vf, t0, t1, dt)
    tb, _ = liouville_from_flow(mu_b, vf, t0, t1, dt)
    worst = 0.0
    for a, b in zip(ta.measures, tb.measures):
        worst = max(worst, max(hierarchy_distance(phi(a, K_max, max(K_max, 4)), phi(b, K_max, max(K_max, 4)))))
    return {"accepted": True, "initial_distances": initial, "max_distance": worst, "identical": worst <= tol,
            "n_times": len(ta.measures)}


def energy(x, space: ModelSpace, nl: Nonlinearity, t: float = 0.0):
    """sum omega |u|^2 + (1/2) <u, g(u)> at u = U(t) x; conserved by the flow (stack-aware)."""
    from .dynamics import evaluate_g

    u = space.free_propagate(np.asarray(x, dtype=complex), t)
    kin = np.sum(space.omega * np.abs(u) ** 2, axis=-1)
    pot = 0.5 * np.real(np.sum(u.conj() * evaluate_g(u, nl, space), axis=-1))
    return kin + pot


def a_priori_radius(mu0: AtomicMeasure, space: ModelSpace, nl: Nonlinearity, s: float, t0: float = 0.0) -> float:
    """A bound on ||x_t||_{Z_s} valid for all t, derived from the initial atoms only.

    For s <= 1 and a nonnegative potential, mass and energy conservation give
    ||x_t||_{Z_s}^2 <= ||x_t||_{Z_1}^2 <= mass + energy.  Otherwise fall back on
    the largest weight times the conserved mass.
    """
    mass = np.sum(np.abs(mu0.points) ** 2, axis=1)
    nonneg = nl.kind == "zero" or all(nl.coefficient(q) >= 0 for q in range(-2 * max(map(abs, space.mode_labels)), 2 * max(map(abs, space.mode_labels)) + 1))
    if s <= 1 and nonneg:
        return float(np.sqrt(np.max(mass + energy(mu0.points, space, nl, t0))))
    return float(np.sqrt(np.max(space.a_weights) ** s * np.max(mass)))


def existence_check(mu0: AtomicMeasure, vf: VectorField, space: ModelSpace, t0: float, t1: float, dt: float,
                    K_max: int, tol: float = TOL, slack: float = 1e-9) -> dict:
    """Pushforward + phi gives a hierarchy solution obeying (A1) with R from the data."""
    if vf.nonlinearity is None:
        raise ContractViolation("existence check needs an NLS-type field")
    R = a_priori_radius(mu0, space, vf.nonlinearity, space.s, t0)
    mtraj, ens = liouville_from_flow(mu0, vf, t0, t1, dt, R)
    htraj = HierarchyTrajectory.from_measures(mtraj.times, mtraj.measures, K_max, R, max(K_max, 4))
    ok, a1 = a1_check(htraj, space.s, R, space.a_weights, slack)
    res = {k: hierarchy_residual(htraj, vf, k, space.a_weights, space.sigma).max for k in range(1, K_max + 1)}
    init = max(hierarchy_distance(htraj.hierarchies[0], phi(mu0, K_max, max(K_max, 4))))
    passed = ok and max(res.values()) <= tol and init <= 1e-12
    return {"R": R, "a1": ok, **a1, "hierarchy_residual": res, "initial_condition": init, "passed": passed}

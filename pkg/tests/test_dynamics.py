from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierlab.dynamics import (
    Nonlinearity,
    VectorField,
    classify_uniqueness_regime,
    evaluate_g,
    flow,
    flow_map,
    time_grid,
    vector_field,
)
from hierlab.errors import IntegratorAccuracyError
from hierlab.space import ModelSpace

SP = ModelSpace.truncated(2)


def g_oracle(u, vhat, labels):
    """Direct convolution sum over a - b + c = k with explicit loops."""
    pos = {k: i for i, k in enumerate(labels)}
    out = np.zeros(len(labels), dtype=complex)
    for a in labels:
        for b in labels:
            for c in labels:
                k = a - b + c
                if k in pos:
                    out[pos[k]] += vhat(a - b) * u[pos[a]] * np.conj(u[pos[b]]) * u[pos[c]]
    return out


def rand_state(seed, m=5, norm=1.0, decay=True):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=m) + 1j * rng.normal(size=m)
    if decay:
        z /= SP.a_weights
    return norm * z / np.linalg.norm(z)


def test_g_examples():
    nl = Nonlinearity.cubic(1.7)
    assert np.all(evaluate_g(SP.zero(), nl, SP) == 0)
    a = 0.4 - 0.3j
    u = a * SP.basis_vector(0)
    assert np.allclose(evaluate_g(u, nl, SP), 1.7 * abs(a) ** 2 * a * SP.basis_vector(0))


@pytest.mark.parametrize("seed", range(3))
def test_g_against_loop_oracle(seed):
    u = rand_state(seed, decay=False)
    nl = Nonlinearity.cubic(0.8)
    assert np.allclose(evaluate_g(u, nl, SP), g_oracle(u, lambda q: 0.8, SP.mode_labels), atol=1e-14)
    vhat = [0.2, 0.5, 1.0, 0.5, 0.2]  # q = 0, +-1, ... stored from q = 0 up
    nl = Nonlinearity.hartree(vhat)
    assert np.allclose(evaluate_g(u, nl, SP), g_oracle(u, nl.coefficient, SP.mode_labels), atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
@settings(max_examples=30, deadline=None)
def test_g_equivariance(seed, theta):
    u = rand_state(seed, decay=False)
    nl = Nonlinearity.cubic(1.0)
    ph = np.exp(1j * theta)
    assert np.allclose(evaluate_g(ph * u, nl, SP), ph * evaluate_g(u, nl, SP), atol=1e-14)


def test_g_batched():
    U = np.stack([rand_state(s) for s in range(4)])
    nl = Nonlinearity.cubic(1.0)
    G = evaluate_g(U, nl, SP)
    for i in range(4):
        assert np.allclose(G[i], evaluate_g(U[i], nl, SP))


def test_vector_field_examples():
    x = rand_state(1)
    assert np.all(vector_field(0.3, x, VectorField.nls(SP, Nonlinearity.zero())) == 0)
    nl = Nonlinearity.cubic(1.0)
    vf = VectorField.nls(SP, nl)
    assert np.allclose(vector_field(0.0, x, vf), -1j * evaluate_g(x, nl, SP))
    a = 0.6j
    e0 = a * SP.basis_vector(0)
    for t in (0.0, 0.3, 1.1):
        assert np.allclose(vf(t, e0), -1j * abs(a) ** 2 * e0)


def test_time_grid():
    g = time_grid(0.0, 1.0, 1e-3)
    assert g.size == 1001 and g[-1] == 1.0
    with pytest.raises(ValueError):
        time_grid(0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        time_grid(1.0, 0.0, 0.1)


def test_zero_field_is_identity():
    x = rand_state(2)
    res = flow(x, 0.0, 1.0, VectorField.zero(), 0.1)
    assert np.all(res.states == x)


def test_single_mode_exact_solution_fourth_order():
    lam, a = 1.3, 0.9 * np.exp(0.4j)
    x0 = a * SP.basis_vector(0)
    vf = VectorField.nls(SP, Nonlinearity.cubic(lam))
    T = 20.0

    def err(dt):
        res = flow(x0, 0.0, T, vf, dt, mass_guard=None)
        exact = np.exp(-1j * lam * abs(a) ** 2 * T) * x0
        return np.max(np.abs(res.final - exact))

    e1, e2 = err(0.2), err(0.1)
    assert 16 * 0.7 < e1 / e2 < 16 * 1.3


def test_refinement_order_on_generic_data():
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    x0 = rand_state(3)
    ref = flow(x0, 0.0, 1.0, vf, 2.5e-4).final
    e1 = np.max(np.abs(flow(x0, 0.0, 1.0, vf, 4e-3, mass_guard=None).final - ref))
    e2 = np.max(np.abs(flow(x0, 0.0, 1.0, vf, 2e-3, mass_guard=None).final - ref))
    assert 16 * 0.7 < e1 / e2 < 16 * 1.3


@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
@settings(max_examples=10, deadline=None)
def test_flow_gauge_covariance(seed, theta):
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    x0 = rand_state(seed)
    ph = np.exp(1j * theta)
    a = flow(ph * x0, 0.0, 0.2, vf, 1e-2).final
    b = ph * flow(x0, 0.0, 0.2, vf, 1e-2).final
    assert np.max(np.abs(a - b)) < 1e-12


@st.composite
def z1_ball_state(draw):
    """States with l2 norm <= 1 and Z_1 norm <= 3."""
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    z = rng.normal(size=5) + 1j * rng.normal(size=5)
    z /= np.linalg.norm(z)
    r0 = draw(st.floats(0.05, 1.0))
    z *= r0
    r1 = SP.scale_norm(z, 1.0)
    if r1 > 3.0:
        z *= 3.0 / r1
    return z


@given(z1_ball_state())
@settings(max_examples=15, deadline=None)
def test_mass_conservation_on_z1_ball(x0):
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    res = flow(x0, 0.0, 1.0, vf, 1e-3)
    assert res.mass_drift <= 1e-10
    assert res.duhamel_residual < 1e-8


def test_mass_guard_raises():
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    x0 = np.ones(5) / np.sqrt(5)
    with pytest.raises(IntegratorAccuracyError):
        flow(x0, 0.0, 1.0, vf, 0.05)
    res = flow(x0, 0.0, 1.0, vf, 0.05, mass_guard=None)
    assert res.mass_drift > 1e-6


def test_flow_map_batches():
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    X = np.stack([rand_state(s) for s in range(3)])
    F = flow_map(vf, 0.0, 0.5, 1e-2)(X)
    for i in range(3):
        assert np.allclose(F[i], flow(X[i], 0.0, 0.5, vf, 1e-2).final, atol=1e-15)


def test_local_error_estimate_is_small_and_shrinks():
    vf = VectorField.nls(SP, Nonlinearity.cubic(1.0))
    x0 = rand_state(4)
    a = flow(x0, 0.0, 0.5, vf, 1e-2).local_errors.max()
    b = flow(x0, 0.0, 0.5, vf, 5e-3).local_errors.max()
    assert a / b > 7


@pytest.mark.parametrize(
    "d,s,alpha,case",
    [(3, Fraction(3, 2), 4, "Kato (i)"), (1, 0, 1, "Kato (iii)"), (2, Fraction(1, 3), 2, "Han-Fang")],
)
def test_regime_examples(d, s, alpha, case):
    r = classify_uniqueness_regime(d, s, alpha)
    assert r["covered"] and case in r["regimes"]


def test_regime_uncovered_example():
    r = classify_uniqueness_regime(3, 0, 2)
    assert not r["covered"]
    kato2 = next(c for c in r["cases"] if c["case"] == "Kato (ii)")
    assert not kato2["covered"] and "2/3" in kato2["inequality"]


@pytest.mark.parametrize("d", [1, 2])
def test_cubic_and_quartic_thresholds(d):
    eps = Fraction(1, 1000)
    assert classify_uniqueness_regime(d, Fraction(d, 6), 2)["covered"]
    assert not classify_uniqueness_regime(d, Fraction(d, 6) - eps, 2)["covered"]
    assert classify_uniqueness_regime(d, Fraction(d, 4), 3)["covered"]
    assert not classify_uniqueness_regime(d, Fraction(d, 4) - eps, 3)["covered"]


def test_regime_is_monotone_in_s_for_cubic():
    for d in (1, 2):
        grid = [Fraction(j, 60) for j in range(0, 61)]
        cov = [classify_uniqueness_regime(d, s, 2)["covered"] for s in grid]
        first = cov.index(True)
        assert all(cov[first:])


def test_regime_rejects_bad_input():
    with pytest.raises(ValueError):
        classify_uniqueness_regime(0, 1, 2)
    with pytest.raises(ValueError):
        classify_uniqueness_regime(1, -1, 2)

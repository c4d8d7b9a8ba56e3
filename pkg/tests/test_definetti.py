import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierlab.definetti import (
    Hierarchy,
    hierarchy_distance,
    kadec_klee_experiment,
    phi,
    psi_lift,
    psi_lift_point,
    reconstruct,
    sphere_concentration_test,
    trace_compatibility_test,
    weak_star_lifting_demo,
)
from hierlab.errors import CapacityError
from hierlab.measures import AtomicMeasure, mix
from hierlab.symtensor import SymOperator, isometry, trace_norm


def full_projector(x, k):
    v = np.ones(1, dtype=complex)
    for _ in range(k):
        v = np.kron(v, x)
    return np.outer(v, v.conj())


def random_measure(seed, m=4, n=2, sphere=False):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    r = np.ones(n) if sphere else rng.uniform(0.2, 1.0, n)
    z *= (r / np.linalg.norm(z, axis=1))[:, None]
    return AtomicMeasure(rng.dirichlet(np.ones(n)), z)


def test_phi_examples():
    e = np.eye(4)
    g = phi(AtomicMeasure.dirac(e[0]), 3)
    for k in (1, 2, 3):
        D = g[k].dim
        expect = np.zeros((D, D))
        expect[0, 0] = 1.0
        assert np.allclose(g[k].matrix, expect)
    g0 = phi(AtomicMeasure.dirac(np.zeros(4)), 3)
    assert all(np.all(c.matrix == 0) for c in g0.components)
    g = phi(AtomicMeasure([0.5, 0.5], e[:2]), 2)
    assert np.allclose(g[1].matrix, np.diag([0.5, 0.5, 0, 0]))


def test_phi_matches_full_tensor_oracle():
    mu = random_measure(11, m=3, n=3)
    g = phi(mu, 3)
    for k in (1, 2, 3):
        full = sum(w * full_projector(x, k) for w, x in zip(mu.weights, mu.points))
        J = isometry(3, k)
        assert np.allclose(g[k].matrix, J.T @ full @ J, atol=1e-14)


def test_structure():
    g = phi(random_measure(4, n=3), 4)
    d = g.structure_defects()
    assert d["hermiticity"] < 1e-15
    assert d["negativity"] < 1e-14
    assert d["excess_over_one"] < 1e-14
    assert d["symmetry"] < 1e-14
    with pytest.raises(CapacityError):
        phi(random_measure(4), 5)
    with pytest.raises(ValueError):
        Hierarchy((g[2],))


def test_sphere_concentration_examples():
    ok, rep = sphere_concentration_test(phi(random_measure(1, sphere=True, n=3), 4))
    assert ok and rep["consistent"]
    x = 0.9 * np.eye(3)[0]
    ok, rep = sphere_concentration_test(phi(AtomicMeasure.dirac(x), 4))
    assert not ok and rep["consistent"]
    assert np.allclose(rep["traces"], [0.81**k for k in range(1, 5)])


def test_trace_compatibility_examples():
    ok, defects = trace_compatibility_test(phi(random_measure(2, sphere=True), 4))
    assert ok and max(defects) < 1e-14
    x = np.sqrt(0.5) * np.array([1, 1j, 0]) / np.sqrt(2)
    ok, defects = trace_compatibility_test(phi(AtomicMeasure.dirac(x), 2))
    assert not ok
    assert defects[0] == pytest.approx(0.25, abs=1e-14)
    e = np.eye(3)
    ok, _ = trace_compatibility_test(phi(AtomicMeasure([0.3, 0.7], [np.zeros(3), e[1]]), 3))
    assert ok


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_phi_is_affine(seed, t):
    a, b = random_measure(seed), random_measure(seed + 1, n=3)
    lhs = phi(mix(a, b, t), 3)
    ga, gb = phi(a, 3), phi(b, 3)
    for k in (1, 2, 3):
        assert np.allclose(lhs[k].matrix, t * ga[k].matrix + (1 - t) * gb[k].matrix, atol=1e-14)


def test_rotated_and_permuted_presentations_coincide():
    mu = random_measure(9, n=3)
    other = mu.rotated([0.3, 2.0, 5.1]).permuted([2, 0, 1])
    assert max(hierarchy_distance(phi(mu, 4), phi(other, 4))) < 1e-14


@pytest.mark.parametrize("seed", range(6))
def test_reconstruction_recovers_hierarchy(seed):
    mu = random_measure(seed, n=2)
    g = phi(mu, 4)
    back = reconstruct(g)
    assert max(hierarchy_distance(phi(back, 4), g)) < 1e-10


def test_reconstruction_collinear_and_origin():
    x = np.array([0.6, 0.8j, 0.0])
    mu = AtomicMeasure([0.4, 0.6], [x, 0.5 * np.exp(0.7j) * x])
    g = phi(mu, 4)
    assert max(hierarchy_distance(phi(reconstruct(g), 4), g)) < 1e-10
    mu = AtomicMeasure([0.25, 0.75], [np.zeros(3), x])
    g = phi(mu, 4)
    back = reconstruct(g)
    assert max(hierarchy_distance(phi(back, 4), g)) < 1e-10
    assert back.weights.min() == pytest.approx(0.25)


def test_injectivity_on_distinct_measures():
    """Different measures (not gauge or permutation copies) give different hierarchies."""
    e = np.eye(3)
    a = AtomicMeasure([0.5, 0.5], [e[0], e[1]])
    b = AtomicMeasure([0.5, 0.5], [(e[0] + e[1]) / np.sqrt(2), (e[0] - e[1]) / np.sqrt(2)])
    d = hierarchy_distance(phi(a, 2), phi(b, 2))
    assert d[0] < 1e-15 and d[1] > 0.5


def test_psi_lift_examples():
    assert np.allclose(psi_lift_point([0.6, 0.0], 2), [0.6, 0.8])
    assert np.allclose(psi_lift_point(np.zeros(3), 2), np.eye(3)[1])
    x = np.array([0.6j, 0.8])
    assert np.allclose(psi_lift_point(x, 2), x)
    with pytest.raises(ValueError):
        psi_lift_point([0.6, 0.0], 3)
    mu = random_measure(3, sphere=True)
    mu = AtomicMeasure(mu.weights, mu.points * np.exp(-1j * np.angle(mu.points[:, [1]])))
    assert np.allclose(psi_lift(mu, 2).points, mu.points, atol=1e-14)


def lifting_oracle(k, n, m=5, r=0.6):
    """Full tensor-space values for delta_{r e_1} against its lift at mode n."""
    x = np.zeros(m)
    x[0] = r
    y = x.copy()
    y[n - 1] = np.sqrt(1 - r * r)
    diff = full_projector(y, k) - full_projector(x, k)
    e1 = np.eye(m)[0]
    K = full_projector(e1, k)
    return {
        "compact": np.sum(np.linalg.svd(K @ diff, compute_uv=False)),
        "trace_gap": abs(np.trace(diff)),
        "trace_distance": np.sum(np.linalg.svd(diff, compute_uv=False)),
    }


@pytest.mark.parametrize("k", [1, 2])
def test_lifting_demo_constants(k):
    mu = AtomicMeasure.dirac(0.6 * np.eye(5)[0])
    rows = weak_star_lifting_demo(mu, k, (3, 4, 5))
    for r in rows:
        oracle = lifting_oracle(k, r["n"])
        assert r["weak_star"] < 1e-15
        for key in ("compact", "trace_gap", "trace_distance"):
            assert r[key] == pytest.approx(oracle[key], abs=1e-12)
        assert r["trace_gap"] == pytest.approx(1 - 0.36**k, abs=1e-12)
    frozen = {1: (0.48, 0.64, 1.1537764081484767), 2: (0.33586282914308935, 0.8704, 1.0994596491004114)}[k]
    for r in rows:
        assert (r["compact"], r["trace_gap"], r["trace_distance"]) == pytest.approx(frozen, abs=1e-12)


def test_lifting_on_sphere_is_trivial():
    x = np.array([0.6, 0.0, 0.0, 0.0, 0.8])
    rows = weak_star_lifting_demo(AtomicMeasure.dirac(x), 1, (5,))
    assert rows[0]["trace_distance"] < 1e-15


def test_kadec_klee_examples():
    mu = random_measure(5, m=4)
    g = phi(mu, 2)
    res = kadec_klee_experiment([g, g], g)
    assert res["kk_consistent"] and max(r["trace_distance"] for r in res["rows"]) == 0.0

    lifted = AtomicMeasure.dirac(0.6 * np.eye(4)[0])
    seq = [phi(psi_lift(lifted, n), 1) for n in (2, 3, 4)]
    res = kadec_klee_experiment(seq, phi(lifted, 1))
    assert all(r["trace_gap"] == pytest.approx(0.64) for r in res["rows"])
    assert all(r["trace_distance"] > 1 for r in res["rows"])

    x = np.array([1, 1j, 0, 0]) / np.sqrt(2)
    seq = []
    for eps in (0.1, 0.01, 1e-6):
        z = x + eps * np.array([0, 0, 1, 0])
        seq.append(phi(AtomicMeasure.dirac(z / np.linalg.norm(z)), 2))
    res = kadec_klee_experiment(seq, phi(AtomicMeasure.dirac(x), 2))
    last = [r["trace_distance"] for r in res["rows"] if r["index"] == 2]
    assert max(last) < 1e-5
    assert res["kk_consistent"]


def test_json_round_trip():
    import json

    g = phi(random_measure(8), 2)
    data = json.loads(g.to_json({"K": 1}))
    back = SymOperator.from_json(data["components"][1])
    assert np.array_equal(back.matrix, g[2].matrix)
    assert trace_norm(back.matrix) == pytest.approx(g.traces()[1])

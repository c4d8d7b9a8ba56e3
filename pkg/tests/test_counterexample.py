import numpy as np
import pytest

from hierlab import counterexample as ce


def test_ground_state_examples():
    assert ce.ground_state_profile(0.0) == pytest.approx(3**0.25)
    assert ce.ground_state_profile(0.0) == pytest.approx(1.31607, abs=1e-5)
    q = ce.ground_state(10.0, 0.01)
    assert ce.ground_state_residual(q) <= 1e-3
    v = q.values.real
    assert np.all(v > 0)
    assert np.allclose(v, v[::-1])
    assert np.all(np.isfinite(ce.ground_state_profile(np.array([1e3, -1e4]))))


def test_ground_state_residual_is_second_order():
    r1 = ce.ground_state_residual(ce.ground_state(10.0, 0.02))
    r2 = ce.ground_state_residual(ce.ground_state(10.0, 0.01))
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


def test_ground_state_ode_pointwise():
    """Q'' = Q - Q^5 from the closed form, checked with a centered second difference."""
    x = np.linspace(0.2, 3.0, 15)
    h = 1e-4
    Q = ce.ground_state_profile
    d2 = (Q(x + h) - 2 * Q(x) + Q(x - h)) / h**2
    assert np.allclose(d2, Q(x) - Q(x) ** 5, atol=1e-6)


def test_mass_is_constant():
    x = ce.make_grid(20.0, 0.005)
    masses = [ce.explicit_solution(t, x).mass() for t in (0.05, 0.1, 0.2)]
    spread = (max(masses) - min(masses)) / max(masses)
    assert spread <= 1e-6
    # mass of u(t) equals the mass of Q: int sqrt(3) sech(2x) dx = sqrt(3) pi / 2
    assert masses[0] == pytest.approx(np.sqrt(3) * np.pi / 2, rel=1e-6)


@pytest.mark.parametrize("t", [0.2, 0.05, 0.01])
def test_amplitude_at_origin(t):
    x = np.array([0.0])
    assert abs(ce.explicit_values(t, x)[0]) == pytest.approx((2 * t) ** -0.5 * 3**0.25, rel=1e-14)


def test_l6_norm_grows_like_t_to_minus_third():
    x = ce.make_grid(8.0, 1e-4)
    ts = np.array([0.2, 0.1, 0.05, 0.025])
    norms = np.array([ce.explicit_solution(t, x).lp_norm(6) for t in ts])
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert slope == pytest.approx(-1 / 3, abs=1e-3)


def test_phase_selection():
    sel = ce.select_phase()
    assert sel["accepted"] == "pseudo_conformal"
    assert sel["slopes"]["pseudo_conformal"] == pytest.approx(2.0, abs=0.1)
    assert abs(sel["slopes"]["printed"]) < 0.1
    assert min(sel["residuals"]["printed"]) > 10


def test_explicit_values_reject_bad_input():
    with pytest.raises(ValueError):
        ce.explicit_values(0.0, [0.0])
    with pytest.raises(ValueError):
        ce.explicit_values(0.1, [0.0], "other")


def test_zero_test_function_pairs_to_zero():
    x = ce.make_grid(4.0, 1e-3)
    for t in (0.2, 0.05):
        assert ce.explicit_solution(t, x).pair(np.zeros_like(x)) == 0


def test_nonuniqueness_verdict():
    t_list = 0.2 * 0.5 ** np.arange(11)
    demo = ce.nonuniqueness_demo(t_list, 8.0, 1e-5)
    assert demo["verdict"] == "NONUNIQUE"
    assert demo["mass_spread"] <= 1e-5
    assert demo["monotone"]
    assert max(demo["final_over_initial"]) < 0.05


def test_pairings_shrink_like_sqrt_t():
    """|<u(t), psi>| ~ sqrt(2t) |int Q| |psi(0)| for small t; the ratio at 0.2 vs 0.025 is near sqrt(8)."""
    demo = ce.nonuniqueness_demo([0.2, 0.025], 8.0, 1e-4, centers=(0.0,))
    ratio = demo["rows"][0]["pairings"][0] / demo["rows"][1]["pairings"][0]
    assert 2.0 < ratio < np.sqrt(8) * 1.05


def test_demo_refuses_unresolved_times():
    with pytest.raises(ValueError, match="refine h"):
        ce.nonuniqueness_demo([0.2, 1e-4], 8.0, 1e-4)
    with pytest.raises(ValueError):
        ce.nonuniqueness_demo([0.1, 0.2], 8.0, 1e-4)


def test_strichartz_integral_blows_up():
    rows = ce.strichartz_diagnostic([0.1, 0.05, 0.025], 0.2, 8.0, 1e-3)
    vals = [r["integral"] for r in rows]
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] / vals[1] > 2

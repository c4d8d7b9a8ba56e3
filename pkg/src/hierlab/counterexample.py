"""Pseudo-conformal blowup solution of the one-dimensional quintic (L^2-critical)
focusing NLS  i u_t + u_xx + |u|^4 u = 0  on a uniform grid.

The solution concentrates at the origin as t -> 0+ with constant mass, so its
pairings against fixed test functions vanish while its L^2 norm does not: the
hierarchy built from it starts from the zero datum in the weak-* sense, as does
the null solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASES = ("pseudo_conformal", "printed")


@dataclass(frozen=True)
class GridFunction:
    x: np.ndarray
    values: np.ndarray

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def mass(self) -> float:
        """Discrete squared L^2 norm (trapezoid = Riemann sum for decayed tails)."""
        return float(self.h * np.sum(np.abs(self.values) ** 2))

    def pair(self, psi) -> complex:
        psi = psi.values if isinstance(psi, GridFunction) else np.asarray(psi)
        return complex(self.h * np.sum(np.conj(psi) * self.values))

    def lp_norm(self, p: float) -> float:
        return float((self.h * np.sum(np.abs(self.values) ** p)) ** (1.0 / p))


def make_grid(L: float, h: float) -> np.ndarray:
    n = int(round(2 * L / h))
    return np.linspace(-L, L, n + 1)


def ground_state_profile(x):
    """Q(x) = 3^{1/4} sech^{1/2}(2x), the positive solution of -Q'' + Q - Q^5 = 0."""
    e = np.exp(-2.0 * np.abs(np.asarray(x, dtype=float)))
    # sech(2x)^{1/2} written without overflowing cosh
    return 3.0**0.25 * np.sqrt(2.0 * e / (1.0 + e * e))


def ground_state(L: float, h: float) -> GridFunction:
    x = make_grid(L, h)
    return GridFunction(x, ground_state_profile(x).astype(complex))


def ground_state_residual(q: GridFunction) -> float:
    """max over interior points of |-Q'' + Q - Q^5| with the centered stencil."""
    v = q.values.real
    d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / q.h**2
    return float(np.max(np.abs(-d2 + v[1:-1] - v[1:-1] ** 5)))


def explicit_values(t, x, phase: str = "pseudo_conformal"):
    """u(t, x) = (2t)^{-1/2} P(t, x) Q(x / 2t) for the chosen phase P.

    ``pseudo_conformal``: P = exp(i x^2 / 4t) exp(-i / 4t), an exact solution.
    ``printed``: P = exp(i x^2) exp(i / t), kept as the rejected candidate.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("explicit solution needs t > 0")
    x = np.asarray(x, dtype=float)
    amp = ground_state_profile(x / (2 * t)) / np.sqrt(2 * t)
    if phase == "pseudo_conformal":
        ph = np.exp(1j * x**2 / (4 * t)) * np.exp(-1j / (4 * t))
    elif phase == "printed":
        ph = np.exp(1j * x**2) * np.exp(1j / t)
    else:
        raise ValueError(f"unknown phase {phase!r}")
    return amp * ph


def explicit_solution(t: float, x, phase: str = "pseudo_conformal") -> GridFunction:
    return GridFunction(np.asarray(x, dtype=float), explicit_values(t, x, phase))


def nls_residual(t: float, L: float, h: float, dt: float, phase: str) -> float:
    """max |i u_t + u_xx + |u|^4 u| on interior points, centered in t and x."""
    x = make_grid(L, h)
    um, u0, up = (explicit_values(s, x, phase) for s in (t - dt, t, t + dt))
    ut = (up - um) / (2 * dt)
    uxx = (u0[2:] - 2 * u0[1:-1] + u0[:-2]) / h**2
    res = 1j * ut[1:-1] + uxx + np.abs(u0[1:-1]) ** 4 * u0[1:-1]
    return float(np.max(np.abs(res)))


def select_phase(t: float = 0.2, L: float = 4.0, levels=(0.01, 0.005, 0.0025)) -> dict:
    """Refine h (with dt = h) for both candidate phases; keep the one whose residual decays."""
    table = {}
    for ph in PHASES:
        table[ph] = [nls_residual(t, L, h, h, ph) for h in levels]
    slopes = {ph: float(np.log2(r[-2] / r[-1])) for ph, r in table.items()}
    decaying = [ph for ph in PHASES if slopes[ph] > 1.5 and table[ph][-1] < table[ph][0]]
    accepted = decaying[0] if decaying else None
    return {"levels": list(levels), "residuals": table, "slopes": slopes, "accepted": accepted}


def gaussian(x, center: float = 0.0, width: float = 1.0) -> np.ndarray:
    return np.exp(-(((np.asarray(x) - center) / width) ** 2)).astype(complex)


def nonuniqueness_demo(t_list, L: float, h: float, centers=(0.0, 0.5, 1.0), phase: str = "pseudo_conformal",
                       mass_tol: float = 1e-4, drop: float = 0.05, slack: float = 0.10) -> dict:
    """Mass and Gaussian pairings along a decreasing sequence of times.

    NONUNIQUE when every final pairing is below ``drop`` times its initial value,
    the pairings decrease (within ``slack``) and the mass spread stays below
    ``mass_tol``.
    """
    t_list = np.asarray(t_list, dtype=float)
    if np.any(np.diff(t_list) >= 0) or np.any(t_list <= 0):
        raise ValueError("t_list must be positive and strictly decreasing")
    t_min = 10 * h
    if t_list[-1] < t_min:
        raise ValueError(f"t={t_list[-1]} is below the grid resolution limit 10h = {t_min}; refine h to at most {t_list[-1] / 10}")
    x = make_grid(L, h)
    tests = [gaussian(x, c) for c in centers]
    rows = []
    for t in t_list:
        u = explicit_solution(t, x, phase)
        rows.append({"t": float(t), "mass": u.mass(), "pairings": [abs(u.pair(p)) for p in tests]})
    masses = np.array([r["mass"] for r in rows])
    P = np.array([r["pairings"] for r in rows])
    spread = float((masses.max() - masses.min()) / masses.max())
    monotone = bool(np.all(P[1:] <= P[:-1] * (1 + slack)))
    ratios = (P[-1] / P[0]).tolist()
    verdict = "NONUNIQUE" if (max(ratios) < drop and spread < mass_tol and monotone) else "INCONCLUSIVE"
    return {"rows": rows, "centers": list(centers), "mass_spread": spread, "monotone": monotone,
            "final_over_initial": ratios, "verdict": verdict, "phase": phase}


def strichartz_diagnostic(t_mins, T: float, L: float, h: float, n_t: int = 400, r: float = 6.0, q: float = 6.0) -> list[dict]:
    """int_{t_min}^T ||u(t)||_{L^r}^q dt on a log-spaced time grid, for each t_min."""
    x = make_grid(L, h)
    out = []
    for tm in t_mins:
        ts = np.geomspace(tm, T, n_t)
        vals = np.array([explicit_solution(t, x).lp_norm(r) ** q for t in ts])
        out.append({"t_min": float(tm), "integral": float(np.trapezoid(vals, ts))})
    return out

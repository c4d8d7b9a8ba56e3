"""Nonlinearities, the interaction-picture vector field, its RK4 flow, and the
unconditional-uniqueness regime classifier for power nonlinearities.

Sign conventions: the Schrodinger equation is i du/dt = -Laplacian u + g(u), the
free propagator is U(t) = exp(it Laplacian), and in the interaction picture
x = U(-t)u solves dx/dt = v(t, x) with v(t, x) = -i U(-t) g(U(t) x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import IntegratorAccuracyError
from .quadrature import simpson_total
from .space import ModelSpace

MASS_GUARD = 1e-6


@dataclass(frozen=True)
class Nonlinearity:
    """g(u)_k = sum_{a-b+c=k} Vhat_{a-b} u_a conj(u_b) u_c, Galerkin-projected.

    ``vhat`` maps |q| to the Fourier coefficient of the pair potential; missing
    entries are zero.  ``cubic(lam)`` is the constant potential Vhat = lam.
    """

    kind: str
    vhat: tuple[float, ...] = ()
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hartree", "cubic", "zero"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "vhat", tuple(float(v) for v in self.vhat))

    @classmethod
    def cubic(cls, lam: float = 1.0) -> "Nonlinearity":
        return cls("cubic", lam=float(lam))

    @classmethod
    def hartree(cls, vhat) -> "Nonlinearity":
        """``vhat`` lists Vhat_0, Vhat_1, ... ; evenness Vhat_{-q} = Vhat_q is built in."""
        return cls("hartree", vhat=tuple(vhat))

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls("zero")

    def coefficient(self, q: int) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "cubic":
            return self.lam
        q = abs(int(q))
        return self.vhat[q] if q < len(self.vhat) else 0.0

    def tensor(self, space: ModelSpace) -> np.ndarray:
        """T[k, a, b, c] = Vhat_{a-b} when label_a - label_b + label_c = label_k."""
        return _interaction_tensor(space.mode_labels, self)


_TENSOR_CACHE: dict = {}


def _interaction_tensor(labels: tuple[int, ...], nl: Nonlinearity) -> np.ndarray:
    key = (labels, nl)
    if key in _TENSOR_CACHE:
        return _TENSOR_CACHE[key]
    m = len(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    T = np.zeros((m, m, m, m))
    for a, la in enumerate(labels):
        for b, lb in enumerate(labels):
            w = nl.coefficient(la - lb)
            if w == 0.0:
                continue
            for c, lc in enumerate(labels):
                k = pos.get(la - lb + lc)
                if k is not None:
                    T[k, a, b, c] = w
    T.setflags(write=False)
    _TENSOR_CACHE[key] = T
    return T


def evaluate_g(u, nl: Nonlinearity, space: ModelSpace) -> np.ndarray:
    """g(u) on the retained modes; ``u`` may carry leading batch axes."""
    u = np.asarray(u, dtype=complex)
    if nl.kind == "zero":
        return np.zeros_like(u)
    m = space.dim_m
    T = nl.tensor(space).reshape(m, m**3)
    triple = u[..., :, None, None] * u.conj()[..., None, :, None] * u[..., None, None, :]
    return triple.reshape(u.shape[:-1] + (m**3,)) @ T.T


@dataclass(frozen=True)
class VectorField:
    """Time-dependent vector field v(t, x), batched over leading axes of x.

    ``conservative`` declares that the exact flow preserves the l2 norm, which
    arms the mass-drift guard of ``flow``.
    """

    func: Callable
    conservative: bool = True
    label: str = "custom"
    nonlinearity: Nonlinearity | None = None
    space: ModelSpace | None = field(default=None, compare=False)

    def __call__(self, t, x):
        return self.func(t, np.asarray(x, dtype=complex))

    @classmethod
    def nls(cls, space: ModelSpace, nl: Nonlinearity) -> "VectorField":
        """-i U(-t) g(U(t) x)."""

        def v(t, x):
            u = space.free_propagate(x, t)
            return -1j * space.free_propagate(evaluate_g(u, nl, space), -t)

        return cls(v, True, f"nls[{nl.kind}]", nl, space)

    @classmethod
    def zero(cls) -> "VectorField":
        return cls(lambda t, x: np.zeros_like(x), True, "zero")

    @classmethod
    def phase_generator(cls, rate: float = 1.0) -> "VectorField":
        """v(x) = i*rate*x, the generator of the global phase action."""
        return cls(lambda t, x: 1j * rate * x, True, "phase")


def vector_field(t: float, x, vf: VectorField) -> np.ndarray:
    return vf(t, x)


@dataclass
class FlowResult:
    times: np.ndarray
    states: np.ndarray  # (n_t, *batch, m)
    step_sizes: np.ndarray
    local_errors: np.ndarray
    mass_drift: float
    duhamel_residual: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    """Uniform grid from t0 to t1 with step as close to dt as an integer count allows."""
    span = t1 - t0
    if dt <= 0 or span <= 0:
        raise ValueError("need dt > 0 and t1 > t0")
    if dt > span * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the interval length {span}")
    n = max(1, int(round(span / dt)))
    return t0 + span * np.arange(n + 1) / n


def flow(x0, t0: float, t1: float, vf: VectorField, dt: float, mass_guard: float | None = MASS_GUARD) -> FlowResult:
    """Classical RK4 on a fixed grid, batched over the leading axes of ``x0``.

    A third-order Kutta step shares the first two stages and yields the local
    error estimate.  Mass drift beyond ``mass_guard`` raises for conservative
    fields.
    """
    times = time_grid(t0, t1, dt)
    h = times[1] - times[0]
    x = np.array(x0, dtype=complex)
    states = np.empty((times.size,) + x.shape, dtype=complex)
    derivs = np.empty_like(states)
    local = np.empty(times.size - 1)
    states[0] = x
    k1 = vf(times[0], x)
    derivs[0] = k1
    for n in range(times.size - 1):
        t = times[n]
        k2 = vf(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = vf(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = vf(t + h, x + h * k3)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k3_kutta = vf(t + h, x - h * k1 + 2.0 * h * k2)
        x_low = x + (h / 6.0) * (k1 + 4.0 * k2 + k3_kutta)
        local[n] = float(np.max(np.abs(x_new - x_low)))
        x = x_new
        states[n + 1] = x
        k1 = vf(times[n + 1], x)
        derivs[n + 1] = k1
    mass = np.sqrt(np.sum(np.abs(states) ** 2, axis=-1))
    drift = float(np.max(np.abs(mass - mass[0]), initial=0.0))
    if vf.conservative and mass_guard is not None and drift > mass_guard:
        raise IntegratorAccuracyError(f"mass drift {drift:.3e} exceeds {mass_guard:.0e}; reduce dt")
    if times.size >= 3:
        integral = simpson_total(derivs, h)
    else:
        integral = 0.5 * h * (derivs[0] + derivs[1])
    duhamel = float(np.max(np.abs(states[-1] - states[0] - integral)))
    return FlowResult(times, states, np.full(times.size - 1, h), local, drift, duhamel)


def flow_map(vf: VectorField, t0: float, t1: float, dt: float):
    """x -> phi(t1, t0) x as a callable, for pushforwards."""

    def apply(x):
        return flow(x, t0, t1, vf, dt).final

    return apply


# regime classifier


def _frac(x) -> Fraction:
    return Fraction(x).limit_denominator(10**9) if not isinstance(x, Fraction) else x


def _min(*vals):
    return min(vals)


def classify_uniqueness_regime(d: int, s, alpha) -> dict:
    """Evaluate each unconditional-uniqueness case for g(u) = +-|u|^alpha u.

    Arithmetic is exact on rationals.  Returns a report listing every case,
    whether it applies, and the inequality that decides it.
    """
    d = int(d)
    s = _frac(s)
    a = _frac(alpha)
    if d < 1 or s < 0 or a < 0:
        raise ValueError("need d >= 1, s >= 0, alpha >= 0")
    cases = []

    def add(name, ok, why):
        cases.append({"case": name, "covered": bool(ok), "inequality": why})

    add("Kato (i)", s >= Fraction(d, 2), f"s >= d/2: {s} >= {Fraction(d, 2)}")

    if d >= 2 and s < Fraction(d, 2):
        bound = _min(Fraction(4) / (d - 2 * s), (2 * s + 2) / (d - 2 * s))
        add("Kato (ii)", a < bound, f"alpha < min(4/(d-2s), (2s+2)/(d-2s)) = {bound}")
    else:
        add("Kato (ii)", False, "requires d >= 2 and 0 <= s < d/2")

    if d == 1 and s < Fraction(1, 2):
        bound = (1 + 2 * s) / (1 - 2 * s)
        add("Kato (iii)", a <= bound, f"alpha <= (1+2s)/(1-2s) = {bound}")
    else:
        add("Kato (iii)", False, "requires d = 1 and 0 <= s < 1/2")

    if 3 <= d <= 5 and 0 < s < 1:
        first = (d + 2 - 2 * s) / (d - 2 * s)
        lo = max(Fraction(1), 2 * s / (d - 2 * s))
        hi = _min(Fraction(4) / (d - 2 * s), (d + 2 * s) / (d - 2 * s), (4 * s + 2) / (d - 2 * s))
        ok = a <= first and lo < a < hi
        add("Furioli-Terraneo", ok, f"alpha <= {first} and {lo} < alpha < {hi}")
    else:
        add("Furioli-Terraneo", False, "requires 3 <= d <= 5 and 0 < s < 1")

    if d >= 3 and 0 <= s <= 1:
        lo = (2 + 2 * s) / (d - 2 * s)
        hi = _min((2 + 4 * s - 4 * s / d) / (d - 2 * s), Fraction(4) / (d - 2 * s))
        add("Rogers", lo <= a < hi, f"{lo} <= alpha < {hi}")
    else:
        add("Rogers", False, "requires d >= 3 and 0 <= s <= 1")

    if d == 2 and 0 < s < 1:
        target = (2 + 2 * s) / (2 - 2 * s)
        add("Han-Fang", a == target, f"alpha = (2+2s)/(2-2s) = {target}")
    elif d == 3 and Fraction(1, 4) < s < Fraction(1, 2):
        target = (3 + 2 * s) / (3 - 2 * s)
        add("Han-Fang", a == target, f"alpha = (3+2s)/(3-2s) = {target}")
    else:
        add("Han-Fang", False, "requires d = 2, 0 < s < 1 or d = 3, 1/4 < s < 1/2")

    covering = [c["case"] for c in cases if c["covered"]]
    return {
        "d": d,
        "s": str(s),
        "alpha": str(a),
        "covered": bool(covering),
        "regimes": covering,
        "cases": cases,
    }

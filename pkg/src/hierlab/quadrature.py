"""Time quadrature on uniform grids shared by the residual checks."""

from __future__ import annotations

import numpy as np


def uniform_step(times, rtol: float = 1e-9) -> float:
    """Spacing of a uniform grid; rejects anything else."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("time grid needs at least two points")
    steps = np.diff(times)
    h = (times[-1] - times[0]) / (times.size - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > rtol * max(abs(h), 1.0):
        raise ValueError("time grid is not uniform")
    return float(h)


def simpson_cumulative(values, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson integrals from index 0 to every even index.

    ``values`` has the time axis first.  Returns (even indices, integrals).  Only
    even endpoints are used so the result keeps the full fourth order.
    """
    f = np.asarray(values)
    n = f.shape[0] - 1
    if n < 2:
        raise ValueError("Simpson quadrature needs at least two intervals")
    idx = np.arange(0, n + 1, 2)
    panels = (h / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out = np.zeros((idx.size,) + f.shape[1:], dtype=np.result_type(f, float))
    out[1:] = np.cumsum(panels, axis=0)
    return idx, out


def simpson_total(values, h: float):
    """Composite Simpson over the whole grid; an odd panel count gets a 3/8 tail."""
    f = np.asarray(values)
    n = f.shape[0] - 1
    if n < 2:
        raise ValueError("Simpson quadrature needs at least two intervals")
    if n % 2 == 0:
        return (h / 3.0) * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum(axis=0) + 2.0 * f[2:-1:2].sum(axis=0))
    if n == 3:
        return (3.0 * h / 8.0) * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3])
    head = simpson_total(f[: n - 2], h)
    tail = (3.0 * h / 8.0) * (f[n - 3] + 3.0 * f[n - 2] + 3.0 * f[n - 1] + f[n])
    return head + tail

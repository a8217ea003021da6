"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately dumb: midpoint Riemann sums over plain numpy
closures, no reuse of the package's adaptive quadrature.
"""

from __future__ import annotations

import numpy as np


def midpoint(f, a: float, b: float, n: int = 10**6) -> float:
    u = a + (np.arange(n) + 0.5) / n * (b - a)
    return float(np.sum(f(u)) * (b - a) / n)


def warm_survival_oracle(s_x, f_x, s_y, gamma, omega, t: float, n: int = 10**6) -> float:
    """Reliability integral via midpoint Riemann: S_X(t) + int_0^t ratio * S_Y(gamma) dF_X."""
    if t == 0.0:
        return 1.0

    def integrand(u):
        w = omega(u)
        return s_y((t - u) + w) / s_y(w) * s_y(gamma(u)) * f_x(u)

    return float(s_x(np.asarray(t))) + midpoint(integrand, 0.0, t, n)


def exp_sf(rate):
    return lambda u: np.exp(-rate * np.asarray(u, dtype=float))


def exp_pdf(rate):
    return lambda u: rate * np.exp(-rate * np.asarray(u, dtype=float))

"""Independent reference computations used by the test-suite.

Nothing here imports the package's quadrature: the oracles are plain
uniform-grid sums on ``10**6`` nodes and closed forms.
"""
import math

import numpy as np
from scipy.special import erf


def psi(r, beta, lambda_star, theta=0.0, lambda_sup=None):
    lambda_sup = lambda_star if lambda_sup is None else lambda_sup
    return beta * r * r / (8.0 * lambda_star) + 2.0 * theta * lambda_sup / lambda_star * r


def _simpson_cumulative(values, h):
    """Cumulative trapezoid integral on a uniform grid (values at every node)."""
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(0.5 * h * (values[1:] + values[:-1]), out=out[1:])
    return out


def riemann_log_gamma(beta, lambda_star, R, theta=0.0, lambda_sup=None, nodes=10**6):
    """``log gamma`` with ``1/gamma = int_0^R Phi(s) exp(psi(s)) ds`` from uniform-grid sums.

    ``Phi`` comes from a cumulative trapezoid sum of ``exp(-psi)``; the outer
    integral is a composite Simpson sum of ``Phi exp(psi - psi(R))`` so that
    nothing overflows.
    """
    n = nodes if nodes % 2 == 1 else nodes + 1
    s = np.linspace(0.0, R, n)
    h = s[1] - s[0]
    p = psi(s, beta, lambda_star, theta, lambda_sup)
    Phi = _simpson_cumulative(np.exp(-p), h)
    v = Phi * np.exp(p - p[-1])
    simpson = h / 3.0 * (v[0] + v[-1] + 4.0 * v[1:-1:2].sum() + 2.0 * v[2:-1:2].sum())
    return -p[-1] - math.log(simpson)


def gaussian_Phi(r, beta, lambda_star):
    """``int_0^r exp(-q s^2) ds`` with ``q = beta / (8 lambda_star)``."""
    q = beta / (8.0 * lambda_star)
    if q == 0:
        return np.asarray(r, dtype=float)
    return 0.5 * math.sqrt(math.pi / q) * erf(math.sqrt(q) * np.asarray(r, dtype=float))


def flat_profile(r):
    """Closed-form profile for ``beta = theta = 0`` and ``R = 1``: ``r - r^3/6``."""
    r = np.asarray(r, dtype=float)
    return r - r**3 / 6.0

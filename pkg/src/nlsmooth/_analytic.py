"""Trapezoidal Cauchy integrals for functions analytic in ``lambda``."""

import numpy as np


def circle(center, radius, n):
    theta = 2 * np.pi * np.arange(n) / n
    u = np.exp(1j * theta)
    return center + radius * u, u


def taylor_coefficients(f, center, order, radius=0.25, n=32):
    """``[f^{(j)}(center) / j! for j in 0..order]`` from samples on a circle.

    ``f`` maps a 1-D array of points to an array whose leading axis runs over
    the points.
    """
    pts, u = circle(complex(center), radius, n)
    vals = np.asarray(f(pts))
    out = []
    for j in range(order + 1):
        w = (radius * u) ** (-j) / n
        out.append(np.tensordot(w, vals, axes=(0, 0)))
    return out


def mean_value(f, center, radius=0.25, n=32):
    return taylor_coefficients(f, center, 0, radius, n)[0]


def derivative(f, center, k=1, radius=1e-3, n=8):
    from math import factorial

    return taylor_coefficients(f, center, k, radius, n)[k] * factorial(k)

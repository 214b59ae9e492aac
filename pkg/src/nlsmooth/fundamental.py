"""Closed-form fundamental systems of the angular ODEs.

For a root ``z`` of ``P(1, z)`` the function ``(y1 + z y2)^{i lambda}`` solves
``P(D) U = 0``; at ``r = 1`` it is ``g(omega)^{i lambda}`` with
``g = cos(omega) + z sin(omega)``.  A root of multiplicity ``kappa`` contributes
the ``z``-derivatives, which up to the constant ``(i lambda)(i lambda - 1)...``
are ``sin(omega)^p g^{i lambda - p}``, ``p < kappa``.

For non-real ``z`` and ``|omega| < pi`` the point ``g(omega)`` stays off the
closed negative real axis (its imaginary part is ``Im z sin(omega)`` and it
only meets the real axis at ``g(0) = 1``), so the principal logarithm is the
branch obtained by continuation from ``omega = 0``.

The *Cauchy basis* ``Y = B W^{-1}`` (``W`` the derivative matrix of the closed
basis at ``omega = 0``) has unit Cauchy data at ``0`` and is entire in
``lambda``.  Where the closed basis degenerates it is evaluated by the mean
value over a small circle in ``lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import _analytic
from .model import ModelProblem, check_proper_ellipticity

DEGENERACY_COND = 1e5
CIRCLE_RADIUS = 0.25
CIRCLE_POINTS = 32


class DegreeDropError(ValueError):
    """``P(1, z)`` has degree below ``2m``; only the collocation path applies."""


@dataclass(frozen=True)
class BasisFunction:
    component: int
    root: complex
    log_level: int


@dataclass
class CharRoots:
    roots: list  # per component: [(z, multiplicity)]

    def basis(self, j):
        return [BasisFunction(j, z, p) for z, k in self.roots[j] for p in range(k)]

    def to_dict(self):
        return [[[z.real, z.imag, k] for z, k in comp] for comp in self.roots]


def char_roots(p: ModelProblem) -> CharRoots:
    out = []
    for j, op in enumerate(p.interior_ops):
        res = check_proper_ellipticity(op)
        if res.degree_drop:
            raise DegreeDropError(
                f"component {j + 1}: P(1, z) drops degree by {res.degree_drop}; use collocation-only mode"
            )
        if res.real_roots:
            raise ValueError(f"component {j + 1}: real characteristic root {res.real_roots[0]}")
        out.append(sorted(res.roots, key=lambda c: (c[0].real, c[0].imag)))
    return CharRoots(out)


@lru_cache(maxsize=64)
def _power_derivative_table(k):
    """``(g^nu)^{(k)} = sum_a C[a](nu) g^{nu-a} g'^a`` using ``g'' = -g``.

    Returns a ``(k+1, k+1)`` array: row ``a`` holds ascending coefficients in nu.
    """
    table = {0: np.array([1.0])}
    P = np.polynomial.polynomial
    for _ in range(k):
        new = {}
        for a, c in table.items():
            # d/domega [g^{nu-a} g'^a] = (nu-a) g^{nu-a-1} g'^{a+1} - a g^{nu-a+1} g'^{a-1}
            t = P.polymul(c, [-a, 1.0])
            new[a + 1] = P.polyadd(new.get(a + 1, [0.0]), t)
            if a > 0:
                new[a - 1] = P.polyadd(new.get(a - 1, [0.0]), -a * np.asarray(c))
        table = new
    out = np.zeros((k + 1, k + 1))
    for a, c in table.items():
        out[a, : len(c)] = c
    return out


@lru_cache(maxsize=64)
def _sin_power_fourier(p):
    """Fourier coefficients of ``sin^p``: dict kappa -> coefficient."""
    coeffs = {0: 1.0 + 0j}
    for _ in range(p):
        new = {}
        for kappa, c in coeffs.items():
            new[kappa + 1] = new.get(kappa + 1, 0) + c / 2j
            new[kappa - 1] = new.get(kappa - 1, 0) - c / 2j
        coeffs = {k: v for k, v in new.items() if v != 0}
    return coeffs


def _sin_power_derivs(p, omega, qmax):
    f = _sin_power_fourier(p)
    return [sum(c * (1j * k) ** q * np.exp(1j * k * omega) for k, c in f.items()) for q in range(qmax + 1)]


def basis_derivatives(root, log_level, lam, omega, qmax):
    """``d^q/domega^q [sin^p g^{i lambda - p}]`` for ``q = 0..qmax``.

    ``lam`` and ``omega`` broadcast; the result has a trailing axis of length
    ``qmax + 1``.
    """
    lam = np.asarray(lam, dtype=complex)
    omega = np.asarray(omega, dtype=float)
    lam, omega = np.broadcast_arrays(lam, omega)
    z = complex(root)
    p = log_level
    g = np.cos(omega) + z * np.sin(omega)
    gp = -np.sin(omega) + z * np.cos(omega)
    logg = np.log(g)
    nu = 1j * lam - p
    spow = _sin_power_derivs(p, omega, qmax)
    out = np.zeros(lam.shape + (qmax + 1,), dtype=complex)
    gpow = []
    for k in range(qmax + 1):
        T = _power_derivative_table(k)
        val = np.zeros(lam.shape, dtype=complex)
        for a in range(k + 1):
            if not np.any(T[a]):
                continue
            val = val + np.polynomial.polynomial.polyval(nu, T[a]) * np.exp((nu - a) * logg) * gp**a
        gpow.append(val)
    for q in range(qmax + 1):
        out[..., q] = sum(comb(q, k) * spow[q - k] * gpow[k] for k in range(q + 1))
    return out


def basis_eval(b: BasisFunction, lam, omega, q=0):
    """Value of ``d^q w / domega^q`` for the closed-form basis function ``b``."""
    return basis_derivatives(b.root, b.log_level, lam, omega, q)[..., q]


class FundamentalSystem:
    """Closed-form and Cauchy-normalized bases of one component's angular ODE."""

    def __init__(self, roots, order):
        self.roots = list(roots)
        self.order = order
        self.functions = [(z, p) for z, k in self.roots for p in range(k)]
        if len(self.functions) != order:
            raise ValueError("root multiplicities must add up to the operator order")

    def closed(self, lam, omega, qmax):
        """Array ``lam.shape + (qmax+1, 2m)`` of derivatives of the closed basis."""
        cols = [basis_derivatives(z, p, lam, omega, qmax) for z, p in self.functions]
        return np.stack(cols, axis=-1)

    def wronskian(self, lam):
        lam = np.asarray(lam, dtype=complex)
        return self.closed(lam, np.zeros(lam.shape), self.order - 1)

    def _scaled_cond(self, lam):
        W = self.wronskian(lam)
        scale = (1.0 + np.abs(lam))[..., None, None] ** np.arange(self.order)[:, None]
        return np.linalg.cond(W / scale)

    def _cauchy_direct(self, lam, omegas, qmax):
        lam = np.asarray(lam, dtype=complex)
        W = self.wronskian(lam)
        Winv = np.linalg.inv(W)
        out = []
        for om in omegas:
            B = self.closed(lam, np.full(lam.shape, om), qmax)
            out.append(B @ Winv)
        return np.stack(out, axis=-3)  # lam.shape + (n_omega, qmax+1, 2m)

    def cauchy(self, lam, omegas, qmax):
        """Cauchy-basis derivatives at each angle of ``omegas``.

        Returns ``(L, n_omega, qmax+1, 2m)`` for a 1-D ``lam``; column ``c`` is the
        solution with ``Y^{(q)}(0) = delta_{qc}``.
        """
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        cond = self._scaled_cond(lam)
        bad = ~(cond < DEGENERACY_COND)
        out = np.empty((lam.size, omegas.size, qmax + 1, self.order), dtype=complex)
        good = ~bad
        if np.any(good):
            out[good] = self._cauchy_direct(lam[good], omegas, qmax)
        for idx in np.flatnonzero(bad):
            out[idx] = self._cauchy_mean(lam[idx], omegas, qmax)
        return out

    def _cauchy_mean(self, center, omegas, qmax):
        radius = CIRCLE_RADIUS
        for _ in range(6):
            pts, _u = _analytic.circle(center, radius, CIRCLE_POINTS)
            if np.all(self._scaled_cond(pts) < DEGENERACY_COND):
                break
            radius *= 0.5
        return _analytic.mean_value(lambda z: self._cauchy_direct(z, omegas, qmax), center, radius, CIRCLE_POINTS)


def fundamental_systems(p: ModelProblem):
    roots = char_roots(p)
    return [FundamentalSystem(roots.roots[j], p.order) for j in range(p.N)]

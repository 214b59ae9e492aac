"""Polar form of homogeneous operators acting on ``r^{i lambda} phi(omega)``.

For a homogeneous operator ``A`` of order ``k``

    r^k A[r^{i lambda} phi(omega)] = r^{i lambda} sum_n a_n(omega, lambda) phi^{(n)}(omega)

where every ``a_n`` is a trigonometric polynomial in ``omega`` whose
coefficients are polynomials in ``lambda``.  The reduction is exact: it works
on the table of coefficients of ``e^{i kappa omega} lambda^p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .model import HomogeneousOperator


class TrigLambdaPoly:
    """``sum c[kappa, p] e^{i kappa omega} lambda^p`` with ``|kappa| <= K``, ``p <= P``."""

    def __init__(self, coef, K=None):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim != 2 or coef.shape[0] % 2 != 1:
            raise ValueError("coefficient table must have shape (2K+1, P+1)")
        self.coef = coef
        self.K = coef.shape[0] // 2 if K is None else K

    @classmethod
    def zeros(cls, K, P):
        return cls(np.zeros((2 * K + 1, P + 1), dtype=complex))

    @classmethod
    def constant(cls, c, K, P):
        out = cls.zeros(K, P)
        out.coef[K, 0] = c
        return out

    @property
    def P(self):
        return self.coef.shape[1] - 1

    @property
    def kappas(self):
        return np.arange(-self.K, self.K + 1)

    def copy(self):
        return TrigLambdaPoly(self.coef.copy())

    def __add__(self, other):
        return TrigLambdaPoly(self.coef + other.coef)

    def __sub__(self, other):
        return TrigLambdaPoly(self.coef - other.coef)

    def __mul__(self, s):
        return TrigLambdaPoly(self.coef * s)

    __rmul__ = __mul__

    def shift_kappa(self, d):
        out = np.zeros_like(self.coef)
        if d > 0:
            out[d:] = self.coef[:-d]
            lost = self.coef[-d:]
        elif d < 0:
            out[:d] = self.coef[-d:]
            lost = self.coef[:-d]
        else:
            return self.copy()
        if np.any(lost):
            raise OverflowError("Fourier degree bound exceeded")
        return TrigLambdaPoly(out)

    def times_cos(self):
        return 0.5 * (self.shift_kappa(1) + self.shift_kappa(-1))

    def times_sin(self):
        return (self.shift_kappa(1) - self.shift_kappa(-1)) * (-0.5j)

    def times_lambda(self):
        if np.any(self.coef[:, -1]):
            raise OverflowError("lambda degree bound exceeded")
        out = np.zeros_like(self.coef)
        out[:, 1:] = self.coef[:, :-1]
        return TrigLambdaPoly(out)

    def d_omega(self):
        return TrigLambdaPoly(self.coef * (1j * self.kappas)[:, None])

    def d_lambda(self):
        out = np.zeros_like(self.coef)
        out[:, :-1] = self.coef[:, 1:] * np.arange(1, self.P + 1)
        return TrigLambdaPoly(out)

    def __call__(self, omega, lam):
        omega = np.asarray(omega, dtype=float)
        lam = np.asarray(lam, dtype=complex)
        shape = np.broadcast(omega, lam).shape
        E = np.exp(1j * np.multiply.outer(omega, self.kappas))  # omega.shape + (2K+1,)
        L = np.power.outer(lam, np.arange(self.P + 1))  # lam.shape + (P+1,)
        # contract kappa with E and p with L, broadcasting the leading shapes
        t = E @ self.coef  # omega.shape + (P+1,)
        return np.broadcast_to(np.sum(t * L, axis=-1), shape)

    def max_abs(self):
        return float(np.max(np.abs(self.coef))) if self.coef.size else 0.0


@dataclass
class PolarOperator:
    """``phi -> sum_n a[n](omega, lambda) phi^{(n)}``."""

    order: int
    a: list

    def coefficients(self, omega, lam):
        return [an(omega, lam) for an in self.a]

    def d_lambda(self):
        return PolarOperator(self.order, [an.d_lambda() for an in self.a])

    def apply(self, derivs, omega, lam):
        """``derivs[n]`` holds ``phi^{(n)}`` sampled at ``omega``."""
        return sum(an(omega, lam) * derivs[n] for n, an in enumerate(self.a))

    def compose_after(self, inner: "PolarOperator") -> "PolarOperator":
        """Polar form of ``A o B`` with ``A`` = self and ``B`` = inner.

        ``B[r^{i lambda} phi] = r^{i lambda - k2} psi``; ``A`` then acts at
        homogeneity ``i lambda - k2``, i.e. with parameter ``lambda + i k2``.
        """
        k2 = inner.order
        shifted = [_lambda_shift(an, 1j * k2) for an in self.a]
        out = {}
        for n, an in enumerate(shifted):
            for mm, bm in enumerate(inner.a):
                dbt = bm
                for t in range(n + 1):
                    term = _product(an, dbt) * comb(n, t)
                    idx = mm + n - t
                    out[idx] = _padd(out[idx], term) if idx in out else term
                    dbt = dbt.d_omega()
        order = self.order + inner.order
        return PolarOperator(order, [out.get(i, TrigLambdaPoly.zeros(1, 1)) for i in range(order + 1)])


def _pad(coef, K, P):
    k0, p0 = coef.shape[0] // 2, coef.shape[1] - 1
    out = np.zeros((2 * K + 1, P + 1), dtype=complex)
    out[K - k0:K + k0 + 1, : p0 + 1] = coef
    return out


def _padd(a, b):
    K, P = max(a.K, b.K), max(a.P, b.P)
    return TrigLambdaPoly(_pad(a.coef, K, P) + _pad(b.coef, K, P))


def _product(a, b):
    K, P = a.K + b.K, a.P + b.P
    out = np.zeros((2 * K + 1, P + 1), dtype=complex)
    for i in range(a.coef.shape[0]):
        for p in range(a.coef.shape[1]):
            c = a.coef[i, p]
            if c != 0:
                out[i : i + b.coef.shape[0], p : p + b.coef.shape[1]] += c * b.coef
    return TrigLambdaPoly(out)


def _lambda_shift(a, h):
    """Coefficients of ``a(omega, lambda + h)``."""
    out = np.zeros_like(a.coef)
    for p in range(a.P + 1):
        for q in range(p + 1):
            out[:, q] += a.coef[:, p] * comb(p, q) * h ** (p - q)
    return TrigLambdaPoly(out)


def _apply_partial(state, q, which, K, P):
    """Apply ``-i d/dy_which`` to ``r^{i lambda - q} sum_n state[n] phi^{(n)}``."""
    new = {}

    def acc(n, t):
        new[n] = new[n] + t if n in new else t

    for n, a in state.items():
        mu_a = a.times_lambda() * 1j - a * q  # (i lambda - q) a
        da = a.d_omega()
        if which == 1:
            acc(n, mu_a.times_cos() - da.times_sin())
            acc(n + 1, a.times_sin() * -1)
        else:
            acc(n, mu_a.times_sin() + da.times_cos())
            acc(n + 1, a.times_cos())
    return {n: t * -1j for n, t in new.items()}


@lru_cache(maxsize=256)
def _monomial_polar(a1, a2):
    k = a1 + a2
    K = P = max(k, 1)
    state = {0: TrigLambdaPoly.constant(1.0, K, P)}
    q = 0
    for which in [2] * a2 + [1] * a1:
        state = _apply_partial(state, q, which, K, P)
        q += 1
    return k, {n: t.coef for n, t in state.items()}


def to_polar(op: HomogeneousOperator) -> PolarOperator:
    k = op.order
    K = P = max(k, 1)
    a = [TrigLambdaPoly.zeros(K, P) for _ in range(k + 1)]
    for (a1, a2), c in op.multi_indices():
        if c == 0:
            continue
        _, state = _monomial_polar(a1, a2)
        for n, coef in state.items():
            a[n] = a[n] + TrigLambdaPoly(c * coef)
    return PolarOperator(k, a)


def trig_derivatives(phi_coeffs, omega, nmax):
    """Derivatives ``0..nmax`` of ``phi = sum_kappa c_kappa e^{i kappa omega}``."""
    omega = np.asarray(omega, dtype=float)
    out = []
    for n in range(nmax + 1):
        v = np.zeros(omega.shape, dtype=complex)
        for kappa, c in phi_coeffs.items():
            v = v + c * (1j * kappa) ** n * np.exp(1j * kappa * omega)
        out.append(v)
    return out


def cartesian_apply_trig(op: HomogeneousOperator, lam, phi_coeffs, r, omega):
    """Apply ``op`` to ``r^{i lambda} phi(omega)`` with Wirtinger calculus.

    ``r^{i lambda} e^{i kappa omega} = z^a zbar^b`` with ``a = (i lambda + kappa)/2`` and
    ``b = (i lambda - kappa)/2``; ``D1 = -i (d_z + d_zbar)`` and ``D2 = d_z - d_zbar``.
    This route never touches the polar reduction and serves as its oracle.
    """
    r = np.asarray(r, dtype=float)
    omega = np.asarray(omega, dtype=float)
    k = op.order
    # expand (-i)^{a1} (dz + dzb)^{a1} (dz - dzb)^{a2} into sum_j w_j dz^j dzb^{k-j}
    weights = np.zeros(k + 1, dtype=complex)
    for (a1, a2), c in op.multi_indices():
        if c == 0:
            continue
        p1 = np.array([comb(a1, i) for i in range(a1 + 1)], dtype=complex)
        p2 = np.array([comb(a2, i) * (-1) ** (a2 - i) for i in range(a2 + 1)], dtype=complex)
        # index = power of dz
        weights += c * (-1j) ** a1 * np.convolve(p1, p2)
    lam = complex(lam)
    out = np.zeros(np.broadcast(r, omega).shape, dtype=complex)
    for kappa, cphi in phi_coeffs.items():
        if cphi == 0:
            continue
        a = (1j * lam + kappa) / 2
        b = (1j * lam - kappa) / 2
        for j in range(k + 1):
            w = weights[j]
            if w == 0:
                continue
            ff = _falling(a, j) * _falling(b, k - j)
            # z^{a-j} zbar^{b-(k-j)} = r^{i lambda - k} e^{i (kappa - j + (k - j)) omega}
            out = out + cphi * w * ff * np.exp(1j * (kappa - 2 * j + k) * omega)
    return out * r ** (1j * lam - k)


def _falling(x, n):
    out = 1.0 + 0j
    for i in range(n):
        out *= x - i
    return out


def polar_residual(op: HomogeneousOperator, lam, phi_coeffs, r, omega) -> float:
    """Sup-difference between the Cartesian and polar evaluations on a grid,
    divided by ``max(1, sup |Cartesian value|)``."""
    r = np.asarray(r, dtype=float)
    omega = np.asarray(omega, dtype=float)
    cart = cartesian_apply_trig(op, lam, phi_coeffs, r, omega)
    pol = to_polar(op)
    derivs = trig_derivatives(phi_coeffs, omega, op.order)
    polar_val = r ** (1j * complex(lam) - op.order) * pol.apply(derivs, omega, lam)
    if not cart.size:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(cart))))
    return float(np.max(np.abs(cart - polar_val))) / scale

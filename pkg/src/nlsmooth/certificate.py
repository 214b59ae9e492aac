"""Power solutions, their residual check and the annulus blow-up profile.

Every power-type function is written as a Cauchy integral in ``lambda``:

    U = (1/l!) d^l/dlambda^l [ r^{i lambda} Y(omega, lambda) x(lambda) ]  at lambda0

with ``Y`` the Cauchy basis and ``x(lambda) = sum_k (lambda - lambda0)^k x_k``.
Expanding the derivative gives ``r^{i lambda0} sum_l (i ln r)^l phi^{(l0-l)} / l!``.
Because ``Y`` solves the angular equations for every ``lambda``, the interior
equations hold identically; the boundary values reduce to the Taylor
coefficients of ``M(lambda) x(lambda)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .classify import integer_exponent, polynomial_residual, sample_grid
from .model import HomogeneousOperator
from .pencil import Pencil
from .polar import to_polar

CAUCHY_RADIUS = 0.1
CAUCHY_POINTS = 32
RESIDUAL_TOL = 1e-7
RATIO_MIN = 1 - 1e-3


class PowerFunction:
    """Evaluator of ``(1/l!) d^l/dlambda^l [r^{i lambda} Y x(lambda)]``."""

    def __init__(self, pencil: Pencil, lam0, coeffs, l, radius=CAUCHY_RADIUS, n=CAUCHY_POINTS):
        self.pencil = pencil
        self.problem = pencil.problem
        self.lam0 = complex(lam0)
        self.coeffs = [np.asarray(c, dtype=complex) for c in coeffs]
        self.l = int(l)
        u = np.exp(2j * np.pi * np.arange(n) / n)
        self.lams = self.lam0 + radius * u
        self.weights = (radius * u) ** (-self.l) / n
        self._cache = {}

    def _profiles(self, omega, qmax):
        key = (tuple(np.round(np.atleast_1d(omega), 15)), qmax)
        if key not in self._cache:
            self._cache[key] = self.pencil.root_function_values(self.lams, self.coeffs, self.lam0, omega, qmax)
        return self._cache[key]  # (P, N, W, q)

    def angular(self, omega, qmax=0):
        """Taylor coefficient of order ``l`` of ``Y x`` (no radial factor): ``(N, W, q)``."""
        vals = self._profiles(omega, qmax)
        return np.einsum("p,pnwq->nwq", self.weights, vals)

    def apply(self, j, polar, r, omega, k):
        """``A[U_j]`` on the grid ``r x omega`` for a polar operator of order ``k``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        vals = self._profiles(omega, len(polar.a) - 1)[:, j]  # (P, W, q)
        ang = np.zeros((self.lams.size, omega.size), dtype=complex)
        for n, an in enumerate(polar.a):
            coef = an(omega[None, :], self.lams[:, None])
            ang += coef * vals[:, :, n]
        radial = np.exp(np.multiply.outer(1j * self.lams - k, np.log(r)))  # (P, R)
        return np.einsum("p,pr,pw->rw", self.weights, radial, ang)

    def value(self, j, r, omega):
        return self.apply(j, to_polar(HomogeneousOperator.identity()), r, omega, 0)

    def boundary_value(self, row, r):
        """The nonlocal row applied to ``U`` along its side, at radii ``r``."""
        p = self.problem
        r = np.atleast_1d(np.asarray(r, dtype=float))
        base = p.side_angle(row.component, row.side)
        out = np.zeros(r.size, dtype=complex)
        for t in row.terms:
            theta = base + t.rotation
            out += self.apply(t.target, to_polar(t.operator), t.homothety * r, np.array([theta]), row.order)[:, 0]
        return out


@dataclass
class PowerSolution:
    lam0: complex
    l0: int
    evaluator: PowerFunction
    chain: list
    profile_residuals: list = field(default_factory=list)

    def profiles(self, n=65):
        """Sampled angular profiles ``phi^{(0..l0)}`` per component."""
        p = self.evaluator.problem
        out = []
        for k in range(self.l0 + 1):
            f = PowerFunction(self.evaluator.pencil, self.lam0, self.evaluator.coeffs, k)
            out.append([f.angular(sample_grid(p.half_angles[j], n))[j, :, 0] for j in range(p.N)])
        return out

    def to_dict(self, n=17):
        p = self.evaluator.problem
        prof = self.profiles(n)
        return {
            "lambda0": [self.lam0.real, self.lam0.imag],
            "l0": self.l0,
            "profiles": [
                {
                    "component": j + 1,
                    "omega": sample_grid(p.half_angles[j], n).tolist(),
                    "phi": [[[complex(v).real, complex(v).imag] for v in prof[k][j]] for k in range(self.l0 + 1)],
                }
                for j in range(p.N)
            ],
        }


def _is_polynomial(pencil, lam0, coeffs, l):
    """Whether the order-``l`` power function is a polynomial vector."""
    f = PowerFunction(pencil, lam0, coeffs, l)
    p = pencil.problem
    s = integer_exponent(lam0)
    if s is None:
        return False
    # log terms are absent iff the lower Taylor coefficients vanish
    for k in range(l):
        g = PowerFunction(pencil, lam0, coeffs, k)
        for j in range(p.N):
            v = g.angular(sample_grid(p.half_angles[j]))[j, :, 0]
            if np.linalg.norm(v) > 1e-9 * max(1.0, np.linalg.norm(f.angular(sample_grid(p.half_angles[j]))[j, :, 0])):
                return False
    for j in range(p.N):
        om = sample_grid(p.half_angles[j])
        if polynomial_residual(om, f.angular(om)[j, :, 0], s) > 1e-7:
            return False
    return True


def build_power_solution(pencil: Pencil, rec, l0=None) -> PowerSolution:
    """Power solution from the longest Jordan chain of ``rec``.

    With ``l0`` unset the smallest order giving a non-polynomial function is
    chosen.
    """
    if rec.chains and len(rec.chains[0]) > 1:
        chain = rec.chains[0]
    else:
        # a non-polynomial eigenvector if one exists
        chain = None
        s = integer_exponent(rec.lam)
        for i in range(rec.kernel.shape[1]):
            x = rec.kernel[:, i]
            if s is None or not _is_polynomial(pencil, rec.lam, [x], 0):
                chain = [x]
                break
        if chain is None:
            chain = rec.chains[0] if rec.chains else [rec.kernel[:, 0]]
    candidates = range(len(chain)) if l0 is None else [l0]
    for l in candidates:
        if l >= len(chain):
            raise ValueError(f"log degree {l} exceeds the chain length {len(chain)}")
        if l0 is not None or not _is_polynomial(pencil, rec.lam, chain, l):
            return PowerSolution(rec.lam, l, PowerFunction(pencil, rec.lam, chain, l), chain)
    raise ArithmeticError("every candidate power solution is polynomial; rerun at higher resolution")


def power_solution_from_vector(pencil: Pencil, lam0, x, l0=0) -> PowerSolution:
    chain = [np.asarray(x, dtype=complex)] if np.ndim(x) == 1 else [np.asarray(v) for v in x]
    return PowerSolution(complex(lam0), l0, PowerFunction(pencil, lam0, chain, l0), chain)


@dataclass
class ResidualReport:
    interior: float
    boundary: float
    scale: float
    passed: bool

    def to_dict(self):
        return {
            "interior": self.interior,
            "boundary": self.boundary,
            "scale": self.scale,
            "passed": self.passed,
        }


def verify_residual(ps, radii=(0.05, 0.2, 0.5, 0.9), n_omega=33, data=None, tol=RESIDUAL_TOL) -> ResidualReport:
    """Relative residuals of the interior equations and boundary rows on a grid.

    ``data`` optionally gives row values ``c`` for an inhomogeneous target
    ``B U = c r^{s - m}`` with ``s = i lambda0``.
    """
    f = ps.evaluator if isinstance(ps, PowerSolution) else ps
    p = f.problem
    radii = np.asarray(radii, dtype=float)
    interior = 0.0
    scale = 0.0
    for j in range(p.N):
        om = np.linspace(-p.half_angles[j], p.half_angles[j], n_omega)
        pol = f.pencil.interior_polar[j]
        res = f.apply(j, pol, radii, om, p.order)
        # scale: size of the individual derivative terms
        for n, an in enumerate(pol.a):
            single = type(pol)(pol.order, [a if i == n else a * 0 for i, a in enumerate(pol.a)])
            scale = max(scale, float(np.max(np.abs(f.apply(j, single, radii, om, p.order)) * radii[:, None] ** p.order)))
        interior = max(interior, float(np.max(np.abs(res) * radii[:, None] ** p.order)))
    boundary = 0.0
    bscale = 0.0
    s = 1j * f.lam0
    for i, row in enumerate(p.rows):
        vals = f.boundary_value(row, radii)
        target = np.zeros_like(vals)
        if data is not None:
            target = data[i] * radii ** (s - row.order)
        weight = radii ** row.order
        boundary = max(boundary, float(np.max(np.abs(vals - target) * weight)))
        for t in row.terms:
            theta = p.side_angle(row.component, row.side) + t.rotation
            v = f.apply(t.target, to_polar(t.operator), t.homothety * radii, np.array([theta]), row.order)[:, 0]
            bscale = max(bscale, float(np.max(np.abs(v) * weight)))
        if data is not None:
            bscale = max(bscale, float(np.max(np.abs(target) * weight)))
    scale = max(scale, bscale, 1e-300)
    interior /= scale
    boundary /= scale
    return ResidualReport(interior, boundary, scale, interior <= tol and boundary <= tol)


@dataclass
class BlowupProfile:
    n: list
    energies: list
    ratios: list
    expected_ratio: float
    fitted_ratio: float
    passed: bool
    reason: str = ""

    def to_dict(self):
        return {
            "n": list(self.n),
            "energies": list(self.energies),
            "ratios": list(self.ratios),
            "expected_ratio": self.expected_ratio,
            "fitted_ratio": self.fitted_ratio,
            "passed": self.passed,
            "reason": self.reason,
        }


def _top_derivatives(order):
    return [HomogeneousOperator.from_multi_indices(order, {(order - a, a): 1.0}) for a in range(order + 1)]


def annulus_energy(f: PowerFunction, n, nr=32, nw=64):
    """``int_{2^{-n-1} < r < 2^{-n}} sum_{|alpha| = 2m} |D^alpha U|^2`` over all components."""
    p = f.problem
    gr, wr = np.polynomial.legendre.leggauss(nr)
    gw, ww = np.polynomial.legendre.leggauss(nw)
    a, b = 2.0 ** (-n - 1), 2.0 ** (-n)
    r = 0.5 * (b - a) * gr + 0.5 * (a + b)
    wr = 0.5 * (b - a) * wr
    total = 0.0
    ops = [to_polar(op) for op in _top_derivatives(p.order)]
    for j in range(p.N):
        w = p.half_angles[j]
        om = w * gw
        wo = w * ww
        for pol in ops:
            vals = f.apply(j, pol, r, om, p.order)
            total += float(np.einsum("r,w,rw->", wr * r, wo, np.abs(vals) ** 2))
    return total


def blowup_profile(ps, n_range=range(4, 11), nr=32, nw=64) -> BlowupProfile:
    """Annulus energies of the order-``2m`` derivatives and their ratios."""
    f = ps.evaluator if isinstance(ps, PowerSolution) else ps
    p = f.problem
    ns = list(n_range)
    expected = 2.0 ** (2 * (p.order - 1 + f.lam0.imag))
    if is_polynomial_function(f):
        return BlowupProfile(ns, [], [], expected, 0.0, False, "polynomial function: order-2m derivatives are bounded")
    E = pmap(lambda n: annulus_energy(f, n, nr, nw), ns)
    if not all(np.isfinite(E)) or max(E) <= 0:
        return BlowupProfile(ns, E, [], expected, 0.0, False, "order-2m derivatives vanish")
    ratios = [E[i + 1] / E[i] for i in range(len(E) - 1)]
    fitted = float(np.exp(np.polyfit(ns, np.log(E), 1)[0]))
    passed = fitted >= RATIO_MIN and min(ratios) >= RATIO_MIN
    reason = "annulus energies do not decay: the order-2m seminorm diverges" if passed else "annulus energies decay"
    return BlowupProfile(ns, E, ratios, expected, fitted, passed, reason)


def is_polynomial_function(f: PowerFunction):
    return integer_exponent(f.lam0) is not None and _is_polynomial(f.pencil, f.lam0, f.coeffs, f.l)


def certify(ps: PowerSolution, n_range=range(4, 11)):
    res = verify_residual(ps)
    prof = blowup_profile(ps, n_range)
    return {"residual": res, "blowup": prof, "passed": res.passed and prof.passed}

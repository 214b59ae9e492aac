"""The operator pencil: boundary matrix over the fundamental basis and a
spectral-collocation discretization of the full ODE-plus-functional operator.

Rows are indexed by boundary functionals ``(j, sigma, mu)`` in the sorted order
of ``ModelProblem.rows``; columns of the boundary matrix by the ``2m`` Cauchy
basis functions of every component.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
from numpy.polynomial import chebyshev as C

from . import _analytic
from .fundamental import DegreeDropError, FundamentalSystem, basis_derivatives, fundamental_systems
from .model import BoundaryRow, InvalidProblem, ModelProblem, validate
from .polar import to_polar

RANK_TOL = 1e-8
DEFAULT_COLLOCATION = 48


@dataclass
class _Term:
    target: int
    theta: float
    chi: float
    polar: object
    order: int


def _row_terms(p: ModelProblem, row: BoundaryRow):
    base = p.side_angle(row.component, row.side)
    return [_Term(t.target, base + t.rotation, t.homothety, to_polar(t.operator), row.order) for t in row.terms]


@dataclass
class PencilMatrix:
    lam: complex
    M: np.ndarray
    wronskian_factors: list = field(default_factory=list)


class Pencil:
    """Evaluation kernels for one validated model problem."""

    def __init__(self, p: ModelProblem, check: bool = True):
        if check:
            rep = validate(p)
            if not rep.ok:
                raise InvalidProblem(rep)
        self.problem = p
        self.terms = [_row_terms(p, r) for r in p.rows]
        try:
            self.systems = fundamental_systems(p)
        except DegreeDropError:
            self.systems = None
        self._interior_polar = [to_polar(op) for op in p.interior_ops]

    @property
    def size(self):
        return self.problem.order * self.problem.N

    @property
    def has_fundamental(self):
        return self.systems is not None

    def _thetas(self, k):
        return sorted({t.theta for terms in self.terms for t in terms if t.target == k})

    def cauchy_matrix(self, lam):
        """Boundary functionals applied to the Cauchy basis, shape ``(L, 2mN, 2mN)``."""
        if self.systems is None:
            raise DegreeDropError("fundamental path unavailable for this problem")
        p = self.problem
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        two_m = p.order
        qmax = max(r.order for r in p.rows)
        Y = {}
        thetas = {}
        for k in range(p.N):
            th = self._thetas(k)
            if th:
                thetas[k] = {t: i for i, t in enumerate(th)}
                Y[k] = self.systems[k].cauchy(lam, th, qmax)
        M = np.zeros((lam.size, self.size, self.size), dtype=complex)
        for i, terms in enumerate(self.terms):
            for t in terms:
                yk = Y[t.target][:, thetas[t.target][t.theta]]  # (L, qmax+1, 2m)
                fac = t.chi ** (1j * lam - t.order)
                acc = np.zeros((lam.size, two_m), dtype=complex)
                for n, an in enumerate(t.polar.a):
                    acc += an(t.theta, lam)[:, None] * yk[:, n, :]
                M[:, i, t.target * two_m:(t.target + 1) * two_m] += fac[:, None] * acc
        return M

    def pencil_matrix(self, lam) -> PencilMatrix:
        """Closed-basis matrix ``M(lambda)`` with its per-component Wronskians."""
        p = self.problem
        lam = complex(lam)
        two_m = p.order
        M = np.zeros((self.size, self.size), dtype=complex)
        for i, terms in enumerate(self.terms):
            for t in terms:
                B = self.systems[t.target].closed(np.array(lam), np.array(t.theta), t.order)
                vals = sum(an(t.theta, lam) * B[n, :] for n, an in enumerate(t.polar.a))
                M[i, t.target * two_m:(t.target + 1) * two_m] += t.chi ** (1j * lam - t.order) * vals
        W = [complex(np.linalg.det(fs.wronskian(np.array(lam)))) for fs in self.systems]
        return PencilMatrix(lam, M, W)

    def char_det(self, lam):
        """Normalized characteristic determinant ``det M / prod_j W_j``."""
        scalar = np.ndim(lam) == 0
        d = np.linalg.det(self.cauchy_matrix(lam))
        return complex(d[0]) if scalar else d

    def char_det_derivative(self, lam, radius=1e-3):
        return complex(_analytic.derivative(self.char_det, complex(lam), 1, radius=radius * (1 + abs(lam)), n=8))

    def matrix_taylor(self, lam0, order, radius=0.05, n=32):
        """Taylor coefficients ``M^{(j)}(lam0)/j!`` of the Cauchy matrix."""
        return _analytic.taylor_coefficients(self.cauchy_matrix, complex(lam0), order, radius, n)

    def eigenfunction(self, lam, x, omega, qmax=0):
        """``phi_j^{(q)}(omega) = Y_j^{(q)}(omega, lam) x_j``; list over components,
        each of shape ``(len(omega), qmax+1)``."""
        p = self.problem
        two_m = p.order
        out = []
        for j in range(p.N):
            Y = self.systems[j].cauchy(np.array([complex(lam)]), omega, qmax)[0]
            out.append(Y @ x[j * two_m:(j + 1) * two_m])
        return out

    def root_function_values(self, lam_pts, coeffs, center, omega, qmax=0):
        """``Y(omega, lam) x(lam)`` with ``x(lam) = sum_k coeffs[k] (lam - center)^k``,
        evaluated for every ``lam`` in ``lam_pts``; shape ``(L, N, n_omega, qmax+1)``."""
        p = self.problem
        two_m = p.order
        lam_pts = np.atleast_1d(np.asarray(lam_pts, dtype=complex))
        xs = sum(np.multiply.outer((lam_pts - center) ** k, c) for k, c in enumerate(coeffs))
        out = np.zeros((lam_pts.size, p.N, len(np.atleast_1d(omega)), qmax + 1), dtype=complex)
        for j in range(p.N):
            Y = self.systems[j].cauchy(lam_pts, omega, qmax)  # (L, W, q, 2m)
            out[:, j] = np.einsum("lwqc,lc->lwq", Y, xs[:, j * two_m:(j + 1) * two_m])
        return out

    @cached_property
    def interior_polar(self):
        return self._interior_polar


def boundary_row(p: ModelProblem, row: BoundaryRow, lam, root, log_level):
    """One boundary functional applied to a closed-form basis function.

    Every term whose target component matches receives the basis function;
    terms addressing other components contribute zero.
    """
    lam = complex(lam)
    total = 0j
    base = p.side_angle(row.component, row.side)
    for t in row.terms:
        theta = base + t.rotation
        pol = to_polar(t.operator)
        d = basis_derivatives(root, log_level, lam, theta, row.order)
        total += t.homothety ** (1j * lam - row.order) * sum(an(theta, lam) * d[..., n] for n, an in enumerate(pol.a))
    return complex(total)


def char_det(p: ModelProblem, lam):
    return Pencil(p).char_det(lam)


# ----------------------------------------------------------------------------
# collocation


def _first_kind_nodes(n):
    k = np.arange(n)
    return np.cos((2 * k + 1) * np.pi / (2 * n))


def _fejer_weights(n):
    """Fejer's first rule on ``[-1, 1]`` at first-kind Chebyshev nodes."""
    theta = (2 * np.arange(n) + 1) * np.pi / (2 * n)
    w = np.ones(n)
    for j in range(1, n // 2 + 1):
        w -= 2 * np.cos(2 * j * theta) / (4 * j * j - 1)
    return 2 * w / n


@dataclass
class CollocationMatrix:
    lam: complex
    size: int
    matrix: np.ndarray
    weights: np.ndarray  # interior quadrature weights (concatenated over components)
    n_interior: int


class Collocation:
    """Integral-form Chebyshev collocation of the pencil.

    Per component the unknowns are ``psi = phi^{(2m)}`` at ``n`` first-kind
    Chebyshev nodes and the Cauchy data ``phi^{(t)}(0)``, ``t < 2m``; lower
    derivatives are recovered by exact spectral integration from ``0``.  The
    interior equation is enforced at every node, followed by the ``2mN``
    boundary functionals, which evaluate the interpolant at the shifted angles.
    """

    def __init__(self, pencil: Pencil, n: int = DEFAULT_COLLOCATION):
        p = pencil.problem
        if n < 2 * p.order + 4:
            raise ValueError("collocation size must be at least 4m+4")
        self.pencil = pencil
        self.problem = p
        self.n = n
        self.block = n + p.order
        x = _first_kind_nodes(n)
        self.x = x
        V = C.chebvander(x, n - 1)
        self.Vinv = np.linalg.inv(V)
        self.int_mats = [self._int_matrix(k) for k in range(p.order + 1)]
        self.nodes = [p.half_angles[j] * x for j in range(p.N)]
        self.weights = np.concatenate([p.half_angles[j] * _fejer_weights(n) for j in range(p.N)])
        self.node_ops = [self.derivative_rows(j, self.nodes[j], p.order) for j in range(p.N)]
        self.term_ops = [
            [self.derivative_rows(t.target, np.array([t.theta]), t.order) for t in terms] for terms in pencil.terms
        ]

    def _int_matrix(self, k):
        n = self.n
        eye = np.eye(n)
        if k == 0:
            return eye
        cols = [C.chebint(eye[:, i], m=k, lbnd=0) for i in range(n)]
        return np.array(cols).T  # (n + k, n)

    def derivative_rows(self, j, omega, qmax):
        """Matrices mapping the unknown block of component ``j`` to
        ``phi^{(q)}(omega)``; shape ``(qmax+1, len(omega), block)``."""
        p = self.problem
        two_m = p.order
        w = p.half_angles[j]
        omega = np.asarray(omega, dtype=float)
        xs = omega / w
        out = np.zeros((qmax + 1, omega.size, self.block))
        for q in range(qmax + 1):
            k = two_m - q
            I = self.int_mats[k]
            Vx = C.chebvander(xs, I.shape[0] - 1)
            out[q, :, : self.n] = (w**k) * (Vx @ I @ self.Vinv)
            for t in range(q, two_m):
                out[q, :, self.n + t] = omega ** (t - q) / factorial(t - q)
        return out

    def assemble(self, lam, weighted=True) -> CollocationMatrix:
        p = self.problem
        lam = complex(lam)
        n = self.n
        size = p.N * self.block
        A = np.zeros((size, size), dtype=complex)
        sw = np.sqrt(self.weights) if weighted else np.ones_like(self.weights)
        for j in range(p.N):
            pol = self.pencil.interior_polar[j]
            ops = self.node_ops[j]
            rows = np.zeros((n, self.block), dtype=complex)
            for q, aq in enumerate(pol.a):
                rows += aq(self.nodes[j], lam)[:, None] * ops[q]
            A[j * n:(j + 1) * n, j * self.block:(j + 1) * self.block] = sw[j * n:(j + 1) * n, None] * rows
        base = p.N * n
        for i, terms in enumerate(self.pencil.terms):
            for t, ops in zip(terms, self.term_ops[i]):
                fac = t.chi ** (1j * lam - t.order)
                row = sum(an(t.theta, lam) * ops[q, 0] for q, an in enumerate(t.polar.a))
                A[base + i, t.target * self.block:(t.target + 1) * self.block] += fac * row
        return CollocationMatrix(lam, size, A, self.weights, base)

    def rhs(self, interior, functionals, weighted=True):
        """Right-hand side for interior data (per node) and functional data."""
        f = np.asarray(interior, dtype=complex)
        sw = np.sqrt(self.weights) if weighted else 1.0
        return np.concatenate([sw * f, np.asarray(functionals, dtype=complex)])

    def singular_values(self, lam):
        return np.linalg.svd(self.assemble(lam).matrix, compute_uv=False)

    def relative_smallest_sv(self, lam):
        s = self.singular_values(lam)
        return float(s[-1] / s[0])

    def kernel(self, lam, tol=RANK_TOL):
        """Right null vectors (columns) and the relative singular values."""
        A = self.assemble(lam).matrix
        U, s, Vh = np.linalg.svd(A)
        k = int(np.sum(s < tol * s[0]))
        return Vh.conj().T[:, A.shape[1] - k:], s / s[0]

    def evaluate(self, vec, omega, qmax=0):
        """Component profiles from a solution vector: list of ``(len(omega), qmax+1)``."""
        out = []
        for j in range(self.problem.N):
            ops = self.derivative_rows(j, omega, qmax)
            blk = vec[j * self.block:(j + 1) * self.block]
            out.append(np.stack([ops[q] @ blk for q in range(qmax + 1)], axis=-1))
        return out

    def derivative_matrix(self, lam, radius=1e-3):
        return _analytic.derivative(
            lambda z: np.array([self.assemble(zz).matrix for zz in z]), complex(lam), 1, radius=radius, n=8
        )

    def newton(self, lam0, multiplicity=1, tol=1e-12, maxit=40):
        """Newton on ``log det A(lambda)``; returns the refined zero."""
        lam = complex(lam0)
        for _ in range(maxit):
            A = self.assemble(lam).matrix
            dA = self.derivative_matrix(lam)
            try:
                tr = np.trace(np.linalg.solve(A, dA))
            except np.linalg.LinAlgError:
                return lam
            if tr == 0:
                return lam
            step = multiplicity / tr
            lam -= step
            if abs(step) < tol * (1 + abs(lam)):
                break
        return lam


def collocation_matrix(p: ModelProblem, lam, M_c=DEFAULT_COLLOCATION) -> CollocationMatrix:
    return Collocation(Pencil(p), M_c).assemble(lam)


@dataclass
class DualVector:
    interior: np.ndarray
    functional: np.ndarray


def adjoint_kernel(col: Collocation, lam, tol=RANK_TOL):
    """Basis of the adjoint kernel under the weighted ``L2 x C^{2mN}`` pairing."""
    cm = col.assemble(lam)
    U, s, Vh = np.linalg.svd(cm.matrix)
    k = int(np.sum(s < tol * s[0]))
    out = []
    n_int = cm.n_interior
    sw = np.sqrt(cm.weights)
    for idx in range(cm.size - k, cm.size):
        y = U[:, idx]
        out.append(DualVector(y[:n_int] / sw, y[n_int:]))
    return out

"""Monomial boundary data: Conditions 3.3 and 3.4 and the logarithmic witness.

For ``s`` in ``ell..2m-2`` the boundary data ``c r^{s - m_row}`` with ``c`` in
``C_s`` must admit a homogeneous polynomial solution of degree ``s``.  The
checks below run on the collocation discretization at ``lambda = -i s``; the
witness for a failure is built from the Cauchy basis so that its residual can
be certified independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificate import PowerFunction, is_polynomial_function, verify_residual
from .classify import fourier_span, integer_exponent, sample_grid
from .pencil import RANK_TOL, Collocation, Pencil, adjoint_kernel

ORTH_TOL = 1e-8
POLY_TOL = 1e-6
NEAR_FACTOR = 10.0
SAMPLES = 129


def index_set_J(p, s):
    """Row positions (into ``p.rows``) with ``s <= m_row - 1``."""
    return [i for i, r in enumerate(p.rows) if s <= r.order - 1]


def C_basis(p, s):
    """Unit vectors spanning ``C_s``."""
    J = set(index_set_J(p, s))
    n = len(p.rows)
    return [np.eye(n)[i] for i in range(n) if i not in J]


@dataclass
class OrthogonalityResult:
    passed: bool
    max_pairing: float
    dual_dimension: int
    pairings: np.ndarray  # (dual, row) pairings with unit vectors of C_s
    witness: object = None

    def to_dict(self):
        return {"passed": self.passed, "max_pairing": self.max_pairing, "dual_dimension": self.dual_dimension}


def _collocation(pencil_or_col, M_c=None):
    if isinstance(pencil_or_col, Collocation):
        return pencil_or_col
    pencil = pencil_or_col if isinstance(pencil_or_col, Pencil) else Pencil(pencil_or_col)
    return Collocation(pencil, M_c) if M_c else Collocation(pencil)


def check_orthogonality(pencil_or_col, s, M_c=None, tol=ORTH_TOL) -> OrthogonalityResult:
    """Pairings ``<{0, c}, psi>`` for unit ``c`` in ``C_s`` and the adjoint kernel at ``-is``."""
    col = _collocation(pencil_or_col, M_c)
    p = col.problem
    duals = adjoint_kernel(col, -1j * s)
    basis_idx = [i for i in range(len(p.rows)) if i not in set(index_set_J(p, s))]
    P = np.zeros((len(duals), len(p.rows)), dtype=complex)
    for k, psi in enumerate(duals):
        nrm = np.sqrt(np.sum(np.abs(psi.interior) ** 2 * col.weights) + np.sum(np.abs(psi.functional) ** 2))
        P[k] = np.conj(psi.functional) / nrm
    sub = P[:, basis_idx] if basis_idx else np.zeros((len(duals), 0))
    mx = float(np.max(np.abs(sub))) if sub.size else 0.0
    witness = None
    if mx > tol:
        k, i = np.unravel_index(np.argmax(np.abs(sub)), sub.shape)
        witness = np.eye(len(p.rows))[basis_idx[i]]
    return OrthogonalityResult(mx <= tol, mx, len(duals), P, witness)


@dataclass
class MonomialSolution:
    s: int
    c: np.ndarray
    consistent: bool
    solve_residual: float
    polynomial_residual: float
    passed: bool
    near_threshold: bool
    kernel_dimension: int
    coefficients: object = None  # polynomial Fourier coefficients per component

    def to_dict(self):
        return {
            "s": self.s,
            "c": [[complex(v).real, complex(v).imag] for v in self.c],
            "consistent": self.consistent,
            "solve_residual": self.solve_residual,
            "polynomial_residual": self.polynomial_residual,
            "passed": self.passed,
            "near_threshold": self.near_threshold,
        }


def solve_monomial(pencil_or_col, s, c, M_c=None, tol=POLY_TOL) -> MonomialSolution:
    """Minimum-norm collocation solve of ``L(-is) phi = {0, c}`` and the
    polynomial test modulo the kernel."""
    col = _collocation(pencil_or_col, M_c)
    p = col.problem
    c = np.asarray(c, dtype=complex)
    lam = -1j * s
    cm = col.assemble(lam)
    A = cm.matrix
    rhs = np.concatenate([np.zeros(cm.n_interior, dtype=complex), c])
    U, sv, Vh = np.linalg.svd(A)
    k = int(np.sum(sv < RANK_TOL * sv[0]))
    r = sv.size - k
    coef = (U[:, :r].conj().T @ rhs) / sv[:r]
    vec = Vh[:r].conj().T @ coef
    solve_res = float(np.linalg.norm(A @ vec - rhs) / max(1.0, np.linalg.norm(rhs)))
    consistent = solve_res <= 1e-8
    kernel = Vh[r:].conj().T
    # stacked samples
    blocks, ker_blocks = [], []
    for j in range(p.N):
        om = sample_grid(p.half_angles[j], SAMPLES)
        blocks.append(col.evaluate(vec, om)[j][:, 0])
        ker_blocks.append([col.evaluate(kernel[:, i], om)[j][:, 0] for i in range(k)])
    phi = np.concatenate(blocks)
    nrm = np.linalg.norm(phi)
    if nrm <= 1e-14 * max(1.0, np.linalg.norm(c)):
        return MonomialSolution(s, c, consistent, solve_res, 0.0, consistent, False, k)
    cols = []
    for j in range(p.N):
        om = sample_grid(p.half_angles[j], SAMPLES)
        F = fourier_span(om, s)
        for q in range(F.shape[1]):
            col_vec = np.zeros(phi.size, dtype=complex)
            col_vec[j * SAMPLES:(j + 1) * SAMPLES] = F[:, q]
            cols.append(col_vec)
    for i in range(k):
        cols.append(np.concatenate([ker_blocks[j][i] for j in range(p.N)]))
    B = np.array(cols).T
    x, *_ = np.linalg.lstsq(B, phi, rcond=None)
    pres = float(np.linalg.norm(B @ x - phi) / nrm)
    passed = consistent and pres <= tol
    near = tol / NEAR_FACTOR < pres <= tol * NEAR_FACTOR
    return MonomialSolution(s, c, consistent, solve_res, pres, passed, near, k, x)


def check_monomial(pencil_or_col, s, c, M_c=None):
    """Verdict for one data vector: does ``L(-is) phi = {0, c}`` have a
    solution with ``r^s phi`` a polynomial?"""
    col = _collocation(pencil_or_col, M_c)
    sol = solve_monomial(col, s, c)
    return sol.passed, sol


@dataclass
class SReport:
    s: int
    J: list
    eigen: bool
    part1: bool
    part2: object
    part3: bool
    unit: list
    witness: object = None
    near_threshold: bool = False

    @property
    def passed(self):
        if self.eigen:
            return self.part1 and bool(self.part2) and self.part3
        return self.part3

    def to_dict(self, p):
        keys = [list(p.rows[i].key) for i in self.J]
        return {
            "s": self.s,
            "condition": "3.3" if self.eigen else "3.4",
            "J_s": [[k[0] + 1, k[1], k[2]] for k in keys],
            "part1": self.part1 if self.eigen else None,
            "part2": self.part2 if self.eigen else None,
            "part3": self.part3,
            "passed": self.passed,
            "near_threshold": self.near_threshold,
            "unit_results": [u.to_dict() for u in self.unit],
            "witness_c": None if self.witness is None else [[complex(v).real, complex(v).imag] for v in self.witness],
        }


@dataclass
class ConditionReport33_34:
    applicable: bool
    reports: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    @property
    def undetermined(self):
        return any(r.near_threshold for r in self.reports)

    def first_failure(self):
        for r in self.reports:
            if not r.passed:
                return r
        return None

    def to_dict(self, p):
        return {
            "applicable": self.applicable,
            "passed": self.passed,
            "per_s": [r.to_dict(p) for r in self.reports],
        }


def check_s(col, s, eigen_hint=None) -> SReport:
    p = col.problem
    J = index_set_J(p, s)
    _, svals = col.kernel(-1j * s)
    eigen = bool(np.sum(svals < RANK_TOL)) if eigen_hint is None else eigen_hint
    units = [e for e in C_basis(p, s)]
    part1 = bool(J)
    part2 = True
    witness = None
    if eigen:
        orth = check_orthogonality(col, s)
        part2 = orth.passed
        witness = orth.witness
    unit_results = []
    part3 = True
    near = False
    for e in units:
        sol = solve_monomial(col, s, e)
        unit_results.append(sol)
        near = near or sol.near_threshold
        if not sol.passed:
            part3 = False
            if witness is None:
                witness = e
    return SReport(s, J, eigen, part1, part2, part3, unit_results, witness, near)


def check_conditions_33_34(p_or_pencil, strip=None, M_c=None) -> ConditionReport33_34:
    """Conditions 3.3 and 3.4 for every ``s`` in ``ell..2m-2``.

    ``strip`` (a :class:`~nlsmooth.classify.StripReport`) fixes the routing by
    membership of ``s`` in ``i Lambda``; without it the collocation rank at
    ``-is`` decides.
    """
    col = _collocation(p_or_pencil, M_c)
    p = col.problem
    if p.ell > p.order - 2:
        return ConditionReport33_34(False, [])
    iL = None
    if strip is not None:
        iL = {integer_exponent(r.lam) for r, _ in strip.Lambda} - {None}
    reps = []
    for s in range(p.ell, p.order - 1):
        hint = None if iL is None else (s in iL)
        reps.append(check_s(col, s, hint))
    return ConditionReport33_34(True, reps)


@dataclass
class LogSolution:
    s: int
    c: np.ndarray
    log_coefficients: np.ndarray  # the constants c_n
    evaluator: PowerFunction
    residual: object
    has_log: bool
    nonpolynomial: bool
    radial_fit: tuple = ()

    def to_dict(self):
        return {
            "s": self.s,
            "c": [[complex(v).real, complex(v).imag] for v in self.c],
            "log_coefficients": [[complex(v).real, complex(v).imag] for v in self.log_coefficients],
            "has_log": self.has_log,
            "nonpolynomial": self.nonpolynomial,
            "residual": self.residual.to_dict(),
            "radial_fit": list(self.radial_fit),
        }


def witness_log_solution(p_or_pencil, s, c, kernel_tol=1e-8) -> LogSolution:
    """``V = r^s phi_c + r^s (i ln r) sum c_n phi^{(n)}`` solving the monomial problem.

    With ``x(lambda) = x0 + (lambda - lambda_s) x1``, ``V`` is the first
    ``lambda``-derivative of ``r^{i lambda} Y x(lambda)`` at ``lambda_s = -is``;
    its boundary values are ``r^{s-m} (M' x0 + M x1)``.  The kernel part
    ``x0 = sum c_n k_n`` solves ``G a = W^H c`` with ``G = W^H M' K`` so that
    ``c - M' x0`` lies in the range of ``M``.
    """
    pencil = p_or_pencil if isinstance(p_or_pencil, Pencil) else Pencil(p_or_pencil)
    c = np.asarray(c, dtype=complex)
    lam = -1j * s
    T = pencil.matrix_taylor(lam, 1)
    M, dM = T[0], T[1]
    U, sv, Vh = np.linalg.svd(M)
    J = int(np.sum(sv < kernel_tol * sv[0]))
    if J == 0:
        x1 = np.linalg.solve(M, c)
        f = PowerFunction(pencil, lam, [x1], 0)
        a = np.zeros(0, dtype=complex)
    else:
        K = Vh[-J:].conj().T
        W = U[:, -J:]
        G = W.conj().T @ dM @ K
        gsv = np.linalg.svd(G, compute_uv=False)
        if gsv[-1] <= 1e-8 * max(np.linalg.norm(dM, 2), 1e-300):
            raise ArithmeticError("degenerate pairing matrix at a proper eigenvalue; rerun at higher resolution")
        a = np.linalg.solve(G, W.conj().T @ c)
        x0 = K @ a
        x1, *_ = np.linalg.lstsq(M, c - dM @ x0, rcond=None)
        f = PowerFunction(pencil, lam, [x0, x1], 1)
    res = verify_residual(f, data=c)
    # radial fit r^{-s} V = a + b ln r at two radii, per component
    r1, r2 = 0.1, 0.4
    om = np.array([0.3 * pencil.problem.half_angles[0]])
    v1 = f.value(0, [r1], om)[0, 0] * r1 ** (-s)
    v2 = f.value(0, [r2], om)[0, 0] * r2 ** (-s)
    slope = (v2 - v1) / (np.log(r2) - np.log(r1))
    has_log = bool(J and np.linalg.norm(a) > 1e-10)
    nonpoly = has_log or not is_polynomial_function(f)
    return LogSolution(s, c, a, f, res, has_log, nonpoly, (abs(slope), abs(v1)))

"""Closed-form fixtures and brute-force oracles.

Fixtures are generators of :class:`ModelProblem` together with whatever is
known in closed form about them (characteristic function, eigenvalues).
``brute_polynomial_solve`` decides the monomial-data problem by exact linear
algebra on polynomial coefficients and never touches the pencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import BoundaryRow, HomogeneousOperator, ModelProblem, NonlocalTerm, laplacian_op

FEASIBILITY_TOL = 1e-9


@dataclass
class Fixture:
    name: str
    problem: ModelProblem
    closed_det: Optional[Callable] = None
    eigenvalues: Optional[Callable] = None  # (c1, c2, R) -> sorted list


def _identity_row(j, side, omega_j, nonlocal_coeff=0.0, chi=1.0):
    I = HomogeneousOperator.identity()
    terms = [NonlocalTerm(j, 0.0, 1.0, I)]
    if nonlocal_coeff != 0:
        rot = omega_j if side == 1 else -omega_j
        terms.append(NonlocalTerm(j, rot, chi, I * nonlocal_coeff))
    return BoundaryRow(j, side, 1, 0, tuple(terms))


def fix_bs(b1, b2, chi1=1.0, chi2=1.0, ell=1) -> Fixture:
    """Laplacian in the angle ``|omega| < pi/2`` with ``u + b_sigma u(G_sigma y)``.

    ``G_sigma`` rotates the side ``omega = (-1)^sigma pi/2`` onto the bisector
    ``omega = 0`` and scales by ``chi_sigma``.
    """
    w = np.pi / 2
    rows = (_identity_row(0, 1, w, b1, chi1), _identity_row(0, 2, w, b2, chi2))
    p = ModelProblem((w,), 2, (laplacian_op(),), rows, ell, name=f"FIX-BS({b1},{b2},{chi1},{chi2})")

    def det(lam):
        lam = np.asarray(lam, dtype=complex)
        nl = b1 * chi1 ** (1j * lam) + b2 * chi2 ** (1j * lam)
        return (np.sinh(lam * np.pi) + nl * np.sinh(lam * np.pi / 2)) / lam

    eig = None
    if chi1 == 1.0 and chi2 == 1.0:
        B = b1 + b2

        def eig(c1, c2, R=10.0):
            return _bs_eigenvalues(B, c1, c2, R)

    return Fixture(p.name, p, det, eig)


def fix_bs_sum(B, ell=1, split=0.25) -> Fixture:
    """``fix_bs`` with ``b1 + b2 = B`` split as ``B/2 +- split``."""
    return fix_bs(B / 2 + split, B / 2 - split, ell=ell)


def _bs_eigenvalues(B, c1, c2, R):
    """Zeros of ``sinh(l pi/2) (2 cosh(l pi/2) + B) / l`` inside the box."""
    out = []
    kmax = int(np.ceil(max(abs(c1), abs(c2)))) + 2
    # sinh(l pi/2) = 0 at l = 2ik, k != 0
    for k in range(-kmax, kmax + 1):
        if k:
            out.append(2j * k)
    # 2 cosh(l pi/2) = -B: l pi/2 = +-acosh(-B/2) + 2 pi i n
    a = np.arccosh(complex(-B / 2))
    for n in range(-2 * kmax - 2, 2 * kmax + 3):
        for sgn in (1, -1):
            out.append(2 / np.pi * (sgn * a + 2j * np.pi * n))
    keep = []
    for z in out:
        z = complex(z)
        if abs(z) < 1e-12 and abs(B + 2) > 1e-12:
            continue  # removable point of the 1/l factor unless cosh factor vanishes there too
        if c1 < z.imag < c2 and abs(z.real) < R and not any(abs(z - q) < 1e-9 for q in keep):
            keep.append(z)
    return sorted(keep, key=lambda z: (round(z.imag, 9), round(z.real, 9)))


def fix_loc(omega0, ell=0) -> Fixture:
    """Local Dirichlet Laplacian on the angle ``|omega| < omega0``."""
    rows = (_identity_row(0, 1, omega0), _identity_row(0, 2, omega0))
    p = ModelProblem((omega0,), 2, (laplacian_op(),), rows, ell, name=f"FIX-LOC({omega0})")

    def det(lam):
        lam = np.asarray(lam, dtype=complex)
        return np.sinh(2 * lam * omega0) / lam

    def eig(c1, c2, R=10.0):
        step = np.pi / (2 * omega0)
        ks = range(int(np.floor(c1 / step)) - 1, int(np.ceil(c2 / step)) + 2)
        return [1j * k * step for k in ks if k and c1 < k * step < c2]

    return Fixture(p.name, p, det, eig)


def fix_hom(b, chi, ell=1) -> Fixture:
    f = fix_bs(b, 0.0, chi, 1.0, ell=ell)
    f.name = f"FIX-HOM({b},{chi})"
    return f


def fix_b4(omega0=3 * np.pi / 8, ell=2, b=0.0, chi=1.0) -> Fixture:
    """Biharmonic operator with clamped rows ``(u, du/dnu)`` on ``|omega| < omega0``.

    With ``b != 0`` the first row on each side gains ``b u(G y)`` evaluated on
    the bisector.
    """
    lap = laplacian_op()
    rows = []
    for side in (1, 2):
        theta = (-1) ** side * omega0
        rows.append(_identity_row(0, side, omega0, b, chi))
        normal = (-1) ** side * np.array([-np.sin(theta), np.cos(theta)])  # outward
        dn = HomogeneousOperator.directional(normal)
        rows.append(BoundaryRow(0, side, 2, 1, (NonlocalTerm(0, 0.0, 1.0, dn),)))
    p = ModelProblem((omega0,), 4, (lap @ lap,), tuple(rows), ell, name=f"FIX-B4({omega0},{b})")
    return Fixture(p.name, p)


def fix_mix(omega0=np.pi / 2, b=-1.0, chi=2.0, ell=0) -> Fixture:
    """Laplacian with ``u + b u(G y)`` on the lower side and ``du/dnu`` on the upper one.

    For ``b = -1`` constants solve the homogeneous problem, so ``lambda = 0`` is
    an eigenvalue; ``chi != 1`` keeps it simple and hence proper, while the
    data ``(1, 0)`` is not orthogonal to the adjoint kernel.  With ``chi = 1``
    the zero is double and ``lambda = 0`` is improper.
    """
    theta = omega0
    normal = np.array([-np.sin(theta), np.cos(theta)])
    dn = HomogeneousOperator.directional(normal)
    rows = (_identity_row(0, 1, omega0, b, chi), BoundaryRow(0, 2, 1, 1, (NonlocalTerm(0, 0.0, 1.0, dn),)))
    p = ModelProblem((omega0,), 2, (laplacian_op(),), rows, ell, name=f"FIX-MIX({omega0},{b},{chi})")
    return Fixture(p.name, p)


FIXTURES = {"FIX-BS": fix_bs, "FIX-LOC": fix_loc, "FIX-HOM": fix_hom, "FIX-B4": fix_b4, "FIX-MIX": fix_mix}


def fixture(name: str, *args, **kwargs) -> Fixture:
    try:
        gen = FIXTURES[name.upper()]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}") from None
    return gen(*args, **kwargs)


# ----------------------------------------------------------------------------
# exact polynomial calculus


def apply_to_polynomial(op: HomogeneousOperator, coef):
    """Apply ``op`` to ``sum coef[p, q] y1^p y2^q``; returns a new coefficient array."""
    coef = np.asarray(coef, dtype=complex)
    out = np.zeros_like(coef)
    for (a1, a2), c in op.multi_indices():
        if c == 0:
            continue
        t = coef
        for axis, a in ((0, a1), (1, a2)):
            for _ in range(a):
                t = _d(t, axis)
        out = out + c * (-1j) ** (a1 + a2) * t
    return out


def _d(coef, axis):
    n = coef.shape[axis]
    k = np.arange(n, dtype=float)
    shape = [1, 1]
    shape[axis] = n
    scaled = coef * k.reshape(shape)
    out = np.zeros_like(coef)
    if axis == 0:
        out[:-1] = scaled[1:]
    else:
        out[:, :-1] = scaled[:, 1:]
    return out


def homogeneous_basis(s):
    """Coefficient arrays of ``y1^(s-a) y2^a``, ``a = 0..s``."""
    out = []
    for a in range(s + 1):
        c = np.zeros((s + 1, s + 1), dtype=complex)
        c[s - a, a] = 1.0
        out.append(c)
    return out


def eval_polynomial(coef, y1, y2):
    return np.polynomial.polynomial.polyval2d(y1, y2, coef)


@dataclass
class BruteResult:
    feasible: bool
    residual: float
    V: Optional[np.ndarray]  # (N, s+1) coefficients of y1^(s-a) y2^a


def brute_polynomial_solve(p: ModelProblem, s: int, c) -> BruteResult:
    """Is there a homogeneous polynomial vector ``V`` of degree ``s`` with
    ``P_j V_j = 0`` and ``B_row V = c_row r^(s - m_row)`` on every side?

    ``s <= 2m - 2`` makes the interior equations void.  A nonlocal term samples
    ``B V_k`` at ``chi r (cos theta, sin theta)``, which by homogeneity is
    ``(chi r)^(s - m_row) (B V_k)(cos theta, sin theta)``.
    """
    if s > p.order - 2 or s < 0:
        raise ValueError("s must lie in 0..2m-2")
    c = np.asarray(c, dtype=complex)
    basis = homogeneous_basis(s)
    n_unk = p.N * (s + 1)
    A = np.zeros((len(p.rows), n_unk), dtype=complex)
    for i, row in enumerate(p.rows):
        base = p.side_angle(row.component, row.side)
        for t in row.terms:
            theta = base + t.rotation
            for a, bc in enumerate(basis):
                val = eval_polynomial(apply_to_polynomial(t.operator, bc), np.cos(theta), np.sin(theta))
                if s >= row.order:
                    A[i, t.target * (s + 1) + a] += t.homothety ** (s - row.order) * val
    # rows with m_row > s see B V = 0 identically
    x, *_ = np.linalg.lstsq(A, c, rcond=None)
    res = float(np.linalg.norm(A @ x - c))
    scale = max(1.0, float(np.linalg.norm(c)))
    ok = res <= FEASIBILITY_TOL * scale
    return BruteResult(ok, res, x.reshape(p.N, s + 1) if ok else None)


def closed_newton(f: Callable, z0, tol=1e-14, maxit=60, h=1e-6):
    """Newton iteration on a scalar analytic function with a centered derivative."""
    z = complex(z0)
    for _ in range(maxit):
        d = (f(z + h) - f(z - h)) / (2 * h)
        step = f(z) / d
        z -= step
        if abs(step) < tol * (1 + abs(z)):
            break
    return z


"""Model problems in plane angles and their structural checks.

A model problem lives at one orbit of conjugation points: ``N`` plane angles
``|omega| < omega_j``, constant-coefficient homogeneous interior operators of
order ``2m`` and ``2mN`` nonlocal boundary rows.  Every row collects terms
``chi^{...} (B U_k)(G y)`` where ``G`` rotates by a fixed angle and scales by
``chi > 0``.

Differential operators use ``D = -i d/dy``.  A :class:`HomogeneousOperator`
of order ``k`` stores ``coeffs[i]`` as the coefficient of ``D1^(k-i) D2^i``,
so ``coeffs`` are also the coefficients of the symbol ``P(1, z)`` in ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ROOT_CLUSTER_TOL = 1e-6
GEOMETRY_MARGIN = 1e-12


@dataclass(frozen=True)
class HomogeneousOperator:
    order: int
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if self.order < 0:
            raise ValueError("operator order must be nonnegative")
        if len(coeffs) != self.order + 1:
            raise ValueError(
                f"operator of order {self.order} needs {self.order + 1} coefficients, got {len(coeffs)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_multi_indices(cls, order: int, terms: dict) -> "HomogeneousOperator":
        """Build from ``{(a1, a2): c}`` with ``a1 + a2 == order``."""
        coeffs = [0j] * (order + 1)
        for (a1, a2), c in terms.items():
            if a1 + a2 != order:
                raise ValueError(f"multi-index {(a1, a2)} is not of order {order}")
            coeffs[a2] += complex(c)
        return cls(order, tuple(coeffs))

    @classmethod
    def identity(cls) -> "HomogeneousOperator":
        return cls(0, (1.0,))

    @classmethod
    def directional(cls, d: Sequence[float]) -> "HomogeneousOperator":
        """The real derivative ``d . grad = i (d1 D1 + d2 D2)``."""
        return cls(1, (1j * d[0], 1j * d[1]))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    def multi_indices(self):
        k = self.order
        return [((k - i, i), c) for i, c in enumerate(self.coeffs)]

    def symbol(self, xi1, xi2):
        xi1 = np.asarray(xi1, dtype=complex)
        xi2 = np.asarray(xi2, dtype=complex)
        out = np.zeros(np.broadcast(xi1, xi2).shape, dtype=complex)
        for (a1, a2), c in self.multi_indices():
            if c != 0:
                out = out + c * xi1**a1 * xi2**a2
        return out

    def compose(self, other: "HomogeneousOperator") -> "HomogeneousOperator":
        return HomogeneousOperator(self.order + other.order, tuple(np.convolve(self.array, other.array)))

    def __matmul__(self, other):
        return self.compose(other)

    def __add__(self, other: "HomogeneousOperator") -> "HomogeneousOperator":
        if other.order != self.order:
            raise ValueError("cannot add operators of different orders")
        return HomogeneousOperator(self.order, tuple(self.array + other.array))

    def __mul__(self, scalar) -> "HomogeneousOperator":
        return HomogeneousOperator(self.order, tuple(complex(scalar) * self.array))

    __rmul__ = __mul__

    def power(self, n: int) -> "HomogeneousOperator":
        out = HomogeneousOperator.identity()
        for _ in range(n):
            out = out @ self
        return out

    def is_zero(self) -> bool:
        return not np.any(self.array)


def laplacian_op() -> HomogeneousOperator:
    """``D1^2 + D2^2``, i.e. minus the Laplacian."""
    return HomogeneousOperator(2, (1.0, 0.0, 1.0))


def rotate(v, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


@dataclass(frozen=True)
class NonlocalTerm:
    target: int  # component index k, 0-based
    rotation: float
    homothety: float
    operator: HomogeneousOperator

    def __post_init__(self):
        if not self.homothety > 0:
            raise ValueError("homothety coefficient must be positive")

    def is_local_for(self, component: int) -> bool:
        return self.target == component and self.rotation == 0.0 and self.homothety == 1.0


@dataclass(frozen=True)
class BoundaryRow:
    component: int  # j, 0-based
    side: int  # sigma in {1, 2}; side sits at omega = (-1)^sigma omega_j
    mu: int  # 1..m
    order: int
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.side not in (1, 2):
            raise ValueError("side must be 1 or 2")

    @property
    def key(self):
        return (self.component, self.side, self.mu)

    @property
    def local_terms(self):
        return [t for t in self.terms if t.is_local_for(self.component)]

    @property
    def nonlocal_terms(self):
        return [t for t in self.terms if not t.is_local_for(self.component)]


@dataclass(frozen=True)
class ModelProblem:
    half_angles: tuple
    order: int  # 2m
    interior_ops: tuple
    rows: tuple
    ell: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "half_angles", tuple(float(w) for w in self.half_angles))
        object.__setattr__(self, "interior_ops", tuple(self.interior_ops))
        rows = sorted(self.rows, key=lambda r: r.key)
        object.__setattr__(self, "rows", tuple(rows))

    @property
    def N(self) -> int:
        return len(self.half_angles)

    @property
    def m(self) -> int:
        return self.order // 2

    @property
    def row_keys(self):
        return [r.key for r in self.rows]

    def side_angle(self, j: int, side: int) -> float:
        return (-1) ** side * self.half_angles[j]

    def check_structure(self) -> list:
        """Return a list of structural problems (empty when well formed)."""
        errs = []
        if self.order < 2 or self.order % 2:
            errs.append(f"order 2m must be an even integer >= 2, got {self.order}")
            return errs
        m = self.m
        if len(self.interior_ops) != self.N:
            errs.append("need one interior operator per component")
        for j, w in enumerate(self.half_angles):
            if not 0 < w < np.pi:
                errs.append(f"half angle of component {j + 1} must lie in (0, pi), got {w}")
        for j, op in enumerate(self.interior_ops):
            if op.order != self.order:
                errs.append(f"interior operator {j + 1} has order {op.order}, expected {self.order}")
            elif op.is_zero():
                errs.append(f"interior operator {j + 1} vanishes")
        if not 0 <= self.ell <= self.order - 1:
            errs.append(f"ell must satisfy 0 <= ell <= 2m-1, got {self.ell}")
        expected = {(j, s, mu) for j in range(self.N) for s in (1, 2) for mu in range(1, m + 1)}
        got = [r.key for r in self.rows]
        if len(got) != len(set(got)) or set(got) != expected:
            errs.append("boundary rows must be exactly one per (component, side, mu)")
        for r in self.rows:
            label = f"row {(r.component + 1, r.side, r.mu)}"
            if r.order > self.order - 1 or r.order < 0:
                errs.append(f"{label}: order {r.order} outside 0..2m-1")
            if len(r.local_terms) != 1:
                errs.append(f"{label}: needs exactly one local term, found {len(r.local_terms)}")
            for t in r.terms:
                if t.operator.order != r.order:
                    errs.append(f"{label}: term operator order {t.operator.order} != row order {r.order}")
                if not 0 <= t.target < self.N:
                    errs.append(f"{label}: target component {t.target + 1} out of range")
        return errs


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def add(self, name, passed, issues=()):
        self.checks[name] = self.checks.get(name, True) and bool(passed)
        self.issues.extend(issues)

    def to_dict(self):
        return {"ok": self.ok, "checks": dict(self.checks), "issues": list(self.issues)}


def validate_geometry(p: ModelProblem) -> ValidationReport:
    """Every nonlocal evaluation point must lie strictly inside its target angle."""
    rep = ValidationReport()
    bad = []
    for r in p.rows:
        for t in r.nonlocal_terms:
            theta = p.side_angle(r.component, r.side) + t.rotation
            margin = p.half_angles[t.target] - abs(theta)
            if margin <= GEOMETRY_MARGIN:
                bad.append(
                    {
                        "check": "geometry",
                        "row": [r.component + 1, r.side, r.mu],
                        "target": t.target + 1,
                        "shifted_angle": theta,
                        "margin": margin,
                    }
                )
    rep.add("geometry", not bad, bad)
    return rep


def cluster_roots(roots, tol=ROOT_CLUSTER_TOL):
    """Group numerically repeated roots; returns ``[(root, multiplicity)]``."""
    roots = list(np.asarray(roots, dtype=complex))
    clusters = []
    while roots:
        r0 = roots.pop(0)
        group = [r0]
        scale = max(1.0, abs(r0))
        rest = []
        for r in roots:
            (group if abs(r - r0) <= tol * scale else rest).append(r)
        roots = rest
        clusters.append((complex(np.mean(group)), len(group)))
    clusters.sort(key=lambda c: (round(c[0].real, 9), round(c[0].imag, 9)))
    return clusters


@dataclass
class EllipticityResult:
    ok: bool
    roots: list  # [(root, multiplicity)]
    upper: int
    lower: int
    real_roots: list
    degree_drop: int

    def to_dict(self):
        return {
            "ok": self.ok,
            "roots": [[r.real, r.imag, k] for r, k in self.roots],
            "upper": self.upper,
            "lower": self.lower,
            "real_roots": [[r.real, r.imag] for r in self.real_roots],
            "degree_drop": self.degree_drop,
        }


def check_proper_ellipticity(op: HomogeneousOperator, tol: float = 1e-10) -> EllipticityResult:
    c = op.array
    deg = op.order
    while deg > 0 and c[deg] == 0:
        deg -= 1
    drop = op.order - deg
    raw = np.roots(c[: deg + 1][::-1]) if deg > 0 else np.array([], dtype=complex)
    roots = cluster_roots(raw)
    real = [r for r, _ in roots if abs(r.imag) <= tol * max(1.0, abs(r))]
    upper = sum(k for r, k in roots if r.imag > 0 and r not in real)
    lower = sum(k for r, k in roots if r.imag < 0 and r not in real)
    m = op.order // 2
    ok = drop == 0 and not real and upper == m and lower == m and op.order % 2 == 0
    return EllipticityResult(ok, roots, upper, lower, real, drop)


def _side_frame(p: ModelProblem, j: int, side: int):
    theta = p.side_angle(j, side)
    tau = np.array([np.cos(theta), np.sin(theta)])
    normal = (-1) ** side * np.array([np.sin(theta), -np.cos(theta)])  # inward
    return tau, normal


def check_lopatinsky(p: ModelProblem, tol: float = 1e-9) -> ValidationReport:
    """Complementing condition for the local parts on each side.

    The half-plane is ``{x tau + t n : t > 0}``.  For ``xi = +-1`` the interior
    symbol ``P(xi tau + zeta n)`` is split by the sign of ``Im zeta``; the local
    boundary symbols ``B(xi tau + zeta n)`` reduced modulo the factor carrying the
    roots with ``Im zeta > 0`` must span the ``m``-dimensional quotient.
    """
    rep = ValidationReport()
    m = p.m
    bad = []
    for j in range(p.N):
        P = p.interior_ops[j]
        for side in (1, 2):
            tau, n = _side_frame(p, j, side)
            rows = [r for r in p.rows if r.component == j and r.side == side]
            for xi in (1.0, -1.0):
                pz = _directional_poly(P, xi * tau, n)
                roots = np.roots(pz[::-1])
                plus = [z for z in roots if z.imag > 0]
                if len(plus) != m:
                    bad.append({"check": "lopatinsky", "component": j + 1, "side": side,
                                "xi": xi, "reason": "interior symbol not properly elliptic"})
                    continue
                mplus = np.poly(plus)[::-1]  # ascending coefficients
                mat = []
                for r in rows:
                    b = _directional_poly(r.local_terms[0].operator, xi * tau, n)
                    rem = np.polynomial.polynomial.polydiv(b, mplus)[1] if len(b) >= len(mplus) else b
                    rem = np.concatenate([rem, np.zeros(max(0, m - len(rem)))])[:m]
                    mat.append(rem / max(1.0, np.max(np.abs(b))))
                mat = np.array(mat)
                sv = np.linalg.svd(mat, compute_uv=False) if mat.size else np.array([0.0])
                rank = int(np.sum(sv > tol * max(1.0, sv[0])))
                if rank < m:
                    bad.append({"check": "lopatinsky", "component": j + 1, "side": side,
                                "xi": xi, "rank_deficiency": m - rank})
    rep.add("lopatinsky", not bad, bad)
    return rep


def _directional_poly(op: HomogeneousOperator, a, b):
    """Ascending coefficients in ``zeta`` of ``op.symbol(a + zeta b)``."""
    poly = np.zeros(op.order + 1, dtype=complex)
    P = np.polynomial.polynomial
    for (a1, a2), c in op.multi_indices():
        if c == 0:
            continue
        t = P.polymul(P.polypow([a[0], b[0]], a1), P.polypow([a[1], b[1]], a2))
        poly[: len(t)] += c * t
    return poly


def validate(p: ModelProblem) -> ValidationReport:
    rep = ValidationReport()
    errs = p.check_structure()
    rep.add("structure", not errs, [{"check": "structure", "message": e} for e in errs])
    if errs:
        return rep
    for j, op in enumerate(p.interior_ops):
        res = check_proper_ellipticity(op)
        issues = []
        if not res.ok:
            issues.append({"check": "ellipticity", "component": j + 1, **res.to_dict()})
        rep.add("ellipticity", res.ok, issues)
    g = validate_geometry(p)
    rep.add("geometry", g.ok, g.issues)
    if rep.checks["ellipticity"]:
        lop = check_lopatinsky(p)
        rep.add("lopatinsky", lop.ok, lop.issues)
    return rep


class InvalidProblem(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(str(i) for i in report.issues) or "invalid model problem")

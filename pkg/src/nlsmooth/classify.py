"""Proper and improper eigenvalues and the strip report.

An eigenvalue ``lam0`` is proper when ``s = i lam0`` is a nonnegative integer,
no eigenvector has an associated vector, and every ``r^s phi_j(omega)`` is a
homogeneous polynomial.  The last property is tested through the Fourier
support of ``phi_j``: ``r^s phi`` is a homogeneous polynomial of degree ``s``
iff ``phi`` lies in ``span{e^{i kappa omega} : |kappa| <= s, kappa = s mod 2}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pencil import Pencil
from .spectrum import LINE_TOL, EigenvalueRecord, StripQuery, cap_diagnostic, find_in_strip

INTEGER_TOL = 1e-7
POLY_TOL = 1e-7
STRADDLE_TOL = 1e-6
SAMPLES = 201


def integer_exponent(lam0, tol=INTEGER_TOL):
    """``i lam0`` rounded to a nonnegative integer, or ``None``."""
    s = 1j * complex(lam0)
    n = int(round(s.real))
    if n >= 0 and abs(s - n) <= tol:
        return n
    return None


def fourier_span(omega, s):
    """Columns ``e^{i kappa omega}`` for ``|kappa| <= s``, ``kappa = s (mod 2)``."""
    kappas = np.arange(-s, s + 1, 2)
    return np.exp(1j * np.multiply.outer(np.asarray(omega, dtype=float), kappas))


def sample_grid(half_angle, n=SAMPLES):
    return np.linspace(-half_angle, half_angle, n)


def polynomial_residual(omega, values, s):
    """Relative least-squares residual of ``values`` against the degree-``s`` span."""
    values = np.asarray(values, dtype=complex)
    norm = np.linalg.norm(values)
    if norm == 0:
        return 0.0
    A = fourier_span(omega, s)
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return float(np.linalg.norm(A @ coef - values) / norm)


def polynomial_test(pencil: Pencil, lam0, x, s=None, n=SAMPLES):
    """Largest per-component residual of the profile ``Y(., lam0) x``.

    Returns ``inf`` when ``i lam0`` is not a nonnegative integer and ``s`` is
    not given.
    """
    if s is None:
        s = integer_exponent(lam0)
        if s is None:
            return float("inf")
    p = pencil.problem
    samples = []
    for j in range(p.N):
        om = sample_grid(p.half_angles[j], n)
        samples.append((om, pencil.eigenfunction(lam0, x, om)[j][:, 0]))
    total = np.sqrt(sum(np.linalg.norm(v) ** 2 for _, v in samples))
    worst = 0.0
    for om, vals in samples:
        if np.linalg.norm(vals) <= 1e-14 * total:
            continue
        worst = max(worst, polynomial_residual(om, vals, s))
    return worst


@dataclass
class PropernessVerdict:
    lam: complex
    proper: bool
    reasons: list
    exponent: object  # int or None
    polynomial_residual: float

    def to_dict(self):
        return {
            "re": self.lam.real,
            "im": self.lam.imag,
            "proper": self.proper,
            "reasons": list(self.reasons),
            "exponent": self.exponent,
            "polynomial_residual": self.polynomial_residual,
        }


def classify_eigenvalue(pencil: Pencil, rec: EigenvalueRecord) -> PropernessVerdict:
    reasons = []
    s = integer_exponent(rec.lam)
    if s is None:
        reasons.append("non-integer exponent")
    if rec.alg_mult > rec.geo_mult:
        reasons.append("associated vector exists")
    res = float("nan")
    if s is not None:
        res = max(polynomial_test(pencil, rec.lam, rec.kernel[:, i], s) for i in range(rec.kernel.shape[1]))
        if res > POLY_TOL:
            reasons.append("eigenfunction not polynomial")
    return PropernessVerdict(rec.lam, not reasons, reasons, s, res)


@dataclass
class StripReport:
    ell: int
    order: int
    band: tuple
    Lambda: list  # (record, verdict) with 1-2m < Im < 1-ell
    line: list  # (record, verdict) on Im = 1-2m
    edge: list  # (record, verdict) on Im = 1-ell, outside the open band
    straddle: list
    flags: dict
    cap_min: float
    R: float
    undetermined: list = field(default_factory=list)

    @property
    def i_Lambda(self):
        return sorted({v.exponent for _, v in self.Lambda if v.exponent is not None and v.proper})

    def all_records(self):
        return self.line + self.Lambda + self.edge

    def to_dict(self):
        def rows(items, where):
            return [{**r.to_dict(), **v.to_dict(), "position": where} for r, v in items]

        return {
            "ell": self.ell,
            "order": self.order,
            "band": list(self.band),
            "R": self.R,
            "cap_min_abs_delta": self.cap_min,
            "eigenvalues": rows(self.line, "critical line") + rows(self.Lambda, "band") + rows(self.edge, "upper edge"),
            "straddle": [r.to_dict() for r in self.straddle],
            "flags": dict(self.flags),
            "undetermined": list(self.undetermined),
        }


def strip_report(p_or_pencil, R=10.0, M_c=None) -> StripReport:
    pencil = p_or_pencil if isinstance(p_or_pencil, Pencil) else Pencil(p_or_pencil)
    p = pencil.problem
    lo, hi = 1 - p.order, 1 - p.ell
    q = StripQuery(lo, hi, R)
    recs = find_in_strip(pencil, q, M_c)
    line, band, edge, straddle = [], [], [], []
    for r in recs:
        v = classify_eigenvalue(pencil, r)
        y = r.lam.imag
        if abs(y - lo) <= LINE_TOL:
            line.append((r, v))
        elif abs(y - hi) <= LINE_TOL:
            edge.append((r, v))
        elif lo < y < hi:
            band.append((r, v))
            if min(abs(y - lo), abs(y - hi)) <= STRADDLE_TOL:
                straddle.append(r)
        elif min(abs(y - lo), abs(y - hi)) <= STRADDLE_TOL:
            straddle.append(r)
    target = 1j * lo
    c31 = not line
    c32 = all(v.proper for _, v in band)
    c41 = len(line) == 1 and abs(line[0][0].lam - target) <= LINE_TOL and line[0][1].proper
    c51 = any(not v.proper for _, v in band + line)
    flags = {"C3.1": c31, "C3.2": c32, "C4.1": c41, "C5.1": c51}
    cap = cap_diagnostic(pencil, q)
    und = []
    if straddle:
        und.append("eigenvalue within 1e-6 of a strip edge but outside the line tolerance")
    for r in recs:
        if any("spurious" in n or "differs" in n or "integral" in n for n in r.notes):
            und.append(f"eigenvalue {r.lam:.6g}: " + "; ".join(r.notes))
    if cap < 1e-3:
        und.append(f"|Delta| on the caps Re = +-{R} drops to {cap:.3g}; widen the search")
    return StripReport(p.ell, p.order, (lo, hi), band, line, edge, straddle, flags, cap, R, und)

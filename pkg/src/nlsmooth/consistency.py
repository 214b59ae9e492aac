"""Border-case machinery: the differentiated local system and the consistency functional.

Row ``(j, sigma, mu)`` of order ``m_row`` is differentiated ``n = 2m - m_row - 1``
times along its own side.  Pulling the tangential derivative through
``G = chi R_rho`` turns each term into ``chi^n ((R_rho tau) . grad)^n B``;
dropping the rotation-homothety substitution gives the local operators of the
hat system.  Vectors are stored as coefficients of the order-``(2m-1)``
operator in real derivatives ``d1^(2m-1-i) d2^i``, concatenated over target
components.

Given the ``beta`` coefficients of every dependent row, boundary traces
``Z(r)`` are consistent when
``int_0^eps r^-1 |Z_dep^(n) - sum beta Z_ind^(n')|^2 dr`` is finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from ._parallel import pmap
from .model import HomogeneousOperator, ModelProblem, rotate
from .oracle import apply_to_polynomial

RANK_TOL = 1e-10
G0_TOL = 1e-10
EXPONENT_MIN = 0.05
STABILITY = 0.01
ADMISSIBLE_TOL = 1e-9


def _key_str(key):
    j, side, mu = key
    return f"({j + 1},{side},{mu})"


# ----------------------------------------------------------------------------
# hat system


@dataclass
class HatSystem:
    keys: list
    orders: list  # derivative count n per row
    vectors: np.ndarray  # (rows, 2m N)
    order: int  # 2m
    N: int

    def block(self, i, k):
        """Coefficients of row ``i`` acting on component ``k``."""
        return self.vectors[i, k * self.order : (k + 1) * self.order]

    def determinant(self):
        """Determinant of the square hat matrix (``N = 1``, ``2m`` rows)."""
        A = self.vectors
        if A.shape[0] != A.shape[1]:
            raise ValueError("hat matrix is not square")
        return complex(np.linalg.det(A))

    def to_dict(self):
        return {
            "rows": [_key_str(k) for k in self.keys],
            "derivative_orders": list(self.orders),
            "vectors": [[[complex(v).real, complex(v).imag] for v in row] for row in self.vectors],
        }


def build_hat_system(p: ModelProblem) -> HatSystem:
    two_m = p.order
    keys, orders, vecs = [], [], []
    for row in p.rows:
        n = two_m - row.order - 1
        theta = p.side_angle(row.component, row.side)
        tau = np.array([np.cos(theta), np.sin(theta)])
        v = np.zeros(two_m * p.N, dtype=complex)
        for t in row.terms:
            d = rotate(tau, t.rotation)
            op = t.homothety**n * HomogeneousOperator(1, (d[0], d[1])).power(n) @ t.operator
            # D-form to real-derivative form: (i D)^n from the chain rule, D^a = (-i)^|a| d^a
            v[t.target * two_m : (t.target + 1) * two_m] += (1j) ** n * (-1j) ** (two_m - 1) * op.array
        keys.append(row.key)
        orders.append(n)
        vecs.append(v)
    return HatSystem(keys, orders, np.array(vecs), two_m, p.N)


@dataclass
class BetaDecomposition:
    independent: list  # row positions of the maximal independent subsystem
    dependent: list  # row positions expressed through it
    beta: np.ndarray  # (len(dependent), len(independent))
    rank: int
    residuals: list
    keys: list
    full_rank: bool

    def coefficients(self, i):
        """``{independent key: beta}`` for dependent position ``i``."""
        row = self.beta[self.dependent.index(i)]
        return {self.keys[k]: complex(b) for k, b in zip(self.independent, row)}

    def to_dict(self):
        return {
            "rank": self.rank,
            "independent": [_key_str(self.keys[i]) for i in self.independent],
            "dependent": [
                {
                    "row": _key_str(self.keys[d]),
                    "beta": {_key_str(k): [b.real, b.imag] for k, b in self.coefficients(d).items()},
                    "reconstruction_residual": self.residuals[n],
                }
                for n, d in enumerate(self.dependent)
            ],
            "full_rank": self.full_rank,
        }


def beta_decompose(h: HatSystem, tol=RANK_TOL) -> BetaDecomposition:
    """Greedy pivoting in reverse lexicographic row order.

    A row joins the independent set when its distance to the span of the rows
    already chosen exceeds ``tol`` times the largest row norm.
    """
    A = h.vectors
    scale = max(float(np.max(np.linalg.norm(A, axis=1))), 1e-300)
    order = sorted(range(len(h.keys)), key=lambda i: h.keys[i], reverse=True)
    chosen, dependent = [], []
    for i in order:
        if chosen:
            B = A[chosen].T
            x, *_ = np.linalg.lstsq(B, A[i], rcond=None)
            dist = np.linalg.norm(B @ x - A[i])
        else:
            dist = np.linalg.norm(A[i])
        (chosen if dist > tol * scale else dependent).append(i)
    independent = sorted(chosen)
    dependent = sorted(dependent)
    beta = np.zeros((len(dependent), len(independent)), dtype=complex)
    residuals = []
    if independent:
        B = A[independent].T
        for n, d in enumerate(dependent):
            x, *_ = np.linalg.lstsq(B, A[d], rcond=None)
            beta[n] = x
            residuals.append(float(np.linalg.norm(B @ x - A[d])))
    else:
        residuals = [float(np.linalg.norm(A[d])) for d in dependent]
    return BetaDecomposition(independent, dependent, beta, len(independent), residuals, list(h.keys), not dependent)


def hat_border(p: ModelProblem, tol=RANK_TOL) -> bool:
    """Algebraic border detector: the hat system is linearly dependent."""
    return not beta_decompose(build_hat_system(p), tol).full_rank


# ----------------------------------------------------------------------------
# traces and the consistency functional


@dataclass
class BoundaryTrace:
    """``Z^0(r)`` for one row: polynomial coefficients in ``r`` or samples.

    ``jet`` optionally carries ``Z^(b)(0)`` for sampled data, needed by the
    admissibility conditions.
    """

    key: tuple
    poly: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    jet: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.poly is None) == (self.values is None):
            raise ValueError("a trace is either polynomial or sampled")
        if self.poly is not None:
            self.poly = np.atleast_1d(np.asarray(self.poly, dtype=complex))
        else:
            self.r = np.asarray(self.r, dtype=float)
            self.values = np.asarray(self.values, dtype=complex)
            if self.r.shape != self.values.shape or self.r.ndim != 1:
                raise ValueError("sample radii and values must be 1-d arrays of equal length")
            if not np.all(np.isfinite(self.values)):
                raise ValueError(f"trace {_key_str(self.key)} has non-finite samples")
            if np.any(np.diff(self.r) <= 0) or self.r[0] <= 0:
                raise ValueError("sample radii must be positive and increasing")
        if self.jet is not None:
            self.jet = np.asarray(self.jet, dtype=complex)

    @property
    def is_polynomial(self):
        return self.poly is not None

    def derivative_at_zero(self, b):
        if self.is_polynomial:
            return complex(npoly.polyder(self.poly, b)[0]) if b < len(self.poly) else 0j
        if self.jet is not None and b < len(self.jet):
            return complex(self.jet[b])
        raise ValueError(f"trace {_key_str(self.key)} carries no derivative of order {b} at r = 0")

    def plus_polynomial(self, q):
        q = np.asarray(q, dtype=complex)
        if self.is_polynomial:
            n = max(len(self.poly), len(q))
            return BoundaryTrace(self.key, poly=np.pad(self.poly, (0, n - len(self.poly))) + np.pad(q, (0, n - len(q))))
        jet = None
        if self.jet is not None:
            jet = self.jet + np.array([factorial(b) * (q[b] if b < len(q) else 0) for b in range(len(self.jet))])
        return BoundaryTrace(self.key, r=self.r, values=self.values + npoly.polyval(self.r, q), jet=jet)


def fd_derivative(r, values, n, width=None):
    """``n``-th derivative on a nonuniform grid by local polynomial interpolation.

    Each point uses the ``n + 5`` nearest samples (clipped at the ends), fitted
    in the local variable ``(r - r_k) / r_k`` to keep the Vandermonde system
    well scaled on log grids.
    """
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=complex)
    if n == 0:
        return values.copy()
    width = width or n + 5
    if len(r) < width:
        raise ValueError(f"need at least {width} samples for a derivative of order {n}")
    out = np.empty_like(values)
    half = width // 2
    for k in range(len(r)):
        lo = min(max(k - half, 0), len(r) - width)
        idx = slice(lo, lo + width)
        t = (r[idx] - r[k]) / r[k]
        V = np.vander(t, width, increasing=True)
        coef = np.linalg.solve(V, values[idx])
        out[k] = factorial(n) * coef[n] / r[k] ** n
    return out


@dataclass
class ConsistencyFunctional:
    row: tuple
    n: int
    terms: list  # (key, n', beta)
    kind: str  # "polynomial" | "sampled"
    g0: complex
    integral: float
    verdict: str  # "consistent" | "fail" | "inconclusive"
    exponent: Optional[float] = None
    stability: Optional[float] = None
    interval: tuple = ()
    thresholds: dict = field(default_factory=dict)
    samples: object = None  # (r, g) for sampled data

    @property
    def consistent(self):
        return self.verdict == "consistent"

    def formula(self):
        return render_functional(self.row, self.n, self.terms)

    def to_dict(self):
        return {
            "row": _key_str(self.row),
            "functional": self.formula(),
            "kind": self.kind,
            "g0": [self.g0.real, self.g0.imag],
            "integral": self.integral,
            "verdict": self.verdict,
            "fitted_exponent": self.exponent,
            "last_decade_change": self.stability,
            "interval": list(self.interval),
            "thresholds": dict(self.thresholds),
        }


def _dstr(key, n):
    return f"Z{_key_str(key)}" + ("'" * n if n <= 3 else f"^({n})")


def _cstr(b):
    b = complex(b)
    if abs(b.imag) <= 1e-14 * max(abs(b.real), 1):
        return f"{b.real:.12g}" if b.real >= 0 else f"({b.real:.12g})"
    return f"({b.real:.12g}{b.imag:+.12g}i)"


def render_functional(row, n, terms):
    inner = _dstr(row, n) + "".join(f" - {_cstr(b)}*{_dstr(k, m)}" for k, m, b in terms)
    return f"int_0^eps r^-1 |{inner}|^2 dr < inf"


def consistency_functionals(h: HatSystem, beta: BetaDecomposition):
    """The ``(row, n, [(key, n', beta)])`` triples for every dependent row."""
    out = []
    for d in beta.dependent:
        terms = [(h.keys[k], h.orders[k], b) for k, b in zip(beta.independent, beta.beta[beta.dependent.index(d)])]
        out.append((h.keys[d], h.orders[d], terms))
    return out


def _poly_integral(g):
    """``int_0^1 r^-1 |g|^2 dr`` for a polynomial ``g`` with ``g(0) = 0``."""
    q = npoly.polymul(g, np.conj(g))[1:]  # divide by r
    if len(q) == 0:
        return 0.0
    return float(npoly.polyval(1.0, npoly.polyint(q)).real)


def _sampled_verdict(r, g, scale):
    th = {"exponent_min": EXPONENT_MIN, "stability": STABILITY}
    amp = np.abs(g)
    if np.max(amp) <= 1e-12 * max(scale, 1e-300):
        return "consistent", 0.0, None, 0.0, th
    logr = np.log(r)
    # partial integrals of |g|^2 d(log r) from r_k up to the end
    w = amp**2
    seg = 0.5 * (w[1:] + w[:-1]) * np.diff(logr)
    partial = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    total = float(partial[0])
    decades = (logr[-1] - logr[0]) / np.log(10)
    if decades < 2:
        return "inconclusive", total, None, None, th
    last = logr <= logr[0] + np.log(10)
    k10 = int(np.nonzero(last)[0][-1])
    change = float((partial[0] - partial[k10]) / partial[0]) if partial[0] > 0 else 0.0
    tiny = amp > 1e-14 * max(scale, 1e-300)
    if np.count_nonzero(last & tiny) < 4:
        return "consistent" if change <= STABILITY else "inconclusive", total, None, change, th
    A = np.vstack([logr[last & tiny], np.ones(np.count_nonzero(last & tiny))]).T
    coef, *_ = np.linalg.lstsq(A, np.log(amp[last & tiny]), rcond=None)
    p = float(coef[0])
    if p >= EXPONENT_MIN and change <= STABILITY:
        return "consistent", total, p, change, th
    if p < EXPONENT_MIN and change > STABILITY:
        return "fail", float("inf") if p <= 0 else total, p, change, th
    return "inconclusive", total, p, change, th


def consistency_check(h: HatSystem, beta: BetaDecomposition, traces) -> list:
    """Evaluate the consistency functional of every dependent row.

    ``traces`` maps row keys to :class:`BoundaryTrace`.  All-polynomial data use
    the exact rule ``g(0) = 0``; otherwise the polynomial traces are sampled on
    the common grid of the sampled ones and ``g`` is differentiated numerically.
    """
    traces = {t.key: t for t in traces} if not isinstance(traces, dict) else traces
    out = []
    for row, n, terms in consistency_functionals(h, beta):
        needed = [(row, n, 1.0)] + [(k, m, -b) for k, m, b in terms]
        missing = [_key_str(k) for k, _, _ in needed if k not in traces]
        if missing:
            raise KeyError(f"missing traces for rows {missing}")
        used = [traces[k] for k, _, _ in needed]
        if all(t.is_polynomial for t in used):
            g = np.zeros(1, dtype=complex)
            for (k, m, w), t in zip(needed, used):
                g = npoly.polyadd(g, w * npoly.polyder(t.poly, m)) if m < len(t.poly) else g
            g = np.atleast_1d(g)
            g0 = complex(g[0])
            scale = max(1.0, max(float(np.max(np.abs(t.poly))) for t in used))
            if abs(g0) <= G0_TOL * scale:
                g = g.copy()
                g[0] = 0
                out.append(ConsistencyFunctional(row, n, terms, "polynomial", g0, _poly_integral(g), "consistent", interval=(0.0, 1.0), thresholds={"g0": G0_TOL}))
            else:
                out.append(ConsistencyFunctional(row, n, terms, "polynomial", g0, float("inf"), "fail", interval=(0.0, 1.0), thresholds={"g0": G0_TOL}))
            continue
        sampled = [t for t in used if not t.is_polynomial]
        r = sampled[0].r
        if any(t.r.shape != r.shape or np.any(t.r != r) for t in sampled):
            raise ValueError("sampled traces of one functional must share their grid")
        g = np.zeros_like(r, dtype=complex)
        scale = 0.0
        for (k, m, w), t in zip(needed, used):
            if t.is_polynomial:
                dv = npoly.polyval(r, npoly.polyder(t.poly, m)) if m < len(t.poly) else np.zeros_like(r)
            else:
                dv = fd_derivative(r, t.values, m)
            scale = max(scale, float(np.max(np.abs(dv))))
            g = g + w * dv
        verdict, integral, p, change, th = _sampled_verdict(r, g, scale)
        out.append(ConsistencyFunctional(row, n, terms, "sampled", complex(g[0]), integral, verdict, p, change, (float(r[0]), float(r[-1])), th, (r, g)))
    return out


# ----------------------------------------------------------------------------
# polynomial vectors


def monomial_basis(p: ModelProblem, degree):
    """``(component, coefficient array)`` for every monomial of degree ``<= degree``."""
    out = []
    for k in range(p.N):
        for d in range(degree + 1):
            for a in range(d + 1):
                c = np.zeros((degree + 1, degree + 1), dtype=complex)
                c[d - a, a] = 1.0
                out.append((k, c))
    return out


def polynomial_traces(p: ModelProblem, W):
    """Exact traces ``Z^0_row(r)`` of the boundary rows applied to the polynomial vector ``W``.

    ``W`` maps components to coefficient arrays ``c[a1, a2]`` of ``y1^a1 y2^a2``.
    A term samples ``B W_k`` at ``chi r (cos(theta + rho), sin(theta + rho))``;
    the homogeneous part of degree ``d`` contributes ``(chi r)^d`` times its
    value on the unit ray.
    """
    out = {}
    for row in p.rows:
        theta = p.side_angle(row.component, row.side)
        z = np.zeros(1, dtype=complex)
        for t in row.terms:
            if t.target not in W:
                continue
            q = apply_to_polynomial(t.operator, W[t.target])
            phi = theta + t.rotation
            e1, e2 = np.cos(phi), np.sin(phi)
            deg = q.shape[0] + q.shape[1] - 2
            coef = np.zeros(deg + 1, dtype=complex)
            for a1 in range(q.shape[0]):
                for a2 in range(q.shape[1]):
                    if q[a1, a2] != 0:
                        coef[a1 + a2] += q[a1, a2] * e1**a1 * e2**a2 * t.homothety ** (a1 + a2)
            z = npoly.polyadd(z, coef)
        out[row.key] = BoundaryTrace(row.key, poly=np.atleast_1d(z))
    return out


@dataclass
class PolynomialCheck:
    passed: bool
    degree: int
    max_g0: float
    witness: object  # (component, (a1, a2), {row: g0}) or None
    trivial: bool  # every functional vanishes for degree reasons alone

    def to_dict(self):
        w = None
        if self.witness is not None:
            k, mono, g = self.witness
            w = {"component": k + 1, "monomial": list(mono), "g0": {r: [v.real, v.imag] for r, v in g.items()}}
        return {"passed": self.passed, "degree": self.degree, "max_g0": self.max_g0, "witness": w, "degree_trivial": self.trivial}


def check_condition_43_polynomial(p: ModelProblem, degree=None, basis=None, hat=None, beta=None) -> PolynomialCheck:
    """Part 2 of the polynomial consistency condition, decided exactly.

    ``degree`` defaults to ``2m - 2``; the model rows then produce traces of
    degree ``< n`` and every ``g`` vanishes identically, which the report flags
    as ``degree_trivial``.  A larger ``degree`` (or an explicit ``basis`` of
    ``(component, coefficients)`` pairs) probes the functional beyond that.
    """
    hat = hat or build_hat_system(p)
    beta = beta or beta_decompose(hat)
    degree = p.order - 2 if degree is None else degree
    basis = basis if basis is not None else monomial_basis(p, degree)
    trivial = all(degree < n for n in hat.orders)
    worst, witness = 0.0, None
    for k, c in basis:
        fs = consistency_check(hat, beta, polynomial_traces(p, {k: c}))
        g = {_key_str(f.row): f.g0 for f in fs}
        big = max((abs(v) for v in g.values()), default=0.0)
        if big > worst:
            worst = big
            nz = np.argwhere(np.abs(c) > 0)
            mono = tuple(int(v) for v in nz[0]) if len(nz) else (0, 0)
            witness = (k, mono, g)
    passed = worst <= G0_TOL
    return PolynomialCheck(passed, degree, worst, None if passed else witness, trivial)


# ----------------------------------------------------------------------------
# admissible polynomial vectors and probes


@dataclass
class AdmissibleResult:
    feasible: bool
    residual: float
    W: Optional[dict]  # component -> coefficient array
    nullspace: list  # list of dicts spanning the homogeneous solutions
    conditions: int

    def to_dict(self):
        def enc(d):
            return {str(k + 1): [[[complex(v).real, complex(v).imag] for v in row] for row in a] for k, a in d.items()}

        return {
            "feasible": self.feasible,
            "residual": self.residual,
            "W": enc(self.W) if self.W is not None else None,
            "free_parameters": len(self.nullspace),
            "conditions": self.conditions,
        }


def _assemble_admissible(p: ModelProblem, degree):
    basis = monomial_basis(p, degree)
    rows = []
    for row in p.rows:
        n = p.order - row.order - 1
        for b in range(n):
            rows.append((row.key, b))
    A = np.zeros((len(rows), len(basis)), dtype=complex)
    for col, (k, c) in enumerate(basis):
        tr = polynomial_traces(p, {k: c})
        for i, (key, b) in enumerate(rows):
            A[i, col] = tr[key].derivative_at_zero(b)
    return basis, rows, A


def _combine(basis, x, N):
    W = {}
    for (k, c), v in zip(basis, x):
        if v != 0:
            W[k] = W.get(k, np.zeros_like(c)) + v * c
    return W


def admissible_solve(p: ModelProblem, v_traces, degree=None, tol=ADMISSIBLE_TOL) -> AdmissibleResult:
    """Polynomial ``W`` of degree ``2m-2`` with ``d^b/dr^b (B^v + B W)(0) = 0`` for ``b <= n - 1``."""
    v_traces = {t.key: t for t in v_traces} if not isinstance(v_traces, dict) else v_traces
    degree = p.order - 2 if degree is None else degree
    basis, rows, A = _assemble_admissible(p, degree)
    rhs = np.zeros(len(rows), dtype=complex)
    for i, (key, b) in enumerate(rows):
        t = v_traces.get(key)
        rhs[i] = -t.derivative_at_zero(b) if t is not None else 0.0
    if not rows:
        return AdmissibleResult(True, 0.0, {}, [_combine(basis, e, p.N) for e in np.eye(len(basis))], 0)
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    res = float(np.linalg.norm(A @ x - rhs))
    scale = max(1.0, float(np.linalg.norm(rhs)))
    _, sv, Vh = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-12 * max(sv[0] if len(sv) else 0, 1e-300)))
    null = [_combine(basis, v.conj(), p.N) for v in Vh[rank:]]
    if res > tol * scale:
        return AdmissibleResult(False, res, None, null, len(rows))
    return AdmissibleResult(True, res, _combine(basis, x, p.N), null, len(rows))


@dataclass
class ProbeResult:
    name: str
    admissible: AdmissibleResult
    functionals: list
    verdict: str  # "consistent" | "fail" | "inconclusive" | "not admissible"
    witness: object = None

    def to_dict(self):
        return {
            "probe": self.name,
            "verdict": self.verdict,
            "admissible": self.admissible.to_dict(),
            "functionals": [f.to_dict() for f in self.functionals],
            "witness": self.witness,
        }


def _probe_one(p, hat, beta, name, traces):
    traces = {t.key: t for t in traces} if not isinstance(traces, dict) else traces
    adm = admissible_solve(p, traces)
    if not adm.feasible:
        return ProbeResult(name, adm, [], "not admissible")
    wtr = polynomial_traces(p, adm.W)
    combined = {}
    for key, t in wtr.items():
        combined[key] = traces[key].plus_polynomial(t.poly) if key in traces else t
    fs = consistency_check(hat, beta, combined)
    verdicts = {f.verdict for f in fs}
    # every other admissible W differs by a homogeneous solution; its own functional must vanish
    for W0 in adm.nullspace:
        extra = consistency_check(hat, beta, polynomial_traces(p, W0))
        if any(not f.consistent for f in extra):
            return ProbeResult(name, adm, fs, "fail", "some admissible W breaks consistency")
    if "fail" in verdicts:
        bad = [f.formula() for f in fs if f.verdict == "fail"]
        return ProbeResult(name, adm, fs, "fail", bad)
    if "inconclusive" in verdicts:
        return ProbeResult(name, adm, fs, "inconclusive")
    return ProbeResult(name, adm, fs, "consistent")


def check_condition_44(p: ModelProblem, probes, hat=None, beta=None) -> list:
    """Probe-based check over user-supplied trace sets ``{name: traces}``.

    Passing on every probe does not establish the condition for all admissible
    functions; a single failing probe refutes it.
    """
    hat = hat or build_hat_system(p)
    beta = beta or beta_decompose(hat)
    items = list(probes.items()) if isinstance(probes, dict) else list(probes)
    return pmap(lambda it: _probe_one(p, hat, beta, it[0], it[1]), items)

"""Zeros of the characteristic function in horizontal strips.

Counting uses the argument principle with adaptive Gauss-Legendre panels on
``Delta'/Delta = tr(M^{-1} M')``; the same routine yields the contour moments
used to locate zeros.  Cells are bisected until each holds a single zero or a
tight cluster, zeros are polished by Newton and then characterized by winding
on a small circle, the singular values of ``M`` and the kernels of the block
Toeplitz matrices built from the Taylor coefficients of ``M``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .pencil import Collocation, Pencil

log = logging.getLogger(__name__)

LINE_TOL = 1e-7
DEDUP_TOL = 1e-9
KERNEL_TOL = 1e-8
CHAIN_TOL = 1e-7
WINDING_SLACK = 0.05
CAP_THRESHOLD = 1e-3
SPLIT_FRACTIONS = (0.4871, 0.4613, 0.5237, 0.4411, 0.5519)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


class ContourError(RuntimeError):
    """The contour passes too close to a zero for reliable quadrature."""


@dataclass(frozen=True)
class StripQuery:
    c1: float
    c2: float
    R: float = 10.0
    margin: float = 0.01
    kernel_tol: float = KERNEL_TOL
    line_tol: float = LINE_TOL

    def __post_init__(self):
        if not self.c1 < self.c2:
            raise ValueError("strip needs c1 < c2")
        if not self.R > 0:
            raise ValueError("real half-width must be positive")


@dataclass
class EigenvalueRecord:
    lam: complex
    alg_mult: int
    geo_mult: int
    partial_multiplicities: list
    kernel: np.ndarray  # columns: coefficient vectors in the Cauchy basis
    chains: list = field(default_factory=list)  # per chain: [x0, x1, ...]
    residual: float = 0.0
    winding: float = 0.0
    collocation_sv: float = float("nan")
    collocation_rank: int = -1
    notes: list = field(default_factory=list)

    @property
    def defective(self):
        return self.alg_mult > self.geo_mult

    def to_dict(self):
        return {
            "re": self.lam.real,
            "im": self.lam.imag,
            "alg_mult": self.alg_mult,
            "geo_mult": self.geo_mult,
            "partial_multiplicities": list(self.partial_multiplicities),
            "residual": self.residual,
            "winding": self.winding,
            "collocation_sv": self.collocation_sv,
            "notes": list(self.notes),
        }


# ----------------------------------------------------------------------------
# logarithmic derivative and contour moments


def _matrix_fn(pencil, method, col):
    if method == "determinant":
        return pencil.cauchy_matrix
    if method == "collocation":
        return lambda lam: np.array([col.assemble(z).matrix for z in np.atleast_1d(lam)])
    raise ValueError(f"unknown method {method!r}")


def log_derivative(F, lam, h=None):
    """``Delta'/Delta = tr(F^{-1} F')`` with ``F'`` from a four-point circle."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if h is None:
        h = 1e-4 * (1.0 + np.abs(lam))
    u = np.array([1, 1j, -1, -1j])
    pts = (lam[:, None] + h[:, None] * u[None, :]).ravel()
    M = F(np.concatenate([lam, pts]))
    M0 = M[: lam.size]
    Ms = M[lam.size:].reshape(lam.size, 4, *M0.shape[1:])
    dM = np.einsum("k,lkij->lij", 1 / u, Ms) / (4 * h[:, None, None])
    try:
        X = np.linalg.solve(M0, dM)
    except np.linalg.LinAlgError as exc:
        raise ContourError("singular matrix on the contour") from exc
    return np.trace(X, axis1=1, axis2=2)


def _edge_integrals(F, a, b, center, scale, kmax, tol, max_panels=4000):
    """``sum_k int_a^b ((l - center)/scale)^k Delta'/Delta dl`` by adaptive panels."""
    n0 = max(2, int(np.ceil(abs(b - a) / 0.5)))
    pending = [(a + (b - a) * i / n0, a + (b - a) * (i + 1) / n0) for i in range(n0)]
    total = np.zeros(kmax + 1, dtype=complex)
    used = 0

    def rule(pa, pb):
        mid = 0.5 * (pa + pb)
        half = 0.5 * (pb - pa)
        return mid[:, None] + half[:, None] * _GL_X[None, :], half

    while pending:
        pa = np.array([p[0] for p in pending])
        pb = np.array([p[1] for p in pending])
        pm = 0.5 * (pa + pb)
        xs, hs = [], []
        for lo, hi in ((pa, pb), (pa, pm), (pm, pb)):
            x, h = rule(lo, hi)
            xs.append(x)
            hs.append(h)
        allx = np.concatenate([x.ravel() for x in xs])
        f = log_derivative(F, allx)
        if not np.all(np.isfinite(f)):
            raise ContourError("non-finite logarithmic derivative")
        n = len(pending)
        vals = []
        for i in range(3):
            fi = f[i * n * 10:(i + 1) * n * 10].reshape(n, 10)
            w = ((xs[i] - center) / scale)[..., None] ** np.arange(kmax + 1)
            vals.append(np.einsum("pq,pqk->pk", fi * _GL_W[None, :], w) * hs[i][:, None])
        coarse, fine = vals[0], vals[1] + vals[2]
        err = np.abs(coarse - fine).max(axis=1)
        nxt = []
        for i in range(n):
            if err[i] <= tol * max(1.0, abs(pb[i] - pa[i])):
                total += fine[i]
            else:
                nxt.extend([(pa[i], pm[i]), (pm[i], pb[i])])
        used += len(nxt)
        if used > max_panels:
            raise ContourError("adaptive quadrature did not converge")
        pending = nxt
    return total


def contour_moments(F, rect, kmax=2, tol=1e-10):
    """Normalized moments ``(1/2 pi i) oint w^k Delta'/Delta`` with
    ``w = (lam - center)/scale`` over the rectangle ``(x0, x1, y0, y1)``."""
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    scale = 0.5 * max(x1 - x0, y1 - y0)
    tot = np.zeros(kmax + 1, dtype=complex)
    for i in range(4):
        tot += _edge_integrals(F, corners[i], corners[(i + 1) % 4], center, scale, kmax, tol)
    return tot / (2j * np.pi), center, scale


def _integer_count(m0):
    n = int(round(m0.real))
    if abs(m0 - n) > WINDING_SLACK:
        raise ContourError(f"winding number {m0:.4f} is not near an integer")
    return n


def count_zeros(p_or_pencil, rect, method="determinant", M_c=None, retries=5):
    """Number of zeros of the characteristic function inside ``rect``."""
    pencil = _as_pencil(p_or_pencil)
    col = Collocation(pencil, M_c) if method == "collocation" and M_c else (
        Collocation(pencil) if method == "collocation" else None)
    F = _matrix_fn(pencil, method, col)
    x0, x1, y0, y1 = rect
    last = None
    for attempt in range(retries + 1):
        d = 1e-7 * attempt * (1 + attempt)
        try:
            mom, _, _ = contour_moments(F, (x0 - d, x1 + 1.3 * d, y0 - 0.7 * d, y1 + d), kmax=0)
            return _integer_count(mom[0])
        except ContourError as exc:
            last = exc
    raise ContourError(f"could not count zeros in {rect}: {last}")


def winding_number(p_or_pencil, rect, method="determinant"):
    """Raw (unrounded) winding number, for diagnostics."""
    pencil = _as_pencil(p_or_pencil)
    col = Collocation(pencil) if method == "collocation" else None
    mom, _, _ = contour_moments(_matrix_fn(pencil, method, col), rect, kmax=0)
    return complex(mom[0])


def _as_pencil(p):
    return p if isinstance(p, Pencil) else Pencil(p)


# ----------------------------------------------------------------------------
# search


def _circle_moments(F, center, radius, n=64):
    theta = 2 * np.pi * np.arange(n) / n
    u = np.exp(1j * theta)
    z = center + radius * u
    f = log_derivative(F, z)
    m0 = np.mean(f * radius * u)
    m1 = np.mean(f * radius * u * (radius * u))
    return m0, m1


def _newton(pencil, z, mult=1, tol=1e-14, maxit=50):
    for _ in range(maxit):
        step = mult / log_derivative(pencil.cauchy_matrix, np.array([z]))[0]
        z = z - step
        if abs(step) < tol * (1 + abs(z)):
            break
    return complex(z)


def _locate(pencil, rect, depth=0):
    """Zeros in ``rect`` as ``[(lam, count)]``; recursion by bisection."""
    F = pencil.cauchy_matrix
    x0, x1, y0, y1 = rect
    mom, center, scale = contour_moments(F, rect, kmax=2)
    n = _integer_count(mom[0])
    if n == 0:
        return []
    mean = center + scale * mom[1] / n
    spread = scale * np.sqrt(abs(mom[2] / n - (mom[1] / n) ** 2))
    if n == 1:
        z = _newton(pencil, mean)
        if not (x0 <= z.real <= x1 and y0 <= z.imag <= y1) or abs(z - mean) > 1e-4 * (1 + scale):
            z = mean
        return [(z, 1)]
    width, height = x1 - x0, y1 - y0
    if spread < 1e-6 * (1 + abs(mean)) or max(width, height) < 1e-8 or depth > 60:
        r = max(10 * spread, 1e-4)
        m0, m1 = _circle_moments(F, mean, r)
        if abs(m0 - n) < WINDING_SLACK:
            return [(complex(mean + m1 / m0), n)]
        return [(complex(mean), n)]
    last = None
    for frac in SPLIT_FRACTIONS:
        if width >= height:
            xm = x0 + frac * width
            parts = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
        else:
            ym = y0 + frac * height
            parts = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
        try:
            out = []
            for q in parts:
                out.extend(_locate(pencil, q, depth + 1))
            if sum(c for _, c in out) == n:
                return out
            last = ContourError("child counts do not add up")
        except ContourError as exc:
            last = exc
    raise ContourError(f"subdivision failed in {rect}: {last}")


def _search_box(q: StripQuery):
    return (-q.R, q.R, q.c1 - q.margin, q.c2 + q.margin)


def _initial_cells(box, pieces):
    x0, x1, y0, y1 = box
    edges = np.linspace(x0, x1, pieces + 1)
    # keep interior cuts off the symmetry axis Re = 0
    edges[1:-1] += 0.0173 * (x1 - x0) / pieces
    return [(edges[i], edges[i + 1], y0, y1) for i in range(pieces)]


def raw_zeros(p_or_pencil, q: StripQuery, pieces=4):
    """Zeros with their counts in the search box of ``q`` (no classification)."""
    pencil = _as_pencil(p_or_pencil)
    box = _search_box(q)
    last = None
    for attempt in range(6):
        d = 1.7e-3 * attempt
        b = (box[0] - d, box[1] + d, box[2] - 0.37 * d, box[3] + 0.41 * d)
        try:
            found = pmap(lambda cell: _locate(pencil, cell), _initial_cells(b, pieces))
            zeros = [z for cell in found for z in cell]
            return _dedup(zeros), b
        except ContourError as exc:
            last = exc
            log.info("search box perturbed after: %s", exc)
    raise ContourError(f"zero search failed: {last}")


def _dedup(zeros):
    out = []
    for z, n in sorted(zeros, key=lambda t: (t[0].imag, t[0].real)):
        for i, (w, k) in enumerate(out):
            if abs(z - w) <= DEDUP_TOL * (1 + abs(z)):
                out[i] = (w, k + n)
                break
        else:
            out.append((z, n))
    return out


def cap_diagnostic(pencil, q: StripQuery, n=41):
    """``min |Delta|`` on the vertical caps ``Re lam = +-R``."""
    ys = np.linspace(q.c1 - q.margin, q.c2 + q.margin, n)
    pts = np.concatenate([q.R + 1j * ys, -q.R + 1j * ys])
    return float(np.min(np.abs(pencil.char_det(pts))))


def find_in_strip(p_or_pencil, q: StripQuery, M_c=None, with_collocation=True):
    """Eigenvalues with ``c1 - line_tol <= Im <= c2 + line_tol``, sorted by Im then Re.

    The search box is widened by ``q.margin`` so that eigenvalues on the strip
    edges are found away from the contour.
    """
    pencil = _as_pencil(p_or_pencil)
    zeros, box = raw_zeros(pencil, q)
    keep = [(z, n) for z, n in zeros if q.c1 - q.line_tol <= z.imag <= q.c2 + q.line_tol and abs(z.real) < q.R]
    col = Collocation(pencil, M_c) if (with_collocation and M_c) else (Collocation(pencil) if with_collocation else None)
    others = [z for z, _ in zeros]
    recs = pmap(lambda zn: characterize(pencil, zn[0], zn[1], others, col, q.kernel_tol), keep)
    return [r for r in recs if r is not None]


def line_eigenvalues(p_or_pencil, c, R=10.0, M_c=None, band=0.05):
    """Eigenvalues on ``Im lam = c`` and a flag for near-misses.

    Zeros are searched in the band ``|Im lam - c| < band``; a zero counts as on
    the line when ``|Im lam - c| <= LINE_TOL`` and as straddling when it lies
    within ``1e-6`` without meeting that tolerance.
    """
    pencil = _as_pencil(p_or_pencil)
    q = StripQuery(c - band, c + band, R, margin=0.0)
    recs = find_in_strip(pencil, q, M_c)
    on = [r for r in recs if abs(r.lam.imag - c) <= LINE_TOL]
    straddle = [r for r in recs if LINE_TOL < abs(r.lam.imag - c) <= 1e-6]
    return on, straddle


# ----------------------------------------------------------------------------
# characterization


def characterize(pencil, lam, count, others=(), col=None, kernel_tol=KERNEL_TOL):
    F = pencil.cauchy_matrix
    lam = complex(lam)
    dist = min([abs(lam - z) for z in others if abs(z - lam) > 1e-9] + [1.0])
    radius = min(1e-3, 0.25 * dist)
    m0, _ = _circle_moments(F, lam, radius)
    alg = int(round(m0.real))
    notes = []
    if abs(m0 - alg) > WINDING_SLACK:
        notes.append(f"winding {m0:.4f} not integral")
    if alg != count:
        notes.append(f"cell count {count} differs from local winding {alg}")
        alg = max(alg, count)
    if alg < 1:
        return None
    M = F(np.array([lam]))[0]
    U, s, Vh = np.linalg.svd(M)
    k = int(np.sum(s < kernel_tol * s[0]))
    if k == 0:
        notes.append("kernel below tolerance; using the smallest singular vector")
        k = 1
    geo = min(k, alg)
    kernel = Vh.conj().T[:, M.shape[1] - geo:]
    res = float(np.max(np.linalg.norm(M @ kernel, axis=0)) / (s[0]))
    rec = EigenvalueRecord(lam, alg, geo, [1] * geo, kernel, residual=res, winding=float(m0.real), notes=notes)
    if alg > geo:
        jordan_structure(pencil, rec)
    else:
        rec.chains = [[kernel[:, i]] for i in range(geo)]
    if col is not None:
        A = col.assemble(lam).matrix
        sv = np.linalg.svd(A, compute_uv=False)
        rel = sv / sv[0]
        rec.collocation_sv = float(rel[-1])
        rec.collocation_rank = int(np.sum(rel < kernel_tol))
        if rec.collocation_rank == 0:
            rec.notes.append("collocation matrix not rank deficient: spurious zero")
        elif rec.collocation_rank != geo:
            rec.notes.append(f"collocation kernel dimension {rec.collocation_rank} differs from {geo}")
    return rec


def _toeplitz(taylor, k):
    n = taylor[0].shape[0]
    T = np.zeros((k * n, k * n), dtype=complex)
    for i in range(k):
        for j in range(i + 1):
            T[i * n:(i + 1) * n, j * n:(j + 1) * n] = taylor[i - j]
    return T


def jordan_structure(pencil, rec: EigenvalueRecord, tol=CHAIN_TOL):
    """Partial multiplicities from kernel dimensions of the block Toeplitz
    matrices ``T_k``; ``dim ker T_k = sum_i min(k, p_i)``."""
    if rec.alg_mult == rec.geo_mult:
        rec.partial_multiplicities = [1] * rec.geo_mult
        rec.chains = [[rec.kernel[:, i]] for i in range(rec.geo_mult)]
        return rec
    n = rec.kernel.shape[0]
    taylor = pencil.matrix_taylor(rec.lam, rec.alg_mult)
    dims = [0]
    null = {}
    for k in range(1, rec.alg_mult + 1):
        T = _toeplitz(taylor, k)
        U, s, Vh = np.linalg.svd(T)
        d = int(np.sum(s < tol * s[0]))
        dims.append(d)
        null[k] = Vh.conj().T[:, T.shape[1] - d:] if d else np.zeros((k * n, 0))
        if d - dims[-2] == 0 or d >= rec.alg_mult:
            break
    # counts[k] = #{i : p_i >= k}
    counts = [dims[k] - dims[k - 1] for k in range(1, len(dims))]
    parts = []
    for k in range(1, len(counts) + 1):
        nxt = counts[k] if k < len(counts) else 0
        parts.extend([k] * (counts[k - 1] - nxt))
    parts = sorted(parts, reverse=True)
    if sum(parts) != rec.alg_mult:
        rec.notes.append(f"partial multiplicities {parts} do not add up to {rec.alg_mult}")
    rec.partial_multiplicities = parts
    chains = []
    if parts:
        L = parts[0]
        Z = null.get(L)
        if Z is not None and Z.shape[1]:
            # pick the null vector with the largest leading block: an eigenvector
            _, _, wh = np.linalg.svd(Z[:n])
            v = Z @ wh[0].conj()
            blocks = [v[i * n:(i + 1) * n] for i in range(L)]
            scale = np.linalg.norm(blocks[0]) or 1.0
            chains.append([b / scale for b in blocks])
    rec.chains = chains
    return rec


def collocation_eigenvalue(pencil, lam0, M_c=None, multiplicity=1):
    """Refine ``lam0`` by Newton on the collocation determinant."""
    col = Collocation(pencil, M_c) if M_c else Collocation(pencil)
    return col.newton(lam0, multiplicity)


@dataclass
class MethodAgreement:
    determinant: list  # zeros from the determinant path
    collocation: list  # the same zeros refined on the collocation determinant
    determinant_winding: complex
    collocation_winding: complex
    max_difference: float

    @property
    def counts_agree(self):
        return int(round(self.determinant_winding.real)) == int(round(self.collocation_winding.real))

    def agree(self, tol=1e-6):
        return self.counts_agree and self.max_difference <= tol


def method_agreement(p_or_pencil, q: StripQuery, M_c=None, offset=1e-3):
    """Compare the determinant and collocation paths on the search box of ``q``.

    Both discretizations produce a winding number over the same rectangle; each
    determinant zero is then re-found by Newton on the collocation determinant,
    started ``offset`` away so that the second path does its own converging.
    """
    pencil = _as_pencil(p_or_pencil)
    zeros, box = raw_zeros(pencil, q)
    col = Collocation(pencil, M_c) if M_c else Collocation(pencil)
    wd = contour_moments(pencil.cauchy_matrix, box, kmax=0)[0][0]
    wc = contour_moments(_matrix_fn(pencil, "collocation", col), box, kmax=0)[0][0]
    start = complex(offset, -0.7 * offset)
    refined = [col.newton(z + start, n) for z, n in zeros]
    diff = max([abs(a - b) for (a, _), b in zip(zeros, refined)] + [0.0])
    return MethodAgreement([z for z, _ in zeros], refined, complex(wd), complex(wc), float(diff))

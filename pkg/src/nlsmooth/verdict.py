"""Decision procedure: strip spectrum, monomial conditions, border case, certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


from .certificate import blowup_profile, build_power_solution, verify_residual
from .classify import StripReport, strip_report
from .conditions import ConditionReport33_34, check_conditions_33_34, witness_log_solution
from .consistency import (
    _key_str,
    beta_decompose,
    build_hat_system,
    check_condition_43_polynomial,
    check_condition_44,
    consistency_check,
    consistency_functionals,
    render_functional,
)
from .model import ModelProblem
from .pencil import DEFAULT_COLLOCATION, Pencil

SMOOTH = "Smooth"
CONDITIONAL = "ConditionallySmooth"
VIOLATED = "Violated"
UNDETERMINED = "Undetermined"

EXIT_CODES = {SMOOTH: 0, CONDITIONAL: 10, VIOLATED: 20, UNDETERMINED: 30}


@dataclass
class Options:
    R: float = 10.0
    collocation: int = DEFAULT_COLLOCATION
    tol_group: str = "default"  # "strict" tightens the certificate residual tolerance
    traces: Optional[dict] = None  # row key -> BoundaryTrace
    probes: Optional[dict] = None  # name -> {row key: BoundaryTrace}

    @property
    def residual_tol(self):
        return 1e-9 if self.tol_group == "strict" else 1e-7


@dataclass
class Certificate:
    source: str  # "power solution" | "log solution"
    lam0: complex
    residual: object
    blowup: object
    solution: object  # PowerSolution or LogSolution
    detail: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.residual.passed and self.blowup.passed)

    @property
    def evaluator(self):
        s = self.solution
        return s.evaluator

    def to_dict(self):
        out = {
            "source": self.source,
            "lambda0": [self.lam0.real, self.lam0.imag],
            "passed": self.passed,
            "residual": self.residual.to_dict(),
            "blowup": self.blowup.to_dict(),
            **self.detail,
        }
        out["solution"] = self.solution.to_dict()
        return out


@dataclass
class BorderReport:
    hat: object
    beta: object
    functionals: list  # rendered strings
    polynomial_check: object
    trace_results: list = field(default_factory=list)
    probe_results: list = field(default_factory=list)
    obligations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "hat_system": self.hat.to_dict(),
            "beta": self.beta.to_dict(),
            "consistency_functionals": list(self.functionals),
            "polynomial_check": self.polynomial_check.to_dict(),
            "trace_results": [f.to_dict() for f in self.trace_results],
            "probe_results": [r.to_dict() for r in self.probe_results],
            "obligations": list(self.obligations),
        }


@dataclass
class Verdict:
    kind: str
    reason: str
    problem: ModelProblem
    strip: Optional[StripReport] = None
    conditions: Optional[ConditionReport33_34] = None
    certificate: Optional[Certificate] = None
    border: Optional[BorderReport] = None
    trigger: str = ""
    notes: list = field(default_factory=list)

    @property
    def exit_code(self):
        return EXIT_CODES[self.kind]

    def to_dict(self):
        return {
            "verdict": self.kind,
            "reason": self.reason,
            "trigger": self.trigger,
            "notes": list(self.notes),
            "strip": None if self.strip is None else self.strip.to_dict(),
            "conditions_3_3_3_4": None if self.conditions is None else self.conditions.to_dict(self.problem),
            "border": None if self.border is None else self.border.to_dict(),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        }


def _power_certificate(pencil, rec, opts):
    ps = build_power_solution(pencil, rec)
    res = verify_residual(ps, tol=opts.residual_tol)
    prof = blowup_profile(ps)
    return Certificate("power solution", ps.lam0, res, prof, ps, {"log_degree": ps.l0})


def _log_certificate(pencil, s, c, opts):
    sol = witness_log_solution(pencil, s, c)
    res = verify_residual(sol.evaluator, data=sol.c, tol=opts.residual_tol)
    prof = blowup_profile(sol.evaluator)
    return Certificate("log solution", sol.evaluator.lam0, res, prof, sol, {"s": s})


def _violation_by_spectrum(pencil, strip, opts):
    """Certificate for the first improper eigenvalue of the closed band that verifies."""
    failures = []
    cands = [r for r, v in strip.line + strip.Lambda if not v.proper]
    cands.sort(key=lambda r: (-r.lam.imag, r.lam.real))
    for rec in cands:
        try:
            cert = _power_certificate(pencil, rec, opts)
        except ArithmeticError as exc:
            failures.append(f"{_fmt(rec.lam)}: {exc}")
            continue
        if cert.passed:
            return cert, failures
        failures.append(f"{_fmt(rec.lam)}: certificate checks failed")
    return None, failures


def _border(p, opts):
    hat = build_hat_system(p)
    beta = beta_decompose(hat)
    funcs = [render_functional(r, n, t) for r, n, t in consistency_functionals(hat, beta)]
    poly = check_condition_43_polynomial(p, hat=hat, beta=beta)
    rep = BorderReport(hat, beta, funcs, poly)
    if opts.traces:
        rep.trace_results = consistency_check(hat, beta, opts.traces)
    if opts.probes:
        rep.probe_results = check_condition_44(p, opts.probes, hat, beta)
    rep.obligations = [
        "the right-hand sides Psi - B W (W from the asymptotics of the solution) satisfy every consistency functional",
        "regular data: for each admissible v and admissible W the traces B^v + B W satisfy every consistency functional (probe-based)",
    ]
    return rep


def analyze(p: ModelProblem, options: Optional[Options] = None, pencil: Optional[Pencil] = None) -> Verdict:
    """Classify the smoothness of generalized solutions for the model problem ``p``.

    Raises :class:`~nlsmooth.model.InvalidProblem` for inputs failing validation.
    """
    opts = options or Options()
    pencil = pencil or Pencil(p)
    strip = strip_report(pencil, opts.R, opts.collocation)
    flags = strip.flags
    notes = []
    for r, _ in strip.edge:
        notes.append(f"eigenvalue {_fmt(r.lam)} lies on the upper edge Im = {1 - p.ell} and is outside Lambda")

    if flags["C5.1"]:
        cert, failures = _violation_by_spectrum(pencil, strip, opts)
        if cert is not None:
            return Verdict(VIOLATED, "improper eigenvalue in the critical band", p, strip, certificate=cert, trigger="C5.1", notes=notes + failures)
        return Verdict(UNDETERMINED, "improper eigenvalue found but no certificate verified: " + "; ".join(failures), p, strip, trigger="C5.1", notes=notes)

    if strip.undetermined:
        return Verdict(UNDETERMINED, "; ".join(strip.undetermined), p, strip, notes=notes)

    conds = None
    if p.ell <= p.order - 2:
        conds = check_conditions_33_34(pencil, strip, opts.collocation)
        if conds.undetermined:
            return Verdict(UNDETERMINED, "a monomial-data check lies within 10x of its tolerance", p, strip, conds, notes=notes)
        bad = conds.first_failure()
        if bad is not None:
            which = "3.3" if bad.eigen else "3.4"
            c = bad.witness
            if c is None:
                return Verdict(UNDETERMINED, f"Condition {which} fails at s = {bad.s} without a data witness", p, strip, conds, notes=notes)
            try:
                cert = _log_certificate(pencil, bad.s, c, opts)
            except ArithmeticError as exc:
                return Verdict(UNDETERMINED, f"Condition {which} fails at s = {bad.s}; witness construction failed: {exc}", p, strip, conds, notes=notes)
            if cert.passed:
                return Verdict(VIOLATED, f"Condition {which} fails at s = {bad.s}", p, strip, conds, cert, trigger=f"C{which}", notes=notes)
            return Verdict(UNDETERMINED, f"Condition {which} fails at s = {bad.s} but the witness did not verify", p, strip, conds, cert, notes=notes)

    if flags["C3.1"]:
        return Verdict(SMOOTH, "no eigenvalues on the critical line; all band eigenvalues proper; monomial conditions hold", p, strip, conds, notes=notes)

    if flags["C4.1"]:
        border = _border(p, opts)
        if border.beta.full_rank:
            return Verdict(UNDETERMINED, "hat system has full rank although the critical line carries a proper eigenvalue", p, strip, conds, border=border, notes=notes)
        return Verdict(CONDITIONAL, "proper eigenvalue i(1-2m) on the critical line: smoothness depends on consistency conditions", p, strip, conds, border=border, trigger="C4.1", notes=notes)

    lams = ", ".join(f"{r.lam:.6g}" for r, _ in strip.line)
    return Verdict(UNDETERMINED, f"critical-line spectrum not covered by the decision procedure: {lams}", p, strip, conds, notes=notes)


# ----------------------------------------------------------------------------
# human-readable report


def snap(lam, tol=1e-10):
    """Zero the real or imaginary part of ``lam`` when it is round-off."""
    lam = complex(lam)
    eps = tol * (1 + abs(lam))
    return complex(0.0 if abs(lam.real) <= eps else lam.real, 0.0 if abs(lam.imag) <= eps else lam.imag)


def _fmt(z):
    z = snap(z)
    return f"{z.real:.9g}{z.imag:+.9g}i"


def explain(v: Verdict) -> str:
    p = v.problem
    out = [f"problem: {p.name or '(unnamed)'}", f"2m = {p.order}, ell = {p.ell}, N = {p.N}", f"verdict: {v.kind}", f"reason: {v.reason}"]
    if v.trigger:
        out.append(f"trigger: {v.trigger}")
    for n in v.notes:
        out.append(f"note: {n}")
    if v.strip is not None:
        s = v.strip
        out.append("")
        out.append(f"strip {s.band[0]} <= Im lambda < {s.band[1]}, |Re lambda| < {s.R}")
        out.append(f"  critical line Im = {s.band[0]}: " + (", ".join(_fmt(r.lam) for r, _ in s.line) if s.line else "empty"))
        out.append("  eigenvalues:")
        rows = [(r, c, "line") for r, c in s.line] + [(r, c, "band") for r, c in s.Lambda] + [(r, c, "edge") for r, c in s.edge]
        if not rows:
            out.append("    none")
        for r, c, where in rows:
            tag = "proper" if c.proper else "improper (" + ", ".join(c.reasons) + ")"
            out.append(f"    {_fmt(r.lam):>32}  alg {r.alg_mult} geo {r.geo_mult}  {where}  {tag}")
        out.append("  conditions: " + ", ".join(f"{k} {'pass' if val else 'fail'}" for k, val in s.flags.items()))
    if v.conditions is not None and v.conditions.applicable:
        out.append("")
        out.append("monomial data conditions:")
        for r in v.conditions.reports:
            label = "3.3" if r.eigen else "3.4"
            parts = f"part1 {r.part1} part2 {r.part2} part3 {r.part3}" if r.eigen else f"polynomial solutions {r.part3}"
            out.append(f"  s = {r.s}: Condition {label} {'pass' if r.passed else 'fail'} ({parts})")
    if v.border is not None:
        b = v.border
        out.append("")
        out.append(f"hat system rank {b.beta.rank} of {len(b.beta.keys)}")
        for d in b.beta.dependent:
            coeffs = ", ".join(f"beta{_key_str(k)} = {_fmt(c)}" for k, c in b.beta.coefficients(d).items())
            out.append(f"  dependent row {_key_str(b.beta.keys[d])}: {coeffs}")
        out.append("consistency functionals:")
        for f in b.functionals:
            out.append(f"  {f}")
        pc = b.polynomial_check
        out.append(f"polynomial vectors of degree {pc.degree}: {'pass' if pc.passed else 'fail'}" + (" (vanishes by degree)" if pc.trivial else ""))
        for f in b.trace_results:
            out.append(f"  traces {f.formula()}: {f.verdict}")
        for r in b.probe_results:
            out.append(f"  probe {r.name}: {r.verdict}")
        for o in b.obligations:
            out.append(f"obligation: {o}")
    if v.certificate is not None:
        c = v.certificate
        out.append("")
        out.append(f"certificate ({c.source}) at lambda0 = {_fmt(c.lam0)}: {'verified' if c.passed else 'NOT verified'}")
        out.append(f"  residual interior {c.residual.interior:.3e} boundary {c.residual.boundary:.3e}")
        bp = c.blowup
        out.append(f"  blow-up ratio {bp.fitted_ratio:.9g} (scaling law {bp.expected_ratio:.9g})")
    return "\n".join(out) + "\n"

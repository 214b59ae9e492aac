"""Command-line interface: ``nlsmooth analyze | spectrum | certificate | consistency | fixture``.

Exit codes of ``analyze``: 0 Smooth, 10 ConditionallySmooth, 20 Violated,
30 Undetermined, 2 input error.  Other subcommands return 0 on success,
1 when the requested check fails and 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import document as docmod
from .classify import classify_eigenvalue, strip_report
from .consistency import _key_str, beta_decompose, build_hat_system, check_condition_44, consistency_check, consistency_functionals, render_functional
from .fundamental import DegreeDropError
from .model import InvalidProblem
from .oracle import FIXTURES, fixture
from .pencil import DEFAULT_COLLOCATION, Pencil
from .spectrum import LINE_TOL, ContourError, StripQuery, find_in_strip
from .verdict import Options, _power_certificate, analyze, explain, snap

EXIT_INPUT = 2
SIG_DIGITS = 12


def clean(obj):
    """JSON-ready copy: floats rounded to 12 significant digits, complex as ``[re, im]``."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    return obj


def _r(x):
    return f"{float(x):.{SIG_DIGITS}g}" if float(x) != 0 else "0"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(obj), fh, indent=2)
        fh.write("\n")


def eigen_csv(rows):
    """CSV text for ``(lam, alg, geo, proper)`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "alg_mult", "geo_mult", "proper"])
    for lam, alg, geo, proper in rows:
        lam = snap(lam)
        w.writerow([_r(lam.real), _r(lam.imag), alg, geo, "proper" if proper else "improper"])
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _pair(text, name):
    try:
        a, b = (docmod.parse_real(t) for t in text.split(","))
    except (ValueError, docmod.DocumentError):
        raise argparse.ArgumentTypeError(f"{name} expects two comma-separated numbers, got {text!r}") from None
    return a, b


def _strip_arg(text):
    return _pair(text, "--strip")


def _lam_arg(text):
    a, b = _pair(text, "--eigenvalue")
    return complex(a, b)


def _common(sp):
    sp.add_argument("spec", help="problem specification (JSON, schema nlsmooth/1)")
    sp.add_argument("--out", default=".", help="output directory (created if missing)")
    sp.add_argument("--re-halfwidth", type=float, default=10.0, dest="R", help="search |Re lambda| < R")
    sp.add_argument("--colloc-size", type=int, default=DEFAULT_COLLOCATION, dest="M", help="collocation nodes per component")
    sp.add_argument("--tol-group", choices=["default", "strict"], default="default")
    sp.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    sp.add_argument("--quiet", action="store_true", help="do not echo the text report")


def build_parser():
    ap = argparse.ArgumentParser(prog="nlsmooth", description="Smoothness of generalized solutions of model nonlocal elliptic problems in plane angles.")
    sub = ap.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="full decision procedure and report")
    _common(a)
    s = sub.add_parser("spectrum", help="eigenvalues in a strip, CSV and SVG")
    _common(s)
    s.add_argument("--strip", type=_strip_arg, default=None, help="c1,c2 (default: the critical band 1-2m, 1-ell)")
    c = sub.add_parser("certificate", help="singular power solution for an improper eigenvalue")
    _common(c)
    c.add_argument("--eigenvalue", type=_lam_arg, default=None, help="re,im of the improper eigenvalue (default: first found)")
    k = sub.add_parser("consistency", help="beta coefficients and consistency verdicts for supplied traces")
    _common(k)
    f = sub.add_parser("fixture", help="write the specification document of a built-in fixture")
    f.add_argument("name", choices=sorted(FIXTURES))
    f.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="fixture parameter, e.g. b1=-0.5 or omega0=pi/4")
    f.add_argument("-o", "--output", default="-", help="file name, '-' for stdout")
    return ap


def _load(path):
    doc = docmod.load(path)
    pencil = Pencil(doc.problem)  # validation
    if not pencil.has_fundamental:
        raise DegreeDropError("P(1, z) drops degree: rotate the coordinates so that the closed fundamental system exists")
    return doc


def _echo(args, text):
    if not args.quiet:
        sys.stdout.write(text)


def cmd_analyze(args):
    doc = _load(args.spec)
    opts = Options(args.R, args.M, args.tol_group, doc.traces, doc.probes)
    v = analyze(doc.problem, opts)
    os.makedirs(args.out, exist_ok=True)
    report = {"schema": docmod.SCHEMA_ID, "problem": doc.to_dict(), "options": {"R": args.R, "collocation": args.M, "tol_group": args.tol_group}}
    report.update(v.to_dict())
    report["exit_code"] = v.exit_code
    write_json(os.path.join(args.out, "report.json"), report)
    text = explain(v)
    _write(os.path.join(args.out, "report.txt"), text)
    recs = v.strip.all_records() if v.strip else []
    _write(os.path.join(args.out, "eigenvalues.csv"), eigen_csv([(r.lam, r.alg_mult, r.geo_mult, c.proper) for r, c in recs]))
    if not args.no_plots:
        from .plotting import plot_certificate, plot_spectrum

        plot_spectrum([(r.lam, c.proper) for r, c in recs], v.strip.band, os.path.join(args.out, "spectrum.svg"), args.R)
        if v.certificate is not None:
            plot_certificate(v.certificate, os.path.join(args.out, "certificate.svg"))
    _echo(args, text)
    return v.exit_code


def cmd_spectrum(args):
    doc = _load(args.spec)
    p = doc.problem
    c1, c2 = args.strip if args.strip else (1 - p.order, 1 - p.ell)
    if not c1 < c2:
        raise docmod.DocumentError("strip bounds must satisfy c1 < c2", "--strip")
    pencil = Pencil(p)
    recs = find_in_strip(pencil, StripQuery(c1, c2, args.R), args.M)
    recs = [r for r in recs if c1 - LINE_TOL <= r.lam.imag <= c2 + LINE_TOL and abs(r.lam.real) < args.R]
    rows = []
    for r in recs:
        rows.append((r.lam, r.alg_mult, r.geo_mult, classify_eigenvalue(pencil, r).proper))
    os.makedirs(args.out, exist_ok=True)
    text = eigen_csv(rows)
    _write(os.path.join(args.out, "eigenvalues.csv"), text)
    if not args.no_plots:
        from .plotting import plot_spectrum

        plot_spectrum([(r[0], r[3]) for r in rows], (c1, c2), os.path.join(args.out, "spectrum.svg"), args.R, 1 - p.ell)
    _echo(args, text)
    return 0


def cmd_certificate(args):
    doc = _load(args.spec)
    p = doc.problem
    pencil = Pencil(p)
    strip = strip_report(pencil, args.R, args.M)
    improper = [r for r, c in strip.line + strip.Lambda if not c.proper]
    if args.eigenvalue is not None:
        chosen = [r for r in improper if abs(r.lam - args.eigenvalue) <= 1e-6 * (1 + abs(args.eigenvalue))]
        if not chosen:
            known = ", ".join(f"{r.lam.real:.9g},{r.lam.imag:.9g}" for r in improper) or "none"
            sys.stderr.write(f"error: {args.eigenvalue} is not an improper eigenvalue in the critical band (improper: {known})\n")
            return EXIT_INPUT
    else:
        if not improper:
            sys.stderr.write("error: the critical band has no improper eigenvalue\n")
            return EXIT_INPUT
        chosen = improper
    opts = Options(args.R, args.M, args.tol_group)
    cert = _power_certificate(pencil, chosen[0], opts)
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "certificate.json"), {"schema": docmod.SCHEMA_ID, "problem": doc.problem.name, **cert.to_dict()})
    om_rows = []
    prof = cert.solution.profiles(65)
    for j in range(p.N):
        om = np.linspace(-p.half_angles[j], p.half_angles[j], 65)
        for i, w in enumerate(om):
            om_rows.append([j + 1, _r(w)] + [x for k in range(len(prof)) for x in (_r(prof[k][j][i].real), _r(prof[k][j][i].imag))])
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["component", "omega"] + [f"{part}_phi{k}" for k in range(len(prof)) for part in ("re", "im")])
    wr.writerows(om_rows)
    _write(os.path.join(args.out, "certificate_profiles.csv"), buf.getvalue())
    bp = cert.blowup
    lines = ["n,energy,ratio"] + [f"{n},{_r(e)},{_r(bp.ratios[i - 1]) if i else ''}" for i, (n, e) in enumerate(zip(bp.n, bp.energies))]
    _write(os.path.join(args.out, "blowup.csv"), "\n".join(lines) + "\n")
    if not args.no_plots:
        from .plotting import plot_certificate

        plot_certificate(cert, os.path.join(args.out, "certificate.svg"))
    text = (
        f"lambda0 = {snap(cert.lam0).real:.12g}{snap(cert.lam0).imag:+.12g}i, log degree {cert.solution.l0}\n"
        f"residual interior {cert.residual.interior:.3e} boundary {cert.residual.boundary:.3e} ({'pass' if cert.residual.passed else 'fail'})\n"
        f"blow-up fitted ratio {bp.fitted_ratio:.9g}, scaling law {bp.expected_ratio:.9g} ({'pass' if bp.passed else 'fail'})\n"
    )
    _write(os.path.join(args.out, "certificate.txt"), text)
    _echo(args, text)
    return 0 if cert.passed else 1


def cmd_consistency(args):
    doc = _load(args.spec)
    if not doc.traces:
        sys.stderr.write("error: the specification has no 'traces' section\n")
        return EXIT_INPUT
    p = doc.problem
    hat = build_hat_system(p)
    beta = beta_decompose(hat)
    lines = [f"hat system rank {beta.rank} of {len(hat.keys)}"]
    if beta.full_rank:
        lines.append("no dependent rows: there is no consistency functional")
    for d in beta.dependent:
        lines.append(f"beta {_key_str(hat.keys[d])}: " + ", ".join(f"{_key_str(k)} -> {c.real:.12g}{c.imag:+.12g}i" for k, c in beta.coefficients(d).items()))
    try:
        results = consistency_check(hat, beta, doc.traces)
    except (KeyError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    for f in results:
        extra = f" exponent {f.exponent:.4g}" if f.exponent is not None else ""
        lines.append(f"{f.formula()}: {f.verdict} (g(0) ~ {abs(f.g0):.3g}{extra})")
    probes = check_condition_44(p, doc.probes, hat, beta) if doc.probes else []
    for r in probes:
        lines.append(f"probe {r.name}: {r.verdict}")
    os.makedirs(args.out, exist_ok=True)
    write_json(
        os.path.join(args.out, "consistency.json"),
        {
            "schema": docmod.SCHEMA_ID,
            "hat_system": hat.to_dict(),
            "beta": beta.to_dict(),
            "functionals": [render_functional(*t) for t in consistency_functionals(hat, beta)],
            "results": [f.to_dict() for f in results],
            "probes": [r.to_dict() for r in probes],
        },
    )
    text = "\n".join(lines) + "\n"
    _write(os.path.join(args.out, "consistency.txt"), text)
    if not args.no_plots:
        from .plotting import plot_consistency

        for n, f in enumerate(results):
            if f.samples is not None:
                plot_consistency(*f.samples, os.path.join(args.out, f"consistency_{n + 1}.svg"), f.formula())
    _echo(args, text)
    ok = all(f.consistent for f in results) and all(r.verdict in ("consistent", "not admissible") for r in probes)
    return 0 if ok else 1


def cmd_fixture(args):
    kwargs = {}
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep:
            raise docmod.DocumentError(f"expected KEY=VALUE, got {item!r}", "--param")
        kwargs[key.strip()] = int(val) if key.strip() == "ell" else docmod.parse_real(val, "--param")
    try:
        fx = fixture(args.name, **kwargs)
    except TypeError as exc:
        raise docmod.DocumentError(str(exc), "--param") from None
    text = docmod.problem_document(fx.problem).dumps()
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write(args.output, text)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "spectrum": cmd_spectrum,
    "certificate": cmd_certificate,
    "consistency": cmd_consistency,
    "fixture": cmd_fixture,
}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return COMMANDS[args.command](args)
    except (docmod.DocumentError, InvalidProblem, DegreeDropError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ContourError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 30 if args.command == "analyze" else 1


if __name__ == "__main__":
    sys.exit(main())

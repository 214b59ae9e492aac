"""Acceptance criteria, one test per criterion.

A pass/fail line per criterion is printed in the terminal summary.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from nlsmooth.certificate import blowup_profile, power_solution_from_vector
from nlsmooth.classify import strip_report
from nlsmooth.conditions import C_basis, check_monomial
from nlsmooth.consistency import BoundaryTrace, beta_decompose, build_hat_system, consistency_check, hat_border
from nlsmooth.model import HomogeneousOperator
from nlsmooth.oracle import brute_polynomial_solve, fix_b4, fix_bs, fix_bs_sum, fix_hom, fix_loc, fix_mix
from nlsmooth.pencil import Collocation, Pencil
from nlsmooth.polar import polar_residual
from nlsmooth.spectrum import StripQuery, find_in_strip, method_agreement
from nlsmooth.verdict import CONDITIONAL, SMOOTH, VIOLATED, analyze, explain


@pytest.mark.criterion(1, "FIX-BS verdict thresholds over b1 + b2")
def test_criterion_1_thresholds():
    sweep = [-2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0]
    expected = [SMOOTH, SMOOTH, VIOLATED, VIOLATED, VIOLATED, CONDITIONAL, SMOOTH, SMOOTH]
    t0 = time.perf_counter()
    verdicts = [analyze(fix_bs_sum(B).problem) for B in sweep]
    elapsed = time.perf_counter() - t0
    assert [v.kind for v in verdicts] == expected
    assert elapsed < 10.0
    # at B = -2 the edge eigenvalue lambda = 0 is detected and reported
    v = verdicts[1]
    assert any(abs(r.lam) < 1e-8 for r, _ in v.strip.edge)
    rows = v.to_dict()["strip"]["eigenvalues"]
    assert any(abs(e["re"]) < 1e-8 and abs(e["im"]) < 1e-8 and e["position"] == "upper edge" for e in rows)
    assert "0+0i" in explain(v)


@pytest.mark.criterion(2, "eigenvalue accuracy to 1e-8")
def test_criterion_2_eigenvalues():
    for B, lam in [(-1.0, -2j / 3), (-np.sqrt(2), -0.5j)]:
        recs = find_in_strip(fix_bs_sum(B).problem, StripQuery(-1, 0))
        assert len(recs) == 1
        assert abs(recs[0].lam - lam) <= 1e-8
    for w in (np.pi / 6, np.pi / 4, np.pi / 2):
        recs = find_in_strip(fix_loc(w).problem, StripQuery(-4, 0))
        # the search covers the closed strip; the criterion concerns the open one
        got = sorted((r.lam for r in recs if -4 + 1e-8 < r.lam.imag < -1e-8), key=lambda z: z.imag)
        step = np.pi / (2 * w)
        want = [1j * k * step for k in range(-int(4 / step), 0) if -4 < k * step < 0]
        assert len(got) == len(want)
        assert max(abs(a - b) for a, b in zip(got, sorted(want, key=lambda z: z.imag))) <= 1e-8


@pytest.mark.criterion(3, "border case structure of FIX-BS(B=0)")
def test_criterion_3_border():
    f = fix_bs_sum(0.0)
    b1 = 0.25
    pc = Pencil(f.problem)
    s = strip_report(pc)
    assert len(s.line) == 1
    rec, ver = s.line[0]
    assert abs(rec.lam + 1j) <= 1e-8
    assert rec.alg_mult == 1 and rec.geo_mult == 1 and ver.proper
    om = np.linspace(-np.pi / 2, np.pi / 2, 41)
    phi = pc.eigenfunction(rec.lam, rec.kernel[:, 0], om)[0][:, 0]
    exact = np.cos(om) + b1 * np.sin(om)
    alpha = np.vdot(exact, phi) / np.vdot(exact, exact)
    assert np.max(np.abs(phi / alpha - exact)) <= 1e-7

    beta = beta_decompose(build_hat_system(f.problem))
    assert beta.rank == 1
    (d,) = beta.dependent
    (b,) = beta.coefficients(d).values()
    assert abs(b + 1) <= 1e-10

    rng = np.random.default_rng(3)
    agree = 0
    for i in range(20):
        x = rng.uniform(-1.5, 1.5)
        y = -x if i % 2 == 0 else rng.uniform(-1.5, 1.5)
        p = fix_bs(x, y).problem
        spectral = strip_report(p).flags["C4.1"]
        algebraic = hat_border(p)
        assert spectral == algebraic == (i % 2 == 0)
        agree += 1
    assert agree == 20


CRIT4 = [
    (fix_bs_sum(-1.0), StripQuery(-1, 0, 5)),
    (fix_bs_sum(0.0), StripQuery(-1.5, 0.5, 5)),
    (fix_loc(np.pi / 4), StripQuery(-4.5, 0.5, 5)),
    (fix_hom(1.0, 0.5), StripQuery(-3, 1, 5)),
    (fix_hom(1.0, 2.0), StripQuery(-3, 1, 5)),
    (fix_b4(), StripQuery(-3, 1, 5)),
    (fix_mix(), StripQuery(-1.5, 0.5, 5)),
]


@pytest.mark.criterion(4, "determinant and collocation paths agree")
@pytest.mark.parametrize("fx,q", CRIT4, ids=[f.name for f, _ in CRIT4])
def test_criterion_4_cross_method(fx, q):
    a = method_agreement(fx.problem, q)
    for w in (a.determinant_winding, a.collocation_winding):
        assert abs(w - round(w.real)) <= 0.05
    assert a.counts_agree
    assert a.max_difference <= 1e-6


@pytest.mark.criterion(5, "monomial-data checks equal the brute-force oracle")
@pytest.mark.parametrize("fx", [fix_loc(np.pi / 2), fix_loc(np.pi / 4), fix_bs_sum(-1.0), fix_bs_sum(0.0), fix_b4(), fix_b4(b=0.5)], ids=lambda f: f.name)
def test_criterion_5_conditions_oracle(fx):
    p = fx.problem
    pc = Pencil(p)
    cols = [Collocation(pc, 32), Collocation(pc, 64)]
    for s in range(0, p.order - 1):
        for c in C_basis(p, s):
            brute = brute_polynomial_solve(p, s, c).feasible
            got = [check_monomial(col, s, c)[0] for col in cols]
            assert got == [brute, brute], (s, c)


@pytest.mark.criterion(6, "certificate of FIX-BS(B=-1)")
def test_criterion_6_certificate():
    v = analyze(fix_bs_sum(-1.0).problem)
    assert v.kind == VIOLATED
    c = v.certificate
    assert c.residual.interior <= 1e-7 and c.residual.boundary <= 1e-7
    assert c.blowup.n == list(range(4, 11))
    assert abs(c.blowup.fitted_ratio / 2 ** (2 / 3) - 1) <= 0.02
    # negative control: the proper eigenvalue -2i carries the polynomial 2 y1 y2
    pc = Pencil(fix_bs_sum(-1.0).problem)
    (rec,) = find_in_strip(pc, StripQuery(-2.5, -1.5))
    ps = power_solution_from_vector(pc, rec.lam, rec.kernel[:, 0])
    assert not blowup_profile(ps).passed


def _bs0_rows():
    beta = beta_decompose(build_hat_system(fix_bs_sum(0.0).problem))
    return build_hat_system(fix_bs_sum(0.0).problem), beta


@pytest.mark.criterion(7, "consistency functional exactness")
def test_criterion_7_polynomial_traces():
    h, beta = _bs0_rows()
    rng = np.random.default_rng(7)
    for i in range(100):
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        if i % 2 == 0:
            b[1] = -a[1]
        traces = [BoundaryTrace((0, 1, 1), poly=a), BoundaryTrace((0, 2, 1), poly=b)]
        (f,) = consistency_check(h, beta, traces)
        # rule: g = Z(1,1,1)' + Z(1,2,1)', consistent iff g(0) = a1 + b1 = 0
        assert f.consistent == (abs(a[1] + b[1]) == 0)


@pytest.mark.criterion(7, "consistency functional exactness")
@pytest.mark.parametrize("p,want", [(0.2, "consistent"), (0.6, "consistent"), (1.0, "consistent"), (0.0, "fail")])
def test_criterion_7_sampled_traces(p, want):
    h, beta = _bs0_rows()
    r = np.logspace(-12, 0, 400)
    traces = [BoundaryTrace((0, 1, 1), r=r, values=r ** (p + 1) / (p + 1)), BoundaryTrace((0, 2, 1), r=r, values=np.zeros_like(r))]
    (f,) = consistency_check(h, beta, traces)
    assert f.verdict == want


@pytest.mark.criterion(8, "polar reduction correctness")
def test_criterion_8_polar():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(0, 7))
        op = HomogeneousOperator(k, rng.normal(size=k + 1) + 1j * rng.normal(size=k + 1))
        lam = complex(rng.uniform(-3, 3), rng.uniform(-4, 1))
        phi = {int(q): complex(*rng.normal(size=2)) for q in rng.integers(-4, 5, size=3)}
        r = rng.uniform(0.2, 1.0, size=7)
        om = rng.uniform(-np.pi, np.pi, size=7)
        worst = max(worst, polar_residual(op, lam, phi, r, om))
    assert worst <= 1e-10


def _run(args, threads, cwd):
    env = dict(os.environ, NLSMOOTH_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "nlsmooth.cli", *args], env=env, cwd=cwd, capture_output=True, text=True)


def _tree(path):
    out = {}
    for name in sorted(os.listdir(path)):
        with open(os.path.join(path, name), "rb") as fh:
            out[name] = fh.read()
    return out


@pytest.mark.criterion(9, "byte-identical reports for 1 and 8 threads")
@pytest.mark.parametrize("params", [["b1=-0.25", "b2=-0.75"], ["b1=0.25", "b2=-0.25"]], ids=["B=-1", "B=0"])
def test_criterion_9_determinism(tmp_path, params):
    spec = tmp_path / "p.json"
    args = ["fixture", "FIX-BS", "-o", str(spec)]
    for q in params:
        args += ["--param", q]
    assert _run(args, 1, tmp_path).returncode == 0
    trees = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        res = _run(["analyze", str(spec), "--out", str(out), "--quiet"], threads, tmp_path)
        assert res.returncode in (10, 20), res.stderr
        trees.append(_tree(out))
    assert trees[0] == trees[1]
    assert json.loads(trees[0]["report.json"])["verdict"] in (CONDITIONAL, VIOLATED)

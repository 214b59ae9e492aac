import json

import numpy as np
import pytest

from nlsmooth.classify import strip_report
from nlsmooth.oracle import fix_bs, fix_bs_sum, fix_loc, fix_mix
from nlsmooth.verdict import CONDITIONAL, EXIT_CODES, SMOOTH, UNDETERMINED, VIOLATED, Options, analyze, explain, snap


def _bisect(flag, a, b, tol=1e-6):
    fa = flag(a)
    assert flag(b) != fa
    while b - a > tol:
        m = 0.5 * (a + b)
        if flag(m) == fa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@pytest.mark.parametrize("a,b,want", [(-2.5, -1.5, -2.0), (-0.3, 0.7, 0.0)])
def test_sweep_transition(a, b, want):
    flag = lambda B: strip_report(fix_bs_sum(B).problem).flags["C5.1"]
    assert abs(_bisect(flag, a, b) - want) <= 2e-6


def test_exit_codes():
    assert EXIT_CODES == {SMOOTH: 0, CONDITIONAL: 10, VIOLATED: 20, UNDETERMINED: 30}
    for B, kind in [(0.5, SMOOTH), (0.0, CONDITIONAL), (-1.0, VIOLATED)]:
        v = analyze(fix_bs_sum(B).problem)
        assert v.kind == kind and v.exit_code == EXIT_CODES[kind]


@pytest.mark.parametrize(
    "fx",
    [fix_bs_sum(-1.0), fix_bs_sum(-1.5), fix_bs_sum(-0.5), fix_bs(0.7, -1.2), fix_mix()],
    ids=["B=-1", "B=-1.5", "B=-0.5", "BS(0.7,-1.2)", "MIX"],
)
def test_violated_has_passing_certificate(fx):
    v = analyze(fx.problem)
    assert v.kind == VIOLATED
    c = v.certificate
    assert c is not None and c.passed
    assert c.residual.interior <= 1e-7 and c.residual.boundary <= 1e-7
    assert c.blowup.passed


def test_smooth_examples():
    for fx in (fix_loc(np.pi / 4, ell=1), fix_loc(np.pi / 6, ell=1)):
        v = analyze(fx.problem)
        assert v.kind == SMOOTH and v.certificate is None and v.exit_code == 0
    # at ell = 1 the straight angle carries the proper eigenvalue -i on the critical line
    assert analyze(fix_loc(np.pi / 2, ell=1).problem).kind == CONDITIONAL


def test_condition_34_violation():
    # Dirichlet data (1, -1) at s = 0 forces U = omega, which is not in H^2
    v = analyze(fix_loc(np.pi / 2).problem)
    assert v.kind == VIOLATED and v.trigger == "C3.4"
    assert v.certificate.source == "log solution" and v.certificate.passed


def test_conditional_border_report():
    v = analyze(fix_bs_sum(0.0).problem, Options())
    b = v.border
    assert v.trigger == "C4.1"
    assert b.beta.rank == 1 and not b.beta.full_rank
    assert b.polynomial_check.passed
    assert b.functionals == ["int_0^eps r^-1 |Z(1,1,1)' - (-1)*Z(1,2,1)'|^2 dr < inf"]
    assert len(b.obligations) == 2
    d = v.to_dict()
    assert d["verdict"] == CONDITIONAL and d["border"]["beta"]


def test_strict_tolerance_group():
    assert Options(tol_group="strict").residual_tol < Options().residual_tol
    v = analyze(fix_bs_sum(-1.0).problem, Options(tol_group="strict"))
    assert v.kind in (VIOLATED, UNDETERMINED)
    if v.kind == VIOLATED:
        assert v.certificate.residual.interior <= 1e-9


def test_explain_content():
    v = analyze(fix_bs_sum(-1.0).problem)
    text = explain(v)
    assert "verdict: Violated" in text
    assert "trigger: C5.1" in text
    assert "-0.666666667i" in text


def test_snap():
    assert snap(1e-13 - 2j) == -2j
    assert snap(1 + 1e-13j) == 1
    assert snap(1e-3 + 1e-3j) == 1e-3 + 1e-3j


def test_analysis_deterministic():
    a = analyze(fix_bs_sum(-1.0).problem).to_dict()
    b = analyze(fix_bs_sum(-1.0).problem).to_dict()
    dump = lambda d: json.dumps(d, sort_keys=True, default=str)
    assert dump(a) == dump(b)

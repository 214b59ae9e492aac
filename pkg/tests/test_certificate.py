import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsmooth.certificate import (
    PowerFunction,
    blowup_profile,
    build_power_solution,
    certify,
    power_solution_from_vector,
    verify_residual,
)
from nlsmooth.oracle import fix_bs_sum
from nlsmooth.pencil import Pencil
from nlsmooth.spectrum import StripQuery, find_in_strip


def _rec(B, c1, c2):
    pc = Pencil(fix_bs_sum(B).problem)
    (rec,) = find_in_strip(pc, StripQuery(c1, c2))
    return pc, rec


@pytest.fixture(scope="module")
def bs_minus1():
    return _rec(-1.0, -1.0, -0.1)


def test_power_solution_bs_minus1(bs_minus1):
    pc, rec = bs_minus1
    ps = build_power_solution(pc, rec)
    assert ps.l0 == 0
    out = certify(ps)
    assert out["passed"]
    assert out["residual"].interior <= 1e-7 and out["residual"].boundary <= 1e-7
    bp = out["blowup"]
    assert bp.expected_ratio == pytest.approx(2 ** (2 / 3))
    assert bp.fitted_ratio == pytest.approx(bp.expected_ratio, rel=0.02)


def test_jordan_chain_log_solution():
    # B = -2: lambda = 0 is a double zero with a length-2 chain
    pc, rec = _rec(-2.0, -0.5, 0.5)
    assert rec.alg_mult == 2 and rec.geo_mult == 1
    # the eigenvector profile is not a polynomial, so order 0 already suffices
    ps = build_power_solution(pc, rec)
    assert ps.l0 == 0
    # U = log r phi0 + phi1 also solves the homogeneous problem
    ps1 = build_power_solution(pc, rec, l0=1)
    assert ps1.l0 == 1 and verify_residual(ps1).passed
    bp = blowup_profile(ps)
    assert bp.passed and bp.expected_ratio == pytest.approx(4.0)
    assert bp.fitted_ratio == pytest.approx(4.0, rel=0.02)
    # the (log r)^2 factor pushes the finite-range ratio above the scaling law
    bp1 = blowup_profile(ps1)
    assert bp1.passed and bp1.fitted_ratio > 4.0
    with pytest.raises(ValueError):
        build_power_solution(pc, rec, l0=2)


def test_perturbed_eigenvalue_fails_residual(bs_minus1):
    pc, rec = bs_minus1
    ps = power_solution_from_vector(pc, rec.lam + 1e-3, rec.kernel[:, 0])
    res = verify_residual(ps)
    assert not res.passed
    assert max(res.interior, res.boundary) > 1e-6


def test_zero_function_refused(bs_minus1):
    pc, rec = bs_minus1
    bp = blowup_profile(power_solution_from_vector(pc, rec.lam, np.zeros_like(rec.kernel[:, 0])))
    assert not bp.passed


def test_polynomial_refused():
    pc, rec = _rec(-1.0, -2.5, -1.5)
    ps = power_solution_from_vector(pc, rec.lam, rec.kernel[:, 0])
    bp = blowup_profile(ps)
    assert not bp.passed and "polynomial" in bp.reason and bp.energies == []
    with pytest.raises(ArithmeticError):
        build_power_solution(pc, rec)


@given(st.floats(0.1, 10), st.floats(-np.pi, np.pi))
@settings(max_examples=10)
def test_residual_scale_invariant(bs_minus1, a, t):
    pc, rec = bs_minus1
    x = rec.kernel[:, 0]
    r1 = verify_residual(power_solution_from_vector(pc, rec.lam, x))
    r2 = verify_residual(power_solution_from_vector(pc, rec.lam, a * np.exp(1j * t) * x))
    assert abs(r1.interior - r2.interior) <= 1e-9 and abs(r1.boundary - r2.boundary) <= 1e-9


def test_evaluator_is_homogeneous(bs_minus1):
    pc, rec = bs_minus1
    f = PowerFunction(pc, rec.lam, [rec.kernel[:, 0]], 0)
    om = np.linspace(-0.5, 0.5, 5)
    u1 = f.value(0, np.array([0.3]), om)
    u2 = f.value(0, np.array([0.6]), om)
    # r^{i lambda} with i lambda = 2/3
    np.testing.assert_allclose(u2, 2 ** (1j * rec.lam) * u1, rtol=1e-10)

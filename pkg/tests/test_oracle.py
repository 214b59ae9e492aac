import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsmooth.model import HomogeneousOperator, laplacian_op
from nlsmooth.oracle import (
    apply_to_polynomial,
    brute_polynomial_solve,
    closed_newton,
    eval_polynomial,
    fix_b4,
    fix_bs,
    fix_bs_sum,
    fix_hom,
    fix_loc,
    fixture,
)


def test_closed_eigenvalues_bs():
    assert fix_bs_sum(-1.0).eigenvalues(-1, 0) == pytest.approx([-2j / 3], abs=1e-14)
    assert fix_bs_sum(-np.sqrt(2)).eigenvalues(-1, 0) == pytest.approx([-0.5j], abs=1e-14)
    # B = -2: the cosh factor and 1/l meet at l = 0
    assert 0 in [complex(round(z.real, 12), round(z.imag, 12)) for z in fix_bs_sum(-2.0).eigenvalues(-0.5, 0.5)]
    assert fix_bs_sum(-1.0).eigenvalues(-0.1, 0.1) == []


def test_closed_eigenvalues_loc():
    assert fix_loc(np.pi / 4).eigenvalues(-2.5, 0) == pytest.approx([-2j])
    assert fix_loc(np.pi / 2).eigenvalues(-3, 0) == pytest.approx([-2j, -1j])


@given(st.floats(-1.9, 1.9))
def test_closed_eigenvalues_are_zeros(B):
    f = fix_bs_sum(B)
    for z in f.eigenvalues(-3, 1, 5):
        scale = max(1.0, abs(np.sinh(z * np.pi)))
        assert abs(f.closed_det(z) * z) <= 1e-9 * scale


def test_fixture_lookup():
    assert fixture("fix-loc", np.pi / 3).problem.half_angles == (np.pi / 3,)
    assert fix_hom(0.5, 2.0).name == "FIX-HOM(0.5,2.0)"
    with pytest.raises(KeyError):
        fixture("FIX-NONE")


def test_brute_examples():
    p = fix_loc(np.pi / 2).problem
    assert not brute_polynomial_solve(p, 0, [1, -1]).feasible
    res = brute_polynomial_solve(p, 0, [1, 1])
    assert res.feasible and res.V[0, 0] == pytest.approx(1)
    # FIX-BS: B V = (1 + b_sigma) V for a constant
    res = brute_polynomial_solve(fix_bs(0.5, -0.5).problem, 0, [1.5, 0.5])
    assert res.feasible and res.V[0, 0] == pytest.approx(1)
    with pytest.raises(ValueError):
        brute_polynomial_solve(p, 1, [1, 1])


def test_brute_b4_clamped():
    p = fix_b4().problem
    # s = 1: a linear V with V = 0 on both sides must vanish, so only zero data is feasible
    assert brute_polynomial_solve(p, 1, np.zeros(4)).feasible
    assert not brute_polynomial_solve(p, 1, [1, 0, 0, 0]).feasible


def test_apply_to_polynomial():
    c = np.zeros((3, 3), dtype=complex)
    c[2, 0], c[0, 2] = 1, -1  # y1^2 - y2^2 is harmonic
    assert not np.any(apply_to_polynomial(laplacian_op(), c))
    d1 = HomogeneousOperator(1, (1, 0))  # -i d/dy1
    out = apply_to_polynomial(d1, c)
    assert out[1, 0] == pytest.approx(-2j)
    assert eval_polynomial(c, 2.0, 1.0) == 3


def test_closed_newton():
    z = closed_newton(lambda z: np.sinh(z * np.pi) / z, -1.1j)
    assert abs(z + 1j) < 1e-12
    z = closed_newton(fix_bs_sum(-1.0).closed_det, -0.6j)
    assert abs(z + 2j / 3) < 1e-12

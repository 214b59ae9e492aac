import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsmooth.fundamental import BasisFunction, DegreeDropError, basis_derivatives, basis_eval, char_roots, fundamental_systems
from nlsmooth.model import HomogeneousOperator, ModelProblem, laplacian_op
from nlsmooth.oracle import fix_b4, fix_loc
from nlsmooth.polar import to_polar


def _with_op(op, w=np.pi / 3):
    p = fix_loc(w).problem
    return ModelProblem(p.half_angles, 2, (op,), p.rows, 0)


def test_char_roots_examples():
    (lap,) = char_roots(fix_loc(1.0).problem).roots
    assert [k for _, k in lap] == [1, 1]
    assert sorted(z.imag for z, _ in lap) == pytest.approx([-1, 1])
    (bi,) = char_roots(fix_b4().problem).roots
    assert [k for _, k in bi] == [2, 2]
    (an,) = char_roots(_with_op(HomogeneousOperator(2, (1, 0, 4)))).roots
    assert sorted(z.imag for z, _ in an) == pytest.approx([-0.5, 0.5])


def test_degree_drop():
    with pytest.raises(DegreeDropError):
        char_roots(_with_op(HomogeneousOperator(2, (1, 1j, 0))))


def test_basis_eval_examples():
    b = BasisFunction(0, 1j, 0)
    assert basis_eval(b, 1.0, np.pi / 2) == pytest.approx(np.exp(-np.pi / 2))
    assert basis_eval(b, 1.0, np.pi / 2, q=1) == pytest.approx(-np.exp(-np.pi / 2))
    for z in (1j, -2j, 0.3 + 1.1j):
        assert basis_eval(BasisFunction(0, z, 0), 0.0, 0.4) == pytest.approx(1.0)


OPS = [laplacian_op(), laplacian_op() @ laplacian_op(), HomogeneousOperator(2, (1, 0.5, 2)), HomogeneousOperator(4, (1, 0, 3, 0, 2))]


@pytest.mark.parametrize("op", OPS, ids=["lap", "bilap", "aniso2", "aniso4"])
@given(lam=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False).filter(lambda z: abs(z) > 0.3))
def test_ode_residual(op, lam):
    w = 2.5
    roots = char_roots(_with_op(op, w) if op.order == 2 else _b4_with(op, w)).roots[0]
    om = np.linspace(-w, w, 101)
    pol = to_polar(op)
    for z, k in roots:
        for p in range(k):
            d = basis_derivatives(z, p, lam, om, op.order)
            vals = pol.apply([d[:, n] for n in range(op.order + 1)], om, lam)
            assert np.max(np.abs(vals)) <= 1e-9 * max(1.0, np.max(np.abs(d)))


def _b4_with(op, w):
    p = fix_b4(omega0=w).problem
    return ModelProblem(p.half_angles, 4, (op,), p.rows, 2)


def test_branch_continuity():
    om = np.linspace(-2.8, 2.8, 10_000)
    h = om[1] - om[0]
    for z in (1j, 0.2 + 0.05j, -3 + 0.5j):
        d = basis_derivatives(z, 0, 1.3 - 0.7j, om, 1)
        jumps = np.abs(np.diff(d[:, 0]))
        bound = 2 * np.max(np.abs(d[:, 1])) * h
        assert np.max(jumps) <= bound


def test_analytic_in_lambda():
    om = np.linspace(-1, 1, 9)
    lam, h = 0.4 - 0.3j, 1e-5
    f = lambda l: basis_derivatives(0.5 + 1j, 1, l, om, 2)
    central = (f(lam + h) - f(lam - h)) / (2 * h)
    cstep = (f(lam + 1j * h) - f(lam - 1j * h)) / (2j * h)
    assert np.max(np.abs(central - cstep)) <= 1e-7 * np.max(np.abs(central))


def test_cauchy_basis_normalized():
    (fs,) = fundamental_systems(fix_b4().problem)
    for lam in (0.0, 1 - 1j, -2j):
        Y = fs.cauchy(np.array([lam]), [0.0], 3)[0, 0]
        np.testing.assert_allclose(Y, np.eye(4), atol=1e-9)

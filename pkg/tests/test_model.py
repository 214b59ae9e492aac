import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsmooth.model import (
    BoundaryRow,
    HomogeneousOperator,
    ModelProblem,
    NonlocalTerm,
    check_lopatinsky,
    check_proper_ellipticity,
    laplacian_op,
    validate,
    validate_geometry,
)
from nlsmooth.oracle import fix_b4, fix_bs, fix_loc

I = HomogeneousOperator.identity()


def _row(j, side, terms, order=0, mu=1):
    return BoundaryRow(j, side, mu, order, tuple(terms))


def _single(rot, w=np.pi / 2):
    rows = (
        _row(0, 1, [NonlocalTerm(0, 0.0, 1.0, I), NonlocalTerm(0, rot, 1.0, I * 0.5)]),
        _row(0, 2, [NonlocalTerm(0, 0.0, 1.0, I)]),
    )
    return ModelProblem((w,), 2, (laplacian_op(),), rows, 1)


def test_geometry_examples():
    assert validate_geometry(_single(np.pi / 2)).ok
    rep = validate_geometry(_single(np.pi))
    assert not rep.ok
    assert rep.issues[0]["shifted_angle"] == pytest.approx(np.pi / 2)
    assert validate_geometry(fix_loc(np.pi / 3).problem).ok


def _two(w1, w2, rot, swap=False):
    a, b = (1, 0) if swap else (0, 1)
    ws = (w2, w1) if swap else (w1, w2)
    rows = (
        _row(a, 1, [NonlocalTerm(a, 0.0, 1.0, I), NonlocalTerm(b, rot, 1.0, I * 0.3)]),
        _row(a, 2, [NonlocalTerm(a, 0.0, 1.0, I)]),
        _row(b, 1, [NonlocalTerm(b, 0.0, 1.0, I)]),
        _row(b, 2, [NonlocalTerm(b, 0.0, 1.0, I), NonlocalTerm(a, -rot, 2.0, I)]),
    )
    return ModelProblem(ws, 2, (laplacian_op(), laplacian_op()), rows, 0)


@given(
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(-3.0, 3.0),
)
def test_geometry_relabeling_invariant(w1, w2, rot):
    r1 = validate_geometry(_two(w1, w2, rot))
    r2 = validate_geometry(_two(w1, w2, rot, swap=True))
    assert r1.ok == r2.ok
    assert len(r1.issues) == len(r2.issues)


def test_ellipticity_examples():
    lap = laplacian_op()
    r = check_proper_ellipticity(lap)
    assert r.ok
    assert sorted(z.imag for z, _ in r.roots) == pytest.approx([-1, 1])
    bad = check_proper_ellipticity(HomogeneousOperator(2, (1, 0, -1)))
    assert not bad.ok
    assert sorted(z.real for z in bad.real_roots) == pytest.approx([-1, 1])
    sq = check_proper_ellipticity(lap @ lap)
    assert sq.ok
    assert sorted(k for _, k in sq.roots) == [2, 2]


def test_degree_drop_reported():
    r = check_proper_ellipticity(HomogeneousOperator(2, (1, 1j, 0)))
    assert not r.ok
    assert r.degree_drop == 1


@given(st.floats(0.1, 5), st.floats(-5, 5), st.floats(0.1, 5))
def test_real_second_order_elliptic_passes(a, b, c):
    # a xi1^2 + b xi1 xi2 + c xi2^2 with b^2 < 4ac
    b = b if b * b < 4 * a * c * 0.99 else 0.0
    assert check_proper_ellipticity(HomogeneousOperator(2, (a, b, c))).ok


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=5, max_size=5))
def test_ellipticity_conjugate_reflection(cs):
    op = HomogeneousOperator(4, cs)
    conj = HomogeneousOperator(4, [np.conj(c) for c in cs])
    a, b = check_proper_ellipticity(op), check_proper_ellipticity(conj)
    assert a.ok == b.ok
    if a.degree_drop == 0 and not a.real_roots:
        assert (a.upper, a.lower) == (b.lower, b.upper)


def test_lopatinsky_examples():
    assert check_lopatinsky(fix_loc(np.pi / 2).problem).ok
    assert check_lopatinsky(fix_b4().problem).ok
    w = np.pi / 2
    # the tangential derivative alone is covering for the Laplacian; d_tau + i d_nu is not
    tangential = HomogeneousOperator.directional([np.cos(w), np.sin(w)]) + HomogeneousOperator.directional([-np.sin(w), np.cos(w)]) * 1j
    rows = (
        _row(0, 1, [NonlocalTerm(0, 0.0, 1.0, I)]),
        _row(0, 2, [NonlocalTerm(0, 0.0, 1.0, tangential)], order=1),
    )
    p = ModelProblem((w,), 2, (laplacian_op(),), rows, 0)
    rep = check_lopatinsky(p)
    assert not rep.ok
    assert {i["side"] for i in rep.issues} == {2}


def test_structure_errors():
    p = fix_bs(0.1, 0.2).problem
    bad = ModelProblem(p.half_angles, 2, p.interior_ops, p.rows[:1], 1)
    rep = validate(bad)
    assert not rep.ok and not rep.checks["structure"]
    with pytest.raises(ValueError):
        HomogeneousOperator(2, (1, 0))
    with pytest.raises(ValueError):
        NonlocalTerm(0, 0.0, 0.0, I)


def test_validate_fixtures():
    for p in (fix_bs(-0.5, 0.2).problem, fix_loc(np.pi / 4).problem, fix_b4().problem):
        assert validate(p).ok


def test_operator_algebra():
    d1 = HomogeneousOperator(1, (1, 0))
    d2 = HomogeneousOperator(1, (0, 1))
    assert (d1 @ d1 + d2 @ d2).coeffs == laplacian_op().coeffs
    assert laplacian_op().symbol(1.0, 1j) == 0
    assert d1.power(3).coeffs == (1, 0, 0, 0)

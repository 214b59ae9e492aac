import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsmooth.oracle import fix_b4, fix_bs, fix_bs_sum, fix_hom, fix_loc
from nlsmooth.pencil import Collocation, Pencil, adjoint_kernel, boundary_row, char_det, collocation_matrix
from nlsmooth.spectrum import log_derivative

lam_st = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def test_boundary_row_examples():
    b1, chi = 0.7, 1.8
    p = fix_bs(b1, 0.0, chi1=chi).problem
    row = p.rows[0]  # side 1 at -pi/2 with the nonlocal term
    lam = 0.4 - 0.3j
    # root -i gives e^{lam omega}, root i gives e^{-lam omega}
    assert boundary_row(p, row, lam, -1j, 0) == pytest.approx(np.exp(-lam * np.pi / 2) + b1 * chi ** (1j * lam))
    assert boundary_row(p, row, lam, 1j, 0) == pytest.approx(np.exp(lam * np.pi / 2) + b1 * chi ** (1j * lam))
    loc = fix_loc(np.pi / 2).problem
    assert boundary_row(loc, loc.rows[1], lam, -1j, 0) == pytest.approx(np.exp(lam * np.pi / 2))


FIX = [fix_bs_sum(-1.0), fix_bs(0.3, -1.1), fix_loc(np.pi / 3), fix_hom(1.0, 0.5), fix_hom(-0.6, 2.0)]


@pytest.mark.parametrize("fx", FIX, ids=lambda f: f.name)
@given(lam=lam_st)
@settings(max_examples=50)
def test_char_det_matches_closed_form(fx, lam):
    # agreement up to a nonvanishing analytic factor: equal logarithmic derivatives
    if abs(lam) < 0.05 or abs(fx.closed_det(lam)) < 1e-3:
        return
    pc = Pencil(fx.problem)
    h = 1e-5
    ours = log_derivative(pc.cauchy_matrix, lam)[0]
    ref = (fx.closed_det(lam + h) - fx.closed_det(lam - h)) / (2 * h) / fx.closed_det(lam)
    assert abs(ours - ref) <= 1e-6 * max(1.0, abs(ref))


def test_char_det_ratio_is_constant():
    fx = fix_bs_sum(-0.5)
    pts = [0.3 - 0.2j, -1.1 + 0.4j, 0.8 - 1.7j]
    ratios = [char_det(fx.problem, z) / fx.closed_det(z) for z in pts]
    assert max(abs(r - ratios[0]) for r in ratios) <= 1e-8 * abs(ratios[0])


def test_collocation_examples():
    p = fix_bs_sum(-1.0).problem
    at = np.linalg.svd(collocation_matrix(p, -2j / 3, 32).matrix, compute_uv=False)
    off = np.linalg.svd(collocation_matrix(p, -1j / 3, 32).matrix, compute_uv=False)
    assert at[-1] < 1e-8 * at[0]
    assert off[-1] > 1e-4 * off[0]
    gap = np.linalg.svd(collocation_matrix(fix_loc(np.pi / 2).problem, 0.5 - 0.5j, 32).matrix, compute_uv=False)
    assert gap[-1] > 1e-4 * gap[0]


def test_collocation_size_guard():
    with pytest.raises(ValueError):
        Collocation(Pencil(fix_b4().problem), 8)


def test_adjoint_kernel_examples():
    col = Collocation(Pencil(fix_bs_sum(0.0).problem))
    assert len(adjoint_kernel(col, -1j)) == 1
    assert adjoint_kernel(col, -0.5j) == []
    loc = Collocation(Pencil(fix_loc(np.pi / 2).problem))
    (psi,) = adjoint_kernel(loc, -1j)
    assert psi.functional.shape == (2,)


@pytest.mark.parametrize("fx", [fix_bs_sum(-1.0), fix_loc(np.pi / 4), fix_hom(1.0, 2.0)], ids=lambda f: f.name)
def test_cross_method_rank(fx):
    pc = Pencil(fx.problem)
    col = Collocation(pc)
    rng = np.random.default_rng(11)
    pts = list(rng.uniform(-2, 2, 100) + 1j * rng.uniform(-3, 0.5, 100))
    for z in pts:
        det_small = abs(fx.closed_det(z)) < 1e-6
        col_small = col.relative_smallest_sv(z) < 1e-8
        assert det_small == col_small


def test_analyticity_contour():
    # no zeros of sinh(lam pi)/lam ... in the box Im in (-0.7, -0.3) for B = 1
    pc = Pencil(fix_bs_sum(1.0).problem)
    from nlsmooth.spectrum import contour_moments

    m0 = contour_moments(pc.cauchy_matrix, (-2.0, 2.0, -0.7, -0.3), kmax=0)[0][0]
    assert abs(m0) < 1e-6


def test_real_symmetry():
    from nlsmooth.spectrum import StripQuery, find_in_strip

    recs = find_in_strip(fix_hom(1.0, 2.0).problem, StripQuery(-3, 1, 5))
    lams = [r.lam for r in recs]
    for z in lams:
        assert min(abs(-z.conjugate() - w) for w in lams) < 1e-8

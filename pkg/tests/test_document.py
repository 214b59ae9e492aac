import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsmooth.consistency import BoundaryTrace
from nlsmooth.document import DocumentError, from_dict, loads, parse_real, problem_document
from nlsmooth.oracle import fix_b4, fix_bs, fix_loc, fix_mix


def _same(p, q):
    assert p.half_angles == q.half_angles and p.order == q.order and p.ell == q.ell
    assert [op.coeffs for op in p.interior_ops] == [op.coeffs for op in q.interior_ops]
    assert len(p.rows) == len(q.rows)
    for a, b in zip(p.rows, q.rows):
        assert (a.component, a.side, a.mu, a.order) == (b.component, b.side, b.mu, b.order)
        for s, t in zip(a.terms, b.terms):
            assert (s.target, s.rotation, s.homothety) == (t.target, t.rotation, t.homothety)
            assert np.allclose(s.operator.coeffs, t.operator.coeffs, atol=0)


@pytest.mark.parametrize("fx", [fix_bs(0.3, -0.7, chi1=2.0), fix_loc(np.pi / 3), fix_b4(), fix_mix()], ids=lambda f: f.name)
def test_round_trip(fx):
    doc = problem_document(fx.problem)
    again = loads(doc.dumps())
    _same(fx.problem, again.problem)
    assert again.dumps() == doc.dumps()


def test_traces_round_trip():
    p = fix_bs(0.25, -0.25).problem
    r = np.logspace(-6, 0, 7)
    traces = {
        (0, 1, 1): BoundaryTrace((0, 1, 1), poly=np.array([0, 1 + 2j])),
        (0, 2, 1): BoundaryTrace((0, 2, 1), r=r, values=r * 1j, jet=np.array([0, 1j])),
    }
    probes = {"zero": {k: BoundaryTrace(k, poly=np.zeros(1)) for k in traces}}
    d = json.loads(problem_document(p, traces, probes).dumps())
    assert d["traces"][0]["row"] == [1, 1, 1]
    doc = from_dict(d)
    np.testing.assert_array_equal(doc.traces[(0, 1, 1)].poly, [0, 1 + 2j])
    np.testing.assert_allclose(doc.traces[(0, 2, 1)].values, r * 1j)
    assert set(doc.probes["zero"]) == set(traces)


@pytest.mark.parametrize(
    "text,want",
    [("pi", np.pi), ("pi/2", np.pi / 2), ("-pi/4", -np.pi / 4), ("3*pi/8", 3 * np.pi / 8), ("2pi", 2 * np.pi), ("0.75", 0.75), (1.5, 1.5)],
)
def test_parse_real(text, want):
    assert parse_real(text) == pytest.approx(want, rel=1e-15)


def test_parse_real_error():
    with pytest.raises(DocumentError) as e:
        parse_real("half", "components/0/half_angle")
    assert e.value.where == "components/0/half_angle"


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_parse_real_repr(x):
    assert parse_real(repr(x)) == x


def _doc():
    return json.loads(problem_document(fix_bs(0.3, -0.7).problem).dumps())


@pytest.mark.parametrize(
    "mutate,where",
    [
        (lambda d: d.pop("order_2m"), "(document)"),
        (lambda d: d["components"][0].update(half_angle="wide"), "components/0/half_angle"),
        (lambda d: d["rows"][1].update(side=3), "rows/1/side"),
        (lambda d: d["rows"][0]["terms"][1].update(target=4), "rows/0/terms/1/target"),
        (lambda d: d["rows"][0]["terms"][1].update(homothety="-1"), "rows/0/terms/1/homothety"),
        (lambda d: d["components"][0]["interior_op"]["coeffs"][0].__setitem__(0, 3), "components/0/interior_op/coeffs/0"),
        (lambda d: d.update(order_2m=3), "order_2m"),
    ],
)
def test_malformed(mutate, where):
    d = _doc()
    mutate(d)
    with pytest.raises(DocumentError) as e:
        from_dict(d)
    assert e.value.where == where


def test_bad_json():
    with pytest.raises(DocumentError) as e:
        loads("{ nope")
    assert e.value.where.startswith("line 1")


def test_missing_trace_row():
    d = _doc()
    d["traces"] = [{"row": [1, 2, 5], "poly": [[0, 0]]}]
    with pytest.raises(DocumentError) as e:
        from_dict(d)
    assert e.value.where == "traces/0/row"

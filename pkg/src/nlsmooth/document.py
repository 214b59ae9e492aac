"""Problem specification documents (JSON, schema ``nlsmooth/1``).

Components, targets and sides are 1-based as in the usual ``(j, sigma, mu)``
indexing.  Angles, rotations and homothety factors are strings holding either
a decimal number or a multiple of ``pi`` (``"pi/2"``, ``"-3*pi/8"``,
``"0.5pi"``); plain JSON numbers are accepted too.  Operators list their
terms as ``[a1, a2, re, im]`` for the coefficient of ``D1^a1 D2^a2``.
"""

from __future__ import annotations

import json
import re
from typing import Optional

import jsonschema
import numpy as np

from .consistency import BoundaryTrace
from .model import BoundaryRow, HomogeneousOperator, ModelProblem, NonlocalTerm

SCHEMA_ID = "nlsmooth/1"

_number = {"oneOf": [{"type": "string"}, {"type": "number"}]}
_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_operator = {
    "type": "object",
    "required": ["order", "coeffs"],
    "additionalProperties": False,
    "properties": {
        "order": {"type": "integer", "minimum": 0},
        "coeffs": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        },
    },
}
_trace = {
    "type": "object",
    "required": ["row"],
    "additionalProperties": False,
    "properties": {
        "row": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
        "poly": {"type": "array", "items": _complex},
        "r": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "values": {"type": "array", "items": _complex},
        "jet": {"type": "array", "items": _complex},
    },
    "oneOf": [{"required": ["poly"]}, {"required": ["r", "values"]}],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "order_2m", "ell", "components", "rows"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "order_2m": {"type": "integer", "minimum": 2, "multipleOf": 2},
        "ell": {"type": "integer", "minimum": 0},
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["half_angle", "interior_op"],
                "additionalProperties": False,
                "properties": {"half_angle": _number, "interior_op": _operator},
            },
        },
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["component", "side", "mu", "order", "terms"],
                "additionalProperties": False,
                "properties": {
                    "component": {"type": "integer", "minimum": 1},
                    "side": {"enum": [1, 2]},
                    "mu": {"type": "integer", "minimum": 1},
                    "order": {"type": "integer", "minimum": 0},
                    "terms": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["target", "op"],
                            "additionalProperties": False,
                            "properties": {
                                "target": {"type": "integer", "minimum": 1},
                                "rotation": _number,
                                "homothety": _number,
                                "op": _operator,
                            },
                        },
                    },
                },
            },
        },
        "traces": {"type": "array", "items": _trace},
        "probes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "traces"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "traces": {"type": "array", "items": _trace}},
            },
        },
    },
}


class DocumentError(ValueError):
    """Malformed specification document; ``where`` names the offending field."""

    def __init__(self, message, where=""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


_PI = re.compile(r"^\s*([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_real(value, where=""):
    """Decimal string, ``pi`` multiple or JSON number to float."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value)
    m = _PI.match(text)
    if m:
        sign, num, den = m.groups()
        out = np.pi * (float(num) if num else 1.0) / (float(den) if den else 1.0)
        return -out if sign == "-" else out
    try:
        return float(text)
    except ValueError:
        raise DocumentError(f"cannot read {text!r} as a real number", where) from None


def format_real(x: float) -> str:
    return repr(float(x))


def _operator_from(d, where):
    order = d["order"]
    terms = {}
    for n, (a1, a2, re_, im_) in enumerate(d["coeffs"]):
        if int(a1) != a1 or int(a2) != a2 or a1 < 0 or a2 < 0 or a1 + a2 != order:
            raise DocumentError(f"multi-index ({a1}, {a2}) does not have order {order}", f"{where}/coeffs/{n}")
        key = (int(a1), int(a2))
        terms[key] = terms.get(key, 0) + complex(re_, im_)
    return HomogeneousOperator.from_multi_indices(order, terms)


def _operator_to(op: HomogeneousOperator):
    return {
        "order": op.order,
        "coeffs": [[a1, a2, c.real + 0.0, c.imag + 0.0] for (a1, a2), c in op.multi_indices() if c != 0],  # + 0.0 drops signed zeros
    }


def _trace_from(d, where, problem):
    key = tuple(d["row"])
    j, side, mu = key
    if side not in (1, 2) or not 1 <= j <= problem.N:
        raise DocumentError(f"row {list(key)} does not exist", f"{where}/row")
    key = (j - 1, side, mu)
    if key not in problem.row_keys:
        raise DocumentError(f"row {list(d['row'])} does not exist", f"{where}/row")
    cx = lambda a: np.array([complex(x, y) for x, y in a], dtype=complex)
    jet = cx(d["jet"]) if "jet" in d else None
    try:
        if "poly" in d:
            return BoundaryTrace(key, poly=cx(d["poly"]) if d["poly"] else np.zeros(1))
        return BoundaryTrace(key, r=np.array(d["r"], dtype=float), values=cx(d["values"]), jet=jet)
    except ValueError as exc:
        raise DocumentError(str(exc), where) from None


def _trace_to(t: BoundaryTrace):
    j, side, mu = t.key
    out = {"row": [j + 1, side, mu]}
    cx = lambda a: [[complex(v).real, complex(v).imag] for v in a]
    if t.is_polynomial:
        out["poly"] = cx(t.poly)
    else:
        out["r"] = [float(v) for v in t.r]
        out["values"] = cx(t.values)
        if t.jet is not None:
            out["jet"] = cx(t.jet)
    return out


class Document:
    """A parsed specification: the model problem plus optional trace data."""

    def __init__(self, problem: ModelProblem, traces: Optional[dict] = None, probes: Optional[dict] = None):
        self.problem = problem
        self.traces = traces
        self.probes = probes

    def to_dict(self):
        p = self.problem
        out = {"schema": SCHEMA_ID}
        if p.name:
            out["name"] = p.name
        out["order_2m"] = p.order
        out["ell"] = p.ell
        out["components"] = [
            {"half_angle": format_real(w), "interior_op": _operator_to(op)} for w, op in zip(p.half_angles, p.interior_ops)
        ]
        out["rows"] = [
            {
                "component": r.component + 1,
                "side": r.side,
                "mu": r.mu,
                "order": r.order,
                "terms": [
                    {
                        "target": t.target + 1,
                        "rotation": format_real(t.rotation),
                        "homothety": format_real(t.homothety),
                        "op": _operator_to(t.operator),
                    }
                    for t in r.terms
                ],
            }
            for r in p.rows
        ]
        if self.traces is not None:
            out["traces"] = [_trace_to(t) for t in self.traces.values()]
        if self.probes is not None:
            out["probes"] = [{"name": n, "traces": [_trace_to(t) for t in tr.values()]} for n, tr in self.probes.items()]
        return out

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _where(err):
    return "/".join(str(x) for x in err.absolute_path) or "(document)"


def from_dict(d) -> Document:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(d), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        raise DocumentError(e.message, _where(e))
    comps = d["components"]
    half = tuple(parse_real(c["half_angle"], f"components/{i}/half_angle") for i, c in enumerate(comps))
    ops = tuple(_operator_from(c["interior_op"], f"components/{i}/interior_op") for i, c in enumerate(comps))
    rows = []
    for i, r in enumerate(d["rows"]):
        where = f"rows/{i}"
        if r["component"] > len(comps):
            raise DocumentError(f"component {r['component']} does not exist", f"{where}/component")
        terms = []
        for k, t in enumerate(r["terms"]):
            tw = f"{where}/terms/{k}"
            if t["target"] > len(comps):
                raise DocumentError(f"target {t['target']} does not exist", f"{tw}/target")
            chi = parse_real(t.get("homothety", "1"), f"{tw}/homothety")
            if not chi > 0:
                raise DocumentError("homothety must be positive", f"{tw}/homothety")
            op = _operator_from(t["op"], f"{tw}/op")
            if op.order != r["order"]:
                raise DocumentError(f"term order {op.order} differs from the row order {r['order']}", f"{tw}/op/order")
            terms.append(NonlocalTerm(t["target"] - 1, parse_real(t.get("rotation", "0"), f"{tw}/rotation"), chi, op))
        rows.append(BoundaryRow(r["component"] - 1, r["side"], r["mu"], r["order"], tuple(terms)))
    try:
        p = ModelProblem(half, d["order_2m"], ops, tuple(rows), d["ell"], name=d.get("name", ""))
    except ValueError as exc:
        raise DocumentError(str(exc)) from None
    traces = probes = None
    if "traces" in d:
        traces = {}
        for i, t in enumerate(d["traces"]):
            tr = _trace_from(t, f"traces/{i}", p)
            traces[tr.key] = tr
    if "probes" in d:
        probes = {}
        for i, pr in enumerate(d["probes"]):
            probes[pr["name"]] = {}
            for k, t in enumerate(pr["traces"]):
                tr = _trace_from(t, f"probes/{i}/traces/{k}", p)
                probes[pr["name"]][tr.key] = tr
    return Document(p, traces, probes)


def loads(text: str) -> Document:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(d)


def load(path) -> Document:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def problem_document(p: ModelProblem, traces=None, probes=None) -> Document:
    return Document(p, traces, probes)

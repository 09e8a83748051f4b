"""Spec files and run reports.

Both are JSON documents. Tables are flat row-major lists over the axes listed
in ``TABLE_AXES``; floats are written with ``repr`` so every value re-parses
to the identical double.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import prod
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import AuxiliaryKernels, ProblemSpec
from .validation import check_table

PHYSICS = ("S", "T", "X", "Y11", "Y21", "X1", "Y22", "X2", "Y12")
AUX_ALPHABETS = ("W", "U", "V", "Yhat1", "Yhat2")

# table -> (input axes, output axes)
TABLE_AXES = {
    "source": ((), ("S", "T")),
    "channels.bc": (("X",), ("Y11", "Y21")),
    "channels.link1": (("X1",), ("Y22",)),
    "channels.link2": (("X2",), ("Y12",)),
    "auxiliary.wuv": (("S", "T"), ("W", "U", "V")),
    "auxiliary.x": (("W", "U", "V"), ("X",)),
    "auxiliary.x1": ((), ("X1",)),
    "auxiliary.x2": ((), ("X2",)),
    "auxiliary.yhat1": (("Y11", "X1"), ("Yhat1",)),
    "auxiliary.yhat2": (("Y21", "X2"), ("Yhat2",)),
}

SEARCH_KEYS = {
    "restarts": int, "iterations": int, "step": float, "step_halflife": int,
    "objective": str, "w_size": int, "u_size": int, "v_size": int,
    "yhat1_size": int, "yhat2_size": int,
}
SIM_KEYS = {"n": int, "blocks": int, "delta": float, "trials": int, "work_budget": int}
RATE_KEYS = ("rho0", "rho1", "rho2", "r1", "r2", "R1", "R2", "Rs1", "Rs2")
REDUCE_KEYS = {"c12": float, "c21": float, "links": str}


class SpecError(ValidationError):
    """A spec-file problem, tagged with the offending field path."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class SpecFile:
    problem: ProblemSpec
    aux: AuxiliaryKernels | None = None
    stored_margins: dict | None = None
    search: dict = field(default_factory=dict)
    simulate: dict | None = None
    reduce: dict = field(default_factory=dict)
    seed: int | None = None
    name: str = "spec"

    def to_dict(self):
        return spec_to_dict(
            self.problem, self.aux, search=self.search, simulate=self.simulate,
            reduce=self.reduce, seed=self.seed, name=self.name,
            stored_margins=self.stored_margins,
        )


def _reject_constant(tok):
    raise SpecError("<document>", f"non-finite number {tok!r}")


def load_json(text, where="<document>"):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SpecError(where, f"not valid JSON ({e.msg} at line {e.lineno})") from None


def _get(doc, path, required=True):
    cur = doc
    for key in path.split("."):
        if not isinstance(cur, dict) or key not in cur:
            if required:
                raise SpecError(path, "missing")
            return None
        cur = cur[key]
    return cur


def _numbers(values, path):
    arr = np.asarray(values, dtype=object).ravel()
    for v in arr:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SpecError(path, f"entries must be numbers, got {v!r}")
    return np.array(arr, dtype=float)


def _table(doc, path, sizes, renormalize):
    inputs, outputs = TABLE_AXES[path]
    raw = _get(doc, path)
    if not isinstance(raw, list):
        raise SpecError(path, "must be a list of probabilities")
    flat = _numbers(raw, path)
    shape = tuple(sizes[a] for a in inputs + outputs)
    if flat.size != prod(shape):
        raise SpecError(path, f"has {flat.size} entries, expected {prod(shape)} for axes {inputs + outputs}")
    arr = flat.reshape(shape)
    axes = tuple(range(len(inputs), len(shape)))
    try:
        return check_table(arr, path, renormalize=renormalize, axis=axes if inputs else None)
    except ValidationError as e:
        raise SpecError(path, str(e).split(": ", 1)[-1]) from None


def _alphabets(doc, names, required):
    al = _get(doc, "alphabets")
    if not isinstance(al, dict):
        raise SpecError("alphabets", "must map variable names to sizes")
    out = {}
    for n in names:
        if n not in al:
            if required:
                raise SpecError(f"alphabets.{n}", "missing")
            continue
        v = al[n]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise SpecError(f"alphabets.{n}", f"size must be a positive integer, got {v!r}")
        out[n] = v
    unknown = set(al) - set(PHYSICS) - set(AUX_ALPHABETS)
    if unknown:
        raise SpecError("alphabets", f"unknown variables {sorted(unknown)}")
    return out


def _block(doc, name, keys):
    blk = _get(doc, name, required=False)
    if blk is None:
        return None
    if not isinstance(blk, dict):
        raise SpecError(name, "must be an object")
    out = {}
    for k, v in blk.items():
        if k == "rates" and name == "simulate":
            continue
        if k not in keys:
            raise SpecError(f"{name}.{k}", "unknown key")
        want = keys[k]
        if want is str:
            if not isinstance(v, str):
                raise SpecError(f"{name}.{k}", "must be a string")
        elif want is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise SpecError(f"{name}.{k}", "must be an integer")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SpecError(f"{name}.{k}", "must be a number")
        out[k] = v
    return out


def parse_spec_dict(doc, renormalize=False, name="spec"):
    """Validate a spec document (already decoded from JSON)."""
    if not isinstance(doc, dict):
        raise SpecError("<document>", "top level must be an object")
    sizes = _alphabets(doc, PHYSICS, required=True)
    tables = {p: _table(doc, p, sizes, renormalize) for p in
              ("source", "channels.bc", "channels.link1", "channels.link2")}
    problem = ProblemSpec.from_arrays(
        tables["source"], tables["channels.bc"], tables["channels.link1"], tables["channels.link2"]
    )

    aux = stored = None
    if _get(doc, "auxiliary", required=False) is not None:
        sizes.update(_alphabets(doc, AUX_ALPHABETS, required=True))
        parts = {p.split(".")[1]: _table(doc, p, sizes, renormalize)
                 for p in TABLE_AXES if p.startswith("auxiliary.")}
        aux = AuxiliaryKernels(**parts)
        stored = _get(doc, "auxiliary.margins", required=False)
        if stored is not None:
            if not isinstance(stored, dict):
                raise SpecError("auxiliary.margins", "must be an object")
            stored = {k: float(_numbers([v], f"auxiliary.margins.{k}")[0]) for k, v in stored.items()}

    search = _block(doc, "search", SEARCH_KEYS) or {}
    simulate = _block(doc, "simulate", SIM_KEYS)
    if simulate is not None:
        rates = _get(doc, "simulate.rates", required=False) or {}
        if not isinstance(rates, dict):
            raise SpecError("simulate.rates", "must be an object")
        for k, v in rates.items():
            if k not in RATE_KEYS:
                raise SpecError(f"simulate.rates.{k}", "unknown rate")
            _numbers([v], f"simulate.rates.{k}")
        simulate["rates"] = {k: float(v) for k, v in rates.items()}
    reduce = _block(doc, "reduce", REDUCE_KEYS) or {}

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise SpecError("seed", f"must be a nonnegative integer, got {seed!r}")
    extra = set(doc) - {"alphabets", "source", "channels", "auxiliary", "search",
                        "simulate", "reduce", "seed", "name"}
    if extra:
        raise SpecError("<document>", f"unknown sections {sorted(extra)}")
    return SpecFile(problem, aux, stored, search, simulate, reduce, seed, doc.get("name", name))


def parse_spec(path, renormalize=False):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SpecError(str(path), f"cannot read ({e.strerror})") from None
    return parse_spec_dict(load_json(text, str(path)), renormalize, name=path.stem)


def _flat(arr):
    return [float(v) for v in np.asarray(arr).ravel()]


def spec_to_dict(problem, aux=None, *, search=None, simulate=None, reduce=None,
                 seed=None, name=None, stored_margins=None):
    """The spec document describing ``problem`` (and optionally ``aux``)."""
    ps = problem.sizes
    doc = {}
    if name is not None:
        doc["name"] = name
    doc["alphabets"] = {n: int(ps[n]) for n in PHYSICS}
    doc["source"] = _flat(problem.p_st.mass)
    doc["channels"] = {
        "bc": _flat(problem.bc.mass),
        "link1": _flat(problem.link1.mass),
        "link2": _flat(problem.link2.mass),
    }
    if aux is not None:
        doc["alphabets"].update({k: int(v) for k, v in aux.sizes.items()})
        doc["auxiliary"] = {f: _flat(getattr(aux, f)) for f in AuxiliaryKernels.FIELDS}
        if stored_margins:
            doc["auxiliary"]["margins"] = dict(stored_margins)
    if search:
        doc["search"] = dict(search)
    if simulate:
        doc["simulate"] = dict(simulate)
    if reduce:
        doc["reduce"] = dict(reduce)
    if seed is not None:
        doc["seed"] = int(seed)
    return doc


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


__all__ = ["SpecFile", "SpecError", "parse_spec", "parse_spec_dict", "spec_to_dict", "dumps", "load_json"]

"""Manifest loading: one JSON document describing a whole workspace.

A manifest names a Hamiltonian (directly, or through control-affine
generators that the quadratic-cost reduction turns into one) together
with the vector fields, points, trajectory runs, sampling box, and
tolerance overrides that the command-line front end operates on.

Schema (all expression strings use the package grammar)::

    {
      "name":        "my-system",            # optional, defaults to source
      "dim":         2,                      # phase space is R^{2*dim}
      "hamiltonian": "0.5*(p1^2+p2^2)",      # exactly one of these two:
      "control_generators": [["1","0"], ["x1","1"]],
      "fields": {                            # optional
        "full-field": {"x": ["p1","0"], "p": ["0","0"]},
        "base-field": {"base": ["0","1"]}    # x-dependent, lives on x-space
      },
      "points": {"base": [1.0, 0.0, 1.0, 1.0]},   # optional, 2*dim floats
      "runs": {                              # optional
        "default": {"start": "base",         # point name or 2*dim floats
                    "dt": 1e-3, "steps": 10000,
                    "watch": {"p2": "p2"}}   # "H" is implicit and reserved
      },
      "sampling": {"x_box": [[-2,2],[-2,2]], "p_box": [[0.2,2],[0.2,2]],
                   "count": 100, "seed": 12345},
      "tolerances": {"noether_residual": 1e-9}    # optional overrides
    }

Every structural problem raises :class:`~hamgeo.errors.ManifestError`
with the offending name in the message.  Built-in manifests are
addressable by name instead of a path; they take precedence over files.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import DimensionError, HamgeoError, ManifestError
from .expr import (
    BaseVectorFieldSpec,
    ControlAffineSystem,
    Expression,
    HamiltonianSpec,
    VectorFieldSpec,
    parse,
    pmp_hamiltonian,
)
from .phase import PhasePoint, sample_box

__all__ = [
    "Manifest",
    "RunSpec",
    "SamplingSpec",
    "DEFAULT_TOLERANCES",
    "BUILTIN_MANIFESTS",
    "load_manifest",
    "manifest_from_dict",
    "builtin_manifest",
]

#: Default pass/fail thresholds, keyed by the residual they judge.  A
#: manifest's "tolerances" table overrides entries; the CLI's --tol-scale
#: multiplies whichever value wins.
DEFAULT_TOLERANCES = {
    "symmetry_residual": 1e-10,
    "newtonoid_residual": 1e-10,
    "noether_residual": 1e-10,
    "invariant_equation_residual": 1e-8,
    "liouville_residual": 1e-10,
    "newtonoid_invariant_residual": 1e-8,
    "horizontality": 1e-10,
    "geodesic": 1e-8,
    "drift_conserved": 1e-12,
    "drift_hamiltonian": 1e-8,
}

_PAPER_EXAMPLE = {
    "name": "paper-example",
    "dim": 2,
    "control_generators": [["1", "0"], ["x1", "1"]],
    "fields": {
        "rho_H": {
            "x": ["p1*(1+x1^2)+p2*x1", "p1*x1+p2"],
            "p": ["-(p1^2*x1+p1*p2)", "0"],
        },
        "momentum-shift": {"x": ["0", "p2"], "p": ["0", "0"]},
        "coordinate-shift-x1": {"x": ["1", "0"], "p": ["0", "0"]},
        "vertical-p1": {"x": ["0", "0"], "p": ["1", "0"]},
        "vertical-p2": {"x": ["0", "0"], "p": ["0", "1"]},
        "translation-x2": {"base": ["0", "1"]},
        "scaling-x1": {"base": ["x1", "0"]},
    },
    "points": {"base": [1.0, 0.0, 1.0, 1.0]},
    "runs": {
        "default": {
            "start": "base",
            "dt": 1e-3,
            "steps": 10000,
            "watch": {"p2": "p2", "u": "p1*x1+p2"},
        }
    },
    "sampling": {
        "x_box": [[-2.0, 2.0], [-2.0, 2.0]],
        "p_box": [[0.2, 2.0], [0.2, 2.0]],
        "count": 100,
        "seed": 12345,
    },
}

_FREE_PARTICLE = {
    "name": "free-particle",
    "dim": 2,
    "hamiltonian": "0.5*(p1^2+p2^2)",
    "fields": {
        "rho_H": {"x": ["p1", "p2"], "p": ["0", "0"]},
        "translation-x1": {"base": ["1", "0"]},
        "translation-x2": {"base": ["0", "1"]},
    },
    "points": {"origin": [0.0, 0.0, 1.0, 1.0]},
    "runs": {
        "default": {
            "start": "origin",
            "dt": 1e-2,
            "steps": 1000,
            "watch": {"p1": "p1", "p2": "p2"},
        }
    },
    "sampling": {
        "x_box": [[-2.0, 2.0], [-2.0, 2.0]],
        "p_box": [[0.2, 2.0], [0.2, 2.0]],
        "count": 100,
        "seed": 12345,
    },
}

#: Manifests shipped with the package, usable wherever a path is accepted.
BUILTIN_MANIFESTS = {
    "paper-example": _PAPER_EXAMPLE,
    "free-particle": _FREE_PARTICLE,
}


@dataclass
class SamplingSpec:
    """Deterministic sample cloud for field-level and pointwise checks."""

    x_box: tuple
    p_box: tuple
    count: int
    seed: int

    def points(self, seed: Optional[int] = None) -> list:
        return sample_box(
            self.x_box, self.p_box, self.count,
            self.seed if seed is None else seed,
        )


@dataclass
class RunSpec:
    """One named fixed-step integration: start state, grid, watch table."""

    name: str
    start: PhasePoint
    dt: float
    steps: int
    watch: dict


@dataclass
class Manifest:
    """Validated, fully parsed form of one manifest document.

    ``raw`` keeps the original JSON-compatible dictionary so reports can
    echo exactly what they were built from.
    """

    name: str
    dim: int
    hamiltonian: HamiltonianSpec
    control: Optional[ControlAffineSystem]
    fields: dict
    points: dict
    runs: dict
    sampling: SamplingSpec
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def tolerance(self, key: str, scale: float = 1.0) -> float:
        base = self.tolerances.get(key, DEFAULT_TOLERANCES.get(key))
        if base is None:
            raise KeyError(f"no tolerance named {key!r}")
        return base * scale


def _fail(context: str, message: str) -> "ManifestError":
    return ManifestError(f"{context}: {message}")


def _get_table(data: dict, key: str, context: str) -> dict:
    table = data.get(key, {})
    if not isinstance(table, dict):
        raise _fail(context, f"{key!r} must be an object")
    return table


def _texts(value, context: str) -> list:
    if not isinstance(value, list) or not all(
        isinstance(s, str) for s in value
    ):
        raise _fail(context, "expected a list of expression strings")
    return value


def _parse_point(value, dim: int, context: str) -> PhasePoint:
    if not isinstance(value, list) or len(value) != 2 * dim or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise _fail(context, f"expected a list of {2 * dim} numbers")
    flat = [float(v) for v in value]
    return PhasePoint(tuple(flat[:dim]), tuple(flat[dim:]))


def _parse_field(name: str, body, dim: int):
    context = f"field {name!r}"
    if not isinstance(body, dict):
        raise _fail(context, "expected an object")
    if "base" in body:
        if set(body) != {"base"}:
            raise _fail(context, 'a base field has exactly the key "base"')
        return BaseVectorFieldSpec.from_text(
            dim, _texts(body["base"], context)
        )
    if set(body) != {"x", "p"}:
        raise _fail(context, 'a full field has exactly the keys "x" and "p"')
    return VectorFieldSpec.from_text(
        dim, _texts(body["x"], context), _texts(body["p"], context)
    )


def _parse_run(name: str, body, dim: int, points: dict) -> RunSpec:
    context = f"run {name!r}"
    if not isinstance(body, dict):
        raise _fail(context, "expected an object")
    unknown = set(body) - {"start", "dt", "steps", "watch"}
    if unknown:
        raise _fail(context, f"unknown keys {sorted(unknown)}")
    for key in ("start", "dt", "steps"):
        if key not in body:
            raise _fail(context, f"missing required key {key!r}")

    start = body["start"]
    if isinstance(start, str):
        if start not in points:
            raise _fail(context, f"start references undefined point {start!r}")
        start_point = points[start]
    else:
        start_point = _parse_point(start, dim, f"{context} start")

    dt = body["dt"]
    if not isinstance(dt, (int, float)) or isinstance(dt, bool) or not (
        dt > 0.0
    ) or dt != dt or dt == float("inf"):
        raise _fail(context, f"dt must be positive and finite, got {dt!r}")
    steps = body["steps"]
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
        raise _fail(context, f"steps must be a positive integer, got {steps!r}")

    watch_body = body.get("watch", {})
    if not isinstance(watch_body, dict):
        raise _fail(context, "watch must map names to expression strings")
    watch = {}
    for wname, text in watch_body.items():
        if wname == "H":
            raise _fail(context, 'watch name "H" is reserved')
        if not isinstance(text, str):
            raise _fail(context, f"watch {wname!r} must be a string")
        watch[wname] = parse(text, dim)
    return RunSpec(name, start_point, float(dt), steps, watch)


def _parse_sampling(body, dim: int) -> SamplingSpec:
    context = "sampling"
    if body is None:
        lo_hi = tuple((-1.0, 1.0) for _ in range(dim))
        p_box = tuple((0.2, 1.2) for _ in range(dim))
        return SamplingSpec(lo_hi, p_box, 50, 0)
    if not isinstance(body, dict):
        raise _fail(context, "expected an object")
    unknown = set(body) - {"x_box", "p_box", "count", "seed"}
    if unknown:
        raise _fail(context, f"unknown keys {sorted(unknown)}")

    def box(key):
        intervals = body.get(key)
        if (
            not isinstance(intervals, list)
            or len(intervals) != dim
            or not all(
                isinstance(iv, list) and len(iv) == 2 for iv in intervals
            )
        ):
            raise _fail(context, f"{key} must list {dim} [low, high] pairs")
        return tuple((float(lo), float(hi)) for lo, hi in intervals)

    count = body.get("count", 50)
    seed = body.get("seed", 0)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise _fail(context, f"count must be a positive integer, got {count!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise _fail(context, f"seed must be a non-negative integer, got {seed!r}")
    return SamplingSpec(box("x_box"), box("p_box"), count, seed)


def manifest_from_dict(data: dict, fallback_name: str = "manifest") -> Manifest:
    """Validate a JSON-compatible dictionary into a :class:`Manifest`."""
    if not isinstance(data, dict):
        raise ManifestError("manifest document must be a JSON object")
    known = {
        "name", "dim", "hamiltonian", "control_generators",
        "fields", "points", "runs", "sampling", "tolerances",
    }
    unknown = set(data) - known
    if unknown:
        raise ManifestError(f"unknown manifest keys {sorted(unknown)}")

    name = data.get("name", fallback_name)
    if not isinstance(name, str) or not name:
        raise ManifestError("name must be a non-empty string")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ManifestError(f"dim must be a positive integer, got {dim!r}")

    has_h = "hamiltonian" in data
    has_gen = "control_generators" in data
    if has_h == has_gen:
        raise ManifestError(
            'exactly one of "hamiltonian" and "control_generators" is required'
        )
    try:
        if has_h:
            text = data["hamiltonian"]
            if not isinstance(text, str):
                raise ManifestError("hamiltonian must be an expression string")
            ham = HamiltonianSpec.from_text(name, dim, text)
            control = None
        else:
            gens = data["control_generators"]
            if not isinstance(gens, list) or not gens:
                raise ManifestError(
                    "control_generators must be a non-empty list of generators"
                )
            control = ControlAffineSystem.from_text(
                dim, [_texts(g, "control_generators") for g in gens]
            )
            reduced = pmp_hamiltonian(control)
            ham = HamiltonianSpec(name, dim, reduced.expr)

        points = {
            pname: _parse_point(body, dim, f"point {pname!r}")
            for pname, body in _get_table(data, "points", "manifest").items()
        }
        fields = {
            fname: _parse_field(fname, body, dim)
            for fname, body in _get_table(data, "fields", "manifest").items()
        }
        runs = {
            rname: _parse_run(rname, body, dim, points)
            for rname, body in _get_table(data, "runs", "manifest").items()
        }
        sampling = _parse_sampling(data.get("sampling"), dim)
    except ManifestError:
        raise
    except HamgeoError as exc:
        raise ManifestError(str(exc)) from exc

    tolerances = {}
    for tname, value in _get_table(data, "tolerances", "manifest").items():
        if (
            not isinstance(value, (int, float))
            or isinstance(value, bool)
            or not value > 0.0
        ):
            raise ManifestError(
                f"tolerance {tname!r} must be a positive number, got {value!r}"
            )
        tolerances[tname] = float(value)

    return Manifest(
        name=name,
        dim=dim,
        hamiltonian=ham,
        control=control,
        fields=fields,
        points=points,
        runs=runs,
        sampling=sampling,
        tolerances=tolerances,
        raw=copy.deepcopy(data),
    )


def builtin_manifest(name: str) -> dict:
    """A deep copy of a built-in manifest document."""
    try:
        return copy.deepcopy(BUILTIN_MANIFESTS[name])
    except KeyError:
        raise ManifestError(
            f"no built-in manifest named {name!r}; "
            f"choices: {sorted(BUILTIN_MANIFESTS)}"
        ) from None


def load_manifest(source: Union[str, Path]) -> Manifest:
    """Load a manifest from a built-in name or a JSON file path."""
    key = str(source)
    if key in BUILTIN_MANIFESTS:
        return manifest_from_dict(builtin_manifest(key), key)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {key!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {key!r} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data, path.stem)

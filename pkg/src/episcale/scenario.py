"""Scenario files: JSON documents describing a complete run.

Schema (all keys required unless marked optional)::

    {
      "name": "flagship",
      "patches": [
        {"sigma_S": 0.95, "sigma_E": 0.99, "sigma_I": 0.9, "sigma_R": 0.95,
         "gamma_E": 0.9, "gamma_I": 0.5, "gamma_R": 0.1,
         "transmission": {"kind": "standard", "beta": 0.95},
         "recruitment": {"kind": "constant", "params": {"B": 10}}},
        ...
      ],
      "movement": {
        "convention": "column-stochastic",
        "k": 64,
        "S": [[row], ...], "E": ..., "I": ..., "R": ...
      },
      "initial_state": {"S": [...], "E": [...], "I": [...], "R": [...]},
      "horizon": 5000,
      "classify": {"horizon": 10000, "tail_fraction": 0.5,      # optional
                   "eps_eradicate": 1e-8, "eps_persist": 1e-4}
    }

Matrices are written row by row; ``M[i][j]`` is the fraction moving from
patch ``j`` to patch ``i``, so every column sums to 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import EpiscaleError, ParameterError
from .metapop import COLUMN_SUM_TOL, COMPARTMENTS, MetapopModel, MovementModel, is_regular
from .seirs import (
    BevertonHolt,
    Constant,
    EpidemicParams,
    Geometric,
    Poisson,
    Ricker,
    Standard,
)

__all__ = [
    "Diagnostic",
    "ClassifySettings",
    "Scenario",
    "ScenarioError",
    "parse_scenario",
    "load_scenario",
    "validate_scenario",
    "serialize_scenario",
    "CONVENTION",
]

CONVENTION = "column-stochastic"

TRANSMISSIONS = {"standard": Standard, "poisson": Poisson}
RECRUITMENTS = {
    "constant": (Constant, ("B",)),
    "beverton_holt": (BevertonHolt, ("r", "K")),
    "ricker": (Ricker, ("r", "K")),
    "geometric": (Geometric, ("r",)),
}
PATCH_RATES = ("sigma_S", "sigma_E", "sigma_I", "sigma_R", "gamma_E", "gamma_I", "gamma_R")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    path: str
    message: str

    def __str__(self):
        loc = f"{self.path}: " if self.path else ""
        return f"{self.severity}: {loc}{self.message}"


class ScenarioError(EpiscaleError):
    """Raised by :func:`parse_scenario`; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class ClassifySettings:
    horizon: int = 10_000
    tail_fraction: float = 0.5
    eps_eradicate: float = 1e-8
    eps_persist: float = 1e-4

    def as_dict(self):
        return {
            "horizon": self.horizon,
            "tail_fraction": self.tail_fraction,
            "eps_eradicate": self.eps_eradicate,
            "eps_persist": self.eps_persist,
        }


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    model: MetapopModel
    initial_state: np.ndarray
    horizon: int
    classify: ClassifySettings = field(default_factory=ClassifySettings)

    @property
    def n(self):
        return self.model.n

    def to_dict(self):
        return scenario_to_dict(self)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


class _Collector:
    def __init__(self):
        self.diags: List[Diagnostic] = []

    def error(self, path, msg):
        self.diags.append(Diagnostic("error", path, msg))

    def number(self, obj, key, path, *, integer=False):
        if not isinstance(obj, dict) or key not in obj:
            self.error(f"{path}.{key}" if path else key, "required field is missing")
            return None
        v = obj[key]
        p = f"{path}.{key}" if path else key
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(p, f"expected a number, got {type(v).__name__}")
            return None
        if integer and not isinstance(v, int):
            self.error(p, f"expected an integer, got {v!r}")
            return None
        if not math.isfinite(v):
            self.error(p, "expected a finite number")
            return None
        return v


def _parse_patch(c, raw, path):
    if not isinstance(raw, dict):
        c.error(path, "expected an object")
        return None
    rates = {}
    for key in PATCH_RATES:
        v = c.number(raw, key, path)
        if v is None:
            continue
        if not 0.0 < v < 1.0:
            c.error(f"{path}.{key}", f"must lie in the open interval (0, 1), got {v!r}")
            continue
        rates[key] = float(v)

    transmission = None
    tr = raw.get("transmission")
    tpath = f"{path}.transmission"
    if not isinstance(tr, dict):
        c.error(tpath, "required object with fields kind, beta")
    else:
        kind = tr.get("kind")
        beta = c.number(tr, "beta", tpath)
        if kind not in TRANSMISSIONS:
            c.error(f"{tpath}.kind", f"expected one of {sorted(TRANSMISSIONS)}, got {kind!r}")
        elif beta is not None:
            try:
                transmission = TRANSMISSIONS[kind](float(beta))
            except ParameterError as exc:
                c.error(f"{tpath}.beta", str(exc))

    recruitment = None
    rc = raw.get("recruitment")
    rpath = f"{path}.recruitment"
    if not isinstance(rc, dict):
        c.error(rpath, "required object with fields kind, params")
    else:
        kind = rc.get("kind")
        if kind not in RECRUITMENTS:
            c.error(f"{rpath}.kind", f"expected one of {sorted(RECRUITMENTS)}, got {kind!r}")
        else:
            cls, names = RECRUITMENTS[kind]
            params = rc.get("params")
            if not isinstance(params, dict):
                c.error(f"{rpath}.params", f"required object with fields {', '.join(names)}")
            else:
                extra = sorted(set(params) - set(names))
                if extra:
                    c.error(f"{rpath}.params", f"unknown fields {extra} for {kind}")
                vals = [c.number(params, nm, f"{rpath}.params") for nm in names]
                if all(v is not None for v in vals):
                    try:
                        recruitment = cls(*(float(v) for v in vals))
                    except ParameterError as exc:
                        c.error(f"{rpath}.params", str(exc))

    if len(rates) == len(PATCH_RATES) and transmission is not None and recruitment is not None:
        return EpidemicParams(transmission=transmission, recruitment=recruitment, **rates)
    return None


def _parse_matrix(c, raw, path, n):
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        c.error(path, "expected a list of rows")
        return None
    if len(raw) != n or any(len(r) != n for r in raw):
        c.error(path, f"expected a {n}x{n} matrix (one row per patch)")
        return None
    ok = True
    for i, row in enumerate(raw):
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                c.error(f"{path}[{i}][{j}]", f"expected a finite number >= 0, got {v!r}")
                ok = False
    if not ok:
        return None
    M = np.array(raw, dtype=float)
    for j, s in enumerate(M.sum(axis=0)):
        if abs(s - 1.0) > COLUMN_SUM_TOL:
            c.error(
                path,
                f"column {j} sums to {s!r}; columns must sum to 1 within {COLUMN_SUM_TOL} "
                f"(convention: {CONVENTION}, M[i][j] = fraction moving from patch j to patch i)",
            )
            ok = False
    if ok and not is_regular(M):
        c.error(path, "matrix is not regular: no power up to the Wielandt bound is entrywise positive")
        ok = False
    return M if ok else None


def _scenario_from_obj(obj):
    c = _Collector()
    if not isinstance(obj, dict):
        raise ScenarioError([Diagnostic("error", "", "top level must be a JSON object")])

    known = {"name", "patches", "movement", "initial_state", "horizon", "classify"}
    for key in sorted(set(obj) - known):
        c.error(key, "unknown field")

    name = obj.get("name")
    if not isinstance(name, str) or not name:
        c.error("name", "required non-empty string")

    patches_raw = obj.get("patches")
    patches = []
    if not isinstance(patches_raw, list) or not patches_raw:
        c.error("patches", "required non-empty list of patch records")
        n = None
    else:
        n = len(patches_raw)
        patches = [_parse_patch(c, p, f"patches[{j}]") for j, p in enumerate(patches_raw)]

    movement = None
    mv = obj.get("movement")
    if not isinstance(mv, dict):
        c.error("movement", "required object")
    else:
        conv = mv.get("convention")
        if conv != CONVENTION:
            c.error("movement.convention", f"must be present and equal to {CONVENTION!r}, got {conv!r}")
        k = c.number(mv, "k", "movement", integer=True)
        if k is not None and k < 1:
            c.error("movement.k", f"must be a positive integer, got {k}")
            k = None
        mats = {}
        if n is not None:
            for comp in COMPARTMENTS:
                if comp not in mv:
                    c.error(f"movement.{comp}", "required field is missing")
                    continue
                mats[comp] = _parse_matrix(c, mv[comp], f"movement.{comp}", n)
        extra = sorted(set(mv) - {"convention", "k", *COMPARTMENTS})
        for key in extra:
            c.error(f"movement.{key}", "unknown field")
        if k is not None and len(mats) == 4 and all(m is not None for m in mats.values()):
            movement = MovementModel(mats["S"], mats["E"], mats["I"], mats["R"], k)

    state = None
    st = obj.get("initial_state")
    if not isinstance(st, dict):
        c.error("initial_state", "required object with fields S, E, I, R")
    elif n is not None:
        rows, ok = [], True
        for comp in COMPARTMENTS:
            v = st.get(comp)
            p = f"initial_state.{comp}"
            if not isinstance(v, list) or len(v) != n:
                c.error(p, f"expected a list of {n} densities")
                ok = False
                continue
            for j, e in enumerate(v):
                if isinstance(e, bool) or not isinstance(e, (int, float)) or not math.isfinite(e) or e < 0:
                    c.error(f"{p}[{j}]", f"expected a finite number >= 0, got {e!r}")
                    ok = False
            rows.append(v)
        for key in sorted(set(st) - set(COMPARTMENTS)):
            c.error(f"initial_state.{key}", "unknown field")
        if ok:
            state = np.array(rows, dtype=float)
            state.setflags(write=False)

    horizon = c.number(obj, "horizon", "", integer=True)
    if horizon is not None and horizon < 0:
        c.error("horizon", f"must be >= 0, got {horizon}")

    settings = ClassifySettings()
    cl = obj.get("classify")
    if cl is not None:
        if not isinstance(cl, dict):
            c.error("classify", "expected an object")
        else:
            kw = {}
            for key in sorted(set(cl) - set(ClassifySettings().as_dict())):
                c.error(f"classify.{key}", "unknown field")
            for key in ClassifySettings().as_dict():
                if key in cl:
                    v = c.number(cl, key, "classify", integer=(key == "horizon"))
                    if v is not None:
                        kw[key] = v
            if kw.get("horizon", 1) < 1:
                c.error("classify.horizon", "must be >= 1")
            if not 0.0 < kw.get("tail_fraction", 0.5) <= 1.0:
                c.error("classify.tail_fraction", "must lie in (0, 1]")
            merged = {**settings.as_dict(), **kw}
            if not 0 < merged["eps_eradicate"] < merged["eps_persist"]:
                c.error("classify", "need 0 < eps_eradicate < eps_persist")
            settings = ClassifySettings(**merged)

    if c.diags:
        raise ScenarioError(c.diags)
    model = MetapopModel(patches, movement)
    return Scenario(name, model, state, int(horizon), settings)


def parse_scenario(text):
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        carrying every diagnostic: JSON syntax errors with line and column,
        schema violations with the field path, and semantic violations such
        as a movement column that does not sum to 1.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            [Diagnostic("error", f"line {exc.lineno}, column {exc.colno}", f"JSON syntax error: {exc.msg}")]
        ) from None
    return _scenario_from_obj(obj)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# --------------------------------------------------------------------------
# cross-field validation
# --------------------------------------------------------------------------

PURPOSES = ("simulate", "dissipativity", "r0", "reduce", "verify-k", "region", "classify")


def validate_scenario(s, purposes=()):
    """Cross-field checks for the requested analyses; an empty list means runnable.

    ``purposes`` names the analyses about to run (see ``PURPOSES``).
    """
    diags = []
    purposes = set(purposes)
    unknown = purposes - set(PURPOSES)
    if unknown:
        raise ValueError(f"unknown purposes {sorted(unknown)}")
    patches = s.model.patches

    if purposes & {"dissipativity", "simulate"}:
        for j, p in enumerate(patches):
            if not p.recruitment.bounded:
                diags.append(
                    Diagnostic(
                        "warning",
                        f"patches[{j}].recruitment",
                        f"{p.recruitment.kind} recruitment is unbounded; the dissipativity "
                        "bound only holds for bounded recruitment and is not reported",
                    )
                )

    if purposes & {"reduce", "region", "verify-k"}:
        for j, p in enumerate(patches):
            if not isinstance(p.transmission, Standard):
                diags.append(
                    Diagnostic(
                        "error",
                        f"patches[{j}].transmission",
                        f"{p.transmission.kind} incidence: the aggregated SEIRS coefficients "
                        "are derived for standard incidence only",
                    )
                )
            if not isinstance(p.recruitment, Constant):
                diags.append(
                    Diagnostic(
                        "error",
                        f"patches[{j}].recruitment",
                        f"{p.recruitment.kind} recruitment: the aggregated SEIRS coefficients "
                        "are derived for constant recruitment only",
                    )
                )

    if "region" in purposes:
        if s.n != 2:
            diags.append(Diagnostic("error", "patches", f"region analysis needs exactly 2 patches, got {s.n}"))
        else:
            for attr in ("sigma_E", "gamma_E"):
                a, b = (getattr(p, attr) for p in patches)
                if a != b:
                    diags.append(
                        Diagnostic("error", f"patches[1].{attr}", f"region analysis needs a common {attr}, got {a} and {b}")
                    )
            betas = [getattr(p.transmission, "beta", None) for p in patches]
            if betas[0] != betas[1]:
                diags.append(
                    Diagnostic("error", "patches[1].transmission.beta", f"region analysis needs a common beta, got {betas}")
                )
    return diags


# --------------------------------------------------------------------------
# canonical serialization
# --------------------------------------------------------------------------


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def _patch_to_dict(p):
    rc = p.recruitment
    _, names = RECRUITMENTS[rc.kind]
    d = {key: _num(getattr(p, key)) for key in PATCH_RATES}
    d["transmission"] = {"kind": p.transmission.kind, "beta": _num(p.transmission.beta)}
    d["recruitment"] = {"kind": rc.kind, "params": {nm: _num(getattr(rc, nm)) for nm in names}}
    return d


def scenario_to_dict(s):
    mv = s.model.movement
    movement = {"convention": CONVENTION, "k": mv.k}
    for comp, M in zip(COMPARTMENTS, mv.matrices):
        movement[comp] = [[_num(v) for v in row] for row in M]
    return {
        "name": s.name,
        "patches": [_patch_to_dict(p) for p in s.model.patches],
        "movement": movement,
        "initial_state": {comp: [_num(v) for v in row] for comp, row in zip(COMPARTMENTS, s.initial_state)},
        "horizon": s.horizon,
        "classify": {k: _num(v) if k != "horizon" else int(v) for k, v in s.classify.as_dict().items()},
    }


def serialize_scenario(s):
    """Canonical JSON text: fixed key order, two-space indent, trailing newline."""
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"

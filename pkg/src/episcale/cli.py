"""``episcale`` command-line tool.

Every subcommand reads one scenario file and prints a JSON summary on
stdout. With ``--out DIR`` the summary is also written to ``DIR/<command>.json``
together with any plot-ready CSV tables. Exit status: 0 success, 1 invalid
scenario or arguments, 2 numerical failure (including a failed verify-k check).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    TwoPatchInfectiousParams,
    TwoPatchSharedParams,
    Verdict,
    classify_asymptotics,
    eradication_feasibility,
    region_sweep,
)
from .errors import EpiscaleError, NumericalFailure, PartialResult
from .metapop import COMPARTMENTS, aggregate, dissipativity_bound, full_step, simulate
from .reduction import (
    StationaryProfile,
    dfe_reduced,
    find_fixed_point,
    r0_reduced,
    reduced_map,
    reduced_params,
    reduced_step,
    timescale_convergence,
)
from .scenario import PURPOSES, ScenarioError, load_scenario, validate_scenario
from .seirs import r0_local_closed, r0_next_generation

log = logging.getLogger("episcale")

DEFAULT_KS = (1, 2, 4, 8, 16, 32, 64)
VERIFY_K_TOL = 1e-6
FIXED_POINT_TOL = 1e-10
REGION_RESOLUTION = 201
BOUNDARY_TOL = 1e-9


class ValidationFailed(EpiscaleError):
    pass


def fmt(v):
    return format(float(v), ".17g")


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _require(s, purposes):
    diags = validate_scenario(s, purposes)
    for d in diags:
        if d.severity == "warning":
            log.warning("%s", d)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ValidationFailed("\n".join(str(d) for d in errors))
    return diags


def _state_dict(x):
    return {c: [float(v) for v in row] for c, row in zip(COMPARTMENTS, x)}


def _classify_kwargs(s):
    c = s.classify
    return dict(
        horizon=c.horizon,
        eps_eradicate=c.eps_eradicate,
        eps_persist=c.eps_persist,
        tail_fraction=c.tail_fraction,
    )


# --------------------------------------------------------------------------
# subcommands: each returns (summary dict, {filename: csv text})
# --------------------------------------------------------------------------


def cmd_simulate(s, args):
    diags = _require(s, ["simulate"])
    traj = simulate(s.model, s.initial_state, s.horizon)
    n = s.n
    header = ["t"] + [f"{c}_{j + 1}" for c in COMPARTMENTS for j in range(n)] + list(COMPARTMENTS) + ["N"]
    rows = []
    for t, x in enumerate(traj):
        tot = x.sum(axis=1)
        rows.append([t, *x.ravel().tolist(), *tot.tolist(), float(tot.sum())])
    summary = {
        "final_state": _state_dict(traj[-1]),
        "final_global": dict(zip(COMPARTMENTS, aggregate(traj[-1]))),
        "horizon": s.horizon,
    }
    if any(d.severity == "warning" for d in diags):
        summary["dissipativity"] = None
    else:
        sigma_hat, B_hat, radius = dissipativity_bound(s.model)
        N = traj.sum(axis=(1, 2))
        summary["dissipativity"] = {
            "sigma_hat": sigma_hat,
            "B_hat": B_hat,
            "attractor_radius": radius,
            "envelope_respected": bool(np.all(N <= max(N[0], radius) + 1e-9)),
        }
    verdict = classify_asymptotics(lambda x: full_step(s.model, x), s.initial_state, **_classify_kwargs(s))
    summary["verdict"] = verdict.value
    summary["classify_settings"] = s.classify.as_dict()
    return summary, {"trajectory.csv": csv_text(header, rows)}


def cmd_r0(s, args):
    local = []
    for j, p in enumerate(s.model.patches):
        closed = r0_local_closed(p)
        spectral = r0_next_generation(p)
        local.append({"patch": j + 1, "r0": closed, "r0_spectral": spectral, "residual": abs(closed - spectral)})
    summary = {
        "local": local,
        "max_cross_check_residual": max(e["residual"] for e in local),
    }
    if validate_scenario(s, ["reduce"]):
        summary["r0_reduced"] = None
        summary["r0_reduced_note"] = "reduced R0 needs standard incidence and constant recruitment in every patch"
    else:
        rp = reduced_params(s.model.patches, StationaryProfile.from_movement(s.model.movement))
        summary["r0_reduced"] = r0_reduced(rp)
    return summary, {}


def cmd_reduce(s, args):
    _require(s, ["reduce"])
    profile = StationaryProfile.from_movement(s.model.movement)
    rp = reduced_params(s.model.patches, profile)
    summary = {
        "stationary_profiles": {c: profile.as_matrix()[i].tolist() for i, c in enumerate(COMPARTMENTS)},
        "coefficients": rp.coefficients(),
        "r0_reduced": r0_reduced(rp),
        "dfe_reduced": dict(zip(COMPARTMENTS, dfe_reduced(rp))),
    }
    return summary, {}


def _reduced_equilibrium(s, rp):
    """The reduced DFE when it is stable, otherwise the endemic equilibrium."""
    if r0_reduced(rp) < 1.0:
        return "dfe", np.array(dfe_reduced(rp))
    y = np.array(aggregate(s.initial_state))
    if y[1] + y[2] <= 0:
        y = np.array(dfe_reduced(rp)) + np.array([0.0, 0.0, 1.0, 0.0])
    for _ in range(20_000):
        y = np.array(reduced_step(rp, y))
    fp = find_fixed_point(lambda v: np.array(reduced_step(rp, v)), y, tol=1e-12)
    return "endemic", fp.x


def cmd_verify_k(s, args):
    _require(s, ["verify-k"])
    ks = args.ks or list(DEFAULT_KS)
    profile = StationaryProfile.from_movement(s.model.movement)
    rp = reduced_params(s.model.patches, profile)
    kind, y_star = _reduced_equilibrium(s, rp)
    try:
        entries = timescale_convergence(s.model, y_star, ks, tol=FIXED_POINT_TOL, workers=args.workers)
    except PartialResult as exc:
        log.error("partial result: %s", [tuple(e) for e in exc.completed])
        raise
    d_min_k = entries[ks.index(min(ks))].distance
    d_max_k = entries[ks.index(max(ks))].distance
    passed = d_max_k < VERIFY_K_TOL and d_max_k <= d_min_k
    summary = {
        "equilibrium": kind,
        "y_star": dict(zip(COMPARTMENTS, map(float, y_star))),
        "entries": [e._asdict() for e in entries],
        "tolerance": VERIFY_K_TOL,
        "fixed_point_tol": FIXED_POINT_TOL,
        "passed": passed,
    }
    table = csv_text(["k", "distance", "residual", "method"], [(e.k, e.distance, e.residual, e.method) for e in entries])
    return summary, {"verify_k.csv": table}


def _two_patch(s):
    p1, p2 = s.model.patches
    shared = TwoPatchSharedParams(p1.sigma_E, p1.gamma_E, p1.transmission.beta)
    ip = TwoPatchInfectiousParams(p1.sigma_I, p1.gamma_I, p2.sigma_I, p2.gamma_I)
    return shared, ip


def cmd_region(s, args):
    _require(s, ["region"])
    shared, ip = _two_patch(s)
    res = args.resolution or REGION_RESOLUTION
    rep = region_sweep(shared, ip, resolution=res, boundary_tol=BOUNDARY_TOL, workers=args.workers)
    profile = StationaryProfile.from_movement(s.model.movement)
    summary = {
        "A": rep.A,
        "r0_1": rep.r0_1,
        "r0_2": rep.r0_2,
        "endemic_in_isolation": rep.endemic_in_isolation,
        "feasibility": rep.feasibility.value,
        "corners": {k: float(v) for k, v in rep.corners().items()},
        "scenario_point": {"x": float(profile.m_E[0]), "y": float(profile.m_I[0])},
        "resolution": res,
        "boundary_tol": BOUNDARY_TOL,
        "boundary_vertices": len(rep.boundary),
    }
    if rep.endemic_in_isolation:
        summary["relabeled"] = eradication_feasibility(shared, ip).swapped
    grid_rows = [(x, y, rep.r0_grid[i, j]) for i, x in enumerate(rep.xs) for j, y in enumerate(rep.ys)]
    tables = {
        "region_grid.csv": csv_text(["x", "y", "r0_bar"], grid_rows),
        "region_boundary.csv": csv_text(["x", "y"], [tuple(v) for v in rep.boundary]),
    }
    return summary, tables


def cmd_classify(s, args):
    _require(s, ["classify"])
    kw = _classify_kwargs(s)
    full = classify_asymptotics(lambda x: full_step(s.model, x), s.initial_state, **kw)
    profile = StationaryProfile.from_movement(s.model.movement)
    y0 = np.array(aggregate(s.initial_state))
    reduced = classify_asymptotics(lambda y: np.array(reduced_map(s.model, profile, y)), y0, **kw)
    summary = {
        "full": full.value,
        "reduced": reduced.value,
        "disagree": full is not reduced,
        "full_model_note": "full-model persistence verdicts are empirical",
        "classify_settings": s.classify.as_dict(),
    }
    return summary, {}


def cmd_validate(s, args):
    report = {}
    for purpose in PURPOSES:
        report[purpose] = [str(d) for d in validate_scenario(s, [purpose])]
    return {"valid": True, "name": s.name, "patches": s.n, "k": s.model.movement.k, "diagnostics": report}, {}


COMMANDS = {
    "simulate": cmd_simulate,
    "r0": cmd_r0,
    "reduce": cmd_reduce,
    "verify-k": cmd_verify_k,
    "region": cmd_region,
    "classify": cmd_classify,
    "validate": cmd_validate,
}


def _ks(text):
    try:
        ks = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive integers")
    return ks


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors share status 1 with invalid input; 2 is reserved for numerical failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="episcale", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, help="directory for the JSON summary and CSV tables")
    p.add_argument("--workers", type=_positive, default=1, help="threads for region and verify-k")
    p.add_argument("--ks", type=_ks, help="comma-separated k values for verify-k")
    p.add_argument("--resolution", type=_positive, help="grid points per axis for region (>= 2)")
    return p


def _summary_text(command, scenario_name, summary):
    doc = {"command": command, "scenario": scenario_name, "version": __version__, **summary}
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Verdict):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if args.resolution is not None and args.resolution < 2:
        print("error: --resolution must be >= 2", file=sys.stderr)
        return 1
    try:
        s = load_scenario(args.scenario)
        summary, tables = COMMANDS[args.command](s, args)
    except (ScenarioError, ValidationFailed) as exc:
        print(f"invalid scenario {args.scenario}:\n{exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except EpiscaleError as exc:
        print(f"invalid scenario {args.scenario}:\n{exc}", file=sys.stderr)
        return 1

    text = _summary_text(args.command, s.name, summary)
    sys.stdout.write(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.command}.json").write_text(text, encoding="utf-8", newline="\n")
        for name, body in tables.items():
            (args.out / name).write_text(body, encoding="utf-8", newline="\n")
    if args.command == "verify-k" and not summary["passed"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Scenario files, orchestration and the `ghe` command line tool.

A scenario is a single JSON file holding the equation constants, the shared
profile expressions, the seed definitions (shock or general family),
superposition coefficients, a sampling spec and optional branch policy and
tolerance overrides.  Expressions are strings in the grammar of exprdsl.

Commands: verify | sample | balance | fdcheck.  Exit codes: 0 success,
1 residual failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

from scipy.stats import qmc

from . import calculus, fdoracle
from .superpose import solve_point, superpose, verify_theorem
from .exprdsl import ExprError, SmoothFn
from .implicitsolve import BranchPolicy
from .registry import (
    FamilyError,
    GeneralSolutionDef,
    SharedProfile,
    ShockSolutionDef,
    build_general_family,
    build_shock_family,
)

REPORT_SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "residual": 1e-9,        # max normalized residual, expect=satisfy
    "seed_residual": 1e-9,   # per-seed residual bound
    "pass_fraction": 0.99,   # superposed points within `residual`
    "violation": 1e-3,       # expect=violate: median superposed residual above
    "identity": 1e-12,       # quadratic-form expansion defect
    "fd": 1e-6,              # oracle certification bound
}


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    family_kind: str            # "shock" | "general"
    shared: SharedProfile
    seed_defs: list
    coefficients: list
    box: dict | None            # axis -> (lo, hi)
    count: int
    sample_seed: int
    explicit_points: list | None
    policy: BranchPolicy
    tolerances: dict
    expect: str                 # "satisfy" | "violate"
    description: str = ""

    def build_family(self):
        if self.family_kind == "shock":
            return build_shock_family(self.seed_defs, self.shared)
        return build_general_family(self.seed_defs, self.shared)

    def points(self, count=None, seed=None):
        if self.explicit_points is not None:
            return [tuple(float(v) for v in pt) for pt in self.explicit_points]
        count = int(count if count is not None else self.count)
        seed = int(seed if seed is not None else self.sample_seed)
        if count <= 0:
            raise ScenarioError("sampling count must be positive")
        lows = [self.box[ax][0] for ax in "xyzt"]
        highs = [self.box[ax][1] for ax in "xyzt"]
        if any(lo >= hi for lo, hi in zip(lows, highs)):
            raise ScenarioError("empty sampling box")
        sampler = qmc.Halton(d=4, scramble=True, seed=seed)
        u = sampler.random(count)
        pts = qmc.scale(u, lows, highs)
        return [tuple(float(v) for v in row) for row in pts]


def _require_keys(obj: dict, allowed, required, where: str):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)} in {where}")
    missing = set(required) - set(obj)
    if missing:
        raise ScenarioError(f"missing keys {sorted(missing)} in {where}")


def _smooth(source, variables, where: str) -> SmoothFn:
    if not isinstance(source, str):
        raise ScenarioError(f"{where}: expression must be a string")
    try:
        return SmoothFn.parse(source, variables)
    except ExprError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")

    _require_keys(raw, allowed=("name", "description", "constants", "shared",
                                "family", "seeds", "coefficients", "sampling",
                                "branch", "tolerances", "expect"),
                  required=("family", "shared", "seeds", "coefficients",
                            "sampling"),
                  where="scenario")

    constants = raw.get("constants", {"a": 1.0, "b": 1.0})
    _require_keys(constants, ("a", "b"), ("a", "b"), "constants")

    sh = raw["shared"]
    _require_keys(sh, ("alpha", "beta", "delta"),
                  ("alpha", "beta", "delta"), "shared")
    try:
        shared = SharedProfile(alpha=_smooth(sh["alpha"], ("t",), "alpha"),
                               beta=_smooth(sh["beta"], ("y",), "beta"),
                               delta=_smooth(sh["delta"], ("z",), "delta"),
                               a=float(constants["a"]),
                               b=float(constants["b"]))
    except FamilyError as exc:
        raise ScenarioError(str(exc)) from None

    kind = raw["family"]
    if kind not in ("shock", "general"):
        raise ScenarioError(f"unknown family kind {kind!r}")
    seeds = raw["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ScenarioError("seeds must be a non-empty list")
    defs = []
    for i, seed in enumerate(seeds):
        where = f"seeds[{i}]"
        try:
            if kind == "shock":
                _require_keys(seed, ("F", "G", "m", "n"),
                              ("F", "G", "m", "n"), where)
                defs.append(ShockSolutionDef(
                    F=_smooth(seed["F"], ("p",), where + ".F"),
                    G=_smooth(seed["G"], ("p",), where + ".G"),
                    m=_smooth(seed["m"], ("y",), where + ".m"),
                    n=_smooth(seed["n"], ("z",), where + ".n")))
            else:
                _require_keys(seed, ("Q", "R", "T"), ("Q", "R", "T"), where)
                defs.append(GeneralSolutionDef(
                    Q=_smooth(seed["Q"], ("p", "y"), where + ".Q"),
                    R=_smooth(seed["R"], ("p", "z"), where + ".R"),
                    T=_smooth(seed["T"], ("p", "t"), where + ".T")))
        except FamilyError as exc:
            raise ScenarioError(f"{where}: {exc}") from None

    coeffs = raw["coefficients"]
    if not isinstance(coeffs, list) or len(coeffs) != len(defs):
        raise ScenarioError("coefficients must list one number per seed")
    coeffs = [float(c) for c in coeffs]

    sampling = raw["sampling"]
    _require_keys(sampling, ("box", "count", "seed", "points"), (),
                  "sampling")
    box = None
    explicit = None
    if "points" in sampling:
        explicit = sampling["points"]
        if not isinstance(explicit, list) or not explicit \
                or any(len(pt) != 4 for pt in explicit):
            raise ScenarioError("sampling.points must list [x,y,z,t] rows")
    else:
        if "box" not in sampling:
            raise ScenarioError("sampling needs 'box' or 'points'")
        box_raw = sampling["box"]
        _require_keys(box_raw, tuple("xyzt"), tuple("xyzt"), "sampling.box")
        box = {ax: (float(box_raw[ax][0]), float(box_raw[ax][1]))
               for ax in "xyzt"}

    branch = raw.get("branch", {})
    _require_keys(branch, ("p_lo", "p_hi", "resolution", "selection"), (),
                  "branch")
    try:
        policy = BranchPolicy(
            p_lo=float(branch.get("p_lo", -10.0)),
            p_hi=float(branch.get("p_hi", 10.0)),
            resolution=int(branch.get("resolution", 1024)),
            selection=branch.get("selection", "lowest"))
    except ValueError as exc:
        raise ScenarioError(f"branch: {exc}") from None

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances", {})
    _require_keys(tol_raw, tuple(DEFAULT_TOLERANCES), (), "tolerances")
    tolerances.update({k: float(v) for k, v in tol_raw.items()})

    expect = raw.get("expect", "satisfy")
    if expect not in ("satisfy", "violate"):
        raise ScenarioError(f"unknown expect value {expect!r}")

    return Scenario(name=raw.get("name", path.stem),
                    family_kind=kind, shared=shared, seed_defs=defs,
                    coefficients=coeffs, box=box,
                    count=int(sampling.get("count", 1000)),
                    sample_seed=int(sampling.get("seed", 0)),
                    explicit_points=explicit, policy=policy,
                    tolerances=tolerances, expect=expect,
                    description=raw.get("description", ""))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return "n/a"
    return f"{v:.3e}"


def _write_report(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_verify(scenario: Scenario, args) -> tuple[int, dict]:
    family = scenario.build_family()
    points = scenario.points(count=args.points, seed=args.seed)
    tol = dict(scenario.tolerances)
    if args.tol is not None:
        tol["residual"] = args.tol
    report = verify_theorem(family, scenario.coefficients, points,
                                      policy=scenario.policy,
                                      threshold=tol["residual"])
    ch = report.checks
    failures = []
    if report.n_admissible == 0:
        failures.append("no admissible points")
    elif scenario.expect == "satisfy":
        if ch["seed_ghe"]["max"] > tol["seed_residual"]:
            failures.append("seed GHE residual above tolerance")
        if ch["seed_compat"]["max"] > tol["seed_residual"]:
            failures.append("seed compatibility residual above tolerance")
        if ch["n_term_balance"]["max"] > tol["residual"]:
            failures.append("balance residual above tolerance")
        if report.pass_fraction < tol["pass_fraction"]:
            failures.append("superposed residual pass fraction too low")
        if ch["quadratic_identity"]["max"] > tol["identity"]:
            failures.append("quadratic-form identity defect above tolerance")
    else:
        if ch["seed_ghe"]["max"] > 1e-10:
            failures.append("violation control: seeds do not solve the equation")
        if ch["superposed_ghe"]["median"] <= tol["violation"]:
            failures.append("expected violation not observed at most points")

    print(f"scenario: {scenario.name} (expect {scenario.expect})")
    print(f"points: {report.n_points}  admissible: {report.n_admissible}  "
          f"holes: {report.n_holes}  folds: {report.n_folds}")
    for name, st in ch.items():
        print(f"  {name:<20} max {_fmt(st['max'])}  median {_fmt(st['median'])}")
    print(f"  superposed pass fraction: {report.pass_fraction:.4f} "
          f"(threshold {tol['residual']:.1e})")
    verdict = "PASS" if not failures else "FAIL: " + "; ".join(failures)
    print(f"verdict: {verdict}")

    payload = {"schema_version": REPORT_SCHEMA_VERSION,
               "command": "verify", "scenario": scenario.name,
               "expect": scenario.expect, "tolerances": tol,
               "report": report.to_dict(),
               "failures": failures, "passed": not failures}
    return (0 if not failures else 1), payload


_FIELD_COLUMNS = ("p", "q", "r") + calculus.FieldSample.PARTIAL_NAMES


def csv_header(n_seeds: int) -> list:
    cols = ["index", "status", "x", "y", "z", "t"]
    for i in range(1, n_seeds + 1):
        cols += [f"s{i}_{name}" for name in _FIELD_COLUMNS]
    cols += [f"sup_{name}" for name in _FIELD_COLUMNS]
    cols += [f"res_ghe_s{i}" for i in range(1, n_seeds + 1)]
    cols += ["res_ghe_sup", "res_compat_py_qx_sup", "res_compat_pz_rx_sup",
             "res_balance"]
    return cols


def cmd_sample(scenario: Scenario, args) -> tuple[int, dict]:
    family = scenario.build_family()
    points = scenario.points(count=args.points, seed=args.seed)
    out = Path(args.out) if args.out else Path(f"{scenario.name}.csv")

    def g(v):
        return f"{v:.17g}"

    rows = [",".join(csv_header(family.size))]
    n_ok = 0
    for idx, point in enumerate(points):
        samples, failure = solve_point(family, point,
                                                 scenario.policy)
        if samples is None:
            nan = ["nan"] * (len(csv_header(family.size)) - 6)
            rows.append(",".join([str(idx), failure[0]]
                                 + [g(v) for v in point] + nan))
            continue
        n_ok += 1
        sup = superpose(samples, scenario.coefficients)
        cells = [str(idx), "ok"] + [g(v) for v in point]
        for s in samples:
            cells += [g(getattr(s, name)) for name in _FIELD_COLUMNS]
        cells += [g(getattr(sup, name)) for name in _FIELD_COLUMNS]
        cells += [g(calculus.ghe_residual(s, family.shared).normalized)
                  for s in samples]
        cells.append(g(calculus.ghe_residual(sup, family.shared).normalized))
        c1, c2 = calculus.compat_residuals(sup)
        cells += [g(c1.normalized), g(c2.normalized)]
        cells.append(g(calculus.n_term_balance(samples,
                                               family.shared).normalized))
        rows.append(",".join(cells))
    out.write_text("\n".join(rows) + "\n")
    print(f"wrote {out} ({len(points)} points, {n_ok} admissible)")
    payload = {"schema_version": REPORT_SCHEMA_VERSION, "command": "sample",
               "scenario": scenario.name, "csv": str(out),
               "points": len(points), "admissible": n_ok, "passed": True}
    return 0, payload


def cmd_balance(scenario: Scenario, args) -> tuple[int, dict]:
    family = scenario.build_family()
    points = scenario.points(count=args.points, seed=args.seed)
    tol = dict(scenario.tolerances)
    if args.tol is not None:
        tol["residual"] = args.tol

    pairwise, nterm, reduced = [], [], []
    n_admissible = 0
    for point in points:
        samples, _failure = solve_point(family, point,
                                                  scenario.policy)
        if samples is None:
            continue
        n_admissible += 1
        for i in range(family.size):
            for j in range(i + 1, family.size):
                pairwise.append(calculus.pairwise_balance(
                    samples[i], samples[j], family.shared).normalized)
                if family.kind == "general":
                    reduced.append(calculus.reduced_balance(
                        family.defs[i], family.defs[j], family.shared,
                        point, samples[i].p, samples[j].p).normalized)
        nterm.append(calculus.n_term_balance(samples,
                                             family.shared).normalized)

    def summary(vals):
        if not vals:
            return {"count": 0, "max": None, "median": None}
        return {"count": len(vals), "max": max(vals),
                "median": statistics.median(vals)}

    result = {"pairwise": summary(pairwise), "n_term": summary(nterm),
              "reduced": summary(reduced), "admissible": n_admissible}

    failures = []
    if n_admissible == 0:
        failures.append("no admissible points")
    elif scenario.expect == "satisfy":
        for name in ("pairwise", "n_term", "reduced"):
            st = result[name]
            if st["count"] and st["max"] > tol["residual"]:
                failures.append(f"{name} balance residual above tolerance")
    else:
        checked = result["reduced"] if reduced else result["pairwise"]
        if checked["count"] == 0 or checked["median"] <= tol["violation"]:
            failures.append("expected balance violation not observed")

    print(f"scenario: {scenario.name} (expect {scenario.expect})")
    print(f"admissible points: {n_admissible}/{len(points)}")
    for name in ("pairwise", "n_term", "reduced"):
        st = result[name]
        print(f"  {name:<10} count {st['count']:<6} max {_fmt(st['max'])}  "
              f"median {_fmt(st['median'])}")
    verdict = "PASS" if not failures else "FAIL: " + "; ".join(failures)
    print(f"verdict: {verdict}")

    payload = {"schema_version": REPORT_SCHEMA_VERSION, "command": "balance",
               "scenario": scenario.name, "expect": scenario.expect,
               "result": result, "failures": failures,
               "passed": not failures}
    return (0 if not failures else 1), payload


def cmd_fdcheck(scenario: Scenario, args) -> tuple[int, dict]:
    family = scenario.build_family()
    count = args.points if args.points is not None else \
        min(scenario.count, 100)
    points = scenario.points(count=count, seed=args.seed)
    tol = args.tol if args.tol is not None else scenario.tolerances["fd"]

    max_dev = 0.0
    n_ok = n_near_fold = n_hole = 0
    relations = [family.relation(i) for i in range(family.size)]
    for point in points:
        samples, _failure = solve_point(family, point,
                                                  scenario.policy)
        if samples is None:
            n_hole += 1
            continue
        for i, s in enumerate(samples):
            cert = fdoracle.certify_sample(s, relations[i], family, i)
            if cert.status == "ok":
                n_ok += 1
                max_dev = max(max_dev, cert.max_deviation)
            elif cert.status == "near-fold":
                n_near_fold += 1
            else:
                n_hole += 1

    failures = []
    if n_ok == 0:
        failures.append("no certifiable samples")
    elif max_dev > tol:
        failures.append("finite-difference deviation above tolerance")

    print(f"scenario: {scenario.name}")
    print(f"certified: {n_ok}  near-fold skipped: {n_near_fold}  "
          f"holes: {n_hole}")
    print(f"max deviation: {_fmt(max_dev)} (tolerance {tol:.1e})")
    verdict = "PASS" if not failures else "FAIL: " + "; ".join(failures)
    print(f"verdict: {verdict}")

    payload = {"schema_version": REPORT_SCHEMA_VERSION, "command": "fdcheck",
               "scenario": scenario.name,
               "result": {"certified": n_ok, "near_fold": n_near_fold,
                          "holes": n_hole, "max_deviation": max_dev,
                          "tolerance": tol},
               "failures": failures, "passed": not failures}
    return (0 if not failures else 1), payload


_COMMANDS = {"verify": cmd_verify, "sample": cmd_sample,
             "balance": cmd_balance, "fdcheck": cmd_fdcheck}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghe",
        description="Verify implicit shock-wave solution families and "
                    "their linear superposition for the general heavenly "
                    "equation.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("scenario", help="path to a scenario JSON file")
    parser.add_argument("--out", help="output path (JSON report, or CSV "
                                      "for the sample command)")
    parser.add_argument("--points", type=int, default=None,
                        help="override the sampling count")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the sampling seed")
    parser.add_argument("--tol", type=float, default=None,
                        help="override the main residual tolerance")
    parser.add_argument("--report", default=None,
                        help="path for the JSON report (default: "
                             "<scenario>.report.json next to the cwd)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        code, payload = _COMMANDS[args.command](scenario, args)
    except (ScenarioError, ExprError, FamilyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    report_path = args.report or f"{Path(args.scenario).stem}.report.json"
    _write_report(report_path, payload)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Linear combinations of seed solutions and theorem verification.

The superposition theorem: seed solutions of the field-form equation whose
pairwise cross terms balance combine linearly into new solutions.  The
verifier evaluates, per sampled point, each seed's residuals, the n-term
balance, the superposed field's residuals and the quadratic-form expansion
residual(superposed) = sum_i a_i^2 residual_i + sum_{i<j} a_i a_j cross_ij.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .calculus import (
    NORM_GUARD,
    DegenerateSampleError,
    FieldSample,
    compat_residuals,
    ghe_residual,
    n_term_balance,
    pairwise_balance,
)
from .implicitsolve import BranchPolicy, enumerate_roots, select_root

FOLD_TOL = 1e-3


class SuperposeError(ValueError):
    pass


@dataclass(frozen=True)
class SuperpositionSpec:
    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) < 1:
            raise SuperposeError("need at least one coefficient")
        if all(c == 0.0 for c in self.coefficients):
            raise SuperposeError("at least one coefficient must be nonzero")


def superpose(samples, coeffs) -> FieldSample:
    """Coefficient-weighted sum of field samples taken at one point."""
    if len(samples) != len(coeffs):
        raise SuperposeError("samples and coefficients differ in length")
    SuperpositionSpec(tuple(coeffs))
    ref = samples[0].point
    for s in samples[1:]:
        if any(abs(a - b) > 1e-14 for a, b in zip(s.point, ref)):
            raise SuperposeError(f"point mismatch: {s.point} vs {ref}")
    fields = ("p", "q", "r") + FieldSample.PARTIAL_NAMES
    acc = {name: 0.0 for name in fields}
    for s, c in zip(samples, coeffs):
        for name in fields:
            acc[name] += c * getattr(s, name)
    return FieldSample(point=ref, source="superposed", **acc)


@dataclass
class _Stat:
    values: list = field(default_factory=list)

    def add(self, v: float):
        self.values.append(v)

    def summary(self) -> dict:
        if not self.values:
            return {"count": 0, "max": None, "median": None}
        return {"count": len(self.values),
                "max": max(self.values),
                "median": statistics.median(self.values)}


@dataclass
class TheoremReport:
    n_points: int
    n_admissible: int
    n_holes: int
    n_folds: int
    checks: dict                 # name -> {count, max, median}
    pass_fraction: float         # superposed GHE residual <= threshold
    threshold: float

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_admissible": self.n_admissible,
            "n_holes": self.n_holes,
            "n_folds": self.n_folds,
            "checks": self.checks,
            "pass_fraction": self.pass_fraction,
            "threshold": self.threshold,
        }


def solve_point(family, point, policy: BranchPolicy):
    """Samples for all seeds at one point, or ("hole"|"fold", index)."""
    samples = []
    for i in range(family.size):
        roots = enumerate_roots(family.relation(i), point, policy)
        rep = select_root(roots, policy)
        if rep is None or not rep.converged:
            return None, ("hole", i)
        if abs(rep.deriv) < FOLD_TOL:
            return None, ("fold", i)
        try:
            samples.append(family.sample(i, point, rep.root, report=rep))
        except DegenerateSampleError:
            return None, ("fold", i)
    return samples, None


def quadratic_identity_residual(super_rep, seed_reps, cross_reps,
                                coeffs) -> float:
    """Normalized defect of the bilinear expansion of the superposed residual."""
    expected = 0.0
    scale = super_rep.scale
    for c, rep in zip(coeffs, seed_reps):
        expected += c * c * rep.value
        scale = max(scale, c * c * rep.scale)
    for (i, j), rep in cross_reps.items():
        expected += coeffs[i] * coeffs[j] * rep.value
        scale = max(scale, abs(coeffs[i] * coeffs[j]) * rep.scale)
    return abs(super_rep.value - expected) / (scale + NORM_GUARD)


def verify_theorem(family, coeffs, points,
                   policy: BranchPolicy = BranchPolicy(),
                   threshold: float = 1e-9) -> TheoremReport:
    """Run the full per-point verification over a point cloud."""
    coeffs = [float(c) for c in coeffs]
    if len(coeffs) != family.size:
        raise SuperposeError("one coefficient per seed required")
    SuperpositionSpec(tuple(coeffs))

    stats = {name: _Stat() for name in
             ("seed_ghe", "seed_compat", "superposed_ghe",
              "superposed_compat", "n_term_balance", "quadratic_identity")}
    n_holes = n_folds = n_admissible = n_pass = 0

    for point in points:
        samples, failure = solve_point(family, point, policy)
        if samples is None:
            if failure[0] == "hole":
                n_holes += 1
            else:
                n_folds += 1
            continue
        n_admissible += 1

        seed_reps = []
        for s in samples:
            rep = ghe_residual(s, family.shared)
            seed_reps.append(rep)
            stats["seed_ghe"].add(rep.normalized)
            for c in compat_residuals(s):
                stats["seed_compat"].add(c.normalized)

        bal = n_term_balance(samples, family.shared)
        stats["n_term_balance"].add(bal.normalized)

        sup = superpose(samples, coeffs)
        sup_rep = ghe_residual(sup, family.shared)
        stats["superposed_ghe"].add(sup_rep.normalized)
        if sup_rep.normalized <= threshold:
            n_pass += 1
        for c in compat_residuals(sup):
            stats["superposed_compat"].add(c.normalized)

        cross = {}
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                cross[(i, j)] = pairwise_balance(samples[i], samples[j],
                                                 family.shared)
        stats["quadratic_identity"].add(
            quadratic_identity_residual(sup_rep, seed_reps, cross, coeffs))

    return TheoremReport(
        n_points=len(points),
        n_admissible=n_admissible,
        n_holes=n_holes,
        n_folds=n_folds,
        checks={name: st.summary() for name, st in stats.items()},
        pass_fraction=(n_pass / n_admissible) if n_admissible else 0.0,
        threshold=threshold)

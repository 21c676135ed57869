"""Independent finite-difference oracle for the closed-form derivatives.

Uses the fourth-order Richardson-extrapolated central stencil
(8(f(+h) - f(-h)) - (f(+2h) - f(-2h))) / (12 h).  Branch evaluations are
seeded from the sample's own root so the stencil never hops sheets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .calculus import FieldSample
from .implicitsolve import ImplicitRelation, SolveError, solve_on_sheet

AXES = ("x", "y", "z", "t")
DEFAULT_H_SCALE = 1e-3
NEAR_FOLD = 1e-3


class StencilHoleError(RuntimeError):
    """A stencil point could not be evaluated (branch hole)."""


def fd_partial(fieldfn, point, axis: int, h: float) -> float:
    """Richardson-extrapolated central difference along one axis."""
    if h <= 0:
        raise ValueError("h must be positive")
    point = tuple(point)

    def shifted(delta):
        pt = list(point)
        pt[axis] += delta
        try:
            return fieldfn(tuple(pt))
        except (SolveError, ValueError, ZeroDivisionError,
                OverflowError) as exc:
            raise StencilHoleError(
                f"stencil evaluation failed at offset {delta:+g} on axis "
                f"{AXES[axis]}") from exc

    f1, fm1 = shifted(h), shifted(-h)
    f2, fm2 = shifted(2 * h), shifted(-2 * h)
    return (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h)


@dataclass(frozen=True)
class CertReport:
    status: str                 # "ok" | "near-fold" | "hole"
    max_deviation: float = 0.0
    deviations: dict = None     # partial name -> relative deviation

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def certify_sample(sample: FieldSample, rel: ImplicitRelation, family,
                   index: int, h_scale: float = DEFAULT_H_SCALE,
                   near_fold: float = NEAR_FOLD) -> CertReport:
    """Compare every closed-form partial in the sample against the oracle.

    The deviation is |fd - analytic| / (1 + |analytic|).  Samples with
    |D| below near_fold are skipped: the implicit-function-theorem
    formulas blow up at shocks by construction.
    """
    if sample.report is not None and abs(sample.report.deriv) < near_fold:
        return CertReport(status="near-fold")

    point = sample.point
    seed = sample.p

    def p_field(pt):
        return solve_on_sheet(rel, pt, seed)

    def q_field(pt):
        return family.values(index, pt, solve_on_sheet(rel, pt, seed))[1]

    def r_field(pt):
        return family.values(index, pt, solve_on_sheet(rel, pt, seed))[2]

    fields = {"p": p_field, "q": q_field, "r": r_field}
    devs = {}
    try:
        for name in FieldSample.PARTIAL_NAMES:
            which, axis_name = name.split("_")
            axis = AXES.index(axis_name)
            h = h_scale * (1.0 + abs(point[axis]))
            fd = fd_partial(fields[which], point, axis, h)
            analytic = getattr(sample, name)
            devs[name] = abs(fd - analytic) / (1.0 + abs(analytic))
    except StencilHoleError:
        return CertReport(status="hole", deviations=devs)
    return CertReport(status="ok", max_deviation=max(devs.values()),
                      deviations=devs)

"""Root enumeration and branch continuation for implicit hodograph relations.

A relation is Phi(p; x, y, z, t) = 0 with p-derivative D.  Roots may be
multivalued (shocks); every sign change on a scan grid is refined by
safeguarded Newton with bisection fallback.  Tangential double roots are
out of contract and only surfaced through the |D| < eps degeneracy flag.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace

import numpy as np

TOL_ABS = 1e-12
TOL_REL = 1e-12
EPS_DEGENERATE = 1e-8
MAX_NEWTON_ITER = 100


class SolveError(RuntimeError):
    """Raised when an on-sheet local solve cannot be completed."""


@dataclass(frozen=True)
class ImplicitRelation:
    """Bundle of Phi and D = dPhi/dp.

    phi/dphi are fast scalar callables phi(p, x, y, z, t); phi_vec
    broadcasts over numpy arrays of p (used by the scan stage).
    """

    phi: callable
    dphi: callable
    phi_vec: callable


@dataclass(frozen=True)
class BranchPolicy:
    """Scan interval, resolution and branch selection rule.

    selection is "lowest", "nearest" (to seed_root) or an integer index
    into the ascending root list.
    """

    p_lo: float = -10.0
    p_hi: float = 10.0
    resolution: int = 1024
    selection: object = "lowest"
    seed_root: float = 0.0
    continuation: bool = True

    def __post_init__(self):
        if not self.p_lo < self.p_hi:
            raise ValueError("need p_lo < p_hi")
        if self.resolution < 16:
            raise ValueError("scan resolution must be >= 16")
        if self.selection not in ("lowest", "nearest") \
                and not isinstance(self.selection, int):
            raise ValueError(f"unknown selection rule {self.selection!r}")


@dataclass(frozen=True)
class RootReport:
    root: float
    residual: float
    deriv: float
    iterations: int
    bracket: tuple = (0.0, 0.0)
    degenerate: bool = False
    converged: bool = True
    hole: bool = False
    jump: bool = False
    point: tuple = ()


def _hole_report(point) -> RootReport:
    return RootReport(root=float("nan"), residual=float("nan"),
                      deriv=float("nan"), iterations=0, hole=True,
                      point=tuple(point))


def shock_relation(sdef, shared) -> ImplicitRelation:
    """Phi = x + (alpha+beta+delta) F'(p) + G(p); D = S F'' + G'."""
    F1 = sdef.F.compiled((1,))
    F2 = sdef.F.compiled((2,))
    G0 = sdef.G.compiled((0,))
    G1 = sdef.G.compiled((1,))
    F1v = sdef.F.compiled((1,), "numpy")
    G0v = sdef.G.compiled((0,), "numpy")
    al = shared.alpha.compiled((0,))
    be = shared.beta.compiled((0,))
    de = shared.delta.compiled((0,))

    def phi(p, x, y, z, t):
        return x + (al(t) + be(y) + de(z)) * F1(p) + G0(p)

    def dphi(p, x, y, z, t):
        return (al(t) + be(y) + de(z)) * F2(p) + G1(p)

    def phi_vec(p, x, y, z, t):
        return x + (al(t) + be(y) + de(z)) * F1v(p) + G0v(p)

    return ImplicitRelation(phi=phi, dphi=dphi, phi_vec=phi_vec)


def general_relation(gdef) -> ImplicitRelation:
    """Phi = x + d1Q(p,y) + d1R(p,z) + T(p,t); D = d11Q + d11R + d1T."""
    Q1 = gdef.Q.compiled((1, 0))
    Q11 = gdef.Q.compiled((2, 0))
    R1 = gdef.R.compiled((1, 0))
    R11 = gdef.R.compiled((2, 0))
    T0 = gdef.T.compiled((0, 0))
    T1 = gdef.T.compiled((1, 0))
    Q1v = gdef.Q.compiled((1, 0), "numpy")
    R1v = gdef.R.compiled((1, 0), "numpy")
    T0v = gdef.T.compiled((0, 0), "numpy")

    def phi(p, x, y, z, t):
        return x + Q1(p, y) + R1(p, z) + T0(p, t)

    def dphi(p, x, y, z, t):
        return Q11(p, y) + R11(p, z) + T1(p, t)

    def phi_vec(p, x, y, z, t):
        return x + Q1v(p, y) + R1v(p, z) + T0v(p, t)

    return ImplicitRelation(phi=phi, dphi=dphi, phi_vec=phi_vec)


def _refine(rel: ImplicitRelation, point, lo, hi, flo, fhi) -> RootReport:
    """Safeguarded Newton inside a sign-change bracket [lo, hi]."""
    x = point[0]
    tol = TOL_ABS + TOL_REL * abs(x)
    bracket = (lo, hi)
    p = 0.5 * (lo + hi)
    iterations = 0
    converged = False
    while iterations < MAX_NEWTON_ITER:
        iterations += 1
        try:
            f = rel.phi(p, *point)
        except (ValueError, ZeroDivisionError, OverflowError):
            f = float("nan")
        if np.isfinite(f):
            if abs(f) <= tol:
                converged = True
                break
            # maintain the bracket
            if f * flo < 0.0:
                hi, fhi = p, f
            else:
                lo, flo = p, f
        else:
            # bad evaluation inside the bracket: bisect blindly
            hi = p
        try:
            d = rel.dphi(p, *point)
        except (ValueError, ZeroDivisionError, OverflowError):
            d = 0.0
        step_ok = False
        if np.isfinite(f) and np.isfinite(d) and d != 0.0:
            cand = p - f / d
            if lo < cand < hi:
                p = cand
                step_ok = True
        if not step_ok:
            p = 0.5 * (lo + hi)
        if hi - lo <= 1e-16 * (1.0 + abs(p)):
            try:
                f = rel.phi(p, *point)
            except (ValueError, ZeroDivisionError, OverflowError):
                f = float("nan")
            converged = bool(np.isfinite(f) and abs(f) <= tol)
            break
    try:
        f = rel.phi(p, *point)
        d = rel.dphi(p, *point)
    except (ValueError, ZeroDivisionError, OverflowError):
        f, d = float("nan"), float("nan")
    return RootReport(root=float(p), residual=abs(float(f)), deriv=float(d),
                      iterations=iterations, bracket=bracket,
                      degenerate=bool(abs(d) < EPS_DEGENERATE),
                      converged=converged, point=tuple(point))


def enumerate_roots(rel: ImplicitRelation, point,
                    policy: BranchPolicy = BranchPolicy()):
    """All sign-change roots of Phi on the policy scan interval, ascending."""
    grid = np.linspace(policy.p_lo, policy.p_hi, policy.resolution)
    with np.errstate(all="ignore"):
        vals = np.asarray(rel.phi_vec(grid, *point), dtype=float)
    if vals.shape != grid.shape:
        vals = np.broadcast_to(vals, grid.shape).astype(float)
    reports = []
    finite = np.isfinite(vals)
    exact = finite & (vals == 0.0)
    sign_change = finite[:-1] & finite[1:] & (vals[:-1] * vals[1:] < 0.0)
    for i in np.flatnonzero(exact):
        p = float(grid[i])
        d = rel.dphi(p, *point)
        reports.append(RootReport(root=p, residual=0.0, deriv=float(d),
                                  iterations=0, bracket=(p, p),
                                  degenerate=bool(abs(d) < EPS_DEGENERATE),
                                  point=tuple(point)))
    for i in np.flatnonzero(sign_change):
        reports.append(_refine(rel, tuple(point), float(grid[i]),
                               float(grid[i + 1]), float(vals[i]),
                               float(vals[i + 1])))
    reports.sort(key=lambda r: r.root)
    return reports


def select_root(reports, policy: BranchPolicy, prev: float | None = None):
    """Apply the branch selection rule; prev overrides for continuation."""
    if not reports:
        return None
    if prev is not None:
        return min(reports, key=lambda r: abs(r.root - prev))
    if policy.selection == "lowest":
        return reports[0]
    if policy.selection == "nearest":
        return min(reports, key=lambda r: abs(r.root - policy.seed_root))
    k = int(policy.selection)
    if not 0 <= k < len(reports):
        return None
    return reports[k]


def continue_branch(rel: ImplicitRelation, grid,
                    policy: BranchPolicy = BranchPolicy()):
    """Track one root branch across an ordered list of adjacent points.

    Selects the root nearest to the previous accepted root; flags a branch
    jump when the root motion exceeds 10x the median step motion so far.
    Holes restart the continuation at the next solvable point.
    """
    out = []
    prev = None
    motions = []
    for point in grid:
        reports = enumerate_roots(rel, point, policy)
        if not reports:
            out.append(_hole_report(point))
            prev = None
            continue
        rep = select_root(reports, policy, prev=prev)
        if prev is not None:
            motion = abs(rep.root - prev)
            if motions and motion > 10.0 * statistics.median(motions):
                rep = replace(rep, jump=True)
            motions.append(motion)
        out.append(rep)
        prev = rep.root
    return out


def solve_on_sheet(rel: ImplicitRelation, point, seed: float,
                   max_iter: int = 60) -> float:
    """Newton from a seed root, staying on the seed's branch.

    Used by the finite-difference oracle so stencil evaluations do not hop
    to a different branch.  Raises SolveError on non-convergence.
    """
    x = point[0]
    tol = TOL_ABS + TOL_REL * abs(x)
    p = float(seed)
    for _ in range(max_iter):
        try:
            f = rel.phi(p, *point)
        except (ValueError, ZeroDivisionError, OverflowError):
            raise SolveError(f"evaluation failure at p={p}") from None
        if abs(f) <= tol:
            return p
        try:
            d = rel.dphi(p, *point)
        except (ValueError, ZeroDivisionError, OverflowError):
            raise SolveError(f"derivative failure at p={p}") from None
        if not np.isfinite(d) or d == 0.0:
            raise SolveError(f"flat relation at p={p}")
        step = f / d
        # damp huge steps: the seed is assumed close
        limit = 0.5 * (1.0 + abs(p))
        if abs(step) > limit:
            step = limit if step > 0 else -limit
        p -= step
    raise SolveError("on-sheet Newton did not converge")

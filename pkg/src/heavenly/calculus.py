"""Closed-form field derivatives, Poisson brackets and residuals.

All first derivatives of (p, q, r) come from the implicit function theorem
applied to the family's hodograph relation; every formula here is certified
against the finite-difference oracle in fdoracle.py.

Residuals are reported normalized: |value| / (largest constituent term),
which is the scale-free pass/fail quantity.
"""

from __future__ import annotations

from dataclasses import dataclass

EPS_DEGENERATE = 1e-8
NORM_GUARD = 1e-300


class DegenerateSampleError(RuntimeError):
    """Relation derivative D below threshold: fold, no valid derivatives."""

    def __init__(self, deriv: float):
        super().__init__(f"degenerate relation derivative |D|={abs(deriv):.3e}")
        self.deriv = deriv
        self.degenerate = True


@dataclass(frozen=True)
class FieldSample:
    """Values and first partials of (p, q, r) at one spacetime point."""

    p: float
    q: float
    r: float
    p_x: float
    p_y: float
    p_z: float
    p_t: float
    q_x: float
    q_y: float
    q_t: float
    r_x: float
    r_y: float
    r_z: float
    r_t: float
    point: tuple = ()
    source: object = None
    report: object = None

    def grad(self, which: str) -> dict:
        """Partials of one field keyed by axis, for Poisson brackets."""
        if which == "p":
            return {"x": self.p_x, "y": self.p_y, "z": self.p_z,
                    "t": self.p_t}
        if which == "q":
            return {"x": self.q_x, "y": self.q_y, "t": self.q_t}
        if which == "r":
            return {"x": self.r_x, "y": self.r_y, "z": self.r_z,
                    "t": self.r_t}
        raise KeyError(which)

    PARTIAL_NAMES = ("p_x", "p_y", "p_z", "p_t",
                     "q_x", "q_y", "q_t",
                     "r_x", "r_y", "r_z", "r_t")


ZERO_SAMPLE = FieldSample(*([0.0] * 14))


@dataclass(frozen=True)
class ResidualReport:
    value: float
    scale: float
    point: tuple = ()
    equation: str = ""

    @property
    def normalized(self) -> float:
        return abs(self.value) / (self.scale + NORM_GUARD)


# ---------------------------------------------------------------------------
# Derivative formulas
# ---------------------------------------------------------------------------

def shock_derivatives(sdef, shared, point, proot: float,
                      source=None, report=None) -> FieldSample:
    """Implicit differentiation of x + S F'(p) + G(p) = 0, S = a+b+d.

    q = m(y) + beta'(y) F(p), r = n(z) + delta'(z) F(p).
    """
    x, y, z, t = point
    p = float(proot)
    F0 = sdef.F.compiled((0,))(p)
    F1 = sdef.F.compiled((1,))(p)
    F2 = sdef.F.compiled((2,))(p)
    G1 = sdef.G.compiled((1,))(p)
    al1 = shared.alpha.compiled((1,))(t)
    be1 = shared.beta.compiled((1,))(y)
    be2 = shared.beta.compiled((2,))(y)
    de1 = shared.delta.compiled((1,))(z)
    de2 = shared.delta.compiled((2,))(z)
    m0 = sdef.m.compiled((0,))(y)
    m1 = sdef.m.compiled((1,))(y)
    n0 = sdef.n.compiled((0,))(z)
    n1 = sdef.n.compiled((1,))(z)
    S = (shared.alpha.compiled((0,))(t) + shared.beta.compiled((0,))(y)
         + shared.delta.compiled((0,))(z))

    D = S * F2 + G1
    if abs(D) < EPS_DEGENERATE:
        raise DegenerateSampleError(D)
    p_x = -1.0 / D
    p_y = -be1 * F1 / D
    p_z = -de1 * F1 / D
    p_t = -al1 * F1 / D
    return FieldSample(
        p=p,
        q=m0 + be1 * F0,
        r=n0 + de1 * F0,
        p_x=p_x, p_y=p_y, p_z=p_z, p_t=p_t,
        q_x=be1 * F1 * p_x,
        q_y=m1 + be2 * F0 + be1 * F1 * p_y,
        q_t=be1 * F1 * p_t,
        r_x=de1 * F1 * p_x,
        r_y=de1 * F1 * p_y,
        r_z=n1 + de2 * F0 + de1 * F1 * p_z,
        r_t=de1 * F1 * p_t,
        point=tuple(point), source=source, report=report)


def general_derivatives(gdef, point, proot: float,
                        source=None, report=None) -> FieldSample:
    """Implicit differentiation of x + d1Q + d1R + T(p,t) = 0.

    D = d11Q + d11R + d1T (the d1T term is required: T enters the relation
    directly, confirmed against the finite-difference oracle).
    """
    x, y, z, t = point
    p = float(proot)
    Q12 = gdef.Q.compiled((1, 1))(p, y)
    Q2 = gdef.Q.compiled((0, 1))(p, y)
    Q22 = gdef.Q.compiled((0, 2))(p, y)
    Q11 = gdef.Q.compiled((2, 0))(p, y)
    R12 = gdef.R.compiled((1, 1))(p, z)
    R2 = gdef.R.compiled((0, 1))(p, z)
    R22 = gdef.R.compiled((0, 2))(p, z)
    R11 = gdef.R.compiled((2, 0))(p, z)
    T1 = gdef.T.compiled((1, 0))(p, t)
    T2 = gdef.T.compiled((0, 1))(p, t)

    D = Q11 + R11 + T1
    if abs(D) < EPS_DEGENERATE:
        raise DegenerateSampleError(D)
    p_x = -1.0 / D
    p_y = -Q12 / D
    p_z = -R12 / D
    p_t = -T2 / D
    return FieldSample(
        p=p,
        q=Q2,
        r=R2,
        p_x=p_x, p_y=p_y, p_z=p_z, p_t=p_t,
        q_x=Q12 * p_x,
        q_y=Q22 + Q12 * p_y,
        q_t=Q12 * p_t,
        r_x=R12 * p_x,
        r_y=R12 * p_y,
        r_z=R22 + R12 * p_z,
        r_t=R12 * p_t,
        point=tuple(point), source=source, report=report)


# ---------------------------------------------------------------------------
# Brackets and residuals
# ---------------------------------------------------------------------------

def poisson_bracket(a: dict, b: dict, axes) -> float:
    """{A, B}_{mu nu} = A_mu B_nu - A_nu B_mu on axis-keyed partial maps."""
    mu, nu = axes
    return a[mu] * b[nu] - a[nu] * b[mu]


def ghe_residual(s: FieldSample, shared) -> ResidualReport:
    """Field-form equation residual a{r,p}_{yt} + b{r,q}_{xt}."""
    a, b = shared.a, shared.b
    t1 = a * s.r_y * s.p_t
    t2 = a * s.r_t * s.p_y
    t3 = b * s.r_x * s.q_t
    t4 = b * s.r_t * s.q_x
    value = (t1 - t2) + (t3 - t4)
    scale = max(abs(t1), abs(t2), abs(t3), abs(t4))
    return ResidualReport(value=value, scale=scale, point=s.point,
                          equation="ghe")


def compat_residuals(s: FieldSample):
    """Cross-derivative compatibility: p_y - q_x and p_z - r_x."""
    r1 = ResidualReport(value=s.p_y - s.q_x,
                        scale=max(abs(s.p_y), abs(s.q_x)),
                        point=s.point, equation="compat_py_qx")
    r2 = ResidualReport(value=s.p_z - s.r_x,
                        scale=max(abs(s.p_z), abs(s.r_x)),
                        point=s.point, equation="compat_pz_rx")
    return r1, r2


def _cross_terms(si: FieldSample, sj: FieldSample, a: float, b: float):
    """Terms of a{r_j,p_i}_{yt}+a{r_i,p_j}_{yt}+b{r_j,q_i}_{xt}+b{r_i,q_j}_{xt}."""
    return (a * sj.r_y * si.p_t, a * sj.r_t * si.p_y,
            a * si.r_y * sj.p_t, a * si.r_t * sj.p_y,
            b * sj.r_x * si.q_t, b * sj.r_t * si.q_x,
            b * si.r_x * sj.q_t, b * si.r_t * sj.q_x)


def pairwise_balance(si: FieldSample, sj: FieldSample, shared) -> ResidualReport:
    """Two-solution balance condition (the superposition cross term)."""
    t = _cross_terms(si, sj, shared.a, shared.b)
    value = (t[0] - t[1]) + (t[2] - t[3]) + (t[4] - t[5]) + (t[6] - t[7])
    scale = max(abs(v) for v in t)
    return ResidualReport(value=value, scale=scale, point=si.point,
                          equation="pairwise_balance")


def n_term_balance(samples, shared) -> ResidualReport:
    """Sum of all i != j cross terms; for n = 2 this is pairwise_balance."""
    point = samples[0].point if samples else ()
    if len(samples) < 2:
        return ResidualReport(value=0.0, scale=0.0, point=point,
                              equation="n_term_balance")
    value = 0.0
    scale = 0.0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            rep = pairwise_balance(samples[i], samples[j], shared)
            value += rep.value
            scale = max(scale, rep.scale)
    return ResidualReport(value=value, scale=scale, point=point,
                          equation="n_term_balance")


def reduced_balance(gdef1, gdef2, shared, point, p1: float,
                    p2: float) -> ResidualReport:
    """Balance condition reduced to the general-family arbitrary functions.

    a [d12R2 - d12R1] [(d2T1)(d12Q2) - (d2T2)(d12Q1)]
      - b [d2T2 - d2T1] [(d12Q1)(d12R2) - (d12Q2)(d12R1)]
    with seed-i functions evaluated at (p_i, y/z/t).
    """
    x, y, z, t = point
    a, b = shared.a, shared.b
    Q12_1 = gdef1.Q.compiled((1, 1))(p1, y)
    Q12_2 = gdef2.Q.compiled((1, 1))(p2, y)
    R12_1 = gdef1.R.compiled((1, 1))(p1, z)
    R12_2 = gdef2.R.compiled((1, 1))(p2, z)
    T2_1 = gdef1.T.compiled((0, 1))(p1, t)
    T2_2 = gdef2.T.compiled((0, 1))(p2, t)

    A = R12_2 - R12_1
    lhs1 = a * A * T2_1 * Q12_2
    lhs2 = a * A * T2_2 * Q12_1
    C = T2_2 - T2_1
    rhs1 = b * C * Q12_1 * R12_2
    rhs2 = b * C * Q12_2 * R12_1
    value = (lhs1 - lhs2) - (rhs1 - rhs2)
    scale = max(abs(lhs1), abs(lhs2), abs(rhs1), abs(rhs2))
    return ResidualReport(value=value, scale=scale, point=tuple(point),
                          equation="reduced_balance")

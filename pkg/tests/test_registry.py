import pytest

from _families import quadratic_shock_def, second_shock_def, sf, simple_shared
from heavenly.exprdsl import ExprError, evaluate
from heavenly.implicitsolve import enumerate_roots
from heavenly.registry import (
    FamilyError,
    GeneralSolutionDef,
    SharedProfile,
    ShockSolutionDef,
    build_general_family,
    build_shock_family,
    polynomial_antiderivative,
    shock_def_as_general,
)


class TestSharedProfile:
    def test_c_is_derived(self):
        shared = simple_shared(a=2.0, b=-0.5)
        assert shared.a + shared.b + shared.c == 0.0

    def test_zero_constants_rejected(self):
        with pytest.raises(FamilyError):
            simple_shared(a=0.0, b=0.0)

    def test_variable_convention(self):
        with pytest.raises(FamilyError, match="variable convention"):
            SharedProfile(alpha=sf("y", ("y",)), beta=sf("y", ("y",)),
                          delta=sf("z", ("z",)))


class TestBuildShockFamily:
    def test_single_seed(self):
        fam = build_shock_family([quadratic_shock_def()], simple_shared())
        assert fam.size == 1

    def test_empty_rejected(self):
        with pytest.raises(FamilyError, match="empty family"):
            build_shock_family([], simple_shared())

    def test_two_seeds(self):
        fam = build_shock_family([quadratic_shock_def(), second_shock_def()],
                                 simple_shared())
        assert fam.size == 2

    def test_wrong_variable_rejected(self):
        with pytest.raises(FamilyError, match="variable convention"):
            ShockSolutionDef(F=sf("y^2", ("y",)), G=sf("p", ("p",)),
                             m=sf("0", ("y",)), n=sf("0", ("z",)))

    def test_differentiation_domain_failure_on_probes(self):
        # log(p)'' = -1/p^2 blows up only at 0; log of a negative-definite
        # argument fails at every probe point
        bad = ShockSolutionDef(F=sf("log(0 - p^2 - 1)", ("p",)),
                               G=sf("p", ("p",)),
                               m=sf("0", ("y",)), n=sf("0", ("z",)))
        with pytest.raises(FamilyError, match="domain failure"):
            build_shock_family([bad], simple_shared())


class TestBuildGeneralFamily:
    def test_single_seed(self):
        g = GeneralSolutionDef(Q=sf("p^2*y/2", ("p", "y")),
                               R=sf("p^2*z/2", ("p", "z")),
                               T=sf("p", ("p", "t")))
        fam = build_general_family([g], simple_shared())
        assert fam.size == 1

    def test_variable_convention(self):
        with pytest.raises(FamilyError, match="variable convention"):
            GeneralSolutionDef(Q=sf("p*z", ("p", "z")),
                               R=sf("p^2*z/2", ("p", "z")),
                               T=sf("p", ("p", "t")))

    def test_t_constant_in_p_accepted(self):
        g = GeneralSolutionDef(Q=sf("p^2*y/2", ("p", "y")),
                               R=sf("p^2*z/2", ("p", "z")),
                               T=sf("t", ("p", "t")))
        fam = build_general_family([g], simple_shared())
        assert fam.size == 1


class TestPolynomialAntiderivative:
    @pytest.mark.parametrize("source, x, expected", [
        ("0", 2.0, 0.0),
        ("3", 2.0, 6.0),
        ("y", 2.0, 2.0),
        ("y^2/2", 3.0, 4.5),
        ("2*y + 1", 2.0, 6.0),
        ("y^3 - y", 2.0, 2.0),
    ])
    def test_values(self, source, x, expected):
        from heavenly.exprdsl import parse
        anti = polynomial_antiderivative(parse(source, ("y",)), "y")
        assert evaluate(anti, {"y": x}) == pytest.approx(expected)

    def test_rejects_non_polynomial(self):
        from heavenly.exprdsl import parse
        with pytest.raises(ExprError, match="not a polynomial"):
            polynomial_antiderivative(parse("sin(y)", ("y",)), "y")


class TestShockGeneralEmbedding:
    def test_q_values_agree(self):
        # polynomial m so the antiderivative exists symbolically
        shared = simple_shared()
        sdef = ShockSolutionDef(F=sf("p^2/2 + p^4/4", ("p",)),
                                G=sf("p", ("p",)),
                                m=sf("y^2/2 + y", ("y",)),
                                n=sf("z^3/3", ("z",)))
        gdef = shock_def_as_general(sdef, shared)
        shock_fam = build_shock_family([sdef], shared)
        general_fam = build_general_family([gdef], shared)
        points = [(0.3, 1.1, 0.9, 0.7), (-0.5, 0.6, 1.4, 1.2),
                  (0.9, 1.3, 0.8, 0.5)]
        for point in points:
            r1 = enumerate_roots(shock_fam.relation(0), point)
            r2 = enumerate_roots(general_fam.relation(0), point)
            assert r1 and r2
            assert r1[0].root == pytest.approx(r2[0].root, rel=1e-10)
            _, q1, rr1 = shock_fam.values(0, point, r1[0].root)
            _, q2, rr2 = general_fam.values(0, point, r2[0].root)
            assert q1 == pytest.approx(q2, rel=1e-10)
            assert rr1 == pytest.approx(rr2, rel=1e-10)

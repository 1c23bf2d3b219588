import math

import pytest

from bipartite_glass import (
    BadGammaError,
    EmptyMixtureError,
    MixtureSpec,
    NegativeCoefficientError,
    constants,
    is_plain_product,
    normalize_to_unit_variance,
    validate,
    xi_jet,
)
from conftest import mixed_12_21_spec, pure_spec


class TestValidate:
    def test_single_positive_coefficient_accepted(self):
        spec = pure_spec(2, 2, 1.0)
        assert validate(spec) is spec

    def test_all_zero_rejected(self):
        with pytest.raises(EmptyMixtureError):
            validate(MixtureSpec(coefficients={(2, 2): 0.0}, gamma=0.5))

    def test_gamma_boundary_rejected(self):
        for g in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(BadGammaError):
                validate(MixtureSpec(coefficients={(2, 2): 1.0}, gamma=g))

    def test_negative_coefficient_rejected(self):
        with pytest.raises(NegativeCoefficientError):
            validate(MixtureSpec(coefficients={(2, 2): -1.0}, gamma=0.5))

    def test_degree_zero_rejected(self):
        with pytest.raises(NegativeCoefficientError):
            validate(MixtureSpec(coefficients={(0, 2): 1.0}, gamma=0.5))


class TestXiJet:
    def test_pure_22_at_one_one(self):
        jet = xi_jet(pure_spec(2, 2, 1.0), 1.0, 1.0)
        assert jet.value == pytest.approx(1.0)
        assert jet.dx == pytest.approx(2.0)
        assert jet.dy == pytest.approx(2.0)
        assert jet.dxx == pytest.approx(2.0)

    def test_zero_point(self):
        jet = xi_jet(mixed_12_21_spec(), 0.0, 0.0)
        assert jet.value == 0.0
        assert jet.dx == 0.0
        assert jet.dy == 0.0

    def test_mixed_example_symbolic(self):
        # xi = x^2 y / 2 + x y^2 / 2
        jet = xi_jet(mixed_12_21_spec(), 1.0, 1.0)
        assert jet.value == pytest.approx(1.0, abs=1e-14)
        assert jet.dx == pytest.approx(1.5, abs=1e-14)
        assert jet.dxx == pytest.approx(1.0, abs=1e-14)

    def test_against_finite_differences(self):
        spec = MixtureSpec(coefficients={(2, 2): 0.3, (1, 3): 0.2}, gamma=0.4)
        x, y, eps = 0.6, 0.7, 1e-6
        jet = xi_jet(spec, x, y)
        f = lambda a, b: xi_jet(spec, a, b, order=0).value
        assert jet.dx == pytest.approx(
            (f(x + eps, y) - f(x - eps, y)) / (2 * eps), abs=1e-7)
        assert jet.dyy == pytest.approx(
            (f(x, y + eps) - 2 * f(x, y) + f(x, y - eps)) / eps ** 2, abs=1e-4)


class TestConstants:
    def test_pure_alphas_vanish(self):
        c = constants(pure_spec(2, 2, 1.0))
        # p(p-1) + p - p^2 = 0 for every pure term
        assert c.alpha1 == 0.0
        assert c.alpha2 == 0.0
        assert c.gamma_star == pytest.approx(1.0)

    def test_mixed_alpha_value(self):
        c = constants(mixed_12_21_spec())
        # alpha^2 = 1 + 1.5 - 1.5^2 = 0.25
        assert c.alpha1 == pytest.approx(0.5, abs=1e-14)
        assert c.alpha2 == pytest.approx(0.5, abs=1e-14)

    def test_gamma_star_asymmetric(self):
        c = constants(pure_spec(2, 2, 1.0, gamma=0.25))
        assert c.gamma_star == pytest.approx(3.0)

    def test_marginals(self):
        c = constants(mixed_12_21_spec())
        assert c.marginal1 == pytest.approx({2: 0.5, 1: 0.5})
        assert c.marginal2 == pytest.approx({1: 0.5, 2: 0.5})


class TestNormalize:
    def test_single_term_rescale(self):
        spec = normalize_to_unit_variance(pure_spec(2, 2, 0.5))
        assert spec.coefficients[(2, 2)] == pytest.approx(1.0)

    def test_already_unit_unchanged(self):
        spec = normalize_to_unit_variance(pure_spec(2, 2, 1.0))
        assert spec.coefficients[(2, 2)] == pytest.approx(1.0)

    def test_two_terms(self):
        spec = MixtureSpec(coefficients={(1, 1): 1.0, (2, 2): 1.0}, gamma=0.5)
        out = normalize_to_unit_variance(spec)
        # each beta^2 multiplied by 1/2
        assert out.coefficients[(1, 1)] ** 2 == pytest.approx(0.5)
        assert xi_jet(out, 1.0, 1.0, order=0).value == pytest.approx(1.0)


class TestStructure:
    def test_is_plain_product(self):
        assert is_plain_product(pure_spec(1, 1, 2.0))
        assert not is_plain_product(pure_spec(2, 2, 1.0))
        assert not is_plain_product(mixed_12_21_spec())

    def test_swap_parties_round_trip(self):
        spec = MixtureSpec(coefficients={(2, 1): 0.7}, gamma=0.3,
                           h1=0.1, h2=0.2)
        back = spec.swap_parties().swap_parties()
        assert back.coefficients == spec.coefficients
        assert back.gamma == pytest.approx(spec.gamma)
        assert (back.h1, back.h2) == (spec.h1, spec.h2)
        swapped = spec.swap_parties()
        assert swapped.coefficients == {(1, 2): 0.7}
        assert swapped.gamma == pytest.approx(0.7)

    def test_dict_round_trip(self):
        spec = mixed_12_21_spec()
        assert MixtureSpec.from_dict(spec.to_dict()) == spec

    def test_pure_degrees(self):
        assert pure_spec(3, 2, 1.0).pure_degrees() == (3, 2)
        with pytest.raises(ValueError):
            mixed_12_21_spec().pure_degrees()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cptgame.errors import DomainError
from cptgame.prospect import (H_FLOOR, CptParams, adaptive_gauss_legendre, chi,
                              cpt_closed_form, cpt_index, cpt_value_direct, psi, utility,
                              weight, weight_derivative)

from oracles import chi_minus_oracle, chi_plus_oracle, half_abs_moment

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)


class TestParams:
    def test_defaults_rational(self):
        p = CptParams()
        assert p.is_rational and p.sign == -1
        assert CptParams(role="evader").sign == 1

    @pytest.mark.parametrize("kw", [dict(alpha=1.2), dict(beta=0.0), dict(gamma=1.5),
                                    dict(gamma=0.0), dict(epsilon=0.5), dict(role="referee")])
    def test_pursuer_rejects(self, kw):
        with pytest.raises(DomainError):
            CptParams(**kw)

    def test_evader_allows_large_sensitivities(self):
        p = CptParams(alpha=1.7, beta=2.5, role="evader")
        assert p.alpha == 1.7

    def test_all_violations_reported(self):
        with pytest.raises(DomainError) as exc:
            CptParams(alpha=2.0, gamma=3.0, epsilon=0.1)
        msg = str(exc.value)
        assert "alpha" in msg and "gamma" in msg and "epsilon" in msg


class TestUtility:
    def test_reference_point(self):
        for role in ("pursuer", "evader"):
            assert utility(3.0, 3.0, CptParams(role=role)) == ("gain", 0.0)

    def test_rational_pursuer(self):
        p = CptParams()
        assert utility(-2.0, 0.0, p) == ("gain", 2.0)
        assert utility(2.0, 0.0, p) == ("loss", 2.0)

    def test_loss_multiplier(self):
        assert utility(3.0, 0.0, CptParams(epsilon=2.0)) == ("loss", 6.0)

    def test_evader_orientation(self):
        e = CptParams(role="evader")
        assert utility(2.0, 0.0, e)[0] == "gain"
        assert utility(-2.0, 0.0, e)[0] == "loss"


class TestWeight:
    def test_identity(self):
        for p in (0.1, 0.5, 0.9):
            assert weight(p, 1.0) == p
            assert weight_derivative(p, 1.0) == 1.0

    def test_examples(self):
        assert abs(weight(0.5, 0.5) - math.exp(-math.sqrt(math.log(2.0)))) <= 1e-15
        assert abs(weight(0.5, 0.5) - 0.43493) <= 1e-5
        assert abs(weight(0.01, 0.5) - math.exp(-math.sqrt(math.log(100.0)))) <= 1e-15
        assert weight(0.01, 0.5) > 0.01 and weight(0.99, 0.5) < 0.99
        assert abs(weight(0.99, 0.5) - 0.90461) <= 1e-5
        assert abs(weight_derivative(0.5, 0.5) - 0.52241) <= 1e-5

    def test_derivative_finite_difference(self):
        h = 1e-6
        fd = (weight(0.3 + h, 0.7) - weight(0.3 - h, 0.7)) / (2 * h)
        assert abs(fd - weight_derivative(0.3, 0.7)) <= 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            weight(0.0, 0.5)
        with pytest.raises(DomainError):
            weight(0.5, 1.2)
        with pytest.raises(DomainError):
            weight_derivative(1.0, 0.5)

    @pytest.mark.parametrize("gamma", [0.3, 0.61, 0.9, 1.0])
    def test_increasing_into_unit_interval(self, gamma):
        p = np.linspace(1e-6, 1.0, 2001)
        w = weight(p, gamma)
        assert np.all(np.diff(w) > 0)
        assert np.all((w > 0) & (w <= 1))

    @pytest.mark.parametrize("gamma", [0.3, 0.61, 0.9])
    def test_single_crossing(self, gamma):
        p = np.linspace(1e-4, 1 - 1e-4, 5001)
        sign = np.sign(weight(p, gamma) - p)
        changes = np.count_nonzero(np.diff(sign[sign != 0]))
        assert changes == 1
        assert sign[0] > 0 and sign[-1] < 0


class TestChi:
    def test_rational_value(self):
        c = chi(CptParams())
        assert abs(c.chi_plus - PHI0) <= 1e-10
        assert abs(c.chi_plus - 0.3989423) <= 1e-7

    def test_half_moment(self):
        c = chi(CptParams(alpha=0.5))
        assert abs(c.chi_plus - half_abs_moment(0.5)) <= 1e-10
        assert abs(c.chi_plus - 0.411089479331) <= 1e-11

    @pytest.mark.parametrize("a", [0.3, 0.5, 0.8, 1.0])
    def test_identity_weight_symmetry(self, a):
        c = chi(CptParams(alpha=a, beta=a))
        assert c.chi_plus == c.chi_minus

    @pytest.mark.parametrize("gamma", [0.4, 0.7])
    @pytest.mark.parametrize("a", [0.3, 1.0])
    def test_against_simpson_oracle(self, a, gamma):
        c = chi(CptParams(alpha=a, beta=a, gamma=gamma))
        assert abs(c.chi_plus - chi_plus_oracle(a, gamma)) <= 1e-8
        assert abs(c.chi_minus - chi_minus_oracle(a, gamma)) <= 1e-8

    def test_evader_large_exponent(self):
        c = chi(CptParams(alpha=2.0, beta=2.0, role="evader"))
        assert abs(c.chi_plus - 0.5) <= 1e-10  # E Z^2 / 2

    def test_gauss_legendre_polynomial_exact(self):
        val, err = adaptive_gauss_legendre(lambda x: x ** 5, [0.0, 2.0])
        assert abs(val - 64.0 / 6.0) <= 1e-12


class TestPsi:
    @given(st.floats(min_value=H_FLOOR, max_value=1e8))
    def test_rational_zero(self, H):
        assert psi(CptParams(), H) == 0.0
        assert psi(CptParams(role="evader"), H) == 0.0

    def test_examples(self):
        expected = -(0.5 * half_abs_moment(0.5) - PHI0)
        assert abs(psi(CptParams(alpha=0.5), 1.0) - expected) <= 1e-10
        assert abs(psi(CptParams(alpha=0.5), 1.0) - 0.1933975407) <= 1e-9
        assert abs(psi(CptParams(epsilon=2.0), 1.0) - PHI0) <= 1e-10

    def test_floor(self):
        with pytest.raises(DomainError):
            psi(CptParams(alpha=0.5), 0.0)
        with pytest.raises(DomainError):
            psi(CptParams(alpha=0.5), float("inf"))


class TestProspectValue:
    def test_rational_zero(self):
        assert abs(cpt_value_direct(0.0, 1.0, CptParams())) <= 1e-10

    def test_half_moment_example(self):
        expected = half_abs_moment(0.5) - PHI0
        assert abs(cpt_value_direct(0.0, 1.0, CptParams(alpha=0.5)) - expected) <= 1e-9
        assert abs(expected - 0.0121471989) <= 1e-9

    @pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.8, 0.3), (1.0, 0.5)])
    def test_sigma_scaling_identity_weight(self, a, b):
        p = CptParams(alpha=a, beta=b)
        c = chi(p)
        v2 = cpt_value_direct(0.0, 2.0, p)
        assert abs(v2 - (2.0 ** a * c.chi_plus - 2.0 ** b * c.chi_minus)) <= 1e-8

    def test_sigma_positive(self):
        with pytest.raises(DomainError):
            cpt_value_direct(0.0, 0.0, CptParams())

    def test_index(self):
        assert cpt_index(7.0, 3.0, CptParams()) == pytest.approx(7.0, abs=1e-12)
        assert cpt_index(7.0, 3.0, CptParams(role="evader")) == pytest.approx(7.0, abs=1e-12)
        assert cpt_index(7.0, 0.0, CptParams(alpha=0.5)) == 7.0
        expected = 10.0 - (half_abs_moment(0.5) - PHI0)
        assert abs(cpt_index(10.0, 1.0, CptParams(alpha=0.5)) - expected) <= 1e-9
        assert abs(expected - 9.9878528) <= 1e-7

    def test_closed_form_matches_index(self):
        p = CptParams(alpha=0.7, beta=0.9, epsilon=1.3, role="evader")
        assert cpt_index(2.0, 1.5, p) == pytest.approx(2.0 + cpt_closed_form(1.5, p), rel=1e-15)


class TestPsiMonotonicity:
    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([0.3, 0.5, 0.8, 1.0]), st.sampled_from([0.3, 0.5, 0.8, 1.0]),
           st.sampled_from([0.4, 0.7, 1.0]), st.floats(min_value=1.0, max_value=3.0),
           st.floats(min_value=1e-3, max_value=1e3))
    def test_loss_multiplier_direction(self, a, b, g, eps, H):
        h = 1e-4
        for role, sign in (("pursuer", 1), ("evader", -1)):
            lo = psi(CptParams(alpha=a, beta=b, gamma=g, epsilon=eps, role=role), H)
            hi = psi(CptParams(alpha=a, beta=b, gamma=g, epsilon=eps + h, role=role), H)
            assert sign * (hi - lo) > 0

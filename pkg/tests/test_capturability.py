import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cptgame.capturability import (boundary_matrices, check_capture_conditions,
                                   check_rational_capture, search_bounds)
from cptgame.equilibrium import GameConfig, classify_scenario, xy_of_w
from cptgame.errors import SquareRootDomain

I3 = np.eye(3)
X0 = np.array([-10.0, -5.0, -5.0])
SANDWICH_CASES = [(0.9, (0.1, 0.0)), (0.5, (0.3, 0.0)), (0.5, (0.5, 0.1)), (0.5, (0.3, -0.2))]


def random_between(rng, d, D, n=3):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (Q * rng.uniform(d, D, n)) @ Q.T


def loewner_le(A, B, tol):
    return np.linalg.eigvalsh(0.5 * ((B - A) + (B - A).T))[0] >= -tol


class TestRationalCapture:
    def test_examples(self):
        ok = check_rational_capture(0.9 * I3, I3)
        assert ok.ok and abs(ok.margin - (1 / 0.9 - 1)) <= 1e-12
        assert not check_rational_capture(I3, 0.9 * I3).ok
        eq = check_rational_capture(I3, I3)
        assert not eq.ok and eq.margin == 0.0


class TestBoundaryMatrices:
    def test_rational_strict_and_corrected(self, rational_cfg):
        sc = classify_scenario(rational_cfg.R, rational_cfg.Pi)
        for mode, value in (("strict", 18.0), ("corrected", 6.0)):
            mats = boundary_matrices(rational_cfg, 0.0, 0.0, (0.0, 0.0), sc, mode)
            for M in mats:
                assert np.allclose(M, value * I3, atol=1e-10)

    def test_equal_bounds_coincide(self, rational_cfg):
        sc = classify_scenario(rational_cfg.R, rational_cfg.Pi)
        Xmin, Xmax, Ymin, Ymax = boundary_matrices(rational_cfg, 0.0, 0.0, (0.4, 0.4), sc)
        assert np.allclose(Xmin, Xmax) and np.allclose(Ymin, Ymax)

    def test_outside_domain(self, rational_cfg):
        sc = classify_scenario(rational_cfg.R, rational_cfg.Pi)
        with pytest.raises(SquareRootDomain) as exc:
            boundary_matrices(rational_cfg, 0.0, 0.0, (0.0, 5.0), sc)
        assert exc.value.condition == "S1.x_defined"


class TestCaptureConditions:
    def test_rational_s1(self, rational_cfg):
        rep = check_capture_conditions(rational_cfg, 0.0, 0.0, (0.0, 0.0))
        assert rep.overall and rep.scenario == "S1"
        assert [c.cid for c in rep.conditions] == ["S1.x_defined", "S1.y_defined", "S1.lower",
                                                   "S1.upper"]
        assert rep.condition("S1.x_defined").margin == pytest.approx(4.0)

    def test_rational_s1_strict_differs(self, rational_cfg):
        rep = check_capture_conditions(rational_cfg, 0.0, 0.0, (0.0, 0.0), mode="strict")
        assert rep.overall  # X = Y = 18 I still gives X - Y = 0 in [0, 0]

    def test_rational_s2(self, swapped_cfg):
        rep = check_capture_conditions(swapped_cfg, 0.0, 0.0)
        assert rep.scenario == "S2" and not rep.overall
        assert not rep.condition("S2.x_defined").passed

    def test_scenario3_difference_form(self):
        cfg = GameConfig(I3, I3, I3, 0.9, X0)
        rep = check_capture_conditions(cfg, -10 / 9, 10 / 9, mode="strict")
        assert rep.condition("S3.difference").passed and rep.overall
        assert not rep.condition("S3.sum").passed
        assert not check_capture_conditions(cfg, -10 / 9, 10 / 9, mode="corrected").overall

    def test_scenario3_sum_form(self):
        cfg = GameConfig(I3, I3, I3, 0.9, X0)
        rep = check_capture_conditions(cfg, 1.0, -(2 / 0.9 + 1))
        assert rep.overall and rep.condition("S3.sum").passed

    def test_unclassified(self):
        cfg = GameConfig(I3, np.diag([0.9, 1.1, 1.0]), I3, 0.9, X0)
        assert not check_capture_conditions(cfg, 0.0, 0.0).overall


class TestSearch:
    def test_rational(self, rational_cfg, swapped_cfg):
        assert search_bounds(rational_cfg, 0.0, 0.0) == (0.0, 0.0)
        assert search_bounds(swapped_cfg, 0.0, 0.0) is None

    @pytest.mark.parametrize("R,psi", SANDWICH_CASES)
    def test_returned_pair_revalidates(self, R, psi):
        cfg = GameConfig(np.diag([1.0, 1.3, 1.6]), R * I3, I3, 0.9, X0)
        b = search_bounds(cfg, *psi)
        assert b is not None and b[1] > 0
        assert check_capture_conditions(cfg, *psi, b).overall

    def test_expanding_map_has_no_box(self):
        cfg = GameConfig(I3, 0.9 * I3, I3, 0.9, X0)
        assert search_bounds(cfg, 0.3, 0.0) is None


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.floats(-0.5, 0.5), st.floats(0.0, 0.5), st.floats(-0.5, 0.5), st.floats(0.0, 0.5),
           st.floats(0.0, 0.6), st.floats(0.0, 0.6))
    def test_psi_raises_margins(self, p1, dp1, p2, dp2, d, extra):
        cfg = GameConfig(np.diag([1.0, 1.3, 1.6]), 0.5 * I3, I3, 0.9, X0)
        D = d + extra
        base = check_capture_conditions(cfg, p1, p2, (d, D))
        up1 = check_capture_conditions(cfg, p1 + dp1, p2, (d, D))
        up2 = check_capture_conditions(cfg, p1, p2 + dp2, (d, D))
        assert up1.condition("S1.x_defined").margin >= base.condition("S1.x_defined").margin - 1e-12
        assert up2.condition("S1.y_defined").margin >= base.condition("S1.y_defined").margin - 1e-12

    @pytest.mark.parametrize("R,psi", SANDWICH_CASES)
    def test_sandwich(self, R, psi):
        cfg = GameConfig(np.diag([1.0, 1.3, 1.6]), R * I3, I3, 0.9, X0)
        d, D = search_bounds(cfg, *psi)
        sc = classify_scenario(cfg.R, cfg.Pi)
        Xmin, Xmax, Ymin, Ymax = boundary_matrices(cfg, *psi, (d, D), sc)
        rng = np.random.default_rng(5)
        for _ in range(100):
            W = random_between(rng, d, D)
            X, Y = xy_of_w(W, cfg, *psi, sc)
            assert loewner_le(Xmin, X, 1e-9) and loewner_le(X, Xmax, 1e-9)
            assert loewner_le(Ymin, Y, 1e-9) and loewner_le(Y, Ymax, 1e-9)

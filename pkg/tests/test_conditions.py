"""Structure-condition checkers: pass cases, seeded falsifiers, envelopes."""

import numpy as np
import pytest

from duophase.conditions import (
    StructureConstants,
    ZsigmaConstants,
    biconjugate_bracket,
    check_F1,
    check_F2_sampled,
    check_F4_sampled,
    check_H_property,
    check_Zsigma,
    check_convexity_sampled,
    convex_hull_1d,
    derived_localization_params,
    essinf_bracket,
    find_min_point_F4,
)
from duophase.densities import (
    DoublePhaseDensity,
    ExponentConfig,
    OneSidedPhaseDensity,
    StepHolderWeight,
    ThresholdPhaseDensity,
    TwoThresholdWeight,
)
from duophase.fields import Ball

E = ExponentConfig(p=2.0, q=2.5, n=2, N=1, sigma=1.0)
STEP = StepHolderWeight(r=0.5, sigma=1.0, jump=0.2)
DP = DoublePhaseDensity(E, STEP)
BALL = Ball((0.5, 0.0), 0.45)


class TestF1:
    def test_holds(self):
        assert check_F1(E)  # 2.5 <= 2 (1 + 1/2)

    def test_equality_allowed(self):
        assert check_F1(ExponentConfig(p=2.0, q=3.0, n=2, N=1, sigma=1.0))

    def test_violated(self):
        assert not check_F1(ExponentConfig(p=2.0, q=3.01, n=2, N=1, sigma=1.0))


class TestZsigma:
    W = TwoThresholdWeight(r1=0.0, r2=1.0, sigma=0.12, jump=1.0)

    def constants(self, scale=1.0):
        c5, c6 = self.W.reference_comparison_constants()
        return ZsigmaConstants(c5=scale * c5, c6=scale * c6, sigma=0.12)

    def test_derived_constant_passes(self):
        report = check_Zsigma(self.W, self.constants(), -2.0, 3.0, 20000, seed=3)
        assert report.passed

    def test_shrunk_constant_fails_with_witness(self):
        report = check_Zsigma(self.W, self.constants(0.9), -2.0, 3.0, 20000, seed=3)
        assert not report.passed
        w = report.witness
        # the witness must be replayable: lhs really exceeds rhs
        lhs = self.W.value_1d(np.array([w["t"]]))[0]
        rhs = (
            w["c6"] * self.W.value_1d(np.array([w["s"]]))[0]
            + w["c5"] * abs(w["t"] - w["s"]) ** 0.12
        )
        assert lhs > rhs


class TestF2:
    def test_derived_constants_pass(self):
        K1, K2, K3 = DP.structure_constants()
        report = check_F2_sampled(
            DP,
            StructureConstants(K1=K1, K2=K2, K3=K3, sigma=1.0),
            BALL,
            seed=1,
            pair_count=1024,
            z_count=48,
        )
        assert report.passed

    def test_unit_constants_fail_with_witness(self):
        report = check_F2_sampled(
            DP,
            StructureConstants(K1=1.0, K2=1.0, K3=0.0, sigma=1.0),
            BALL,
            seed=1,
            pair_count=1024,
            z_count=48,
        )
        assert not report.passed
        w = report.witness
        # replay: f(x,z) > K1 f(xt,z) + K2 |x-xt|^sigma |z|^q
        x = np.asarray(w["x"])[None, :]
        xt = np.asarray(w["x_tilde"])[None, :]
        z = np.asarray(w["z"])[None, :, :]
        fx = DP.value(x, z)[0]
        assert fx > w["rhs"]
        assert fx == pytest.approx(w["lhs_f_x"])


class TestConvexity:
    def test_double_phase_is_midpoint_convex(self):
        report = check_convexity_sampled(DP, BALL, seed=2, x_count=16, z_pair_count=128)
        assert report.passed

    def test_threshold_phase_is_midpoint_convex(self):
        e2 = ExponentConfig(p=2.0, q=4.0, n=2, N=1, sigma=2.0)
        report = check_convexity_sampled(
            ThresholdPhaseDensity(e2),
            Ball((0.0, 0.0), 1.0),
            seed=2,
            x_count=16,
            z_pair_count=128,
        )
        assert report.passed


class TestF4:
    def test_min_point_achieves_minimum_on_samples(self):
        x = np.array([0.45, 0.0])
        eps = 0.14
        report = check_F4_sampled(DP, x, eps, seed=3, y_count=64, z_count=64)
        assert report.passed

    def test_min_point_lands_on_low_weight_side(self):
        # near the jump the weight is smaller on the left of x1 = 0.5
        y = find_min_point_F4(DP, np.array([0.45, 0.0]), 0.14, seed=3)
        a_y = STEP.value(y[None, :])[0]
        a_x = STEP.value(np.array([[0.45, 0.0]]))[0]
        assert a_y <= a_x + 1e-12


class TestEnvelopes:
    def test_essinf_bracket_orders(self):
        z = np.zeros((1, 2))
        z[0, 0] = 1.5
        br = essinf_bracket(DP, np.array([0.45, 0.0]), 0.14, z, seed=5)
        assert br.lower <= br.upper + 1e-12

    def test_biconjugate_below_essinf(self):
        z = np.zeros((1, 2))
        z[0, 0] = 1.5
        ess = essinf_bracket(DP, np.array([0.45, 0.0]), 0.14, z, seed=5)
        bi = biconjugate_bracket(DP, np.array([0.45, 0.0]), 0.14, z, seed=5)
        assert bi.lower <= ess.upper + 1e-9


class TestConvexHull1d:
    def brute_force(self, s, v, t):
        # greatest value at t of any affine function below all samples
        best = -np.inf
        for i in range(len(s)):
            for j in range(len(s)):
                if s[i] == s[j]:
                    continue
                slope = (v[j] - v[i]) / (s[j] - s[i])
                line = v[i] + slope * (t - s[i])
                if np.all(v >= v[i] + slope * (s - s[i]) - 1e-12):
                    best = max(best, line)
        lowest = np.min(v)
        return max(best, lowest if np.all(v >= lowest) else -np.inf)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            s = np.sort(rng.uniform(-2, 2, 12))
            v = rng.uniform(0, 3, 12)
            hull = convex_hull_1d(s, v)
            for t in rng.uniform(s[0], s[-1], 8):
                assert hull.evaluate(np.array([t]))[0] == pytest.approx(
                    self.brute_force(s, v, t), abs=1e-9
                )

    def test_convex_input_unchanged(self):
        s = np.linspace(-1, 1, 15)
        v = s**2
        hull = convex_hull_1d(s, v)
        assert np.allclose(hull.evaluate(s), v, atol=1e-12)


class TestHProperty:
    def test_example_density_passes(self):
        dens = OneSidedPhaseDensity(E, STEP)
        K1, K2, K3 = dens.structure_constants()
        constants = StructureConstants(K1=K1, K2=K2, K3=K3, sigma=1.0)
        params = derived_localization_params(constants, E, L=10.0, eps_star=0.5)
        report = check_H_property(
            dens,
            params,
            constants,
            BALL,
            np.array([0.45, 0.0]),
            0.14,
            seed=4,
            z_count=512,
            y_count=64,
        )
        assert report.passed
        assert report.details["chain_margin"] >= -1e-9

    def test_derived_params_formula(self):
        constants = StructureConstants(K1=2.8, K2=2.8, K3=0.0, sigma=1.0)
        params = derived_localization_params(constants, E, L=10.0, eps_star=0.5)
        assert params.alpha == E.p
        assert params.b == 0.0
        assert params.A == pytest.approx(2.8 + 2.8 * 10 ** ((2.5 - 2.0) / 2.0))

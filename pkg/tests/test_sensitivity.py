import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightatom import sensitivity as sens
from lightatom.gaussian_core import InputSpec
from lightatom.interferometer import InterferometerConfig, balanced
from lightatom.validation import random_config, random_input

HALF_PI = math.pi / 2


def coherent(n_alpha, phase=HALF_PI):
    return InputSpec("coherent", math.sqrt(n_alpha), phase)


def squeezed(n_alpha, r, phase=HALF_PI, theta_s=0.0):
    return InputSpec("squeezed_coherent", math.sqrt(n_alpha), phase, r, theta_s)


def brute_force_phi(n_alpha, g, points=10 ** 6):
    """Independent phi-grid minimum for the balanced lossless coherent case.

    Uses U1 = cosh^2 g e^{i phi} - sinh^2 g and |V1| = cosh g sinh g |e^{i phi} - 1|.
    """
    phi = np.linspace(-math.pi, math.pi, points, endpoint=False)
    c2, s2 = math.cosh(g) ** 2, math.sinh(g) ** 2
    e = np.exp(1j * phi)
    U1 = c2 * e - s2
    V1sq = c2 * s2 * np.abs(e - 1) ** 2
    alpha = 1j * math.sqrt(n_alpha)
    slope = np.abs(np.real(1j * c2 * e * alpha))
    with np.errstate(divide="ignore"):
        d = np.sqrt((np.abs(U1) ** 2 + V1sq) / 4) / slope
    i = int(np.argmin(d))
    return phi[i], d[i]


class TestSlope:
    def test_maximum(self):
        c = balanced(1.0, phi=0.0, input_a=coherent(4))
        s = sens.slope(c)
        assert abs(s.analytic) == pytest.approx(2 * math.cosh(1.0) ** 2, rel=1e-12)
        assert abs(s.analytic) == pytest.approx(4.762195691083631, rel=1e-12)
        assert s.numeric == pytest.approx(s.analytic, rel=1e-6)

    def test_zero(self):
        c = balanced(1.0, phi=0.3, input_a=coherent(4, phase=-0.3))
        assert abs(sens.analytic_slope(c)) < 1e-12

    def test_transmission_scaling(self):
        full = sens.analytic_slope(balanced(1.0, input_a=coherent(4)))
        half = sens.analytic_slope(balanced(1.0, T=0.5, input_a=coherent(4)))
        assert half == pytest.approx(full / math.sqrt(2), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 2), st.floats(0.05, 1), st.floats(0, 1), st.floats(-3, 3),
           st.floats(0.5, 10), st.floats(0, 6.28))
    def test_finite_difference_balanced(self, g, T, gt, phi, alpha, ta):
        c = balanced(g, phi=phi, T=T, gamma_tau=gt, input_a=InputSpec("coherent", alpha, ta))
        s = sens.slope(c)
        want = sens.balanced_slope(T, alpha ** 2, g, phi, ta)
        assert abs(s.analytic) == pytest.approx(want, rel=1e-10, abs=1e-12)
        if want > 1e-3:
            assert s.numeric == pytest.approx(s.analytic, rel=1e-6)

    def test_step_underflow(self):
        with pytest.raises(sens.StepUnderflowError):
            sens.numeric_slope(balanced(1.0), step=1e-10)


class TestVariance:
    def test_coherent_undo(self):
        v = sens.output_variance(balanced(1.0, input_a=coherent(100)))
        assert v.engine == pytest.approx(0.25, abs=1e-12)
        assert v.closed_form == pytest.approx(0.25, abs=1e-12)

    def test_squeezed_undo(self):
        v = sens.output_variance(balanced(1.0, input_a=squeezed(4, 1.0)))
        assert v.closed_form == pytest.approx(math.exp(-2) / 4, rel=1e-12)
        assert v.engine == pytest.approx(0.033833821402035606, rel=1e-6)  # Fock oracle value

    @pytest.mark.parametrize("a", [InputSpec(), coherent(9), squeezed(4, 1.3, theta_s=0.7)])
    def test_blocked_arm(self, a):
        c = InterferometerConfig(g1=1.3, g2=0.0, T=0.0, gamma_tau=0.4, input_a=a)
        v = sens.output_variance(c)
        assert v.engine == pytest.approx(0.25, abs=1e-12)
        assert v.closed_form == pytest.approx(0.25, abs=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_paths_agree(self, seed):
        v = sens.output_variance(random_config(np.random.default_rng(seed)))
        assert sens.rel_gap(v.engine, v.closed_form) <= 1e-10

    def test_squeezed_atomic_input_has_no_closed_form(self):
        c = balanced(1.0, input_b=InputSpec("squeezed_coherent", 0.0, 0.0, 0.5))
        with pytest.raises(ValueError):
            sens.closed_form_variance(c)


class TestDeltaPhi:
    def test_coherent_optimum(self):
        r = sens.delta_phi(balanced(1.0, phi=1e-7, input_a=coherent(100)))
        assert r.delta_phi == pytest.approx(0.020998717667337, rel=1e-6)
        assert r.delta_phi == pytest.approx(sens.optimal_delta_phi_coherent(100, 1.0), rel=1e-6)

    def test_squeezed_optimum(self):
        r = sens.delta_phi(balanced(1.0, phi=1e-7, input_a=squeezed(100, 1.0)))
        assert r.delta_phi == pytest.approx(0.020998717667337 * math.exp(-1), rel=1e-6)

    def test_no_gain(self):
        r = sens.delta_phi(balanced(0.0, phi=0.0, input_a=coherent(25)))
        assert r.delta_phi == pytest.approx(1 / (2 * 5), rel=1e-12)

    def test_report_invariants(self):
        r = sens.delta_phi(balanced(1.0, phi=0.2, T=0.8, input_a=coherent(10)))
        assert r.delta_phi == math.sqrt(r.var_X) / abs(r.slope)
        assert r.sql == 1 / math.sqrt(r.n_ph)
        assert r.hl == 1 / r.n_ph
        assert r.path_disagreement < 1e-6

    def test_non_informative(self):
        with pytest.raises(sens.NonInformativePointError, match="non-informative"):
            sens.delta_phi(balanced(1.0, T=0.0, input_a=coherent(4)))

    def test_unknown_baseline(self):
        with pytest.raises(ValueError):
            sens.delta_phi(balanced(1.0, input_a=coherent(4)), baseline="nope")

    def test_post_loss_baseline(self):
        c = balanced(2.0, T=0.6, input_a=squeezed(math.exp(5) / 4, 2.5))
        pre = sens.delta_phi(c, "pre_loss")
        post = sens.delta_phi(c, "post_loss")
        assert post.delta_phi == pre.delta_phi
        assert post.n_ph < pre.n_ph


class TestOptimize:
    @pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
    def test_phi_matches_brute_force(self, g):
        phi_bf, d_bf = brute_force_phi(100, g)
        res = sens.optimize(balanced(g, phi=0.5, input_a=coherent(100)), ["phi"])
        assert res.delta_phi_min == pytest.approx(d_bf, rel=1e-6)
        assert res.delta_phi_min == pytest.approx(sens.optimal_delta_phi_coherent(100, g), rel=1e-6)
        assert abs(res.argmin["phi"]) < 1e-3
        assert abs(phi_bf) < 1e-3

    def test_squeezed_two_parameters(self):
        c = balanced(1.0, phi=0.4, input_a=squeezed(100, 1.0, theta_s=2.0))
        res = sens.optimize(c, ["phi", "theta_s"])
        assert res.delta_phi_min == pytest.approx(sens.optimal_delta_phi_squeezed(100, 1.0, 1.0), rel=1e-6)

    def test_three_parameters(self):
        c = balanced(1.0, phi=0.4, input_a=squeezed(100, 1.0, phase=0.3, theta_s=2.0))
        res = sens.optimize(c, ["phi", "theta_s", "theta_alpha"])
        assert res.delta_phi_min == pytest.approx(sens.optimal_delta_phi_squeezed(100, 1.0, 1.0), rel=1e-6)

    def test_loss_hurts(self):
        a = squeezed(100, 1.0)
        clean = sens.optimize(balanced(1.0, input_a=a), ["phi"]).delta_phi_min
        lossy = sens.optimize(balanced(1.0, T=0.9, gamma_tau=0.05, input_a=a), ["phi"]).delta_phi_min
        assert lossy > clean

    def test_deterministic(self):
        c = balanced(1.5, phi=0.4, input_a=squeezed(30, 0.8, theta_s=1.0))
        assert sens.optimize(c, ["phi", "theta_s"]) == sens.optimize(c, ["phi", "theta_s"])

    def test_flat_landscape(self):
        # vacuum input: the mean never moves, so delta_phi is inf everywhere
        with pytest.raises(sens.NonInformativePointError):
            sens.optimize(balanced(1.0), ["phi"])
        # theta_alpha with zero amplitude and phi fixed is exactly flat
        c = balanced(1.0, phi=0.3, input_b=InputSpec("coherent", 2.0, 0.0), input_a=InputSpec("coherent", 0.0))
        with pytest.raises(sens.FlatLandscapeError):
            sens.optimize(c, ["theta_alpha"])

    @pytest.mark.parametrize("free", [[], ["g1"], ["theta_s"]])
    def test_bad_parameters(self, free):
        with pytest.raises(ValueError):
            sens.optimize(balanced(1.0, input_a=coherent(4)), free)

    def test_golden_section(self):
        x, fx, _ = sens.golden_section(lambda x: (x - 0.3) ** 2, -1, 1, 1e-10)
        assert x == pytest.approx(0.3, abs=1e-9)


class TestLimits:
    def test_values(self):
        assert sens.limits(100) == (0.1, 0.01)
        with pytest.raises(ValueError):
            sens.limits(0)

    def test_hl_ratio_example(self):
        c = balanced(3.0, phi=1e-7, input_a=squeezed(math.exp(5) / 4, 2.5))
        ratio = sens.hl_ratio(c)
        assert ratio == pytest.approx(1.0017, abs=1e-4)
        # the approximate target tanh^2 3 is within 2% of the exact value
        assert abs(ratio / math.tanh(3) ** 2 - 1) < 0.02

    @pytest.mark.parametrize("g", [1.0, 2.0, 3.0])
    def test_hl_ratio_limit(self, g):
        # Exact large-r limit is 1 - 1/(2 cosh^2 g); tanh^2 g = 1 - 1/cosh^2 g only
        # arises once the unit term of 1 + G is dropped from n_ph.
        limit = 1 - 1 / (2 * math.cosh(g) ** 2)
        gaps = []
        for r in (2.0, 2.5, 3.0):
            c = balanced(g, phi=1e-7, input_a=squeezed(math.exp(2 * r) / 4, r))
            gaps.append(abs(sens.hl_ratio(c) - limit))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.06

    def test_coherent_beats_sql_not_hl(self):
        c = balanced(3.0, phi=1e-7, input_a=coherent(math.exp(5) / 4))
        r = sens.delta_phi(c)
        assert r.delta_phi < r.sql
        squeezed_ratio = sens.hl_ratio(c.with_(input_a=squeezed(math.exp(5) / 4, 2.5)))
        assert r.delta_phi * r.n_ph > 5 * squeezed_ratio


class TestMonotonicity:
    @pytest.mark.parametrize("g", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("phi", [1e-4, 0.05])
    def test_figure_axes(self, g, phi):
        a = squeezed(math.exp(5) / 4, 2.5)
        d_T = [sens.delta_phi(balanced(g, phi=phi, T=T, input_a=a)).delta_phi
               for T in np.linspace(0.02, 1, 50)]
        d_G = [sens.delta_phi(balanced(g, phi=phi, gamma_tau=x, input_a=a)).delta_phi
               for x in np.linspace(0, 1, 50)]
        assert np.all(np.diff(d_T) <= 1e-12 * np.abs(d_T[1:]))
        assert np.all(np.diff(d_G) >= -1e-12 * np.abs(d_G[1:]))

    def test_grid_g1(self):
        a = coherent(10)
        grid = np.array([[float(sens.sensitivity_landscape(balanced(1.0, T=T, gamma_tau=x, input_a=a),
                                                           0.05, 0.0, a.alpha_phase))
                          for x in np.linspace(0, 1, 50)] for T in np.linspace(0.02, 1, 50)])
        assert np.all(np.diff(grid, axis=0) <= 1e-12 * grid[1:])

    def test_loss_balancing_counterexample(self):
        # Matching sqrt(T) cosh^2 g to e^{-gamma tau} sinh^2 g restores the
        # amplitude cancellation, so adding dephasing to a lossy arm helps.
        a = squeezed(math.exp(5) / 4, 2.5)
        g, T = 2.0, 0.5
        gt = -math.log(math.sqrt(T) * math.cosh(g) ** 2 / math.sinh(g) ** 2)
        worse = sens.delta_phi(balanced(g, phi=1e-4, T=T, input_a=a)).delta_phi
        better = sens.delta_phi(balanced(g, phi=1e-4, T=T, gamma_tau=gt, input_a=a)).delta_phi
        assert better < worse


class TestHeisenbergBound:
    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_lossless_coherent(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.uniform(0, 2.5)
        a = InputSpec("coherent", rng.uniform(2, 10), rng.uniform(0, 2 * math.pi))
        c = InterferometerConfig(g1=g, g2=g, theta1=rng.uniform(0, 6.3), theta2=rng.uniform(0, 6.3),
                                 phi=rng.uniform(-3, 3), input_a=a)
        try:
            r = sens.delta_phi(c)
        except sens.NonInformativePointError:
            return
        assert r.delta_phi >= r.hl - 1e-12

    def test_squeezed_counterexample(self):
        c = balanced(2.0, phi=1e-7, input_a=squeezed(math.exp(5) / 4, 2.5))
        r = sens.delta_phi(c)
        assert r.delta_phi * r.n_ph == pytest.approx(0.9707, abs=1e-3)


def test_random_inputs_are_physical():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = random_input(rng, 5, 1, kinds=("coherent", "squeezed_coherent"))
        c = balanced(rng.uniform(0, 2), input_a=a, phi=0.2)
        r = sens.delta_phi(c)
        assert r.var_X > 0

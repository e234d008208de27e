import math

import numpy as np
import pytest

from delaywave.chareq import CharKind, Rational, equal_gain_system, eval_char
from delaywave.contour import count_in_disk
from delaywave.polyform import StabilityState, reduce_to_polynomial
from delaywave.regions import (
    RegionSpec,
    SearchExhausted,
    branch_sign_at_zero,
    branch_sign_r,
    branch_sign_strip,
    classify,
    critical_set_E,
    critical_set_strip,
    find_pos_neg_cos,
    hale_two_delay,
    nearest_boundary,
    boundary_side,
    region_boundaries_bisect,
    second_order_at_zero,
    stability_region,
    strip_continuation,
    unit_circle_continuation,
)


# ---------------------------------------------------------------- critical sets


class TestCriticalSetE:
    def test_two_one(self):
        assert critical_set_E(2, 1).values == (-1.0, 0.0)

    def test_four_one(self):
        vals = critical_set_E(4, 1).values
        assert any(abs(v - 0.5) < 1e-12 for v in vals)       # smallest positive element
        assert not any(abs(v + 0.5) < 1e-9 for v in vals)    # no mirror on the negative side
        assert vals[0] == -1.0

    def test_six_one_negative_endpoint(self):
        vals = critical_set_E(6, 1).values
        assert any(abs(v + math.sin(math.pi / 10)) < 1e-12 for v in vals)

    def test_values_in_unit_interval(self):
        for m, n in [(2, 1), (3, 2), (5, 2), (7, 3), (8, 3)]:
            vals = critical_set_E(m, n).values
            assert all(-1.0 <= v <= 1.0 for v in vals)
            assert 0.0 in vals

    def test_validated(self):
        for m, n in [(2, 1), (4, 1), (3, 2), (5, 2), (6, 1)]:
            critical_set_E(m, n, validate=True)

    def test_rejects_tau_one_and_noncoprime(self):
        with pytest.raises(ValueError):
            critical_set_E(1, 1)
        with pytest.raises(ValueError):
            critical_set_E(4, 2)

    def test_each_value_admits_circle_root(self):
        # defining property, checked at the generating angles theta = k pi/|m-n|
        for m, n in [(4, 1), (5, 2)]:
            d = abs(m - n)
            for k in range(2 * d):
                theta = k * math.pi / d
                v = -math.cos(m * theta)
                z = np.exp(1j * theta)
                assert abs(1 + 2 * v * z**m + z ** (2 * n)) < 1e-12


def test_critical_set_strip_contains_known_value():
    # tau = 2.5: g(i 2pi/3) = -0.5
    cs = critical_set_strip(2.5, -2, 2)
    assert cs.source == "C_ab_numeric"
    assert any(abs(v + 0.5) < 1e-9 for v in cs.values)


class TestNearestBoundary:
    def test_values(self):
        assert nearest_boundary(2) == pytest.approx(1.0)
        assert nearest_boundary(4) == pytest.approx(0.5)
        assert nearest_boundary(6) == pytest.approx(math.sin(math.pi / 10))

    def test_sides(self):
        assert boundary_side(2) == -1 and boundary_side(6) == -1
        assert boundary_side(4) == 1 and boundary_side(8) == 1

    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            nearest_boundary(3)


# ---------------------------------------------------------------- branch signs


class TestBranchSigns:
    def test_formula_signs(self):
        assert branch_sign_r(0.5, 4, 1) == -1
        assert branch_sign_r(-1.0, 4, 1) == 1
        assert branch_sign_r(1.0, 3, 2) == -1

    def test_rejects_noncritical(self):
        with pytest.raises(ValueError):
            branch_sign_r(0.37, 4, 1)
        with pytest.raises(ValueError):
            branch_sign_r(0.0, 4, 1)

    def test_continuation_agreement(self):
        lo, hi = unit_circle_continuation(4, 1, 0.5, 1e-5)
        # sign -1: modulus decreasing in c across the critical value
        assert lo > 1.0 > hi

    def test_continuation_sweep_random_critical_points(self):
        # formula sign vs numerical continuation over ~50 critical points
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 50:
            m = int(rng.integers(1, 9))
            n = int(rng.integers(1, 5))
            if m == n or math.gcd(m, n) != 1:
                continue
            values = [v for v in critical_set_E(m, n).values if abs(v) > 1e-9 and abs(abs(v) - 1.0) > 1e-9]
            if not values:
                continue
            c_star = float(values[int(rng.integers(0, len(values)))])
            lo, hi = unit_circle_continuation(m, n, c_star, 1e-5)
            drift = hi - lo
            if abs(drift) < 1e-12:   # tangential branch, continuation inconclusive
                continue
            assert branch_sign_r(c_star, m, n) == (1 if drift > 0 else -1), (m, n, c_star)
            checked += 1

    def test_at_zero_even(self):
        assert branch_sign_at_zero(0, 4, 1) == 1
        assert branch_sign_at_zero(1, 4, 1) == 1
        assert branch_sign_at_zero(0, 2, 1) == -1
        assert branch_sign_at_zero(1, 2, 1) == -1

    def test_at_zero_odd_m_defers(self):
        for k in (0, 1):
            assert branch_sign_at_zero(k, 3, 1) == 0
        assert second_order_at_zero(0, 3) == -4.0
        assert second_order_at_zero(0, 5) < 0

    def test_second_order_continuation(self):
        # n = 1, m = 3: both branches dip inside for either sign of c
        for dc in (1e-4, -1e-4):
            lo, hi = unit_circle_continuation(3, 1, 0.0, abs(dc))
            assert lo < 1.0 + 1e-12 and hi < 1.0 + 1e-12

    def test_at_zero_mixed_signs_n2(self):
        signs = {branch_sign_at_zero(k, 3, 2) for k in range(4)}
        assert 1 in signs and -1 in signs

    def test_strip_formula_table(self):
        assert branch_sign_strip(0.6, 2.0) == 1
        assert branch_sign_strip(-0.6, 2.0) == -1
        assert branch_sign_strip(0.6, 0.5) == -1
        with pytest.raises(ValueError):
            branch_sign_strip(0.0, 2.0)

    def test_strip_continuation(self):
        # tau = 2.5, c* = -0.5 at beta0 = 2pi/3: formula sign is -1
        re_lo, re_hi = strip_continuation(2.5, -0.5, 2 * np.pi / 3, 1e-5)
        assert branch_sign_strip(-0.5, 2.5) == -1
        assert re_lo > 0 > re_hi


class TestFindPosNegCos:
    def test_known_values(self):
        j, l = find_pos_neg_cos(2.5, 5)
        assert math.cos(2.5 * (j + 0.5) * math.pi) > 0
        assert math.cos(2.5 * (l + 0.5) * math.pi) < 0
        assert j == 1  # cos(3.75 pi) > 0 is the smallest-|index| hit

    def test_both_signs_within_ten(self):
        j, l = find_pos_neg_cos(4.2, 10)
        assert math.cos(4.2 * (j + 0.5) * math.pi) > 0
        assert math.cos(4.2 * (l + 0.5) * math.pi) < 0

    def test_even_integer_degenerate(self):
        # tau = 2: cos(2(k+1/2)pi) = -1 for every k; the positive sign
        # genuinely does not exist and the bounded search must say so
        with pytest.raises(SearchExhausted):
            find_pos_neg_cos(2.0, 50)


# ---------------------------------------------------------------- regions


class TestStabilityRegion:
    def test_cascade_windows(self):
        r2 = stability_region(2.0, CharKind.CASCADE_EQUAL_GAINS)
        assert (r2.lower, r2.upper, r2.empty) == (-1.0, 0.0, False)
        r4 = stability_region(4.0, CharKind.CASCADE_EQUAL_GAINS)
        assert r4.lower == 0.0 and r4.upper == pytest.approx(0.5)
        r6 = stability_region(6.0, CharKind.CASCADE_EQUAL_GAINS)
        assert r6.lower == pytest.approx(-math.sin(math.pi / 10)) and r6.upper == 0.0

    def test_direct_windows(self):
        r2 = stability_region(2.0, CharKind.DIRECT_DELAY_FEEDBACK)
        assert r2.lower == pytest.approx(-1.0) and r2.upper == 0.0
        r4 = stability_region(4.0, CharKind.DIRECT_DELAY_FEEDBACK)
        assert r4.upper == pytest.approx(math.tan(math.pi / 8))

    def test_everything_else_empty(self):
        for tau in (0.5, 1.0, 1.5, 2.5, 3.0, 5.0, math.pi, math.sqrt(2)):
            assert stability_region(tau, CharKind.CASCADE_EQUAL_GAINS).empty
            assert stability_region(tau, CharKind.DIRECT_DELAY_FEEDBACK).empty

    def test_full_kind_rejected(self):
        with pytest.raises(ValueError):
            stability_region(2.0, CharKind.CASCADE_FULL)

    def test_region_spec_invariant(self):
        with pytest.raises(ValueError):
            RegionSpec.interval(1.0, 1.0)


class TestHale:
    def test_unit_wave_coefficient_kills_stability(self):
        assert not hale_two_delay(-1.0, 0.3, 0.2)
        assert not hale_two_delay(-1.0, 0.0, 0.0)

    def test_generic(self):
        assert hale_two_delay(0.0, 0.3, 0.2)
        assert not hale_two_delay(0.5, 1.0, 1.0)


# ---------------------------------------------------------------- classifier


class TestClassify:
    def test_stable(self):
        v = classify(equal_gain_system(-0.25, 2.0))
        assert v.state is StabilityState.STABLE and v.witness is None

    def test_tau_one_witnessed(self):
        v = classify(equal_gain_system(0.7, 1.0))
        assert v.state is not StabilityState.STABLE
        assert v.witness is not None
        s = equal_gain_system(0.7, 1.0)
        assert abs(eval_char(s, v.witness)) < 1e-9

    def test_tau_three_never_stable(self):
        for c in np.linspace(-2, 2, 21):
            v = classify(equal_gain_system(float(c), 3.0))
            assert v.state is not StabilityState.STABLE

    def test_irrational_path(self):
        s = equal_gain_system(0.7, math.sqrt(2))
        v = classify(s, treat_as_irrational=True)
        assert v.state is StabilityState.UNSTABLE
        assert abs(eval_char(s, v.witness)) < 1e-9
        assert v.witness.real >= -1e-8

    def test_two_gain_rational(self):
        from delaywave.chareq import DelayGains, DelaySystem

        s = DelaySystem(DelayGains(0.3, -0.2), 1.5, Rational(3, 2))
        v = classify(s)
        assert v.state is not StabilityState.STABLE
        assert abs(eval_char(s, v.witness)) < 1e-9

    def test_two_gain_irrational(self):
        from delaywave.chareq import DelayGains, DelaySystem

        s = DelaySystem(DelayGains(0.5, 0.2), math.sqrt(2))
        v = classify(s, treat_as_irrational=True)
        assert v.state is StabilityState.UNSTABLE
        assert abs(eval_char(s, v.witness)) < 1e-9

    def test_no_small_rational_raises(self):
        s = equal_gain_system(0.7, math.pi)
        with pytest.warns(UserWarning):
            with pytest.raises(ValueError):
                classify(s)

    def test_marginal_endpoints(self):
        for c in (-1.0, 0.0):
            v = classify(equal_gain_system(c, 2.0))
            assert v.state is StabilityState.MARGINAL
            assert abs(v.witness.real) < 1e-9

    def test_region_oracle_agreement(self):
        for tau in (2.0, 4.0, 6.0, 8.0):
            region = stability_region(tau, CharKind.CASCADE_EQUAL_GAINS)
            width = region.upper - region.lower
            mid = 0.5 * (region.lower + region.upper)
            for c in np.linspace(mid - width, mid + width, 401):
                c = float(round(c, 12))
                state = classify(equal_gain_system(c, tau)).state
                if region.contains(c) and abs(c - region.lower) > 1e-9 and abs(c - region.upper) > 1e-9:
                    assert state is StabilityState.STABLE, (tau, c)
                elif not region.contains(c):
                    assert state is not StabilityState.STABLE, (tau, c)

    def test_direct_feedback_region_oracle_agreement(self):
        from delaywave.chareq import direct_feedback_system

        for tau in (2.0, 4.0):
            region = stability_region(tau, CharKind.DIRECT_DELAY_FEEDBACK)
            width = region.upper - region.lower
            mid = 0.5 * (region.lower + region.upper)
            for c in np.linspace(mid - width, mid + width, 201):
                c = float(round(c, 12))
                state = classify(direct_feedback_system(c, tau)).state
                if region.contains(c) and abs(c - region.lower) > 1e-9 and abs(c - region.upper) > 1e-9:
                    assert state is StabilityState.STABLE, (tau, c)
                elif not region.contains(c):
                    assert state is not StabilityState.STABLE, (tau, c)

    def test_region_endpoints_marginal(self):
        for tau in (2.0, 4.0, 6.0, 8.0):
            region = stability_region(tau, CharKind.CASCADE_EQUAL_GAINS)
            for c in (region.lower, region.upper):
                v = classify(equal_gain_system(c, tau))
                assert v.state is StabilityState.MARGINAL, (tau, c)
                assert abs(v.witness.real) < 1e-9


class TestCountingMonotonicity:
    def test_constant_between_critical_values(self):
        # N(c) constant on every interval of R \ E: probe midpoints and
        # near-endpoint values of each bounded interval
        m, n = 4, 1
        vals = critical_set_E(m, n).values
        for lo, hi in zip(vals[:-1], vals[1:]):
            probes = [0.5 * (lo + hi), lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo)]
            counts = {
                count_in_disk(reduce_to_polynomial(equal_gain_system(c, 4.0, Rational(4, 1))))
                for c in probes
            }
            assert len(counts) == 1

    def test_monotone_counting_tau_gt_one(self):
        for m, n in [(4, 1), (5, 2)]:
            vals = list(critical_set_E(m, n).values) + [-1.2, 1.2]
            vals = sorted(set(vals))
            mids = [0.5 * (a + b) for a, b in zip(vals[:-1], vals[1:])]
            tau = Rational(m, n)
            for side in (1.0, -1.0):
                probes = sorted([v for v in mids if v * side > 0], key=abs)
                counts = [
                    count_in_disk(reduce_to_polynomial(equal_gain_system(v, tau.value, tau)))
                    for v in probes
                ]
                assert counts == sorted(counts)


class TestBisectedBoundaries:
    def test_cascade_tau_two(self):
        lo, hi = region_boundaries_bisect(2.0, CharKind.CASCADE_EQUAL_GAINS, tol=1e-7)
        assert lo == pytest.approx(-1.0, abs=1e-6)
        assert hi == pytest.approx(0.0, abs=1e-6)

    def test_empty_region_returns_none(self):
        assert region_boundaries_bisect(3.0, CharKind.CASCADE_EQUAL_GAINS) is None

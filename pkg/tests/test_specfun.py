import math

import numpy as np
import pytest
import scipy.special as sp
import scipy.stats as st
from hypothesis import given
from hypothesis import strategies as st_h

from xpmfocus import specfun
from xpmfocus.specfun import (DomainError, gamma0, gaussian_q, i0_upper_bound, i0_upper_bound_scaled,
                              i0e, marcum_q, marcum_q_bounds, marcum_q_complement)

# reference values from 30-digit mpmath (Bessel series / quadrature)
I0E_REF = {
    1.0: 0.465759607593640436501901529563,
    50.0: 0.0565616266474541925299391880156,
    0.1: 0.907100925782301091651761575229,
    4.0: 0.20700192122398669789508084796,
    7.5: 0.148315830077395502838382855063,
    15.0: 0.103899531448822721430993588873,
    700.0: 0.0150812956515313575869861745293,
}
E1_REF = {
    1.0: 0.21938393439552027367716377546,
    0.1: 1.822923958419390615852346906,
    0.5: 0.559773594776160811746795939315,
    10.0: 4.15696892968532427740285981028e-06,
    100.0: 3.68263345040965196643598334114e-46,
}
Q_REF = {
    1.96: 0.0249978951482204362128236923956,
    5.0: 2.86651571879193911673752332875e-07,
    8.0: 6.22096057427178412351599517262e-16,
    -3.0: 0.998650101968369905473348185232,
}
MARCUM_REF = {
    (1.0, 2.0): 0.26901206003590999667851695922,
    (2.0, 1.0): 0.918107696369406003910569560262,
    (3.0, 3.0): 0.567479762290861506444900274426,
    (5.0, 8.0): 0.00174255159093908345375013862628,
    (10.0, 4.0): 0.999999999386621636994392833311,
    (0.5, 0.2): 0.982503611016923037926123672356,
}


def _i0_series_oracle(z, terms=80):
    # plain power series in exact-ish float summation, for moderate z only
    return math.fsum((z / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


class TestI0e:
    def test_zero(self):
        assert i0e(0.0) == 1.0

    @pytest.mark.parametrize("z", sorted(I0E_REF))
    def test_reference_values(self, z):
        assert i0e(z) == pytest.approx(I0E_REF[z], rel=1e-10)

    def test_series_oracle_at_one(self):
        assert i0e(1.0) == pytest.approx(_i0_series_oracle(1.0) * math.exp(-1.0), rel=1e-14)

    def test_quadrature_oracle_at_fifty(self):
        from scipy.integrate import quad
        v, _ = quad(lambda t: math.exp(50 * (math.cos(t) - 1)), 0, math.pi, epsabs=0, epsrel=1e-13)
        assert i0e(50.0) == pytest.approx(v / math.pi, rel=1e-10)

    def test_against_scipy_log_grid(self):
        z = np.logspace(-3, math.log10(700), 500)
        np.testing.assert_allclose(i0e(z), sp.i0e(z), rtol=1e-10)

    def test_huge_argument_does_not_overflow(self):
        v = i0e(1e300)
        assert 0 < v < 1e-150 and math.isfinite(v)

    def test_branches_agree_at_switch(self):
        z = np.linspace(specfun.I0_SERIES_MAX, 25, 50)
        np.testing.assert_allclose(specfun._i0e_series(z), specfun._i0e_asymptotic(z), rtol=1e-10)

    @pytest.mark.parametrize("bad", [-1.0, math.inf, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            i0e(bad)

    def test_array_shape_kept(self):
        assert i0e(np.ones((2, 3))).shape == (2, 3)


class TestI0UpperBound:
    @pytest.mark.parametrize("z, expected", [(1.0, 2.4090145473), (0.1, 3.0972366442), (4.0, 24.193175320)])
    def test_values_dominate_i0(self, z, expected):
        b = i0_upper_bound(z)
        assert b == pytest.approx(expected, rel=1e-9)
        assert b >= _i0_series_oracle(z)

    def test_overflow_is_inf(self):
        assert i0_upper_bound(1000.0) == math.inf

    @pytest.mark.parametrize("bad", [0.0, -2.0])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            i0_upper_bound(bad)

    @given(st_h.floats(min_value=1e-3, max_value=700))
    def test_scaled_bound_dominates(self, z):
        assert i0_upper_bound_scaled(z) > i0e(z)


class TestGamma0:
    @pytest.mark.parametrize("x", sorted(E1_REF))
    def test_reference_values(self, x):
        assert gamma0(x) == pytest.approx(E1_REF[x], rel=1e-8)

    def test_tiny_at_hundred(self):
        assert gamma0(100.0) < 1e-45

    def test_quadrature_oracle(self):
        from scipy.integrate import quad
        for x in (0.3, 0.99, 1.0, 1.01, 3.0):
            v, _ = quad(lambda t: math.exp(-t) / t, x, math.inf, epsabs=0, epsrel=1e-12)
            assert gamma0(x) == pytest.approx(v, rel=1e-8)

    def test_matches_scipy_on_grid(self):
        for x in np.logspace(-4, 2.5, 300):
            assert gamma0(x) == pytest.approx(sp.exp1(x), rel=1e-8)

    @given(st_h.floats(min_value=1e-3, max_value=80), st_h.floats(min_value=1e-3, max_value=1.0))
    def test_strictly_decreasing(self, x, dx):
        assert gamma0(x + dx) < gamma0(x)

    @given(st_h.floats(min_value=2.0, max_value=600))
    def test_asymptotic_envelope(self, x):
        assert gamma0(x) - (math.exp(-x) / x - math.exp(-x) / x ** 2) >= 0

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            gamma0(bad)


class TestGaussianQ:
    def test_half_at_zero(self):
        assert gaussian_q(0.0) == 0.5

    @pytest.mark.parametrize("z", sorted(Q_REF))
    def test_reference_values(self, z):
        assert gaussian_q(z) == pytest.approx(Q_REF[z], rel=1e-10)

    @given(st_h.floats(min_value=-40, max_value=40))
    def test_symmetry(self, z):
        assert abs(gaussian_q(z) + gaussian_q(-z) - 1.0) <= 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            gaussian_q(math.nan)


class TestMarcumQ:
    @pytest.mark.parametrize("a", [0.0, 0.5, 3.0, 40.0])
    def test_b_zero_is_one(self, a):
        assert marcum_q(a, 0.0) == 1.0

    @pytest.mark.parametrize("b", [0.1, 1.0, 5.0, 30.0])
    def test_rayleigh_tail(self, b):
        assert marcum_q(0.0, b) == pytest.approx(math.exp(-b * b / 2), rel=1e-12)

    @pytest.mark.parametrize("ab", sorted(MARCUM_REF))
    def test_reference_values(self, ab):
        assert marcum_q(*ab) == pytest.approx(MARCUM_REF[ab], abs=1e-12)

    def test_against_noncentral_chi2_grid(self):
        worst = 0.0
        for a in np.linspace(0.01, 50, 26):
            for b in np.linspace(0.0, 50, 26):
                worst = max(worst, abs(marcum_q(a, b) - st.ncx2.sf(b * b, 2, a * a)))
        assert worst <= 1e-9

    def test_complement_keeps_relative_accuracy(self):
        # 1 - Q(10, 4) ~ 6e-10 would lose digits by subtraction
        ref = st.ncx2.cdf(16.0, 2, 100.0)
        assert marcum_q_complement(10.0, 4.0) == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("a, b", [(63.0, 60.0), (64.0, 66.0), (200.0, 195.0), (1e4, 1e4 + 4)])
    def test_large_argument_path(self, a, b):
        assert marcum_q(a, b) == pytest.approx(st.ncx2.sf(b * b, 2, a * a), rel=1e-9, abs=1e-14)
        assert marcum_q_complement(a, b) == pytest.approx(st.ncx2.cdf(b * b, 2, a * a), rel=1e-9, abs=1e-14)

    def test_methods_agree_at_switch(self):
        for a, b in [(60.0, 58.0), (62.0, 63.5), (55.0, 50.0)]:
            s = specfun._marcum_series(a, b)
            q = specfun._marcum_quadrature(a, b)
            assert s[0] == pytest.approx(q[0], rel=1e-9)
            assert s[1] == pytest.approx(q[1], rel=1e-8)

    @given(st_h.floats(0, 30), st_h.floats(0, 30), st_h.floats(0.01, 3))
    def test_monotone(self, a, b, d):
        assert marcum_q(a, b + d) <= marcum_q(a, b) + 1e-15
        assert marcum_q(a + d, b) >= marcum_q(a, b) - 1e-15

    def test_domain(self):
        with pytest.raises(DomainError):
            marcum_q(-1.0, 1.0)
        with pytest.raises(DomainError):
            marcum_q(1.0, -1.0)


class TestMarcumBounds:
    def test_upper_when_b_above(self):
        lo, hi = marcum_q_bounds(1.0, 2.0)
        assert (lo, hi) == (0.0, pytest.approx(0.606530659712633, rel=1e-12))
        assert marcum_q(1.0, 2.0) <= hi

    def test_lower_when_b_below(self):
        lo, hi = marcum_q_bounds(2.0, 1.0)
        assert lo == pytest.approx(0.702289168412804, rel=1e-12)
        assert hi == 1.0
        assert marcum_q(2.0, 1.0) >= lo

    def test_boundary_is_trivial(self):
        assert marcum_q_bounds(3.0, 3.0) == (0.0, 1.0)

    @given(st_h.floats(0, 20), st_h.floats(0, 20))
    def test_sandwich(self, a, b):
        lo, hi = marcum_q_bounds(a, b)
        q = marcum_q(a, b)
        assert lo - 1e-15 <= q <= hi + 1e-15

    @given(st_h.floats(0.1, 20), st_h.floats(0, 20))
    def test_loosened_complement(self, a, b):
        if b < a:
            assert marcum_q_complement(a, b) <= specfun.marcum_complement_upper(a, b) + 1e-15

    def test_bound_row(self):
        row = specfun.lemma_check(2.0)
        assert row.satisfied and row.margin > 0 and row.direction == "upper"

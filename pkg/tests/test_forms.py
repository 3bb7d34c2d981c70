"""Tests for the truncated function-theory evaluator.

Oracle values are computed inline by independent means (hand-reduced
identity terms, trapezoidal residue integrals, Richardson limits, finite
differences of independently summed series), never by calling the code
under test a second way that shares the suspect logic.
"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schottky.forms import (
    ConfigurationError,
    ContourSpec,
    ConvergenceError,
    FormValue,
    PoleProximityError,
    QuadratureError,
    SurfaceForms,
    kernel_seed,
    origin_clearing_translation,
)
from schottky.group import (
    ClassicalParams,
    InvalidParameterError,
    MobiusMap,
    SchottkyParams,
    TruncationPolicy,
    classical_from_params,
    generator_map,
    mobius_act_on_params,
    params_from_classical,
)


@pytest.fixture(scope="module")
def torus_forms(torus_params):
    return SurfaceForms(torus_params, TruncationPolicy(max_word_length=12, tol=1e-9))


@pytest.fixture(scope="module")
def genus2_forms(genus2_params):
    return SurfaceForms(genus2_params, TruncationPolicy(max_word_length=6, tol=1e-8))


def trapezoid_loop(f, center, radius, n=256):
    """(1/2 pi i) oint f(z) dz over the circle, independent quadrature."""
    total = 0.0 + 0.0j
    for k in range(n):
        z = center + radius * cmath.exp(2j * math.pi * k / n)
        total += f(z) * (z - center)
    return total / n


class TestSeedKernel:
    def test_single_point_seed_is_third_kind_identity_term(self):
        # (1/(x-y)) * (y-0)/(x-0) = 1/(x-y) - 1/x; at x=2, y=1 both give 1/2.
        assert kernel_seed(2.0, 1.0, (0.0,)) == pytest.approx(0.5)
        x, y = 1.7 - 0.3j, -0.4 + 2.1j
        assert kernel_seed(x, y, (0.0,)) == pytest.approx(1 / (x - y) - 1 / x)

    def test_three_point_seed_worked_example(self):
        # (1/(3-1)) * ((1-0)(1+2)(1-5)) / ((3-0)(3+2)(3-5))
        #   = (1/2) * (1*3*(-4)) / (3*5*(-2)) = (1/2)(-12/-30) = 0.2
        assert kernel_seed(3.0, 1.0, (0.0, -2.0, 5.0)) == pytest.approx(0.2)

    def test_diagonal_pole_rejected(self):
        with pytest.raises(PoleProximityError):
            kernel_seed(1.0, 1.0, (0.0,))


class TestThirdKind:
    def test_identity_term_only_at_length_zero(self, torus_params):
        F = SurfaceForms(torus_params, TruncationPolicy(max_word_length=0))
        v = F.third_kind_form(2.0, 1.0)
        assert v.value == pytest.approx(0.5)
        assert math.isinf(v.tail)
        assert (v.weight_x, v.weight_y) == (1, 0)

    def test_residue_plus_one_at_pole_location(self, torus_forms):
        # Independent trapezoidal residue over a small circle around y.
        y = 2.3 + 0.4j
        res = trapezoid_loop(
            lambda z: torus_forms.third_kind_form(z, y).value, y, 1e-2
        )
        assert abs(res - 1.0) < 1e-10

    def test_residue_minus_one_at_origin(self, torus_forms):
        y = 2.3 + 0.4j
        res = trapezoid_loop(
            lambda z: torus_forms.third_kind_form(z, y).value, 0.0, 1e-2
        )
        assert abs(res + 1.0) < 1e-10

    def test_second_argument_may_enter_discs(self, torus_forms):
        # The continuation in y is what quasi-period checks evaluate.
        g1 = generator_map(torus_forms.sp, 1)
        inside = complex(g1(2.0 + 1.0j))
        v = torus_forms.third_kind_form(0.3 + 0.5j, inside)
        assert np.isfinite(v.value)

    def test_first_argument_must_be_exterior(self, torus_forms):
        inside = torus_forms.sp.center(1)
        with pytest.raises(InvalidParameterError):
            torus_forms.third_kind_form(inside, 2.0 + 1.0j)

    def test_pole_collision_guarded(self, torus_forms):
        x = 0.3 + 0.5j
        g1 = generator_map(torus_forms.sp, 1)
        with pytest.raises(PoleProximityError):
            torus_forms.third_kind_form(x, complex(g1(x)))


class TestBidifferential:
    def test_double_pole_normalization(self, genus2_forms):
        # (x-y)^2 * omega -> 1 as x -> y; compare two offsets, the
        # remainder is analytic so the error scales down with h.
        y = 0.55 + 0.35j
        vals = []
        for h in (1e-3, 5e-4):
            x = y + h
            vals.append(genus2_forms.bidifferential(x, y).value * h * h)
        assert abs(vals[1] - 1.0) < 1e-5
        assert abs(vals[1] - 1.0) < abs(vals[0] - 1.0)

    def test_symmetry_within_tails(self, genus2_forms):
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        a = genus2_forms.bidifferential(x, y)
        b = genus2_forms.bidifferential(y, x)
        assert abs(a.value - b.value) <= 100 * (a.tail + b.tail) + 1e-12

    def test_alpha_periods_vanish(self, genus2_forms):
        # Second-kind differential: no residues, so the loop around a
        # disc picks up nothing.
        sp = genus2_forms.sp
        y = 2.5 + 2.1j
        for b in (-1, 2):
            val = trapezoid_loop(
                lambda z: genus2_forms.bidifferential(z, y).value,
                sp.center(b),
                sp.radius(b) * 1.05,
                n=128,
            )
            assert abs(val) < 1e-9

    def test_y_derivative_matches_finite_difference(self, genus2_forms):
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        h = 1e-5
        fd = (
            genus2_forms.bidifferential(x, y + h).value
            - genus2_forms.bidifferential(x, y - h).value
        ) / (2 * h)
        an = genus2_forms.bidifferential_dsecond(x, y).value
        assert abs(an - fd) < 1e-7 * max(1.0, abs(an))

    def test_x_derivative_matches_finite_difference(self, genus2_forms):
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        h = 1e-5
        fd = (
            genus2_forms.bidifferential(x + h, y).value
            - genus2_forms.bidifferential(x - h, y).value
        ) / (2 * h)
        an = genus2_forms.bidifferential_dfirst(x, y).value
        assert abs(an - fd) < 1e-7 * max(1.0, abs(an))


class TestHolomorphicForms:
    def test_genus1_closed_form(self, torus_forms):
        # On a once-handled surface the normalized form is
        # 1/(x - W_attracting) - 1/(x - W_repelling), whose loop integral
        # around the attracting-side disc is +1.
        cp = classical_from_params(torus_forms.sp)
        Wp, Wm = cp.W_plus[0], cp.W_minus[0]
        for x in (0.37 + 0.41j, -2.0 + 0.3j):
            nu = torus_forms.holomorphic_form(1, x)
            closed = 1 / (x - Wm) - 1 / (x - Wp)
            assert abs(nu.value - closed) < 1e-12

    def test_normalization_kronecker_delta(self, genus2_forms):
        sp = genus2_forms.sp
        for b in (1, 2):
            for c in (1, 2):
                val = trapezoid_loop(
                    lambda z: genus2_forms.holomorphic_form(c, z).value,
                    sp.center(-b),
                    sp.radius(-b) * 1.05,
                    n=128,
                )
                assert abs(val - (1.0 if b == c else 0.0)) < 1e-7

    def test_invariance_under_generators(self, genus2_forms):
        # nu(gamma_a x) gamma_a'(x) = nu(x) up to truncation resummation.
        # The isometric circle of a maps onto the circle of -a, so both
        # evaluation points stay on the domain boundary.
        sp = genus2_forms.sp
        for a in (1, 2):
            g = generator_map(sp, a)
            x = sp.center(a) + sp.radius(a) * cmath.exp(0.9j)
            gx = complex(g(x))
            for c in (1, 2):
                v1 = genus2_forms.holomorphic_form(c, x)
                v2 = genus2_forms.holomorphic_form(c, gx)
                moved = v2.value * complex(g.derivative(x))
                assert abs(moved - v1.value) < 1e-5

    def test_derivative_matches_finite_difference(self, genus2_forms):
        x = 0.45 - 0.3j
        h = 1e-5
        for a in (1, 2):
            fd = (
                genus2_forms.holomorphic_form(a, x + h).value
                - genus2_forms.holomorphic_form(a, x - h).value
            ) / (2 * h)
            an = genus2_forms.holomorphic_form_derivative(a, x).value
            assert abs(an - fd) < 1e-7 * max(1.0, abs(an))

    def test_probe_override_changes_nothing(self, genus2_params):
        base = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=6))
        p0, p1 = base.probes
        alt = SurfaceForms(
            genus2_params,
            TruncationPolicy(max_word_length=6),
            probes=(p0 * cmath.exp(0.4j), p1 * cmath.exp(0.4j)),
        )
        x = 0.45 - 0.3j
        v1 = base.holomorphic_form(1, x)
        v2 = alt.holomorphic_form(1, x)
        assert abs(v1.value - v2.value) < 1e-8

    def test_interior_probe_rejected(self, genus2_params):
        c = genus2_params.center(1)
        with pytest.raises(InvalidParameterError):
            SurfaceForms(
                genus2_params,
                TruncationPolicy(max_word_length=4),
                probes=(c, 5.0 + 5.0j),
            )


class TestProjectiveConnection:
    def test_regularized_diagonal_limit(self, genus2_forms):
        # s(x) = 6 lim_{y->x} (omega(x,y) - 1/(x-y)^2); the bracket is
        # analytic in y at x, so two offsets Richardson-extrapolate the
        # limit with O(h^2) error.
        x = 0.55 + 0.3j
        def bracket(h):
            y = x + h
            h_eff = y - x  # the representable offset, so the pole term
            om = genus2_forms.bidifferential(x, y).value  # cancels exactly
            return 6.0 * (om - 1.0 / (h_eff * h_eff))
        e1, e2, e3 = bracket(1e-3), bracket(5e-4), bracket(2.5e-4)
        r1 = 2.0 * e2 - e1
        r2 = 2.0 * e3 - e2
        richardson = (4.0 * r2 - r1) / 3.0
        s = genus2_forms.projective_connection(x).value
        assert abs(s - richardson) < 1e-7 * max(1.0, abs(s))

    def test_empty_sum_at_length_zero(self, torus_params):
        F = SurfaceForms(torus_params, TruncationPolicy(max_word_length=0))
        assert F.projective_connection(2.0).value == 0.0

    def test_quadratic_differential_under_conjugation(self, genus2_params):
        # Conjugating the group by a Mobius map m sends each summand to
        # itself divided by m'(x)^2 exactly (word-by-word), so
        # s_conj(m x) m'(x)^2 = s(x) to machine precision.
        m = MobiusMap(1.0, 0.15 - 0.1j, 0.02, 1.0).normalized()
        moved = mobius_act_on_params(genus2_params, m)
        F = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=5))
        G = SurfaceForms(moved, TruncationPolicy(max_word_length=5))
        x = 0.55 + 0.3j
        mx = complex(m(x))
        dm = complex(m.derivative(x))
        lhs = G.projective_connection(mx).value * dm * dm
        rhs = F.projective_connection(x).value
        assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(rhs))

    def test_derivative_matches_finite_difference(self, genus2_forms):
        x = 0.55 + 0.3j
        h = 1e-5
        fd = (
            genus2_forms.projective_connection(x + h).value
            - genus2_forms.projective_connection(x - h).value
        ) / (2 * h)
        an = genus2_forms.projective_connection_derivative(x).value
        assert abs(an - fd) < 1e-7 * max(1.0, abs(an))


class TestPowerKernels:
    def test_identity_term(self, genus2_params):
        F = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=0))
        x, y = 2.6, 1.0 - 0.4j
        v = F.power_bidifferential(x, y, 2)
        assert v.value == pytest.approx(1.0 / (x - y) ** 4)
        assert (v.weight_x, v.weight_y) == (2, 2)

    def test_weight_one_is_bidifferential(self, genus2_forms):
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        a = genus2_forms.power_bidifferential(x, y, 1)
        b = genus2_forms.bidifferential(x, y)
        assert a.value == pytest.approx(b.value)

    def test_third_y_derivative_of_weight2_kernel(self, genus2_forms):
        # Summand-by-summand, (1/3!) d^3/dy^3 of the weight-2 kernel is
        # the squared-bidifferential summand: the seed's cubic numerator
        # drops out after three derivatives and the basis-point product
        # cancels, leaving (gamma'x)^2/(gamma x - y)^4.  Verify with a
        # five-point third-difference plus Richardson.
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        def third(h):
            f = lambda t: genus2_forms.recursion_kernel(x, t, 2).value
            return (
                -f(y - 2 * h) + 2 * f(y - h) - 2 * f(y + h) + f(y + 2 * h)
            ) / (2 * h**3)
        d3 = (16.0 * third(0.0025) - third(0.005)) / 15.0
        lam = genus2_forms.power_bidifferential(x, y, 2).value
        assert abs(d3 / 6.0 - lam) < 1e-5 * max(1.0, abs(lam))


class TestRecursionKernel:
    def test_weight_one_matches_third_kind(self, genus2_forms):
        x, y = 0.6 + 0.2j, 2.4 - 1.0j
        a = genus2_forms.recursion_kernel(x, y, 1)
        b = genus2_forms.third_kind_form(x, y)
        assert a.value == pytest.approx(b.value)

    def test_identity_term_with_fixed_point_basis(self, genus2_params):
        F = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=0))
        x, y = 2.6 + 0.3j, -1.9 + 2.2j
        v = F.recursion_kernel(x, y, 2)
        assert v.value == pytest.approx(kernel_seed(x, y, F._seed_points(2)))
        assert (v.weight_x, v.weight_y) == (2, -1)

    def test_diagonal_residue_one(self, genus2_forms):
        y = 0.5 - 0.6j
        res = trapezoid_loop(
            lambda z: genus2_forms.recursion_kernel(z, y, 2).value, y, 1e-2
        )
        assert abs(res - 1.0) < 1e-9

    def test_weight_two_needs_three_basis_points(self, torus_params):
        F = SurfaceForms(torus_params, TruncationPolicy(max_word_length=4))
        with pytest.raises(ConfigurationError):
            F.recursion_kernel(2.0, 1.0 + 1.0j, 2)

    def test_invariance_in_first_argument(self, genus2_forms):
        sp = genus2_forms.sp
        y = 2.4 - 1.0j
        g = generator_map(sp, 2)
        x = sp.center(2) + sp.radius(2) * cmath.exp(0.9j)
        gx = complex(g(x))
        v1 = genus2_forms.recursion_kernel(x, y, 2).value
        v2 = genus2_forms.recursion_kernel(gx, y, 2).value
        moved = v2 * complex(g.derivative(x)) ** 2
        assert abs(moved - v1) < 1e-5 * max(1.0, abs(v1))

    def test_y_derivative_matches_finite_difference(self, genus2_forms):
        x, y = 0.6 + 0.2j, 2.4 - 1.0j
        h = 1e-5
        fd = (
            genus2_forms.recursion_kernel(x, y + h, 2).value
            - genus2_forms.recursion_kernel(x, y - h, 2).value
        ) / (2 * h)
        an = genus2_forms.recursion_kernel_dy(x, y, 2).value
        assert abs(an - fd) < 1e-7 * max(1.0, abs(an))

    def test_alternative_basis_ordering_admissible(self, genus2_params):
        # A different ordering of the limit points yields a different
        # (equally valid) kernel: same diagonal residue, and its own
        # quasi-period coefficients still reconstruct its quasi-periods.
        base = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=6))
        reordered = SurfaceForms(
            genus2_params,
            TruncationPolicy(max_word_length=6),
            limit_points=tuple(reversed(base.limit_points)),
        )
        y = 0.5 - 0.6j
        res = trapezoid_loop(
            lambda z: reordered.recursion_kernel(z, y, 2).value, y, 1e-2
        )
        assert abs(res - 1.0) < 1e-9
        sp = genus2_params
        x = 0.5 + 0.3j
        a = 2
        ths = [reordered.quasiperiod_coefficient(2, a, l, x) for l in range(3)]
        g = generator_map(sp, a)
        wa = sp.center(a)
        yy = 0.35 - 0.5j
        lhs = (
            reordered.recursion_kernel(x, yy, 2).value
            - reordered.recursion_kernel(x, complex(g(yy)), 2).value
            / complex(g.derivative(yy))
        )
        rhs = sum(t.value * (yy - wa) ** l for l, t in enumerate(ths))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


class TestQuasiPeriods:
    def test_weight_one_coefficient_is_minus_one_form(self, torus_forms):
        x = 0.37 + 0.41j
        th = torus_forms.quasiperiod_coefficient(1, 1, 0, x)
        nu = torus_forms.holomorphic_form(1, x)
        assert abs(th.value + nu.value) < 1e-12

    def test_weight_one_reconstruction(self, torus_forms):
        x = 0.37 + 0.41j
        th = torus_forms.quasiperiod_coefficient(1, 1, 0, x)
        g1 = generator_map(torus_forms.sp, 1)
        for y in (2.0 + 1.0j, -0.2 + 2.2j):
            lhs = (
                torus_forms.third_kind_form(x, y).value
                - torus_forms.third_kind_form(x, complex(g1(y))).value
            )
            assert abs(lhs - th.value) < 1e-12

    def test_weight_two_reconstruction(self, genus2_forms):
        sp = genus2_forms.sp
        x = 0.5 + 0.3j
        rng = np.random.default_rng(7)
        for a in (1, 2):
            ths = [
                genus2_forms.quasiperiod_coefficient(2, a, l, x) for l in range(3)
            ]
            g = generator_map(sp, a)
            wa = sp.center(a)
            for _ in range(4):
                y = complex(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)) + (
                    0.3 - 0.55j
                )
                gy = complex(g(y))
                dgy = complex(g.derivative(y))
                lhs = (
                    genus2_forms.recursion_kernel(x, y, 2).value
                    - genus2_forms.recursion_kernel(x, gy, 2).value / dgy
                )
                rhs = sum(t.value * (y - wa) ** l for l, t in enumerate(ths))
                assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))

    def test_index_validation(self, genus2_forms):
        with pytest.raises(InvalidParameterError):
            genus2_forms.quasiperiod_coefficient(2, 3, 0, 0.5)
        with pytest.raises(InvalidParameterError):
            genus2_forms.quasiperiod_coefficient(2, 1, 3, 0.5)

    def test_quadrature_failure_reported(self, genus2_params):
        # An evaluation point hugging the circle at w_{-1} parks a pole of
        # the integrand almost on the extraction contour at w_1; node
        # doubling then cannot settle and the failure must surface.
        F = SurfaceForms(
            genus2_params,
            TruncationPolicy(max_word_length=5),
            contour_points=32,
        )
        sp = genus2_params
        x = sp.center(-1) + sp.radius(-1) * 1.0000001 * cmath.exp(0.3j)
        with pytest.raises((QuadratureError, PoleProximityError)):
            F.quasiperiod_coefficient(2, 1, 0, x)


class TestPeriodMatrix:
    def test_genus1_log_multiplier(self, torus_forms):
        res = torus_forms.period_matrix()
        q = classical_from_params(torus_forms.sp).q[0]
        expected = cmath.log(q) / (2j * math.pi)
        assert abs(res.omega[0, 0] - expected) < 1e-10
        assert abs(cmath.exp(2j * math.pi * res.omega[0, 0]) - q) < 1e-10

    def test_genus2_symmetric_positive(self, genus2_forms):
        res = genus2_forms.period_matrix()
        assert res.symmetry_error < 1e-9
        assert res.im_min_eigenvalue() > 0
        assert res.tail < 1e-6
        # Cholesky of Im(Omega) must succeed: PD in the numerical sense.
        np.linalg.cholesky(0.5 * (res.omega.imag + res.omega.imag.T))

    def test_diagonal_close_to_handle_multipliers(self, genus2_forms):
        # Leading order in the handle strength: the diagonal entry is
        # log(q_a)/(2 pi i) with corrections from the other handle.
        cp = classical_from_params(genus2_forms.sp)
        res = genus2_forms.period_matrix()
        for a in (1, 2):
            lead = cmath.log(cp.q[a - 1]) / (2j * math.pi)
            assert abs(res.omega[a - 1, a - 1] - lead) < 0.02

    def test_frozen_paths_reproduce(self, genus2_forms):
        paths = {a: genus2_forms.period_path(a) for a in (1, 2)}
        r1 = genus2_forms.period_matrix()
        r2 = genus2_forms.period_matrix(paths=paths)
        assert np.allclose(r1.omega, r2.omega, atol=1e-14)

    def test_paths_stay_in_domain(self, genus2_forms):
        sp = genus2_forms.sp
        for a in (1, 2):
            path = genus2_forms.period_path(a)
            assert abs(path.base_point - sp.center(a)) == pytest.approx(
                sp.radius(a)
            )
            g = generator_map(sp, a)
            assert abs(path.nominal_end - complex(g(path.base_point))) < 1e-12
            for seg in path.segments:
                for t in np.linspace(0, 1, 17):
                    z = seg.point(float(t))
                    for b in sp.signed_indices:
                        assert abs(z - sp.center(b)) >= sp.radius(b) - 1e-9


class TestTruncationDiscipline:
    def test_doubling_within_reported_tail(self, genus2_params):
        coarse = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=4))
        fine = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=8))
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        pairs = [
            (coarse.third_kind_form(x, y), fine.third_kind_form(x, y)),
            (coarse.bidifferential(x, y), fine.bidifferential(x, y)),
            (coarse.projective_connection(x), fine.projective_connection(x)),
            (coarse.holomorphic_form(1, x), fine.holomorphic_form(1, x)),
            (coarse.recursion_kernel(x, y, 2), fine.recursion_kernel(x, y, 2)),
        ]
        for c, f in pairs:
            assert abs(c.value - f.value) <= max(c.tail, 1e-14)

    def test_tails_decay_with_cutoff(self, genus2_params):
        x, y = 0.6 + 0.2j, -0.5 - 0.8j
        tails = []
        for L in (2, 4, 6):
            F = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=L))
            tails.append(F.third_kind_form(x, y).tail)
        assert tails[0] > tails[1] > tails[2]

    def test_zero_cutoff_reports_infinite_tail(self, torus_params):
        F = SurfaceForms(torus_params, TruncationPolicy(max_word_length=0))
        assert math.isinf(F.third_kind_form(2.0, 1.0).tail)


class TestConstruction:
    def test_invalid_parameters_rejected(self):
        bad = SchottkyParams(1, (1.0,), (-1.0,), (4.0,))
        with pytest.raises(InvalidParameterError):
            SurfaceForms(bad)

    def test_origin_inside_disc_rejected_with_guidance(self):
        sp = SchottkyParams(1, (0.05,), (3.0,), (0.04,))
        with pytest.raises(InvalidParameterError, match="origin"):
            SurfaceForms(sp)

    def test_origin_clearing_translation(self):
        sp = SchottkyParams(1, (0.05,), (3.0,), (0.04,))
        shift = origin_clearing_translation(sp)
        moved = mobius_act_on_params(sp, shift)
        F = SurfaceForms(moved, TruncationPolicy(max_word_length=6))
        assert np.isfinite(F.third_kind_form(*F.probes).value)

    def test_contour_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            ContourSpec(0.0, -1.0)
        with pytest.raises(InvalidParameterError):
            ContourSpec(0.0, 1.0, n_points=48)

    def test_word_cache_matches_policy(self, genus2_params):
        F = SurfaceForms(genus2_params, TruncationPolicy(max_word_length=3))
        from schottky.group import enumerate_group, word_count

        assert len(F.words) == word_count(2, 3)
        assert [w.letters for w, _ in F.words] == [
            w.letters for w, _ in enumerate_group(genus2_params, 3)
        ]


@settings(max_examples=25, deadline=None)
@given(
    r=st.floats(min_value=2.2, max_value=4.0),
    t=st.floats(min_value=0.0, max_value=2 * math.pi),
    r2=st.floats(min_value=2.2, max_value=4.0),
    t2=st.floats(min_value=0.5, max_value=2 * math.pi - 0.5),
)
def test_bidifferential_symmetry_property(r, t, r2, t2):
    cp = ClassicalParams((1.0,), (-1.0,), (0.04,))
    sp = params_from_classical(cp)
    F = SurfaceForms(sp, TruncationPolicy(max_word_length=10))
    x = r * cmath.exp(1j * t)
    y = r2 * cmath.exp(1j * (t + t2))
    if abs(x - y) < 1e-2:
        return
    a = F.bidifferential(x, y)
    b = F.bidifferential(y, x)
    assert abs(a.value - b.value) <= 100 * (a.tail + b.tail) + 1e-12

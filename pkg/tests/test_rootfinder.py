import math

import numpy as np
import pytest

from tdspectral import gallery
from tdspectral.core import Commensurate, Quasipolynomial, RealPolynomial
from tdspectral.errors import (
    BudgetExhaustedError,
    ImaginaryAxisRootError,
    NotARootError,
    ValidationError,
)
from tdspectral.rootfinder import (
    ComplexBox,
    DeflatedMap,
    QuasipolynomialMap,
    count_unstable,
    multiplicity_at,
    rightmost_roots,
    roots_in_box,
    winding_count,
)

from conftest import poly_roots_bruteforce

PI = math.pi


def poly_qp(coeffs):
    return Quasipolynomial(Commensurate(1.0), [(0, RealPolynomial(coeffs))])


MID_DOUBLE = Quasipolynomial(
    Commensurate(1.0),
    [(0, RealPolynomial([-1.0, 1.0])), (1, RealPolynomial([1.0]))])


class TestWindingCount:
    def test_scalar_double_root(self, scalar_qp):
        fm = QuasipolynomialMap(scalar_qp, 1.0)
        assert winding_count(fm, ComplexBox(-0.5, 0.5, -0.5, 0.5)) == 2

    def test_pendulum_triple_root(self):
        qp = gallery.pendulum_two_block_scaled(1.0)
        fm = QuasipolynomialMap(qp, 1.0)
        assert winding_count(fm, ComplexBox(-0.5, 0.5, -0.5, 0.5)) == 3

    def test_empty_box(self):
        fm = QuasipolynomialMap(poly_qp([1.0, 1.0]), 1.0)
        assert winding_count(fm, ComplexBox(4.5, 5.5, -0.5, 0.5)) == 0

    def test_partition_additivity(self, reversal_qp):
        fm = QuasipolynomialMap(reversal_qp, 2.0)
        box = ComplexBox(-1.3, 0.9, -2.7, 2.9)
        total = winding_count(fm, box)
        parts = sum(winding_count(fm, child) for child in box.split4(0.47, 0.53))
        assert total == parts > 0

    def test_near_edge_root_not_lost(self, four_delay_qp):
        # roots sit ~1e-7 right of the axis near +/- j at this delay; a
        # naive phase walk aliases them away in +/- pi pairs
        fm = QuasipolynomialMap(four_delay_qp, 3.18)
        from tdspectral.core import modulus_bound

        bound = modulus_bound(four_delay_qp, 3.18, 0.0)
        assert winding_count(fm, ComplexBox(0.0, bound, -bound, bound)) == 5


class TestRootsInBox:
    def test_mid_double_root(self):
        clusters = roots_in_box(MID_DOUBLE, 1.0, ComplexBox(-0.5, 0.5, -0.5, 0.5))
        assert len(clusters) == 1
        assert clusters[0].multiplicity == 2
        assert abs(clusters[0].center) < 1e-9

    def test_reversal_double_at_critical_pair(self, reversal_qp):
        clusters = roots_in_box(reversal_qp, PI, ComplexBox(-0.3, 0.3, 0.7, 1.3))
        assert [c.multiplicity for c in clusters] == [2]
        assert abs(clusters[0].center - 1j) < 1e-9

    def test_plain_polynomial(self):
        clusters = roots_in_box(poly_qp([2.0, 3.0, 1.0]), 1.0,
                                ComplexBox(-3.0, 1.0, -1.0, 1.0))
        centers = sorted(c.center.real for c in clusters)
        assert np.allclose(centers, [-2.0, -1.0], atol=1e-10)
        assert all(c.multiplicity == 1 for c in clusters)

    def test_count_consistency(self, reversal_qp):
        box = ComplexBox(-0.8, 0.6, -2.5, 2.5)
        fm = QuasipolynomialMap(reversal_qp, 2.0)
        w = winding_count(fm, box)
        clusters = roots_in_box(reversal_qp, 2.0, box)
        assert sum(c.multiplicity for c in clusters) == w

    def test_conjugate_symmetric_output(self, reversal_qp):
        clusters = roots_in_box(reversal_qp, 2.0, ComplexBox(-0.8, 0.6, -2.5, 2.5))
        centers = [c.center for c in clusters]
        for c in centers:
            if abs(c.imag) > 1e-9:
                assert any(abs(np.conj(c) - d) < 1e-8 for d in centers)

    def test_polynomial_oracle_equivalence(self):
        coeffs = [1.5, -2.0, 0.5, 1.0, 1.0]
        box = ComplexBox(-2.5, 2.0, -2.2, 2.2)
        mine = roots_in_box(poly_qp(coeffs), 1.0, box)
        oracle = poly_roots_bruteforce(coeffs, box)
        assert len(mine) == len(oracle)
        for c in mine:
            assert min(abs(c.center - z) for z in oracle) < 1e-8

    def test_budget_exhaustion_carries_box(self):
        with pytest.raises(BudgetExhaustedError) as err:
            roots_in_box(poly_qp([2.0, 3.0, 1.0]), 1.0,
                         ComplexBox(-3.0, 1.0, -1.0, 1.0), max_depth=0)
        assert isinstance(err.value.pending, ComplexBox)


class TestMultiplicityAt:
    def test_quintic_triple(self, quintic_qp):
        assert multiplicity_at(quintic_qp, PI, 1j) == 3

    def test_scalar_double(self, scalar_qp):
        assert multiplicity_at(scalar_qp, 1.0, 0.0) == 2

    def test_simple_polynomial_root(self):
        assert multiplicity_at(poly_qp([1.0, 1.0]), 1.0, -1.0) == 1

    def test_not_a_root(self, scalar_qp):
        with pytest.raises(NotARootError):
            multiplicity_at(scalar_qp, 1.0, 0.3)

    def test_bounded_by_degree(self, quintic_qp, scalar_qp):
        from tdspectral.core import polya_szego_degree

        assert multiplicity_at(quintic_qp, PI, 1j) <= polya_szego_degree(quintic_qp)
        assert multiplicity_at(scalar_qp, 1.0, 0.0) <= polya_szego_degree(scalar_qp)


class TestCountUnstable:
    @pytest.mark.parametrize("tau,expected", [(0.5, 0), (2.0, 2), (3.6, 0)])
    def test_reversal_profile_points(self, reversal_qp, tau, expected):
        assert count_unstable(reversal_qp, tau) == expected

    def test_stable_polynomial_small_delay(self):
        qp = Quasipolynomial(
            Commensurate(None),
            [(0, RealPolynomial([2.0, 3.0, 1.0])), (1, RealPolynomial([0.1]))])
        assert count_unstable(qp, 0.01) == 0

    def test_invariant_origin_raises_then_deflates(self, scalar_qp):
        with pytest.raises(ImaginaryAxisRootError):
            count_unstable(scalar_qp, 1.0)
        assert count_unstable(scalar_qp, 1.0, exclude_origin=True) == 0
        # unstable side of the scalar family: one positive real root
        qp = gallery.scalar_invariant_root(-2.0)
        assert count_unstable(qp, 1.0, exclude_origin=True) == 1

    def test_neutral_rejected(self):
        qp = Quasipolynomial(
            Commensurate(1.0),
            [(0, RealPolynomial([1.0, 1.0])), (1, RealPolynomial([0.0, 0.5]))])
        with pytest.raises(ValidationError):
            count_unstable(qp, 1.0)


class TestRightmostRoots:
    def test_mid_double_root_dominant(self):
        clusters = rightmost_roots(MID_DOUBLE, 1.0, 2)
        assert clusters[0].multiplicity == 2
        assert abs(clusters[0].center) < 1e-9

    def test_pendulum_origin_dominant(self):
        qp = gallery.pendulum_two_block_scaled(0.6)
        clusters = rightmost_roots(qp, 1.0, 2)
        assert clusters[0].multiplicity == 2
        assert abs(clusters[0].center) < 1e-9

    def test_plain_polynomial_order(self):
        clusters = rightmost_roots(poly_qp([2.0, 3.0, 1.0]), 1.0, 2)
        assert np.allclose([c.center.real for c in clusters], [-1.0, -2.0],
                           atol=1e-9)

    def test_spectral_abscissa_estimate(self, reversal_qp):
        clusters = rightmost_roots(reversal_qp, 2.0, 1)
        assert clusters[0].center.real > 0  # the system is unstable at tau = 2


class TestDeflatedMap:
    def test_deflation_consistency(self, scalar_qp):
        base = QuasipolynomialMap(scalar_qp, 1.0)
        defl = DeflatedMap(base, [(0.0, 2)])
        lam = np.array([0.4 + 0.3j, -1.0 + 2.0j])
        expected = base.values(lam) / lam ** 2
        assert np.allclose(defl.values(lam), expected, rtol=1e-12)

    def test_taylor_patch_is_smooth(self, scalar_qp):
        base = QuasipolynomialMap(scalar_qp, 1.0)
        defl = DeflatedMap(base, [(0.0, 2)], taylor_radius=0.3)
        inner = defl.values(np.array([0.29 + 0.0j]))[0]
        outer = defl.values(np.array([0.31 + 0.0j]))[0]
        assert abs(inner - outer) < 0.05 * abs(outer)
        # value at the removed double root equals D''(0)/2
        at_center = defl.values(np.array([0.0 + 0.0j]))[0]
        from tdspectral.core import mixed_derivative

        assert abs(at_center - mixed_derivative(scalar_qp, 0.0, 1.0, 2, 0) / 2) < 1e-12

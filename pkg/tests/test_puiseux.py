import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from tdspectral import gallery
from tdspectral.core import (
    Commensurate,
    Fixed,
    Quasipolynomial,
    RealPolynomial,
    shifted_evaluator,
    two_delay_evaluator,
)
from tdspectral.puiseux import (
    INF,
    BranchDirection,
    SplittingClass,
    analyze_critical_pair,
    branch_polynomials,
    classify_splitting,
    crossing_direction_multiple,
    expand_at,
    newton_diagram,
    partial_indices,
    partial_indices_2d,
    polygon_segments,
    two_delay_expansion,
    weierstrass_leading,
)
from tdspectral.rootfinder import multiplicity_at

from conftest import track_roots

PI = math.pi
GAMMA = 0.5  # g/l for the l = 2g pendulum fixture
TSTAR = math.sqrt(2.0)


@pytest.fixture(scope="module")
def pendulum():
    return gallery.pendulum_two_block(GAMMA)


@pytest.fixture(scope="module")
def quintic_expansion(quintic_qp):
    return expand_at(quintic_qp, 1j, PI)


class TestPartialIndices:
    def test_quintic_indices(self, quintic_qp):
        ev = shifted_evaluator(quintic_qp, 1j, PI)
        table = partial_indices(ev, 3)
        assert table.n == (2, 1, 1)
        assert table.kappa == 0

    def test_pendulum_double_regime_all_infinite(self, pendulum):
        # away from the triple delay the origin root is double and pinned
        ev = shifted_evaluator(pendulum, 0.0, 0.8)
        table = partial_indices(ev, 2)
        assert table.n == (INF, INF)
        assert table.kappa == 2

    def test_pendulum_triple_case(self, pendulum):
        ev = shifted_evaluator(pendulum, 0.0, TSTAR)
        table = partial_indices(ev, 3)
        assert table.n == (INF, INF, 1)
        assert table.kappa == 2


class TestNewtonDiagram:
    def test_quintic_diagram(self, quintic_expansion):
        assert set(quintic_expansion.diagram.points) == {(0, 2), (1, 1), (2, 1), (3, 0)}

    def test_pendulum_triple_diagram(self, pendulum):
        exp = expand_at(pendulum, 0.0, TSTAR)
        assert set(exp.diagram.points) == {(2, 1), (3, 0)}

    def test_simple_root_diagram(self, reversal_qp):
        exp = expand_at(reversal_qp, 1j * 2.2420508808905315, 1.252486862720768)
        assert exp.multiplicity == 1
        assert exp.diagram.points[-1] == (1, 0)
        assert len(exp.diagram.points) == 2


class TestPolygonSegments:
    def test_quintic_two_segments(self, quintic_expansion):
        segs = quintic_expansion.segments
        assert [s.beta for s in segs] == [Fraction(1), Fraction(1, 2)]
        assert [s.m_seg for s in segs] == [1, 2]
        assert set(segs[0].points) == {(0, 2), (1, 1)}
        assert set(segs[1].points) == {(1, 1), (3, 0)}

    def test_pendulum_single_segment(self, pendulum):
        exp = expand_at(pendulum, 0.0, TSTAR)
        assert len(exp.segments) == 1
        assert exp.segments[0].beta == 1
        assert exp.segments[0].m_seg == 1

    def test_two_point_diagram(self):
        segs = polygon_segments([(0, 1), (1, 0)], kappa=0)
        assert len(segs) == 1
        assert segs[0].beta == 1 and segs[0].m_seg == 1

    def test_exact_lower_hull(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            m = int(rng.integers(2, 7))
            pts = [(m, 0)] + [(i, int(rng.integers(1, 8)))
                              for i in range(m)
                              if rng.random() > 0.25]
            if not any(i < m for i, _ in pts):
                continue
            kappa = min(i for i, _ in pts)
            segs = polygon_segments(sorted(pts), kappa=kappa)
            # every diagram point must lie on or above every segment line
            for seg in segs:
                for (i, ell) in pts:
                    line = seg.ell_start - float(seg.beta) * (i - seg.i_start)
                    assert ell >= line - 1e-12
            assert sum(s.m_seg for s in segs) == m - kappa
            betas = [s.beta for s in segs]
            assert betas == sorted(betas, reverse=True)


class TestWeierstrassLeading:
    def test_pendulum_linear_coefficient(self, pendulum):
        ev = shifted_evaluator(pendulum, 0.0, TSTAR)
        table = partial_indices(ev, 3)
        terms, valid = weierstrass_leading(ev, table)
        assert valid
        assert len(terms) == 1
        w2 = terms[0]
        assert w2.i == 2 and w2.exponent == 1
        assert abs(w2.coeff - (-2.0 * GAMMA)) < 1e-10

    def test_quintic_first_coefficient(self, quintic_qp):
        ev = shifted_evaluator(quintic_qp, 1j, PI)
        table = partial_indices(ev, 3)
        terms, valid = weierstrass_leading(ev, table)
        w0 = [t for t in terms if t.i == 0][0]
        assert w0.exponent == 2
        expected = (math.factorial(3) / (1 * math.factorial(2))
                    * ev.deriv(0, 2) / ev.deriv(3, 0))
        assert abs(w0.coeff - expected) < 1e-12
        assert not valid  # indices (2, 1, 1) are not strictly decreasing


class TestBranchPolynomials:
    def test_pendulum_forward_and_backward(self, pendulum):
        fwd = expand_at(pendulum, 0.0, TSTAR)
        root_fwd = fwd.polynomials[0].roots()
        assert np.allclose(root_fwd, [2.0 * GAMMA], atol=1e-9)
        bwd = expand_at(pendulum, 0.0, TSTAR, tau_sign=-1)
        # decreasing-delay frame: the polynomial is z + 2 g/l, root -2 g/l
        poly = bwd.polynomials[0]
        ratio = poly.coeffs[0] / poly.coeffs[1]
        assert abs(ratio - 2.0 * GAMMA) < 1e-9
        assert np.allclose(poly.roots(), [-2.0 * GAMMA], atol=1e-9)

    def test_simple_root_slope(self, reversal_qp):
        om = 2.2420508808905315
        tau = 1.252486862720768
        exp = expand_at(reversal_qp, 1j * om, tau)
        from tdspectral.core import mixed_derivative

        slope = -(mixed_derivative(reversal_qp, 1j * om, tau, 0, 1)
                  / mixed_derivative(reversal_qp, 1j * om, tau, 1, 0))
        assert abs(exp.branches[0].coeff - slope) < 1e-9

    def test_quintic_half_segment_pair(self, quintic_expansion):
        half = [b for b in quintic_expansion.branches if b.exponent == Fraction(1, 2)]
        assert len(half) == 2
        assert abs(half[0].coeff + half[1].coeff) < 1e-12  # opposite pair


class TestExpandBranches:
    def test_pendulum_branch_values(self, pendulum):
        fwd = expand_at(pendulum, 0.0, TSTAR)
        inv = [b for b in fwd.branches if b.invariant]
        mov = [b for b in fwd.branches if not b.invariant]
        assert len(inv) == 2 and len(mov) == 1
        assert mov[0].exponent == 1
        assert abs(mov[0].coeff - 2.0 * GAMMA) < 1e-9
        bwd = expand_at(pendulum, 0.0, TSTAR, tau_sign=-1)
        mov_b = [b for b in bwd.branches if not b.invariant][0]
        assert abs(mov_b.coeff - (-2.0 * GAMMA)) < 1e-9

    def test_reversal_leading_and_second_terms(self, reversal_qp):
        exp = expand_at(reversal_qp, 1j, PI)
        for b in exp.branches:
            assert b.exponent == Fraction(1, 2)
            assert abs(abs(b.coeff) - 0.1468) < 2e-3
            assert abs(b.coeff.real) < 1e-3 * abs(b.coeff)
            assert b.tangential
            assert b.second_exponent == Fraction(1)
            assert abs(b.second_coeff - (-0.0033 - 0.1473j)) < 2e-4

    def test_degenerate_family_taylor_leading_terms(self, four_delay_qp):
        exp = expand_at(four_delay_qp, 1j, PI)
        assert exp.multiplicity == 2
        coeffs = sorted((b.coeff for b in exp.branches), key=abs)
        assert all(b.exponent == 1 for b in exp.branches)
        assert abs(coeffs[0] - 0.0796j) < 2e-4
        assert abs(coeffs[1] - 0.1592j) < 2e-4

    def test_prediction_vs_tracked_roots(self, quintic_qp, quintic_expansion):
        # leading-term relative errors must fall at least 3x per decade
        ratios = []
        errs_prev = None
        for eps in (1e-3, 1e-4, 1e-5):
            clusters = track_roots(quintic_qp, PI + eps, 1j, 0.15)
            roots = [c.center for c in clusters for _ in range(c.multiplicity)]
            assert len(roots) == 3
            errs = []
            for b in quintic_expansion.branches:
                pred = b.predict(eps, terms=1)
                err = min(abs(pred - r) for r in roots) / eps ** float(b.exponent)
                errs.append(err)
            if errs_prev is not None:
                for e_prev, e in zip(errs_prev, errs):
                    ratios.append(e_prev / max(e, 1e-300))
            errs_prev = errs
        assert all(r >= 3.0 for r in ratios)

    def test_conjugate_pairing(self, reversal_qp):
        up = expand_at(reversal_qp, 1j, PI)
        down = expand_at(reversal_qp, -1j, PI)
        up_coeffs = sorted((b.coeff for b in up.branches), key=lambda z: z.imag)
        down_coeffs = sorted((np.conj(b.coeff) for b in down.branches),
                             key=lambda z: z.imag)
        assert np.allclose(up_coeffs, down_coeffs, atol=1e-10)


class TestSplitting:
    def test_quintic_crs(self, quintic_expansion):
        assert quintic_expansion.splitting is SplittingClass.CRS

    def test_synthetic_nrs(self):
        segs = polygon_segments([(0, 3), (2, 0)], kappa=0)
        assert segs[0].beta == Fraction(3, 2) and segs[0].m_seg == 2
        assert classify_splitting(segs) is SplittingClass.NRS

    def test_synthetic_rs(self):
        segs = polygon_segments([(0, 2), (1, 0)], kappa=0)
        assert classify_splitting(segs) is SplittingClass.RS

    def test_simple_root_crs(self, reversal_qp):
        exp = expand_at(reversal_qp, 1j * 2.2420508808905315, 1.252486862720768)
        assert exp.splitting is SplittingClass.CRS

    def test_exponent_bookkeeping(self, quintic_expansion, pendulum):
        assert sum(s.m_seg for s in quintic_expansion.segments) == 3
        exp = expand_at(pendulum, 0.0, TSTAR)
        assert sum(s.m_seg for s in exp.segments) + exp.table.kappa == 3


class TestCrossingDirectionMultiple:
    def test_reversal_tiebreak(self, reversal_qp):
        ana = analyze_critical_pair(reversal_qp, 1j, PI)
        after = [b.direction for b in ana.forward.branches]
        assert after == [BranchDirection.ENTERS_LEFT] * 2
        before = {b.direction for b in ana.backward.branches}
        assert before == {BranchDirection.ENTERS_LEFT, BranchDirection.ENTERS_RIGHT}
        assert ana.delta_nu_batch == -1
        assert ana.delta_nu_total == -2

    def test_simple_switch_consistency(self, reversal_qp):
        om = 2.2420508808905315
        ana = analyze_critical_pair(reversal_qp, 1j * om, 1.252486862720768)
        assert ana.delta_nu_total == 2

    def test_real_double_root_one_each_side(self, pendulum):
        # the backward frame at the triple delay has a real branch pair
        # not applicable; use the reversal system's backward frame instead
        ana = analyze_critical_pair(gallery.reversal_fifth_order(), 1j, PI)
        coeffs = [b.coeff for b in ana.backward.branches]
        assert any(c.real > 0 for c in coeffs) and any(c.real < 0 for c in coeffs)

    def test_direction_matches_direct_counts(self, reversal_qp):
        from tdspectral.rootfinder import count_unstable

        ana = analyze_critical_pair(reversal_qp, 1j, PI)
        jump = count_unstable(reversal_qp, PI + 0.05) \
            - count_unstable(reversal_qp, PI - 0.05)
        assert jump == ana.delta_nu_total == -2


class TestTwoDelay:
    def test_partial_indices(self, two_delay_qp):
        ev2 = two_delay_evaluator(two_delay_qp, 1j, PI, 1.0)
        table = partial_indices_2d(ev2, 2)
        assert table.n1 == (1, 1)
        assert table.n2 == (INF, INF)
        assert table.kappa == 0
        assert abs(ev2.deriv(0, 1, 0) - 1j) < 1e-12
        assert abs(ev2.deriv(1, 1, 0) - (1.0 - 1j * PI)) < 1e-12

    def test_tau2_only_dependence(self):
        # a structurally tau1-independent delayed term
        qp = Quasipolynomial(Fixed([0.0, 1.0, 2.0]),
                             [(0, RealPolynomial([-1.0, 1.0])),
                              (2, RealPolynomial([1.0]))])
        ev2 = two_delay_evaluator(qp, 0.0, 1.0, 2.0)
        table = partial_indices_2d(ev2, 1)
        assert table.n1 == (INF,)

    def test_expansion_matches_reference(self, two_delay_qp):
        te = two_delay_expansion(two_delay_qp, 1j, PI, 1.0)
        assert set(te.diagram.points) == {(0, 1), (1, 1), (2, 0)}
        assert len(te.segments) == 1
        assert te.segments[0].beta == Fraction(1, 2)
        assert te.segments[0].m_seg == 2
        D = (8 + PI ** 2) + 1j * (8 - 3 * PI) + 16 * np.exp(-1j)
        n, w0 = te.leading_w[(0, "tau1")]
        assert n == 1
        assert abs(w0 - (-2j / D)) < 1e-8
        coeffs = sorted((b.coeff for b in te.branches), key=lambda z: z.real)
        expected = np.sqrt(2j / D)
        assert abs(coeffs[1] - expected) < 1e-10
        assert abs(coeffs[0] + expected) < 1e-10

    def test_oracle_validation(self, two_delay_qp):
        te = two_delay_expansion(two_delay_qp, 1j, PI, 1.0)
        eps = 1e-4
        clusters = track_roots(two_delay_qp, (0.0, 1.0, PI + eps), 1j, 0.05)
        roots = [c.center for c in clusters]
        assert len(roots) == 2
        for b in te.branches:
            assert min(abs(b.predict(eps) - r) for r in roots) < 5e-4

    def test_reduces_to_single_delay(self):
        # no dependence on the second delay at all: the expansion must agree
        # with the commensurate single-delay machinery
        qp2 = Quasipolynomial(Fixed([0.0, 1.0, 2.0]),
                              [(0, RealPolynomial([-1.0, 1.0])),
                               (1, RealPolynomial([1.0]))])
        te = two_delay_expansion(qp2, 0.0, 1.0, 2.0)
        qp1 = Quasipolynomial(Commensurate(1.0),
                              [(0, RealPolynomial([-1.0, 1.0])),
                               (1, RealPolynomial([1.0]))])
        exp1 = expand_at(qp1, 0.0, 1.0)
        assert te.table.kappa == exp1.table.kappa == 1
        b2 = [b for b in te.branches if not b.horizontal]
        b1 = [b for b in exp1.branches if not b.invariant]
        assert len(b2) == len(b1) == 1
        assert b2[0].exponent == b1[0].exponent == 1
        assert abs(b2[0].coeff - b1[0].coeff) < 1e-10

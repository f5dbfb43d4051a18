import math

import numpy as np
import pytest

from tdspectral import gallery
from tdspectral.core import Commensurate, Quasipolynomial, RealPolynomial
from tdspectral.crossing import crossing_set, single_delay_parts
from tdspectral.errors import ValidationError
from tdspectral.fsc import critical_frequencies, nu_profile, sweep, var_nf

PI = math.pi


class TestSweep:
    def test_no_delay_terms_empty(self):
        qp = Quasipolynomial(Commensurate(1.0),
                             [(0, RealPolynomial([1.0, 1.0]))])
        sw = sweep(qp)
        assert sw.n_branches == 0
        assert critical_frequencies(sw) == []

    def test_branch_count_matches_z_degree(self, four_delay_sweep):
        assert four_delay_sweep.n_branches == 4
        assert four_delay_sweep.roots.shape[1] == len(four_delay_sweep.omega_grid)

    def test_curves_defined_on_nonnegative_frequencies(self, four_delay_sweep):
        assert four_delay_sweep.omega_grid[0] >= 0.0

    def test_single_delay_touch_matches_crossing_set(self, reversal_qp):
        sw = sweep(reversal_qp)
        touches = sorted(r.omega for r in critical_frequencies(sw))
        p0, p1 = single_delay_parts(reversal_qp)
        expected = sorted(c.omega for c in crossing_set(p0, p1))
        assert len(touches) == len(expected)
        assert np.allclose(touches, expected, atol=1e-6)


class TestCriticalFrequencies:
    def test_degenerate_pair_depth_two(self, four_delay_sweep):
        recs = [r for r in critical_frequencies(four_delay_sweep)
                if abs(r.omega - 1.0) < 1e-4]
        assert len(recs) == 1
        rec = recs[0]
        assert rec.g == 2
        assert abs(rec.z - (-1.0)) < 1e-5
        assert abs(rec.minimal_delay() - PI) < 1e-6

    def test_reversal_g_one(self, reversal_qp):
        sw = sweep(reversal_qp)
        recs = {round(r.omega, 4): r for r in critical_frequencies(sw)}
        assert recs[1.0].g == 1

    def test_hyperbolic_empty(self):
        sw = sweep(gallery.hyperbolic_first_order())
        assert critical_frequencies(sw) == []


class TestVarNF:
    def test_degenerate_touch_is_neutral(self, four_delay_sweep):
        rec = [r for r in critical_frequencies(four_delay_sweep)
               if abs(r.omega - 1.0) < 1e-4][0]
        assert var_nf(four_delay_sweep, rec) == 0

    def test_reversal_system_counts(self, reversal_qp):
        sw = sweep(reversal_qp)
        by_freq = {round(r.omega, 4): r for r in critical_frequencies(sw)}
        # single curve drops below the line at the double-root frequency
        assert var_nf(sw, by_freq[1.0]) == -1
        # and climbs through it at the destabilizing one
        assert var_nf(sw, by_freq[2.2421]) == 1


class TestNUProfile:
    def test_reversal_chart(self, reversal_qp):
        prof = nu_profile(reversal_qp, 5.0)
        assert np.allclose(prof.breakpoints, [1.2525, PI, 4.0549], atol=1e-3)
        assert prof.counts == (0, 2, 0, 2)
        assert len(prof.stability_intervals) == 2
        (a0, b0), (a1, b1) = prof.stability_intervals
        assert a0 == 0.0 and abs(b0 - 1.2525) < 1e-3
        assert abs(a1 - PI) < 1e-6 and abs(b1 - 4.0549) < 1e-3

    def test_degenerate_family_never_jumps_at_odd_pi(self, four_delay_qp):
        prof = nu_profile(four_delay_qp, 10.0, validate=False)
        edges = [0.0, *prof.breakpoints, prof.tau_max]
        for k, t in enumerate(prof.breakpoints):
            if abs(t - PI) < 1e-3 or abs(t - 3 * PI) < 1e-3:
                assert prof.counts[k + 1] == prof.counts[k]

    def test_hyperbolic_single_interval(self):
        prof = nu_profile(gallery.hyperbolic_first_order(), 10.0)
        assert prof.breakpoints == ()
        assert prof.counts == (0,)
        assert prof.stability_intervals == ((0.0, 10.0),)

    def test_validation_against_direct_counts(self, reversal_qp):
        # nu_profile(validate=True) already cross-checks; re-assert directly
        from tdspectral.rootfinder import count_unstable

        prof = nu_profile(reversal_qp, 5.0)
        edges = [0.0, *prof.breakpoints, 5.0]
        for k in range(len(prof.counts)):
            mid = 0.5 * (edges[k] + edges[k + 1])
            assert count_unstable(reversal_qp, mid) == prof.counts[k]

    def test_requires_commensurate(self, two_delay_qp):
        with pytest.raises(ValidationError):
            nu_profile(two_delay_qp, 1.0)

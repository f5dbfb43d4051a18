"""Benchmark quasipolynomials used across the test-suite and the CLI export.

Each factory returns a ready-to-analyze :class:`~tdspectral.core.Quasipolynomial`.
The systems are classical stability-theory benchmarks: a scalar equation with
an invariant root, delayed-feedback pendulum models, and higher-order systems
whose stability charts exhibit multiple imaginary roots, degenerate
frequency-sweeping touches and stability reversals.
"""

from __future__ import annotations

import math

from .core import Commensurate, Fixed, Quasipolynomial, RealPolynomial

__all__ = [
    "scalar_invariant_root",
    "pendulum_two_block_scaled",
    "pendulum_two_block",
    "multiple_root_quintic",
    "degenerate_four_delay",
    "reversal_fifth_order",
    "two_delay_double_root",
    "hyperbolic_first_order",
    "FIXTURES",
]

_PI = math.pi


def scalar_invariant_root(alpha: float) -> Quasipolynomial:
    """``lam + alpha (1 - exp(-lam))``: invariant root at 0, double iff alpha = -1."""
    return Quasipolynomial(
        Commensurate(1.0),
        [(0, RealPolynomial([alpha, 1.0])), (1, RealPolynomial([-alpha]))],
    )


def pendulum_two_block_scaled(alpha: float) -> Quasipolynomial:
    """Rescaled two-delay-block pendulum ``lam^2 - a^2 + 2a^2 e^{-lam} - a^2 e^{-2lam}``.

    Invariant root at the origin of multiplicity 2, reaching 3 exactly at
    ``alpha = 1``.
    """
    a2 = alpha * alpha
    return Quasipolynomial(
        Commensurate(1.0),
        [(0, RealPolynomial([-a2, 0.0, 1.0])),
         (1, RealPolynomial([2.0 * a2])),
         (2, RealPolynomial([-a2]))],
    )


def pendulum_two_block(g_over_l: float, tau: float | None = None) -> Quasipolynomial:
    """Pendulum with two proportional delay blocks at delays (tau, 2 tau).

    ``lam^2 - g/l + (2 g/l) e^{-lam tau} - (g/l) e^{-2 lam tau}``; the origin is
    an invariant double root, triple exactly at ``tau = sqrt(l/g)``.
    """
    c = g_over_l
    return Quasipolynomial(
        Commensurate(tau),
        [(0, RealPolynomial([-c, 0.0, 1.0])),
         (1, RealPolynomial([2.0 * c])),
         (2, RealPolynomial([-c]))],
    )


def multiple_root_quintic() -> Quasipolynomial:
    """Two-delay commensurate quintic with a triple root at ``lam = j`` for tau = pi.

    ``-P0 + P1 e^{-lam tau} + e^{-2 lam tau}`` with
    ``P0 = (pi/2) lam^5 + (pi/2) lam^3 + lam^2`` and
    ``P1 = (pi/2) lam^3 - lam^2 + (pi/2) lam + 1``.
    """
    p0 = RealPolynomial([0.0, 0.0, -1.0, -_PI / 2, 0.0, -_PI / 2])
    p1 = RealPolynomial([1.0, _PI / 2, -1.0, _PI / 2])
    p2 = RealPolynomial([1.0])
    return Quasipolynomial(Commensurate(None), [(0, p0), (1, p1), (2, p2)])


def degenerate_four_delay() -> Quasipolynomial:
    """Four-delay system whose critical pairs ``(j, (2k+1) pi)`` have index g = 2.

    All crossings at ``omega = 1`` are degenerate: the unstable-root count
    does not change there for any k.
    """
    p0 = RealPolynomial([
        1.0 - 2.25 * _PI - (45.0 / 8.0) * _PI ** 2,
        3.0 + 4.5 * _PI,
        1.0 + 0.5 * _PI - (75.0 / 8.0) * _PI ** 2,
        4.5 * _PI,
        2.75 * _PI - (15.0 / 8.0) * _PI ** 2,
        0.0,
        (15.0 / 8.0) * _PI ** 2,
    ])
    p1 = RealPolynomial([
        4.0 - 4.5 * _PI,
        11.0 + 2.25 * _PI,
        _PI + 7.0,
        1.0 + 3.5 * _PI,
        5.5 * _PI,
        1.25 * _PI,
    ])
    p2 = RealPolynomial([
        6.0 - 2.25 * _PI,
        15.0 - 2.25 * _PI,
        13.0 + 0.5 * _PI,
        3.0 - _PI,
        2.75 * _PI,
        1.25 * _PI,
    ])
    p3 = RealPolynomial([4.0, 9.0, 9.0, 3.0])
    p4 = RealPolynomial([1.0, 2.0, 2.0, 1.0])
    return Quasipolynomial(Commensurate(None),
                           [(0, p0), (1, p1), (2, p2), (3, p3), (4, p4)])


def reversal_fifth_order() -> Quasipolynomial:
    """Fifth-order single-delay system with two stability intervals.

    Stable exactly on ``[0, 1.2525) U (pi, 4.0549)``: the double imaginary
    root at ``(j, pi)`` causes a stability reversal.
    """
    a0 = _PI / 2 - _PI ** 2 / 8 - 1.0
    a1 = -2.0 + _PI / 2
    a2 = -_PI ** 2 / 4 + _PI - 10.0
    a3 = -3.0 + _PI / 2
    a4 = -_PI ** 2 / 8 + _PI / 2 - 8.0
    b = [-1.0, -1.0, -10.0, -1.0, -8.0]
    p0 = RealPolynomial([-a0, -a1, -a2, -a3, -a4, 1.0])
    p1 = RealPolynomial([-bk for bk in b])
    return Quasipolynomial(Commensurate(None), [(0, p0), (1, p1)])


def two_delay_double_root() -> Quasipolynomial:
    """Fifth-order system with independent delays and a double root at ``j``.

    At ``(tau1, tau2) = (pi, 1)`` the root ``lam = j`` has multiplicity 2;
    its perturbation in tau1 splits with exponent 1/2.
    """
    p0 = RealPolynomial([2.0, (2.0 + _PI) / 2, 2.0, (4.0 + _PI) / 2, 1.0, 1.0])
    p1 = RealPolynomial([1.0])
    p2 = RealPolynomial([2.0, 0.0, 4.0, 0.0, 2.0])
    # stored in increasing-delay order: delay 1 carries the quartic, delay pi
    # the constant term
    return Quasipolynomial(Fixed([0.0, 1.0, _PI]), [(0, p0), (1, p2), (2, p1)])


def hyperbolic_first_order() -> Quasipolynomial:
    """``lam + 2 + e^{-lam tau}``: no imaginary-axis roots for any delay."""
    return Quasipolynomial(
        Commensurate(None),
        [(0, RealPolynomial([2.0, 1.0])), (1, RealPolynomial([1.0]))],
    )


FIXTURES = {
    "scalar": lambda: scalar_invariant_root(-1.0),
    "pendulum": lambda: pendulum_two_block_scaled(1.0),
    "multiple-root-quintic": multiple_root_quintic,
    "degenerate-four-delay": degenerate_four_delay,
    "reversal-fifth-order": reversal_fifth_order,
    "two-delay-double-root": two_delay_double_root,
    "hyperbolic": hyperbolic_first_order,
}

"""Shared fixtures and independent oracles for the test-suite.

The oracles here deliberately avoid the code paths they check: polynomial
roots come from a grid of Newton starts (no companion matrix), derivatives
from central finite differences, and root tracking from contour counting
restricted to small boxes.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from tdspectral import gallery
from tdspectral.core import evaluate
from tdspectral.rootfinder import ComplexBox, roots_in_box


@pytest.fixture(scope="session")
def scalar_qp():
    return gallery.scalar_invariant_root(-1.0)


@pytest.fixture(scope="session")
def quintic_qp():
    return gallery.multiple_root_quintic()


@pytest.fixture(scope="session")
def reversal_qp():
    return gallery.reversal_fifth_order()


@pytest.fixture(scope="session")
def four_delay_qp():
    return gallery.degenerate_four_delay()


@pytest.fixture(scope="session")
def two_delay_qp():
    return gallery.two_delay_double_root()


@pytest.fixture(scope="session")
def four_delay_sweep(four_delay_qp):
    from tdspectral.fsc import sweep

    return sweep(four_delay_qp)


def central_fd_mixed(qp, lam, tau, i, j, h_lam=1e-4, h_tau=1e-4):
    """Central finite-difference mixed derivative (independent oracle)."""

    def d_lam(f, order, x, h):
        if order == 0:
            return f(x)
        return (d_lam(f, order - 1, x + h, h) - d_lam(f, order - 1, x - h, h)) / (2 * h)

    def f_tau(t):
        return lambda lam_: evaluate(qp, lam_, t)

    def g(t):
        return d_lam(f_tau(t), i, lam, h_lam)

    def d_tau(order, t, h):
        if order == 0:
            return g(t)
        return (d_tau(order - 1, t + h, h) - d_tau(order - 1, t - h, h)) / (2 * h)

    return d_tau(j, tau, h_tau)


def poly_roots_bruteforce(coeffs, box: ComplexBox, grid: int = 40,
                          tol: float = 1e-12):
    """Roots of a polynomial inside a box: Newton from a grid of starts.

    Companion-matrix free.  ``coeffs`` ascending.
    """
    cs = np.asarray(coeffs, dtype=complex)
    dcs = np.array([k * cs[k] for k in range(1, len(cs))], dtype=complex)

    def p(z):
        acc = 0.0
        for c in cs[::-1]:
            acc = acc * z + c
        return acc

    def dp(z):
        acc = 0.0
        for c in dcs[::-1]:
            acc = acc * z + c
        return acc

    found = []
    res = np.linspace(box.re_min, box.re_max, grid)
    ims = np.linspace(box.im_min, box.im_max, grid)
    scale = max(abs(c) for c in cs)
    for re in res:
        for im in ims:
            z = complex(re, im)
            for _ in range(80):
                d = dp(z)
                if d == 0:
                    break
                step = p(z) / d
                z -= step
                if abs(step) < 1e-15 * (1 + abs(z)):
                    break
            if abs(p(z)) < tol * scale * (1 + abs(z)) ** (len(cs) - 1) \
                    and box.contains(z, slack=1e-9):
                if all(abs(z - w) > 1e-7 * (1 + abs(z)) for w in found):
                    found.append(z)
    return sorted(found, key=lambda z: (z.real, z.imag))


def track_roots(qp, tau, center: complex, radius: float):
    """All roots of the quasipolynomial within ``radius`` of ``center``."""
    box = ComplexBox(center.real - radius, center.real + radius,
                     center.imag - radius, center.imag + radius)
    return roots_in_box(qp, tau, box)

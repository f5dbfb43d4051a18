"""Single-delay tau-decomposition: crossing frequencies and critical delays.

For ``D(lam; tau) = P0(lam) + P1(lam) e^{-lam tau}`` an imaginary root
``j w`` at some delay forces ``|P0(j w)| = |P1(j w)|``.  The squared-modulus
gap ``F(w) = |P0(j w)|^2 - |P1(j w)|^2`` is an even real polynomial, so the
candidate frequencies are the nonnegative real roots of a polynomial in
``w^2``; each frequency then generates a periodic comb of critical delays
from the phase condition ``e^{-j w tau} = -P0(j w) / P1(j w)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Commensurate, Quasipolynomial, RealPolynomial, evaluate, mixed_derivative
from .errors import MultipleRootError, ValidationError

__all__ = [
    "CrossingFrequency",
    "Verdict",
    "Direction",
    "modulus_gap_polynomial",
    "crossing_set",
    "crossing_delays",
    "minimal_delay",
    "hyperbolicity_test",
    "crossing_direction_simple",
    "single_delay_parts",
]


class Verdict(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    DELAY_INDEPENDENT_STABLE = "delay-independent-stable"
    CROSSINGS_EXIST = "crossings-exist"


class Direction(enum.Enum):
    SWITCH = "switch"         # the pair enters the right half-plane
    REVERSAL = "reversal"     # the pair leaves the right half-plane
    DEGENERATE = "degenerate"  # first-order derivative inconclusive


@dataclass(frozen=True)
class CrossingFrequency:
    """A crossing candidate: frequency, minimal critical delay and period."""

    omega: float
    tau_star: float | None = None
    degenerate: bool = False   # multiple root of the modulus-gap polynomial
    invariant: bool = False    # P1(j w) = 0: common imaginary root, delay-free

    @property
    def period(self) -> float | None:
        return 2.0 * math.pi / self.omega if self.omega > 0 else None


def single_delay_parts(qp: Quasipolynomial) -> tuple[RealPolynomial, RealPolynomial]:
    """Extract (P0, P1) from a single-delay quasipolynomial."""
    if qp.n_d != 1:
        raise ValidationError("operation requires a single-delay quasipolynomial")
    return qp.term(0), qp.term(1)


def _as_polys(p0, p1) -> tuple[RealPolynomial, RealPolynomial]:
    if isinstance(p0, Quasipolynomial):
        return single_delay_parts(p0)
    if not isinstance(p0, RealPolynomial):
        p0 = RealPolynomial(p0)
    if not isinstance(p1, RealPolynomial):
        p1 = RealPolynomial(p1)
    return p0, p1


def _abs_square_on_axis(p: RealPolynomial) -> RealPolynomial:
    """``|P(j w)|^2`` as a real polynomial in w."""
    re = []
    im = []
    for k, c in enumerate(p.coeffs):
        # j^k cycles 1, j, -1, -j
        s = (-1.0) ** (k // 2)
        (re if k % 2 == 0 else im).append((k, s * c))
    rp = [0.0] * (p.degree + 1)
    ip = [0.0] * (p.degree + 1)
    for k, c in re:
        rp[k] = c
    for k, c in im:
        ip[k] = c
    R = RealPolynomial(rp)
    I = RealPolynomial(ip)
    return R * R + I * I


def modulus_gap_polynomial(p0, p1) -> RealPolynomial:
    """``F(w) = |P0(j w)|^2 - |P1(j w)|^2`` (even, real)."""
    p0, p1 = _as_polys(p0, p1)
    return _abs_square_on_axis(p0) + _abs_square_on_axis(p1).scale(-1.0)


def _resultant(p0: RealPolynomial, p1: RealPolynomial) -> float:
    """Sylvester-matrix resultant; coprimality heuristic."""
    n, m = p0.degree, p1.degree
    if n < 0 or m < 0:
        return 0.0
    if n == 0 or m == 0:
        return 1.0
    S = np.zeros((n + m, n + m))
    a = p0.coeffs[::-1]
    b = p1.coeffs[::-1]
    for i in range(m):
        S[i, i:i + n + 1] = a
    for i in range(n):
        S[m + i, i:i + m + 1] = b
    return float(abs(np.linalg.det(S)))


def _check_coprime(p0: RealPolynomial, p1: RealPolynomial) -> None:
    scale = (max(abs(c) for c in p0.coeffs) * max(abs(c) for c in p1.coeffs)
             if p0.coeffs and p1.coeffs else 1.0)
    if not p1.is_zero and _resultant(p0, p1) <= 1e-10 * max(scale, 1.0):
        warnings.warn("P0 and P1 appear to share a common factor; shared imaginary "
                      "roots are invariant under the delay", stacklevel=3)


def crossing_set(p0, p1, tol: float = 1e-9) -> list[CrossingFrequency]:
    """All frequencies w >= 0 with ``|P0(j w)| = |P1(j w)|``.

    Solves the even polynomial ``F`` as a polynomial in ``w**2`` and keeps
    real nonnegative roots.  Frequencies that are multiple roots of ``F``
    are marked degenerate (tangential crossings); frequencies where
    ``P1(j w) = 0`` are marked invariant.  The empty list is a valid
    result.
    """
    p0, p1 = _as_polys(p0, p1)
    if p0.degree <= p1.degree:
        raise ValidationError("retarded type required: deg P0 > deg P1")
    _check_coprime(p0, p1)
    F = modulus_gap_polynomial(p0, p1)
    # F is even: reduce to a polynomial in u = w^2
    assert all(c == 0.0 for k, c in enumerate(F.coeffs) if k % 2 == 1)
    u_poly = RealPolynomial(F.coeffs[::2])
    if u_poly.degree < 1:
        return []
    out: list[CrossingFrequency] = []
    for u, mult in _clustered_roots(u_poly):
        scale = max(1.0, abs(u))
        if abs(u.imag) > tol * scale or u.real < -tol * scale:
            continue
        w = math.sqrt(max(u.real, 0.0))
        inv = abs(p1(1j * w)) <= tol * max(1.0, p1.abs_coeffs()(w))
        out.append(CrossingFrequency(w, degenerate=mult > 1, invariant=inv))
    out.sort(key=lambda c: c.omega)
    return out


def _clustered_roots(poly: RealPolynomial, cluster_rtol: float = 1e-4
                     ) -> list[tuple[complex, int]]:
    """Roots of a real polynomial with multiple roots collapsed and polished.

    Companion-matrix output scatters an m-fold root over a radius of
    roughly ``eps**(1/m)``; averaging the scattered cluster and polishing
    with Newton on the (m-1)-th derivative recovers it to near machine
    precision.  Returns (root, multiplicity) pairs; clusters that fail the
    derivative smallness check are split back into individual roots.
    """
    raw = sorted(poly.roots(), key=lambda z: (z.real, z.imag))
    if not raw:
        return []
    clusters: list[list[complex]] = [[raw[0]]]
    for z in raw[1:]:
        c = np.mean(clusters[-1])
        if abs(z - c) <= cluster_rtol * (1.0 + abs(z)):
            clusters[-1].append(z)
        else:
            clusters.append([z])

    def newton(p: RealPolynomial, z: complex, iters: int = 12) -> complex:
        dp = p.deriv()
        for _ in range(iters):
            d = dp(z)
            if d == 0:
                break
            step = p(z) / d
            z = z - step
            if abs(step) <= 1e-16 * (1.0 + abs(z)):
                break
        return z

    out: list[tuple[complex, int]] = []
    for group in clusters:
        m = len(group)
        center = complex(np.mean(group))
        if m == 1:
            out.append((newton(poly, center), 1))
            continue
        center = newton(poly.deriv(m - 1), center)
        ok = all(
            abs(_poly_deriv_at(poly, center, j)) <= 1e-5
            * max(poly.deriv(j).abs_coeffs()(abs(center)), 1e-300)
            for j in range(m))
        if ok:
            out.append((center, m))
        else:
            out.extend((newton(poly, z), 1) for z in group)
    return out


def _poly_deriv_at(poly: RealPolynomial, z: complex, order: int) -> complex:
    return poly.deriv(order)(z)


def minimal_delay(p0, p1, omega: float) -> float:
    """Smallest tau >= 0 with ``D(j omega; tau) = 0``.

    Solved from the phase of ``-P0(j w)/P1(j w)``; a value that rounds
    slightly negative is clamped into the next period.
    """
    p0, p1 = _as_polys(p0, p1)
    if omega <= 0.0:
        raise ValidationError("minimal delay needs omega > 0")
    z1 = p1(1j * omega)
    if z1 == 0:
        raise ZeroDivisionError("P1(j omega) = 0: invariant imaginary root, no "
                                "delay comb exists")
    ratio = -p0(1j * omega) / z1
    theta = -np.angle(ratio)  # e^{-j w tau} = ratio  =>  w tau = -arg(ratio) (mod 2 pi)
    tau = theta / omega
    period = 2.0 * math.pi / omega
    while tau < 0.0:
        tau += period
    if tau >= period:
        tau -= period
    return float(tau)


def crossing_delays(p0, p1, omega, k_max: int = 3) -> list[float]:
    """Critical delays ``tau* + 2 k pi / w`` for k = 0..k_max."""
    if isinstance(omega, CrossingFrequency):
        omega = omega.omega
    tau0 = minimal_delay(p0, p1, omega)
    period = 2.0 * math.pi / omega
    return [tau0 + k * period for k in range(k_max + 1)]


def hyperbolicity_test(p0, p1) -> tuple[Verdict, dict]:
    """Classify the delay family: hyperbolic / delay-independent stable / crossings.

    Hyperbolic means ``|P1(j w)| < |P0(j w)|`` for all real w, so no root
    ever touches the imaginary axis and the unstable-root count is the
    same for every delay.  When additionally all roots of ``P0 + P1`` lie
    in the open left half-plane the system is delay-independently stable.
    The returned info dict carries the crossing set and a flag for an
    invariant root at the origin (``P0(0) + P1(0) = 0``).
    """
    p0, p1 = _as_polys(p0, p1)
    if p0.degree <= p1.degree:
        raise ValidationError("retarded type required: deg P0 > deg P1")
    _check_coprime(p0, p1)
    s = p0 + p1
    info: dict = {"zero_invariant_root": abs(s(0.0)) <= 1e-12 * max(
        1.0, s.abs_coeffs()(0.0))}
    crossings = crossing_set(p0, p1) if not p1.is_zero else []
    info["crossing_set"] = crossings
    if crossings:
        return Verdict.CROSSINGS_EXIST, info
    sum_roots = s.roots()
    info["sum_spectrum"] = sum_roots
    if sum_roots.size and np.max(sum_roots.real) < 0.0 and not info["zero_invariant_root"]:
        return Verdict.DELAY_INDEPENDENT_STABLE, info
    return Verdict.HYPERBOLIC, info


def crossing_direction_simple(qp: Quasipolynomial, omega0: float, tau0: float,
                              tol: float = 1e-9) -> Direction:
    """Crossing direction of a simple imaginary root as tau increases.

    Sign of ``Re(d lam / d tau) = Re(-D_tau / D_lam)`` at ``(j w0, tau0)``:
    positive means the root (and its conjugate) enter the right half-plane
    (a stability switch), negative a reversal.  Raises
    :class:`MultipleRootError` when ``D_lam`` vanishes; returns
    ``Direction.DEGENERATE`` when the real part is below tolerance, in
    which case the multiple-root expansion machinery decides.
    """
    if not isinstance(qp.delays, Commensurate):
        raise ValidationError("crossing direction requires a commensurate structure")
    lam = 1j * omega0
    dlam = mixed_derivative(qp, lam, tau0, 1, 0)
    dtau = mixed_derivative(qp, lam, tau0, 0, 1)
    scale = max(abs(dlam), abs(dtau), 1e-300)
    if abs(dlam) <= tol * scale:
        raise MultipleRootError(
            f"D_lam vanishes at (j{omega0:g}, {tau0:g}): multiple root; use the "
            "expansion machinery")
    slope = -dtau / dlam
    if abs(slope.real) <= tol * abs(slope):
        return Direction.DEGENERATE
    return Direction.SWITCH if slope.real > 0 else Direction.REVERSAL

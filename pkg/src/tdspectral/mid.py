"""Multiplicity-induced-dominancy design: partial pole placement by maximal multiplicity.

For the delay system ``y^(n) + sum a_k y^(k) + sum alpha_k y^(k)(t - tau) = 0``
a real root of the characteristic quasipolynomial can reach multiplicity
``m + n + 1`` (one more than the number of free coefficients), and a root of
that maximal multiplicity is automatically the rightmost one.  This module
computes the closed-form coefficient assignment, certifies dominance by a
deflated contour scan, and covers three companion designs: the delayed
proportional-derivative stabilization of an unstable second-order plant, the
complex-conjugate double-root placement, and the delayed-resonator absorber.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .core import (
    Commensurate,
    Quasipolynomial,
    RealPolynomial,
    derivative_majorant,
    evaluate,
    mixed_derivative,
    modulus_bound,
)
from .errors import BudgetExhaustedError, ValidationError
from .rootfinder import (
    ComplexBox,
    DeflatedMap,
    QuasipolynomialMap,
    multiplicity_at,
    roots_in_box,
    winding_count,
    winding_with_jitter,
)

__all__ = [
    "MIDAssignment",
    "DominanceCertificate",
    "max_multiplicity_coefficients",
    "complex_pair_coefficients",
    "verify_multiplicity",
    "kummer_phi",
    "r_polynomial",
    "factorization_residual",
    "certify_dominance",
    "pendulum_pd_design",
    "PendulumDesign",
    "resonator_design",
    "ResonatorDesign",
]

COMPLEX_PAIR_SWITCH = 1e-4   # |tau*theta0| below this: fall back to the real formulas


@dataclass(frozen=True)
class MIDAssignment:
    """A coefficient assignment placing a root of prescribed multiplicity.

    ``a`` holds the undelayed coefficients (ascending, degree n monic and
    not stored); ``alpha`` the delayed ones (ascending, degree m).  For
    the complex-pair variant ``lam0`` is the upper root of the conjugate
    pair and the placed multiplicity is 2 at each of the two roots.
    """

    n: int
    m: int
    lam0: complex
    tau: float
    a: tuple[float, ...]
    alpha: tuple[float, ...]
    target_multiplicity: int
    decay_estimate: float = field(default=0.0)

    def quasipolynomial(self) -> Quasipolynomial:
        p0 = RealPolynomial(self.a + (1.0,))
        p1 = RealPolynomial(self.alpha)
        return Quasipolynomial(Commensurate(self.tau), [(0, p0), (1, p1)])

    @property
    def stable_predicate(self) -> bool:
        """Closed-form stability test: ``a_{n-1} > -n (m+1) / tau``."""
        return self.a[self.n - 1] > -self.n * (self.m + 1) / self.tau


def max_multiplicity_coefficients(n: int, m: int, lam0: float, tau: float
                                  ) -> MIDAssignment:
    """Coefficients making ``lam0`` a real root of maximal multiplicity m+n+1.

    The two closed-form sums are total in the parameters; the resulting
    assignment is checked against the derivative-vanishing invariant
    before being returned.
    """
    if not (0 <= m <= n and n >= 1):
        raise ValidationError("require 0 <= m <= n with n >= 1")
    if tau <= 0:
        raise ValidationError("tau must be positive")
    lam0 = float(lam0)
    a = []
    for k in range(n):
        s = 0.0
        for i in range(k, n + 1):
            s += (math.comb(i, k) * math.comb(m + n - i, m) * lam0 ** (i - k)
                  / (math.factorial(i) * tau ** (n - i)))
        a.append((-1.0) ** (n - k) * math.factorial(n) * s)
    alpha = []
    for k in range(m + 1):
        s = 0.0
        for i in range(k, m + 1):
            s += ((-1.0) ** (i - k) * math.factorial(m + n - i) * lam0 ** (i - k)
                  / (math.factorial(k) * math.factorial(i - k)
                     * math.factorial(m - i) * tau ** (n - i)))
        alpha.append((-1.0) ** (n - 1) * math.exp(lam0 * tau) * s)
    asg = MIDAssignment(n, m, lam0, float(tau), tuple(a), tuple(alpha),
                        m + n + 1, decay_estimate=-lam0)
    ok, report = verify_multiplicity(asg)
    if not ok:
        raise ValidationError(f"assignment failed its multiplicity invariant: {report}")
    return asg


def verify_multiplicity(asg: MIDAssignment, zero_rtol: float = 1e-8,
                        nonzero_rtol: float = 1e-6) -> tuple[bool, dict]:
    """Check the derivative-vanishing invariant of an assignment.

    Derivatives of order up to ``target_multiplicity - 1`` must vanish at
    the placed root(s) relative to the per-order sum of addend magnitudes,
    and the next derivative must clear it.  Returns (ok, report).
    """
    qp = asg.quasipolynomial()
    roots = [asg.lam0]
    if abs(complex(asg.lam0).imag) > 0:
        roots.append(complex(asg.lam0).conjugate())
    report = {}
    ok = True
    for r in roots:
        ratios = []
        for k in range(asg.target_multiplicity + 1):
            val = mixed_derivative(qp, r, asg.tau, k, 0)
            maj = derivative_majorant(qp, r, asg.tau, k, 0)
            ratios.append(abs(val) / max(maj, 1e-300))
        report[r] = ratios
        ok = ok and all(x < zero_rtol for x in ratios[:-1]) \
            and ratios[-1] > nonzero_rtol
    return ok, report


def complex_pair_coefficients(sigma0: float, theta0: float, tau: float
                              ) -> MIDAssignment:
    """Second-order design with double roots at ``sigma0 +/- j theta0``.

    Requires ``theta0 != 0``; for ``|tau*theta0|`` below the documented
    threshold the formulas are numerically degenerate and the assignment
    continuously matches the real quadruple-root design at ``sigma0``, so
    that is returned instead.
    """
    if theta0 == 0.0:
        raise ValidationError("theta0 must be nonzero; use the real design")
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if abs(tau * theta0) < COMPLEX_PAIR_SWITCH:
        real = max_multiplicity_coefficients(2, 1, sigma0, tau)
        return MIDAssignment(2, 1, complex(sigma0, theta0), real.tau, real.a,
                             real.alpha, 2, decay_estimate=-sigma0)
    x = tau * theta0
    den = tau ** 2 * theta0 ** 2 - math.sin(x) ** 2
    a1 = -2.0 * sigma0 - theta0 * (2.0 * x - math.sin(2.0 * x)) / den
    a0 = sigma0 ** 2 + (sigma0 * theta0 * (2.0 * x - math.sin(2.0 * x))
                        + tau ** 2 * theta0 ** 4
                        + theta0 ** 2 * math.sin(x) ** 2) / den
    e = math.exp(sigma0 * tau)
    alpha1 = 2.0 * theta0 * e * (x * math.cos(x) - math.sin(x)) / den
    alpha0 = 2.0 * theta0 * e * ((sigma0 - tau * theta0 ** 2) * math.sin(x)
                                 - tau * sigma0 * theta0 * math.cos(x)) / den
    asg = MIDAssignment(2, 1, complex(sigma0, theta0), float(tau),
                        (a0, a1), (alpha0, alpha1), 2, decay_estimate=-sigma0)
    # the second derivative at the pair scales like (tau*theta0)^2 as the
    # roots approach a real quadruple root, so the nonvanishing threshold
    # must shrink with it
    ok, report = verify_multiplicity(
        asg, nonzero_rtol=min(1e-6, 1e-2 * (tau * theta0) ** 2))
    if not ok:
        raise ValidationError(f"complex-pair assignment failed verification: {report}")
    return asg


# ---------------------------------------------------------------------------
# Kummer confluent hypergeometric function
# ---------------------------------------------------------------------------


def kummer_phi(a: float, b: float, z: complex, method: str = "auto",
               tol: float = 1e-14) -> complex:
    """Confluent hypergeometric ``Phi(a, b, z)`` (the 1F1 series).

    ``method='series'`` sums the entire power series;
    ``method='integral'`` evaluates the Euler integral
    ``Gamma(b)/(Gamma(a)Gamma(b-a)) * int_0^1 t^(a-1)(1-t)^(b-a-1) e^(zt) dt``
    (valid for ``b > a > 0``) by adaptive quadrature after the
    substitution ``t = s**(1/a)`` that removes the left endpoint
    singularity.  ``'auto'`` uses the integral for strongly negative real
    arguments, where the series cancels badly.
    """
    z = complex(z)
    if method == "auto":
        method = "integral" if (z.real < -25.0 and b > a > 0) else "series"
    if method == "series":
        term = 1.0 + 0.0j
        acc = term
        for k in range(1, 10000):
            term *= (a + k - 1) / ((b + k - 1) * k) * z
            acc += term
            if abs(term) <= tol * max(abs(acc), 1.0):
                return acc
        raise BudgetExhaustedError("hypergeometric series did not converge")
    if method != "integral":
        raise ValidationError(f"unknown method {method!r}")
    if not (b > a > 0):
        raise ValidationError("integral representation requires b > a > 0")
    # t = s**(1/a):  int = (1/a) * int_0^1 (1 - s**(1/a))**(b-a-1) e^(z s**(1/a)) ds
    inv_a = 1.0 / a
    pw = b - a - 1.0

    def f(s, part):
        t = s ** inv_a
        val = (1.0 - t) ** pw * cmath.exp(z * t)
        return val.real if part == 0 else val.imag

    re, _ = quad(f, 0.0, 1.0, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=300)
    im, _ = quad(f, 0.0, 1.0, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=300)
    const = math.gamma(b) / (math.gamma(a) * math.gamma(b - a)) * inv_a
    return const * complex(re, im)


def kummer_factorization_residual(asg: MIDAssignment, lam: complex) -> complex:
    """Residual of the hypergeometric factorization at a point.

    In the normalized frame (tau = 1, root at 0) the maximal-multiplicity
    quasipolynomial equals
    ``n! z^(m+n+1) / (m+n+1)! * Phi(m+1, m+n+2, -z)``; general parameters
    reduce to it by the exact scaling ``z = tau (lam - lam0)``.
    """
    n, m = asg.n, asg.m
    z = asg.tau * (lam - asg.lam0)
    lhs = evaluate(asg.quasipolynomial(), lam, asg.tau)
    rhs = (math.factorial(n) * z ** (m + n + 1) / math.factorial(m + n + 1)
           * kummer_phi(m + 1, m + n + 2, -z))
    return lhs - rhs * asg.tau ** (-n)


# ---------------------------------------------------------------------------
# the R_k polynomial family and the integral factorization
# ---------------------------------------------------------------------------


def r_polynomial(p0: RealPolynomial, k: int, lam: complex, tau: float) -> complex:
    """``R_k(lam; tau) = sum_i C(k, i) P0^(i)(lam) tau^(k-i)``."""
    if k < 0:
        raise ValidationError("k must be nonnegative")
    if not isinstance(p0, RealPolynomial):
        p0 = RealPolynomial(p0)
    return sum(math.comb(k, i) * p0.deriv(i)(lam) * tau ** (k - i)
               for i in range(k + 1))


def factorization_residual(asg: MIDAssignment, lam: complex) -> complex:
    """Residual of the integral factorization for roots of multiplicity >= n.

    A quasipolynomial of this family with a real n-fold (or higher) root
    at ``lam0`` factors as
    ``(lam - lam0)^n (1 + int_0^1 e^{-(lam-lam0) tau t} tau R_{n-1}(lam0; tau t)/(n-1)! dt)``;
    the residual is evaluated by adaptive quadrature and should vanish to
    quadrature accuracy.
    """
    n = asg.n
    lam0 = complex(asg.lam0).real
    p0 = RealPolynomial(asg.a + (1.0,))
    tau = asg.tau
    shift = lam - lam0

    def f(t, part):
        val = cmath.exp(-shift * tau * t) * tau \
            * r_polynomial(p0, n - 1, lam0, tau * t) / math.factorial(n - 1)
        return val.real if part == 0 else val.imag

    re, _ = quad(f, 0.0, 1.0, args=(0,), epsabs=1e-13, epsrel=1e-12, limit=300)
    im, _ = quad(f, 0.0, 1.0, args=(1,), epsabs=1e-13, epsrel=1e-12, limit=300)
    lhs = evaluate(asg.quasipolynomial(), lam, tau)
    return lhs - shift ** n * (1.0 + complex(re, im))


# ---------------------------------------------------------------------------
# dominance certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DominanceCertificate:
    """Outcome of a dominance check for a placed root (pair)."""

    passed: bool
    method: str                    # "root-scan" or "sufficient-condition"
    margin: float                  # lower bound on lam0 - Re(other roots); scan only
    scanned_box: tuple | None = None
    details: dict = field(default_factory=dict)


def _sufficient_condition(asg: MIDAssignment, samples: int = 400) -> bool:
    """Nonpositivity of ``R_{n-1}(lam0; tau t)`` on (0, 1] implies dominance."""
    if asg.m != asg.n - 1 or complex(asg.lam0).imag != 0.0:
        return False
    p0 = RealPolynomial(asg.a + (1.0,))
    ts = np.linspace(1.0 / samples, 1.0, samples)
    vals = [r_polynomial(p0, asg.n - 1, complex(asg.lam0).real, asg.tau * t).real
            for t in ts]
    return max(vals) <= 0.0


def certify_dominance(asg: MIDAssignment, *, strip: float = 0.5,
                      use_sufficient_precheck: bool = False,
                      rng=None) -> DominanceCertificate:
    """Certify that the placed root (pair) is rightmost.

    The scan works in the normalized frame ``z = tau (lam - lam0)`` where
    the coefficients are well conditioned, deflates the placed roots out
    of the map, and counts remaining roots in
    ``[-strip, W] x [-H, H]`` with W, H from the a-priori modulus bound:
    a zero count certifies a margin of ``strip / tau``.  With ``m == n``
    (neutral boundary case) dominance is replaced by the check that
    sampled roots sit on the critical vertical line.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    lam0 = complex(asg.lam0)
    if use_sufficient_precheck and _sufficient_condition(asg):
        return DominanceCertificate(True, "sufficient-condition", math.nan)

    if lam0.imag == 0.0:
        qp = _normalized_quasipolynomial(asg)
        M = asg.target_multiplicity
        base = QuasipolynomialMap(qp, 1.0)
        fmap = DeflatedMap(base, [(0.0, M)], taylor_radius=max(1.0, 2.2 * strip),
                           taylor_terms=40)
        if asg.m == asg.n:  # neutral: every root on the critical line
            clusters = roots_in_box(qp, 1.0, ComplexBox(-1.0, 1.0, 0.5, 14.0),
                                    rng=rng, _fmap=fmap)
            off = [c for c in clusters if abs(c.center.real) > 1e-4]
            return DominanceCertificate(
                not off, "root-scan", 0.0, (-1.0, 1.0, 0.5, 14.0),
                {"sampled_roots": [c.center / asg.tau + lam0 for c in clusters]})
        bound = modulus_bound(qp, 1.0, -strip)
        box = ComplexBox(-strip, bound, -bound, bound)
        w, used = winding_with_jitter(fmap, box, sides=(False, True, True, True),
                                      rng=rng)
        if w == 0:
            return DominanceCertificate(
                True, "root-scan", strip / asg.tau,
                (used.re_min, used.re_max, used.im_min, used.im_max))
        clusters = roots_in_box(qp, 1.0, used, rng=rng, _fmap=fmap)
        worst = max(c.center.real for c in clusters)
        return DominanceCertificate(
            worst < 0.0, "root-scan", -worst / asg.tau,
            (used.re_min, used.re_max, used.im_min, used.im_max),
            {"offending_roots": [c.center / asg.tau + lam0 for c in clusters
                                 if c.center.real >= 0.0]})

    # complex pair: deflate both double roots in original coordinates
    qp = asg.quasipolynomial()
    delta = min(0.01 * (1.0 + abs(lam0.real)), 0.45 * abs(lam0.imag))
    base = QuasipolynomialMap(qp, asg.tau)
    fmap = DeflatedMap(base, [(lam0, 2), (lam0.conjugate(), 2)],
                       taylor_radius=min(0.45 * abs(lam0.imag), 0.5))
    bound = modulus_bound(qp, asg.tau, lam0.real - delta)
    box = ComplexBox(lam0.real - delta, lam0.real + bound, -bound, bound)
    w, used = winding_with_jitter(fmap, box, sides=(False, True, True, True), rng=rng)
    if w == 0:
        return DominanceCertificate(True, "root-scan", delta,
                                    (used.re_min, used.re_max, used.im_min,
                                     used.im_max))
    clusters = roots_in_box(qp, asg.tau, used, rng=rng, _fmap=fmap)
    worst = max(c.center.real for c in clusters)
    return DominanceCertificate(worst < lam0.real, "root-scan", lam0.real - worst,
                                (used.re_min, used.re_max, used.im_min, used.im_max))


def _shift_scale_poly(p: RealPolynomial, lam0: float, tau: float, n: int
                      ) -> RealPolynomial:
    """Coefficients of ``tau**n * p(lam0 + z / tau)`` (ascending in z)."""
    out = [0.0] * (p.degree + 1 if not p.is_zero else 1)
    for k, c in enumerate(p.coeffs):
        for j in range(k + 1):
            out[j] += c * math.comb(k, j) * lam0 ** (k - j) * tau ** (n - j)
    return RealPolynomial(out)


def _normalized_quasipolynomial(asg: MIDAssignment) -> Quasipolynomial:
    """The design in the frame ``z = tau (lam - lam0)`` (roots scale exactly).

    Maximal-multiplicity assignments are rebuilt from the closed form at
    (0, 1), which is perfectly conditioned; other assignments (e.g. the
    triple-root PD design) are transformed coefficient-wise.
    """
    lam0 = complex(asg.lam0).real
    if asg.target_multiplicity == asg.m + asg.n + 1:
        return max_multiplicity_coefficients(asg.n, asg.m, 0.0, 1.0).quasipolynomial()
    scale = math.exp(-lam0 * asg.tau)
    p0 = _shift_scale_poly(RealPolynomial(asg.a + (1.0,)), lam0, asg.tau, asg.n)
    p1 = _shift_scale_poly(RealPolynomial(asg.alpha), lam0, asg.tau, asg.n)
    return Quasipolynomial(Commensurate(1.0), [(0, p0), (1, p1.scale(scale))])


# ---------------------------------------------------------------------------
# delayed PD stabilization of an open-loop unstable second-order plant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PendulumDesign:
    """Closed-form delayed-PD gains forcing a triple real root."""

    a0: float
    tau: float
    b0: float
    b1: float
    lam_plus: float
    lam_minus: float
    tau_crit: float
    stable: bool

    def quasipolynomial(self) -> Quasipolynomial:
        return Quasipolynomial(
            Commensurate(self.tau),
            [(0, RealPolynomial([self.a0, 0.0, 1.0])),
             (1, RealPolynomial([self.b0, self.b1]))])

    def assignment(self) -> MIDAssignment:
        return MIDAssignment(2, 1, self.lam_plus, self.tau,
                             (self.a0, 0.0), (self.b0, self.b1), 3,
                             decay_estimate=-self.lam_plus)


def pendulum_pd_design(a0: float, tau: float) -> PendulumDesign:
    """Delayed PD gains placing a triple root for ``y'' + a0 y`` (a0 < 0).

    The triple root ``lam_plus = (-2 + sqrt(2 - a0 tau^2))/tau`` is
    negative (and dominant) exactly for delays below
    ``tau_crit = sqrt(-2/a0)``; at the critical delay the gains reduce to
    ``(-a0, -a0 tau_crit)`` and the triple root sits at the origin.
    Designs at or beyond the critical delay are returned flagged
    unstable.
    """
    if a0 >= 0:
        raise ValidationError("the open-loop plant must be unstable: a0 < 0")
    if tau <= 0:
        raise ValidationError("tau must be positive")
    disc = 2.0 - a0 * tau * tau
    lam_p = (-2.0 + math.sqrt(disc)) / tau
    lam_m = (-2.0 - math.sqrt(disc)) / tau
    e = math.exp(lam_p * tau)
    b0 = e * (tau * lam_p ** 3 + lam_p ** 2 + a0 * tau * lam_p - a0)
    b1 = -e * (tau * lam_p ** 2 + 2.0 * lam_p + a0 * tau)
    tau_crit = math.sqrt(-2.0 / a0)
    design = PendulumDesign(a0, tau, b0, b1, lam_p, lam_m, tau_crit,
                            stable=tau < tau_crit)
    qp = design.quasipolynomial()
    if multiplicity_at(qp, tau, lam_p) < 3:
        raise ValidationError("triple-root invariant failed")
    return design


# ---------------------------------------------------------------------------
# delayed resonator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonatorDesign:
    """Active vibration absorber with a double zero pinned at the excitation."""

    omega: float
    k: int
    tau: float
    gain_position: float
    gain_velocity: float
    gain_delayed_velocity: float

    def quasipolynomial(self) -> Quasipolynomial:
        t = self.tau
        sign = (-1.0) ** self.k
        return Quasipolynomial(
            Commensurate(t),
            [(0, RealPolynomial([self.omega ** 2, -2.0 / t, 1.0])),
             (1, RealPolynomial([0.0, 2.0 * sign / t]))])


def resonator_design(omega: float, k: int, m_a: float, zeta: float,
                     big_omega: float) -> ResonatorDesign:
    """Absorber feedback placing a double root at ``+/- j omega``.

    The delay is ``tau_k = k pi / omega``; the feedback channels are
    position, velocity and delayed velocity with gains
    ``m_a (Omega^2 - omega^2)``, ``2 m_a (zeta Omega + 1/tau_k)`` and
    ``-2 m_a (-1)^k / tau_k``.  The double root is verified before
    returning.
    """
    if omega <= 0 or k < 1 or m_a <= 0:
        raise ValidationError("require omega > 0, k >= 1, m_a > 0")
    tau_k = k * math.pi / omega
    design = ResonatorDesign(
        omega, int(k), tau_k,
        m_a * (big_omega ** 2 - omega ** 2),
        2.0 * m_a * (zeta * big_omega + 1.0 / tau_k),
        -2.0 * m_a * (-1.0) ** k / tau_k)
    qp = design.quasipolynomial()
    if multiplicity_at(qp, tau_k, 1j * omega) != 2:
        raise ValidationError("double-root invariant failed")
    return design

"""Local asymptotics of multiple characteristic roots.

Given an m-fold root ``lam*`` at a critical delay ``tau*``, the m nearby
roots expand in fractional powers of the delay offset.  The machinery:

1. *Partial index table*: for each i < m, the first tau-order ``n_i`` with
   a nonvanishing mixed derivative at the critical pair.
2. *Newton diagram*: the integer points ``(i, n_i)`` plus ``(m, 0)``; its
   lower convex hull decomposes into segments of exactly rational slope.
3. *Segment polynomials*: normalized derivative coefficients attached to
   the points of a segment; their roots are the leading Puiseux
   coefficients for that segment's exponent.
4. *Branch expansion*: one branch per segment-polynomial root, with a
   second-order refinement (one further Newton-Puiseux round on the
   truncated local series) for simple roots, used to break tangential
   ties when the leading coefficient is purely imaginary.

All arithmetic on diagram slopes is exact (integers / fractions); only
the branch coefficients are floating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import PointEvaluator, Quasipolynomial, TwoDelayEvaluator, shifted_evaluator, \
    two_delay_evaluator, polya_szego_degree
from .errors import NotSupportedError, UnresolvedTangencyError, ValidationError
from .rootfinder import multiplicity_at

__all__ = [
    "INF",
    "PartialIndexTable",
    "NewtonDiagram",
    "PolygonSegment",
    "WeierstrassTerm",
    "BranchPolynomial",
    "PuiseuxBranch",
    "SplittingClass",
    "BranchDirection",
    "LocalExpansion",
    "CriticalPairAnalysis",
    "partial_indices",
    "newton_diagram",
    "polygon_segments",
    "weierstrass_leading",
    "branch_polynomials",
    "expand_branches",
    "classify_splitting",
    "crossing_direction_multiple",
    "expand_at",
    "analyze_critical_pair",
    "TwoDelayIndexTable",
    "partial_indices_2d",
    "two_delay_expansion",
]

INF = math.inf

STRUCTURAL_ZERO_RTOL = 1e-9   # |derivative| below this * majorant = structural zero
TANGENT_RTOL = 1e-6           # |Re c| below this * |c| = tangential leading term


class SplittingClass(enum.Enum):
    CRS = "complete-regular"
    RS = "regular"
    NRS = "non-regular"


class BranchDirection(enum.Enum):
    ENTERS_RIGHT = "enters-right-half-plane"
    ENTERS_LEFT = "enters-left-half-plane"
    TANGENTIAL = "tangential-undecided"
    INVARIANT = "invariant"


# ---------------------------------------------------------------------------
# partial indices and the Newton diagram
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialIndexTable:
    """First nonvanishing tau-orders ``n_i`` for i < m (``inf`` when none).

    ``kappa`` counts the leading run of infinite entries: that many roots
    stay pinned at the expansion point for every delay.  ``ambiguous``
    flags indices whose scan came within an order of magnitude of the
    structural-zero threshold before being declared infinite.
    """

    m: int
    n: tuple[float, ...]
    kappa: int
    ambiguous: tuple[int, ...] = ()


def _scan_first_order(value, majorant, cap: int, rel_tol: float):
    """First order >= 1 whose derivative clears the threshold."""
    close_call = 0.0
    for n in range(1, cap + 1):
        v = abs(value(n))
        mj = majorant(n)
        if mj == 0.0:
            continue
        if v > rel_tol * mj:
            return n, False
        close_call = max(close_call, v / mj)
    return INF, close_call > 0.1 * rel_tol


def partial_indices(ev: PointEvaluator, m: int, cap_n: int | None = None,
                    rel_tol: float = STRUCTURAL_ZERO_RTOL) -> PartialIndexTable:
    """Scan mixed derivatives at the expansion point for the index table.

    The evaluator must be centered on a verified m-fold root.  A
    derivative counts as structurally zero when its magnitude stays below
    ``rel_tol`` times the sum of magnitudes of its addends.
    """
    if cap_n is None:
        cap_n = polya_szego_degree(ev.qp) + 2
    ns: list[float] = []
    ambiguous: list[int] = []
    for i in range(m):
        n_i, close = _scan_first_order(lambda n, i=i: ev.deriv(i, n),
                                       lambda n, i=i: ev.majorant(i, n),
                                       cap_n, rel_tol)
        if close:
            ambiguous.append(i)
        ns.append(n_i)
    kappa = 0
    while kappa < m and ns[kappa] == INF:
        kappa += 1
    return PartialIndexTable(m, tuple(ns), kappa, tuple(ambiguous))


@dataclass(frozen=True)
class NewtonDiagram:
    """Diagram points ``(k, rho_k)``; indices below kappa are omitted."""

    points: tuple[tuple[int, int], ...]
    m: int
    kappa: int


def newton_diagram(table: PartialIndexTable, m: int | None = None) -> NewtonDiagram:
    """Points ``(i, n_i)`` for finite ``n_i`` with ``i >= kappa``, plus ``(m, 0)``."""
    if m is None:
        m = table.m
    pts = [(i, int(table.n[i])) for i in range(table.kappa, m) if table.n[i] != INF]
    pts.append((m, 0))
    return NewtonDiagram(tuple(pts), m, table.kappa)


@dataclass(frozen=True)
class PolygonSegment:
    """One lower-hull segment: exact slope, branch count and its point set."""

    beta: Fraction
    m_seg: int
    points: tuple[tuple[int, int], ...]
    i_start: int
    ell_start: int
    i_end: int
    ell_end: int

    @property
    def drop(self) -> int:
        """Ordinate decrease along the segment (= m_seg * beta)."""
        return self.ell_start - self.ell_end


def polygon_segments(diagram: NewtonDiagram | tuple, kappa: int | None = None
                     ) -> list[PolygonSegment]:
    """Lower-hull segmentation of the diagram, slopes in exact rationals.

    Steepest-first greedy walk: starting from the leftmost point, each
    step picks the largest slope ``(ell - ell_prev)/(i_prev - i)`` among
    the remaining points and advances to the rightmost point attaining
    it, until the abscissa reaches m.
    """
    if isinstance(diagram, NewtonDiagram):
        pts, m, kappa = list(diagram.points), diagram.m, diagram.kappa
    else:
        pts = sorted(diagram)
        m = max(i for i, _ in pts)
        kappa = kappa or 0
    if (m, 0) not in pts:
        raise ValidationError("diagram must contain the point (m, 0)")
    by_k = dict(pts)
    i_prev, ell_prev = kappa, by_k.get(kappa)
    if ell_prev is None:
        # kappa == m (all roots invariant) or no point at kappa: no branches
        return []
    segments: list[PolygonSegment] = []
    while i_prev < m:
        slopes = {}
        for i, ell in pts:
            if i > i_prev:
                slopes[(i, ell)] = Fraction(ell - ell_prev, i_prev - i)
        beta = max(slopes.values())
        on_seg = sorted([pt for pt, s in slopes.items() if s == beta]
                        + [(i_prev, ell_prev)])
        i_r, ell_r = on_seg[-1]
        segments.append(PolygonSegment(beta, i_r - i_prev, tuple(on_seg),
                                       i_prev, ell_prev, i_r, ell_r))
        i_prev, ell_prev = i_r, ell_r
    return segments


# ---------------------------------------------------------------------------
# Weierstrass-factor leading terms and segment polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeierstrassTerm:
    """Leading term ``coeff * offset**exponent`` of one factor coefficient."""

    i: int
    exponent: float
    coeff: complex


def _series_coeff(ev, i: int, j: int, rel_tol: float = STRUCTURAL_ZERO_RTOL) -> complex:
    """Local Taylor coefficient with structural zeros snapped to 0."""
    d = ev.deriv(i, j)
    if abs(d) <= rel_tol * ev.majorant(i, j):
        return 0.0 + 0.0j
    return d / (math.factorial(i) * math.factorial(j))


def weierstrass_leading(ev: PointEvaluator, table: PartialIndexTable,
                        m: int | None = None) -> tuple[list[WeierstrassTerm], bool]:
    """Leading terms of the local monic factor's coefficients.

    ``w_i`` has leading term ``(m! / (i! n_i! D_m)) * D_{i,n_i} * v**n_i``
    where ``D_m`` is the pure m-th lambda-derivative and ``D_{i,n_i}`` the
    first nonvanishing mixed derivative.  The closed form holds when the
    finite indices are strictly decreasing in i; the returned flag is
    False when that hypothesis fails (values still returned).
    """
    if m is None:
        m = table.m
    dm = ev.deriv(m, 0)
    terms = []
    finite = [(i, int(n)) for i, n in enumerate(table.n[:m]) if n != INF]
    valid = all(n2 < n1 for (_, n1), (_, n2) in zip(finite, finite[1:]))
    valid = valid and len(finite) == m - table.kappa
    for i, n in finite:
        c = math.factorial(m) / (math.factorial(i) * math.factorial(n)) \
            * ev.deriv(i, n) / dm
        terms.append(WeierstrassTerm(i, n, c))
    return terms, valid


@dataclass(frozen=True)
class BranchPolynomial:
    """Polynomial whose roots are a segment's leading Puiseux coefficients.

    ``coeffs[t]`` multiplies ``z**t`` with ``z`` standing for the leading
    coefficient; only powers ``k - i_start`` for diagram points on the
    segment are populated.
    """

    segment: PolygonSegment
    coeffs: tuple[complex, ...]
    degenerate: bool

    def roots(self) -> np.ndarray:
        cs = np.array(self.coeffs[::-1])
        r = np.roots(cs)
        dp = np.polyder(cs)
        for _ in range(3):  # Newton polish
            den = np.polyval(dp, r)
            ok = den != 0
            r[ok] -= np.polyval(cs, r[ok]) / den[ok]
        return r


def branch_polynomials(segments: list[PolygonSegment], ev: PointEvaluator
                       ) -> list[BranchPolynomial]:
    """Segment polynomials from normalized local derivatives."""
    out = []
    for seg in segments:
        coeffs = [0.0 + 0.0j] * (seg.m_seg + 1)
        for k, eta in seg.points:
            coeffs[k - seg.i_start] = _normalized_coeff(ev, k, eta)
        lead = coeffs[-1]
        scale = max(abs(c) for c in coeffs)
        out.append(BranchPolynomial(seg, tuple(coeffs),
                                    degenerate=abs(lead) <= 1e-12 * max(scale, 1e-300)))
    return out


def _normalized_coeff(ev: PointEvaluator, k: int, eta: int) -> complex:
    # Series normalization 1/(k! eta!); the conventional extra factor
    # m!/D_m is shared by every coefficient and does not move the roots.
    return _series_coeff(ev, k, eta)


@dataclass(frozen=True)
class PuiseuxBranch:
    """One expansion branch ``lam* + c * v**beta + second_coeff * v**beta2 + ...``.

    ``v`` is the (signed) delay offset of the generating evaluator.
    ``conjugacy_size`` is the denominator of the exponent: branches of one
    segment come in orbits of that size.  ``direction`` reflects the sign
    of the real part of the first term that has one; ``tangential`` marks
    branches whose leading coefficient was purely imaginary so the second
    term decided.
    """

    base: complex
    exponent: Fraction
    coeff: complex
    conjugacy_size: int
    direction: BranchDirection
    tangential: bool = False
    second_exponent: Fraction | None = None
    second_coeff: complex | None = None
    repeated_root: bool = False
    invariant: bool = False

    def predict(self, offset: float, terms: int = 2) -> complex:
        """Root location at the given (positive) parameter offset.

        ``terms=1`` uses the leading term only; ``terms=2`` (default) adds
        the second-order correction when available.
        """
        if self.invariant:
            return self.base
        val = self.base + self.coeff * offset ** float(self.exponent)
        if terms >= 2 and self.second_coeff is not None:
            val += self.second_coeff * offset ** float(self.second_exponent)
        return val


def _second_order(ev: PointEvaluator, seg: PolygonSegment, c: complex,
                  table: PartialIndexTable, s_cap: int = 10):
    """One more Newton-Puiseux round: the next term after ``c v**beta``.

    Substituting ``u = v**beta (c + w)`` into the local series and
    collecting the lowest orders in ``t = v**(1/q)`` gives
    ``w ~ -(T_s / G_w) t**s`` with

        ``G_w = sum_{p i + q j = q mu} i A_{ij} c**(i-1)``
        ``T_s = sum_{p i + q j = q mu + s} A_{ij} c**i``

    where ``A_{ij}`` are local Taylor coefficients and ``mu`` the segment's
    weighted intercept.  Returns ``(exponent, coeff)`` or None when no
    nonvanishing ``T_s`` appears within the scan cap.
    """
    p, q = seg.beta.numerator, seg.beta.denominator
    qmu = p * seg.i_start + q * seg.ell_start
    cap = ev.cap
    m = table.m

    def A(i, j):
        if i < m and (j < (table.n[i] if table.n[i] != INF else math.inf)):
            return 0.0 + 0.0j  # structurally zero below the first index
        if i + j > cap:
            return None
        return _series_coeff(ev, i, j)

    def combo(target):
        acc = 0.0 + 0.0j
        weight = 0.0
        truncated = False
        for i in range(0, min(cap, (qmu + target) // max(p, 1)) + 1):
            rem = qmu + target - p * i
            if rem < 0 or rem % q:
                continue
            j = rem // q
            a = A(i, j)
            if a is None:
                truncated = True
                continue
            acc += a * c ** i
            weight += abs(a) * abs(c) ** i
        return acc, weight, truncated

    # G_w: derivative of the segment polynomial at c (in series normalization)
    gw = 0.0 + 0.0j
    for i in range(0, min(cap, qmu // max(p, 1)) + 1):
        rem = qmu - p * i
        if rem < 0 or rem % q or i == 0:
            continue
        j = rem // q
        a = A(i, j)
        if a:
            gw += i * a * c ** (i - 1)
    if abs(gw) == 0.0:
        return None
    for s in range(1, s_cap + 1):
        ts, weight, truncated = combo(s)
        if abs(ts) > 1e-9 * max(weight, 1e-300):
            return seg.beta + Fraction(s, q), -ts / gw
        if truncated:
            break
    return None


def expand_branches(segments: list[PolygonSegment], polys: list[BranchPolynomial],
                    ev: PointEvaluator, table: PartialIndexTable,
                    tangent_rtol: float = TANGENT_RTOL) -> list[PuiseuxBranch]:
    """Branches for every segment root, plus the kappa invariant ones.

    Leading coefficients are the segment-polynomial roots; for every
    simple root a second term is computed and used to decide the
    direction of branches whose leading real part is below tolerance.
    Clustered (repeated) roots are flagged and carry no second term.
    """
    branches: list[PuiseuxBranch] = []
    for _ in range(table.kappa):
        branches.append(PuiseuxBranch(ev.lam0, Fraction(0), 0.0, 1,
                                      BranchDirection.INVARIANT, invariant=True))
    for seg, poly in zip(segments, polys):
        roots = poly.roots()
        scale = max(np.max(np.abs(roots)), 1e-300) if roots.size else 1.0
        for idx, c in enumerate(roots):
            repeated = any(abs(c - r) <= 1e-6 * scale
                           for t, r in enumerate(roots) if t != idx)
            second = None
            if not repeated:
                second = _second_order(ev, seg, complex(c), table)
            tangential = abs(c.real) <= tangent_rtol * abs(c)
            direction = BranchDirection.TANGENTIAL
            if not tangential:
                direction = (BranchDirection.ENTERS_RIGHT if c.real > 0
                             else BranchDirection.ENTERS_LEFT)
            elif second is not None:
                e2, c2 = second
                if abs(c2.real) > tangent_rtol * max(abs(c2), 1e-300):
                    direction = (BranchDirection.ENTERS_RIGHT if c2.real > 0
                                 else BranchDirection.ENTERS_LEFT)
            branches.append(PuiseuxBranch(
                ev.lam0, seg.beta, complex(c), seg.beta.denominator, direction,
                tangential=tangential,
                second_exponent=None if second is None else second[0],
                second_coeff=None if second is None else second[1],
                repeated_root=repeated))
    return branches


def classify_splitting(segments: list[PolygonSegment]) -> SplittingClass:
    """Regularity of the splitting from the (m_seg, beta) pairs alone.

    Complete regular splitting when every segment drops exactly one
    ordinate unit per branch (``m_seg * beta == 1``); non-regular when a
    multi-branch segment drops more; regular otherwise (the only
    remaining case: single-branch segments with integer slope >= 1).
    """
    if all(seg.m_seg * seg.beta == 1 for seg in segments):
        return SplittingClass.CRS
    if any(seg.m_seg > 1 and seg.m_seg * seg.beta > 1 for seg in segments):
        return SplittingClass.NRS
    return SplittingClass.RS


# ---------------------------------------------------------------------------
# orchestration and direction counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalExpansion:
    """Full local analysis at one critical pair, in one delay direction."""

    qp: Quasipolynomial
    base: complex
    tau: float
    tau_sign: int
    multiplicity: int
    table: PartialIndexTable
    diagram: NewtonDiagram
    segments: tuple[PolygonSegment, ...]
    polynomials: tuple[BranchPolynomial, ...]
    branches: tuple[PuiseuxBranch, ...]
    splitting: SplittingClass


def expand_at(qp: Quasipolynomial, lam0: complex, tau0: float, *,
              multiplicity: int | None = None, tau_sign: int = 1,
              cap_n: int | None = None) -> LocalExpansion:
    """Expand the roots near ``lam0`` in powers of ``tau_sign * (tau - tau0)``.

    ``tau_sign = -1`` analyzes the behavior for delays decreasing from the
    critical value.  The multiplicity is verified (or detected) first.
    """
    if multiplicity is None:
        multiplicity = multiplicity_at(qp, tau0, lam0)
    ev = shifted_evaluator(qp, lam0, tau0, tau_sign)
    table = partial_indices(ev, multiplicity, cap_n)
    diagram = newton_diagram(table)
    segments = polygon_segments(diagram)
    polys = branch_polynomials(segments, ev)
    branches = expand_branches(segments, polys, ev, table)
    return LocalExpansion(qp, complex(lam0), float(tau0), tau_sign, multiplicity,
                          table, diagram, tuple(segments), tuple(polys),
                          tuple(branches), classify_splitting(segments))


@dataclass(frozen=True)
class CriticalPairAnalysis:
    """Two-sided expansion with the resulting unstable-root jump.

    ``delta_nu_batch`` counts the jump among the m roots emanating from
    the critical root itself; ``delta_nu_total`` doubles it for an
    off-axis root (real coefficients pair it with its conjugate).
    """

    forward: LocalExpansion
    backward: LocalExpansion
    delta_nu_batch: int
    delta_nu_total: int


def _count_entering(branches) -> int:
    n = 0
    for b in branches:
        if b.invariant:
            continue
        if b.direction == BranchDirection.TANGENTIAL:
            raise UnresolvedTangencyError(
                "branch direction undecided after second-order refinement")
        if b.direction == BranchDirection.ENTERS_RIGHT:
            n += 1
    return n


def crossing_direction_multiple(forward: LocalExpansion,
                                backward: LocalExpansion) -> CriticalPairAnalysis:
    """Per-branch directions aggregated into the unstable-root jump.

    The forward expansion gives the roots just after the critical delay,
    the backward expansion (``tau_sign = -1``) just before; the jump is
    the difference of right-half-plane counts.
    """
    after = _count_entering(forward.branches)
    before = _count_entering(backward.branches)
    batch = after - before
    off_axis = abs(forward.base.imag) > 1e-12 * (1.0 + abs(forward.base))
    return CriticalPairAnalysis(forward, backward, batch,
                                batch * (2 if off_axis else 1))


def analyze_critical_pair(qp: Quasipolynomial, lam0: complex, tau0: float, *,
                          multiplicity: int | None = None) -> CriticalPairAnalysis:
    """Expand on both sides of the critical delay and classify the crossing."""
    fwd = expand_at(qp, lam0, tau0, multiplicity=multiplicity, tau_sign=1)
    bwd = expand_at(qp, lam0, tau0, multiplicity=fwd.multiplicity, tau_sign=-1)
    return crossing_direction_multiple(fwd, bwd)


# ---------------------------------------------------------------------------
# two independent delays: first-order extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoDelayIndexTable:
    """Per-index first nonvanishing orders in each delay separately.

    ``n1[i]`` / ``n2[i]`` are the first orders in the two delay offsets;
    ``nprime[i]`` is the effective order in the first offset when the pure
    scan is infinite (0 when the coefficient lives on the second delay
    alone, infinite when both scans are empty).
    """

    m: int
    n1: tuple[float, ...]
    n2: tuple[float, ...]
    nprime: tuple[float, ...]
    kappa: int
    ambiguous: tuple[int, ...] = ()


def partial_indices_2d(ev2: TwoDelayEvaluator, m: int, cap_n: int | None = None,
                       rel_tol: float = STRUCTURAL_ZERO_RTOL) -> TwoDelayIndexTable:
    """Scan both delay directions at a verified m-fold root."""
    if cap_n is None:
        cap_n = polya_szego_degree(ev2.qp) + 2
    n1, n2, npr, amb = [], [], [], []
    for i in range(m):
        a, close_a = _scan_first_order(lambda n, i=i: ev2.deriv(i, n, 0),
                                       lambda n, i=i: ev2.majorant(i, n, 0),
                                       cap_n, rel_tol)
        b, close_b = _scan_first_order(lambda n, i=i: ev2.deriv(i, 0, n),
                                       lambda n, i=i: ev2.majorant(i, 0, n),
                                       cap_n, rel_tol)
        if close_a or close_b:
            amb.append(i)
        n1.append(a)
        n2.append(b)
        npr.append(a if a != INF else (0 if b != INF else INF))
    kappa = 0
    while kappa < m and n1[kappa] == INF and n2[kappa] == INF:
        kappa += 1
    return TwoDelayIndexTable(m, tuple(n1), tuple(n2), tuple(npr), kappa, tuple(amb))


@dataclass(frozen=True)
class TwoDelayBranch:
    """Leading-order branch ``lam* + c * (tau1 - tau1*)**beta`` at the base tau2."""

    base: complex
    exponent: Fraction
    coeff: complex
    horizontal: bool = False

    def predict(self, offset1: float) -> complex:
        return self.base + self.coeff * offset1 ** float(self.exponent)


@dataclass(frozen=True)
class TwoDelayExpansion:
    table: TwoDelayIndexTable
    diagram: NewtonDiagram
    segments: tuple[PolygonSegment, ...]
    leading_w: dict
    branches: tuple[TwoDelayBranch, ...]


def two_delay_expansion(qp: Quasipolynomial, lam0: complex, tau1: float, tau2: float,
                        *, multiplicity: int | None = None) -> TwoDelayExpansion:
    """First-order Puiseux structure in ``tau1`` at a two-delay critical point.

    The diagram ordinate of index k is the order of the k-th local factor
    coefficient in the first delay offset (0 when that coefficient lives
    on the second delay alone).  Horizontal segments are returned flagged:
    their branches only move with the second delay.  A negative-slope
    first segment is out of the implemented scope.
    """
    if multiplicity is None:
        multiplicity = multiplicity_at(qp, None, lam0)
    ev2 = two_delay_evaluator(qp, lam0, tau1, tau2)
    table = partial_indices_2d(ev2, multiplicity)
    m = multiplicity
    pts = []
    for i in range(table.kappa, m):
        rho = table.n1[i] if table.n1[i] != INF else table.nprime[i]
        if rho == INF:
            continue
        pts.append((i, int(rho)))
    pts.append((m, 0))
    diagram = NewtonDiagram(tuple(pts), m, table.kappa)
    segments = polygon_segments(diagram)
    if segments and segments[0].beta < 0:
        raise NotSupportedError("negative-slope segments require a change of "
                                "variables that is not implemented")
    dm = ev2.deriv(m, 0, 0)
    leading_w = {}
    for i in range(table.kappa, m):
        if table.n1[i] != INF:
            n = int(table.n1[i])
            leading_w[(i, "tau1")] = (n, math.factorial(m)
                                      / (math.factorial(i) * math.factorial(n))
                                      * ev2.deriv(i, n, 0) / dm)
        if table.n2[i] != INF:
            n = int(table.n2[i])
            leading_w[(i, "tau2")] = (n, math.factorial(m)
                                      / (math.factorial(i) * math.factorial(n))
                                      * ev2.deriv(i, 0, n) / dm)
    branches: list[TwoDelayBranch] = []
    for seg in segments:
        if seg.beta == 0:
            branches.append(TwoDelayBranch(complex(lam0), Fraction(0), 0.0,
                                           horizontal=True))
            continue
        coeffs = [0.0 + 0.0j] * (seg.m_seg + 1)
        for k, eta in seg.points:
            if k == m:
                coeffs[k - seg.i_start] = dm / math.factorial(m)
            else:
                n = int(table.n1[k]) if table.n1[k] != INF else None
                if n is None or n != eta:
                    continue  # point came from the tau2-only order: no tau1 term
                coeffs[k - seg.i_start] = _series_coeff_2d(ev2, k, n)
        scale = max(abs(z) for z in coeffs)
        if abs(coeffs[-1]) <= 1e-12 * max(scale, 1e-300):
            continue
        roots = np.roots(np.array(coeffs[::-1]))
        for c in roots:
            branches.append(TwoDelayBranch(complex(lam0), seg.beta, complex(c)))
    return TwoDelayExpansion(table, diagram, tuple(segments), leading_w,
                             tuple(branches))


def _series_coeff_2d(ev2: TwoDelayEvaluator, k: int, n: int,
                     rel_tol: float = STRUCTURAL_ZERO_RTOL) -> complex:
    d = ev2.deriv(k, n, 0)
    if abs(d) <= rel_tol * ev2.majorant(k, n, 0):
        return 0.0 + 0.0j
    return d / (math.factorial(k) * math.factorial(n))

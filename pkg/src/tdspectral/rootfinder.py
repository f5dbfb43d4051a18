"""Characteristic-root location by argument-principle contour counting.

Roots inside a rectangle are counted (with multiplicity) from the total
phase change of the quasipolynomial along the boundary, sampled adaptively
so that consecutive phase increments stay below pi/2.  Boxes with a
nonzero count are subdivided recursively; terminal clusters are polished
by damped Newton iteration on the (m-1)-th derivative, which has a simple
zero where the quasipolynomial has an m-fold one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .core import Quasipolynomial, evaluate, mixed_derivative, modulus_bound, polya_szego_degree
from .errors import (
    BoundaryRootError,
    BudgetExhaustedError,
    DerivativeCapError,
    ImaginaryAxisRootError,
    NonIntegerWindingError,
    NotARootError,
    ValidationError,
)

__all__ = [
    "ComplexBox",
    "RootCluster",
    "QuasipolynomialMap",
    "DeflatedMap",
    "winding_count",
    "roots_in_box",
    "multiplicity_at",
    "count_unstable",
    "rightmost_roots",
]

# Default tolerances (overridable per call; surfaced as CLI flags).
RESIDUAL_RTOL = 1e-10        # root residual relative to the evaluation majorant
MULTIPLICITY_RTOL = 1e-7     # derivative threshold in multiplicity detection
BOUNDARY_RTOL = 1e-12        # |f| below this (relative) on a contour = boundary root
WINDING_TOL = 0.25           # accepted distance of total phase / 2 pi from an integer
MAX_EDGE_DEPTH = 60          # bisection depth per boundary interval
MAX_SUBDIVISION_DEPTH = 48   # box subdivision depth in roots_in_box
JITTER_FACTOR = 1e-3         # box growth per boundary-root retry
JITTER_TRIES = 5


@dataclass(frozen=True)
class ComplexBox:
    """Axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValidationError("degenerate box: require re_min < re_max, im_min < im_max")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.re_min - slack <= z.real <= self.re_max + slack
                and self.im_min - slack <= z.imag <= self.im_max + slack)

    def corners(self) -> list[complex]:
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def expand(self, amount: float, sides=(True, True, True, True)) -> "ComplexBox":
        """Grow by ``amount`` on the selected (left, right, bottom, top) sides."""
        left, right, bottom, top = sides
        return ComplexBox(self.re_min - (amount if left else 0.0),
                          self.re_max + (amount if right else 0.0),
                          self.im_min - (amount if bottom else 0.0),
                          self.im_max + (amount if top else 0.0))

    def split4(self, fr: float = 0.5, fi: float = 0.5) -> list["ComplexBox"]:
        cr = self.re_min + fr * (self.re_max - self.re_min)
        ci = self.im_min + fi * (self.im_max - self.im_min)
        return [ComplexBox(self.re_min, cr, self.im_min, ci),
                ComplexBox(cr, self.re_max, self.im_min, ci),
                ComplexBox(self.re_min, cr, ci, self.im_max),
                ComplexBox(cr, self.re_max, ci, self.im_max)]


@dataclass(frozen=True)
class RootCluster:
    """A located root: center, multiplicity, residual and resolution."""

    center: complex
    multiplicity: int
    residual: float
    box_diameter: float

    def as_dict(self) -> dict:
        return {"re": self.center.real, "im": self.center.imag,
                "multiplicity": self.multiplicity, "residual": self.residual}


# ---------------------------------------------------------------------------
# evaluation maps fed to the winding machinery
# ---------------------------------------------------------------------------


class QuasipolynomialMap:
    """Vectorized evaluation of ``D(.; tau)`` with per-point majorants."""

    def __init__(self, qp: Quasipolynomial, tau=None):
        self.qp = qp
        self.tau = tau
        self._delays = qp.delay_values(tau)
        self._abs = [p.abs_coeffs() for _, p in qp.terms]

    def values(self, lam: np.ndarray) -> np.ndarray:
        return np.asarray(evaluate(self.qp, lam, self.tau), dtype=complex)

    def majorants(self, lam: np.ndarray) -> np.ndarray:
        alam = np.abs(lam)
        re = np.real(lam)
        out = np.zeros(alam.shape, dtype=float)
        with np.errstate(over="ignore"):
            for (idx, _), d, ap in zip(self.qp.terms, self._delays, self._abs):
                out += np.real(ap(alam)) * np.exp(-re * d)
        return out

    def derivative(self, lam: complex, order: int) -> complex:
        return mixed_derivative(self.qp, lam, self.tau, order, 0)


class DeflatedMap:
    """A quasipolynomial divided by known root factors ``(lam - c_i)**o_i``.

    Near each removed center the value is computed from a truncated Taylor
    series of the quasipolynomial (shifted down by the removed order), so
    the map is well defined and numerically stable on contours passing
    close to, or through, the removed roots.
    """

    def __init__(self, base: QuasipolynomialMap, centers, taylor_radius=0.35,
                 taylor_terms=30):
        self.base = base
        self.qp = base.qp      # roots away from the removed centers coincide,
        self.tau = base.tau    # so Newton polish may use the underlying map
        self.centers = [(complex(c), int(o)) for c, o in centers]
        self.radius = float(taylor_radius)
        self._series = []
        for c, o in self.centers:
            K = o + taylor_terms
            coeffs = np.array([mixed_derivative(base.qp, c, base.tau, k, 0)
                               / math.factorial(k) for k in range(K + 1)])
            self._series.append(coeffs[o:])  # series of D/(lam-c)^o around c

    def _denominator(self, lam, skip=None):
        den = np.ones_like(lam, dtype=complex)
        for j, (c, o) in enumerate(self.centers):
            if j == skip:
                continue
            den = den * (lam - c) ** o
        return den

    def values(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.base.values(lam) / self._denominator(lam)
        for j, (c, o) in enumerate(self.centers):
            near = np.abs(lam - c) < self.radius
            if np.any(near):
                u = lam[near] - c
                s = np.zeros_like(u)
                for coeff in self._series[j][::-1]:
                    s = s * u + coeff
                out[near] = s / self._denominator(lam[near], skip=j)
        return out

    def majorants(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.base.majorants(lam) / np.abs(self._denominator(lam))
        for j, (c, o) in enumerate(self.centers):
            near = np.abs(lam - c) < self.radius
            if np.any(near):
                u = np.abs(lam[near] - c)
                s = np.zeros_like(u)
                for coeff in np.abs(self._series[j][::-1]):
                    s = s * u + coeff
                out[near] = s / np.abs(self._denominator(lam[near], skip=j))
        return out


# ---------------------------------------------------------------------------
# winding number along a box boundary
# ---------------------------------------------------------------------------


def _edge_phase(fmap, intervals, *, boundary_rtol, max_depth):
    """Total phase change over the given boundary intervals.

    Each interval is bisected until its endpoint phase gap is below pi/2
    *and* the function is nearly linear across it (midpoint within 30% of
    the chord midpoint, relative to the smallest modulus involved).  The
    linearity certificate is what makes the count safe: a near-linear
    image segment whose endpoint gap is acute cannot wind around the
    origin, so no localized phase turn from a root lying very close to
    the contour can hide inside an accepted interval.
    """
    total = 0.0
    pending = list(intervals)
    while pending:
        mids = np.array([0.5 * (a + b) for a, b, *_ in pending])
        fmids = fmap.values(mids)
        gmids = fmap.majorants(mids)
        nxt = []
        for (a, b, fa, fb, depth), zm, fm, gm in zip(pending, mids, fmids, gmids):
            if not np.isfinite(fm) or abs(fm) <= boundary_rtol * gm:
                raise BoundaryRootError(
                    f"|f| = {abs(fm):.3e} below boundary tolerance at {zm:.6g}",
                    location=complex(zm))
            dphi = np.angle(fb / fa)
            defect = abs(fm - 0.5 * (fa + fb))
            floor = min(abs(fa), abs(fb), abs(fm))
            if abs(dphi) <= 0.5 * math.pi and defect <= 0.3 * floor:
                total += np.angle(fm / fa) + np.angle(fb / fm)
                continue
            if depth + 1 >= max_depth:
                # a phase jump or dip that survives this deep means a root
                # sits on (or numerically on) the contour
                raise BoundaryRootError(
                    f"unresolvable phase structure near {zm:.6g}",
                    location=complex(zm))
            nxt.append((a, zm, fa, fm, depth + 1))
            nxt.append((zm, b, fm, fb, depth + 1))
        pending = nxt
    return total


def winding_count(fmap, box: ComplexBox, *, samples_per_edge: int = 32,
                  boundary_rtol: float = BOUNDARY_RTOL,
                  winding_tol: float = WINDING_TOL,
                  max_depth: int = MAX_EDGE_DEPTH) -> int:
    """Number of zeros inside ``box``, multiplicity counted.

    ``fmap`` provides vectorized ``values`` and ``majorants``; pass a
    :class:`QuasipolynomialMap` or :class:`DeflatedMap` (or a tuple
    ``(qp, tau)``).  Raises :class:`BoundaryRootError` when the boundary
    sampling dips below tolerance and :class:`NonIntegerWindingError`
    when the accumulated phase does not land on an integer multiple of
    2*pi.
    """
    if isinstance(fmap, tuple):
        fmap = QuasipolynomialMap(*fmap)
    corners = box.corners()
    total = 0.0
    for k in range(4):
        z0, z1 = corners[k], corners[(k + 1) % 4]
        ts = np.linspace(0.0, 1.0, samples_per_edge + 1)
        zs = z0 + ts * (z1 - z0)
        fs = fmap.values(zs)
        gs = fmap.majorants(zs)
        bad = ~np.isfinite(fs) | (np.abs(fs) <= boundary_rtol * gs)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise BoundaryRootError(
                f"|f| below boundary tolerance at {zs[i]:.6g}", location=complex(zs[i]))
        intervals = [(zs[i], zs[i + 1], fs[i], fs[i + 1], 0)
                     for i in range(samples_per_edge)]
        total += _edge_phase(fmap, intervals,
                             boundary_rtol=boundary_rtol, max_depth=max_depth)
    w = total / (2.0 * math.pi)
    if abs(w - round(w)) > winding_tol:
        raise NonIntegerWindingError(
            f"boundary phase {w:.4f} * 2pi is not close to an integer")
    return int(round(w))


def winding_with_jitter(fmap, box: ComplexBox, *, sides=(True, True, True, True),
                        rng=None, **kw):
    """Winding count, expanding the box on boundary roots.

    Grows the box by ``JITTER_FACTOR * diameter`` (on the allowed sides,
    scaled by a small random factor when ``rng`` is given) up to
    :data:`JITTER_TRIES` times before surfacing the error.  Returns the
    count and the box actually used.
    """
    current = box
    for attempt in range(JITTER_TRIES + 1):
        try:
            return winding_count(fmap, current, **kw), current
        except BoundaryRootError as err:
            if attempt == JITTER_TRIES:
                raise
            loc = err.location
            if loc is not None and sides != (True, True, True, True):
                # a dip on a pinned side cannot be jittered away
                pinned_left = not sides[0] and abs(loc.real - current.re_min) \
                    <= 1e-6 * (1.0 + current.diameter)
                if pinned_left:
                    raise
            factor = 1.0 + (0.5 * rng.random() if rng is not None else 0.0)
            current = current.expand(JITTER_FACTOR * factor * current.diameter
                                     * (1 + attempt), sides)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# root clusters
# ---------------------------------------------------------------------------


def _newton_polish(fmap: QuasipolynomialMap, z0: complex, mult: int, *,
                   max_iter: int = 60) -> complex | None:
    """Damped Newton on the (mult-1)-th derivative (simple zero there)."""
    qp, tau = fmap.qp, fmap.tau

    def g(z):
        return mixed_derivative(qp, z, tau, mult - 1, 0)

    def gp(z):
        return mixed_derivative(qp, z, tau, mult, 0)

    z = complex(z0)
    fz = g(z)
    if not np.isfinite(fz):
        return None
    for _ in range(max_iter):
        dz = gp(z)
        if dz == 0 or not np.isfinite(dz):
            return None
        step = fz / dz
        if not np.isfinite(step):
            return None
        # damping: halve until |g| decreases
        t = 1.0
        for _ in range(10):
            znew = z - t * step
            fnew = g(znew)
            if abs(fnew) <= abs(fz):
                break
            t *= 0.5
        else:
            return z
        z, fz = znew, fnew
        if abs(t * step) <= 1e-15 * (1.0 + abs(z)):
            break
    return z


def roots_in_box(qp: Quasipolynomial, tau, box: ComplexBox, tol: float = RESIDUAL_RTOL,
                 *, max_depth: int = MAX_SUBDIVISION_DEPTH, rng=None,
                 _fmap=None) -> list[RootCluster]:
    """All root clusters inside ``box``; multiplicities sum to its winding count.

    Each cluster center is refined by damped Newton iteration on the
    derivative matching the suspected multiplicity, with subdivision as
    the fallback when polishing stalls.  Raises
    :class:`BudgetExhaustedError` with the unresolved sub-box when the
    subdivision depth cap is hit.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    fmap = _fmap if _fmap is not None else QuasipolynomialMap(qp, tau)
    w, used = winding_with_jitter(fmap, box, rng=rng)
    clusters: list[RootCluster] = []
    _resolve(fmap, used, w, tol, 0, max_depth, rng, clusters)
    clusters.sort(key=lambda c: (-c.center.real, c.center.imag))
    return clusters


def _cluster_box(center: complex, size: float) -> ComplexBox:
    h = 0.5 * size
    return ComplexBox(center.real - h, center.real + h, center.imag - h, center.imag + h)


def _resolve(fmap, box, w, tol, depth, max_depth, rng, out):
    if w == 0:
        return
    # try to polish the whole count into a single cluster
    z = _newton_polish(fmap, box.center, w)
    if z is not None and box.contains(z, slack=0.05 * box.diameter):
        val, maj = _eval_scalar(fmap, z)
        if abs(val) <= tol * max(maj, 1e-300):
            size = max(1e-7 * (1.0 + abs(z)), 1e-12)
            for _ in range(6):
                try:
                    wc, small = winding_with_jitter(fmap, _cluster_box(z, size), rng=rng)
                except (BoundaryRootError, NonIntegerWindingError):
                    size *= 3.0
                    continue
                if wc == w:
                    out.append(RootCluster(z, w, abs(val), small.diameter))
                    return
                if wc > w or wc == 0:
                    break  # polished onto something else; subdivide
                break  # fewer roots here than the box holds: genuine split
    if depth >= max_depth:
        raise BudgetExhaustedError(
            f"subdivision depth {max_depth} exhausted with {w} roots unresolved",
            pending=box)
    # subdivide with a jittered cut to avoid slicing through roots
    for attempt in range(JITTER_TRIES + 1):
        fr = 0.5 + 0.15 * (rng.random() - 0.5) * attempt
        fi = 0.5 + 0.15 * (rng.random() - 0.5) * attempt
        children = box.split4(fr, fi)
        try:
            counted = []
            for child in children:
                cw = winding_count(fmap, child)
                counted.append((child, cw))
            if sum(c for _, c in counted) != w:
                continue  # a root sat on the shared cut; re-jitter
            for child, cw in counted:
                _resolve(fmap, child, cw, tol, depth + 1, max_depth, rng, out)
            return
        except BoundaryRootError:
            continue
    raise BudgetExhaustedError("could not find a root-free subdivision cut", pending=box)


def _eval_scalar(fmap, z: complex):
    arr = np.array([z], dtype=complex)
    return complex(fmap.values(arr)[0]), float(fmap.majorants(arr)[0])


# ---------------------------------------------------------------------------
# multiplicity, unstable-root count, rightmost roots
# ---------------------------------------------------------------------------


def multiplicity_at(qp: Quasipolynomial, tau, lam0: complex,
                    tol: float = MULTIPLICITY_RTOL,
                    residual_rtol: float = 1e-8, cap: int | None = None) -> int:
    """Multiplicity of a verified root: smallest n with a nonvanishing n-th derivative.

    Each derivative is compared against the sum of magnitudes of its own
    addends (a per-order majorant): derivative magnitudes grow like
    ``(n_d tau)^k`` with the order, so a single global scale would
    misclassify systems with several delay terms.  Raises
    :class:`NotARootError` when ``lam0`` is not a root to within
    ``residual_rtol`` (relative to the evaluation majorant) and
    :class:`DerivativeCapError` when no order up to the degree bound
    clears the threshold.
    """
    lam0 = complex(lam0)
    val = mixed_derivative(qp, lam0, tau, 0, 0)
    maj = core.derivative_majorant(qp, lam0, tau, 0, 0)
    if abs(val) > residual_rtol * max(maj, 1e-300):
        raise NotARootError(
            f"|D({lam0:.6g})| = {abs(val):.3e} exceeds {residual_rtol:.1e} * {maj:.3e}")
    if cap is None:
        cap = polya_szego_degree(qp)
    for n in range(1, cap + 1):
        d = mixed_derivative(qp, lam0, tau, n, 0)
        s = core.derivative_majorant(qp, lam0, tau, n, 0)
        if s > 0.0 and abs(d) >= tol * s:
            return n
    raise DerivativeCapError(
        f"no nonvanishing derivative up to the degree bound {cap}")


def _invariant_origin(qp: Quasipolynomial) -> bool:
    """True when lam = 0 is a root for every delay (sum of constant terms is 0).

    The condition is exact in the coefficients, so the threshold sits at
    rounding level; looser thresholds would misread designs whose root
    structure makes the constant sum small-but-nonzero.
    """
    s = sum(p(0.0) for _, p in qp.terms)
    scale = sum(abs(p(0.0)) for _, p in qp.terms)
    return abs(s) <= 1e-14 * max(scale, 1.0)


def count_unstable(qp: Quasipolynomial, tau=None, *, exclude_origin: bool = False,
                   rng=None) -> int:
    """Total multiplicity of roots in the open right half-plane.

    Counts by winding over ``[0, R] x [-R, R]``, with ``R`` from the
    a-priori modulus bound on right-half-plane roots.  A root on the
    imaginary axis makes the count ill-defined and raises
    :class:`ImaginaryAxisRootError`.  With ``exclude_origin`` an
    invariant root at the origin is deflated away instead and not
    counted.
    """
    if qp.kind != "retarded":
        raise ValidationError("unstable-root count requires a retarded quasipolynomial")
    if rng is None:
        rng = np.random.default_rng(0)
    base = QuasipolynomialMap(qp, tau)
    fmap = base
    if _invariant_origin(qp):
        if not exclude_origin:
            raise ImaginaryAxisRootError(
                "origin is an invariant characteristic root; the unstable-root "
                "count is ill-defined (use exclude_origin to deflate it)")
        m0 = multiplicity_at(qp, tau, 0.0)
        fmap = DeflatedMap(base, [(0.0, m0)])
    bound = modulus_bound(qp, tau, 0.0)
    box = ComplexBox(0.0, bound, -bound, bound)
    try:
        w, _ = winding_with_jitter(fmap, box, sides=(False, True, True, True), rng=rng)
    except BoundaryRootError as err:
        raise ImaginaryAxisRootError(
            f"characteristic root on the imaginary axis near {err.location:.6g}; "
            "the delay is critical") from err
    return w


def rightmost_roots(qp: Quasipolynomial, tau, k: int, *, max_strips: int = 48,
                    rng=None) -> list[RootCluster]:
    """The k rightmost root clusters, sorted by descending real part.

    Scans vertical strips leftward from the a-priori right bound until k
    multiplicities have accumulated.  The first cluster's real part is
    the spectral-abscissa estimate.
    """
    if qp.kind != "retarded":
        raise ValidationError("rightmost-root scan requires a retarded quasipolynomial")
    if k < 1:
        raise ValidationError("k must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    fmap = QuasipolynomialMap(qp, tau)
    x_hi = modulus_bound(qp, tau, 0.0) + 0.5
    width = 0.75
    found: list[RootCluster] = []
    for _ in range(max_strips):
        x_lo = x_hi - width
        height = modulus_bound(qp, tau, x_lo) + 0.5
        box = ComplexBox(x_lo, x_hi, -height, height)
        try:
            clusters = roots_in_box(qp, tau, box, rng=rng, _fmap=fmap)
        except BoundaryRootError:
            # move the cut and retry once with a slightly wider strip
            x_lo -= 0.13 * width
            box = ComplexBox(x_lo, x_hi, -height, height)
            clusters = roots_in_box(qp, tau, box, rng=rng, _fmap=fmap)
        for c in clusters:
            if all(abs(c.center - p.center) > 1e-7 * (1.0 + abs(c.center)) for p in found):
                found.append(c)
        if sum(c.multiplicity for c in found) >= k:
            found.sort(key=lambda c: (-c.center.real, abs(c.center.imag)))
            out, acc = [], 0
            for c in found:
                out.append(c)
                acc += c.multiplicity
                if acc >= k:
                    return out
        x_hi = x_lo
        width *= 1.4
    raise BudgetExhaustedError(
        f"strip budget ({max_strips}) exhausted with only "
        f"{sum(c.multiplicity for c in found)} of {k} multiplicities found",
        pending=found)

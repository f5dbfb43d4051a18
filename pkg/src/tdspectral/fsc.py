"""Frequency-sweeping curves and the piecewise-constant unstable-root profile.

For a commensurate-delay quasipolynomial, substituting ``z = exp(-tau*lam)``
gives the auxiliary polynomial ``P_a(lam, z)``.  Sweeping ``lam = j w`` over
``w >= 0`` and tracking the moduli of the z-roots yields one curve per
z-degree; frequencies where curves meet the unit line are exactly the
candidates for imaginary characteristic roots, and the net number of curves
crossing the line carries the change of the unstable-root count at *every*
positive critical delay of that frequency (invariance property).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Commensurate, Quasipolynomial, auxiliary_polynomial, modulus_bound
from .errors import ImaginaryAxisRootError, UnresolvedTangencyError, ValidationError
from .rootfinder import count_unstable, _invariant_origin

__all__ = [
    "FrequencySweep",
    "CriticalFrequencyRecord",
    "NUProfile",
    "sweep",
    "critical_frequencies",
    "var_nf",
    "nu_profile",
]

UNIT_BAND = 0.05           # refinement band around the unit line
TOUCH_TOL = 1e-6           # ||z| - 1| below this at the refined point = critical
CROSS_FLOOR = 1e-7         # gaps below this are indistinguishable from the line
GROUP_TOL = 1e-4           # clustering tolerance for (omega, z) records


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("TDS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FrequencySweep:
    """Sampled curves ``|z_i(j w)|`` with continuity-tracked branches.

    ``roots[b, k]`` is branch b's z-value at ``omega_grid[k]``.  Branch
    identity is threaded by minimal-displacement assignment between
    consecutive grid points; grid refinement concentrates near the unit
    line and near branch collisions.  ``degree_drops`` lists frequencies
    where the leading z-coefficient vanished numerically.
    """

    qp: Quasipolynomial
    omega_grid: np.ndarray
    roots: np.ndarray
    degree_drops: tuple[float, ...] = ()

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.roots)

    @property
    def n_branches(self) -> int:
        return 0 if self.roots.size == 0 else self.roots.shape[0]

    def z_roots_at(self, omega: float) -> np.ndarray:
        return _z_roots(auxiliary_polynomial(self.qp), omega)


@dataclass(frozen=True)
class CriticalFrequencyRecord:
    """A unit-line touch: frequency, shared z-value and the curve count g."""

    omega: float
    z: complex
    g: int
    branch_ids: tuple[int, ...]

    def minimal_delay(self) -> float:
        """Smallest tau >= 0 with ``exp(-j omega tau) = z``."""
        theta = (-np.angle(self.z)) % (2.0 * math.pi)
        return float(theta / self.omega)


def _z_roots(aux, omega: float) -> np.ndarray:
    coeffs = aux.z_coefficients(1j * omega)[::-1]  # descending for np.roots
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.array([], dtype=complex)
    trimmed = coeffs.copy()
    drop = 0
    while trimmed.size > 1 and abs(trimmed[0]) <= 1e-13 * scale:
        trimmed = trimmed[1:]
        drop += 1
    r = np.roots(trimmed) if trimmed.size > 1 else np.array([], dtype=complex)
    if drop:
        r = np.concatenate([r, np.full(drop, 1e15 + 0j)])
    return r


def _thread(prev: np.ndarray, raw: np.ndarray) -> np.ndarray:
    """Order ``raw`` to minimize total displacement from ``prev``."""
    cost = np.abs(prev[:, None] - raw[None, :])
    _, cols = linear_sum_assignment(cost)
    return raw[cols]


def sweep(qp: Quasipolynomial, omega_range: tuple[float, float] | None = None,
          initial_resolution: int = 1200, *, band: float = UNIT_BAND,
          max_rounds: int = 45) -> FrequencySweep:
    """Sample all frequency-sweeping curves over ``omega_range``.

    The default range is ``[0, R]`` with R the modulus bound for
    imaginary-axis roots (curves cannot reach the unit line beyond it).
    The grid is refined adaptively: intervals where a curve crosses or
    hugs the unit line, or where branch assignment jumps (collisions),
    are bisected until crossing intervals are resolved to ~1e-10 of the
    range.
    """
    if not isinstance(qp.delays, Commensurate):
        raise ValidationError("frequency sweeping requires a commensurate structure")
    aux = auxiliary_polynomial(qp)
    if aux.z_degree == 0:
        return FrequencySweep(qp, np.array([]), np.zeros((0, 0), dtype=complex))
    if omega_range is None:
        omega_range = (0.0, modulus_bound(qp, 1.0, 0.0) + 1.0)
    lo, hi = map(float, omega_range)
    grid = list(np.linspace(lo, hi, initial_resolution + 1))

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(lambda w: _z_roots(aux, w), grid))
    else:
        raw = [_z_roots(aux, w) for w in grid]

    width_cross = (hi - lo) * 1e-10
    width_band = (hi - lo) / initial_resolution / 8.0
    for _ in range(max_rounds):
        threaded = [raw[0]]
        for r in raw[1:]:
            threaded.append(_thread(threaded[-1], r))
        mods = np.abs(np.array(threaded))  # (n_grid, q)
        need = []
        for k in range(len(grid) - 1):
            w = grid[k + 1] - grid[k]
            if w <= width_cross:
                continue
            gap0 = mods[k] - 1.0
            gap1 = mods[k + 1] - 1.0
            crosses = np.any(np.sign(gap0) * np.sign(gap1) < 0)
            near = np.any(np.abs(gap0) < band) or np.any(np.abs(gap1) < band)
            spike = np.max(np.abs(threaded[k + 1] - threaded[k])) \
                > 0.15 * (1.0 + np.min(np.abs(threaded[k])))
            if crosses or (near and w > width_band) or (spike and w > width_band):
                need.append(k)
        if not need:
            break
        offset = 0
        for k in need:
            mid = 0.5 * (grid[k + offset] + grid[k + 1 + offset])
            grid.insert(k + 1 + offset, mid)
            raw.insert(k + 1 + offset, _z_roots(aux, mid))
            offset += 1
    threaded = [raw[0]]
    for r in raw[1:]:
        threaded.append(_thread(threaded[-1], r))
    roots = np.array(threaded).T  # (q, n_grid)
    return FrequencySweep(qp, np.array(grid), roots)


def _golden_min(fun, a: float, b: float, iters: int = 120):
    phi = 0.5 * (math.sqrt(5.0) - 1.0)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
        if b - a <= 1e-14 * (1.0 + abs(b)):
            break
    return 0.5 * (a + b)


def _make_probe(aux, z_ref: complex):
    def probe(w):
        roots = _z_roots(aux, w)
        order = np.argsort(np.abs(roots - z_ref))
        z = roots[order[0]]
        pair_dist = np.abs(roots[order[1]] - z) if roots.size > 1 else math.inf
        return z, abs(z) - 1.0, pair_dist
    return probe


def _collision_polish(probe, w: float, z: complex, gap: float):
    """Sharpen an event by minimizing the mutual distance of colliding roots.

    When two curves pass through one point of the unit line, the modulus
    gap is noise-limited there while the root collision is sharp; the
    minimizer of the pair distance locates the frequency far better.
    Falls back to the input when no near collision exists or the
    collision point is off the line.
    """
    _, _, pair = probe(w)
    suspicious = pair <= max(1e-3 * (1.0 + abs(z)), 30.0 * abs(gap)) \
        or (abs(gap) <= CROSS_FLOOR and pair <= 1e-2 * (1.0 + abs(z)))
    if not suspicious or not math.isfinite(pair):
        return w, z, gap
    span = 1e-6 * (1.0 + abs(w))
    cap = 0.05 * (1.0 + abs(w))
    while span < cap and not (probe(w - span)[2] > pair
                              and probe(w + span)[2] > pair):
        span *= 8.0
    wc = _golden_min(lambda x: probe(x)[2], w - span, w + span)
    zc, gap_c, _ = probe(wc)
    if abs(gap_c) <= max(abs(gap), TOUCH_TOL):
        return wc, zc, gap_c
    return w, z, gap


def _refine_event(aux, w_lo: float, w_hi: float, z_ref: complex):
    """Pin down a unit-line event inside [w_lo, w_hi] near z_ref.

    Tracks the z-root nearest to the reference and either bisects a sign
    change of ``|z| - 1`` or minimizes ``||z| - 1|``, then applies the
    collision polish.  Returns (omega*, z*, gap*) at the refined point.
    """
    probe = _make_probe(aux, z_ref)
    z_lo, g_lo, _ = probe(w_lo)
    z_hi, g_hi, _ = probe(w_hi)
    if g_lo * g_hi < 0:
        for _ in range(80):
            mid = 0.5 * (w_lo + w_hi)
            z_m, g_m, _ = probe(mid)
            if g_lo * g_m <= 0:
                w_hi, g_hi = mid, g_m
            else:
                w_lo, g_lo = mid, g_m
            if w_hi - w_lo <= 1e-13 * (1.0 + abs(w_hi)):
                break
        w = 0.5 * (w_lo + w_hi)
    else:
        w = _golden_min(lambda x: abs(probe(x)[1]), w_lo, w_hi)
    z, gap, _ = probe(w)
    return _collision_polish(probe, w, z, gap)


def critical_frequencies(sw: FrequencySweep, tol: float = TOUCH_TOL
                         ) -> list[CriticalFrequencyRecord]:
    """All frequencies where curves meet the unit line, grouped by (omega, z).

    ``g`` counts the curves through the touch point.  A branch that stays
    inside the near-unit band over a whole refined interval without a
    resolvable touch or crossing raises
    :class:`UnresolvedTangencyError`.
    """
    if sw.n_branches == 0:
        return []
    aux = auxiliary_polynomial(sw.qp)
    grid = sw.omega_grid
    snap_targets: list[float] = []
    if sw.qp.n_d == 1:
        # single delay: the crossing-set polynomial locates touch
        # frequencies far more accurately than modulus bisection when the
        # contact order is high
        from . import crossing as _crossing
        try:
            snap_targets = [c.omega for c in _crossing.crossing_set(
                sw.qp.term(0), sw.qp.term(1))]
        except ValidationError:
            snap_targets = []
    events = []  # (omega, z, branch)
    for b in range(sw.n_branches):
        gaps = sw.moduli[b] - 1.0
        taken = np.zeros(len(grid), dtype=bool)
        # definite transversal crossings (both signs clear of the noise floor)
        for k in range(len(grid) - 1):
            if gaps[k] * gaps[k + 1] < 0 and \
                    min(abs(gaps[k]), abs(gaps[k + 1])) > CROSS_FLOOR:
                z_ref = sw.roots[b, k]
                w, z, gap = _refine_event(aux, grid[k], grid[k + 1], z_ref)
                events.append((w, z, b))
                taken[k] = taken[k + 1] = True
        # noise plateaus: contiguous samples indistinguishable from the line
        k = 0
        while k < len(grid):
            if abs(gaps[k]) <= CROSS_FLOOR and not taken[k]:
                k2 = k
                while k2 + 1 < len(grid) and abs(gaps[k2 + 1]) <= CROSS_FLOOR:
                    k2 += 1
                mid = (k + k2) // 2
                probe = _make_probe(aux, sw.roots[b, mid])
                w0 = _golden_min(lambda x: abs(probe(x)[1]),
                                 grid[max(k - 1, 0)], grid[min(k2 + 1, len(grid) - 1)])
                z0, gap0, _ = probe(w0)
                w0, z0, gap0 = _collision_polish(probe, w0, z0, gap0)
                events.append((w0, z0, b))
                taken[k:k2 + 1] = True
                k = k2 + 1
            else:
                k += 1
        # tangential touches: interior minima of the gap inside the band
        for k in range(1, len(grid) - 1):
            near_min = (abs(gaps[k]) <= abs(gaps[k - 1])
                        and abs(gaps[k]) <= abs(gaps[k + 1])
                        and CROSS_FLOOR < abs(gaps[k]) < UNIT_BAND)
            if not near_min or taken[k - 1] or taken[k] or taken[k + 1]:
                continue
            z_ref = sw.roots[b, k]
            w, z, gap = _refine_event(aux, grid[k - 1], grid[k + 1], z_ref)
            if abs(gap) <= tol:
                events.append((w, z, b))
            elif abs(gap) <= 10 * tol:
                raise UnresolvedTangencyError(
                    f"branch {b} stays within {abs(gap):.2e} of the unit line "
                    f"near omega = {w:.6g} without a resolvable touch")
    if snap_targets:
        snapped = []
        for w, z, b in events:
            for target in snap_targets:
                if abs(w - target) <= 1e-4 * (1.0 + target):
                    roots = _z_roots(aux, target)
                    z = roots[np.argmin(np.abs(roots - z))]
                    w = target
                    break
            snapped.append((w, z, b))
        events = snapped
    grouped: list[list[tuple]] = []
    for ev in sorted(events):
        for grp in grouped:
            if abs(ev[0] - grp[0][0]) <= GROUP_TOL * (1.0 + abs(grp[0][0])) and \
                    abs(ev[1] - grp[0][1]) <= 20 * GROUP_TOL * (1.0 + abs(grp[0][1])):
                grp.append(ev)
                break
        else:
            grouped.append([ev])
    records = []
    for grp in grouped:
        w = float(np.mean([e[0] for e in grp]))
        z = complex(np.mean([e[1] for e in grp]))
        # g = number of curves through the touch point = multiplicity of z
        # as a z-root there (robust against branch identity at collisions)
        roots = _z_roots(aux, w)
        spread = np.sort(np.abs(roots - z))
        radius = max(1e-5 * (1.0 + abs(z)), 3.0 * spread[0])
        g = int(np.sum(np.abs(roots - z) <= radius))
        records.append(CriticalFrequencyRecord(
            w, z, g, tuple(sorted({e[2] for e in grp}))))
    return records


def var_nf(sw: FrequencySweep, record: CriticalFrequencyRecord, *,
           guard: float = 1e-11) -> int:
    """Net change of curves above the unit line across a critical frequency.

    Counts, among the g touching curves, how many lie above the line just
    right of the frequency minus how many just left.  The probe offset is
    grown until the classification is identical for three consecutive
    offsets; contamination by a neighboring critical frequency raises
    :class:`ValidationError`.
    """
    aux = auxiliary_polynomial(sw.qp)
    others = []  # closest other critical frequency bounds the window
    lo, hi = sw.omega_grid[0], sw.omega_grid[-1]

    def counts(eps: float):
        out = []
        for side in (+1, -1):
            n_above = 0
            w = record.omega + side * eps
            if not (lo <= w <= hi):
                return None
            roots = _z_roots(aux, w)
            order = np.argsort(np.abs(roots - record.z))
            sel = roots[order[:record.g]]
            gaps = np.abs(sel) - 1.0
            if np.any(np.abs(gaps) <= guard * record.g):
                return None
            n_above = int(np.sum(gaps > 0.0))
            out.append(n_above)
        return out

    eps0 = max(1e-7 * (1.0 + record.omega), 1e-9)
    for scale in range(26):
        eps = eps0 * 2.0 ** scale
        triple = [counts(eps * f) for f in (1.0, 1.5, 2.25)]
        if any(t is None for t in triple):
            continue
        if triple[0] == triple[1] == triple[2]:
            above_after, above_before = triple[0]
            return above_after - above_before
    raise ValidationError(
        f"could not stabilize the curve classification near omega = {record.omega:.6g}")


@dataclass(frozen=True)
class NUProfile:
    """Unstable-root count as a step function of the delay.

    ``counts[k]`` holds on the open interval between ``breakpoints[k-1]``
    and ``breakpoints[k]`` (with the obvious end conventions);
    ``stability_intervals`` lists the maximal sub-intervals where the
    count is zero and no invariant root spoils asymptotic stability.
    """

    tau_max: float
    breakpoints: tuple[float, ...]
    counts: tuple[int, ...]
    stability_intervals: tuple[tuple[float, float], ...]
    flags: dict = field(default_factory=dict)
    records: tuple = ()


def nu_profile(qp: Quasipolynomial, tau_max: float, *, validate: bool = True,
               initial_resolution: int = 1200) -> NUProfile:
    """Assemble NU(tau) on [0, tau_max] from the frequency-sweeping analysis.

    The count starts from the delay-free system (small delays preserve
    it), jumps only at critical delays, and the jump at every positive
    critical delay of a frequency equals twice the net curve crossing
    there (conjugate pairs).  With ``validate`` the profile is
    cross-checked by direct contour counts at one interior point per
    interval; a mismatch raises :class:`ValidationError` carrying both
    values.
    """
    if not isinstance(qp.delays, Commensurate):
        raise ValidationError("NU profile requires a commensurate structure")
    flags: dict = {}
    invariant_origin = _invariant_origin(qp)
    if invariant_origin:
        flags["invariant_origin_root"] = True

    # delay-free start: roots of the term sum
    s = None
    for _, p in qp.terms:
        s = p if s is None else s + p
    s_roots = s.roots()
    if s_roots.size:
        axis = np.abs(s_roots.real) <= 1e-9 * (1.0 + np.abs(s_roots))
        origin = np.abs(s_roots) <= 1e-9
        if np.any(axis & ~origin):
            flags["delay_free_axis_root"] = True
        nu0 = int(np.sum(s_roots.real > 0))
    else:
        nu0 = 0

    sw = sweep(qp, None, initial_resolution)
    records = critical_frequencies(sw)
    jumps: dict[float, int] = {}
    rec_info = []
    for rec in records:
        if rec.omega <= 1e-9:
            flags["zero_frequency_touch"] = True
            continue
        v = var_nf(sw, rec)
        tau0 = rec.minimal_delay()
        if tau0 <= 1e-12:
            # a delay-free imaginary root; the first positive critical delay
            # sits one period up
            flags["delay_free_axis_root"] = True
            tau0 = 2.0 * math.pi / rec.omega
        rec_info.append((rec, v, tau0))
        period = 2.0 * math.pi / rec.omega
        t = tau0
        while t <= tau_max:
            key = t
            for existing in jumps:
                if abs(existing - t) <= 1e-9 * (1.0 + t):
                    key = existing
                    break
            jumps[key] = jumps.get(key, 0) + 2 * v
            t += period

    breakpoints = tuple(sorted(jumps))
    counts = [nu0]
    for t in breakpoints:
        counts.append(counts[-1] + jumps[t])
    if any(c < 0 for c in counts):
        raise ValidationError(f"inconsistent profile: negative count in {counts}")

    if validate:
        edges = [0.0, *breakpoints, tau_max]
        for k in range(len(counts)):
            lo_e, hi_e = edges[k], edges[k + 1]
            if hi_e - lo_e <= 1e-6:
                continue
            mid = 0.5 * (lo_e + hi_e)
            direct = count_unstable(qp, mid, exclude_origin=invariant_origin)
            if direct != counts[k]:
                raise ValidationError(
                    f"invariance-predicted NU = {counts[k]} on ({lo_e:.6g}, {hi_e:.6g}) "
                    f"but direct count at tau = {mid:.6g} gives {direct}")

    stability = []
    if not invariant_origin and "delay_free_axis_root" not in flags:
        edges = [0.0, *breakpoints, tau_max]
        for k in range(len(counts)):
            if counts[k] == 0 and edges[k + 1] > edges[k]:
                stability.append((edges[k], edges[k + 1]))
    return NUProfile(tau_max, breakpoints, tuple(counts), tuple(stability),
                     flags, tuple(rec_info))

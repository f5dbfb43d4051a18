"""Quasipolynomial representation, evaluation and exact differentiation.

A quasipolynomial is a finite sum

    D(lam) = P_0(lam) + sum_i P_i(lam) * exp(-lam * tau_i)

with real polynomial coefficients.  Delays are either *commensurate*
(tau_i = i * tau for a single base delay tau) or an explicit strictly
increasing vector of *fixed* delays.  All types in this module are
immutable; all operations are pure functions and safe to call from
multiple threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DerivativeCapError,
    DimensionMismatchError,
    ValidationError,
)

__all__ = [
    "RealPolynomial",
    "Commensurate",
    "Fixed",
    "Quasipolynomial",
    "BivariatePolynomial",
    "PointEvaluator",
    "TwoDelayEvaluator",
    "evaluate",
    "evaluate_with_majorant",
    "mixed_derivative",
    "derivative_majorant",
    "polya_szego_degree",
    "auxiliary_polynomial",
    "shifted_evaluator",
    "two_delay_evaluator",
    "modulus_bound",
    "parse_model",
    "load_model",
    "dump_model",
]


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def _binom(n: int, k: int) -> float:
    return float(math.comb(n, k))


@dataclass(frozen=True)
class RealPolynomial:
    """Real polynomial stored by ascending-degree coefficients.

    ``coeffs[k]`` multiplies ``lam**k``.  The stored sequence is normalized:
    trailing zero coefficients are stripped, so ``degree == len(coeffs) - 1``
    for nonzero polynomials and the zero polynomial has an empty tuple.
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        cs = [float(c) for c in coeffs]
        while cs and cs[-1] == 0.0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, lam):
        """Evaluate by Horner's rule; accepts scalars or ndarrays."""
        if isinstance(lam, np.ndarray):
            dtype = np.result_type(lam.dtype, np.float64)
            acc = np.zeros_like(lam, dtype=dtype)
        else:
            acc = 0.0
        if not self.coeffs:
            return acc
        for c in reversed(self.coeffs):
            acc = acc * lam + c
        return acc

    def deriv(self, order: int = 1) -> "RealPolynomial":
        cs = self.coeffs
        for _ in range(order):
            cs = tuple(k * cs[k] for k in range(1, len(cs)))
        return RealPolynomial(cs)

    def abs_coeffs(self) -> "RealPolynomial":
        """Polynomial with absolute coefficients (majorant on ``|lam|``)."""
        return RealPolynomial(tuple(abs(c) for c in self.coeffs))

    def scale(self, s: float) -> "RealPolynomial":
        return RealPolynomial(tuple(s * c for c in self.coeffs))

    def __add__(self, other: "RealPolynomial") -> "RealPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        cs = [0.0] * n
        for k, c in enumerate(self.coeffs):
            cs[k] += c
        for k, c in enumerate(other.coeffs):
            cs[k] += c
        return RealPolynomial(cs)

    def __mul__(self, other: "RealPolynomial") -> "RealPolynomial":
        if self.is_zero or other.is_zero:
            return RealPolynomial(())
        return RealPolynomial(tuple(np.convolve(self.coeffs, other.coeffs)))

    def shift_by_monomial(self, power: int) -> "RealPolynomial":
        """Multiply by ``lam**power``."""
        if self.is_zero:
            return self
        return RealPolynomial((0.0,) * power + self.coeffs)

    def roots(self) -> np.ndarray:
        """All complex roots (companion matrix)."""
        if self.degree < 1:
            return np.array([], dtype=complex)
        return np.roots(self.coeffs[::-1])


# ---------------------------------------------------------------------------
# delay structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Commensurate:
    """Commensurate delays: term index i carries delay i * tau."""

    tau: float | None = None

    kind = "commensurate"


@dataclass(frozen=True)
class Fixed:
    """Explicit delay values; ``values[0]`` must be 0 and values increase."""

    values: tuple[float, ...]

    kind = "fixed"

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals or vals[0] != 0.0:
            raise ValidationError("fixed delay vector must start with 0", field="delays.values")
        for a, b in zip(vals, vals[1:]):
            if b <= a:
                raise ValidationError(
                    "fixed delay values must be strictly increasing", field="delays.values"
                )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Quasipolynomial:
    """Delay structure plus one real polynomial per delay term.

    ``terms`` maps a delay index to its polynomial: for commensurate
    structures index i means delay ``i * tau``; for fixed structures it
    indexes into ``delays.values``.  Terms with identical indices are
    merged at construction.  The type tag ``kind`` is derived: *retarded*
    when the undelayed polynomial strictly dominates every delayed degree,
    *neutral* when some delayed term reaches it.
    """

    delays: Commensurate | Fixed
    terms: tuple[tuple[int, RealPolynomial], ...]
    kind: str = field(init=False)

    def __init__(self, delays, terms):
        merged: dict[int, RealPolynomial] = {}
        for idx, poly in terms:
            idx = int(idx)
            if idx < 0:
                raise ValidationError("negative term index", field="terms.index")
            if not isinstance(poly, RealPolynomial):
                poly = RealPolynomial(poly)
            merged[idx] = merged[idx] + poly if idx in merged else poly
        if isinstance(delays, Fixed):
            nmax = len(delays.values) - 1
            for idx in merged:
                if idx > nmax:
                    raise ValidationError(
                        f"term index {idx} exceeds delay vector length", field="terms.index"
                    )
        clean = tuple(
            (i, merged[i]) for i in sorted(merged) if not merged[i].is_zero
        )
        if not clean:
            raise ValidationError("quasipolynomial has no nonzero terms", field="terms")
        p0 = merged.get(0, RealPolynomial(()))
        delayed_degs = [p.degree for i, p in clean if i > 0]
        max_delayed = max(delayed_degs, default=-1)
        if p0.degree < max_delayed:
            raise ValidationError(
                "advanced-type quasipolynomial (a delayed degree exceeds the "
                "undelayed one) is not supported"
            )
        kind = "neutral" if (delayed_degs and p0.degree == max_delayed) else "retarded"
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "kind", kind)

    # -- structural queries -------------------------------------------------

    @property
    def p0(self) -> RealPolynomial:
        for i, p in self.terms:
            if i == 0:
                return p
        return RealPolynomial(())

    @property
    def n_d(self) -> int:
        """Largest delay index present."""
        return max(i for i, _ in self.terms)

    def term(self, index: int) -> RealPolynomial:
        for i, p in self.terms:
            if i == index:
                return p
        return RealPolynomial(())

    def delay_values(self, tau=None) -> tuple[float, ...]:
        """Concrete delay value per term, in term order."""
        if isinstance(self.delays, Commensurate):
            t = self._base_delay(tau)
            return tuple(i * t for i, _ in self.terms)
        taus = self._fixed_values(tau)
        return tuple(taus[i] for i, _ in self.terms)

    def _base_delay(self, tau) -> float:
        if tau is None:
            tau = self.delays.tau
        if tau is None:
            raise DimensionMismatchError("commensurate base delay required but not given")
        if np.ndim(tau) != 0:
            raise DimensionMismatchError("commensurate structure takes a scalar delay")
        tau = float(tau)
        if tau < 0:
            raise ValidationError("delay must be nonnegative")
        return tau

    def _fixed_values(self, tau) -> tuple[float, ...]:
        if tau is None:
            return self.delays.values
        vals = tuple(float(v) for v in np.atleast_1d(tau))
        if len(vals) != len(self.delays.values):
            raise DimensionMismatchError(
                f"expected {len(self.delays.values)} delay values, got {len(vals)}"
            )
        if vals[0] != 0.0:
            raise DimensionMismatchError("first fixed delay must remain 0")
        return vals


# ---------------------------------------------------------------------------
# evaluation and closed-form differentiation
# ---------------------------------------------------------------------------


def evaluate(qp: Quasipolynomial, lam, tau=None):
    """Evaluate ``D(lam; tau)``.

    ``tau`` is a scalar base delay for commensurate structures and a full
    delay vector (first entry 0) for fixed ones; when omitted, the values
    stored in the delay structure are used.  ``lam`` may be a complex
    scalar or ndarray.  Far in the left half-plane the exponentials
    saturate to inf rather than raising.
    """
    delays = _term_delays(qp, tau)
    acc = None
    with np.errstate(over="ignore", invalid="ignore"):
        for (idx, poly), d in zip(qp.terms, delays):
            v = poly(lam)
            if d != 0.0:
                v = v * np.exp(-lam * d)
            acc = v if acc is None else acc + v
    return acc


def evaluate_with_majorant(qp: Quasipolynomial, lam, tau=None):
    """Value together with the sum of absolute values of all its addends.

    The majorant bounds the magnitude the evaluation works with before
    cancellation; ``|value| <= majorant`` and residual tests should be
    read relative to it.
    """
    delays = _term_delays(qp, tau)
    val = 0.0 + 0.0j
    maj = 0.0
    alam = abs(lam)
    re = lam.real if isinstance(lam, complex) else float(np.real(lam))
    with np.errstate(over="ignore", invalid="ignore"):
        for (idx, poly), d in zip(qp.terms, delays):
            e = np.exp(-lam * d) if d != 0.0 else 1.0
            val += poly(lam) * e
            maj += poly.abs_coeffs()(alam) * float(np.exp(-re * d))
    return val, maj


def _term_delays(qp: Quasipolynomial, tau) -> tuple[float, ...]:
    return qp.delay_values(tau)


def _term_tau_derivative_poly(idx: int, poly: RealPolynomial, order_tau: int,
                              commensurate: bool) -> RealPolynomial:
    """Polynomial factor of d^j/d tau^j applied to ``P(lam) e^{-k lam tau}``.

    Each tau-derivative multiplies the term by ``-k*lam`` (k the delay
    index for commensurate structures, 1 for a fixed delay), so the factor
    is ``(-k)^j lam^j P(lam)``.
    """
    k = idx if commensurate else (1 if idx > 0 else 0)
    if order_tau == 0:
        return poly
    if k == 0:
        return RealPolynomial(())
    return poly.shift_by_monomial(order_tau).scale(float((-k) ** order_tau))


def mixed_derivative(qp: Quasipolynomial, lam: complex, tau=None,
                     order_lam: int = 0, order_tau: int = 0, *,
                     wrt: int | None = None, cap: int | None = None) -> complex:
    """Exact mixed partial derivative of the quasipolynomial.

    Computes ``d^(i+j) D / d lam^i d tau^j`` in closed form: every
    tau-derivative of a term multiplies it by ``-k*lam`` and the
    lam-derivatives follow by the Leibniz rule, so no finite differencing
    is involved.  For fixed delay structures ``wrt`` selects which delay
    component the tau-derivatives act on (required when ``order_tau > 0``).

    Raises :class:`DerivativeCapError` when ``cap`` is given and
    ``order_lam + order_tau`` exceeds it.
    """
    val, _ = _mixed_derivative_impl(qp, lam, tau, order_lam, order_tau, wrt, cap,
                                    want_majorant=False)
    return val


def derivative_majorant(qp: Quasipolynomial, lam: complex, tau=None,
                        order_lam: int = 0, order_tau: int = 0, *,
                        wrt: int | None = None) -> float:
    """Sum of absolute addends of :func:`mixed_derivative` (scale reference)."""
    _, maj = _mixed_derivative_impl(qp, lam, tau, order_lam, order_tau, wrt, None,
                                    want_majorant=True)
    return maj


def _mixed_derivative_impl(qp, lam, tau, i, j, wrt, cap, want_majorant):
    if i < 0 or j < 0:
        raise ValidationError("derivative orders must be nonnegative")
    if cap is not None and i + j > cap:
        raise DerivativeCapError(f"order {i}+{j} exceeds cap {cap}")
    commensurate = isinstance(qp.delays, Commensurate)
    if j > 0 and not commensurate and wrt is None:
        raise ValidationError("fixed delay structure: tau-derivative needs wrt index")
    delays = _term_delays(qp, tau)
    lam = complex(lam)
    alam = abs(lam)
    val = 0.0 + 0.0j
    maj = 0.0
    for (idx, poly), d in zip(qp.terms, delays):
        if j > 0 and not commensurate and idx != wrt:
            continue
        q = _term_tau_derivative_poly(idx, poly, j, commensurate)
        if q.is_zero:
            continue
        e = np.exp(-lam * d) if d != 0.0 else 1.0
        with np.errstate(over="ignore"):
            ae = float(np.exp(-lam.real * d))
        term = 0.0 + 0.0j
        term_maj = 0.0
        # Leibniz over Q(lam) * exp(-lam*d): each lam-derivative of the
        # exponential contributes a factor -d.
        for r in range(i + 1):
            qr = q.deriv(r)
            if qr.is_zero:
                continue
            factor = _binom(i, r) * ((-d) ** (i - r))
            term += factor * qr(lam)
            term_maj += abs(factor) * qr.abs_coeffs()(alam)
        val += term * e
        maj += term_maj * ae
    return val, maj


def polya_szego_degree(qp: Quasipolynomial) -> int:
    """Degree bound: largest delay index plus the sum of term degrees.

    Any characteristic root of the quasipolynomial has multiplicity at
    most this number; zero terms do not count.
    """
    return qp.n_d + sum(p.degree for _, p in qp.terms)


# ---------------------------------------------------------------------------
# auxiliary bivariate polynomial  P_a(lam, z) = sum_i P_i(lam) z^i
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BivariatePolynomial:
    """``P_a(lam, z) = sum_i P_i(lam) z**i`` sharing the source coefficients."""

    terms: tuple[tuple[int, RealPolynomial], ...]

    @property
    def z_degree(self) -> int:
        return max(i for i, _ in self.terms)

    def __call__(self, lam, z):
        return sum(p(lam) * z ** i for i, p in self.terms)

    def z_coefficients(self, lam) -> np.ndarray:
        """Coefficients in z (ascending) at a fixed ``lam``."""
        out = np.zeros(self.z_degree + 1, dtype=complex)
        for i, p in self.terms:
            out[i] = p(lam)
        return out


def auxiliary_polynomial(qp: Quasipolynomial) -> BivariatePolynomial:
    """Substitute ``z = exp(-tau*lam)`` in a commensurate quasipolynomial."""
    if not isinstance(qp.delays, Commensurate):
        raise ValidationError("auxiliary polynomial requires a commensurate structure")
    return BivariatePolynomial(qp.terms)


# ---------------------------------------------------------------------------
# translated evaluators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointEvaluator:
    """View of the quasipolynomial translated to a base point.

    ``f(u, v) = D(lam0 + u; tau0 + tau_sign * v)`` with a closed-form
    derivative oracle for mixed orders up to ``cap``.  ``tau_sign = -1``
    gives the expansion frame of a *decreasing* delay, used to study root
    behavior on the left side of a critical delay.
    """

    qp: Quasipolynomial
    lam0: complex
    tau0: float
    tau_sign: int = 1
    cap: int = 12

    def __call__(self, u=0.0, v=0.0):
        return evaluate(self.qp, self.lam0 + u, self.tau0 + self.tau_sign * v)

    def deriv(self, i: int, j: int = 0) -> complex:
        if i + j > self.cap:
            raise DerivativeCapError(f"order {i}+{j} exceeds evaluator cap {self.cap}")
        d = mixed_derivative(self.qp, self.lam0, self.tau0, i, j)
        return d * (self.tau_sign ** j)

    def majorant(self, i: int, j: int = 0) -> float:
        return derivative_majorant(self.qp, self.lam0, self.tau0, i, j)

    def series_coeff(self, i: int, j: int = 0) -> complex:
        """Taylor coefficient ``f_{i j} / (i! j!)`` of the local series."""
        return self.deriv(i, j) / (math.factorial(i) * math.factorial(j))


def shifted_evaluator(qp: Quasipolynomial, lam0: complex, tau0,
                      tau_sign: int = 1, cap: int | None = None) -> PointEvaluator:
    """Evaluator and derivative oracle at the translated origin ``(lam0, tau0)``."""
    if isinstance(qp.delays, Fixed):
        raise ValidationError("single-parameter evaluator requires a commensurate structure; "
                              "use two_delay_evaluator for fixed two-delay systems")
    tau0 = qp._base_delay(tau0)
    if cap is None:
        cap = polya_szego_degree(qp) + 6
    if tau_sign not in (1, -1):
        raise ValidationError("tau_sign must be +1 or -1")
    return PointEvaluator(qp, complex(lam0), tau0, tau_sign, cap)


@dataclass(frozen=True)
class TwoDelayEvaluator:
    """Translated view of a two-delay quasipolynomial.

    ``f(u, v1, v2) = D(lam0 + u; tau1 + v1, tau2 + v2)`` with mixed
    derivatives ``deriv(i, a, b)``.  ``tau1`` names the delay perturbed
    first (it need not be the smaller one); ``idx1`` records which stored
    delay slot it occupies.  Because every term of the quasipolynomial
    depends on a single delay, cross derivatives in (tau1, tau2) vanish
    identically.
    """

    qp: Quasipolynomial
    lam0: complex
    tau1: float
    tau2: float
    idx1: int = 1
    cap: int = 12

    def _taus(self, v1=0.0, v2=0.0):
        vals = [0.0, 0.0, 0.0]
        vals[self.idx1] = self.tau1 + v1
        vals[3 - self.idx1] = self.tau2 + v2
        return tuple(vals)

    def __call__(self, u=0.0, v1=0.0, v2=0.0):
        return evaluate(self.qp, self.lam0 + u, self._taus(v1, v2))

    def _wrt(self, a: int, b: int) -> int | None:
        if a > 0:
            return self.idx1
        if b > 0:
            return 3 - self.idx1
        return None

    def deriv(self, i: int, a: int = 0, b: int = 0) -> complex:
        if i + a + b > self.cap:
            raise DerivativeCapError(f"order {i}+{a}+{b} exceeds evaluator cap {self.cap}")
        if a > 0 and b > 0:
            return 0.0 + 0.0j
        return mixed_derivative(self.qp, self.lam0, self._taus(), i, max(a, b),
                                wrt=self._wrt(a, b))

    def majorant(self, i: int, a: int = 0, b: int = 0) -> float:
        if a > 0 and b > 0:
            return 0.0
        return derivative_majorant(self.qp, self.lam0, self._taus(), i, max(a, b),
                                   wrt=self._wrt(a, b))


def two_delay_evaluator(qp: Quasipolynomial, lam0: complex, tau1: float, tau2: float,
                        cap: int | None = None) -> TwoDelayEvaluator:
    """Evaluator at ``(lam0, tau1, tau2)`` for a fixed two-delay quasipolynomial.

    ``(tau1, tau2)`` must match the two stored positive delays up to order;
    ``tau1`` is the component subsequent expansions treat as the primary
    perturbation.
    """
    if not isinstance(qp.delays, Fixed) or len(qp.delays.values) != 3:
        raise ValidationError("two-delay evaluator requires a fixed structure (0, t1, t2)")
    if cap is None:
        cap = polya_szego_degree(qp) + 6
    stored = qp.delays.values
    if math.isclose(tau1, stored[1]) and math.isclose(tau2, stored[2]):
        idx1 = 1
    elif math.isclose(tau1, stored[2]) and math.isclose(tau2, stored[1]):
        idx1 = 2
    else:
        raise ValidationError(
            f"(tau1, tau2) = ({tau1}, {tau2}) does not match the stored delays {stored[1:]}")
    return TwoDelayEvaluator(qp, complex(lam0), float(tau1), float(tau2), idx1, cap)


# ---------------------------------------------------------------------------
# a-priori modulus bound for roots in a right half-plane
# ---------------------------------------------------------------------------


def modulus_bound(qp: Quasipolynomial, tau=None, re_min: float = 0.0) -> float:
    """Radius bounding all roots with real part >= ``re_min``.

    Any root with ``Re lam >= re_min`` satisfies
    ``|P_0(lam)| <= sum_i |P_i(lam)| e^{-re_min tau_i}``; comparing the
    leading term of P_0 against absolute-coefficient majorants yields a
    computable radius, found here by doubling + bisection.
    """
    delays = _term_delays(qp, tau)
    p0 = qp.p0
    n = p0.degree
    lead = abs(p0.coeffs[-1])

    weights = []
    for (idx, poly), d in zip(qp.terms, delays):
        w = math.exp(-re_min * d)
        ap = poly.abs_coeffs()
        if idx == 0:
            ap = RealPolynomial(ap.coeffs[:-1])  # drop the leading term
        weights.append((w, ap))

    def gap(r: float) -> float:
        return lead * r ** n - sum(w * ap(r) for w, ap in weights)

    hi = 1.0
    while gap(hi) <= 0.0 and hi < 1e12:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return hi * (1.0 + 1e-9) + 1e-12


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

_MODEL_KEYS = {"delays", "terms"}
_DELAY_KEYS = {"kind", "tau", "values"}


def parse_model(doc: dict) -> Quasipolynomial:
    """Build a quasipolynomial from the JSON model schema.

    Schema::

        {"delays": {"kind": "commensurate", "tau": <number, optional>}
                 | {"kind": "fixed", "values": [<numbers, first 0>]},
         "terms": [{"index": <int >= 0>, "coeffs": [<numbers ascending>]}]}
    """
    if not isinstance(doc, dict):
        raise ValidationError("model must be a JSON object")
    unknown = set(doc) - _MODEL_KEYS
    if unknown:
        raise ValidationError(f"unknown fields {sorted(unknown)}", field="model")
    if "delays" not in doc or "terms" not in doc:
        raise ValidationError("model requires 'delays' and 'terms'", field="model")

    dd = doc["delays"]
    if not isinstance(dd, dict) or "kind" not in dd:
        raise ValidationError("must be an object with a 'kind'", field="delays")
    unknown = set(dd) - _DELAY_KEYS
    if unknown:
        raise ValidationError(f"unknown fields {sorted(unknown)}", field="delays")
    if dd["kind"] == "commensurate":
        tau = dd.get("tau")
        if tau is not None:
            if not isinstance(tau, (int, float)) or tau < 0:
                raise ValidationError("tau must be a nonnegative number", field="delays.tau")
        delays = Commensurate(None if tau is None else float(tau))
    elif dd["kind"] == "fixed":
        vals = dd.get("values")
        if not isinstance(vals, list) or not all(isinstance(v, (int, float)) for v in vals):
            raise ValidationError("values must be a list of numbers", field="delays.values")
        if any(v < 0 for v in vals):
            raise ValidationError("delays must be nonnegative", field="delays.values")
        delays = Fixed(vals)
    else:
        raise ValidationError("kind must be 'commensurate' or 'fixed'", field="delays.kind")

    tl = doc["terms"]
    if not isinstance(tl, list) or not tl:
        raise ValidationError("terms must be a nonempty list", field="terms")
    terms = []
    for k, td in enumerate(tl):
        where = f"terms[{k}]"
        if not isinstance(td, dict) or set(td) - {"index", "coeffs"}:
            raise ValidationError("must be {'index', 'coeffs'}", field=where)
        idx = td.get("index")
        if not isinstance(idx, int) or idx < 0:
            raise ValidationError("index must be an integer >= 0", field=where + ".index")
        cs = td.get("coeffs")
        if not isinstance(cs, list) or not all(isinstance(c, (int, float)) for c in cs):
            raise ValidationError("coeffs must be a list of numbers", field=where + ".coeffs")
        terms.append((idx, RealPolynomial(cs)))
    return Quasipolynomial(delays, terms)


def load_model(path) -> Quasipolynomial:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc
    return parse_model(doc)


def dump_model(qp: Quasipolynomial) -> dict:
    """Inverse of :func:`parse_model` (round-trips all fixture models)."""
    if isinstance(qp.delays, Commensurate):
        dd = {"kind": "commensurate"}
        if qp.delays.tau is not None:
            dd["tau"] = qp.delays.tau
    else:
        dd = {"kind": "fixed", "values": list(qp.delays.values)}
    return {
        "delays": dd,
        "terms": [{"index": i, "coeffs": list(p.coeffs)} for i, p in qp.terms],
    }

"""Limit-law predictions for degree-conditioned clustering.

For an actor of (given) degree k, the limiting clustering probability blends
two competing local configurations: a *closed* one, where the two neighbours
are witnessed together (they share an attribute with each other through the
anchor's attribute), and an *open* one, where the two neighbours arrive via
distinct attributes.  Writing ``a(k)/A(k)`` for the point/tail weights of the
closed route and ``b(k)/B(k)`` for the open route,

    c_pred(k) = 1 / (1 + sqrt(beta) * b(k) / a(k)),        (degree = k)
    C_pred(k) = 1 / (1 + sqrt(beta) * B(k) / A(k)),        (degree >= k)

with

    a(k) = a3 * b1**3 * P(D1 + L3 = k - 2),
    b(k) = a2**2 * b1**2 * b2 * P(D2 + L2 + L2' = k - 2),

where ``a_r = E[X**r]``, ``b_r = E[Y**r]``, ``D_r`` is the randomly stopped
sum with count biased to order r, and ``L_r`` is the attribute-side mixed
Poisson law biased to order r.  ``A``/``B`` replace "= k-2" by ">= k-2" and are
reported as intervals because numeric pmfs carry tail bounds.

For Pareto weight laws the module also provides the closed-form tail
asymptotics of each ingredient and the induced power law

    B(k) / A(k) ~ ratio_constant * k**delta,
    delta = clamp(alpha - gamma - 1, -1, 1),

whose exponent switches regime at alpha = gamma + 2 (closed route) and
alpha = gamma (open route); ties add constants rather than picking a side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .mixedpoisson import (
    DEFAULT_K_MAX,
    Pmf,
    mixing_spec,
    pmf_mixed_poisson,
    pmf_offspring,
)
from .stoppedsum import StoppedSumSpec, convolve, pmf_stopped_sum, tail_from_pmf
from .weights import InfiniteMomentError, Pareto, WeightLaw

__all__ = [
    "Interval",
    "ModelParams",
    "LimitTerms",
    "LimitLaws",
    "limit_terms",
    "coefficient_from_ratio",
    "ratio_from_coefficient",
    "predict_c",
    "predict_C",
    "delta_exponent",
    "degree_tail_asymptotic",
    "attribute_tail_asymptotic",
    "tail_weight_asymptotics",
    "tail_ratio_constant",
    "is_pareto_pair",
]

_TIE_RTOL = 1e-9


class Interval(NamedTuple):
    """Closed interval [lo, hi] certifying a numeric value."""

    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: sizes, shape ratio, and the two weight laws.

    ``beta`` is the limiting ratio m/n used by every limit formula; the stored
    integer sizes only matter for simulation.  Moment helpers ``a(r)``/``b(r)``
    delegate to the weight laws (attribute side X, actor side Y).
    """

    n: int
    m: int
    beta: float
    x_law: WeightLaw
    y_law: WeightLaw

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be >= 1")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    def a(self, r: int) -> float:
        """E[X**r] for the attribute weight law."""
        return self.x_law.moment(r)

    def b(self, r: int) -> float:
        """E[Y**r] for the actor weight law."""
        return self.y_law.moment(r)


def is_pareto_pair(params: ModelParams) -> bool:
    return isinstance(params.x_law, Pareto) and isinstance(params.y_law, Pareto)


def _require_fourth_moments(params: ModelParams) -> None:
    try:
        params.a(4), params.b(4)
    except InfiniteMomentError as exc:
        raise InfiniteMomentError(
            "limit formulas need finite fourth moments of both weight laws "
            f"({exc})") from exc


class LimitTerms(NamedTuple):
    """Closed/open route weights at one degree k."""

    a: float
    b: float
    A: Interval
    B: Interval


class LimitLaws:
    """Numeric ingredient pmfs for the limit formulas, built once per params.

    Exposes the combined closed-route law (stopped sum with order-1 count plus
    the order-3 attribute law) and open-route law (order-2 count stopped sum
    plus two order-2 attribute laws), already on a common grid.
    """

    def __init__(self, params: ModelParams, k_max: int = DEFAULT_K_MAX,
                 tol: float = 1e-10):
        _require_fourth_moments(params)
        self.params = params
        self.k_max = int(k_max)
        self.tol = float(tol)

        self.tau = pmf_offspring(params, self.k_max, tol)
        self.lam2 = pmf_mixed_poisson(
            mixing_spec(params, "attribute", 2), self.k_max, tol)
        self.lam3 = pmf_mixed_poisson(
            mixing_spec(params, "attribute", 3), self.k_max, tol)
        count1 = pmf_mixed_poisson(mixing_spec(params, "actor", 1), self.k_max, tol)
        count2 = pmf_mixed_poisson(mixing_spec(params, "actor", 2), self.k_max, tol)
        self.d1 = pmf_stopped_sum(StoppedSumSpec(count1, self.tau), self.k_max, tol)
        self.d2 = pmf_stopped_sum(StoppedSumSpec(count2, self.tau), self.k_max, tol)

        self.closed_law: Pmf = convolve(self.d1, self.lam3, self.k_max)
        self.open_law: Pmf = convolve(
            convolve(self.d2, self.lam2, self.k_max), self.lam2, self.k_max)
        self.closed_prefactor = params.a(3) * params.b(1) ** 3
        self.open_prefactor = params.a(2) ** 2 * params.b(1) ** 2 * params.b(2)

    def _shift(self, k: int) -> int:
        if k < 2:
            raise ValueError(f"degree k must be >= 2, got {k}")
        s = k - 2
        if s > self.k_max:
            raise ValueError(f"degree {k} beyond grid (k_max={self.k_max}); "
                             "rebuild with a larger k_max")
        return s

    def point_weights(self, k: int) -> tuple[float, float]:
        s = self._shift(k)
        return (self.closed_prefactor * float(self.closed_law.mass[s]),
                self.open_prefactor * float(self.open_law.mass[s]))

    def tail_weights(self, k: int) -> tuple[Interval, Interval]:
        s = self._shift(k)
        alo, ahi = tail_from_pmf(self.closed_law, s)
        blo, bhi = tail_from_pmf(self.open_law, s)
        return (Interval(self.closed_prefactor * alo, self.closed_prefactor * ahi),
                Interval(self.open_prefactor * blo, self.open_prefactor * bhi))

    def terms(self, k: int) -> LimitTerms:
        a, b = self.point_weights(k)
        A, B = self.tail_weights(k)
        return LimitTerms(a, b, A, B)


@lru_cache(maxsize=8)
def _limit_laws_cached(params: ModelParams, k_max: int, tol: float) -> LimitLaws:
    return LimitLaws(params, k_max, tol)


def limit_terms(params: ModelParams, k: int, k_max: int = DEFAULT_K_MAX,
                tol: float = 1e-10) -> LimitTerms:
    """Route weights (a, b, A, B) at degree k; laws are cached per params."""
    return _limit_laws_cached(params, int(k_max), float(tol)).terms(k)


def coefficient_from_ratio(beta: float, ratio: float) -> float:
    """Map an open/closed weight ratio to the clustering probability
    1 / (1 + sqrt(beta) * ratio); decreasing in both arguments."""
    return 1.0 / (1.0 + math.sqrt(beta) * ratio)


def ratio_from_coefficient(beta: float, c: float) -> float:
    """Inverse of :func:`coefficient_from_ratio`, used to fit exponents to
    empirical clustering values."""
    return (1.0 / c - 1.0) / math.sqrt(beta)


def predict_c(params: ModelParams, k: int, k_max: int = DEFAULT_K_MAX,
              tol: float = 1e-10) -> float:
    """Limiting clustering probability at degree exactly k."""
    a, b = _limit_laws_cached(params, int(k_max), float(tol)).point_weights(k)
    if a == 0.0 and b == 0.0:
        raise ValueError(f"degree {k} carries no limit mass on either route")
    if a == 0.0:
        return 0.0
    return coefficient_from_ratio(params.beta, b / a)


def predict_C(params: ModelParams, k: int, k_max: int = DEFAULT_K_MAX,
              tol: float = 1e-10) -> Interval:
    """Interval for the limiting clustering probability at degree >= k."""
    A, B = _limit_laws_cached(params, int(k_max), float(tol)).tail_weights(k)
    if A.hi == 0.0 and B.hi == 0.0:
        raise ValueError(f"degree >= {k} carries no limit mass on either route")
    lo = 0.0 if A.lo == 0.0 else coefficient_from_ratio(params.beta, B.hi / A.lo)
    hi = 1.0 if A.hi == 0.0 else coefficient_from_ratio(params.beta, B.lo / A.hi)
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# Pareto tail asymptotics
# ---------------------------------------------------------------------------

def _pareto_pair(params: ModelParams) -> tuple[Pareto, Pareto]:
    if not is_pareto_pair(params):
        raise TypeError("tail asymptotics need Pareto laws on both sides")
    x, y = params.x_law, params.y_law
    if x.tail_index <= 5 or y.tail_index <= 5:
        raise ValueError("tail asymptotics assume both tail indices exceed 5")
    return x, y


def delta_exponent(alpha: float, gamma: float) -> float:
    """Exponent of the open/closed tail-weight ratio:
    clamp(alpha - gamma - 1, -1, 1).  Valid for tail indices above 5."""
    if alpha <= 5 or gamma <= 5:
        raise ValueError("exponent formula assumes both tail indices exceed 5")
    return min(max(alpha - gamma - 1.0, -1.0), 1.0)


def _degree_tail_constant(params: ModelParams, r: int) -> tuple[float, float]:
    """(constant, exponent) of P(D_r >= k) ~ constant * k**exponent."""
    _, y = _pareto_pair(params)
    gamma = y.tail_index
    c_y = y.tail_amplitude
    a2, b1 = params.a(2), params.b(1)
    if r == 1:
        return c_y * gamma / (gamma - 1.0) * a2 ** (gamma - 1.0) * b1 ** (gamma - 2.0), 1.0 - gamma
    if r == 2:
        b2 = params.b(2)
        return (c_y * gamma / (gamma - 2.0) * a2 ** (gamma - 2.0)
                * b1 ** (gamma - 2.0) / b2), 2.0 - gamma
    raise ValueError(f"stopped-sum tail asymptotic implemented for r in {{1, 2}}, got {r}")


def _attribute_tail_constant(params: ModelParams, r: int) -> tuple[float, float]:
    """(constant, exponent) of P(L_r >= k) ~ constant * k**exponent."""
    x, _ = _pareto_pair(params)
    alpha = x.tail_index
    c_x = x.tail_amplitude
    if r not in (2, 3):
        raise ValueError(f"attribute tail asymptotic implemented for r in {{2, 3}}, got {r}")
    const = (c_x * alpha / (alpha - r) * params.beta ** (0.5 * (r - alpha))
             / params.a(r) * params.b(1) ** (alpha - r))
    return const, r - alpha


def degree_tail_asymptotic(params: ModelParams, r: int, k: float) -> float:
    """Closed-form tail approximation P(D_r >= k) for Pareto laws.

    The count's heavy tail dominates: the sum exceeds k essentially when the
    count exceeds k / E[offspring], which produces the constants below.
    """
    const, exp = _degree_tail_constant(params, r)
    return const * float(k) ** exp


def attribute_tail_asymptotic(params: ModelParams, r: int, k: float) -> float:
    """Closed-form tail approximation P(L_r >= k) for a Pareto attribute law."""
    const, exp = _attribute_tail_constant(params, r)
    return const * float(k) ** exp


def _leading(terms: list[tuple[float, float]]) -> tuple[float, float]:
    """Sum the constants of the max-exponent terms (ties within rtol add)."""
    top = max(e for _, e in terms)
    const = math.fsum(c for c, e in terms if abs(e - top) <= _TIE_RTOL * max(1.0, abs(top)))
    return const, top


def _closed_tail_terms(params: ModelParams) -> list[tuple[float, float]]:
    return [_degree_tail_constant(params, 1), _attribute_tail_constant(params, 3)]


def _open_tail_terms(params: ModelParams) -> list[tuple[float, float]]:
    c2, e2 = _attribute_tail_constant(params, 2)
    return [_degree_tail_constant(params, 2), (c2, e2), (c2, e2)]


def tail_weight_asymptotics(params: ModelParams, k: float) -> tuple[float, float]:
    """Leading-order tails of the two route laws (before prefactors).

    Closed route: the stopped-sum tail k**(1-gamma) competes with the order-3
    attribute tail k**(3-alpha); the crossover sits at alpha = gamma + 2.
    Open route: k**(2-gamma) versus two copies of k**(2-alpha), crossing at
    alpha = gamma.  Exact ties (relative 1e-9) sum both constants.
    """
    ca, ea = _leading(_closed_tail_terms(params))
    cb, eb = _leading(_open_tail_terms(params))
    return ca * float(k) ** ea, cb * float(k) ** eb


def tail_ratio_constant(params: ModelParams) -> float:
    """Constant c with B(k)/A(k) -> c * k**delta, including route prefactors.

    Reconstructed from the leading tail constants of each route; at regime
    ties the tied constants add, matching the sum rule for independent
    heavy-tailed summands.
    """
    x, y = _pareto_pair(params)
    ca, ea = _leading(_closed_tail_terms(params))
    cb, eb = _leading(_open_tail_terms(params))
    laws = _limit_laws_prefactors(params)
    delta = delta_exponent(x.tail_index, y.tail_index)
    if abs((eb - ea) - delta) > 1e-9:
        raise AssertionError("internal regime split disagrees with the exponent formula")
    return laws[1] * cb / (laws[0] * ca)


def _limit_laws_prefactors(params: ModelParams) -> tuple[float, float]:
    return (params.a(3) * params.b(1) ** 3,
            params.a(2) ** 2 * params.b(1) ** 2 * params.b(2))


# ---------------------------------------------------------------------------
# Theory curves for reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryRow:
    k: int
    a: float | None
    b: float | None
    A: Interval
    B: Interval
    c_pred: float | None
    C_pred: Interval
    asymptotic: bool


def _interval_unreliable(iv: Interval) -> bool:
    if iv.hi == 0.0:
        return True
    return iv.width > 0.1 * iv.mid


def theory_curve(params: ModelParams, ks, k_max: int = DEFAULT_K_MAX,
                 tol: float = 1e-10) -> list[TheoryRow]:
    """Predicted clustering rows for each k.

    Uses the numeric route while the tail intervals stay tight (width at most
    10% of the midpoint); for Pareto pairs it switches to the closed-form
    asymptotics beyond that point, where point weights (and hence c_pred) are
    no longer reported.
    """
    laws = _limit_laws_cached(params, int(k_max), float(tol))
    pareto = is_pareto_pair(params)
    pa, pb = laws.closed_prefactor, laws.open_prefactor
    rows: list[TheoryRow] = []
    switched = False
    for k in sorted(int(k) for k in ks):
        use_asym = False
        if switched and pareto:
            terms = None
            use_asym = True
        else:
            try:
                terms = laws.terms(k)
            except ValueError:
                terms = None
            if (terms is None or _interval_unreliable(terms.A)
                    or _interval_unreliable(terms.B)):
                switched = True
                use_asym = pareto
                if not pareto and terms is None:
                    # No numeric weight and no closed form to fall back on:
                    # this degree has no honest prediction, skip its row.
                    continue

        if use_asym:
            # Evaluate the closed forms at the same shifted argument k - 2.
            ta, tb = tail_weight_asymptotics(params, k - 2)
            A = Interval(pa * ta, pa * ta)
            B = Interval(pb * tb, pb * tb)
            C = Interval(coefficient_from_ratio(params.beta, B.hi / A.lo),
                         coefficient_from_ratio(params.beta, B.lo / A.hi))
            rows.append(TheoryRow(k, None, None, A, B, None, C, True))
        else:
            a, b = terms.a, terms.b
            c = None
            if a > 0.0:
                c = coefficient_from_ratio(params.beta, b / a)
            elif b > 0.0:
                c = 0.0
            lo = 0.0 if terms.A.lo == 0.0 else coefficient_from_ratio(
                params.beta, terms.B.hi / terms.A.lo)
            hi = 1.0 if terms.A.hi == 0.0 else coefficient_from_ratio(
                params.beta, terms.B.lo / terms.A.hi)
            rows.append(TheoryRow(k, a, b, terms.A, terms.B, c, Interval(lo, hi), False))
    return rows

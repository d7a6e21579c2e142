"""Mixed Poisson laws with size-biasing, evaluated to controlled accuracy.

Throughout the workbench the local structure of the intersection graph is
described by integer laws of the form

    P(value = s) = E[ exp(-rate) * rate**(s + r) ] / (s! * E[rate**r]),

i.e. a Poisson law whose rate ``rate = scale * W`` is random (``W`` follows a
:class:`~rigclust.weights.WeightLaw`), tilted by ``rate**r``.  The order-``r``
tilt is the familiar size-biasing: the same law is obtained by mixing a plain
Poisson over the ``r``-size-biased weight law, which is also how sampling and
the quadrature below are organised.

Numeric pmfs are carried by :class:`Pmf`: a dense mass array on ``0..k_max``
plus an explicit ``tail_mass`` upper bound for the probability that fell
beyond the grid.  Downstream convolution code propagates those tail bounds, so
every tail probability read off a pmf comes with an interval certificate.

Quadrature
----------
For a continuous (Pareto) mixing law the masses are integrals over the weight
line.  They are computed with fixed-order Gauss-Legendre panels subdivided by
two rules: panels must resolve the power-law/exponential variation of the
mixing density, and -- crucially for deep-tail accuracy -- they must be no
wider than the standard deviation of the Poisson kernel centred on the panel,
so that every entry ``s`` keeps full *relative* precision, not merely the
absolute ``tol`` demanded by the error estimator.  Each panel is accepted only
if a bisected re-evaluation agrees within its error budget; the subdivision
rule is deterministic, so results are bit-identical no matter how callers
partition work.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import gammainc, gammaln

from .weights import Degenerate, Finite, Pareto, WeightLaw

if TYPE_CHECKING:  # pragma: no cover - import only for annotations
    from .theory import ModelParams

__all__ = [
    "Pmf",
    "MixingSpec",
    "QuadratureError",
    "mixing_spec",
    "pmf_mixed_poisson",
    "pmf_offspring",
    "sample_biased",
]

#: Tolerance on |sum(mass) + tail_mass - 1| accepted by Pmf.validate.
NORMALIZATION_ATOL = 1e-9

#: Default length of the mass grid (entries 0..DEFAULT_K_MAX).
DEFAULT_K_MAX = 4096

#: Hard ceiling for automatic grid extension.
GRID_CAP = 1 << 20

#: Grid extension stops once no more than this much mass is beyond the grid.
EXTEND_TARGET = 1e-8


class QuadratureError(RuntimeError):
    """Raised when panel refinement cannot reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on 0..k_max with an explicit tail bound.

    ``mass[s]`` approximates P(value = s); ``tail_mass`` is an upper bound on
    P(value > k_max) (up to the numerical tolerance the producer guarantees).
    Instances are immutable; the mass array is marked read-only.
    """

    mass: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        mass = np.ascontiguousarray(np.asarray(self.mass, dtype=np.float64))
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))
        self.validate()

    def validate(self) -> None:
        if self.mass.ndim != 1 or self.mass.size == 0:
            raise ValueError("mass must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.mass)):
            raise ValueError("mass entries must be finite")
        if self.mass.min() < 0.0:
            raise ValueError(f"negative mass entry {self.mass.min()}")
        if not (0.0 <= self.tail_mass <= 1.0 + NORMALIZATION_ATOL):
            raise ValueError(f"tail_mass {self.tail_mass} outside [0, 1]")
        total = math.fsum(self.mass) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_ATOL:
            raise ValueError(f"mass + tail_mass = {total}, expected 1 within "
                             f"{NORMALIZATION_ATOL}")

    @property
    def k_max(self) -> int:
        return self.mass.size - 1

    @classmethod
    def point(cls, k: int, k_max: int | None = None) -> "Pmf":
        """Point mass at integer k."""
        size = (k if k_max is None else k_max) + 1
        if k >= size:
            raise ValueError("point outside grid")
        mass = np.zeros(size)
        mass[k] = 1.0
        return cls(mass)

    def mean(self) -> float:
        """Grid part of the mean; a lower bound when tail_mass > 0."""
        return float(np.arange(self.mass.size) @ self.mass)

    def to_csv(self, file) -> None:
        """Write rows ``s,mass`` plus a trailing ``tail_mass`` record."""
        own = isinstance(file, str)
        f = open(file, "w", encoding="utf-8") if own else file
        try:
            f.write("s,mass\n")
            for s, p in enumerate(self.mass):
                f.write(f"{s},{float(p)!r}\n")
            f.write(f"tail_mass,{float(self.tail_mass)!r}\n")
        finally:
            if own:
                f.close()

    @classmethod
    def from_csv(cls, file) -> "Pmf":
        own = isinstance(file, str)
        f = open(file, "r", encoding="utf-8") if own else file
        try:
            lines = [ln.strip() for ln in f if ln.strip()]
        finally:
            if own:
                f.close()
        if not lines or lines[0] != "s,mass":
            raise ValueError("expected header 's,mass'")
        tail = 0.0
        mass = []
        for ln in lines[1:]:
            key, val = ln.split(",")
            if key == "tail_mass":
                tail = float(val)
            else:
                if int(key) != len(mass):
                    raise ValueError(f"non-contiguous support at row {ln!r}")
                mass.append(float(val))
        return cls(np.array(mass), tail)


@dataclass(frozen=True)
class MixingSpec:
    """A mixed Poisson law: rate = scale * W, tilted by rate**bias_order."""

    weight_law: WeightLaw
    scale: float
    bias_order: int = 0

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if not isinstance(self.bias_order, (int, np.integer)) or self.bias_order < 0:
            raise ValueError(f"bias_order must be a nonnegative integer, "
                             f"got {self.bias_order!r}")
        object.__setattr__(self, "bias_order", int(self.bias_order))
        # The tilt must be normalisable.
        self.weight_law.moment(self.bias_order)

    def rate_moment(self, r: int) -> float:
        """E[(scale * W) ** r], in closed form from the weight law."""
        return self.scale**r * self.weight_law.moment(r)


def mixing_spec(params: "ModelParams", role: str, bias_order: int = 0) -> MixingSpec:
    """Mixing spec for the two local count laws of the model.

    ``role='actor'`` gives the law counting attributes around one actor:
    rate = Y * sqrt(beta) * E[X].  ``role='attribute'`` gives the law counting
    actors on one attribute: rate = X * E[Y] / sqrt(beta).  Both use the
    limiting shape ratio ``beta``, not the finite-size ratio m/n.
    """
    if role == "actor":
        return MixingSpec(params.y_law, math.sqrt(params.beta) * params.a(1), bias_order)
    if role == "attribute":
        return MixingSpec(params.x_law, params.b(1) / math.sqrt(params.beta), bias_order)
    raise ValueError(f"role must be 'actor' or 'attribute', got {role!r}")


# ---------------------------------------------------------------------------
# Poisson kernels
# ---------------------------------------------------------------------------

def _poisson_rows(rates: np.ndarray, s_lo: int, s_hi: int,
                  log_fact: np.ndarray) -> np.ndarray:
    """Matrix of Poisson masses, rows over rates, columns s_lo..s_hi.

    Rates must be positive; evaluated in log space so huge rates and deep
    tails underflow cleanly to zero instead of overflowing.
    """
    s = np.arange(s_lo, s_hi + 1)
    log_rates = np.log(rates)[:, None]
    logp = s[None, :] * log_rates - rates[:, None] - log_fact[None, s_lo:s_hi + 1]
    with np.errstate(under="ignore"):
        return np.exp(logp)


def _poisson_upper_tail(k_max: int, rates: np.ndarray) -> np.ndarray:
    """P(Poisson(rate) > k_max) via the regularized lower incomplete gamma."""
    return gammainc(k_max + 1, rates)


def _support_window(rate_lo: float, rate_hi: float, k_max: int) -> tuple[int, int]:
    """Index range outside which Poisson(rate) mass underflows for these rates."""
    spread_lo = 42.0 * math.sqrt(rate_lo + 1.0) + 60.0
    spread_hi = 42.0 * math.sqrt(rate_hi + 1.0) + 60.0
    s_lo = max(0, int(rate_lo - spread_lo))
    s_hi = min(k_max, int(rate_hi + spread_hi) + 1)
    return s_lo, s_hi


# ---------------------------------------------------------------------------
# Atomic mixing laws: exact finite mixtures
# ---------------------------------------------------------------------------

def _log_factorials(k_max: int) -> np.ndarray:
    """log(s!) for s = 0..k_max via the log-gamma function."""
    return gammaln(np.arange(1.0, k_max + 2.0))


def _atomic_mixture(atoms, scale: float, r: int, k_max: int) -> tuple[np.ndarray, float]:
    log_fact = _log_factorials(k_max)
    tilt = [p * v**r for v, p in atoms]
    norm = math.fsum(tilt)
    if norm <= 0.0:
        raise ValueError("mixing law has no mass above zero after tilting")
    mass = np.zeros(k_max + 1)
    tail = 0.0
    for (v, _), q in zip(atoms, tilt):
        q /= norm
        if q == 0.0:
            continue
        rate = scale * v
        if rate == 0.0:
            mass[0] += q
            continue
        rate_arr = np.array([rate])
        mass += q * _poisson_rows(rate_arr, 0, k_max, log_fact)[0]
        tail += q * float(_poisson_upper_tail(k_max, rate_arr)[0])
    return mass, tail


# ---------------------------------------------------------------------------
# Pareto mixing laws: deterministic adaptive panel quadrature
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_MAX_DEPTH = 14


def _panel_widths(w: float, scale: float, ridge_end: float) -> float:
    """Local panel width: resolve the Poisson ridge while under it, then grow
    geometrically once every remaining grid entry sits in the left Poisson
    tail (smooth in w)."""
    if w < ridge_end:
        ridge = math.sqrt(scale * w + 1.0) / scale
        return max(min(0.5 * w, ridge), 1e-12 * max(w, 1.0))
    return 0.5 * w


class _PanelAccumulator:
    def __init__(self, k_max: int):
        self.mass = np.zeros(k_max + 1)
        self.tail = 0.0
        self.err = 0.0


def _pareto_panel(x0: float, a: float, scale: float, lo: float, hi: float,
                  k_max: int, log_fact: np.ndarray) -> tuple[int, np.ndarray, float]:
    """Gauss-Legendre estimate of the mixture integral over one panel."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    w = mid + half * _GL_NODES
    coef = (half * _GL_WEIGHTS) * (a * x0**a) * w ** (-a - 1.0)
    rates = scale * w
    # Window from the panel *endpoints* so a child's window nests in its
    # parent's (node positions alone would not nest).
    s_lo, s_hi = _support_window(scale * lo, scale * hi, k_max)
    if s_lo <= s_hi:
        block = _poisson_rows(rates, s_lo, s_hi, log_fact)
        mass_slice = coef @ block
    else:  # entire Poisson bulk is beyond the grid
        s_lo, mass_slice = 0, np.zeros(0)
    tail = float(coef @ _poisson_upper_tail(k_max, rates))
    return s_lo, mass_slice, tail


def _refine_panel(x0, a, scale, lo, hi, budget, depth, k_max, log_fact,
                  acc: _PanelAccumulator) -> None:
    s_lo_p, mass_p, tail_p = _pareto_panel(x0, a, scale, lo, hi, k_max, log_fact)
    mid = 0.5 * (lo + hi)
    s_lo_1, mass_1, tail_1 = _pareto_panel(x0, a, scale, lo, mid, k_max, log_fact)
    s_lo_2, mass_2, tail_2 = _pareto_panel(x0, a, scale, mid, hi, k_max, log_fact)

    # Children windows nest inside the parent's; compare on the parent window.
    fine = np.zeros_like(mass_p)
    if mass_1.size:
        fine[s_lo_1 - s_lo_p:s_lo_1 - s_lo_p + mass_1.size] += mass_1
    if mass_2.size:
        fine[s_lo_2 - s_lo_p:s_lo_2 - s_lo_p + mass_2.size] += mass_2
    err_mass = float(np.max(np.abs(fine - mass_p))) if mass_p.size else 0.0
    err = max(err_mass, abs(tail_1 + tail_2 - tail_p))

    if err <= budget or depth >= _MAX_DEPTH:
        if mass_p.size:
            acc.mass[s_lo_p:s_lo_p + fine.size] += fine
        acc.tail += tail_1 + tail_2
        acc.err += err
        return
    _refine_panel(x0, a, scale, lo, mid, 0.5 * budget, depth + 1, k_max, log_fact, acc)
    _refine_panel(x0, a, scale, mid, hi, 0.5 * budget, depth + 1, k_max, log_fact, acc)


def _pareto_mixture(law: Pareto, scale: float, r: int, k_max: int,
                    tol: float) -> tuple[np.ndarray, float]:
    biased = law.size_biased(r)
    x0, a = biased.x_min, biased.tail_index

    # Cut the weight line where (i) the biased mixing tail is negligible and
    # (ii) every Poisson ridge for entries s <= k_max has been passed.
    tail_eps = min(tol, 1e-12)
    w_tail = x0 * tail_eps ** (-1.0 / a)
    ridge_end = (k_max + 8.0 * math.sqrt(k_max + 1.0) + 16.0) / scale
    w_cut = max(w_tail, ridge_end * 1.0001)

    edges = [x0]
    while edges[-1] < w_cut:
        edges.append(min(w_cut, edges[-1] + _panel_widths(edges[-1], scale, ridge_end)))
    n_panels = len(edges) - 1

    log_fact = _log_factorials(k_max)
    acc = _PanelAccumulator(k_max)
    budget = tol / (8.0 * n_panels)
    for lo, hi in zip(edges[:-1], edges[1:]):
        _refine_panel(x0, a, scale, lo, hi, budget, 0, k_max, log_fact, acc)
    if acc.err > tol:
        raise QuadratureError(
            f"panel refinement reached depth {_MAX_DEPTH} with accumulated "
            f"error bound {acc.err:.3e} > tol {tol:.3e}", achieved=acc.err)

    # Mass that mixes from weights beyond w_cut: bounded by the biased tail
    # there, and (by the ridge cut) it lands beyond k_max, so it belongs to
    # tail_mass.
    tail = acc.tail + biased.tail(w_cut)
    return acc.mass, tail


# ---------------------------------------------------------------------------
# Public constructors
# ---------------------------------------------------------------------------

def _mixture_once(spec: MixingSpec, k_max: int, tol: float) -> tuple[np.ndarray, float]:
    law = spec.weight_law
    if isinstance(law, Pareto):
        return _pareto_mixture(law, spec.scale, spec.bias_order, k_max, tol)
    if isinstance(law, Degenerate):
        atoms = ((law.value, 1.0),)
    elif isinstance(law, Finite):
        atoms = law.atoms
    else:  # pragma: no cover - no other laws exist today
        raise TypeError(f"unsupported weight law {type(law).__name__}")
    return _atomic_mixture(atoms, spec.scale, spec.bias_order, k_max)


def pmf_mixed_poisson(spec: MixingSpec, k_max: int = DEFAULT_K_MAX,
                      tol: float = 1e-10) -> Pmf:
    """Numeric pmf of the size-biased mixed Poisson law.

    Entry ``s`` equals ``E[exp(-rate) rate**(s+r)] / (s! E[rate**r])`` with
    ``rate = scale * W`` and ``r = spec.bias_order``, to absolute accuracy
    ``tol`` per entry (and, for Pareto mixing, near-full relative accuracy
    thanks to ridge-resolving panels).  ``tail_mass`` bounds the mass beyond
    ``k_max``; the grid auto-extends (doubling, capped at 2**20) until at most
    ``1e-8`` is left beyond it.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = int(k_max)
    while True:
        mass, tail = _mixture_once(spec, k, tol)
        if tail <= EXTEND_TARGET:
            return Pmf(mass, tail)
        if k >= GRID_CAP:
            raise QuadratureError(
                f"pmf support will not fit: {tail:.3e} mass beyond grid cap "
                f"{GRID_CAP} (target {EXTEND_TARGET:.0e})", achieved=tail)
        k = min(2 * k, GRID_CAP)


def pmf_offspring(params: "ModelParams", k_max: int = DEFAULT_K_MAX,
                  tol: float = 1e-10) -> Pmf:
    """Law of the extra actors met through one shared attribute.

    If N counts the actors on an attribute (the 'attribute' mixed Poisson law),
    the attribute reached by following a random link shows N size-biased, and
    the actors beyond the one we came from number  tau = N_sb - 1:

        P(tau = s) = (s + 1) P(N = s + 1) / E[N],   E[N] computed in closed form.

    Equivalently tau is the bias_order=1 mixed Poisson law; the shift formula
    below is the primary route and the identity is exploited in tests.
    """
    mean = params.a(1) * params.b(1) / math.sqrt(params.beta)
    if mean <= 0.0:
        raise ValueError("offspring law undefined: E[N] = 0 "
                         "(a weight law is degenerate at zero)")
    base = pmf_mixed_poisson(mixing_spec(params, "attribute", 0), k_max + 1, tol)
    s = np.arange(base.mass.size - 1)
    mass = (s + 1) * base.mass[1:] / mean
    # The exact deficit of the shifted sum is E[N; N > k_max+1]/E[N]; the grid
    # entries are accurate to ~1e-13 relative, so 1 - sum is a faithful
    # tail bound at the tolerances used downstream.
    tail = max(0.0, 1.0 - math.fsum(mass))
    return Pmf(mass, tail)


def sample_biased(spec: MixingSpec, rng: np.random.Generator, size=None):
    """Draw from the size-biased mixed Poisson law.

    Uses the mixture identity: tilt the weight law by bias_order, then draw
    Poisson(scale * W).  Returns a python int for size=None, else an int64
    array.
    """
    biased = spec.weight_law.size_biased(spec.bias_order)
    w = biased.sample(rng, size)
    draws = rng.poisson(spec.scale * np.asarray(w, dtype=np.float64))
    if size is None:
        return int(draws)
    return draws

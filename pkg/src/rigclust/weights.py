"""Weight laws for actor and attribute intensities.

The bipartite model attaches a positive random weight to every actor and every
attribute; link probabilities are proportional to products of these weights.
Three law families cover everything the workbench needs:

* ``Pareto(x_min, tail_index)`` -- survival function ``(x_min / t) ** tail_index``
  for ``t >= x_min``.  The canonical heavy-tailed choice; its raw moment of
  order ``r`` is finite exactly when ``r < tail_index``.
* ``Degenerate(value)`` -- a point mass, handy for collapsing the model onto
  plain Poisson behaviour in tests.
* ``Finite(atoms)`` -- an arbitrary finite support law given as
  ``((value, prob), ...)``.

All laws are frozen dataclasses, safe to share across threads and usable as
dict keys.  Sampling takes a ``numpy.random.Generator`` so callers control the
stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InfiniteMomentError",
    "WeightLaw",
    "Pareto",
    "Degenerate",
    "Finite",
]


class InfiniteMomentError(ValueError):
    """Raised when a requested raw moment does not exist for the law."""


@dataclass(frozen=True)
class WeightLaw:
    """Base class for nonnegative weight laws.

    Subclasses implement raw moments, tail probabilities, truncated moments
    ``E[Z**r; Z > t]``, inverse-CDF sampling, and size-biasing of order ``r``
    (the law with density proportional to ``z**r`` times the original).
    """

    def moment(self, r: int) -> float:
        raise NotImplementedError

    def tail(self, t: float) -> float:
        """P(Z > t)."""
        raise NotImplementedError

    def truncated_moment(self, r: int, t: float) -> float:
        """E[Z**r restricted to Z > t]."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def size_biased(self, r: int) -> "WeightLaw":
        """Law reweighted by z**r; identity for r = 0."""
        raise NotImplementedError


def _check_order(r: int) -> int:
    if not isinstance(r, (int, np.integer)) or r < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {r!r}")
    return int(r)


@dataclass(frozen=True)
class Pareto(WeightLaw):
    """Pareto law on [x_min, inf) with survival (x_min/t)**tail_index."""

    x_min: float
    tail_index: float

    def __post_init__(self):
        if not (self.x_min > 0 and math.isfinite(self.x_min)):
            raise ValueError(f"x_min must be positive and finite, got {self.x_min}")
        if not (self.tail_index > 0 and math.isfinite(self.tail_index)):
            raise ValueError(f"tail_index must be positive and finite, got {self.tail_index}")

    @property
    def tail_amplitude(self) -> float:
        """Constant c with P(Z > t) = c * t**(-tail_index) for t >= x_min."""
        return self.x_min**self.tail_index

    def moment(self, r: int) -> float:
        r = _check_order(r)
        if r == 0:
            return 1.0
        alpha = self.tail_index
        if r >= alpha:
            raise InfiniteMomentError(
                f"E[Z^{r}] is infinite for Pareto tail index {alpha}"
            )
        if alpha - r < 0.1:
            # Near-critical orders: keep the 1/(alpha - r) blow-up in log space
            # so the power factors cannot overflow first.
            return math.exp(
                math.log(alpha) + r * math.log(self.x_min) - math.log(alpha - r)
            )
        return alpha * self.x_min**r / (alpha - r)

    def tail(self, t: float) -> float:
        if t < self.x_min:
            return 1.0
        return (self.x_min / t) ** self.tail_index

    def truncated_moment(self, r: int, t: float) -> float:
        r = _check_order(r)
        alpha = self.tail_index
        if r >= alpha:
            raise InfiniteMomentError(
                f"E[Z^{r}; Z > t] is infinite for Pareto tail index {alpha}"
            )
        if t <= self.x_min:
            # All mass sits above x_min, so the truncation does not bite...
            # except exactly at t = x_min where Z > t excludes nothing (the law
            # has no atom at x_min).
            return self.moment(r)
        if alpha - r < 0.1:
            return math.exp(
                math.log(alpha)
                + alpha * math.log(self.x_min)
                + (r - alpha) * math.log(t)
                - math.log(alpha - r)
            )
        return alpha / (alpha - r) * self.x_min**alpha * t ** (r - alpha)

    def sample(self, rng: np.random.Generator, size=None):
        # Inverse CDF: x_min * u**(-1/alpha) for u uniform on (0, 1].
        # rng.random() lives in [0, 1); using 1 - u avoids mapping 0 to inf.
        u = 1.0 - rng.random(size)
        return self.x_min * u ** (-1.0 / self.tail_index)

    def size_biased(self, r: int) -> "Pareto":
        r = _check_order(r)
        if r == 0:
            return self
        if r >= self.tail_index:
            raise InfiniteMomentError(
                f"size-biasing of order {r} needs tail index > {r}, "
                f"got {self.tail_index}"
            )
        return Pareto(self.x_min, self.tail_index - r)


@dataclass(frozen=True)
class Degenerate(WeightLaw):
    """Point mass at a nonnegative value."""

    value: float

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError(f"value must be nonnegative and finite, got {self.value}")

    def moment(self, r: int) -> float:
        r = _check_order(r)
        return self.value**r

    def tail(self, t: float) -> float:
        return 1.0 if self.value > t else 0.0

    def truncated_moment(self, r: int, t: float) -> float:
        r = _check_order(r)
        return self.value**r if self.value > t else 0.0

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value, dtype=np.float64)

    def size_biased(self, r: int) -> "Degenerate":
        r = _check_order(r)
        if r > 0 and self.value == 0.0:
            raise ValueError("cannot size-bias a point mass at zero")
        return self


@dataclass(frozen=True)
class Finite(WeightLaw):
    """Finite-support law given as atoms ((value, prob), ...)."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("Finite law needs at least one atom")
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total}, expected 1")
        for v, p in atoms:
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"atom value {v} must be nonnegative and finite")
            if p < 0:
                raise ValueError(f"atom probability {p} must be nonnegative")

    def moment(self, r: int) -> float:
        r = _check_order(r)
        return math.fsum(p * v**r for v, p in self.atoms)

    def tail(self, t: float) -> float:
        return math.fsum(p for v, p in self.atoms if v > t)

    def truncated_moment(self, r: int, t: float) -> float:
        r = _check_order(r)
        return math.fsum(p * v**r for v, p in self.atoms if v > t)

    def sample(self, rng: np.random.Generator, size=None):
        values = np.array([v for v, _ in self.atoms], dtype=np.float64)
        probs = np.array([p for _, p in self.atoms], dtype=np.float64)
        probs = probs / probs.sum()
        out = rng.choice(values, size=size if size is not None else 1, p=probs)
        if size is None:
            return float(out[0])
        return out

    def size_biased(self, r: int) -> "Finite":
        r = _check_order(r)
        if r == 0:
            return self
        weights = [p * v**r for v, p in self.atoms]
        total = math.fsum(weights)
        if total <= 0.0:
            raise ValueError("cannot size-bias: law has zero mass above 0")
        return Finite(tuple((v, w / total) for (v, _), w in zip(self.atoms, weights)))

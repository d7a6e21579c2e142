"""Randomly stopped sums of integer laws.

The limiting degree of an actor is a sum of a random number of independent
offspring counts: ``d = sum_{j <= N} tau_j`` with the count ``N`` independent
of the i.i.d. summands.  This module evaluates such compound laws by the
direct mixture-of-convolution-powers loop

    P(d = s) = sum_i P(N = i) * tau^{*i}(s),

truncating the count where its remaining probability drops below ``tol`` and
pushing every neglected or out-of-grid contribution into the tail bound, so
the result is a valid :class:`~rigclust.mixedpoisson.Pmf` whose tail interval
is honest.  The loop is O(n_count * k_max^2) in the worst case but each
convolution is a single C-level ``numpy.convolve``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mixedpoisson import DEFAULT_K_MAX, Pmf

__all__ = ["StoppedSumSpec", "convolve", "pmf_stopped_sum", "tail_from_pmf"]


@dataclass(frozen=True)
class StoppedSumSpec:
    """Count law plus summand law for a randomly stopped sum."""

    count: Pmf
    summand: Pmf


def _clip_tail(mass: np.ndarray, tail: float) -> float:
    """Tightest upper bound on the off-grid mass: never below zero, never
    above the grid deficit."""
    return min(max(tail, 0.0), max(1.0 - math.fsum(mass), 0.0))


def _convolve_raw(p: np.ndarray, q: np.ndarray, k_max: int) -> tuple[np.ndarray, float]:
    """Grid part of the convolution plus the mass pushed beyond k_max."""
    full = np.convolve(p, q)
    if full.size <= k_max + 1:
        out = np.zeros(k_max + 1)
        out[:full.size] = full
        return out, 0.0
    pushed = float(math.fsum(full[k_max + 1:]))
    return np.ascontiguousarray(full[:k_max + 1]), pushed


def convolve(p: Pmf, q: Pmf, k_max: int | None = None) -> Pmf:
    """Distribution of the sum of independent draws from ``p`` and ``q``.

    ``tail_mass`` of the result is ``p.tail_mass + q.tail_mass`` plus whatever
    grid mass the convolution pushed beyond ``k_max``, clipped to the grid
    deficit ``1 - sum(mass)`` -- both are upper bounds on the true remaining
    mass (the grid part only ever undercounts), so the smaller one is the
    honest choice and normalization survives even fat input tails.  The
    default grid covers the full sum support.
    """
    if k_max is None:
        k_max = p.k_max + q.k_max
    mass, pushed = _convolve_raw(p.mass, q.mass, k_max)
    return Pmf(mass, _clip_tail(mass, p.tail_mass + q.tail_mass + pushed))


def pmf_stopped_sum(spec: StoppedSumSpec, k_max: int | None = None,
                    tol: float = 1e-10) -> Pmf:
    """Pmf of ``sum_{j <= N} tau_j`` for ``N ~ spec.count``, ``tau ~ spec.summand``.

    The count is truncated at the smallest i with P(N > i) < tol; the remaining
    count probability joins the tail bound, as do the summand tail bounds
    (i per convolution power) and any convolution mass beyond the grid.

    The default grid covers the full sum support when that is modest, and
    otherwise caps it (with the excess accounted for in the tail bound).
    """
    count, summand = spec.count, spec.summand
    if k_max is None:
        k_max = min(count.k_max * summand.k_max, DEFAULT_K_MAX)
    if not (tol > 0):
        raise ValueError("tol must be positive")

    # Remaining count probability after each i: suffix sums + the count's own
    # tail bound.
    suffix = np.concatenate([np.cumsum(count.mass[::-1])[::-1], [0.0]])
    n_top = count.mass.size - 1
    n_cut = n_top
    for i in range(n_top + 1):
        if suffix[i + 1] + count.tail_mass < tol:
            n_cut = i
            break
    remaining = float(suffix[n_cut + 1]) + count.tail_mass

    acc = np.zeros(k_max + 1)
    acc[0] = count.mass[0]  # the empty sum
    acc_tail = remaining

    power = np.zeros(k_max + 1)
    power[0] = 1.0
    power_tail = 0.0
    for i in range(1, n_cut + 1):
        power, pushed = _convolve_raw(power, summand.mass, k_max)
        power_tail += summand.tail_mass + pushed
        w = count.mass[i]
        if w != 0.0:
            acc += w * power
            acc_tail += w * power_tail
    return Pmf(acc, _clip_tail(acc, acc_tail))


def tail_from_pmf(p: Pmf, k: int) -> tuple[float, float]:
    """Interval [lower, upper] for P(value >= k).

    The lower bound sums the grid mass at and above ``k``; the upper bound adds
    the pmf's tail allowance.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    lower = float(math.fsum(p.mass[k:])) if k <= p.k_max else 0.0
    upper = min(1.0, lower + p.tail_mass)
    return lower, upper

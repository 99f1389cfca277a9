"""Monotone balance solver shared by every pricing computation.

All clearing prices in the package solve equations of the form

    demand(price) == target

where ``demand`` is continuous and non-increasing.  Bisection is globally
convergent for such functions.  Clipping can flatten the demand curve, so
the solution may be an interval; we return its midpoint, found by bisecting
the two monotone predicates ``demand(p) <= target`` (left edge) and
``demand(p) < target`` (right edge).  Because each predicate is evaluated on
the same dyadic grid, solved prices are exactly monotone in the target,
which the price-policy monotonicity guarantees rely on.
"""

from __future__ import annotations

from typing import Callable

from .errors import FeasibilityError, SolverError

DEFAULT_TOLERANCE = 1e-10
MAX_ITERATIONS = 200


def solve_balance(
    demand: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> float:
    """Price p in [lo, hi] with |demand(p) - target| <= tolerance.

    Raises FeasibilityError when the target lies outside [demand(hi),
    demand(lo)] by more than the tolerance, and SolverError if the residual
    contract cannot be met (a non-monotone demand callable).
    """
    if hi < lo:
        raise SolverError(f"empty bracket [{lo}, {hi}]")
    d_lo = demand(lo)
    d_hi = demand(hi)
    if target > d_lo + tolerance:
        raise FeasibilityError(
            f"balance target {target} exceeds achievable demand {d_lo} "
            f"at price {lo}"
        )
    if target < d_hi - tolerance:
        raise FeasibilityError(
            f"balance target {target} below achievable demand {d_hi} "
            f"at price {hi}"
        )

    left = _first_true(demand, lo, hi, max_iterations,
                       lambda value: value <= target,
                       already=d_lo <= target)
    right = _last_true(demand, lo, hi, max_iterations,
                       lambda value: value >= target,
                       still=d_hi >= target)
    price = 0.5 * (left + right)
    residual = demand(price) - target
    if abs(residual) > tolerance:
        raise SolverError(
            f"balance residual {residual} exceeds tolerance {tolerance} "
            f"at price {price}"
        )
    return price


def _first_true(demand, lo, hi, max_iterations, pred, already):
    """Smallest price where pred(demand(price)) holds (pred monotone in price)."""
    if already:
        return lo
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if pred(demand(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def _last_true(demand, lo, hi, max_iterations, pred, still):
    """Largest price where pred(demand(price)) holds (pred anti-monotone)."""
    if still:
        return hi
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if pred(demand(mid)):
            lo = mid
        else:
            hi = mid
    return lo

"""One-part dynamic pricing for communities whose envelopes sit at member meters.

When the distribution operator enforces envelopes per member instead of at
the community meter, the community price is a single rate bounded by the
retail band.  Each member's demand at the candidate rate is clamped to what
its own envelopes allow ([z_lo_i + r_i, z_hi_i + r_i]); two thresholds on
aggregate renewables mark where the buy or sell rate clears the clamped
aggregate, and in between an internal rate balances it exactly.  Unlike the
aggregate-envelope policy this one needs the full per-member renewable
vector, not just its sum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .benchmark import Member
from .pricing import Community
from .rootfind import DEFAULT_TOLERANCE, solve_balance
from .tariff import NemTariff


class DnemZone(enum.Enum):
    PI_PLUS = "pi_plus"
    PI_Z = "pi_z"
    PI_MINUS = "pi_minus"


@dataclass(frozen=True)
class DnemSchedule:
    theta1: float
    theta2: float
    price: float
    zone: DnemZone


@dataclass(frozen=True)
class DnemResponse:
    """A member's surplus-maximising response to the announced rate."""

    d: tuple
    z: float
    surplus: float
    binding: str  # "import", "export", or "none"


def _clamped_total(community: Community, r: tuple, price: float) -> float:
    total = 0.0
    for member, r_i in zip(community.members, r):
        demand = member.bundle.total_demand(price)
        total += min(member.z_hi + r_i, max(member.z_lo + r_i, demand))
    return total


def dnem_schedule(
    community: Community,
    tariff: NemTariff,
    r: tuple,
    tolerance: float = DEFAULT_TOLERANCE,
) -> DnemSchedule:
    """Announce the member-level-envelope community rate for renewables r."""
    community.check_feasible(r)
    r = tuple(float(x) for x in r)
    r_n = math.fsum(r)
    theta1 = _clamped_total(community, r, tariff.pi_plus)
    theta2 = _clamped_total(community, r, tariff.pi_minus)

    if r_n < theta1:
        return DnemSchedule(theta1, theta2, tariff.pi_plus, DnemZone.PI_PLUS)
    if r_n > theta2:
        return DnemSchedule(theta1, theta2, tariff.pi_minus, DnemZone.PI_MINUS)
    price = solve_balance(
        lambda mu: _clamped_total(community, r, mu),
        r_n, tariff.pi_minus, tariff.pi_plus, tolerance,
    )
    return DnemSchedule(theta1, theta2, price, DnemZone.PI_Z)


def dnem_member_respond(
    member: Member,
    r_i: float,
    schedule: DnemSchedule,
    tolerance: float = DEFAULT_TOLERANCE,
) -> DnemResponse:
    """Best response to the announced rate under the member's own envelopes.

    The member consumes its demand at the rate unless that would push its
    meter outside [z_lo, z_hi]; a binding envelope pins total consumption to
    the envelope and an internal shadow price splits it across devices.
    """
    member.check_feasible(r_i)
    bundle = member.bundle
    d = bundle.clipped_demand(schedule.price)
    z = float(sum(d)) - r_i
    binding = "none"
    if z > member.z_hi:
        binding = "import"
        cap = max(bundle.max_marginal(), schedule.price)
        shadow = solve_balance(
            bundle.total_demand, member.z_hi + r_i,
            schedule.price, cap, tolerance,
        )
        d = bundle.clipped_demand(shadow)
        z = float(sum(d)) - r_i
    elif z < member.z_lo:
        binding = "export"
        shadow = solve_balance(
            bundle.total_demand, member.z_lo + r_i,
            0.0, schedule.price, tolerance,
        )
        d = bundle.clipped_demand(shadow)
        z = float(sum(d)) - r_i
    surplus = bundle.value(d) - schedule.price * z
    return DnemResponse(d=d, z=z, surplus=surplus, binding=binding)

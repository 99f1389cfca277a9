"""Community-level two-part pricing under aggregate operating envelopes.

The operator watches one number, the community's aggregate renewable output
r_n, and prices against four renewable-level thresholds:

    sigma2 = community demand at the buy rate     sigma1 = sigma2 - z_hi_n
    sigma3 = community demand at the sell rate    sigma4 = sigma3 - z_lo_n

Between sigma1 and sigma2 the buy rate passes through; between sigma3 and
sigma4 the sell rate does.  Outside sigma1/sigma4 an envelope binds and the
price moves beyond the retail band to hold the aggregate meter exactly on
the envelope; on [sigma2, sigma3] the community is self-balanced and the
price clears internal supply against demand.  Whenever the price leaves the
retail band the operator over-collects on the volumetric charge; the fixed
rewards hand that surplus back in proportion to each member's own envelope
plus an equal share of the aggregation headroom, which restores profit
neutrality exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .benchmark import Member
from .errors import FeasibilityError
from .rootfind import DEFAULT_TOLERANCE, solve_balance
from .tariff import NemTariff
from .utility import DeviceUtility


class PriceZone(enum.Enum):
    CHI_PLUS = "chi_plus"
    PI_PLUS = "pi_plus"
    CHI_Z = "chi_z"
    PI_MINUS = "pi_minus"
    CHI_MINUS = "chi_minus"


#: Zones in which an aggregate envelope binds and rewards are paid.
REWARD_ZONES = (PriceZone.CHI_PLUS, PriceZone.CHI_MINUS)


@dataclass(frozen=True)
class Community:
    """Members pooled behind one revenue meter with aggregate envelopes.

    The aggregate envelopes must dominate the members' own: the import caps
    must sum to no more than z_hi_n and the export caps to no less than
    z_lo_n, otherwise rewards could change sign and construction fails.
    """

    members: tuple
    z_lo_n: float
    z_hi_n: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("community needs at least one member")
        ids = [m.member_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate member ids")
        if not (math.isfinite(self.z_lo_n) and math.isfinite(self.z_hi_n)):
            raise ValueError("aggregate envelopes must be finite")
        if not self.z_lo_n <= 0 <= self.z_hi_n:
            raise ValueError(
                f"need z_lo_n <= 0 <= z_hi_n, got z_lo_n={self.z_lo_n}, "
                f"z_hi_n={self.z_hi_n}"
            )
        slack = 1e-12 * max(1.0, abs(self.z_hi_n), abs(self.z_lo_n))
        total_hi = math.fsum(m.z_hi for m in self.members)
        total_lo = math.fsum(m.z_lo for m in self.members)
        if total_hi > self.z_hi_n + slack:
            raise ValueError(
                f"member import caps sum to {total_hi}, above the aggregate "
                f"envelope z_hi_n={self.z_hi_n}"
            )
        if total_lo < self.z_lo_n - slack:
            raise ValueError(
                f"member export caps sum to {total_lo}, below the aggregate "
                f"envelope z_lo_n={self.z_lo_n}"
            )

    @property
    def n(self) -> int:
        return len(self.members)

    @cached_property
    def member_ids(self) -> tuple:
        return tuple(m.member_id for m in self.members)

    @cached_property
    def _flat_devices(self) -> tuple:
        # Quadratic devices flattened into one array set; anything else is
        # summed per device.  total_demand sits inside bisection loops.
        quads = [
            dev
            for m in self.members
            for dev in m.bundle.devices
            if isinstance(dev, DeviceUtility)
        ]
        others = tuple(
            dev
            for m in self.members
            for dev in m.bundle.devices
            if not isinstance(dev, DeviceUtility)
        )
        params = tuple(
            np.array([getattr(dev, name) for dev in quads])
            for name in ("alpha", "beta", "d_lo", "d_hi")
        )
        return params, others

    def total_demand(self, price: float) -> float:
        (alpha, beta, lo, hi), others = self._flat_devices
        total = 0.0
        if alpha.size:
            total += float(np.clip((alpha - price) / beta, lo, hi).sum())
        for dev in others:
            total += dev.clipped_demand(price)
        return total

    @cached_property
    def price_cap(self) -> float:
        """Price at which every member's demand sits at its floor."""
        return float(max(m.bundle.max_marginal() for m in self.members))

    @cached_property
    def demand_floor(self) -> float:
        return float(sum(m.bundle.demand_floor() for m in self.members))

    def check_feasible(self, r: tuple) -> None:
        if len(r) != self.n:
            raise ValueError(
                f"expected {self.n} renewable outputs, got {len(r)}"
            )
        for member, r_i in zip(self.members, r):
            member.check_feasible(r_i)


@dataclass(frozen=True)
class PriceSchedule:
    """The announced price for one realisation of aggregate renewables."""

    sigmas: tuple
    r_n: float
    zone: PriceZone
    price: float


@dataclass(frozen=True)
class RewardAllocation:
    per_member: Mapping[str, float]
    total: float


def compute_sigmas(community: Community, tariff: NemTariff) -> tuple:
    """The four renewable-level thresholds (sigma1..sigma4)."""
    s2 = community.total_demand(tariff.pi_plus)
    s3 = community.total_demand(tariff.pi_minus)
    return (s2 - community.z_hi_n, s2, s3, s3 - community.z_lo_n)


def solve_chi(
    community: Community,
    target: float,
    tolerance: float = DEFAULT_TOLERANCE,
) -> float:
    """Price at which aggregate community demand meets the target exactly."""
    return solve_balance(
        community.total_demand, target, 0.0, community.price_cap, tolerance
    )


def price_policy(
    community: Community,
    tariff: NemTariff,
    r_n: float,
    tolerance: float = DEFAULT_TOLERANCE,
) -> PriceSchedule:
    """Announce the community price for aggregate renewables r_n.

    Dynamic-zone prices are solved on zone-specific brackets (above the buy
    rate, between the rates, below the sell rate), which realises the price
    ordering chi_plus >= pi_plus >= chi_z >= pi_minus >= chi_minus >= 0 by
    construction; continuity across zone boundaries follows from the shared
    balance equations.
    """
    if not math.isfinite(r_n) or r_n < 0:
        raise FeasibilityError(f"aggregate renewables must be >= 0, got {r_n}")
    sigmas = compute_sigmas(community, tariff)
    s1, s2, s3, s4 = sigmas

    if r_n <= s1:
        zone = PriceZone.CHI_PLUS
        cap = max(community.price_cap, tariff.pi_plus)
        price = solve_balance(
            community.total_demand, r_n + community.z_hi_n,
            tariff.pi_plus, cap, tolerance,
        )
    elif r_n < s2:
        zone = PriceZone.PI_PLUS
        price = tariff.pi_plus
    elif r_n <= s3:
        zone = PriceZone.CHI_Z
        price = solve_balance(
            community.total_demand, r_n,
            tariff.pi_minus, tariff.pi_plus, tolerance,
        )
    elif r_n < s4:
        zone = PriceZone.PI_MINUS
        price = tariff.pi_minus
    else:
        zone = PriceZone.CHI_MINUS
        price = solve_balance(
            community.total_demand, r_n + community.z_lo_n,
            0.0, tariff.pi_minus, tolerance,
        )
    return PriceSchedule(sigmas=sigmas, r_n=r_n, zone=zone, price=price)


def fixed_rewards(
    community: Community,
    tariff: NemTariff,
    schedule: PriceSchedule,
) -> RewardAllocation:
    """Per-member lump-sum rewards returning the operator's over-collection.

    Each member receives its own envelope's share of the price excursion
    plus an equal split of the aggregation headroom; the total equals the
    gap between what members pay and what the operator owes the utility.
    """
    n = community.n
    if schedule.zone is PriceZone.CHI_PLUS:
        margin = schedule.price - tariff.pi_plus
        total_caps = math.fsum(m.z_hi for m in community.members)
        headroom = (community.z_hi_n - total_caps) / n
        per = {
            m.member_id: margin * (m.z_hi + headroom) for m in community.members
        }
    elif schedule.zone is PriceZone.CHI_MINUS:
        margin = schedule.price - tariff.pi_minus
        total_caps = math.fsum(m.z_lo for m in community.members)
        headroom = (community.z_lo_n - total_caps) / n
        per = {
            m.member_id: margin * (m.z_lo + headroom) for m in community.members
        }
    else:
        per = {m.member_id: 0.0 for m in community.members}
    return RewardAllocation(per_member=per, total=math.fsum(per.values()))


def member_payment(
    schedule: PriceSchedule,
    rewards: RewardAllocation,
    member_id: str,
    z: float,
) -> float:
    """Two-part payment: uniform price times net consumption, less the reward."""
    if member_id not in rewards.per_member:
        raise KeyError(f"unknown member id {member_id!r}")
    return schedule.price * z - rewards.per_member[member_id]

"""Standalone prosumer facing the NEM tariff under its own envelopes.

A prosumer that never joins a community schedules consumption against the
sign-dependent tariff subject to its meter envelopes [z_lo, z_hi].  The
optimum follows a five-zone policy over the renewable output r, split by
four breakpoints:

    delta2 = bundle demand at the buy rate     delta1 = delta2 - z_hi
    delta3 = bundle demand at the sell rate    delta4 = delta3 - z_lo

Below delta1 the import envelope binds and an internal shadow price above
the buy rate rations consumption; between delta2 and delta3 the prosumer
self-balances at a shadow price between the two rates; above delta4 the
export envelope binds and a shadow price below the sell rate stimulates
consumption.  In the two remaining bands consumption is pinned to the
demand at the applicable NEM rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import FeasibilityError
from .rootfind import DEFAULT_TOLERANCE, solve_balance
from .tariff import NemTariff
from .utility import UtilityBundle


class BenchmarkZone(enum.Enum):
    IMPORT_CLIPPED = "import_clipped"
    BUY = "buy"
    BALANCED = "balanced"
    SELL = "sell"
    EXPORT_CLIPPED = "export_clipped"


@dataclass(frozen=True)
class Member:
    """A prosumer: device bundle plus the meter envelopes it faces alone.

    z_lo <= 0 caps export, z_hi >= 0 caps import.  Feasibility against a
    particular renewable draw is checked when responding, not here.
    """

    member_id: str
    bundle: UtilityBundle
    z_lo: float
    z_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.z_lo) and math.isfinite(self.z_hi)):
            raise ValueError("envelopes must be finite")
        if not self.z_lo <= 0 <= self.z_hi:
            raise ValueError(
                f"need z_lo <= 0 <= z_hi, got z_lo={self.z_lo}, z_hi={self.z_hi}"
            )

    def check_feasible(self, r: float) -> None:
        """Raise unless some consumption satisfies both bounds and envelopes."""
        if r < 0 or not math.isfinite(r):
            raise FeasibilityError(f"renewable output must be >= 0, got {r}")
        floor = self.bundle.demand_floor()
        ceiling = self.bundle.demand_ceiling()
        slack = 1e-9 * max(1.0, abs(r), ceiling)
        if self.z_hi < floor - r - slack:
            raise FeasibilityError(
                f"member {self.member_id}: import envelope z_hi={self.z_hi} "
                f"below minimum net consumption {floor - r}"
            )
        if self.z_lo > ceiling - r + slack:
            raise FeasibilityError(
                f"member {self.member_id}: export envelope z_lo={self.z_lo} "
                f"above maximum net consumption {ceiling - r}"
            )


@dataclass(frozen=True)
class BenchmarkResponse:
    zone: BenchmarkZone
    deltas: tuple
    shadow_price: float
    d: tuple
    z: float
    surplus: float


def benchmark_deltas(member: Member, tariff: NemTariff) -> tuple:
    """The four breakpoints (delta1..delta4) of the standalone policy."""
    d2 = member.bundle.total_demand(tariff.pi_plus)
    d3 = member.bundle.total_demand(tariff.pi_minus)
    return (d2 - member.z_hi, d2, d3, d3 - member.z_lo)


def classify_zone(deltas: tuple, r: float) -> BenchmarkZone:
    """Zone for renewable output r; the balanced band is closed on both ends."""
    d1, d2, d3, d4 = deltas
    if r <= d1:
        return BenchmarkZone.IMPORT_CLIPPED
    if r < d2:
        return BenchmarkZone.BUY
    if r <= d3:
        return BenchmarkZone.BALANCED
    if r < d4:
        return BenchmarkZone.SELL
    return BenchmarkZone.EXPORT_CLIPPED


def benchmark_respond(
    member: Member,
    r: float,
    tariff: NemTariff,
    tolerance: float = DEFAULT_TOLERANCE,
) -> BenchmarkResponse:
    """Optimal standalone consumption, net consumption, and surplus at r."""
    member.check_feasible(r)
    deltas = benchmark_deltas(member, tariff)
    bundle = member.bundle
    zone = classify_zone(deltas, r)

    if zone is BenchmarkZone.IMPORT_CLIPPED:
        cap = max(bundle.max_marginal(), tariff.pi_plus)
        price = solve_balance(
            bundle.total_demand, member.z_hi + r,
            tariff.pi_plus, cap, tolerance,
        )
    elif zone is BenchmarkZone.BUY:
        price = tariff.pi_plus
    elif zone is BenchmarkZone.BALANCED:
        price = solve_balance(
            bundle.total_demand, r,
            tariff.pi_minus, tariff.pi_plus, tolerance,
        )
    elif zone is BenchmarkZone.SELL:
        price = tariff.pi_minus
    else:
        price = solve_balance(
            bundle.total_demand, member.z_lo + r,
            0.0, tariff.pi_minus, tolerance,
        )

    d = bundle.clipped_demand(price)
    z = float(sum(d)) - r
    surplus = bundle.value(d) - tariff.payment(z)
    return BenchmarkResponse(
        zone=zone, deltas=deltas, shadow_price=price, d=d, z=z, surplus=surplus
    )

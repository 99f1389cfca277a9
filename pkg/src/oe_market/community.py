"""Closing the loop: member responses, welfare, axiom checks, and analytics.

Given a renewable realisation, the community announces its schedule, every
member consumes its demand at the announced price, and the resulting
payments, surpluses, and aggregate meter reading assemble into an outcome.
The module also carries the independent verification machinery: the
closed-form centrally-dispatched welfare, an exhaustive lattice search for
welfare, the four pricing axioms, per-member value-of-community analytics,
and finite-difference comparative statics of that value against the tariff
rates and envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .benchmark import (
    BenchmarkZone,
    benchmark_deltas,
    benchmark_respond,
    classify_zone,
)
from .errors import MarketError, UsageError
from .pricing import (
    Community,
    PriceSchedule,
    PriceZone,
    RewardAllocation,
    fixed_rewards,
    member_payment,
    price_policy,
)
from .rootfind import DEFAULT_TOLERANCE
from .tariff import NemTariff
from .utility import DeviceUtility

#: Residual allowed on exact identities (profit neutrality, zero-value cases).
IDENTITY_TOLERANCE = 1e-9

#: Self-balance detection width for the value-of-community zero case.
SELF_BALANCE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MemberOutcome:
    d: tuple
    z: float
    payment: float
    surplus: float


@dataclass(frozen=True)
class CommunityOutcome:
    schedule: PriceSchedule
    rewards: RewardAllocation
    per_member: Mapping[str, MemberOutcome]
    z_n: float
    welfare: float


def community_respond(
    community: Community,
    tariff: NemTariff,
    r: Sequence[float],
    tolerance: float = DEFAULT_TOLERANCE,
) -> CommunityOutcome:
    """Announce the schedule for r and let every member respond optimally."""
    r = tuple(float(x) for x in r)
    if len(r) != community.n:
        raise ValueError(f"expected {community.n} renewable outputs, got {len(r)}")
    for x in r:
        if not math.isfinite(x) or x < 0:
            raise ValueError(f"renewable output must be finite and >= 0, got {x}")
    r_n = math.fsum(r)
    schedule = price_policy(community, tariff, r_n, tolerance)
    rewards = fixed_rewards(community, tariff, schedule)

    per_member = {}
    for member, r_i in zip(community.members, r):
        d = member.bundle.clipped_demand(schedule.price)
        z = float(sum(d)) - r_i
        pay = member_payment(schedule, rewards, member.member_id, z)
        surplus = member.bundle.value(d) - pay
        per_member[member.member_id] = MemberOutcome(
            d=d, z=z, payment=pay, surplus=surplus
        )

    z_n = math.fsum(out.z for out in per_member.values())
    welfare = math.fsum(out.surplus for out in per_member.values())
    return CommunityOutcome(
        schedule=schedule,
        rewards=rewards,
        per_member=per_member,
        z_n=z_n,
        welfare=welfare,
    )


class CentralizedDispatch(NamedTuple):
    welfare: float
    per_member_d: Mapping[str, tuple]
    z_n: float


def centralized_welfare(
    community: Community,
    tariff: NemTariff,
    r_n: float,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CentralizedDispatch:
    """Maximum welfare under central dispatch, from its closed piecewise form.

    Shares the threshold and clearing-price machinery with the pricing
    policy but charges the community bill directly, so it provides the
    equilibrium-optimality cross-check without trusting member payments.
    """
    schedule = price_policy(community, tariff, r_n, tolerance)
    per_member_d = {
        m.member_id: m.bundle.clipped_demand(schedule.price)
        for m in community.members
    }
    values = math.fsum(
        m.bundle.value(per_member_d[m.member_id]) for m in community.members
    )
    total_d = math.fsum(sum(d) for d in per_member_d.values())

    zone = schedule.zone
    if zone is PriceZone.CHI_PLUS:
        z_n = community.z_hi_n
        welfare = values - tariff.pi_plus * community.z_hi_n
    elif zone is PriceZone.PI_PLUS:
        z_n = total_d - r_n
        welfare = values - tariff.pi_plus * z_n
    elif zone is PriceZone.CHI_Z:
        z_n = 0.0
        welfare = values
    elif zone is PriceZone.PI_MINUS:
        z_n = total_d - r_n
        welfare = values - tariff.pi_minus * z_n
    else:
        z_n = community.z_lo_n
        welfare = values - tariff.pi_minus * community.z_lo_n
    return CentralizedDispatch(welfare=welfare, per_member_d=per_member_d, z_n=z_n)


@dataclass(frozen=True)
class AxiomCheck:
    passed: bool
    detail: float


@dataclass(frozen=True)
class AxiomReport:
    uniform_volumetric: AxiomCheck
    monotonic_zero_at_zero: AxiomCheck
    individual_rationality: AxiomCheck
    profit_neutrality: AxiomCheck

    @property
    def all_passed(self) -> bool:
        return (
            self.uniform_volumetric.passed
            and self.monotonic_zero_at_zero.passed
            and self.individual_rationality.passed
            and self.profit_neutrality.passed
        )


def verify_axioms(
    community: Community,
    tariff: NemTariff,
    r: Sequence[float],
    outcome: CommunityOutcome,
    tolerance: float = IDENTITY_TOLERANCE,
) -> AxiomReport:
    """Check the four pricing axioms on a realised outcome.

    Uniformity and monotonicity are probed with synthetic meter readings so
    the realised renewables stay untouched; rationality compares each member
    against its standalone optimum; neutrality sums the actual payments
    against the community bill.
    """
    probes = [-1.5, -0.25, 0.0, 0.4, 1.0, 2.5]
    ids = community.member_ids

    def volumetric(member_id, z):
        # The payment rule through its public path, reward stripped back off.
        charge = member_payment(outcome.schedule, outcome.rewards, member_id, z)
        return charge + outcome.rewards.per_member[member_id]

    # Probe two members at identical synthetic meter readings.
    uniform_gap = max(
        abs(volumetric(ids[0], z) - volumetric(ids[-1], z)) for z in probes
    )
    uniform = AxiomCheck(uniform_gap <= tolerance, uniform_gap)

    charges = [volumetric(ids[0], z) for z in probes]
    monotone = all(a <= b + tolerance for a, b in zip(charges, charges[1:]))
    at_zero = abs(volumetric(ids[0], 0.0))
    monotonic = AxiomCheck(monotone and at_zero <= tolerance, at_zero)

    worst = math.inf
    for member, r_i in zip(community.members, r):
        bench = benchmark_respond(member, r_i, tariff)
        margin = outcome.per_member[member.member_id].surplus - bench.surplus
        worst = min(worst, margin)
    rationality = AxiomCheck(worst >= -tolerance, worst)

    residual = math.fsum(
        out.payment for out in outcome.per_member.values()
    ) - tariff.payment(outcome.z_n)
    neutrality = AxiomCheck(abs(residual) <= tolerance, residual)

    return AxiomReport(
        uniform_volumetric=uniform,
        monotonic_zero_at_zero=monotonic,
        individual_rationality=rationality,
        profit_neutrality=neutrality,
    )


@dataclass(frozen=True)
class VocReport:
    """Mean per-member surplus gain from membership, over scenarios."""

    per_member: Mapping[str, float]
    total: float
    zero_cases: tuple


def voc(
    community: Community,
    tariff: NemTariff,
    scenarios: Sequence[Sequence[float]],
    tolerance: float = DEFAULT_TOLERANCE,
) -> VocReport:
    """Empirical value of community per member, with exact-zero case flags.

    Three configurations provably leave a member indifferent: the community
    passes the buy rate while the member would buy at that same rate alone
    ("import_rate_match"), the sell-rate mirror image ("export_rate_match"),
    and a self-balanced member inside the balanced band ("self_balanced").
    Those cases are asserted to be value-zero within IDENTITY_TOLERANCE.
    """
    if not scenarios:
        raise UsageError("need at least one renewable scenario")
    sums = {m.member_id: 0.0 for m in community.members}
    zero_cases = []
    deltas = {
        m.member_id: benchmark_deltas(m, tariff) for m in community.members
    }
    for index, scenario in enumerate(scenarios):
        outcome = community_respond(community, tariff, scenario, tolerance)
        s1, s2, s3, s4 = outcome.schedule.sigmas
        r_n = outcome.schedule.r_n
        for member, r_i in zip(community.members, scenario):
            out = outcome.per_member[member.member_id]
            bench = benchmark_respond(member, r_i, tariff, tolerance)
            diff = out.surplus - bench.surplus
            sums[member.member_id] += diff

            d1, d2, d3, d4 = deltas[member.member_id]
            label = None
            if s1 <= r_n <= s2 and d1 <= r_i <= d2:
                label = "import_rate_match"
            elif s3 <= r_n <= s4 and d3 <= r_i <= d4:
                label = "export_rate_match"
            elif (
                s2 <= r_n <= s3
                and abs(float(sum(out.d)) - r_i) <= SELF_BALANCE_TOLERANCE
            ):
                label = "self_balanced"
            if label is not None:
                zero_cases.append((index, member.member_id, label))
                if abs(diff) > IDENTITY_TOLERANCE:
                    raise MarketError(
                        f"member {member.member_id} flagged {label} in "
                        f"scenario {index} but gains {diff}"
                    )
    count = len(scenarios)
    per_member = {mid: s / count for mid, s in sums.items()}
    return VocReport(
        per_member=per_member,
        total=math.fsum(per_member.values()),
        zero_cases=tuple(zero_cases),
    )


PERTURBABLE_PARAMETERS = ("pi_plus", "pi_minus", "z_hi_n", "z_lo_n")


@dataclass(frozen=True)
class StaticsEntry:
    scenario: int
    member_id: str
    rn_zone: PriceZone
    ri_zone: BenchmarkZone
    delta: float
    sign: int
    epsilon: float


@dataclass(frozen=True)
class StaticsReport:
    parameter: str
    entries: tuple


def _perturbed(community, tariff, parameter, epsilon):
    if parameter == "pi_plus":
        return community, NemTariff(tariff.pi_plus + epsilon, tariff.pi_minus)
    if parameter == "pi_minus":
        if tariff.pi_minus + epsilon > tariff.pi_plus:
            return None
        return community, NemTariff(tariff.pi_plus, tariff.pi_minus + epsilon)
    if parameter == "z_hi_n":
        return (
            Community(community.members, community.z_lo_n,
                      community.z_hi_n + epsilon),
            tariff,
        )
    if parameter == "z_lo_n":
        lifted = community.z_lo_n + epsilon
        if lifted > 0 or lifted > math.fsum(m.z_lo for m in community.members):
            return None
        return Community(community.members, lifted, community.z_hi_n), tariff
    raise UsageError(
        f"parameter must be one of {PERTURBABLE_PARAMETERS}, got {parameter!r}"
    )


def _member_gains(community, tariff, scenario, tolerance):
    outcome = community_respond(community, tariff, scenario, tolerance)
    gains = {}
    ri_zones = {}
    for member, r_i in zip(community.members, scenario):
        bench = benchmark_respond(member, r_i, tariff, tolerance)
        gains[member.member_id] = (
            outcome.per_member[member.member_id].surplus - bench.surplus
        )
        ri_zones[member.member_id] = classify_zone(bench.deltas, r_i)
    return outcome.schedule.zone, ri_zones, gains


def comparative_statics(
    community: Community,
    tariff: NemTariff,
    scenarios: Sequence[Sequence[float]],
    parameter: str,
    epsilon: float = 1e-4,
    tolerance: float = DEFAULT_TOLERANCE,
) -> StaticsReport:
    """Finite-difference response of each member's community value to one
    exogenous parameter, classified by (aggregate zone, member zone) cell.

    The step shrinks (up to 10 halvings) until no scenario changes zone
    under the perturbation; if a scenario straddles a threshold even then,
    the call is rejected.  Differences within 1e-8 * step count as zero.
    """
    if parameter not in PERTURBABLE_PARAMETERS:
        raise UsageError(
            f"parameter must be one of {PERTURBABLE_PARAMETERS}, got {parameter!r}"
        )
    if not epsilon > 0:
        raise UsageError(f"epsilon must be > 0, got {epsilon}")
    if not scenarios:
        raise UsageError("need at least one renewable scenario")

    entries = []
    for index, scenario in enumerate(scenarios):
        scenario = tuple(float(x) for x in scenario)
        rn_zone, ri_zones, base = _member_gains(
            community, tariff, scenario, tolerance
        )
        step = epsilon
        for _ in range(11):
            bumped = _perturbed(community, tariff, parameter, step)
            if bumped is not None:
                new_zone, new_ri, shifted = _member_gains(
                    bumped[0], bumped[1], scenario, tolerance
                )
                if new_zone is rn_zone and new_ri == ri_zones:
                    break
            step /= 2
        else:
            raise UsageError(
                f"scenario {index} crosses a pricing threshold for every "
                f"tried step of {parameter} down to {step * 2}"
            )
        cutoff = 1e-8 * step
        for member_id, gain in base.items():
            delta = shifted[member_id] - gain
            sign = 0 if abs(delta) <= cutoff else (1 if delta > 0 else -1)
            entries.append(
                StaticsEntry(
                    scenario=index,
                    member_id=member_id,
                    rn_zone=rn_zone,
                    ri_zone=ri_zones[member_id],
                    delta=delta,
                    sign=sign,
                    epsilon=step,
                )
            )
    return StaticsReport(parameter=parameter, entries=tuple(entries))


def brute_force_welfare(
    community: Community,
    tariff: NemTariff,
    r_n: float,
    step: float,
) -> float:
    """Best welfare over an exhaustive consumption lattice.

    Independent oracle for the equilibrium-optimality claim: enumerates
    every per-device consumption on a uniform lattice (plus the exact
    envelope-pinned and balanced totals), keeps the aggregate meter inside
    the envelopes, and bills the total at the metered rate.  Device counts
    above four or steps above 1e-2 kWh are refused.
    """
    devices = [dev for m in community.members for dev in m.bundle.devices]
    if len(devices) > 4:
        raise UsageError(
            f"lattice search limited to 4 devices, got {len(devices)}"
        )
    if not 0 < step <= 1e-2:
        raise UsageError(f"step must be in (0, 1e-2], got {step}")
    if not math.isfinite(r_n) or r_n < 0:
        raise UsageError(f"aggregate renewables must be >= 0, got {r_n}")

    def curve(dev, grid):
        if isinstance(dev, DeviceUtility):
            sat = dev.alpha / dev.beta
            capped = np.minimum(grid, sat)
            return dev.alpha * capped - 0.5 * dev.beta * capped * capped
        return np.array([dev.value(x) for x in grid])

    def device_grid(dev, anchor):
        span = dev.d_hi - dev.d_lo
        m = int(math.floor(span / step + 1e-9))
        if anchor == "lo":
            return dev.d_lo + step * np.arange(m + 1)
        return dev.d_hi - step * np.arange(m, -1, -1)

    lo_t = r_n + community.z_lo_n
    hi_t = r_n + community.z_hi_n

    def search(anchor):
        # Max-plus fold over per-device grids sharing one step, so lattice
        # totals index directly into the running value array.
        values = np.zeros(1)
        base = 0.0
        head = values
        head_base = base
        for dev in devices:
            grid = device_grid(dev, anchor)
            gains = curve(dev, grid)
            head, head_base = values, base
            merged = np.full(len(values) + len(grid) - 1, -np.inf)
            for j, gain in enumerate(gains):
                np.maximum(
                    merged[j : j + len(values)], values + gain,
                    out=merged[j : j + len(values)],
                )
            values = merged
            base += float(grid[0])

        totals = base + step * np.arange(len(values))
        feasible = (totals >= lo_t - 1e-12) & (totals <= hi_t + 1e-12)
        best = -math.inf
        if feasible.any():
            z = totals[feasible] - r_n
            pay = np.where(z >= 0, tariff.pi_plus * z, tariff.pi_minus * z)
            best = float(np.max(values[feasible] - pay))

        # The optimum often pins the meter exactly on an envelope or on
        # zero; those totals rarely sit on the lattice, so evaluate them
        # exactly with the last device absorbing the remainder.
        last = devices[-1]
        head_totals = head_base + step * np.arange(len(head))
        for total in (lo_t, r_n, hi_t):
            if not lo_t - 1e-12 <= total <= hi_t + 1e-12:
                continue
            rest = total - head_totals
            ok = (rest >= last.d_lo - 1e-12) & (rest <= last.d_hi + 1e-12)
            if not ok.any():
                continue
            gains = curve(last, np.clip(rest[ok], last.d_lo, last.d_hi))
            z = total - r_n
            pay = tariff.pi_plus * z if z >= 0 else tariff.pi_minus * z
            best = max(best, float(np.max(head[ok] + gains)) - pay)
        return best

    # Anchoring the lattice at both ends makes the exact floor and ceiling
    # corners reachable whatever the span/step remainder.
    best = max(search("lo"), search("hi"))
    if best == -math.inf:
        raise UsageError(
            f"no lattice consumption keeps the meter inside "
            f"[{community.z_lo_n}, {community.z_hi_n}] at r_n={r_n}"
        )
    return best

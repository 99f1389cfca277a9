"""Randomised community instances honouring every model assumption.

Property suites and the CLI verification mode draw instances from here.
Randomness is counter-based (Philox keyed on (seed, index)), so instance
index 17 of seed 42 is the same object on every machine and every run, and
failures replay from the (seed, index) pair alone.

Each member gets one "anchor" device whose demand is strictly interior at
both tariff rates; this keeps the aggregate demand curve strictly
decreasing where the clearing equations are solved, so zone boundaries stay
numerically crisp.  Renewable scenarios are targeted per price zone and the
realised zone of every stored scenario is verified, making the coverage
report trustworthy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .benchmark import Member
from .errors import UsageError
from .pricing import Community, PriceZone, compute_sigmas, price_policy
from .tariff import NemTariff
from .utility import DeviceUtility, UtilityBundle

ZONE_ORDER = (
    PriceZone.CHI_PLUS,
    PriceZone.PI_PLUS,
    PriceZone.CHI_Z,
    PriceZone.PI_MINUS,
    PriceZone.CHI_MINUS,
)


@dataclass(frozen=True)
class InstanceSpec:
    """Knobs for one family of random instances."""

    n_members: int
    k_devices: int
    alpha_range: tuple
    beta_range: tuple
    oe_scale: float
    aggregation_slack: float
    tariff_range: tuple
    seed: int
    n_scenarios: int = 8

    def __post_init__(self) -> None:
        if self.n_members < 1:
            raise UsageError(f"need n_members >= 1, got {self.n_members}")
        if self.k_devices < 1:
            raise UsageError(f"need k_devices >= 1, got {self.k_devices}")
        if self.n_scenarios < 1:
            raise UsageError(f"need n_scenarios >= 1, got {self.n_scenarios}")
        for name in ("alpha_range", "beta_range", "tariff_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo < hi):
                raise UsageError(f"{name} must satisfy 0 <= lo < hi, got ({lo}, {hi})")
        if self.beta_range[0] <= 0:
            raise UsageError("beta_range must be strictly positive")
        if self.oe_scale <= 0:
            raise UsageError(f"oe_scale must be > 0, got {self.oe_scale}")
        if not 0 <= self.aggregation_slack <= 1:
            raise UsageError(
                f"aggregation_slack must lie in [0, 1], got {self.aggregation_slack}"
            )
        if self.alpha_range[1] <= self.tariff_range[1]:
            raise UsageError(
                "alpha_range must reach above tariff_range so demand can "
                "respond on both sides of the retail rate"
            )


@dataclass(frozen=True)
class GeneratedInstance:
    community: Community
    tariff: NemTariff
    scenarios: tuple
    zone_coverage: Mapping[PriceZone, int]


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), index]))


def _draw_member(rng, spec, tariff, i) -> Member:
    a_lo, a_hi = spec.alpha_range
    b_lo, b_hi = spec.beta_range
    devices = []
    # Anchor device: strictly interior demand at both rates.
    alpha = rng.uniform(max(a_lo, tariff.pi_plus) + 0.05 * (a_hi - tariff.pi_plus), a_hi)
    beta = rng.uniform(b_lo, b_hi)
    at_buy = (alpha - tariff.pi_plus) / beta
    at_sell = (alpha - tariff.pi_minus) / beta
    devices.append(
        DeviceUtility(
            alpha=alpha,
            beta=beta,
            d_lo=rng.uniform(0.0, 0.6) * at_buy,
            d_hi=at_sell * rng.uniform(1.05, 1.4),
        )
    )
    for _ in range(spec.k_devices - 1):
        d_lo = rng.uniform(0.0, 0.2)
        devices.append(
            DeviceUtility(
                alpha=rng.uniform(a_lo, a_hi),
                beta=rng.uniform(b_lo, b_hi),
                d_lo=d_lo,
                d_hi=d_lo + rng.uniform(0.2, 1.0),
            )
        )
    return Member(
        member_id=f"m{i}",
        bundle=UtilityBundle(tuple(devices)),
        z_lo=-spec.oe_scale * rng.uniform(0.05, 1.0),
        z_hi=spec.oe_scale * rng.uniform(0.05, 1.0),
    )


def _split_renewables(rng, r_n, lows, highs) -> tuple:
    """Random split of r_n across members respecting per-member bounds."""
    r = np.array(lows, dtype=float)
    remaining = r_n - r.sum()
    room = np.array(highs, dtype=float) - r
    for _ in range(4):
        if remaining <= 1e-15:
            break
        open_idx = room > 1e-15
        if not open_idx.any():
            break
        weights = rng.random(len(r)) * open_idx
        total = weights.sum()
        if total <= 0:
            weights = open_idx.astype(float)
            total = weights.sum()
        add = np.minimum(room, remaining * weights / total)
        r += add
        room -= add
        remaining -= add.sum()
    if remaining > 1e-12:
        # Greedy top-up; feasible because r_n <= sum(highs).
        for j in np.argsort(-room):
            take = min(room[j], remaining)
            r[j] += take
            remaining -= take
            if remaining <= 1e-15:
                break
    return tuple(float(x) for x in r)


def generate(spec: InstanceSpec, index: int = 0) -> GeneratedInstance:
    """Instance number `index` of the family keyed by spec.seed."""
    rng = _rng(spec.seed, index)
    t_lo, t_hi = spec.tariff_range
    rates = sorted(rng.uniform(t_lo, t_hi, size=2))
    tariff = NemTariff(pi_plus=float(rates[1]), pi_minus=float(rates[0]))

    members = tuple(
        _draw_member(rng, spec, tariff, i) for i in range(spec.n_members)
    )
    grow = 1.0 + spec.aggregation_slack
    community = Community(
        members=members,
        z_lo_n=grow * math.fsum(m.z_lo for m in members),
        z_hi_n=grow * math.fsum(m.z_hi for m in members),
    )

    # Cap at demand-at-price-zero, not the raw box ceiling: past satiation
    # the export-pinned clearing equations have no non-negative price.
    lows = [max(0.0, m.bundle.demand_floor() - m.z_hi) for m in members]
    highs = [m.bundle.total_demand(0.0) - m.z_lo for m in members]
    r_min, r_max = math.fsum(lows), math.fsum(highs)
    s1, s2, s3, s4 = compute_sigmas(community, tariff)
    absorb_cap = community.total_demand(0.0) - community.z_lo_n

    margin = 1e-7 * max(1.0, s4)
    windows = {
        PriceZone.CHI_PLUS: (r_min, s1),
        PriceZone.PI_PLUS: (s1 + margin, s2 - margin),
        PriceZone.CHI_Z: (s2, s3),
        PriceZone.PI_MINUS: (s3 + margin, s4 - margin),
        PriceZone.CHI_MINUS: (s4, min(r_max, absorb_cap - margin)),
    }

    def clip_window(zone):
        lo, hi = windows[zone]
        lo, hi = max(lo, r_min), min(hi, r_max)
        return (lo, hi) if hi >= lo else None

    feasible = [z for z in ZONE_ORDER if clip_window(z)]
    targets = list(feasible)
    while len(targets) < spec.n_scenarios:
        targets.append(feasible[int(rng.integers(len(feasible)))])

    scenarios = []
    coverage = {}
    for zone in targets:
        lo, hi = clip_window(zone)
        r_n = float(rng.uniform(lo, hi)) if hi > lo else lo
        scenario = _split_renewables(rng, r_n, lows, highs)
        realized = price_policy(community, tariff, math.fsum(scenario)).zone
        scenarios.append(scenario)
        coverage[realized] = coverage.get(realized, 0) + 1

    return GeneratedInstance(
        community=community,
        tariff=tariff,
        scenarios=tuple(scenarios),
        zone_coverage=coverage,
    )

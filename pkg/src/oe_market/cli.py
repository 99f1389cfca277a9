"""Batch driver: time-series simulation, randomized verification, comparison.

Exit codes: 0 success, 1 usage/config error, 2 verification failure,
3 runtime/solver error.  The OE_MARKET_LOG environment variable selects the
log level (DEBUG, INFO, WARNING, ...).  All emitted files are deterministic
functions of the inputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .benchmark import benchmark_respond
from .community import (
    IDENTITY_TOLERANCE,
    centralized_welfare,
    community_respond,
)
from .dnem import dnem_member_respond, dnem_schedule
from .errors import ConfigError, MarketError, SolverError, UsageError
from .ingest import (
    CommunityConfig,
    ScenarioSeries,
    SolverSettings,
    load_config,
    load_series,
)
from .pricing import PriceZone, compute_sigmas, member_payment, price_policy
from .random_instances import ZONE_ORDER, InstanceSpec, generate

log = logging.getLogger("oe_market")

HIST_BUCKETS = 40

DEFAULT_VERIFY_SPEC = dict(
    n_members=4,
    k_devices=2,
    alpha_range=(0.8, 3.0),
    beta_range=(0.5, 2.0),
    oe_scale=0.6,
    aggregation_slack=0.3,
    tariff_range=(0.05, 1.2),
    n_scenarios=6,
)


@dataclass(frozen=True)
class IntervalRecord:
    timestamp: str
    r_n: float
    zone: PriceZone
    price: float
    z_n: float
    total_reward: float


@dataclass(frozen=True)
class MemberSummary:
    member_id: str
    payment: float
    surplus: float
    benchmark_surplus: float
    voc: float
    volumetric: float
    fixed: float

    @property
    def volumetric_to_fixed(self) -> Optional[float]:
        if self.fixed == 0.0:
            return None
        return abs(self.volumetric) / abs(self.fixed)


@dataclass(frozen=True)
class RunReport:
    intervals: tuple
    members: tuple
    zone_counts: Mapping[PriceZone, int]
    neutrality_worst: float
    rationality_worst: float


def run_simulation(config: CommunityConfig, series: ScenarioSeries) -> RunReport:
    """One pricing/response cycle per interval of the series."""
    community = config.community
    tol = config.solver.tolerance
    records = []
    zone_counts = {zone: 0 for zone in ZONE_ORDER}
    pay = {mid: 0.0 for mid in community.member_ids}
    vol = {mid: 0.0 for mid in community.member_ids}
    fix = {mid: 0.0 for mid in community.member_ids}
    sur = {mid: 0.0 for mid in community.member_ids}
    bench = {mid: 0.0 for mid in community.member_ids}
    neutrality_worst = 0.0
    rationality_worst = math.inf

    for i, ts in enumerate(series.timestamps):
        tariff = series.tariffs[i]
        r = tuple(series.per_member_r[mid][i] for mid in community.member_ids)
        try:
            outcome = community_respond(community, tariff, r, tol)
            residual = math.fsum(
                out.payment for out in outcome.per_member.values()
            ) - tariff.payment(outcome.z_n)
            if abs(residual) > IDENTITY_TOLERANCE:
                raise SolverError(
                    f"payment conservation off by {residual} at interval {i}"
                )
            for member, r_i in zip(community.members, r):
                mid = member.member_id
                out = outcome.per_member[mid]
                b = benchmark_respond(member, r_i, tariff, tol)
                pay[mid] += out.payment
                vol[mid] += outcome.schedule.price * out.z
                fix[mid] += outcome.rewards.per_member[mid]
                sur[mid] += out.surplus
                bench[mid] += b.surplus
                rationality_worst = min(
                    rationality_worst, out.surplus - b.surplus
                )
        except MarketError as exc:
            raise SolverError(
                f"interval {i} ({ts.isoformat()}): {exc}"
            ) from exc
        neutrality_worst = max(neutrality_worst, abs(residual))
        zone_counts[outcome.schedule.zone] += 1
        records.append(
            IntervalRecord(
                timestamp=ts.isoformat(),
                r_n=outcome.schedule.r_n,
                zone=outcome.schedule.zone,
                price=outcome.schedule.price,
                z_n=outcome.z_n,
                total_reward=outcome.rewards.total,
            )
        )

    members = tuple(
        MemberSummary(
            member_id=mid,
            payment=pay[mid],
            surplus=sur[mid],
            benchmark_surplus=bench[mid],
            voc=sur[mid] - bench[mid],
            volumetric=vol[mid],
            fixed=fix[mid],
        )
        for mid in community.member_ids
    )
    return RunReport(
        intervals=tuple(records),
        members=members,
        zone_counts=zone_counts,
        neutrality_worst=neutrality_worst,
        rationality_worst=rationality_worst,
    )


def _histogram(values, buckets=HIST_BUCKETS):
    lo, hi = min(values), max(values)
    if hi == lo:
        return [(lo, hi, len(values))]
    width = (hi - lo) / buckets
    counts = [0] * buckets
    for v in values:
        slot = min(int((v - lo) / width), buckets - 1)
        counts[slot] += 1
    return [
        (lo + j * width, lo + (j + 1) * width, counts[j]) for j in range(buckets)
    ]


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(value) -> str:
    if isinstance(value, PriceZone):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def simulate_command(args) -> int:
    config = _apply_tolerance(load_config(args.config), args.tolerance)
    series = load_series(args.series, config)
    report = run_simulation(config, series)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "records.csv",
        ["timestamp", "r_n_kwh", "zone", "price", "z_n_kwh", "total_reward"],
        [
            (r.timestamp, r.r_n, r.zone, r.price, r.z_n, r.total_reward)
            for r in report.intervals
        ],
    )
    _write_csv(
        out / "members.csv",
        [
            "member_id", "payment", "surplus", "benchmark_surplus", "voc",
            "volumetric", "fixed_rewards", "volumetric_to_fixed",
        ],
        [
            (
                m.member_id, m.payment, m.surplus, m.benchmark_surplus,
                m.voc, m.volumetric, m.fixed, m.volumetric_to_fixed,
            )
            for m in report.members
        ],
    )
    _write_csv(
        out / "price_hist.csv",
        ["bucket_lo", "bucket_hi", "count"],
        _histogram([r.price for r in report.intervals]),
    )
    _write_csv(
        out / "z_n_hist.csv",
        ["bucket_lo", "bucket_hi", "count"],
        _histogram([r.z_n for r in report.intervals]),
    )

    lines = [f"intervals = {len(report.intervals)}"]
    for zone in ZONE_ORDER:
        lines.append(f"zone_{zone.value} = {report.zone_counts[zone]}")
    lines.append(f"neutrality_worst_residual = {report.neutrality_worst!r}")
    lines.append(f"rationality_worst_margin = {report.rationality_worst!r}")
    lines.append(
        f"total_rewards = {math.fsum(m.fixed for m in report.members)!r}"
    )
    lines.append(
        f"total_payments = {math.fsum(m.payment for m in report.members)!r}"
    )
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"simulated {len(report.intervals)} intervals -> {out}")
    return 0


def _check(violations, seed, index, scenario, name, ok, detail) -> None:
    if not ok:
        # Keep the detail cell comma-free; rows stay one-line CSV records.
        violations.append(
            (seed, index, scenario, name, repr(detail).replace(",", ";"))
        )


def run_verification(
    spec: InstanceSpec,
    iterations: int,
    tolerance: float,
    inject_fault: Optional[str] = None,
) -> list:
    """Randomized invariant sweep; returns replayable violation rows."""
    violations = []
    for index in range(iterations):
        inst = generate(spec, index)
        community, tariff = inst.community, inst.tariff
        sigmas = compute_sigmas(community, tariff)

        # Price continuity at the four thresholds.
        for sigma, rate in zip(sigmas, (tariff.pi_plus, tariff.pi_plus,
                                        tariff.pi_minus, tariff.pi_minus)):
            if sigma < 0:
                continue
            price = price_policy(community, tariff, sigma, tolerance).price
            _check(
                violations, spec.seed, index, -1, "threshold_continuity",
                abs(price - rate) <= 1e-8, price - rate,
            )

        for s_idx, scenario in enumerate(inst.scenarios):
            outcome = community_respond(community, tariff, scenario, tolerance)
            schedule = outcome.schedule
            if inject_fault == "no_rewards":
                zero = {mid: 0.0 for mid in community.member_ids}
                rewards = type(outcome.rewards)(per_member=zero, total=0.0)
                payments = {
                    mid: member_payment(schedule, rewards, mid, out.z)
                    for mid, out in outcome.per_member.items()
                }
            else:
                payments = {
                    mid: out.payment for mid, out in outcome.per_member.items()
                }

            residual = math.fsum(payments.values()) - tariff.payment(outcome.z_n)
            _check(
                violations, spec.seed, index, s_idx, "profit_neutrality",
                abs(residual) <= IDENTITY_TOLERANCE, residual,
            )

            lo, hi = {
                PriceZone.CHI_PLUS: (tariff.pi_plus, math.inf),
                PriceZone.PI_PLUS: (tariff.pi_plus, tariff.pi_plus),
                PriceZone.CHI_Z: (tariff.pi_minus, tariff.pi_plus),
                PriceZone.PI_MINUS: (tariff.pi_minus, tariff.pi_minus),
                PriceZone.CHI_MINUS: (0.0, tariff.pi_minus),
            }[schedule.zone]
            _check(
                violations, spec.seed, index, s_idx, "price_order",
                lo - 1e-12 <= schedule.price <= hi + 1e-12, schedule.price,
            )

            expected_z = {
                PriceZone.CHI_PLUS: community.z_hi_n,
                PriceZone.CHI_Z: 0.0,
                PriceZone.CHI_MINUS: community.z_lo_n,
            }.get(schedule.zone)
            if expected_z is not None:
                _check(
                    violations, spec.seed, index, s_idx, "pinned_net_consumption",
                    abs(outcome.z_n - expected_z) <= 1e-8,
                    outcome.z_n - expected_z,
                )

            central = centralized_welfare(community, tariff, schedule.r_n, tolerance)
            _check(
                violations, spec.seed, index, s_idx, "welfare_match",
                abs(outcome.welfare - central.welfare) <= 1e-8,
                outcome.welfare - central.welfare,
            )

            dnem = dnem_schedule(community, tariff, scenario, tolerance)
            consuming = schedule.r_n < sigmas[1] and schedule.r_n < dnem.theta1
            producing = schedule.r_n > sigmas[2] and schedule.r_n > dnem.theta2
            for member, r_i in zip(community.members, scenario):
                bench = benchmark_respond(member, r_i, tariff, tolerance)
                gain = outcome.per_member[member.member_id].surplus - bench.surplus
                _check(
                    violations, spec.seed, index, s_idx, "individual_rationality",
                    gain >= -IDENTITY_TOLERANCE, gain,
                )
                if consuming or producing:
                    mid_resp = dnem_member_respond(member, r_i, dnem, tolerance)
                    _check(
                        violations, spec.seed, index, s_idx, "surplus_chain",
                        outcome.per_member[member.member_id].surplus
                        >= mid_resp.surplus - IDENTITY_TOLERANCE
                        and mid_resp.surplus >= bench.surplus - IDENTITY_TOLERANCE,
                        (outcome.per_member[member.member_id].surplus,
                         mid_resp.surplus, bench.surplus),
                    )
    return violations


def verify_command(args) -> int:
    overrides = {}
    if args.spec is not None:
        with open(args.spec, "r", encoding="utf-8") as handle:
            try:
                overrides = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.spec}: {exc}") from exc
        unknown = set(overrides) - set(DEFAULT_VERIFY_SPEC) - {"seed"}
        if unknown:
            raise ConfigError(f"{args.spec}: unknown keys {sorted(unknown)}")
    params = dict(DEFAULT_VERIFY_SPEC)
    params.update(overrides)
    params["seed"] = args.seed
    for key in ("alpha_range", "beta_range", "tariff_range"):
        params[key] = tuple(params[key])
    spec = InstanceSpec(**params)
    if args.iterations < 1:
        raise UsageError(f"need iterations >= 1, got {args.iterations}")

    tolerance = args.tolerance if args.tolerance is not None else 1e-10
    violations = run_verification(
        spec, args.iterations, tolerance, args.inject_fault
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "violations.csv",
        ["seed", "index", "scenario", "check", "detail"],
        violations,
    )
    print(
        f"verified {args.iterations} instances (seed={args.seed}): "
        f"{len(violations)} violations"
    )
    return 0 if not violations else 2


def run_comparison(config: CommunityConfig, series: ScenarioSeries):
    """Per-member surpluses under community, member-level, and standalone rules."""
    community = config.community
    tol = config.solver.tolerance
    totals = {
        mid: {"community": 0.0, "member_level": 0.0, "standalone": 0.0}
        for mid in community.member_ids
    }
    qualifying = 0
    violations = []
    for i in range(len(series)):
        tariff = series.tariffs[i]
        r = tuple(series.per_member_r[mid][i] for mid in community.member_ids)
        outcome = community_respond(community, tariff, r, tol)
        dnem = dnem_schedule(community, tariff, r, tol)
        sigmas = outcome.schedule.sigmas
        r_n = outcome.schedule.r_n
        ordered_zone = (r_n < sigmas[1] and r_n < dnem.theta1) or (
            r_n > sigmas[2] and r_n > dnem.theta2
        )
        if ordered_zone:
            qualifying += 1
        for member, r_i in zip(community.members, r):
            mid = member.member_id
            a = outcome.per_member[mid].surplus
            b = dnem_member_respond(member, r_i, dnem, tol).surplus
            c = benchmark_respond(member, r_i, tariff, tol).surplus
            totals[mid]["community"] += a
            totals[mid]["member_level"] += b
            totals[mid]["standalone"] += c
            if ordered_zone and not (
                a >= b - IDENTITY_TOLERANCE and b >= c - IDENTITY_TOLERANCE
            ):
                violations.append((i, mid, a, b, c))
    return totals, qualifying, violations


def _apply_tolerance(config: CommunityConfig, tolerance) -> CommunityConfig:
    if tolerance is None:
        return config
    return CommunityConfig(
        community=config.community,
        tariff=config.tariff,
        solver=SolverSettings(
            tolerance=tolerance,
            max_iterations=config.solver.max_iterations,
        ),
    )


def compare_command(args) -> int:
    config = _apply_tolerance(load_config(args.config), args.tolerance)
    series = load_series(args.series, config)
    totals, qualifying, violations = run_comparison(config, series)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "compare_members.csv",
        ["member_id", "surplus_community", "surplus_member_level",
         "surplus_standalone"],
        [
            (mid, t["community"], t["member_level"], t["standalone"])
            for mid, t in totals.items()
        ],
    )
    _write_csv(
        out / "compare_violations.csv",
        ["interval", "member_id", "surplus_community", "surplus_member_level",
         "surplus_standalone"],
        violations,
    )
    print(
        f"compared {len(series)} intervals ({qualifying} in ordered zones): "
        f"{len(violations)} ordering violations"
    )
    return 0 if not violations else 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oe-market", description=__doc__)
    parser.add_argument(
        "--tolerance", type=float, default=None,
        help="override the balance-solver residual tolerance (default 1e-10)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a time-series simulation")
    sim.add_argument("--config", required=True)
    sim.add_argument("--series", required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=simulate_command)

    ver = sub.add_parser("verify", help="run randomized invariant suites")
    ver.add_argument("--seed", type=int, required=True)
    ver.add_argument("--iterations", type=int, required=True)
    ver.add_argument("--spec", default=None,
                     help="JSON file overriding the instance family")
    ver.add_argument("--out", default=".")
    ver.add_argument("--inject-fault", choices=["no_rewards"], default=None,
                     help="test hook: disable a mechanism piece on purpose")
    ver.set_defaults(func=verify_command)

    cmp_ = sub.add_parser("compare", help="three-way surplus comparison")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--series", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.set_defaults(func=compare_command)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    wanted = os.environ.get("OE_MARKET_LOG", "WARNING").upper()
    known = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"}
    logging.basicConfig(
        level=wanted if wanted in known else "WARNING",
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

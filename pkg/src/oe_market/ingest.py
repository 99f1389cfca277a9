"""Config and time-series loading for the batch CLI.

The community config is a TOML document with [community], [tariff],
[solver], and one [members.<id>] table per member.  Renewable series arrive
as CSV with a mandatory `timestamp,member_id,r_kwh` header and ISO-8601
timestamps.  Everything is validated at load time and nothing is imputed:
a missing (timestamp, member) cell is an error, because a silently dropped
kilowatt-hour would shift every threshold comparison downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .benchmark import Member
from .errors import ConfigError
from .pricing import Community
from .rootfind import DEFAULT_TOLERANCE, MAX_ITERATIONS
from .tariff import NemTariff
from .utility import DeviceUtility, UtilityBundle

SERIES_HEADER = ["timestamp", "member_id", "r_kwh"]


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = MAX_ITERATIONS


@dataclass(frozen=True)
class TariffWindows:
    """Two-level time-of-use buy rate plus a flat sell rate.

    The buy rate is `buy_on` inside any [start, end) hour window on an
    on-peak weekday and `buy_off` everywhere else.
    """

    buy_on: float
    buy_off: float
    sell: float
    on_hours: tuple
    on_weekdays: tuple

    def tariff_for(self, ts: datetime) -> NemTariff:
        on = ts.weekday() in self.on_weekdays and any(
            start <= ts.hour < end for start, end in self.on_hours
        )
        return NemTariff(self.buy_on if on else self.buy_off, self.sell)


@dataclass(frozen=True)
class CommunityConfig:
    community: Community
    tariff: TariffWindows
    solver: SolverSettings


@dataclass(frozen=True)
class ScenarioSeries:
    interval_minutes: int
    timestamps: tuple
    per_member_r: Mapping[str, tuple]
    tariffs: tuple

    def __len__(self) -> int:
        return len(self.timestamps)


def _need(table, key, path, kind):
    if key not in table:
        raise ConfigError(f"{path}.{key}: required key missing")
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {value!r}")
    return value


def _no_extras(table, allowed, path):
    extras = set(table) - set(allowed)
    if extras:
        raise ConfigError(f"{path}: unknown keys {sorted(extras)}")


def _build_tariff(table) -> TariffWindows:
    path = "tariff"
    _no_extras(table, {"buy_on", "buy_off", "sell", "on_hours", "on_weekdays"}, path)
    buy_on = _need(table, "buy_on", path, float)
    buy_off = float(table.get("buy_off", buy_on))
    sell = _need(table, "sell", path, float)
    for name, rate in (("buy_on", buy_on), ("buy_off", buy_off), ("sell", sell)):
        if not math.isfinite(rate) or rate < 0:
            raise ConfigError(f"{path}.{name}: rate must be finite and >= 0")
    if sell > min(buy_on, buy_off):
        raise ConfigError(
            f"{path}.sell: sell rate {sell} must not exceed the buy rate "
            f"(buy_on={buy_on}, buy_off={buy_off}); need buy >= sell"
        )
    hours = table.get("on_hours", [])
    windows = []
    for i, win in enumerate(hours):
        if (
            not isinstance(win, list)
            or len(win) != 2
            or not all(isinstance(h, int) for h in win)
            or not 0 <= win[0] < win[1] <= 24
        ):
            raise ConfigError(
                f"{path}.on_hours[{i}]: expected [start, end) hours with "
                f"0 <= start < end <= 24, got {win!r}"
            )
        windows.append((win[0], win[1]))
    weekdays = table.get("on_weekdays", [0, 1, 2, 3, 4])
    if not all(isinstance(d, int) and 0 <= d <= 6 for d in weekdays):
        raise ConfigError(f"{path}.on_weekdays: expected weekday ints 0..6")
    return TariffWindows(
        buy_on=buy_on,
        buy_off=buy_off,
        sell=sell,
        on_hours=tuple(windows),
        on_weekdays=tuple(sorted(set(weekdays))),
    )


def _build_member(member_id, table) -> Member:
    path = f"members.{member_id}"
    _no_extras(table, {"import_limit_kwh", "export_limit_kwh", "devices"}, path)
    z_hi = _need(table, "import_limit_kwh", path, float)
    z_lo = _need(table, "export_limit_kwh", path, float)
    devices = table.get("devices")
    if not isinstance(devices, list) or not devices:
        raise ConfigError(f"{path}.devices: need a non-empty device list")
    built = []
    for i, dev in enumerate(devices):
        dev_path = f"{path}.devices[{i}]"
        if not isinstance(dev, dict):
            raise ConfigError(f"{dev_path}: expected a table")
        _no_extras(dev, {"alpha", "beta", "d_lo", "d_hi"}, dev_path)
        try:
            built.append(
                DeviceUtility(
                    alpha=_need(dev, "alpha", dev_path, float),
                    beta=_need(dev, "beta", dev_path, float),
                    d_lo=float(dev.get("d_lo", 0.0)),
                    d_hi=_need(dev, "d_hi", dev_path, float),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{dev_path}: {exc}") from exc
    try:
        return Member(
            member_id=member_id,
            bundle=UtilityBundle(tuple(built)),
            z_lo=z_lo,
            z_hi=z_hi,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> CommunityConfig:
    """Parse and validate a community config file."""
    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    _no_extras(doc, {"community", "tariff", "solver", "members"}, "config")
    for section in ("community", "tariff", "members"):
        if section not in doc:
            raise ConfigError(f"config: missing [{section}] section")

    _no_extras(doc["community"], {"import_limit_kwh", "export_limit_kwh"}, "community")
    z_hi_n = _need(doc["community"], "import_limit_kwh", "community", float)
    z_lo_n = _need(doc["community"], "export_limit_kwh", "community", float)

    tariff = _build_tariff(doc["tariff"])

    members_doc = doc["members"]
    if not isinstance(members_doc, dict) or not members_doc:
        raise ConfigError("members: need at least one [members.<id>] table")
    members = tuple(
        _build_member(member_id, members_doc[member_id])
        for member_id in members_doc
    )
    try:
        community = Community(members=members, z_lo_n=z_lo_n, z_hi_n=z_hi_n)
    except ValueError as exc:
        raise ConfigError(f"community: {exc}") from exc

    solver_doc = doc.get("solver", {})
    _no_extras(solver_doc, {"tolerance", "max_iterations"}, "solver")
    tolerance = float(solver_doc.get("tolerance", DEFAULT_TOLERANCE))
    iterations = solver_doc.get("max_iterations", MAX_ITERATIONS)
    if not 0 < tolerance < 1:
        raise ConfigError(f"solver.tolerance: must be in (0, 1), got {tolerance}")
    if not isinstance(iterations, int) or iterations < 10:
        raise ConfigError(f"solver.max_iterations: must be an int >= 10")
    solver = SolverSettings(tolerance=tolerance, max_iterations=iterations)

    return CommunityConfig(community=community, tariff=tariff, solver=solver)


def dump_config(config: CommunityConfig) -> str:
    """Serialise a config back to TOML; load_config(dump_config(c)) == c."""
    lines = ["[community]"]
    lines.append(f"import_limit_kwh = {config.community.z_hi_n!r}")
    lines.append(f"export_limit_kwh = {config.community.z_lo_n!r}")
    lines.append("")
    t = config.tariff
    lines.append("[tariff]")
    lines.append(f"buy_on = {t.buy_on!r}")
    lines.append(f"buy_off = {t.buy_off!r}")
    lines.append(f"sell = {t.sell!r}")
    lines.append(
        "on_hours = [%s]" % ", ".join(f"[{a}, {b}]" for a, b in t.on_hours)
    )
    lines.append("on_weekdays = [%s]" % ", ".join(str(d) for d in t.on_weekdays))
    lines.append("")
    lines.append("[solver]")
    lines.append(f"tolerance = {config.solver.tolerance!r}")
    lines.append(f"max_iterations = {config.solver.max_iterations}")
    for member in config.community.members:
        lines.append("")
        lines.append(f"[members.{member.member_id}]")
        lines.append(f"import_limit_kwh = {member.z_hi!r}")
        lines.append(f"export_limit_kwh = {member.z_lo!r}")
        devs = ", ".join(
            "{alpha = %r, beta = %r, d_lo = %r, d_hi = %r}"
            % (d.alpha, d.beta, d.d_lo, d.d_hi)
            for d in member.bundle.devices
        )
        lines.append(f"devices = [{devs}]")
    return "\n".join(lines) + "\n"


def save_config(config: CommunityConfig, path) -> None:
    Path(path).write_text(dump_config(config), encoding="utf-8")


def load_series(path, config: CommunityConfig) -> ScenarioSeries:
    """Load and pivot a renewable series, failing on any gap or duplicate."""
    known = set(config.community.member_ids)
    cells = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty series file") from None
        if [h.strip() for h in header] != SERIES_HEADER:
            raise ConfigError(
                f"{path}: header must be {','.join(SERIES_HEADER)}, got "
                f"{','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}:{line_no}: expected 3 columns")
            ts_raw, member_id, r_raw = (cell.strip() for cell in row)
            try:
                ts = datetime.fromisoformat(ts_raw)
            except ValueError:
                raise ConfigError(
                    f"{path}:{line_no}: bad ISO-8601 timestamp {ts_raw!r}"
                ) from None
            if member_id not in known:
                raise ConfigError(
                    f"{path}:{line_no}: unknown member_id {member_id!r}"
                )
            try:
                r = float(r_raw)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: bad r_kwh {r_raw!r}") from None
            if not math.isfinite(r) or r < 0:
                raise ConfigError(
                    f"{path}:{line_no}: r_kwh must be finite and >= 0, got {r}"
                )
            if (ts, member_id) in cells:
                raise ConfigError(
                    f"{path}:{line_no}: duplicate row for ({ts_raw}, {member_id})"
                )
            cells[(ts, member_id)] = r

    if not cells:
        raise ConfigError(f"{path}: series has no data rows")
    timestamps = tuple(sorted({ts for ts, _ in cells}))
    missing = [
        (ts, mid)
        for ts in timestamps
        for mid in sorted(known)
        if (ts, mid) not in cells
    ]
    if missing:
        ts, mid = missing[0]
        raise ConfigError(
            f"{path}: missing r_kwh for ({ts.isoformat()}, {mid}) "
            f"and {len(missing) - 1} more cells; no imputation is done"
        )

    if len(timestamps) > 1:
        deltas = {
            (b - a).total_seconds() for a, b in zip(timestamps, timestamps[1:])
        }
        if len(deltas) != 1:
            raise ConfigError(f"{path}: timestamps are not evenly spaced")
        interval = int(deltas.pop() // 60)
    else:
        interval = 15

    per_member = {
        mid: tuple(cells[(ts, mid)] for ts in timestamps)
        for mid in config.community.member_ids
    }
    tariffs = tuple(config.tariff.tariff_for(ts) for ts in timestamps)
    return ScenarioSeries(
        interval_minutes=interval,
        timestamps=timestamps,
        per_member_r=per_member,
        tariffs=tariffs,
    )

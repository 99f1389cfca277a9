"""Two-part pricing for energy communities under operating envelopes.

The library models a community of prosumers pooled behind one net-metered
revenue meter with regulator-imposed envelopes on aggregate net
consumption.  It announces a threshold-based dynamic price plus fixed
rewards, computes optimal member and standalone responses, and verifies
the mechanism's welfare and cost-causation guarantees.
"""

from .benchmark import (
    BenchmarkResponse,
    BenchmarkZone,
    Member,
    benchmark_deltas,
    benchmark_respond,
)
from .community import (
    AxiomReport,
    CommunityOutcome,
    StaticsReport,
    VocReport,
    brute_force_welfare,
    centralized_welfare,
    community_respond,
    comparative_statics,
    verify_axioms,
    voc,
)
from .dnem import DnemResponse, DnemSchedule, DnemZone, dnem_member_respond, dnem_schedule
from .errors import (
    ConfigError,
    FeasibilityError,
    MarketError,
    SolverError,
    UsageError,
)
from .ingest import (
    CommunityConfig,
    ScenarioSeries,
    SolverSettings,
    TariffWindows,
    dump_config,
    load_config,
    load_series,
    save_config,
)
from .pricing import (
    Community,
    PriceSchedule,
    PriceZone,
    RewardAllocation,
    compute_sigmas,
    fixed_rewards,
    member_payment,
    price_policy,
    solve_chi,
)
from .random_instances import GeneratedInstance, InstanceSpec, generate
from .rootfind import solve_balance
from .tariff import NemTariff
from .utility import DeviceUtility, UtilityBundle

__all__ = [
    "AxiomReport",
    "BenchmarkResponse",
    "BenchmarkZone",
    "Community",
    "CommunityConfig",
    "CommunityOutcome",
    "ConfigError",
    "DeviceUtility",
    "DnemResponse",
    "DnemSchedule",
    "DnemZone",
    "FeasibilityError",
    "GeneratedInstance",
    "InstanceSpec",
    "MarketError",
    "Member",
    "NemTariff",
    "PriceSchedule",
    "PriceZone",
    "RewardAllocation",
    "ScenarioSeries",
    "SolverError",
    "SolverSettings",
    "StaticsReport",
    "TariffWindows",
    "UsageError",
    "UtilityBundle",
    "VocReport",
    "benchmark_deltas",
    "benchmark_respond",
    "brute_force_welfare",
    "centralized_welfare",
    "community_respond",
    "comparative_statics",
    "compute_sigmas",
    "dnem_member_respond",
    "dnem_schedule",
    "dump_config",
    "fixed_rewards",
    "generate",
    "load_config",
    "load_series",
    "member_payment",
    "price_policy",
    "save_config",
    "solve_balance",
    "solve_chi",
    "verify_axioms",
    "voc",
]

import pytest
from hypothesis import HealthCheck, settings

from oe_market import Community, DeviceUtility, Member, NemTariff, UtilityBundle

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.filter_too_much],
)
settings.load_profile("ci")


def quad_member(member_id, z_lo=-0.2, z_hi=0.2, alpha=2.0, beta=1.0, d_hi=2.0):
    bundle = UtilityBundle((DeviceUtility(alpha=alpha, beta=beta, d_lo=0.0, d_hi=d_hi),))
    return Member(member_id=member_id, bundle=bundle, z_lo=z_lo, z_hi=z_hi)


@pytest.fixture
def tariff():
    return NemTariff(pi_plus=1.0, pi_minus=0.5)


@pytest.fixture
def pair_community():
    """Two identical quadratic members behind +-0.5 kWh aggregate envelopes."""
    return Community(
        members=(quad_member("a"), quad_member("b")),
        z_lo_n=-0.5,
        z_hi_n=0.5,
    )


@pytest.fixture
def standalone_member():
    return quad_member("solo", z_lo=-0.3, z_hi=0.2)

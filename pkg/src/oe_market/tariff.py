"""Net-energy-metering tariff: sign-dependent rate on net consumption.

Imports (z >= 0) are billed at the buy rate, exports at the sell rate.
The buy rate must not undercut the sell rate, which rules out risk-free
buy-low/sell-high arbitrage against the meter.  Fixed connection charges
are deliberately absent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class NemTariff:
    """Buy (retail) and sell (export) rates in $/kWh."""

    pi_plus: float
    pi_minus: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.pi_plus) and math.isfinite(self.pi_minus)):
            raise ValueError("rates must be finite")
        if not self.pi_plus >= self.pi_minus >= 0:
            raise ValueError(
                f"need pi_plus >= pi_minus >= 0, got pi_plus={self.pi_plus}, "
                f"pi_minus={self.pi_minus}"
            )

    def rate(self, z: float) -> float:
        """Applicable rate for net consumption z; z == 0 sits on the buy side."""
        if not math.isfinite(z):
            raise ValueError(f"net consumption must be finite, got {z}")
        return self.pi_plus if z >= 0 else self.pi_minus

    def payment(self, z: float) -> float:
        """Metered payment rate(z) * z; negative when exporting."""
        return self.rate(z) * z

"""Utility-of-consumption models.

A device values energy through a concave, non-decreasing utility curve.
The shipped concrete form is the capped quadratic

    value(d) = alpha*d - beta*d^2/2     for d <= alpha/beta
               alpha^2/(2*beta)         beyond,

whose marginal max(0, alpha - beta*d) is non-increasing, so its inverse
(the demand curve) is total in the price.  Every pricing and response
computation in the package reduces to evaluating these curves; anything
with the same three methods (``value``, ``marginal``, ``inverse_marginal``)
plus ``d_lo``/``d_hi`` bounds can stand in for a device in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class ConsumptionDevice(Protocol):
    """Anything with a concave value curve, bounds, and a demand curve."""

    d_lo: float
    d_hi: float

    def value(self, d: float) -> float: ...

    def marginal(self, d: float) -> float: ...

    def inverse_marginal(self, price: float) -> float: ...


@dataclass(frozen=True)
class DeviceUtility:
    """Capped quadratic utility for one flexible device.

    alpha is the marginal value of the first kWh ($/kWh), beta the decay of
    that marginal value ($/kWh per kWh).  Consumption is bounded to
    [d_lo, d_hi] kWh per interval.
    """

    alpha: float
    beta: float
    d_lo: float
    d_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= self.d_lo <= self.d_hi:
            raise ValueError(
                f"need 0 <= d_lo <= d_hi, got d_lo={self.d_lo}, d_hi={self.d_hi}"
            )

    def value(self, d: float) -> float:
        """Utility of consuming d kWh; constant past the satiation point."""
        sat = self.alpha / self.beta
        if d >= sat:
            return self.alpha * sat - 0.5 * self.beta * sat * sat
        return self.alpha * d - 0.5 * self.beta * d * d

    def marginal(self, d: float) -> float:
        return max(0.0, self.alpha - self.beta * d)

    def inverse_marginal(self, price: float) -> float:
        """Demand before bound-clipping; 0 once the price reaches alpha."""
        return max(0.0, (self.alpha - price) / self.beta)

    def clipped_demand(self, price: float) -> float:
        return min(self.d_hi, max(self.d_lo, self.inverse_marginal(price)))


@dataclass(frozen=True)
class UtilityBundle:
    """An ordered bundle of devices; bundle value is the sum of device values."""

    devices: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "devices", tuple(self.devices))
        if not self.devices:
            raise ValueError("bundle needs at least one device")
        # Quadratic bundles get vectorised demand sums; mixed bundles fall
        # back to per-device calls.  Single quadratic devices skip numpy
        # entirely: they dominate the balance-solver inner loop.
        if all(isinstance(dev, DeviceUtility) for dev in self.devices):
            object.__setattr__(
                self, "_params",
                tuple(
                    np.array([getattr(dev, name) for dev in self.devices])
                    for name in ("alpha", "beta", "d_lo", "d_hi")
                ),
            )
            single = self.devices[0] if len(self.devices) == 1 else None
            object.__setattr__(self, "_single", single)
        else:
            object.__setattr__(self, "_params", None)
            object.__setattr__(self, "_single", None)

    @property
    def size(self) -> int:
        return len(self.devices)

    def value(self, d: Sequence[float]) -> float:
        if len(d) != len(self.devices):
            raise ValueError(
                f"expected {len(self.devices)} consumptions, got {len(d)}"
            )
        for x in d:
            if not math.isfinite(x) or x < 0:
                raise ValueError(f"consumption must be finite and >= 0, got {x}")
        return float(sum(dev.value(x) for dev, x in zip(self.devices, d)))

    def clipped_demand(self, price: float) -> tuple:
        """Per-device surplus-maximising consumption at a uniform price."""
        if not math.isfinite(price) or price < 0:
            raise ValueError(f"price must be finite and >= 0, got {price}")
        if self._params is not None:
            alpha, beta, lo, hi = self._params
            return tuple(np.clip((alpha - price) / beta, lo, hi))
        return tuple(dev.clipped_demand(price) for dev in self.devices)

    def total_demand(self, price: float) -> float:
        """Sum of clipped demands; continuous and non-increasing in price."""
        if self._single is not None:
            dev = self._single
            raw = (dev.alpha - price) / dev.beta
            if raw < dev.d_lo:
                return dev.d_lo
            return raw if raw < dev.d_hi else dev.d_hi
        if self._params is not None:
            alpha, beta, lo, hi = self._params
            return float(np.clip((alpha - price) / beta, lo, hi).sum())
        return float(sum(dev.clipped_demand(price) for dev in self.devices))

    def max_marginal(self) -> float:
        """Price at which every device's clipped demand sits at its floor."""
        return float(max(dev.marginal(dev.d_lo) for dev in self.devices))

    def demand_floor(self) -> float:
        return float(sum(dev.d_lo for dev in self.devices))

    def demand_ceiling(self) -> float:
        return float(sum(dev.d_hi for dev in self.devices))

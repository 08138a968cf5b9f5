"""Channel, scissor, and modulation parameters with all unit conventions pinned.

Everything is expressed in shot-noise units (vacuum quadrature variance 1).
The transmitter-referred excess noise ``eps_tm`` is the canonical user input;
the receiver-referred figure ``eps_rec = T * eps_tm`` and the channel-input
figure ``eps = eps_rec / (1 - T)`` are derived, never entered directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_LOSS_DB_PER_KM = 0.2


@dataclass(frozen=True)
class ChannelParams:
    """Fibre link of given length and loss, with transmitter-referred excess noise."""

    length_km: float
    eps_tm: float = 0.0
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM

    def __post_init__(self) -> None:
        if not (self.length_km >= 0.0 and math.isfinite(self.length_km)):
            raise ValueError(f"length_km must be finite and >= 0, got {self.length_km}")
        if not (self.loss_db_per_km > 0.0):
            raise ValueError(f"loss_db_per_km must be > 0, got {self.loss_db_per_km}")
        if not (self.eps_tm >= 0.0):
            raise ValueError(f"eps_tm must be >= 0, got {self.eps_tm}")
        if self.transmittance >= 1.0 and self.eps_tm > 0.0:
            # eps = eps_rec / (1 - T) diverges; there is no lossless channel
            # with nonzero transmitter-referred excess noise in this model.
            raise ValueError("eps_tm > 0 is not representable at T = 1 (zero length)")

    @property
    def transmittance(self) -> float:
        """Power transmittance T = 10^(-loss * L / 10), in (0, 1]."""
        return 10.0 ** (-self.loss_db_per_km * self.length_km / 10.0)

    @property
    def eps_rec(self) -> float:
        """Excess noise referred to the receiver: eps_rec = T * eps_tm."""
        return self.transmittance * self.eps_tm

    @property
    def eps(self) -> float:
        """Excess noise referred to the channel input: eps = eps_rec / (1 - T)."""
        t = self.transmittance
        if t >= 1.0:
            return 0.0  # eps_tm is forced to 0 here by the constructor
        return self.eps_rec / (1.0 - t)

    @classmethod
    def from_transmittance(cls, transmittance: float, eps_tm: float = 0.0,
                           loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM) -> "ChannelParams":
        if not (0.0 < transmittance <= 1.0):
            raise ValueError(f"transmittance must be in (0, 1], got {transmittance}")
        length = -10.0 * math.log10(transmittance) / loss_db_per_km
        return cls(length_km=length, eps_tm=eps_tm, loss_db_per_km=loss_db_per_km)


@dataclass(frozen=True)
class QSParams:
    """Quantum scissor, parametrised by the single-photon splitter transmittance."""

    mu: float

    def __post_init__(self) -> None:
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"mu must be in (0, 1), got {self.mu}")

    @property
    def gain(self) -> float:
        """Amplification gain g = sqrt((1 - mu) / mu); g = 1 at mu = 1/2."""
        return math.sqrt((1.0 - self.mu) / self.mu)

    @classmethod
    def from_gain(cls, gain: float) -> "QSParams":
        if not (gain > 0.0 and math.isfinite(gain)):
            raise ValueError(f"gain must be finite and > 0, got {gain}")
        return cls(mu=1.0 / (1.0 + gain * gain))


@dataclass(frozen=True)
class ProtocolParams:
    """Gaussian modulation variance and reconciliation efficiency."""

    va: float
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not (self.va > 0.0 and math.isfinite(self.va)):
            raise ValueError(f"va must be finite and > 0, got {self.va}")
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")

    @property
    def v(self) -> float:
        """Variance of the modulated ensemble, V = V_A + 1."""
        return self.va + 1.0

    @property
    def delta(self) -> float:
        """Squeezing parameter of the statistically equivalent EPR source."""
        return math.sqrt((self.v + 1.0) / 2.0)

    @property
    def gamma(self) -> float:
        """Companion EPR parameter, gamma = sqrt(delta^2 - 1)."""
        return math.sqrt(self.delta ** 2 - 1.0)


@dataclass(frozen=True)
class NoiseFactors:
    """The three quadrature-noise figures used by the closed-form state expressions.

    f1 depends on channel noise alone, f2 folds in the thermal signal of a
    modulated ensemble, f3 is the EPR-picture analogue of f2.  All are >= 1/2,
    and f2 == f3 exactly when delta^2 = (va + 2) / 2.
    """

    f1: float
    f2: float
    f3: float


def noise_factors(chan: ChannelParams, va: float, delta: float) -> NoiseFactors:
    """Evaluate (F1, F2, F3) for a channel, modulation variance, and EPR parameter."""
    if va < 0.0:
        raise ValueError(f"va must be >= 0, got {va}")
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    t = chan.transmittance
    f1 = 0.5 + chan.eps_rec / 4.0
    f2 = 0.5 + t * (va + chan.eps_tm) / 4.0
    f3 = 0.5 + t * (2.0 * (delta * delta - 1.0) + chan.eps_tm) / 4.0
    return NoiseFactors(f1=f1, f2=f2, f3=f3)

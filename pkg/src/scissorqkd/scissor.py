"""Closed-form heralded output states and success probabilities of the scissor.

The scissor truncates its input to the span of the zero- and one-photon
states, so every post-selected output is a qubit.  The two detector click
patterns are physically equivalent up to a sign flip of the coherence that
Bob undoes in post-processing; this module always returns the corrected
state together with the *total* (both-pattern) success probability.

Exponentials are organised so that normalised state coefficients never
involve a ratio of underflowed numbers: the common decaying factor is
stripped analytically and only re-attached to raw probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ChannelParams, ProtocolParams, QSParams

_TRACE_TOL = 1e-12
_PSD_TOL = 1e-12


@dataclass(frozen=True)
class QubitState:
    """2x2 density operator on span{|0>, |1>}; rho10 is conjugate(rho01)."""

    rho00: float
    rho01: complex
    rho11: float

    def __post_init__(self) -> None:
        if abs(self.rho00 + self.rho11 - 1.0) > _TRACE_TOL:
            raise ValueError(f"trace {self.rho00 + self.rho11!r} differs from 1")
        if self.rho00 < -_PSD_TOL or self.rho11 < -_PSD_TOL:
            raise ValueError("negative population")
        if self.rho00 * self.rho11 - abs(self.rho01) ** 2 < -_PSD_TOL:
            raise ValueError("state is not positive semidefinite")

    @property
    def purity(self) -> float:
        return self.rho00 ** 2 + self.rho11 ** 2 + 2.0 * abs(self.rho01) ** 2

    def fidelity_with_ket(self, c0: complex, c1: complex) -> float:
        """<psi| rho |psi> for |psi> = c0|0> + c1|1> (kets need not be normalised)."""
        norm = abs(c0) ** 2 + abs(c1) ** 2
        val = (abs(c0) ** 2 * self.rho00 + abs(c1) ** 2 * self.rho11
               + 2.0 * (c0.conjugate() * c1 * self.rho01.conjugate()).real)
        return val / norm


def _f1(chan: ChannelParams) -> float:
    return 0.5 + chan.eps_rec / 4.0


def _coherent_stripped(alpha, chan: ChannelParams, qs: QSParams):
    """Unnormalised coherent-input coefficients with exp(-T|a|^2/(2F1+1)) stripped.

    Returns (r00, r01, r11, envelope); the physical weights are the first
    three times ``envelope``.  Accepts scalars or numpy arrays of alpha.
    """
    alpha = np.asarray(alpha, dtype=complex)
    t = chan.transmittance
    g = qs.gain
    g2 = g * g
    f1 = _f1(chan)
    d = 2.0 * f1 + 1.0
    a2 = np.abs(alpha) ** 2

    r00 = 2.0 * (2.0 * f1 * d + t * a2) / ((g2 + 1.0) * d ** 3)
    r01 = 2.0 * g * math.sqrt(t) * np.conjugate(alpha) / ((g2 + 1.0) * d * d)
    # 1/d - exp(-s)/(4 f1) rewritten so the near-cancellation at small noise
    # and small amplitude is taken analytically: 4 f1 - d = 2 f1 - 1
    s = t * a2 / (2.0 * f1 * d)
    r11 = (2.0 * g2 / (g2 + 1.0)) * ((2.0 * f1 - 1.0) - d * np.expm1(-s)) / (4.0 * f1 * d)
    envelope = np.exp(-t * a2 / d)
    return r00, r01, r11, envelope


def post_selected_state(alpha: complex, chan: ChannelParams,
                        qs: QSParams) -> tuple[QubitState, float]:
    """Heralded qubit for a coherent input, plus the total success probability.

    The coefficients carry the common factor exp(-T|alpha|^2/(2F1+1)); it is
    divided out of the normalised state, so arbitrarily large |alpha| is safe.
    """
    r00, r01, r11, envelope = _coherent_stripped(complex(alpha), chan, qs)
    weight = float(r00 + r11)
    state = QubitState(rho00=float(r00) / weight, rho01=complex(r01) / weight,
                       rho11=float(r11) / weight)
    p_succ = 2.0 * weight * float(envelope)
    return state, p_succ


def success_probability(alpha: complex, chan: ChannelParams, qs: QSParams) -> float:
    """Total probability that exactly one of the two herald detectors clicks."""
    _, p = post_selected_state(alpha, chan, qs)
    return p


def rl_approx_success(alpha: complex, qs: QSParams) -> float:
    """Weak-signal approximation (1 + |g alpha|^2) / (1 + g^2)."""
    g2 = qs.gain ** 2
    return (1.0 + g2 * abs(complex(alpha)) ** 2) / (1.0 + g2)


def thermal_post_selected_state(proto: ProtocolParams, chan: ChannelParams,
                                qs: QSParams) -> tuple[QubitState, float]:
    """Heralded output when the input is the Gaussian-modulated (thermal) ensemble.

    The output is diagonal in the number basis; returns it with the
    ensemble-averaged success probability.
    """
    t = chan.transmittance
    g2 = qs.gain ** 2
    f2 = 0.5 + t * (proto.va + chan.eps_tm) / 4.0
    d = 2.0 * f2 + 1.0

    # unnormalised populations; their sum is the success probability exactly
    u00 = 8.0 * f2 / ((g2 + 1.0) * d * d)
    u11 = 4.0 * g2 * (2.0 * f2 - 1.0) / ((g2 + 1.0) * 4.0 * f2 * d)
    p_succ = u00 + u11
    return QubitState(rho00=u00 / p_succ, rho01=0.0, rho11=u11 / p_succ), p_succ


def _conditional_stripped(x_a, va, chan: ChannelParams, qs: QSParams):
    """Unnormalised conditional coefficients with exp(-T x^2/(2F1+1)) stripped.

    Returns (w00, w01, w11); the physical weights are these times the stripped
    exponential.  ``x_a`` and ``va`` may be scalars or broadcastable arrays.
    """
    t = chan.transmittance
    g = qs.gain
    g2 = g * g
    f1 = _f1(chan)
    d = 2.0 * f1 + 1.0
    w = t * va + 4.0 * f1 + 2.0
    w2 = t * va + 4.0 * f1
    x2 = x_a * x_a

    w00 = (math.sqrt(2.0)
           * (8.0 * f1 * d * d + t * va * (8.0 * f1 * f1 + 6.0 * f1 + 1.0)
              + 2.0 * t * w * x2)
           / ((g2 + 1.0) * d ** 2.5 * w ** 1.5))
    w01 = 2.0 * g * math.sqrt(2.0 * t) * x_a / ((g2 + 1.0) * d ** 1.5 * np.sqrt(w))
    # 2 sqrt2/sqrt(dw) - exp(-s)/sqrt(f1 w2), with the x = 0 near-cancellation
    # rationalised: 8 f1 w2 - d w = t va (6 f1 - 1) + 2 (2 f1 - 1)(6 f1 + 1) >= 0
    big = 2.0 * math.sqrt(2.0) / np.sqrt(d * w)
    small = 1.0 / np.sqrt(f1 * w2)
    base = ((t * va * (6.0 * f1 - 1.0) + 2.0 * (2.0 * f1 - 1.0) * (6.0 * f1 + 1.0))
            / (d * w * f1 * w2)) / (big + small)
    s = t * x2 / (2.0 * f1 * d)
    w11 = (g2 / (g2 + 1.0)) * (base - np.expm1(-s) * small)
    return w00, w01, w11


def conditional_state(x_a: float, proto: ProtocolParams, chan: ChannelParams,
                      qs: QSParams) -> tuple[QubitState, float]:
    """Heralded qubit conditioned on the transmitted x-quadrature value.

    The companion p-quadrature is averaged over its Gaussian modulation.
    Second return is the unnormalised heralding weight for this x_a (one
    click pattern); its modulation average times two is the total success
    probability of the thermal ensemble.
    """
    if not math.isfinite(x_a):
        raise ValueError(f"x_a must be finite, got {x_a}")
    t = chan.transmittance
    f1 = _f1(chan)
    d = 2.0 * f1 + 1.0
    w00, w01, w11 = _conditional_stripped(x_a, proto.va, chan, qs)
    tot = w00 + w11
    state = QubitState(rho00=w00 / tot, rho01=w01 / tot, rho11=w11 / tot)
    weight = tot * math.exp(-t * x_a * x_a / d)
    return state, weight

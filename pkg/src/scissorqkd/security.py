"""Covariance-matrix security pipeline: closed-form triplets, symplectic
spectra, Holevo bounds, the no-scissor baseline, and the repeaterless
thermal-loss upper bound.

A two-mode Gaussian state in standard form is summarised by (a, b, c):
CM = [[a*I, c*sigma_z], [c*sigma_z, b*I]] in shot-noise units (vacuum = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ChannelParams, ProtocolParams, QSParams, noise_factors

_PHYS_TOL = 1e-9


@dataclass(frozen=True)
class CovarianceTriplet:
    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if self.a < 1.0 - _PHYS_TOL or self.b < 1.0 - _PHYS_TOL:
            raise ValueError(f"unphysical triplet: a={self.a}, b={self.b}")

    @property
    def det(self) -> float:
        return self.a * self.b - self.c * self.c


@dataclass(frozen=True)
class SymplecticSpectrum:
    lambda1: float
    lambda2: float
    lambda3: float


def symplectic_spectrum(cm: CovarianceTriplet) -> SymplecticSpectrum:
    """Symplectic eigenvalues of the pair CM, plus the post-homodyne conditional one."""
    a, b, c = cm.a, cm.b, cm.c
    disc = (a + b) ** 2 - 4.0 * c * c
    if disc < 0.0 or cm.det <= 0.0:
        raise ValueError(f"unphysical triplet ({a}, {b}, {c})")
    root = math.sqrt(disc)
    lam1 = (root - (b - a)) / 2.0
    lam2 = (root + (b - a)) / 2.0
    lam3 = math.sqrt(a * cm.det / b)
    for lam in (lam1, lam2, lam3):
        if lam < 1.0 - _PHYS_TOL:
            raise ValueError(f"symplectic eigenvalue {lam} below 1 for ({a}, {b}, {c})")
    return SymplecticSpectrum(lambda1=lam1, lambda2=lam2, lambda3=lam3)


def bosonic_entropy(x: float) -> float:
    """g(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), with g(1) = 0."""
    e = x - 1.0
    if e <= 0.0:
        return 0.0
    if e < 1e-6:
        # series around x = 1 keeps the (x-1) log(x-1) term accurate
        h = e / 2.0
        return (h + h * h / 2.0 - h * math.log(h)) / math.log(2.0)
    hi = (x + 1.0) / 2.0
    lo = e / 2.0
    return hi * math.log2(hi) - lo * math.log2(lo)


def holevo_bound(cm: CovarianceTriplet) -> float:
    """Eavesdropper information bound for reverse reconciliation, in bits."""
    spec = symplectic_spectrum(cm)
    chi = (bosonic_entropy(spec.lambda1) + bosonic_entropy(spec.lambda2)
           - bosonic_entropy(spec.lambda3))
    return max(chi, 0.0)


def cm_triplet(delta: float, chan: ChannelParams,
               qs: QSParams) -> tuple[CovarianceTriplet, float]:
    """Closed-form heralded sender/receiver covariance triplet and success probability.

    ``delta`` is the EPR parameter of the equivalent entanglement-based
    source; delta = 1 (no squeezing) gives (1, 1, 0) on a noiseless channel.
    """
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    t = chan.transmittance
    g2 = qs.gain ** 2
    gamma2 = delta * delta - 1.0
    f3 = noise_factors(chan, 0.0, delta).f3
    d = 2.0 * f3 + 1.0

    pbar = (1.0 / (g2 + 1.0)) * (4.0 * (d * g2 + 2.0 * f3) / (d * d) - g2 / f3)
    a = (delta * delta / ((g2 + 1.0) * pbar)) * (
        8.0 * (gamma2 * t + (d - gamma2 * t) * (g2 * d + 2.0 * f3)) / d ** 3
        - g2 * (2.0 * f3 - gamma2 * t) / (f3 * f3)) - 1.0
    b = (4.0 / ((g2 + 1.0) * pbar)) * (
        4.0 * (g2 * d + f3) / (d * d) - g2 / f3) - 1.0
    c = (8.0 * delta * math.sqrt(gamma2) * qs.gain * math.sqrt(t)
         / ((g2 + 1.0) * pbar * d * d))
    return CovarianceTriplet(a=a, b=b, c=c), pbar


def noqs_triplet(proto: ProtocolParams, chan: ChannelParams) -> CovarianceTriplet:
    """Standard entanglement-based triplet of the plain protocol (no scissor)."""
    t = chan.transmittance
    v = proto.v
    return CovarianceTriplet(
        a=v,
        b=t * v + 1.0 - t + chan.eps_rec,
        c=math.sqrt(t * (v * v - 1.0)),
    )


def pm_mutual_information(proto: ProtocolParams, chan: ChannelParams) -> float:
    """Prepare-and-measure homodyne mutual information of the plain protocol."""
    snr = chan.transmittance * proto.va / (1.0 + chan.eps_rec)
    return 0.5 * math.log2(1.0 + snr)


def tl_plob_bound(chan: ChannelParams) -> float:
    """Repeaterless secret-key upper bound of the thermal-loss channel, bits/use.

    Uses the equivalent mean thermal photon number nbar = eps_tm*T/(2(1-T));
    at eps_tm = 0 it reduces to the pure-loss bound -log2(1-T).
    """
    t = chan.transmittance
    if t >= 1.0:
        raise ValueError("bound diverges on the lossless channel (T = 1)")
    nbar = chan.eps_tm * t / (2.0 * (1.0 - t))
    if nbar >= t / (1.0 - t):
        return 0.0
    if nbar > 0.0:
        ent = (nbar + 1.0) * math.log2(nbar + 1.0) - nbar * math.log2(nbar)
    else:
        ent = 0.0
    bound = -math.log2(1.0 - t) - nbar * math.log2(t) - ent
    return max(bound, 0.0)

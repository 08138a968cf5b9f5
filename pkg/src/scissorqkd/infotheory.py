"""Exact quadrature densities of the heralded output and their entropy and
mutual-information integrals, plus the Gaussian-approximation counterpart.

Every density here has the polynomial-times-Gaussian form

    f(x) = (c0 + c1 x + c2 x^2) exp(-x^2) / sqrt(pi),

which is what a number-diagonal-plus-one-coherence qubit produces under
homodyne detection.  Entropies are integrated with Gauss-Hermite rules,
switching to a geometrically graded Gauss-Legendre mesh when the polynomial
factor has near-real zeros (the log integrand then has sharp features
Hermite nodes cannot resolve).  Node counts double until the answer is
stable, mirroring the convergence contract of the public functions.

Differential entropies depend on the quadrature length scale; mutual
information does not, and ``axis_scale`` exists purely to let tests exercise
that invariance along a different floating-point path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite, roots_legendre

from .params import ChannelParams, ProtocolParams, QSParams
from .scissor import (
    _coherent_stripped,
    _conditional_stripped,
    _f1,
    conditional_state,
    thermal_post_selected_state,
)
from .security import CovarianceTriplet

_LN2 = math.log(2.0)
_LNSQRTPI = 0.5 * math.log(math.pi)
_NORM_TOL = 1e-10

DEFAULT_START_NODES = 96
DEFAULT_MAX_NODES = 6144
DEFAULT_TOL = 1e-9

# graded-mesh bookkeeping: refine towards the polynomial zero until the
# segment is 2^-(LEVELS-1) long, with wide Legendre panels on the far tails
_GRADED_LEVELS = 34
_GRADED_CUT = 9.0
_NEAR_SINGULAR_IM = 0.5

_hermite_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_legendre_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class QuadratureConvergenceError(RuntimeError):
    """Node doubling failed to stabilise an integral to the requested tolerance."""


def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _hermite_cache:
        _hermite_cache[n] = roots_hermite(n)
    return _hermite_cache[n]


def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _legendre_cache:
        _legendre_cache[n] = roots_legendre(n)
    return _legendre_cache[n]


@dataclass(frozen=True)
class QuadratureDensity:
    """Density (coeff_gauss + coeff_x1*x + coeff_x2*x^2) exp(-x^2)/sqrt(pi)."""

    coeff_gauss: float
    coeff_x2: float
    coeff_x1: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.coeff_gauss + self.coeff_x2 / 2.0 - 1.0) > _NORM_TOL:
            raise ValueError("density does not integrate to one")
        if self.coeff_gauss < -1e-12 or self.coeff_x2 < -1e-12:
            raise ValueError("negative density coefficient")
        if self.coeff_x1 ** 2 > 4.0 * self.coeff_gauss * self.coeff_x2 + 1e-12:
            raise ValueError("density dips below zero")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        poly = self.coeff_gauss + self.coeff_x1 * x + self.coeff_x2 * x * x
        return poly * np.exp(-x * x) / math.sqrt(math.pi)


def output_density(proto: ProtocolParams, chan: ChannelParams,
                   qs: QSParams) -> QuadratureDensity:
    """Homodyne statistics of the heralded output for the modulated ensemble."""
    sigma, _ = thermal_post_selected_state(proto, chan, qs)
    return QuadratureDensity(coeff_gauss=sigma.rho00, coeff_x2=2.0 * sigma.rho11)


def conditional_density(x_a: float, proto: ProtocolParams, chan: ChannelParams,
                        qs: QSParams) -> QuadratureDensity:
    """Homodyne statistics of the heralded output given the sent x-quadrature."""
    omega, _ = conditional_state(x_a, proto, chan, qs)
    return QuadratureDensity(coeff_gauss=omega.rho00,
                             coeff_x2=2.0 * omega.rho11,
                             coeff_x1=2.0 * math.sqrt(2.0) * omega.rho01.real)


def _plogf(poly: np.ndarray, x: np.ndarray, scale: float) -> np.ndarray:
    """poly * ln(f/scale) for f = poly*exp(-x^2)/sqrt(pi), with 0*ln0 = 0."""
    poly = np.maximum(poly, 0.0)
    safe = np.where(poly > 0.0, poly, 1.0)
    out = poly * (np.log(safe) - x * x - _LNSQRTPI - math.log(scale))
    return np.where(poly > 0.0, out, 0.0)


def _entropy_rows_hermite(c0, c1, c2, n_nodes: int, scale: float) -> np.ndarray:
    x, w = _hermite(n_nodes)
    poly = (c0[:, None] + c1[:, None] * x[None, :]
            + c2[:, None] * x[None, :] ** 2)
    vals = _plogf(poly, x[None, :], scale)
    return -(vals @ w) / (math.sqrt(math.pi) * _LN2)


def _graded_mesh(centers: np.ndarray, levels: int) -> np.ndarray:
    """Segment boundaries refining geometrically towards each row's centre."""
    offsets = 2.0 ** -np.arange(levels)                  # 1, 1/2, ..., tiny
    outer = np.linspace(0.0, 1.0, 5)[:-1]                # panels on the far tails
    left_outer = -_GRADED_CUT + (centers[:, None] - 1.0 + _GRADED_CUT) * outer[None, :]
    right_outer = (centers[:, None] + 1.0
                   + (_GRADED_CUT - centers[:, None] - 1.0) * (1.0 - outer[::-1])[None, :])
    left_graded = centers[:, None] - offsets[None, :]
    right_graded = centers[:, None] + offsets[None, ::-1]
    bounds = np.concatenate(
        [left_outer, left_graded, right_graded, right_outer,
         np.full((len(centers), 1), _GRADED_CUT)], axis=1)
    return bounds


def _graded_group(c0, c1, c2, centers, levels: int, n_gl: int,
                  scale: float) -> np.ndarray:
    bounds = _graded_mesh(centers, levels)
    t, w = _legendre(n_gl)
    lo = bounds[:, :-1, None]
    half = 0.5 * (bounds[:, 1:, None] - lo)
    x = lo + half * (t[None, None, :] + 1.0)
    poly = (c0[:, None, None] + c1[:, None, None] * x
            + c2[:, None, None] * x * x)
    vals = _plogf(poly, x, scale) * np.exp(-x * x)
    seg = (vals * w[None, None, :]).sum(axis=2) * half[:, :, 0]
    return -seg.sum(axis=1) / (math.sqrt(math.pi) * _LN2)


def _entropy_rows_graded(c0, c1, c2, n_gl: int, scale: float,
                         im: np.ndarray | None = None) -> np.ndarray:
    centers = np.where(c2 > 0.0, -c1 / (2.0 * np.maximum(c2, 1e-300)), 0.0)
    centers = np.clip(centers, -_GRADED_CUT + 1.5, _GRADED_CUT - 1.5)
    if im is None:
        im2 = c0 / np.maximum(c2, 1e-300) - (c1 / (2.0 * np.maximum(c2, 1e-300))) ** 2
        im = np.sqrt(np.maximum(im2, 0.0))
    out = np.empty_like(c0)
    # shallow refinement resolves zeros that stay a little off the axis;
    # the deep mesh handles densities that touch zero outright
    deep = im < 2.0 ** (3 - 12)
    for mask, levels in ((~deep, 12), (deep, _GRADED_LEVELS)):
        if np.any(mask):
            out[mask] = _graded_group(c0[mask], c1[mask], c2[mask],
                                      centers[mask], levels, n_gl, scale)
    return out


def _entropy_rows(c0, c1, c2, n_nodes: int, scale: float) -> np.ndarray:
    """Differential entropy (bits) of each row's density, choosing the rule
    by how close the polynomial zeros sit to the real axis."""
    c0 = np.atleast_1d(np.asarray(c0, dtype=float))
    c1 = np.atleast_1d(np.asarray(c1, dtype=float))
    c2 = np.atleast_1d(np.asarray(c2, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        im2 = np.where(c2 > 1e-12,
                       c0 / np.maximum(c2, 1e-300) - (c1 / (2.0 * np.maximum(c2, 1e-300))) ** 2,
                       np.inf)
    near = im2 < _NEAR_SINGULAR_IM ** 2
    out = np.empty_like(c0)
    if np.any(~near):
        out[~near] = _entropy_rows_hermite(c0[~near], c1[~near], c2[~near],
                                           n_nodes, scale)
    if np.any(near):
        n_gl = max(16, 16 * (n_nodes // DEFAULT_START_NODES))
        out[near] = _entropy_rows_graded(c0[near], c1[near], c2[near], n_gl,
                                         scale,
                                         im=np.sqrt(np.maximum(im2[near], 0.0)))
    return out


def _mi_at_nodes(proto: ProtocolParams, chan: ChannelParams, qs: QSParams,
                 n_nodes: int, scale: float) -> float:
    t = chan.transmittance
    f1 = _f1(chan)
    d = 2.0 * f1 + 1.0
    va = proto.va
    # Hermite weight absorbs both the modulation Gaussian and the common
    # heralding envelope, so the residual outer integrand has O(1) width.
    s_out = 1.0 / math.sqrt(2.0 / va + t / d)

    x, w = _hermite(n_nodes)
    xa = s_out * x
    w00, w01, w11 = _conditional_stripped(xa, va, chan, qs)
    tot = w00 + w11
    c0 = w00 / tot
    c1 = 2.0 * math.sqrt(2.0) * w01 / tot
    c2 = 2.0 * w11 / tot

    e_cond = _entropy_rows(c0, c1, c2, n_nodes, scale)
    weights = w * tot
    h_cond = float(weights @ e_cond) / float(weights.sum())

    marg = output_density(proto, chan, qs)
    h_b = float(_entropy_rows(marg.coeff_gauss, marg.coeff_x1, marg.coeff_x2,
                              n_nodes, scale)[0])
    return h_b - h_cond


def mutual_information_exact(proto: ProtocolParams, chan: ChannelParams,
                             qs: QSParams, *, tol: float = DEFAULT_TOL,
                             axis_scale: float = 1.0,
                             start_nodes: int = DEFAULT_START_NODES,
                             max_nodes: int = DEFAULT_MAX_NODES) -> float:
    """Mutual information (bits) of the heralded x-quadrature data.

    The conditioning variable is reweighted by its heralding probability, so
    only rounds kept at sifting enter either entropy.  Node counts double
    until two successive evaluations agree to ``tol``.
    """
    n = start_nodes
    prev = None
    while n <= max_nodes:
        val = _mi_at_nodes(proto, chan, qs, n, axis_scale)
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        n *= 2
    raise QuadratureConvergenceError(
        f"mutual information failed to stabilise to {tol:g} within "
        f"{max_nodes} nodes (last two: {prev!r})")


def _thermal_density_coeffs(chan: ChannelParams, qs: QSParams,
                            va_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Marginal density coefficients (c0, c2) for a batch of modulation variances."""
    t = chan.transmittance
    g2 = qs.gain ** 2
    f2 = 0.5 + t * (va_values + chan.eps_tm) / 4.0
    d = 2.0 * f2 + 1.0
    u00 = 8.0 * f2 / ((g2 + 1.0) * d * d)
    u11 = 4.0 * g2 * (2.0 * f2 - 1.0) / ((g2 + 1.0) * 4.0 * f2 * d)
    tot = u00 + u11
    return u00 / tot, 2.0 * u11 / tot


def _mi_rows_at_nodes(chan: ChannelParams, qs: QSParams, va_values: np.ndarray,
                      n_nodes: int, scale: float) -> np.ndarray:
    """Mutual information for a batch of modulation variances at one gain."""
    t = chan.transmittance
    f1 = _f1(chan)
    d = 2.0 * f1 + 1.0
    va = va_values[:, None]
    s_out = 1.0 / np.sqrt(2.0 / va + t / d)
    x, wq = _hermite(n_nodes)
    xa = s_out * x[None, :]
    w00, w01, w11 = _conditional_stripped(xa, va, chan, qs)
    tot = w00 + w11
    shape = tot.shape
    e = _entropy_rows((w00 / tot).ravel(),
                      (2.0 * math.sqrt(2.0) * w01 / tot).ravel(),
                      (2.0 * w11 / tot).ravel(), n_nodes, scale).reshape(shape)
    wts = wq[None, :] * tot
    h_cond = (wts * e).sum(axis=1) / wts.sum(axis=1)
    m0, m2 = _thermal_density_coeffs(chan, qs, va_values)
    h_b = _entropy_rows(m0, np.zeros_like(m0), m2, n_nodes, scale)
    return h_b - h_cond


def mutual_information_rows(chan: ChannelParams, qs: QSParams, va_values, *,
                            tol: float = DEFAULT_TOL,
                            start_nodes: int = DEFAULT_START_NODES,
                            max_nodes: int = DEFAULT_MAX_NODES) -> np.ndarray:
    """Batched mutual information over modulation variances at a fixed gain.

    Same node-doubling contract as the scalar function, applied per row.
    """
    va_values = np.asarray(va_values, dtype=float)
    out = np.full(va_values.shape, np.nan)
    active = np.arange(len(va_values))
    prev = None
    n = start_nodes
    while n <= max_nodes and len(active):
        cur = _mi_rows_at_nodes(chan, qs, va_values[active], n, 1.0)
        if prev is not None:
            done = np.abs(cur - prev) < tol
            out[active[done]] = cur[done]
            active = active[~done]
            prev = cur[~done]
        else:
            prev = cur
        n *= 2
    if len(active):
        raise QuadratureConvergenceError(
            f"mutual information failed to stabilise to {tol:g} within "
            f"{max_nodes} nodes for va={va_values[active]!r}")
    return out


def mutual_information_gaussian(cm: CovarianceTriplet) -> float:
    """Mutual information of a Gaussian pair with the same covariance, bits."""
    det = cm.det
    if det <= 0.0:
        raise ValueError(f"unphysical triplet ({cm.a}, {cm.b}, {cm.c})")
    return 0.5 * math.log2(cm.a * cm.b / det)


def average_success_probability(proto: ProtocolParams, chan: ChannelParams,
                                qs: QSParams, n_nodes: int = 256) -> float:
    """Modulation average of the total success probability, by quadrature.

    Exists to cross-check the closed-form ensemble success probability.
    """
    t = chan.transmittance
    d = 2.0 * _f1(chan) + 1.0
    va = proto.va
    s_out = 1.0 / math.sqrt(2.0 / va + t / d)
    x, w = _hermite(n_nodes)
    w00, _, w11 = _conditional_stripped(s_out * x, va, chan, qs)
    tot = w00 + w11
    return 2.0 * s_out * float(w @ tot) / math.sqrt(math.pi * va / 2.0)


def _sample_qubit_homodyne(rng: np.random.Generator, p00: np.ndarray,
                           p01: np.ndarray, p11: np.ndarray) -> np.ndarray:
    """Draw one homodyne outcome per row from a qubit's quadrature density.

    Diagonalises each 2x2 state, picks an eigen-component, then rejection
    samples (c + sqrt(2) s x)^2 exp(-x^2)/sqrt(pi) against the mixture bound
    2c^2 + 4 s^2 x^2.
    """
    n = len(p00)
    disc = np.sqrt(np.maximum((p00 - p11) ** 2 + 4.0 * p01 ** 2, 0.0))
    lam_hi = 0.5 * (1.0 + disc)
    pick_hi = rng.random(n) < lam_hi
    # eigenvector components for the chosen eigenvalue
    lam = np.where(pick_hi, lam_hi, 1.0 - lam_hi)
    vx = np.where(np.abs(p01) > 1e-300, p01, np.where(p00 >= lam - 1e-15, 1.0, 0.0))
    vy = np.where(np.abs(p01) > 1e-300, lam - p00, np.where(p00 >= lam - 1e-15, 0.0, 1.0))
    norm = np.hypot(vx, vy)
    c, s = vx / norm, vy / norm

    out = np.empty(n)
    todo = np.arange(n)
    while len(todo):
        ct, st = c[todo], s[todo]
        w_g = ct * ct  # mixture weight of the plain Gaussian part
        gauss = rng.random(len(todo)) < w_g
        x = np.where(gauss,
                     rng.normal(0.0, math.sqrt(0.5), len(todo)),
                     np.sqrt(rng.gamma(1.5, 1.0, len(todo)))
                     * np.where(rng.random(len(todo)) < 0.5, -1.0, 1.0))
        num = (ct + math.sqrt(2.0) * st * x) ** 2
        den = 2.0 * ct * ct + 4.0 * st * st * x * x
        keep = rng.random(len(todo)) * den <= num
        out[todo[keep]] = x[keep]
        todo = todo[~keep]
    return out


def mc_mutual_information(proto: ProtocolParams, chan: ChannelParams,
                          qs: QSParams, n_samples: int = 10_000_000,
                          seed: int = 0, batch: int = 500_000
                          ) -> tuple[float, float]:
    """Monte-Carlo estimate of the heralded mutual information, bits.

    Samples the physical process end to end: Gaussian modulation, heralding
    by rejection on the per-input success probability, then a homodyne draw
    from the per-input output qubit.  The log-ratio average uses the
    analytic conditional and marginal densities, so agreement checks the
    quadrature pipeline against the sampling one.  Returns (estimate,
    standard error).
    """
    rng = np.random.default_rng(seed)
    std = math.sqrt(proto.va) / 2.0
    marg = output_density(proto, chan, qs)

    total = 0.0
    total2 = 0.0
    count = 0
    while count < n_samples:
        m = min(batch, n_samples - count)
        # oversample to survive heralding rejection
        draw = int(m * 2.5) + 1000
        xa = rng.normal(0.0, std, draw)
        pa = rng.normal(0.0, std, draw)
        r00, r01, r11, env = _coherent_stripped(xa + 1j * pa, chan, qs)
        pps = (r00 + r11).real * env.real
        keep = rng.random(draw) * 0.5 < pps
        xa, pa = xa[keep], pa[keep]
        if len(xa) > m:
            xa, pa = xa[:m], pa[:m]
        tot = (r00 + r11).real[keep][:len(xa)]
        p00 = r00.real[keep][:len(xa)] / tot
        p01 = r01[keep][:len(xa)].real / tot
        p11 = r11.real[keep][:len(xa)] / tot
        xb = _sample_qubit_homodyne(rng, p00, p01, p11)

        w00, w01, w11 = _conditional_stripped(xa, proto.va, chan, qs)
        ctot = w00 + w11
        poly_c = (w00 + 2.0 * math.sqrt(2.0) * w01 * xb
                  + 2.0 * w11 * xb * xb) / ctot
        poly_m = (marg.coeff_gauss + marg.coeff_x2 * xb * xb)
        ll = (np.log(poly_c) - np.log(poly_m)) / _LN2
        total += float(ll.sum())
        total2 += float((ll * ll).sum())
        count += len(xa)

    mean = total / count
    var = total2 / count - mean * mean
    return mean, math.sqrt(max(var, 0.0) / count)

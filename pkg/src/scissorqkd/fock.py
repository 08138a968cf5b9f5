"""Brute-force truncated-Fock-space verification of the scissor pipeline.

States are kept as weighted mixtures of dense pure amplitude tensors, one
tensor per classical branch (thermal modes are expanded in their exact
geometric number-state mixture), so arbitrarily mixed inputs are handled
without ever materialising a multimode density matrix.  The interferometer
is applied as the physical sequence of two-mode beam splitters; each
splitter acts exactly, sector by sector in total photon number.

Nothing here reuses the closed-form state expressions: this module is the
independent oracle they are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .params import ChannelParams, QSParams

DEFAULT_CUTOFF = 25
TAIL_BOUND = 1e-10
_THERMAL_TAIL = 1e-12
_TRACE_TOL = 1e-10


class TruncationError(ValueError):
    """A constructor or transform would lose more tail mass than allowed."""


@dataclass
class FockState:
    """Mixture sum_k weights[k] |psi_k><psi_k| of dense pure amplitude tensors.

    Branch amplitudes need not be normalised; sub-normalised mixtures
    represent post-measurement states.
    """

    dims: tuple[int, ...]
    amps: list[np.ndarray]
    weights: list[float]
    cutoff: int

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(sum(w * float(np.vdot(a, a).real)
                         for w, a in zip(self.weights, self.amps)))


@dataclass(frozen=True)
class ModeTransform:
    """Orthogonal mode-mixing map, stored as its two-mode beam-splitter factors.

    ``ops`` lists (i, j, ct, st) triples applied in order; each maps the pair
    (a_i, a_j) to (ct*a_i + st*a_j, -st*a_i + ct*a_j).  ``matrix`` is the
    composed map acting on the annihilation-operator column vector.
    """

    n_modes: int
    ops: tuple[tuple[int, int, float, float], ...]

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(self.n_modes)
        for i, j, ct, st in self.ops:
            r = np.eye(self.n_modes)
            r[i, i] = ct
            r[i, j] = st
            r[j, i] = -st
            r[j, j] = ct
            m = r @ m
        return m

    @classmethod
    def identity(cls, n_modes: int) -> "ModeTransform":
        return cls(n_modes=n_modes, ops=())

    @classmethod
    def beam_splitter(cls, n_modes: int, i: int, j: int,
                      ct: float, st: float) -> "ModeTransform":
        if not math.isclose(ct * ct + st * st, 1.0, abs_tol=1e-12):
            raise ValueError("beam-splitter coefficients must satisfy ct^2 + st^2 = 1")
        return cls(n_modes=n_modes, ops=((i, j, ct, st),))

    @classmethod
    def scissor_circuit(cls, transmittance: float, mu: float,
                        n_modes: int = 4, offset: int = 0) -> "ModeTransform":
        """Channel splitter, photon splitter, and the balanced herald splitter.

        Acts on modes (offset .. offset+3) ordered (signal, photon, keep, noise);
        after it, modes offset and offset+1 feed the two herald detectors,
        offset+2 is the kept output, offset+3 the discarded noise arm.
        """
        t, m = transmittance, mu
        ops = (
            (offset + 0, offset + 3, math.sqrt(t), math.sqrt(1.0 - t)),
            (offset + 1, offset + 2, math.sqrt(m), -math.sqrt(1.0 - m)),
            (offset + 0, offset + 1, math.sqrt(0.5), math.sqrt(0.5)),
        )
        return cls(n_modes=n_modes, ops=ops)


@lru_cache(maxsize=None)
def _bs_block(sector: int, theta: float) -> np.ndarray:
    """Number-basis beam-splitter block on the sector with ``sector`` photons.

    Basis index is the first-mode occupation; B[k_out, k_in] is exact up to
    the orthogonal matrix exponential.
    """
    if sector == 0:
        return np.ones((1, 1))
    k = np.arange(sector)
    ladder = np.zeros((sector + 1, sector + 1))
    ladder[k + 1, k] = np.sqrt((k + 1.0) * (sector - k))
    return expm(theta * (ladder - ladder.T))


def _apply_bs(amp: np.ndarray, i: int, j: int, ct: float, st: float,
              cap: int) -> np.ndarray:
    """Apply one beam splitter to a dense amplitude tensor, growing dims to cap."""
    theta = math.atan2(st, ct)
    moved = np.moveaxis(amp, (i, j), (0, 1))
    di, dj = moved.shape[0], moved.shape[1]
    rest = moved.shape[2:]
    flat = moved.reshape(di, dj, -1)
    d_out = min(di + dj - 1, cap + 1)
    out = np.zeros((d_out, d_out, flat.shape[2]), dtype=flat.dtype)
    for s in range(di + dj - 1):
        k_in = np.arange(max(0, s - dj + 1), min(di - 1, s) + 1)
        k_out = np.arange(max(0, s - d_out + 1), min(d_out - 1, s) + 1)
        if len(k_in) == 0 or len(k_out) == 0:
            continue
        block = _bs_block(s, theta)[np.ix_(k_out, k_in)]
        out[k_out, s - k_out, :] = block @ flat[k_in, s - k_in, :]
    out = out.reshape((d_out, d_out) + rest)
    return np.moveaxis(out, (0, 1), (i, j))


def _coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, cutoff + 1))))) if cutoff else np.zeros(1)
    mag = np.exp(-abs(alpha) ** 2 / 2.0 + n * np.log(abs(alpha)) - log_fact / 2.0) \
        if abs(alpha) > 0 else np.eye(cutoff + 1)[0]
    if abs(alpha) > 0:
        phase = np.exp(1j * n * np.angle(complex(alpha)))
        return (mag * phase).astype(complex)
    return mag.astype(complex)


def _geometric_weights(nbar: float, cutoff: int, tail: float) -> np.ndarray:
    """Number distribution of a thermal mode, truncated once the tail is below ``tail``."""
    if nbar <= 0.0:
        return np.array([1.0])
    q = nbar / (1.0 + nbar)
    m_needed = int(math.ceil(math.log(tail) / math.log(q))) + 1
    if m_needed > cutoff:
        raise TruncationError(
            f"thermal mode with nbar={nbar:g} needs cutoff >= {m_needed} "
            f"for tail <= {tail:g}, got {cutoff}")
    m = np.arange(m_needed + 1)
    return (1.0 - q) * q ** m


def _poisson_tail_cutoff(mean: float, tail: float) -> int:
    """Smallest N with P(Poisson(mean) > N) <= tail."""
    if mean <= 0.0:
        return 0
    n, p, cdf = 0, math.exp(-mean), math.exp(-mean)
    while 1.0 - cdf > tail and n < 10000:
        n += 1
        p *= mean / n
        cdf += p
    return n


def build_input(kind: str, noise_nbar: float, cutoff: int = DEFAULT_CUTOFF, *,
                alpha: complex = 0.0, va: float = 0.0,
                delta: float = 1.0) -> FockState:
    """Assemble the four- or five-mode input of the channel-plus-scissor circuit.

    ``kind`` selects the signal: 'coherent' (amplitude alpha), 'thermal'
    (mean photon number va/2), or 'tmsv' (two-mode squeezed vacuum with EPR
    parameter delta, whose first mode stays with the sender).  The remaining
    modes are the heralding single photon, the vacuum port, and a thermal
    noise mode with mean occupation ``noise_nbar``.
    """
    noise = _geometric_weights(noise_nbar, cutoff, _THERMAL_TAIL)
    amps: list[np.ndarray] = []
    weights: list[float] = []

    def stack(signal_amp: np.ndarray, p_signal: float) -> None:
        for m, pm in enumerate(noise):
            a = np.zeros(signal_amp.shape + (2, 1, len(noise)), dtype=complex)
            a[..., 1, 0, m] = signal_amp
            amps.append(a)
            weights.append(p_signal * pm)

    if kind == "coherent":
        needed = _poisson_tail_cutoff(abs(complex(alpha)) ** 2, TAIL_BOUND)
        if needed > cutoff:
            raise TruncationError(
                f"coherent signal |alpha|^2={abs(alpha) ** 2:g} needs cutoff >= "
                f"{needed} for tail <= {TAIL_BOUND:g}, got {cutoff}")
        stack(_coherent_vector(alpha, cutoff), 1.0)
    elif kind == "thermal":
        for n, pn in enumerate(_geometric_weights(va / 2.0, cutoff, TAIL_BOUND)):
            sig = np.zeros(cutoff + 1, dtype=complex)
            sig[n] = 1.0
            stack(sig, pn)
    elif kind == "tmsv":
        if delta < 1.0:
            raise ValueError(f"delta must be >= 1, got {delta}")
        lam2 = 1.0 - 1.0 / (delta * delta)
        if lam2 > 0.0 and lam2 ** (cutoff + 1) > TAIL_BOUND:
            needed = int(math.ceil(math.log(TAIL_BOUND) / math.log(lam2)))
            raise TruncationError(
                f"tmsv signal with delta={delta:g} needs cutoff >= {needed} "
                f"for tail <= {TAIL_BOUND:g}, got {cutoff}")
        n = np.arange(cutoff + 1)
        pair = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        pair[n, n] = np.sqrt(lam2) ** n / delta
        stack(pair, 1.0)
    else:
        raise ValueError(f"unknown input kind {kind!r}")

    dims = amps[0].shape
    return FockState(dims=dims, amps=amps, weights=weights, cutoff=cutoff)


def apply_interferometer(state: FockState, transform: ModeTransform) -> FockState:
    """Evolve every branch through the beam-splitter sequence of ``transform``."""
    if transform.n_modes != state.n_modes:
        raise ValueError(
            f"transform acts on {transform.n_modes} modes, state has {state.n_modes}")
    before = state.trace()
    amps = state.amps
    for i, j, ct, st in transform.ops:
        amps = [_apply_bs(a, i, j, ct, st, state.cutoff) for a in amps]
    out = FockState(dims=amps[0].shape if amps else state.dims, amps=amps,
                    weights=list(state.weights), cutoff=state.cutoff)
    if abs(out.trace() - before) > _TRACE_TOL:
        raise TruncationError(
            f"interferometer lost {abs(out.trace() - before):.3e} trace mass;"
            f" raise the cutoff above {state.cutoff}")
    return out


def project_success(state: FockState, mode_d1: int,
                    mode_d2: int) -> tuple[FockState | None, float]:
    """Herald on 'detector 1 clicks, detector 2 stays dark'.

    Returns the normalised state of the remaining modes and the pattern
    probability; the state is None when the pattern has zero probability.
    """
    if mode_d1 == mode_d2:
        raise ValueError("detector modes must be distinct")
    if not (0 <= mode_d1 < state.n_modes and 0 <= mode_d2 < state.n_modes):
        raise ValueError("detector mode index out of range")
    new_amps: list[np.ndarray] = []
    new_weights: list[float] = []
    prob = 0.0
    for w, amp in zip(state.weights, state.amps):
        dark = np.take(amp, 0, axis=mode_d2)
        d1 = mode_d1 - (1 if mode_d2 < mode_d1 else 0)
        clicked = np.moveaxis(dark, d1, 0)
        for k in range(1, clicked.shape[0]):
            branch = clicked[k]
            norm2 = float(np.vdot(branch, branch).real)
            if norm2 == 0.0:
                continue
            prob += w * norm2
            new_amps.append(branch)
            new_weights.append(w)
    if prob == 0.0:
        return None, 0.0
    dims = new_amps[0].shape
    reduced = FockState(dims=dims, amps=new_amps,
                        weights=[w / prob for w in new_weights],
                        cutoff=state.cutoff)
    return reduced, prob


def reduced_density(state: FockState, mode: int) -> np.ndarray:
    """Single-mode density matrix after tracing out every other mode."""
    d = state.dims[mode]
    rho = np.zeros((d, d), dtype=complex)
    for w, amp in zip(state.weights, state.amps):
        flat = np.moveaxis(amp, mode, 0).reshape(d, -1)
        rho += w * (flat @ flat.conj().T)
    return rho


def _apply_x(amp: np.ndarray, mode: int) -> np.ndarray:
    """Act with the quadrature x = a + a^dag on one mode of a pure branch.

    The mode dimension grows by one so the creation part is never clipped.
    """
    moved = np.moveaxis(amp, mode, 0)
    d = moved.shape[0]
    out = np.zeros((d + 1,) + moved.shape[1:], dtype=amp.dtype)
    lower = np.sqrt(np.arange(1.0, d)).reshape((-1,) + (1,) * (moved.ndim - 1))
    raise_ = np.sqrt(np.arange(1.0, d + 1)).reshape((-1,) + (1,) * (moved.ndim - 1))
    out[:d - 1] += lower * moved[1:]   # annihilation part
    out[1:d + 1] += raise_ * moved[:d]  # creation part
    return np.moveaxis(out, 0, mode)


def quad_second_moment(state: FockState, mode_i: int, mode_j: int) -> float:
    """<x_i x_j> over the (already normalised) mixture; i == j gives <x_i^2>."""
    total = 0.0
    for w, amp in zip(state.weights, state.amps):
        if mode_i == mode_j:
            xi = _apply_x(amp, mode_i)
            total += w * float(np.vdot(xi, xi).real)
        else:
            y = _apply_x(_apply_x(amp, mode_j), mode_i)
            pad = [(0, y.shape[k] - amp.shape[k]) for k in range(amp.ndim)]
            total += w * float(np.vdot(np.pad(amp, pad), y).real)
    return total


def mean_annihilation(state: FockState, mode: int) -> complex:
    """<a_mode> over the mixture."""
    total = 0.0 + 0.0j
    for w, amp in zip(state.weights, state.amps):
        moved = np.moveaxis(amp, mode, 0)
        d = moved.shape[0]
        n = np.arange(d - 1)
        root = np.sqrt(n + 1.0).reshape((-1,) + (1,) * (moved.ndim - 1))
        lowered = np.zeros_like(moved)
        lowered[:-1] = root * moved[1:]
        total += w * complex(np.vdot(moved, lowered))
    return total


def oracle_state(alpha: complex, chan: ChannelParams, qs: QSParams,
                 cutoff: int = DEFAULT_CUTOFF,
                 swap_detectors: bool = False) -> tuple[np.ndarray, float]:
    """Full-circuit heralded qubit for a coherent input.

    Returns the normalised 2x2 output block and the single-pattern heralding
    probability (half the total success probability).  ``swap_detectors``
    selects the opposite click pattern, whose state carries the flipped
    coherence sign.
    """
    state = build_input("coherent", noise_nbar=chan.eps / 2.0, cutoff=cutoff,
                        alpha=alpha)
    circuit = ModeTransform.scissor_circuit(chan.transmittance, qs.mu)
    state = apply_interferometer(state, circuit)
    d1, d2 = (1, 0) if swap_detectors else (0, 1)
    kept, prob = project_success(state, d1, d2)
    if kept is None:
        return np.zeros((2, 2), dtype=complex), 0.0
    rho = reduced_density(kept, 0)
    spill = float(np.abs(rho[2:, :]).sum() + np.abs(rho[:2, 2:]).sum()) if rho.shape[0] > 2 else 0.0
    if spill > 1e-10:
        raise TruncationError(f"output mode left the qubit subspace by {spill:.3e}")
    return rho[:2, :2], prob


def oracle_thermal_state(va: float, chan: ChannelParams, qs: QSParams,
                         cutoff: int = DEFAULT_CUTOFF) -> tuple[np.ndarray, float]:
    """Heralded qubit for the Gaussian-modulated ensemble (thermal signal)."""
    state = build_input("thermal", noise_nbar=chan.eps / 2.0, cutoff=cutoff, va=va)
    circuit = ModeTransform.scissor_circuit(chan.transmittance, qs.mu)
    state = apply_interferometer(state, circuit)
    kept, prob = project_success(state, 0, 1)
    if kept is None:
        return np.zeros((2, 2), dtype=complex), 0.0
    rho = reduced_density(kept, 0)
    return rho[:2, :2], prob


def oracle_cm(delta: float, chan: ChannelParams, qs: QSParams,
              cutoff: int = DEFAULT_CUTOFF) -> tuple[float, float, float, float]:
    """Covariance triplet (a, b, c) of the heralded sender/receiver pair.

    One half of a two-mode squeezed vacuum crosses the channel and the
    scissor; heralding on the usual click pattern leaves a qubit entangled
    with the sender mode.  The contraction below follows the circuit exactly:
    the channel splitter block feeds a closed-form balanced-splitter column
    (the dark detector pins the photon bookkeeping), and the discarded noise
    arm enforces which sender-mode coherences survive.  Returns (a, b, c,
    pbar_succ) with quadrature variances in shot-noise units.
    """
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    lam2 = 1.0 - 1.0 / (delta * delta)
    if lam2 > 0.0 and lam2 ** (cutoff + 1) > TAIL_BOUND:
        needed = int(math.ceil(math.log(TAIL_BOUND) / math.log(lam2)))
        raise TruncationError(
            f"tmsv with delta={delta:g} needs cutoff >= {needed} "
            f"for tail <= {TAIL_BOUND:g}, got {cutoff}")

    t = chan.transmittance
    mu = qs.mu
    theta_t = math.atan2(math.sqrt(1.0 - t), math.sqrt(t))
    noise = _geometric_weights(chan.eps / 2.0, cutoff, _THERMAL_TAIL)
    nmax = cutoff
    tn = np.sqrt(lam2) ** np.arange(nmax + 1) / delta

    p_total = 0.0
    a_num = 0.0
    b_num = 0.0
    c_num = 0.0
    for m, pm in enumerate(noise):
        width = nmax + m + 2
        v = np.zeros((nmax + 1, width))
        for n in range(nmax + 1):
            s = n + m
            v[n, :s + 1] = _bs_block(s, theta_t)[:, n]
        n1 = np.arange(width)
        half = 2.0 ** (-0.5 * n1)
        # kept mode dark (photon heralds): detector count is j + 1
        amp0 = np.zeros((nmax + 1, width))
        amp0[:, 1:] = math.sqrt(mu) * v[:, :-1] * np.sqrt(n1[1:]) * half[1:]
        # kept mode holds the photon: detector count is j
        amp1 = np.zeros((nmax + 1, width))
        amp1[:, 1:] = math.sqrt(1.0 - mu) * v[:, 1:] * half[1:]

        diag = (amp0 ** 2 + amp1 ** 2).sum(axis=1)
        tsq = tn ** 2
        p_total += pm * float(tsq @ diag)
        a_num += pm * float(tsq @ ((2.0 * np.arange(nmax + 1) + 1.0) * diag))
        b_num += pm * float(tsq @ (amp0 ** 2 + 3.0 * amp1 ** 2).sum(axis=1))
        cross = (amp0[:-1] * amp1[1:]).sum(axis=1)
        c_num += pm * 2.0 * float(
            (tn[:-1] * tn[1:] * np.sqrt(np.arange(1, nmax + 1))) @ cross)

    a = a_num / p_total
    b = b_num / p_total
    c = c_num / p_total
    return a, b, c, 2.0 * p_total


def oracle_cm_dense(delta: float, chan: ChannelParams, qs: QSParams,
                    cutoff: int) -> tuple[float, float, float, float]:
    """Same triplet via the generic five-mode evolution; small cutoffs only."""
    state = build_input("tmsv", noise_nbar=chan.eps / 2.0, cutoff=cutoff,
                        delta=delta)
    circuit = ModeTransform.scissor_circuit(chan.transmittance, qs.mu,
                                            n_modes=5, offset=1)
    state = apply_interferometer(state, circuit)
    kept, prob = project_success(state, 1, 2)
    if kept is None:
        return 1.0, 1.0, 0.0, 0.0
    a = quad_second_moment(kept, 0, 0)
    b = quad_second_moment(kept, 1, 1)
    c = quad_second_moment(kept, 0, 1)
    return a, b, c, 2.0 * prob

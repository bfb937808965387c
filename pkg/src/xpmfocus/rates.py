"""Achievable rates for ring constellations.

Analytic side: the one-ring output density, its entropy lower bound, the
phase contribution of a ladder and the Fano bound on the amplitude part.
Monte Carlo side: I(X;Y) for a ring mixture, split into the amplitude part
I(X_A;Y) and the phase part, with and without residual cross-phase offsets.
All rates are in bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate

from . import rng
from .constellation import RingConstellation
from .detection import _draw_symbols, pe_exact
from .model import TWO_PI, reduce_2pi
from .specfun import gamma0, i0e

LOG2E = 1.0 / math.log(2.0)
LOG_CONST = 8.0 / (math.pi * math.e ** 2)  # P/N at which the loosened one-ring bound is 0: 1/LOG_CONST

# rings whose radius is further than this many per-component sigmas from |y| are skipped
PRUNE_SIGMAS = 12.0
MI_BATCHES = 50


def _log_ring_density(yabs, r, N: float):
    """log of (1/(pi N)) exp(-(y^2+P)/N) I0(2 y sqrt(P)/N) in scaled form."""
    yabs = np.asarray(yabs, dtype=float)
    r = np.asarray(r, dtype=float)
    return -math.log(math.pi * N) - (yabs - r) ** 2 / N + np.log(i0e(2.0 * yabs * r / N))


def one_ring_density(y_abs, P: float, N: float):
    """Density of Y = sqrt(P) e^{i Phi} + Z at any point of modulus ``y_abs``."""
    if not N > 0:
        raise ValueError("N must be positive")
    out = np.exp(_log_ring_density(y_abs, math.sqrt(P), N))
    return float(out) if np.ndim(out) == 0 else out


def one_ring_rate_lb(P: float, N: float, loosened: bool = False) -> float:
    """1/2 log2(8 P / (pi e^2 N)) + (log2 e / 4) Gamma(0, P/N); drop the Gamma term if ``loosened``."""
    if not (P > 0 and N > 0):
        raise ValueError("P and N must be positive")
    base = 0.5 * math.log2(LOG_CONST * P / N)
    if loosened:
        return base
    return base + 0.25 * LOG2E * gamma0(P / N)


def phase_contribution_lb(constellation: RingConstellation, N: float) -> float:
    return sum(one_ring_rate_lb(P, N, loosened=True) for P in constellation.powers) / constellation.J


def phase_sum_integral_bound(constellation: RingConstellation, N: float) -> tuple[float, float]:
    """(sum_j log2(P_j/N), J (ln(P_J/N) - 2) log2 e).

    For a ladder P_j = a j^2 p0 the first is at least the second, since log is
    increasing and the sum dominates the integral over [0, J].
    """
    J = constellation.J
    lhs = sum(math.log2(P / N) for P in constellation.powers)
    rhs = J * (math.log(constellation.powers[-1] / N) - 2.0) * LOG2E
    return lhs, rhs


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def amplitude_contribution_lb(J: int, pe: float) -> float:
    """log2 J - H2(pe) - pe log2(J-1), floored at 0 (Fano)."""
    if not 0.0 <= pe <= 1.0:
        raise ValueError("pe must lie in [0, 1]")
    if J < 1:
        raise ValueError("J must be >= 1")
    if J == 1:
        return 0.0
    return max(0.0, math.log2(J) - binary_entropy(pe) - pe * math.log2(max(J - 1, 1)))


def total_rate_lb(constellation: RingConstellation, N: float) -> float:
    return (phase_contribution_lb(constellation, N)
            + amplitude_contribution_lb(constellation.J, pe_exact(constellation, N)))


# --- closed forms and quadratures for the one-ring entropy chain --------------------------

def expected_log_amplitude(P: float, N: float) -> float:
    """E[log2(|Y| sqrt(2/N))] = (log2 e / 2) [Gamma(0, P/N) + ln(2P/N)]."""
    return 0.5 * LOG2E * (gamma0(P / N) + math.log(2.0 * P / N))


def _radial_quad(f, P: float, N: float) -> float:
    s = math.sqrt(N / 2.0)
    r = math.sqrt(P)
    lo, hi = max(0.0, r - 40.0 * s), r + 40.0 * s
    pts = [p for p in (r - 5 * s, r, r + 5 * s) if lo < p < hi]
    val, _ = integrate.quad(f, lo, hi, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def expected_log_amplitude_quad(P: float, N: float) -> float:
    def f(y):
        if y <= 0.0:
            return 0.0
        return 2.0 * math.pi * y * math.exp(_log_ring_density(y, math.sqrt(P), N)) \
            * math.log2(y * math.sqrt(2.0 / N))
    return _radial_quad(f, P, N)


def output_entropy_quad(P: float, N: float) -> float:
    """h(Y) in bits for one ring, by radial quadrature of -p log2 p."""
    def f(y):
        lp = float(_log_ring_density(y, math.sqrt(P), N))
        return -2.0 * math.pi * y * math.exp(lp) * lp * LOG2E
    return _radial_quad(f, P, N)


def output_entropy_lb(P: float, N: float) -> float:
    """1/4 log2(32 pi^2 P N^3) + 1/2 E[log2(|Y| sqrt(2/N))], from the I0 bound."""
    return 0.25 * math.log2(32.0 * math.pi ** 2 * P * N ** 3) + 0.5 * expected_log_amplitude(P, N)


def ring_density_mass(P: float, N: float) -> float:
    return _radial_quad(lambda y: 2.0 * math.pi * y * float(one_ring_density(y, P, N)), P, N)


# --- Monte Carlo mutual information -------------------------------------------------------

@dataclass(frozen=True)
class InterferenceLaw:
    """Residual cross-phase offsets seen by a receiver, with their probabilities.

    The receiver knows this law but not the realisation.  A single offset
    (in particular the focused law, offset 0) costs nothing.
    """

    offsets: tuple[float, ...] = (0.0,)
    probs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if len(self.offsets) != len(self.probs) or not self.offsets:
            raise ValueError("offsets and probs must be non-empty and equally long")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-12):
            raise ValueError("probabilities must be non-negative and sum to 1")

    @classmethod
    def focused(cls) -> "InterferenceLaw":
        return cls()

    @classmethod
    def uniform(cls, offsets: Sequence[float]) -> "InterferenceLaw":
        n = len(offsets)
        return cls(tuple(float(o) for o in offsets), (1.0 / n,) * n)

    @classmethod
    def from_partner(cls, partner: RingConstellation, h: Fraction | float, unit: float = 1.0
                     ) -> "InterferenceLaw":
        """Offsets h * P_j mod 2*pi induced by an interferer's rings (equiprobable)."""
        acc: dict[float, float] = {}
        for j, P in enumerate(partner.powers):
            if partner.turns is not None and isinstance(h, Fraction):
                t = h * partner.turns[j]
                off = TWO_PI * float(t - math.floor(t))
            else:
                off = reduce_2pi(float(h) * unit * P)
            off = round(off, 12)
            acc[off] = acc.get(off, 0.0) + 1.0 / partner.J
        keys = sorted(acc)
        total = sum(acc.values())
        return cls(tuple(keys), tuple(acc[k] / total for k in keys))

    @property
    def trivial(self) -> bool:
        return len(self.offsets) == 1

    @property
    def label(self) -> str:
        return "focused" if self.trivial else f"{len(self.offsets)} offsets"


@dataclass(frozen=True)
class MIEstimate:
    bits_per_symbol: float
    std_error: float
    amplitude_bits: float
    amplitude_se: float
    phase_bits: float
    phase_se: float
    samples: int

    def to_json(self) -> dict:
        return asdict(self)


def _batch_mean(v: np.ndarray, batches: int = MI_BATCHES) -> tuple[float, float]:
    parts = np.array_split(v, batches)
    means = np.array([p.mean() for p in parts])
    return float(v.mean()), float(means.std(ddof=1) / math.sqrt(batches))


def _component_points(c: RingConstellation, law: InterferenceLaw):
    """(phase, weight) pairs of the Gaussian components of one PSK ring."""
    phases, weights = [], []
    for m in range(c.psk):
        for off, w in zip(law.offsets, law.probs):
            phases.append(TWO_PI * m / c.psk + off)
            weights.append(w / c.psk)
    return np.array(phases), np.log(np.array(weights))


def _log_gauss(y: np.ndarray, mu: np.ndarray, N: float) -> np.ndarray:
    return -math.log(math.pi * N) - np.abs(y - mu) ** 2 / N


def _log_ring_conditional(y, ring_idx, c: RingConstellation, radii, N, comp):
    """log f_j(y): density of Y given ring j, phase and offset marginalised."""
    if c.psk is None:
        return _log_ring_density(np.abs(y), radii[ring_idx], N)
    phases, logw = comp
    acc = np.full(y.shape, -np.inf)
    for ph, lw in zip(phases, logw):
        acc = np.logaddexp(acc, lw + _log_gauss(y, radii[ring_idx] * np.exp(1j * ph), N))
    return acc


def _log_mixture(y, true_ring, c: RingConstellation, radii, N, comp):
    """log p(y) = log (1/J) sum_j f_j(y), skipping rings far from |y|."""
    yabs = np.abs(y)
    w = PRUNE_SIGMAS * math.sqrt(N / 2.0)
    lo = np.minimum(np.searchsorted(radii, yabs - w, side="left"), true_ring)
    hi = np.maximum(np.searchsorted(radii, yabs + w, side="right"), true_ring + 1)
    width = int(np.max(hi - lo))
    acc = np.full(y.shape, -np.inf)
    for o in range(width):
        idx = lo + o
        valid = idx < hi
        v = _log_ring_conditional(y, np.minimum(idx, c.J - 1), c, radii, N, comp)
        acc = np.logaddexp(acc, np.where(valid, v, -np.inf))
    return acc - math.log(c.J)


def mi_monte_carlo(constellation: RingConstellation, N: float,
                   interference: InterferenceLaw | None = None, samples: int = 100_000,
                   seed: int = 0, threads: int = 1) -> MIEstimate:
    """Monte Carlo I(X;Y) with amplitude/phase split and batch-means standard errors.

    The receiver undoes its own SPM rotation, so only the ring mixture and the
    residual cross-phase law matter.  With a trivial law h(Y|X) = log2(pi e N)
    is used exactly; otherwise E[log p(Y|X) - log p(Y)] is averaged.
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    if not N > 0:
        raise ValueError("N must be positive")
    law = interference or InterferenceLaw.focused()
    c = constellation
    radii = np.sqrt(np.asarray(c.powers))
    comp = _component_points(c, law) if c.psk is not None else None
    offsets = np.asarray(law.offsets)
    probs = np.asarray(law.probs)
    h_cond = math.log2(math.pi * math.e * N)
    sizes = rng.chunk_sizes(samples)

    def work(i: int):
        g = rng.stream(seed, rng.MI_MC, i)
        n = sizes[i]
        ring, _, x = _draw_symbols(g, c, n)
        # a known constant rotation is undone by the receiver, so it is never applied
        theta = offsets[g.choice(len(offsets), size=n, p=probs)] if not law.trivial else 0.0
        z = g.standard_normal((n, 2)) * math.sqrt(N / 2.0)
        y = x * np.exp(1j * theta) + z[:, 0] + 1j * z[:, 1]
        log_p = _log_mixture(y, ring, c, radii, N, comp)
        log_true = _log_ring_conditional(y, ring, c, radii, N, comp)
        if law.trivial:
            total = -log_p * LOG2E - h_cond
        else:
            log_cond = np.full(n, -np.inf)
            for off, w in zip(offsets, probs):
                log_cond = np.logaddexp(log_cond, math.log(w) + _log_gauss(y, x * np.exp(1j * off), N))
            total = (log_cond - log_p) * LOG2E
        amp = (log_true - log_p) * LOG2E
        return total, amp

    parts = rng.map_ordered(work, len(sizes), threads)
    total = np.concatenate([p[0] for p in parts])
    amp = np.concatenate([p[1] for p in parts])
    t, t_se = _batch_mean(total)
    a, a_se = _batch_mean(amp)
    ph, ph_se = _batch_mean(total - amp)
    return MIEstimate(t, t_se, a, a_se, ph, ph_se, samples)

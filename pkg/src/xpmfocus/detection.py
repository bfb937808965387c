"""Minimum-distance ring detection and its error probability.

Conditioned on ring j, |Y| is Ricean with amplitude sqrt(P_j) and per-component
variance N/2, so threshold crossings are Marcum-Q values at arguments scaled by
sqrt(N/2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binomtest

from . import rng
from .constellation import RingConstellation
from .specfun import marcum_q, marcum_q_complement


def _midpoints(c: RingConstellation) -> np.ndarray:
    r = np.sqrt(np.asarray(c.powers))
    return 0.5 * (r[:-1] + r[1:])


def detect_ring(y, constellation: RingConstellation):
    """Index j (1-based) of the ring whose radius is closest to |y|.

    Exact midpoints go to the inner ring.  Works elementwise on arrays.
    """
    idx = np.searchsorted(_midpoints(constellation), np.abs(y), side="left") + 1
    return int(idx) if np.ndim(idx) == 0 else idx


def deltas(constellation: RingConstellation, N: float) -> np.ndarray:
    """Normalised radius gaps (sqrt(P_j) - sqrt(P_{j-1})) / sqrt(N), j = 2..J."""
    r = np.sqrt(np.asarray(constellation.powers))
    return np.diff(r) / math.sqrt(N)


def pe_bound(constellation: RingConstellation, N: float) -> float:
    """(2/J) sum_{j>=2} exp(-Delta_j^2 / 4)."""
    if not N > 0:
        raise ValueError("N must be positive")
    d = deltas(constellation, N)
    return float(2.0 / constellation.J * np.sum(np.exp(-d * d / 4.0)))


def pe_bound_uniform(J: int, a: int, p0: float, N: float) -> float:
    """Closed form of :func:`pe_bound` for the ladder a j^2 p0."""
    return 2.0 * (J - 1) / J * math.exp(-a * p0 / (4.0 * N))


def ring_error_probabilities(constellation: RingConstellation, N: float) -> np.ndarray:
    """P(detected ring != j | ring j) for every j."""
    if not N > 0:
        raise ValueError("N must be positive")
    J = constellation.J
    if J == 1:
        return np.zeros(1)
    s = math.sqrt(N / 2.0)
    r = np.sqrt(np.asarray(constellation.powers))
    mids = 0.5 * (r[:-1] + r[1:])
    pej = np.zeros(J)
    for j in range(J):
        a = r[j] / s
        if j > 0:
            pej[j] += marcum_q_complement(a, mids[j - 1] / s)  # |Y| below the lower threshold
        if j < J - 1:
            pej[j] += marcum_q(a, mids[j] / s)  # |Y| above the upper threshold
    return pej


def pe_exact(constellation: RingConstellation, N: float) -> float:
    return float(np.mean(ring_error_probabilities(constellation, N)))


@dataclass(frozen=True)
class PeEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    errors: int
    samples: int

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _draw_symbols(g: np.random.Generator, c: RingConstellation, n: int):
    ring = g.integers(0, c.J, size=n)
    if c.psk is None:
        phase = g.uniform(0.0, 2.0 * math.pi, size=n)
    else:
        phase = 2.0 * math.pi * g.integers(0, c.psk, size=n) / c.psk
    x = np.sqrt(np.asarray(c.powers))[ring] * np.exp(1j * phase)
    return ring, phase, x


def pe_monte_carlo(constellation: RingConstellation, N: float, samples: int, seed: int,
                   threads: int = 1) -> PeEstimate:
    """Empirical error rate of :func:`detect_ring` with a Wilson 95% interval."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    sizes = rng.chunk_sizes(samples)
    mids = _midpoints(constellation)

    def work(i: int) -> int:
        g = rng.stream(seed, rng.PE_MC, i)
        ring, _, x = _draw_symbols(g, constellation, sizes[i])
        noise = g.standard_normal((sizes[i], 2)) * math.sqrt(N / 2.0)
        y = x + noise[:, 0] + 1j * noise[:, 1]
        return int(np.count_nonzero(np.searchsorted(mids, np.abs(y), side="left") != ring))

    errors = sum(rng.map_ordered(work, len(sizes), threads))
    ci = binomtest(errors, samples).proportion_ci(confidence_level=0.95, method="wilson")
    return PeEstimate(errors / samples, float(ci.low), float(ci.high), errors, samples)


@dataclass(frozen=True)
class PeReport:
    pe_bound: float
    pe_exact: float
    pe_mc: float
    mc_halfwidth: float
    mc_ci_low: float
    mc_ci_high: float
    samples: int
    deltas: list[float]

    def to_json(self) -> dict:
        return asdict(self)

    CSV_HEADER = ("pe_bound", "pe_exact", "pe_mc", "mc_halfwidth", "mc_ci_low", "mc_ci_high", "samples")

    def csv_row(self) -> list:
        return [repr(getattr(self, k)) if isinstance(getattr(self, k), float) else getattr(self, k)
                for k in self.CSV_HEADER]


def pe_report(constellation: RingConstellation, N: float, samples: int, seed: int,
              threads: int = 1) -> PeReport:
    mc = pe_monte_carlo(constellation, N, samples, seed, threads)
    return PeReport(pe_bound(constellation, N), pe_exact(constellation, N), mc.estimate,
                    mc.halfwidth, mc.ci_low, mc.ci_high, samples,
                    [float(d) for d in deltas(constellation, N)])

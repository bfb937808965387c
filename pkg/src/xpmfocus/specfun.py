"""Special functions used by the ring densities and error probabilities.

Everything here is pure and reentrant.  The Bessel function is evaluated in
exponentially scaled form because the ring-mixture densities need I0 at
arguments of order 2*sqrt(P_j * P)/N, which overflow long before the
interesting SNRs are reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061

# series below, asymptotic expansion above; both agree to ~1e-13 at the switch
I0_SERIES_MAX = 15.0

# the Poisson-mixture series for Q(a,b) is used while max(a, b)^2 / 2 stays below this
MARCUM_SERIES_MAX_MU = 2000.0


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class BoundCheckRow:
    """One evaluation of an analytic bound against the exact value."""

    argument: tuple[float, ...]
    exact_value: float
    bound_value: float
    direction: str  # "upper" means bound >= exact, "lower" means bound <= exact
    satisfied: bool

    @property
    def margin(self) -> float:
        if self.direction == "upper":
            return self.bound_value - self.exact_value
        return self.exact_value - self.bound_value


def _check_nonneg(z: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(z)):
        raise DomainError(f"{name} must be finite")
    if np.any(z < 0):
        raise DomainError(f"{name} must be >= 0")


def _i0e_series(z: np.ndarray) -> np.ndarray:
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    k = 1
    while True:
        term = term * q / (k * k)
        total += term
        if np.all(term <= 1e-17 * total):
            break
        k += 1
    return total * np.exp(-z)


def _i0e_asymptotic(z: np.ndarray) -> np.ndarray:
    # I0(z) e^-z ~ (2 pi z)^-1/2 * sum_k ((2k-1)!!)^2 / (k! (8z)^k), all terms positive;
    # each element stops at its smallest term (the expansion diverges beyond k ~ 2z)
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        ratio = (2 * k - 1) ** 2 / (8.0 * k * z)
        active &= ratio < 1.0
        term = np.where(active, term * ratio, 0.0)
        total += term
        if not np.any(active & (term > 1e-17 * total)):
            break
    return total / np.sqrt(2.0 * np.pi * z)


def i0e(z):
    """Exponentially scaled modified Bessel function e^-z I0(z) for z >= 0.

    Accepts scalars or arrays; never overflows.
    """
    arr = np.asarray(z, dtype=float)
    _check_nonneg(arr, "z")
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    small = flat < I0_SERIES_MAX
    if np.any(small):
        out[small] = _i0e_series(flat[small])
    if np.any(~small):
        out[~small] = _i0e_asymptotic(flat[~small])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def log_i0e(z):
    """log(e^-z I0(z)), vectorised."""
    return np.log(i0e(z))


def i0_upper_bound(z: float) -> float:
    """The bound I0(z) <= (sqrt(pi)/2) e^z / sqrt(z); inf once e^z overflows."""
    if not z > 0 or not math.isfinite(z):
        raise DomainError("bound defined for finite z > 0")
    try:
        return 0.5 * math.sqrt(math.pi) * math.exp(z) / math.sqrt(z)
    except OverflowError:
        return math.inf


def i0_upper_bound_scaled(z):
    """Same bound divided by e^z, to compare against :func:`i0e`."""
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("bound defined for finite z > 0")
    out = 0.5 * np.sqrt(np.pi) / np.sqrt(arr)
    return float(out) if out.ndim == 0 else out


def lemma_check(z: float) -> BoundCheckRow:
    exact = i0e(z)
    bound = i0_upper_bound_scaled(z)
    return BoundCheckRow((z,), exact, bound, "upper", bound > exact)


def gamma0(x: float) -> float:
    """Upper incomplete gamma Gamma(0, x) = E1(x) for x > 0.

    Power series below 1, modified Lentz continued fraction above.
    """
    if not math.isfinite(x) or x <= 0:
        raise DomainError("Gamma(0, x) needs finite x > 0")
    if x < 1.0:
        total = 0.0
        term = 1.0
        for k in range(1, 200):
            term *= -x / k
            piece = -term / k
            total += piece
            if abs(piece) < 1e-17 * abs(total):
                break
        return -EULER_GAMMA - math.log(x) + total
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def gaussian_q(z: float) -> float:
    """Gaussian tail probability Q(z) = P(N(0,1) > z)."""
    if not math.isfinite(z):
        raise DomainError("gaussian_q needs a finite argument")
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _poisson_window(mu: float, width: float = 14.0) -> tuple[int, int]:
    lo = max(0, int(math.floor(mu - width * math.sqrt(mu) - 40)))
    hi = int(math.ceil(mu + width * math.sqrt(mu) + 40))
    return lo, hi


_LOG_FACT = np.zeros(1)


def _log_factorials(n: int) -> np.ndarray:
    """log(k!) for k = 0..n, from a growing module-level table."""
    global _LOG_FACT
    if len(_LOG_FACT) <= n:
        size = max(n + 1, 2 * len(_LOG_FACT))
        _LOG_FACT = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, size, dtype=float)))])
    return _LOG_FACT[: n + 1]


def _marcum_series(a: float, b: float) -> tuple[float, float]:
    # Q(a,b) = sum_n Pois(n; a^2/2) P(Pois(b^2/2) <= n): the Bessel series of
    # Q written with scaled (Poisson) weights, all terms positive.  The
    # complement is summed separately so both tails keep relative accuracy.
    mu_a, mu_b = 0.5 * a * a, 0.5 * b * b
    _, hi = _poisson_window(max(mu_a, mu_b))
    n = np.arange(hi + 1, dtype=float)
    lgam = _log_factorials(hi)
    wa = np.exp(n * math.log(mu_a) - mu_a - lgam)
    pb = np.exp(n * math.log(mu_b) - mu_b - lgam)
    cdf_b = np.cumsum(pb)
    sf_b = np.concatenate([np.cumsum(pb[::-1])[::-1][1:], [0.0]])
    q = float(np.sum(wa * cdf_b))
    c = float(np.sum(wa * sf_b))
    s = q + c
    return q / s, c / s


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _rice_integral(a: float, lo: float, hi: float, panel: float = 0.5) -> float:
    """Integral of the unit-scale Rice(a) density over [lo, hi], composite Gauss-Legendre."""
    if hi <= lo:
        return 0.0
    m = max(1, int(math.ceil((hi - lo) / panel)))
    edges = np.linspace(lo, hi, m + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).reshape(-1)
    f = x * np.exp(-0.5 * (x - a) ** 2) * i0e(a * x)
    return float(np.sum(f.reshape(m, -1) * _GL_W[None, :] * half[:, None]))


def _marcum_quadrature(a: float, b: float) -> tuple[float, float]:
    # large arguments: the Rice(a) density is concentrated on [a-40, a+40]
    lo, hi = max(0.0, a - 40.0), a + 40.0
    if b <= lo:
        return 1.0, _rice_integral(a, lo, max(b, lo))
    if b >= hi:
        return _rice_integral(a, b, b + 40.0), 1.0
    q = _rice_integral(a, b, hi)
    c = _rice_integral(a, lo, b)
    s = q + c
    return q / s, c / s


def marcum_pair(a: float, b: float) -> tuple[float, float]:
    """Return (Q(a,b), 1 - Q(a,b)), each computed without cancellation."""
    if not (math.isfinite(a) and math.isfinite(b)) or a < 0 or b < 0:
        raise DomainError("Marcum Q needs finite a, b >= 0")
    if 0.5 * b * b == 0.0:
        return 1.0, 0.0
    if 0.5 * a * a == 0.0:
        return math.exp(-0.5 * b * b), -math.expm1(-0.5 * b * b)
    if 0.5 * max(a, b) ** 2 <= MARCUM_SERIES_MAX_MU:
        return _marcum_series(a, b)
    return _marcum_quadrature(a, b)


def marcum_q(a: float, b: float) -> float:
    """First-order Marcum Q-function: P(Rice(a, sigma=1) >= b)."""
    return min(1.0, max(0.0, marcum_pair(a, b)[0]))


def marcum_q_complement(a: float, b: float) -> float:
    """1 - Q(a, b), accurate when Q is close to 1."""
    return min(1.0, max(0.0, marcum_pair(a, b)[1]))


def marcum_q_bounds(a: float, b: float) -> tuple[float, float]:
    """(lower, upper) exponential bounds on Q(a, b).

    For b > a only the upper bound exp(-(b-a)^2/2) is available; for b < a
    only the lower bound 1 - [exp(-(a-b)^2/2) - exp(-(a+b)^2/2)]/2.  The other
    side is the trivial 0 or 1.
    """
    if b > a:
        return 0.0, math.exp(-0.5 * (b - a) ** 2)
    if b < a:
        return 1.0 - 0.5 * (math.exp(-0.5 * (a - b) ** 2) - math.exp(-0.5 * (a + b) ** 2)), 1.0
    return 0.0, 1.0


def marcum_complement_upper(a: float, b: float) -> float:
    """Loosened bound 1 - Q(a,b) <= exp(-(a-b)^2/2), valid for b < a."""
    if b >= a:
        return 1.0
    return math.exp(-0.5 * (a - b) ** 2)

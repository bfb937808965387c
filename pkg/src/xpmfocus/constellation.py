"""Interference-focusing ring constellations.

A user's ring powers are integer multiples of a base power p0 chosen so that
every cross-phase term it causes, h_lk * P, is an exact multiple of 2*pi.
Rings follow the uniform-amplitude ladder P_j = a j^2 p0, j = 1..J.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .model import TWO_PI, ChannelMatrix, UnsupportedCoefficient, reduce_2pi

log = logging.getLogger(__name__)


class InfeasibleBudget(ValueError):
    """The power budget cannot hold even one focused ring."""


@dataclass(frozen=True)
class PowerBudget:
    P: float
    N: float

    def __post_init__(self):
        if not (self.P > 0 and self.N > 0):
            raise ValueError("P and N must be positive")

    @property
    def snr(self) -> float:
        return self.P / self.N


@dataclass(frozen=True)
class RingConstellation:
    """Rings of power ``powers[j]`` used with equal probability.

    ``turns[j]`` (optional) is the exact power in units of 2*pi/unit, which lets
    focusing be verified in rational arithmetic.  ``psk`` is None for a phase
    uniform on [0, 2*pi), or M for M-PSK on every ring.
    """

    powers: tuple[float, ...]
    turns: tuple[Fraction, ...] | None = None
    user: int = 0
    p0: float | None = None
    a: int | None = None
    unit: float = 1.0
    psk: int | None = None

    def __post_init__(self):
        if not self.powers:
            raise ValueError("need at least one ring")
        if any(not math.isfinite(p) or p < 0 for p in self.powers):
            raise ValueError("ring powers must be finite and >= 0")
        if any(q <= p for p, q in zip(self.powers, self.powers[1:])):
            raise ValueError("ring powers must be strictly increasing")
        if self.psk is not None and self.psk < 1:
            raise ValueError("PSK order must be >= 1")

    @property
    def J(self) -> int:
        return len(self.powers)

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(math.sqrt(p) for p in self.powers)

    @property
    def occupancy(self) -> tuple[float, ...]:
        return (1.0 / self.J,) * self.J

    @property
    def mean_power(self) -> float:
        return sum(self.powers) / self.J

    @classmethod
    def ladder(cls, J: int, a: int, base_turns: int = 1, unit: float = 1.0, user: int = 0,
               psk: int | None = None) -> "RingConstellation":
        """P_j = a j^2 p0 with p0 = 2*pi*base_turns/unit."""
        if J < 1 or a < 1 or base_turns < 1:
            raise ValueError("J, a and base_turns must be positive integers")
        p0 = TWO_PI * base_turns / unit
        turns = tuple(Fraction(a * j * j * base_turns) for j in range(1, J + 1))
        powers = tuple(a * j * j * p0 for j in range(1, J + 1))
        return cls(powers, turns, user, p0, a, unit, psk)

    @classmethod
    def from_powers(cls, powers: Sequence[float], psk: int | None = None) -> "RingConstellation":
        return cls(tuple(float(p) for p in powers), psk=psk)

    def to_json(self) -> dict:
        return {
            "user": self.user,
            "p0": self.p0,
            "a": self.a,
            "J": self.J,
            "powers": list(self.powers),
            "phase_law": "uniform" if self.psk is None else {"psk": self.psk},
        }


class BasePower(NamedTuple):
    p0: float
    multiplier: int
    interference_free: bool


def base_power_for_user(H: ChannelMatrix, k: int) -> BasePower:
    """Smallest power p0 = 2*pi*L/unit with h_lk * m * p0 in 2*pi*Z for every l != k.

    L is the lcm of the reduced denominators of user k's outgoing coefficients
    (column k of the matrix).
    """
    if not 0 <= k < H.K:
        raise IndexError(f"user {k} out of range for K={H.K}")
    column = [H.xpm[l][k] for l in range(H.K) if l != k]
    for h in column:
        if not isinstance(h, Fraction):
            raise UnsupportedCoefficient(f"coefficient {h!r} is not rational")
    dens = [h.denominator for h in column if h != 0]
    if not dens:
        log.info("user %d causes no cross-phase interference; using p0 = 2*pi/unit", k)
        return BasePower(TWO_PI / H.unit, 1, True)
    L = math.lcm(*dens)
    return BasePower(TWO_PI * L / H.unit, L, False)


def choose_spacing_a(budget: PowerBudget, p0: float, c_a: float = 4.0) -> int:
    """a = max(1, round(c_a (N/p0) ln(P/N))), so a p0 / N grows like ln(SNR)."""
    if budget.snr <= 1.0:
        raise InfeasibleBudget(f"SNR must exceed 1, got {budget.snr}")
    if not c_a > 0:
        raise ValueError("c_a must be positive")
    x = c_a * (budget.N / p0) * math.log(budget.snr)
    return max(1, int(math.floor(x + 0.5)))


def _ladder_mean(J: int, a: int, p0: float) -> float:
    return a * p0 * (J + 1) * (2 * J + 1) / 6.0


def choose_ring_count(budget: PowerBudget, a: int, p0: float) -> int:
    """Largest J with (1/J) sum_j a j^2 p0 <= P."""
    unit = a * p0
    if budget.P < unit:
        raise InfeasibleBudget(f"budget P={budget.P:g} is below one ring of power a*p0={unit:g}")
    J = max(1, int(math.floor((-3.0 + math.sqrt(1.0 + 48.0 * budget.P / unit)) / 4.0)))
    # guard the closed form against rounding at exact boundaries
    while _ladder_mean(J + 1, a, p0) <= budget.P:
        J += 1
    while J > 1 and _ladder_mean(J, a, p0) > budget.P:
        J -= 1
    return J


def design_focused(H: ChannelMatrix, budgets: Sequence[PowerBudget], c_a: float = 4.0,
                   psk: int | None = None) -> list[RingConstellation]:
    if len(budgets) != H.K:
        raise ValueError(f"need {H.K} budgets, got {len(budgets)}")
    out = []
    for k, budget in enumerate(budgets):
        base = base_power_for_user(H, k)
        a = choose_spacing_a(budget, base.p0, c_a)
        J = choose_ring_count(budget, a, base.p0)
        out.append(RingConstellation.ladder(J, a, base.multiplier, H.unit, user=k, psk=psk))
    return out


@dataclass(frozen=True)
class ResidualRow:
    receiver: int
    interferer: int
    ring: int  # 1-based
    exact_turns: Fraction | None  # residual in units of 2*pi, in [0, 1)
    residual: float  # radians, from the exact path when available
    float_residual: float  # radians, from floating-point h * P


@dataclass(frozen=True)
class FocusingReport:
    rows: tuple[ResidualRow, ...]

    @property
    def max_residual(self) -> float:
        # distance to the nearest multiple of 2*pi
        return max((min(r.residual, TWO_PI - r.residual) for r in self.rows), default=0.0)

    @property
    def exact(self) -> bool:
        return all(r.exact_turns is not None for r in self.rows)

    @property
    def focused(self) -> bool:
        if self.exact:
            return all(r.exact_turns == 0 for r in self.rows)
        return self.max_residual < 1e-9

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "focused": self.focused,
            "rows": [{
                "receiver": r.receiver, "interferer": r.interferer, "ring": r.ring,
                "exact_turns": None if r.exact_turns is None else str(r.exact_turns),
                "residual": r.residual, "float_residual": r.float_residual,
            } for r in self.rows],
        }


def verify_focusing(constellations: Sequence[RingConstellation], H: ChannelMatrix) -> FocusingReport:
    """Residual h_kl * P mod 2*pi for every receiver k, interferer l != k and ring of user l."""
    if len(constellations) != H.K:
        raise ValueError(f"need {H.K} constellations, got {len(constellations)}")
    rows = []
    for k in range(H.K):
        for l, c in enumerate(constellations):
            if l == k:
                continue
            h = H.xpm[k][l]
            for j, P in enumerate(c.powers):
                fl = reduce_2pi(H.coefficient(k, l) * P)
                exact = None
                res = fl
                if c.turns is not None and math.isclose(c.unit, H.unit):
                    t = h * c.turns[j]
                    exact = t - math.floor(t)
                    res = TWO_PI * float(exact)
                rows.append(ResidualRow(k, l, j + 1, exact, res, fl))
    return FocusingReport(tuple(rows))

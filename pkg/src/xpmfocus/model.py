"""Memoryless K-user channel with self- and cross-phase modulation.

Receiver k sees ``y_k = x_k exp(i psi_k) + z_k`` with
``psi_k = sum_l h_kl |x_l|^2``.  Cross-phase coefficients are kept as exact
fractions times a real unit ``U`` so focusing can be checked without rounding.
Noise is circularly symmetric with E|z|^2 = N (N/2 per real component).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng

TWO_PI = 2.0 * math.pi
# 2*pi to 40 digits, for exact argument reduction of large floating phases
TWO_PI_EXACT = Fraction(Decimal("6.283185307179586476925286766559005768394"))


class UnsupportedCoefficient(ValueError):
    """A cross-phase coefficient that is not an exact non-negative rational."""


def reduce_2pi(x: float) -> float:
    """x mod 2*pi in [0, 2*pi), reduced in exact arithmetic."""
    r = Fraction(x) % TWO_PI_EXACT
    out = float(r)
    return 0.0 if out >= TWO_PI else out


def _as_fraction(entry) -> Fraction:
    if isinstance(entry, Fraction):
        value = entry
    elif isinstance(entry, bool):
        raise UnsupportedCoefficient(f"not a coefficient: {entry!r}")
    elif isinstance(entry, int):
        value = Fraction(entry)
    elif isinstance(entry, dict):
        try:
            num, den = entry["num"], entry["den"]
        except KeyError as exc:
            raise UnsupportedCoefficient(f"rational entry needs num and den: {entry!r}") from exc
        if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
            raise UnsupportedCoefficient(f"num/den must be integers: {entry!r}")
        if den <= 0:
            raise UnsupportedCoefficient(f"den must be positive: {entry!r}")
        value = Fraction(num, den)
    elif isinstance(entry, str):
        try:
            value = Fraction(entry)
        except ValueError as exc:
            raise UnsupportedCoefficient(f"cannot parse {entry!r} as a rational") from exc
    else:
        raise UnsupportedCoefficient(
            f"cross-phase coefficients must be exact rationals, got {entry!r}")
    if value < 0:
        raise UnsupportedCoefficient(f"coefficients must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class ChannelMatrix:
    """K x K phase-shift coefficients.

    ``spm[k]`` is h_kk (real).  ``xpm[k][l]`` for l != k is the reduced
    fraction with h_kl = xpm[k][l] * unit; diagonal entries of ``xpm`` are 0.
    """

    spm: tuple[float, ...]
    xpm: tuple[tuple[Fraction, ...], ...]
    unit: float = 1.0

    def __post_init__(self):
        K = len(self.spm)
        if K < 1:
            raise ValueError("need at least one user")
        if len(self.xpm) != K or any(len(row) != K for row in self.xpm):
            raise ValueError("xpm must be K x K")
        if not self.unit > 0:
            raise ValueError("unit must be positive")
        if any(not math.isfinite(h) or h < 0 for h in self.spm):
            raise ValueError("SPM coefficients must be finite and >= 0")
        rows = []
        for k, row in enumerate(self.xpm):
            vals = tuple(Fraction(0) if k == l else _as_fraction(v) for l, v in enumerate(row))
            rows.append(vals)
        object.__setattr__(self, "xpm", tuple(rows))
        object.__setattr__(self, "spm", tuple(float(h) for h in self.spm))

    @property
    def K(self) -> int:
        return len(self.spm)

    @classmethod
    def from_fractions(cls, spm: Sequence[float], xpm, unit: float = 1.0) -> "ChannelMatrix":
        return cls(tuple(spm), tuple(tuple(row) for row in xpm), unit)

    def coefficient(self, k: int, l: int) -> float:
        if k == l:
            return self.spm[k]
        return float(self.xpm[k][l]) * self.unit

    def as_array(self) -> np.ndarray:
        return np.array([[self.coefficient(k, l) for l in range(self.K)] for k in range(self.K)])

    def spm_matrix(self) -> np.ndarray:
        return np.diag(self.spm)

    def xpm_matrix(self) -> np.ndarray:
        return self.as_array() - self.spm_matrix()

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "unit": self.unit,
            "spm": list(self.spm),
            "xpm": [[{"num": v.numerator, "den": v.denominator} for v in row] for row in self.xpm],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ChannelMatrix":
        """Parse ``{"K", "unit", "spm", "xpm"}``.

        ``xpm`` rows may have K entries (diagonal ignored, must be 0) or K-1
        entries (diagonal omitted).
        """
        unknown = set(doc) - {"K", "unit", "spm", "xpm"}
        if unknown:
            raise ValueError(f"unknown channel keys: {sorted(unknown)}")
        K = int(doc["K"])
        spm = [float(h) for h in doc["spm"]]
        if len(spm) != K or len(doc["xpm"]) != K:
            raise ValueError("spm and xpm must have K rows")
        rows = []
        for k, row in enumerate(doc["xpm"]):
            if len(row) == K - 1:
                row = list(row[:k]) + [0] + list(row[k:])
            elif len(row) == K:
                if _as_fraction(row[k]) != 0:
                    raise ValueError(f"xpm diagonal entry {k} must be zero")
            else:
                raise ValueError(f"xpm row {k} must have K or K-1 entries")
            rows.append([Fraction(0) if l == k else _as_fraction(v) for l, v in enumerate(row)])
        return cls(tuple(spm), tuple(tuple(r) for r in rows), float(doc.get("unit", 1.0)))

    @classmethod
    def load(cls, path) -> "ChannelMatrix":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NoiseSpec:
    N: float

    def __post_init__(self):
        if not (math.isfinite(self.N) and self.N >= 0):
            raise ValueError("noise variance must be finite and >= 0")

    @property
    def per_component(self) -> float:
        return self.N / 2.0


@dataclass(frozen=True)
class PowerVector:
    """Instantaneous powers |x_l|^2.

    ``turns`` optionally holds exact values m_l with |x_l|^2 = 2*pi*m_l / unit;
    when present the cross-phase part of every phase is evaluated exactly.
    """

    values: tuple[float, ...]
    turns: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if any(not math.isfinite(v) or v < 0 for v in self.values):
            raise ValueError("powers must be finite and >= 0")
        if self.turns is not None and len(self.turns) != len(self.values):
            raise ValueError("turns and values differ in length")

    @classmethod
    def from_turns(cls, turns: Sequence, unit: float = 1.0) -> "PowerVector":
        t = tuple(Fraction(m) for m in turns)
        return cls(tuple(TWO_PI * float(m) / unit for m in t), t)


@dataclass(frozen=True)
class PhaseVector:
    psi: tuple[float, ...]
    reduced: tuple[float, ...]
    # exact cross-phase part per receiver in units of 2*pi (None without exact powers)
    xpm_turns: tuple[Fraction, ...] | None = None

    @property
    def xpm_residual_turns(self) -> tuple[Fraction, ...] | None:
        if self.xpm_turns is None:
            return None
        return tuple(t - math.floor(t) for t in self.xpm_turns)


def interference_phases(powers: PowerVector, H: ChannelMatrix) -> PhaseVector:
    if len(powers.values) != H.K:
        raise ValueError(f"power vector has {len(powers.values)} entries for K={H.K}")
    K = H.K
    xpm_turns = None
    if powers.turns is not None:
        # h_kl |x_l|^2 = (num/den) * unit * 2 pi m_l / unit = 2 pi (num/den) m_l
        xpm_turns = tuple(sum((H.xpm[k][l] * powers.turns[l] for l in range(K) if l != k),
                              Fraction(0)) for k in range(K))
    psi, reduced = [], []
    for k in range(K):
        spm = H.spm[k] * powers.values[k]
        if xpm_turns is not None:
            frac = xpm_turns[k] - math.floor(xpm_turns[k])
            xpm = TWO_PI * float(xpm_turns[k])
            red = reduce_2pi(reduce_2pi(spm) + TWO_PI * float(frac))
        else:
            xpm = sum(H.coefficient(k, l) * powers.values[l] for l in range(K) if l != k)
            red = reduce_2pi(spm + xpm)
        psi.append(spm + xpm)
        reduced.append(red)
    return PhaseVector(tuple(psi), tuple(reduced), xpm_turns)


def _phases(x: np.ndarray, H: ChannelMatrix) -> np.ndarray:
    return H.as_array() @ (np.abs(x) ** 2)


def channel_step(x, H: ChannelMatrix, noise: NoiseSpec, seed: int, symbol: int = 0) -> np.ndarray:
    """One channel use: K complex inputs to K complex outputs.

    Noise for receiver k at symbol index j is the same whichever way the
    symbols are batched (see :func:`channel_block`).
    """
    x = np.asarray(x, dtype=complex).reshape(H.K, 1)
    return channel_block(x, H, noise, seed, start=symbol)[:, 0]


def channel_block(x, H: ChannelMatrix, noise: NoiseSpec, seed: int, start: int = 0) -> np.ndarray:
    """Vectorised channel over a (K, n) block of inputs for symbols start..start+n-1."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != H.K:
        raise ValueError(f"inputs must have shape (K={H.K}, n)")
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    y = x * np.exp(1j * _phases(x, H))
    if noise.N > 0:
        n = x.shape[1]
        for k in range(H.K):
            y[k] += rng.complex_normal(seed, noise.N, (rng.CHANNEL, k), start, n)
    return y


@dataclass(frozen=True)
class PhenomParams:
    c1: float
    c2: float
    base_N: float
    # "var_cubed": (Var|X|)^3, "var_of_cube": Var(|X|^3)
    cubic_mode: str = "var_cubed"

    def __post_init__(self):
        if min(self.c1, self.c2, self.base_N) < 0:
            raise ValueError("phenomenological parameters must be >= 0")
        if self.cubic_mode not in ("var_cubed", "var_of_cube"):
            raise ValueError(f"unknown cubic_mode {self.cubic_mode!r}")


def phenom_variances(amplitudes, probs, mode: str = "var_cubed") -> tuple[float, float]:
    """Var(|X|^2) and the cubic noise term for a discrete amplitude law."""
    r = np.asarray(amplitudes, dtype=float)
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()

    def var(v):
        m = np.sum(p * v)
        return float(max(0.0, np.sum(p * (v - m) ** 2)))

    var_x2 = var(r ** 2)
    if mode == "var_cubed":
        cubic = var(r) ** 3
    elif mode == "var_of_cube":
        cubic = var(r ** 3)
    else:
        raise ValueError(f"unknown cubic_mode {mode!r}")
    return var_x2, cubic


def phenom_step(x, params: PhenomParams, var_x2: float, cubic_term: float, seed: int,
                start: int = 0) -> np.ndarray:
    """``y = x exp(i phi) + z`` with phi ~ N(0, c1 var_x2), E|z|^2 = N + c2 cubic_term.

    ``x`` may be a scalar or a 1-D block of symbols starting at index ``start``.
    """
    if var_x2 < 0 or cubic_term < 0:
        raise ValueError("variance inputs must be >= 0")
    xa = np.atleast_1d(np.asarray(x, dtype=complex))
    n = xa.shape[0]
    phase_sd = math.sqrt(params.c1 * var_x2)
    phi = np.zeros(n)
    if phase_sd > 0:
        # real draws from the complex stream; one complex draw per symbol gives two reals
        phi = np.real(rng.complex_normal(seed, 2.0, (rng.PHENOM, 0), start, n)) * phase_sd
    var_z = params.base_N + params.c2 * cubic_term
    y = xa * np.exp(1j * phi)
    if var_z > 0:
        y = y + rng.complex_normal(seed, var_z, (rng.PHENOM, 1), start, n)
    return y[0] if np.ndim(x) == 0 else y

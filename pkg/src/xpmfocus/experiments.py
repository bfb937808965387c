"""Experiment drivers: SNR sweeps with pre-log slope fits, the 3-user
example, and the bound-verification suite."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special, stats

from . import rng, specfun
from .constellation import (InfeasibleBudget, PowerBudget, RingConstellation, design_focused,
                            verify_focusing)
from .detection import pe_exact
from .model import ChannelMatrix, PowerVector, interference_phases
from .rates import (InterferenceLaw, amplitude_contribution_lb, expected_log_amplitude,
                    expected_log_amplitude_quad, mi_monte_carlo, one_ring_rate_lb,
                    output_entropy_lb, output_entropy_quad, ring_density_mass, total_rate_lb)

SCHEMES = ("focused", "unfocused", "single_ring_phase", "amplitude_only")
DEFAULT_GRID = (1e4, 1e5, 1e6, 1e7, 1e8)
SLOPE_DECADES = 3.0


def symmetric_channel(h: int = 1) -> ChannelMatrix:
    """Two users, unit SPM, integer cross-phase coefficient h both ways."""
    return ChannelMatrix.from_fractions([1.0, 1.0], [[0, Fraction(h)], [Fraction(h), 0]])


def example1_channel() -> ChannelMatrix:
    F = Fraction
    return ChannelMatrix.from_fractions(
        [1.0, 1.0, 1.0],
        [[0, F(1, 2), F(3, 5)], [F(3, 4), 0, F(2, 3)], [F(5, 6), F(1, 5), 0]])


@dataclass(frozen=True)
class SchemePoint:
    constellation: RingConstellation
    law: InterferenceLaw
    analytic_lb: float
    pe_exact: float


def scheme_point(scheme: str, snr: float, N: float = 1.0, c_a: float = 4.0,
                 channel: ChannelMatrix | None = None, user: int = 0) -> SchemePoint:
    """Build the constellation and residual-phase law one scheme uses at one SNR.

    Every user gets budget P = snr * N (all SNRs tied together).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    P = snr * N
    if scheme == "single_ring_phase":
        c = RingConstellation.from_powers([P])
        return SchemePoint(c, InterferenceLaw.focused(), one_ring_rate_lb(P, N), 0.0)
    H = channel or symmetric_channel()
    c = design_focused(H, [PowerBudget(P, N)] * H.K, c_a)[user]
    pe = pe_exact(c, N)
    if scheme == "focused":
        return SchemePoint(c, InterferenceLaw.focused(), total_rate_lb(c, N), pe)
    if scheme == "amplitude_only":
        c = RingConstellation(c.powers, c.turns, c.user, c.p0, c.a, c.unit, psk=1)
        return SchemePoint(c, InterferenceLaw.focused(), amplitude_contribution_lb(c.J, pe), pe)
    # unfocused: the same ladder, but the partner's rings leave residual phases 0 or pi
    return SchemePoint(c, InterferenceLaw.uniform([0.0, math.pi]), math.nan, pe)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    snr: float
    scheme: str
    J: int
    a: int
    analytic_lb_bits: float
    mc_total_bits: float
    mc_se: float
    amp_bits: float
    phase_bits: float
    pe_exact: float
    skipped: bool = False


CSV_HEADER = tuple(SweepRow.__dataclass_fields__)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_se: float
    ci_low: float
    ci_high: float
    k: int
    residuals: tuple[float, ...]
    window_decades: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    slope_fit: SlopeFit | None
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else int(v) if isinstance(v, bool) else v
                        for v in asdict(r).values()])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "slope_fit": None if self.slope_fit is None else asdict(self.slope_fit),
            "rows": [asdict(r) for r in self.rows],
        }


def fit_slope(snrs: Sequence[float], rates: Sequence[float],
              decades: float = SLOPE_DECADES) -> SlopeFit:
    """Least-squares slope of rate vs log2(SNR) over the top ``decades`` of the grid."""
    snrs = np.asarray(snrs, dtype=float)
    rates = np.asarray(rates, dtype=float)
    keep = snrs >= snrs.max() / 10.0 ** decades - 1e-9 * snrs.max()
    x, y = np.log2(snrs[keep]), rates[keep]
    if len(x) < 3:
        raise ValueError("slope fit needs at least 3 points")
    lr = stats.linregress(x, y)
    t = stats.t.ppf(0.975, len(x) - 2)
    resid = y - (lr.intercept + lr.slope * x)
    return SlopeFit(float(lr.slope), float(lr.intercept), float(lr.stderr),
                    float(lr.slope - t * lr.stderr), float(lr.slope + t * lr.stderr),
                    int(len(x)), tuple(float(r) for r in resid), decades)


def _sweep_point(scheme, snr, N, c_a, samples, seed, channel) -> SweepRow:
    snr_db = 10.0 * math.log10(snr)
    try:
        pt = scheme_point(scheme, snr, N, c_a, channel)
    except InfeasibleBudget:
        nan = math.nan
        return SweepRow(snr_db, snr, scheme, 0, 0, nan, nan, nan, nan, nan, nan, True)
    est = mi_monte_carlo(pt.constellation, N, pt.law, samples, seed)
    c = pt.constellation
    return SweepRow(snr_db, snr, scheme, c.J, c.a or 0, pt.analytic_lb, est.bits_per_symbol,
                    est.std_error, est.amplitude_bits, est.phase_bits, pt.pe_exact)


def snr_sweep(scheme: str = "focused", snr_grid: Sequence[float] = DEFAULT_GRID,
              c_a: float = 4.0, samples: int = 100_000, seed: int = 0, threads: int = 1,
              N: float = 1.0, channel: ChannelMatrix | None = None) -> SweepReport:
    grid = [float(s) for s in snr_grid]
    if len(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("snr_grid must be strictly increasing with at least 4 points")
    if math.log10(grid[-1] / grid[0]) < 3.0 - 1e-12:
        raise ValueError("snr_grid must span at least 3 decades")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")

    def run(i: int) -> SweepRow:
        return _sweep_point(scheme, grid[i], N, c_a, samples,
                            rng.derive_seed(seed, rng.SWEEP, i), channel)

    rows = rng.map_ordered(run, len(grid), threads)
    good = [r for r in rows if not r.skipped]
    fit = None
    if len(good) >= 3:
        try:
            fit = fit_slope([r.snr for r in good], [r.mc_total_bits for r in good])
        except ValueError:
            fit = None
    config = {"scheme": scheme, "snr_grid": grid, "c_a": c_a, "samples": samples,
              "seed": seed, "N": N,
              "channel": (channel or symmetric_channel()).to_json()}
    return SweepReport(rows, fit, config)


def plot_sweep(reports: Sequence[SweepReport], path) -> None:
    """Static SVG of rate against log2 SNR, one line per report."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for rep in reports:
        rows = [r for r in rep.rows if not r.skipped]
        x = [math.log2(r.snr) for r in rows]
        label = rep.config.get("scheme", "")
        if rep.slope_fit is not None:
            label += f" (slope {rep.slope_fit.slope:.3f})"
        ax.plot(x, [r.mc_total_bits for r in rows], marker="o", label=label)
    ax.set_xlabel("log2 SNR")
    ax.set_ylabel("rate [bits/symbol]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --- 3-user example --------------------------------------------------------------------

@dataclass
class Example1Report:
    multipliers: list[int]
    integer_matrix: list[list[int]]
    m: list[int]
    xpm_turns: list[str]
    residual_turns: list[str]
    design_residual: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def reproduce_example1(m: Sequence[int] = (1, 1, 1), H: ChannelMatrix | None = None) -> Example1Report:
    H = H or example1_channel()
    K = H.K
    cons = design_focused(H, [PowerBudget(1e9, 1.0)] * K)
    mult = [int(c.turns[0] / c.a) for c in cons]
    M = [[H.xpm[k][l] * mult[l] for l in range(K)] for k in range(K)]
    if any(v.denominator != 1 for row in M for v in row):
        raise AssertionError(f"cross-phase matrix is not integral: {M}")
    turns = [Fraction(mult[l] * m[l]) for l in range(K)]
    phases = interference_phases(PowerVector.from_turns(turns, H.unit), H)
    res = phases.xpm_residual_turns
    report = verify_focusing(cons, H)
    passed = all(r == 0 for r in res) and report.focused
    if not passed:
        raise AssertionError(f"nonzero cross-phase residual: {res}, {report.max_residual}")
    return Example1Report(mult, [[int(v) for v in row] for row in M], list(m),
                          [str(t) for t in phases.xpm_turns], [str(r) for r in res],
                          report.max_residual, passed)


# --- bound verification suite ---------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


def _rice_sf_quad(a: float, b: float) -> float:
    """Oracle Q(a,b): adaptive quadrature of the scaled Rice density (scipy's i0e)."""
    f = lambda x: x * math.exp(-0.5 * (x - a) ** 2) * special.i0e(a * x)
    hi = max(a, b) + 40.0
    pts = [p for p in (a - 5, a, a + 5) if b < p < hi]
    val, _ = integrate.quad(f, b, hi, points=pts or None, limit=400, epsabs=1e-14, epsrel=1e-12)
    return val


def check_i0_bound() -> CheckResult:
    z = np.logspace(-3, math.log10(700.0), 200)
    margin = specfun.i0_upper_bound_scaled(z) - specfun.i0e(z)
    return CheckResult("i0_upper_bound", bool(np.all(margin > 0)), float(margin.min()),
                       "200 log-spaced z in [1e-3, 700]")


def check_i0e_branches() -> CheckResult:
    z = np.linspace(specfun.I0_SERIES_MAX, 25.0, 101)
    rel = np.abs(specfun._i0e_series(z) / specfun._i0e_asymptotic(z) - 1.0)
    worst = float(rel.max())
    return CheckResult("i0e_series_vs_asymptotic", worst <= 1e-10, 1e-10 - worst,
                       "overlap window [15, 25]")


def check_marcum_sandwich() -> CheckResult:
    margin = math.inf
    for a in np.arange(0.0, 20.01, 0.5):
        for b in np.arange(0.0, 20.01, 0.5):
            q = specfun.marcum_q(a, b)
            lo, hi = specfun.marcum_q_bounds(a, b)
            margin = min(margin, q - lo, hi - q)
    return CheckResult("marcum_bounds_sandwich", margin >= 0, margin, "a, b in [0, 20] step 0.5")


def check_marcum_oracle() -> CheckResult:
    worst = 0.0
    for a in np.arange(0.0, 20.01, 1.0):
        for b in np.arange(0.0, 20.01, 1.0):
            worst = max(worst, abs(specfun.marcum_q(a, b) - _rice_sf_quad(a, b)))
    return CheckResult("marcum_vs_quadrature", worst <= 1e-6, 1e-6 - worst, "a, b in [0, 20] step 1")


def check_gamma0() -> CheckResult:
    x = np.logspace(-3, 2, 200)
    g = np.array([specfun.gamma0(v) for v in x])
    dec = float(np.min(-np.diff(g)))
    env = min(specfun.gamma0(v) - (math.exp(-v) / v - math.exp(-v) / v ** 2)
              for v in np.linspace(2.0, 50.0, 97))
    tail = specfun.gamma0(100.0)
    ok = dec > 0 and env >= 0 and tail < 1e-45
    return CheckResult("gamma0_monotone_envelope_tail", ok, min(dec, env),
                       f"Gamma(0,100) = {tail:.3e}")


def check_gaussian_q() -> CheckResult:
    worst = max(abs(specfun.gaussian_q(z) + specfun.gaussian_q(-z) - 1.0)
                for z in np.linspace(-8, 8, 161))
    return CheckResult("gaussian_q_symmetry", worst <= 1e-12, 1e-12 - worst)


def check_log_amplitude_identity() -> CheckResult:
    worst = max(abs(expected_log_amplitude_quad(s, 1.0) - expected_log_amplitude(s, 1.0))
                for s in (0.5, 1.0, 10.0, 100.0))
    return CheckResult("log_amplitude_closed_form", worst < 1e-3, 1e-3 - worst,
                       "P/N in {0.5, 1, 10, 100}")


def check_entropy_chain() -> CheckResult:
    margin = min(output_entropy_quad(s, 1.0) - output_entropy_lb(s, 1.0)
                 for s in (1.0, 10.0, 100.0, 1e4))
    algebra = max(abs(output_entropy_lb(s, 1.0) - math.log2(math.pi * math.e) - one_ring_rate_lb(s, 1.0))
                  for s in (1.0, 10.0, 100.0, 1e4))
    return CheckResult("output_entropy_lower_bound", margin > 0 and algebra < 1e-9, margin,
                       f"bound minus log2(pi e N) matches the rate bound to {algebra:.1e}")


def check_density_mass() -> CheckResult:
    worst = max(abs(ring_density_mass(s, 1.0) - 1.0) for s in (0.0, 1.0, 100.0))
    return CheckResult("ring_density_normalised", worst <= 1e-8, 1e-8 - worst)


def check_mc_floor() -> CheckResult:
    est = mi_monte_carlo(RingConstellation.from_powers([100.0]), 1.0, samples=100_000, seed=7)
    margin = est.bits_per_symbol + 3 * est.std_error - one_ring_rate_lb(100.0, 1.0)
    return CheckResult("mc_mi_above_one_ring_bound", margin >= 0, margin, "P/N = 100, 1e5 samples")


def check_mc_ladder() -> CheckResult:
    c = RingConstellation.ladder(J=8, a=2)
    est = mi_monte_carlo(c, 1.0, samples=100_000, seed=8)
    lb = total_rate_lb(c, 1.0)
    se = math.hypot(est.amplitude_se, est.phase_se)
    decomp = abs(est.amplitude_bits + est.phase_bits - est.bits_per_symbol)
    margin = est.bits_per_symbol + 3 * est.std_error - lb
    ok = margin >= 0 and decomp <= 3 * se
    return CheckResult("mc_mi_above_ladder_bound", ok, margin,
                       f"amplitude + phase - total = {decomp:.1e}")


BOUND_CHECKS: list[Callable[[], CheckResult]] = [
    check_i0_bound, check_i0e_branches, check_marcum_sandwich, check_marcum_oracle, check_gamma0,
    check_gaussian_q, check_log_amplitude_identity, check_entropy_chain, check_density_mass,
    check_mc_floor, check_mc_ladder,
]


def verify_bounds_suite(checks: Sequence[Callable[[], CheckResult]] | None = None) -> list[CheckResult]:
    out = []
    for check in (BOUND_CHECKS if checks is None else checks):
        t0 = time.perf_counter()
        try:
            res = check()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(getattr(check, "__name__", "check"), False, math.nan, repr(exc))
        dt = time.perf_counter() - t0
        out.append(CheckResult(res.name, res.passed, res.margin,
                               (res.detail + f" [{dt:.2f}s]").strip()))
    return out


def format_checks(results: Sequence[CheckResult]) -> str:
    lines = [f"{'check':34s} {'result':6s} {'margin':>12s}  detail"]
    for r in results:
        lines.append(f"{r.name:34s} {'PASS' if r.passed else 'FAIL':6s} {r.margin:12.4e}  {r.detail}")
    return "\n".join(lines)


def checks_to_json(results: Sequence[CheckResult]) -> dict:
    return {"passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}

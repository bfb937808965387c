"""Command-line entry point.

Every command accepts ``--config FILE`` (a JSON object of the same option
names, with dashes written as underscores); flags given on the command line
win over the file.  Exit codes: 0 success, 1 verification failure, 2 invalid
configuration or infeasible budget, 3 unsupported channel coefficients.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import experiments
from .constellation import InfeasibleBudget, PowerBudget, RingConstellation, design_focused, verify_focusing
from .detection import pe_report
from .model import ChannelMatrix, UnsupportedCoefficient
from .rates import mi_monte_carlo

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COEFF = 0, 1, 2, 3

# per-command option names and their defaults
DEFAULTS: dict[str, dict] = {
    "design": {"channel": None, "powers": None, "noise": 1.0, "c_a": 4.0, "out": None},
    "sweep": {"scheme": "focused", "snr": list(experiments.DEFAULT_GRID), "c_a": 4.0,
              "samples": 100_000, "seed": 0, "threads": 1, "noise": 1.0, "channel": None,
              "csv": None, "json": None, "plot": None, "format": "csv"},
    "mi": {"scheme": "focused", "snr": 1e6, "c_a": 4.0, "samples": 100_000, "seed": 0,
           "threads": 1, "noise": 1.0, "channel": None, "format": "json"},
    "pe": {"snr": None, "c_a": 4.0, "rings": None, "spacing": None, "samples": 1_000_000,
           "seed": 0, "threads": 1, "noise": 1.0, "channel": None, "format": "json"},
    "verify": {"json": None, "format": "text"},
    "example1": {"m": [1, 1, 1], "format": "json"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    @classmethod
    def build(cls, command: str, file_values: dict, flag_values: dict) -> "RunConfig":
        allowed = DEFAULTS[command]
        unknown = set(file_values) - set(allowed) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        if file_values.get("command", command) != command:
            raise ConfigError(f"config is for command {file_values['command']!r}, not {command!r}")
        values = dict(allowed)
        values.update({k: v for k, v in file_values.items() if k != "command"})
        values.update({k: v for k, v in flag_values.items() if v is not None})
        cfg = cls(command, values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        v = self.values
        for key in ("samples", "threads", "seed", "rings"):
            if key in v and v[key] is not None:
                if not isinstance(v[key], int) or isinstance(v[key], bool) or v[key] < 0:
                    raise ConfigError(f"{key} must be a non-negative integer")
        if v.get("threads", 1) < 1:
            raise ConfigError("threads must be >= 1")
        for key in ("noise", "c_a", "spacing"):
            if v.get(key) is not None and not float(v[key]) > 0:
                raise ConfigError(f"{key} must be positive")
        if "scheme" in v and v["scheme"] not in experiments.SCHEMES:
            raise ConfigError(f"scheme must be one of {experiments.SCHEMES}")
        fmt = v.get("format")
        if fmt is not None and fmt not in ("csv", "json", "text"):
            raise ConfigError("format must be csv or json")

    def echo(self) -> dict:
        return {"command": self.command, **self.values}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xpmfocus", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        sp.add_argument("--config", type=Path, help="JSON file with options for this command")
        if "seed" in names:
            sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        if "samples" in names:
            sp.add_argument("--samples", type=int, help="Monte Carlo sample count")
        if "threads" in names:
            sp.add_argument("--threads", type=int, help="worker cap; results do not depend on it")
        if "format" in names:
            sp.add_argument("--format", choices=("csv", "json"), help="standard-output format")
        if "scheme" in names:
            sp.add_argument("--scheme", choices=experiments.SCHEMES, help="transmission scheme")
        if "channel" in names:
            sp.add_argument("--channel", help="channel matrix JSON file (default: 2-user, h12=h21=1)")
        if "noise" in names:
            sp.add_argument("--noise", type=float, help="noise variance N")
        if "c_a" in names:
            sp.add_argument("--c-a", dest="c_a", type=float, help="ring spacing constant c_a")

    d = sub.add_parser("design", help="design focused ring constellations for a channel")
    common(d, "channel", "noise", "c_a")
    d.add_argument("--power", dest="powers", type=float, action="append",
                   help="power budget P (repeat per user, or give once for all users)")
    d.add_argument("--out", help="write constellations JSON here instead of standard output")

    s = sub.add_parser("sweep", help="SNR sweep with pre-log slope fit")
    common(s, "seed", "samples", "threads", "format", "scheme", "channel", "noise", "c_a")
    s.add_argument("--snr", type=float, nargs="+", help="SNR grid (linear)")
    s.add_argument("--csv", help="write the CSV report here")
    s.add_argument("--json", help="write the JSON summary here")
    s.add_argument("--plot", help="write an SVG plot of rate vs log2 SNR here")

    m = sub.add_parser("mi", help="Monte Carlo mutual information at one SNR")
    common(m, "seed", "samples", "threads", "format", "scheme", "channel", "noise", "c_a")
    m.add_argument("--snr", type=float, help="SNR P/N (linear)")

    e = sub.add_parser("pe", help="ring-detection error probability: bound, exact, Monte Carlo")
    common(e, "seed", "samples", "threads", "format", "channel", "noise", "c_a")
    e.add_argument("--snr", type=float, help="design the ladder for this SNR")
    e.add_argument("--rings", type=int, help="ladder with this many rings (with --spacing)")
    e.add_argument("--spacing", type=float, help="a*p0/N of the ladder (with --rings)")

    v = sub.add_parser("verify", help="run the analytic bound verification suite")
    common(v)
    v.add_argument("--json", nargs="?", const="-", help="write the JSON report (to PATH or standard output)")

    x = sub.add_parser("example1", help="reproduce the 3-user focusing example")
    common(x, "format")
    x.add_argument("--m", type=int, nargs=3, help="ring multipliers m1 m2 m3")
    return p


def _load_channel(cfg: RunConfig) -> ChannelMatrix | None:
    path = cfg.values.get("channel")
    if path is None:
        return None
    try:
        return ChannelMatrix.load(path)
    except UnsupportedCoefficient:
        raise
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read channel file {path}: {exc}") from exc


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def cmd_design(cfg: RunConfig) -> int:
    H = _load_channel(cfg)
    if H is None:
        raise ConfigError("design needs --channel")
    powers = cfg.values["powers"]
    if not powers:
        raise ConfigError("design needs --power")
    if isinstance(powers, (int, float)):
        powers = [powers]
    if len(powers) == 1:
        powers = list(powers) * H.K
    if len(powers) != H.K:
        raise ConfigError(f"need 1 or {H.K} power budgets, got {len(powers)}")
    N = float(cfg.values["noise"])
    cons = design_focused(H, [PowerBudget(float(P), N) for P in powers], float(cfg.values["c_a"]))
    report = verify_focusing(cons, H)
    doc = {"config": cfg.echo(), "constellations": [c.to_json() for c in cons],
           "multipliers": [int(c.turns[0] / c.a) for c in cons],
           "focusing": report.to_json()}
    _write(json.dumps(doc, indent=2), cfg.values["out"])
    return EXIT_OK if report.focused else EXIT_FAIL


def cmd_sweep(cfg: RunConfig) -> int:
    v = cfg.values
    rep = experiments.snr_sweep(v["scheme"], v["snr"], float(v["c_a"]), v["samples"], v["seed"],
                                v["threads"], float(v["noise"]), _load_channel(cfg))
    rep.config = cfg.echo()
    summary = json.dumps(rep.to_json(), indent=2)
    if v["csv"]:
        _write(rep.to_csv(), v["csv"])
    if v["json"]:
        _write(summary, v["json"])
    if v["plot"]:
        experiments.plot_sweep([rep], v["plot"])
    fit = rep.slope_fit
    line = (f"{v['scheme']}: slope {fit.slope:.4f} over top {fit.k} points "
            f"(95% CI {fit.ci_low:.4f}..{fit.ci_high:.4f})" if fit else f"{v['scheme']}: no slope fit")
    if v["csv"] or v["json"]:
        print(line)
    else:
        _write(rep.to_csv() if v["format"] == "csv" else summary, None)
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_mi(cfg: RunConfig) -> int:
    v = cfg.values
    N = float(v["noise"])
    pt = experiments.scheme_point(v["scheme"], float(v["snr"]), N, float(v["c_a"]), _load_channel(cfg))
    est = mi_monte_carlo(pt.constellation, N, pt.law, v["samples"], v["seed"], v["threads"])
    if v["format"] == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["snr_db", "total_bits", "amp_bits", "phase_bits", "analytic_lb", "pe_exact"])
        w.writerow([repr(10 * math.log10(float(v["snr"]))), repr(est.bits_per_symbol),
                    repr(est.amplitude_bits), repr(est.phase_bits), repr(pt.analytic_lb), repr(pt.pe_exact)])
    else:
        doc = {"config": cfg.echo(), "J": pt.constellation.J, "a": pt.constellation.a,
               "analytic_lb": pt.analytic_lb, "pe_exact": pt.pe_exact, "estimate": est.to_json()}
        _write(json.dumps(doc, indent=2), None)
    return EXIT_OK


def cmd_pe(cfg: RunConfig) -> int:
    v = cfg.values
    N = float(v["noise"])
    if v["rings"] is not None or v["spacing"] is not None:
        if v["rings"] is None or v["spacing"] is None:
            raise ConfigError("--rings and --spacing go together")
        # a = 1, p0 = 2*pi, N chosen so that a*p0/N equals the requested spacing
        c = RingConstellation.ladder(int(v["rings"]), 1)
        N = c.p0 / float(v["spacing"])
    elif v["snr"] is not None:
        c = experiments.scheme_point("focused", float(v["snr"]), N, float(v["c_a"]),
                                     _load_channel(cfg)).constellation
    else:
        raise ConfigError("pe needs --snr or --rings/--spacing")
    rep = pe_report(c, N, v["samples"], v["seed"], v["threads"])
    if v["format"] == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(rep.CSV_HEADER)
        w.writerow(rep.csv_row())
    else:
        _write(json.dumps({"config": cfg.echo(), "J": c.J, "N": N, "report": rep.to_json()}, indent=2), None)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = experiments.verify_bounds_suite()
    doc = {"config": cfg.echo(), **experiments.checks_to_json(results)}
    target = cfg.values["json"]
    if target == "-" or cfg.values["format"] == "json":
        _write(json.dumps(doc, indent=2), None)
    else:
        print(experiments.format_checks(results))
        if target:
            _write(json.dumps(doc, indent=2), target)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_example1(cfg: RunConfig) -> int:
    try:
        rep = experiments.reproduce_example1(cfg.values["m"])
    except AssertionError as exc:
        print(f"example1 failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(json.dumps({"config": cfg.echo(), **rep.to_json()}, indent=2), None)
    return EXIT_OK


COMMANDS = {"design": cmd_design, "sweep": cmd_sweep, "mi": cmd_mi, "pe": cmd_pe,
            "verify": cmd_verify, "example1": cmd_example1}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        file_values = {}
        if args.config is not None:
            try:
                file_values = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = RunConfig.build(args.command, file_values, flags)
        return COMMANDS[args.command](cfg)
    except UnsupportedCoefficient as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COEFF
    except (ConfigError, InfeasibleBudget) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

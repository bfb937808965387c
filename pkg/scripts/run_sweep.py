"""Run the SNR sweep for several schemes and write CSV, JSON and one combined SVG plot.

    python3 scripts/run_sweep.py --out results --samples 100000 --threads 4
"""

import argparse
import json
from pathlib import Path

from xpmfocus import experiments


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--schemes", nargs="+", default=list(experiments.SCHEMES), choices=experiments.SCHEMES)
    p.add_argument("--snr", type=float, nargs="+", default=list(experiments.DEFAULT_GRID))
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--c-a", dest="c_a", type=float, default=4.0)
    args = p.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    reports = []
    for scheme in args.schemes:
        rep = experiments.snr_sweep(scheme, args.snr, args.c_a, args.samples, args.seed, args.threads)
        (args.out / f"sweep_{scheme}.csv").write_text(rep.to_csv())
        (args.out / f"sweep_{scheme}.json").write_text(json.dumps(rep.to_json(), indent=2))
        fit = rep.slope_fit
        print(f"{scheme:18s} slope {fit.slope:.4f} (95% CI {fit.ci_low:.4f}..{fit.ci_high:.4f})"
              if fit else f"{scheme:18s} no slope fit")
        reports.append(rep)
    experiments.plot_sweep(reports, args.out / "sweep.svg")


if __name__ == "__main__":
    main()

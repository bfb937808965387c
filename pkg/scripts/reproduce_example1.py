"""Print the 3-user focusing example: multipliers, integer cross-phase matrix, residuals."""

import argparse
import json

from xpmfocus.experiments import reproduce_example1


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--m", type=int, nargs=3, default=[1, 1, 1], help="ring multipliers m1 m2 m3")
    args = p.parse_args()
    print(json.dumps(reproduce_example1(args.m).to_json(), indent=2))


if __name__ == "__main__":
    main()

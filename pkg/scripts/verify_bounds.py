"""Run the analytic bound verification suite and exit nonzero if any check fails."""

import sys

from xpmfocus.experiments import format_checks, verify_bounds_suite


def main() -> int:
    results = verify_bounds_suite()
    print(format_checks(results))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())

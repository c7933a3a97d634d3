#!/usr/bin/env python3
"""Run the full reference experiment (corpus, labels, four arms, evals)."""

import argparse
import json
from pathlib import Path

from lesionattn.reference import REFERENCE_CONFIG, REFERENCE_SEEDS, run_reference


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(REFERENCE_CONFIG), help="run config YAML")
    parser.add_argument("--out", default="reference-run", help="output root directory")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(REFERENCE_SEEDS))
    args = parser.parse_args()

    summary = run_reference(args.config, args.out, tuple(args.seeds))
    agg = summary["aggregate"]
    print(json.dumps(agg, indent=2))
    print(f"full summary: {Path(args.out) / 'summary.json'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

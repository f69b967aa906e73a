#!/usr/bin/env python3
"""Run every bundled config in configs/ and print a verdict table.

Artifacts land in <output-root>/<kind>-<hash>/ exactly as with `wavedecay run`.
"""
import argparse
import sys
import time
from pathlib import Path

from wavedecay.config import load_config
from wavedecay.errors import ConfigError
from wavedecay.experiments import ExperimentFailure, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(ROOT / "configs"), help="directory of *.toml configs")
    ap.add_argument("--output-root", default="runs")
    ap.add_argument("--skip", nargs="*", default=[], help="config stems to skip (e.g. thm42_k3)")
    args = ap.parse_args(argv)

    rows = []
    for path in sorted(Path(args.configs).glob("*.toml")):
        if path.stem in args.skip:
            continue
        start = time.perf_counter()
        try:
            report, out = run_experiment(load_config(path), args.output_root)
            verdict, where = report["verdict"], str(out)
        except (ConfigError, ExperimentFailure) as exc:
            verdict, where = "error", str(exc)
        rows.append((path.stem, verdict, time.perf_counter() - start, where))
        print(f"{path.stem:<20} {verdict:<6} {rows[-1][2]:7.1f} s  {where}", flush=True)

    failed = [r[0] for r in rows if r[1] != "pass"]
    print(f"\n{len(rows) - len(failed)}/{len(rows)} configs passed" + (f"; not passing: {', '.join(failed)}" if failed else ""))
    return 0 if not any(r[1] == "error" for r in rows) else 3


if __name__ == "__main__":
    sys.exit(main())

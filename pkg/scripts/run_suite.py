#!/usr/bin/env python3
"""Run every experiment at its acceptance-scale configuration and print a summary.

Each experiment writes CSV/JSON artifacts plus record.json under --out.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from smsim.config import RunConfig
from smsim.experiments import run_experiment


@dataclass
class SuiteConfig:
    out_dir: str = "results"
    workers: int = 1
    runs: dict = field(default_factory=lambda: {
        "paracheck": dict(grid=64),
        "renorm": dict(grid=256, eps_ladder=[0.25, 0.125, 0.0625], n_seeds=10, seeds=None),
        "domain": dict(grid=64, seeds=[1, 2]),
        "spectrum": dict(grid=64, n_seeds=5, seeds=None, M=30, method="lanczos"),
        "weyl": dict(grid=64, n_seeds=10, seeds=None, method="dense"),
        "resolvent": dict(grid=64, eps_ladder=[0.5, 0.25, 0.125, 0.0625]),
        "gauge": dict(grid=64, M=20, method="lanczos"),
        "ladder": dict(grid=128, eps_ladder=[0.25, 0.125, 0.0625, 0.03125], M=5, mollifier="sharp", method="lanczos"),
    })


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("experiments", nargs="*", help="subset to run (default: all)")
    p.add_argument("--out", default=SuiteConfig.out_dir)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    suite = SuiteConfig(out_dir=args.out, workers=args.workers)
    names = args.experiments or list(suite.runs)
    failed = 0
    for name in names:
        cfg = RunConfig(experiment=name, out_dir=suite.out_dir, workers=suite.workers, **suite.runs[name])
        rec = run_experiment(cfg)
        failed += not rec.passed
        print(f"{'PASS' if rec.passed else 'FAIL'}  {name:<10} {rec.timings['total_seconds']:7.1f} s  hash {rec.config_hash}")
        for r in rec.results:
            print(f"      {'ok ' if r['pass'] else 'BAD'} {r['test']:<36} {r['value']:.4g} (tol {r['tolerance']:.4g})")
        if rec.error:
            print(f"      error: {rec.error}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

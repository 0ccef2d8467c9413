"""Command-line entry point: ``smsim <experiment> --config path [--out dir] [--seeds ...] [--grid n]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, RunConfig, config_from_dict, list_defaults

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smsim", description="Random magnetic Laplacian experiments on the 2-torus.")
    p.add_argument("--list-defaults", action="store_true", help="print the resolved default configuration and exit")
    sub = p.add_subparsers(dest="command")
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        _common(s)
    snap = sub.add_parser("snapshot", help="write A and A^2 of one potential as TFLD snapshots")
    _common(snap)
    snap.add_argument("--prefix", default="potential", help="file prefix inside --out (default: potential)")
    return p


def _common(s: argparse.ArgumentParser) -> None:
    s.add_argument("--config", type=Path, help="JSON run configuration")
    s.add_argument("--out", help="output directory")
    s.add_argument("--seeds", type=int, nargs="+", help="noise seeds")
    s.add_argument("--grid", type=int, help="grid size n")
    s.add_argument("--alpha", type=float)
    s.add_argument("--moll", choices=("heat", "sharp"), help="mollifier kind")
    s.add_argument("--eps", type=float, help="mollifier scale")
    s.add_argument("--eps-ladder", type=float, nargs="+", help="dyadic ladder of mollifier scales")
    s.add_argument("--M", type=int, help="number of eigenvalues")
    s.add_argument("--method", choices=("auto", "dense", "lanczos"))
    s.add_argument("--snapshot", nargs=2, metavar=("A", "A2"), help="TFLD snapshots of A and A^2")
    s.add_argument("--workers", type=int)
    s.add_argument("-v", "--verbose", action="store_true")


_OVERRIDES = {
    "out": "out_dir", "seeds": "seeds", "grid": "grid", "alpha": "alpha", "moll": "mollifier", "eps": "epsilon",
    "eps_ladder": "eps_ladder", "M": "M", "method": "method", "snapshot": "potential_snapshot", "workers": "workers",
}


_SHORT = {"grid": "n", "mollifier": "moll", "epsilon": "eps", "out_dir": "out"}


def resolve_config(args: argparse.Namespace, experiment: str) -> RunConfig:
    data = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file {args.config} does not exist")
        try:
            data = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    for arg, key in _OVERRIDES.items():
        value = getattr(args, arg, None)
        if value is not None:
            data.pop(_SHORT.get(key, ""), None)
            data[key] = value
    data["experiment"] = experiment if experiment in EXPERIMENTS else data.get("experiment", "spectrum")
    if args.seeds is not None:
        data.pop("n_seeds", None)
    return config_from_dict(data)


def write_potential_snapshot(cfg: RunConfig, prefix: str) -> list[Path]:
    from .experiments import _calc, potential_for
    from .torus import write_snapshot

    pot = potential_for(cfg, cfg.seed_list[0], _calc(cfg))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{prefix}_A.tfld", out / f"{prefix}_A2.tfld"]
    write_snapshot(pot.A, paths[0])
    write_snapshot(pot.A2, paths[1])
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_defaults:
        print(json.dumps(list_defaults(), indent=2, sort_keys=True))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args, args.command)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "snapshot":
        for p in write_potential_snapshot(cfg, args.prefix):
            print(p)
        return EXIT_OK

    from .experiments import run_experiment

    record = run_experiment(cfg, args.command)
    for r in record.results:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status}  {r['test']:<36} value={r['value']:.6g}  tol={r['tolerance']:.6g}")
    if record.error:
        print(f"ERROR {record.error}", file=sys.stderr)
    print(f"record: {Path(record.artifacts[0]).parent / 'record.json'}" if record.artifacts else "record: (none)")
    return EXIT_OK if record.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

Subcommands:
  kernel    solve the backstepping kernel pair for a scenario, dump CSV
  simulate  run the plant only, dump measurements and profiles
  estimate  full pipeline: plant -> noisy record -> MHE (+observer)
  compare   MHE vs observer PDE across grid refinements
  fig1      shortcut for the noisy reaction-diffusion benchmark
  bench     per-estimate cost of the MHE vs integrating the observer

`--config` accepts a file path or the name of a packaged preset
(see `pdemhe presets`). Exit codes: 0 success, 2 configuration error,
3 kernel iteration failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import config as cfgmod
from . import harness, kernels
from .core import ConfigError, ConvergenceError


def _load(args) -> cfgmod.ScenarioConfig:
    cfg = cfgmod.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _emit_json(args, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if not args.quiet:
        print(text)


def cmd_kernel(args) -> int:
    cfg = _load(args)
    pipe = harness.build_pipeline(cfg)
    os.makedirs(args.out, exist_ok=True)
    pipe.k.to_csv(os.path.join(args.out, "kernel.csv"))
    pipe.l.to_csv(os.path.join(args.out, "inverse_kernel.csv"))
    with open(os.path.join(args.out, "gain.csv"), "w", newline="\n") as fh:
        fh.write("x,p1\n")
        for xi, gi in zip(pipe.grid.x, pipe.gain.values):
            fh.write(f"{xi:.17g},{gi:.17g}\n")
    _say(args, f"kernel tables written to {args.out} "
               f"(max |k| = {pipe.k.max_abs():.6g}, max |l| = {pipe.l.max_abs():.6g})")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    summary = harness.run_scenario(cfg, out_dir=args.out)
    _say(args, f"simulated {cfg.plant_class} plant to t={cfg.total_time}; "
               f"reports in {args.out}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _load(args)
    summary = harness.run_scenario(cfg, out_dir=args.out,
                                   with_observer=args.with_observer)
    _say(args, f"final error {summary.final_error:.6g}, "
               f"decay slope {summary.decay_slope():.4g}; reports in {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    report = harness.compare_mhe_vs_observer(cfg, levels=args.levels)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "compare.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit_json(args, report)
    return 0


def cmd_fig1(args) -> int:
    args.config = "fig1-desk-noiseless" if args.noiseless else "fig1-desk"
    cfg = _load(args)
    summary = harness.run_scenario(cfg, out_dir=args.out, with_observer=True)
    _say(args, f"final error {summary.final_error:.6g}; reports in {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load(args)
    report = harness.benchmark_cost(cfg)
    _emit_json(args, report)
    return 0


def cmd_presets(args) -> int:
    for name in cfgmod.preset_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdemhe",
        description="Explicit moving-horizon estimators for 1-D hyperbolic "
                    "and parabolic PDEs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="config file path or packaged preset name")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the noise seed")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("kernel", help="solve and export the kernel pair")
    common(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("simulate", help="run the plant simulator")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run the full MHE pipeline")
    common(p)
    p.add_argument("--with-observer", action="store_true",
                   help="also integrate the observer PDE on the same record")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="MHE vs observer across refinements")
    common(p)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fig1", help="noisy reaction-diffusion benchmark")
    common(p, needs_config=False)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("bench", help="MHE vs observer wall-clock cost")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("presets", help="list packaged preset names")
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"kernel solve failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

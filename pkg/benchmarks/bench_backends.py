"""Compare the numba and pure-numpy backends on the hot loops.

Runs the same scenario twice in subprocesses, once per backend (selected via
the PDEMHE_NO_NUMBA environment variable, which takes effect at import time),
and reports wall-clock timings plus the maximum deviation between the two
error curves.

Usage::

    python3 benchmarks/bench_backends.py [--config PRESET] [--repeat N]
"""

import argparse
import csv
import json
import os
import subprocess
import sys
import tempfile

WORKER = r"""
import json, sys, time
from pdemhe import config as cfgmod
from pdemhe import harness
from pdemhe.accel import backend_name

cfg = cfgmod.load(sys.argv[1])
out = sys.argv[2]
repeat = int(sys.argv[3])
best = None
for _ in range(repeat):
    tic = time.perf_counter()
    summary = harness.run_scenario(cfg, out_dir=out)
    elapsed = time.perf_counter() - tic
    if best is None or elapsed < best["total"]:
        best = {
            "backend": backend_name(),
            "total": elapsed,
            "plant_sim": summary.timings["plant_sim"],
            "mhe_total": summary.timings["mhe_total"],
            "mhe_per_estimate": summary.timings["mhe_per_estimate"],
            "kernel_solve": summary.timings["kernel_solve"],
        }
print(json.dumps(best))
"""


def run_backend(config, out_dir, repeat, disable_numba):
    env = dict(os.environ)
    env["PDEMHE_NO_NUMBA"] = "1" if disable_numba else "0"
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, config, out_dir, str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def read_error_curve(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["t"]), float(r["error_norm"])) for r in rows]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="parabolic-equiv",
                    help="preset name or config path (default: parabolic-equiv)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        out_nb = os.path.join(tmp, "numba")
        out_np = os.path.join(tmp, "numpy")
        res_nb = run_backend(args.config, out_nb, args.repeat, False)
        res_np = run_backend(args.config, out_np, args.repeat, True)
        curve_nb = read_error_curve(os.path.join(out_nb, "error.csv"))
        curve_np = read_error_curve(os.path.join(out_np, "error.csv"))

    dev = max(abs(a[1] - b[1]) for a, b in zip(curve_nb, curve_np))
    scale = max(abs(v) for _, v in curve_nb) or 1.0

    print(f"scenario: {args.config}  (best of {args.repeat})")
    for res in (res_nb, res_np):
        print(f"  backend={res['backend']:<6} total={res['total']:.3f}s "
              f"plant={res['plant_sim']:.3f}s mhe={res['mhe_total']:.3f}s "
              f"per-estimate={res['mhe_per_estimate']:.2e}s "
              f"kernel={res['kernel_solve']:.3f}s")
    if res_np["total"] > 0:
        print(f"  speedup (total): {res_np['total'] / res_nb['total']:.2f}x")
        print(f"  speedup (mhe):   {res_np['mhe_total'] / max(res_nb['mhe_total'], 1e-12):.2f}x")
    print(f"  max |error curve deviation| = {dev:.3e} "
          f"(relative {dev / scale:.3e})")
    if res_nb["backend"] == res_np["backend"]:
        print("  note: numba unavailable; both runs used the numpy backend")
    return 0


if __name__ == "__main__":
    sys.exit(main())

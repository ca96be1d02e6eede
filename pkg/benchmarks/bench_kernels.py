#!/usr/bin/env python3
"""Time the collision-model sweeps on the numba and numpy backends.

The forward/backward sweep pair in ``negdelay.oracle`` is the only hot
loop in the package; everything else is vectorized numpy. This script
times ``weak_excitation_trace`` at two operating points under the
active backend, re-executes itself with ``NEGDELAY_NO_NUMBA=1`` to
measure the fallback, and prints one comparison table.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time
from dataclasses import replace

from negdelay.backend import backend_name
from negdelay.config import default_config
from negdelay.montecarlo import fine_signal
from negdelay.oracle import weak_excitation_trace

POINTS = (
    ("10 ns, od 4", 10e-9, 4.0),
    ("150 ns, od 2", 150e-9, 2.0),
)


def measure(repeats: int) -> list[dict]:
    run = default_config()
    rows = []
    for label, sigma, od in POINTS:
        m = replace(run.medium, od=od)
        sig = fine_signal(m, replace(run.pulse, sigma_rms=sigma))
        weak_excitation_trace(sig, m)  # warm-up; compiles the kernels once
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            weak_excitation_trace(sig, m)
            best = min(best, time.perf_counter() - t0)
        rows.append({"label": label, "n_steps": sig.n, "seconds": best})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--emit-json", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.emit_json:
        print(json.dumps(measure(args.repeats)))
        return

    here = measure(args.repeats)
    if backend_name() == "numba":
        env = dict(os.environ, NEGDELAY_NO_NUMBA="1")
        # one repeat is plenty: the plain-python loops are ~100x slower
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--repeats", "1",
             "--emit-json"],
            env=env, capture_output=True, text=True, check=True,
        )
        other = json.loads(out.stdout)
        pairs = [(backend_name(), here), ("numpy", other)]
    else:
        pairs = [(backend_name(), here)]
        other = None

    print(f"{'point':<14} {'steps':>6}  " + "  ".join(
        f"{name:>12}" for name, _ in pairs
    ) + ("   speedup" if other else ""))
    for i, row in enumerate(here):
        cells = "  ".join(f"{rows[i]['seconds'] * 1e3:>10.2f}ms"
                          for _, rows in pairs)
        line = f"{row['label']:<14} {row['n_steps']:>6}  {cells}"
        if other:
            line += f"   {other[i]['seconds'] / row['seconds']:>6.1f}x"
        print(line)


if __name__ == "__main__":
    main()

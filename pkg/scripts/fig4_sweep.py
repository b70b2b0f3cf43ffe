"""Kicked driving body, v1(0) = 0.15 m/s, swept over the friction coefficient.

Prints the synchronisation time, the first stick onset and the amplitude
decrement of x1 per half cycle against 2b/a2, and writes an overlay of the
relative phase portraits.

    python scripts/fig4_sweep.py --b 0.05 0.2 0.5 --t-end 10
"""
import argparse
from pathlib import Path

import numpy as np

from frictpair import plots
from frictpair.analysis import amplitude_decay, sync_time
from frictpair.cli import write_atomic
from frictpair.experiments import fig4a
from frictpair.integrators import EventKind, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3, 0.5, 0.8])
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--eps", type=float, default=1e-3, help="|zdot| threshold for sync_time")
    ap.add_argument("--out", default="figures/fig4")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    series = []
    print(f"{'b':>6} {'sync_time':>10} {'first stick':>11} {'decrement/(2b/a2)':>18} {'E(t_end)':>10}")
    for b in args.b:
        sc = fig4a(b=b, t_end=args.t_end)
        tr = simulate(sc)
        ts = sync_time(tr, args.eps)
        first = next((e.time for e in tr.events if e.kind is EventKind.STICK_ONSET), None)
        try:
            d = amplitude_decay(tr, 0.0, first if first is not None else args.t_end)
            ratio = f"{np.median(d) / (2 * b / sc.params.a2):.4f}" if len(d) else "-"
        except ValueError:
            ratio = "-"
        fmt = lambda v: "-" if v is None else f"{v:.4f}"  # noqa: E731
        print(f"{b:>6g} {fmt(ts):>10} {fmt(first):>11} {ratio:>18} {tr.energy[-1]:>10.3e}")
        series.append((f"b={b:g}", tr.z, tr.zdot))
        write_atomic(out / f"b{b:g}_bodies.svg", plots.body_portraits(tr))
    write_atomic(out / "overlay_relative.svg", plots.relative_overlay(series))
    print(f"figures written to {out}/")


if __name__ == "__main__":
    main()

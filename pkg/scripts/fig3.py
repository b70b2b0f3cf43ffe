"""Stuck start at x1 = 6 mm: simplified model against the closed-form stick test.

The simplified model never leaves the stick mode, so the pair oscillates
together at sqrt(a2 / (m1 + m2)) = 10 rad/s. The closed-form model sees the
tangential force exceed the friction bound and breaks away.

    python scripts/fig3.py --out figures/fig3
"""
import argparse
from pathlib import Path

from frictpair import plots
from frictpair.analysis import stick_intervals
from frictpair.cli import write_atomic
from frictpair.dynamics import ModelVariant
from frictpair.experiments import fig3a
from frictpair.integrators import EventKind, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures/fig3")
    ap.add_argument("--t-end", type=float, default=5.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print(f"{'variant':<12} {'slip onsets':>11} {'stick onsets':>12} {'stick intervals':>15}")
    for variant in (ModelVariant.SIMPLIFIED, ModelVariant.CLOSED_FORM):
        tr = simulate(fig3a(variant=variant, t_end=args.t_end))
        n_slip = sum(e.kind is EventKind.SLIP_ONSET for e in tr.events)
        n_stick = sum(e.kind is EventKind.STICK_ONSET for e in tr.events)
        print(f"{variant.value:<12} {n_slip:>11d} {n_stick:>12d} {len(stick_intervals(tr)):>15d}")
        write_atomic(out / f"{variant.value}_bodies.svg", plots.body_portraits(tr))
        write_atomic(out / f"{variant.value}_plane.svg", plots.switching_plane(tr))
    print(f"figures written to {out}/")


if __name__ == "__main__":
    main()

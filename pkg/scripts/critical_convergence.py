"""Filippov runs started on the sliding strip above the critical energy.

Energy decays towards e_cr without reaching it, and the stick intervals
approach half the stuck-pair period. For each horizon the script prints the
fitted power-law exponent of E - e_cr and the last closed stick interval.

    python scripts/critical_convergence.py --ratio 1.05 --t-end 100 200 400 600
"""
import argparse
import time

from frictpair.analysis import classify_outcome, sliding_geometry, stick_intervals
from frictpair.core import Params
from frictpair.dynamics import ModelVariant
from frictpair.experiments import on_sliding_strip
from frictpair.integrators import EventRK4, Scenario, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ratio", type=float, default=1.05, help="E0 / e_cr")
    ap.add_argument("--b", type=float, default=0.5)
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--t-end", type=float, nargs="+", default=[100.0, 200.0, 400.0, 600.0])
    args = ap.parse_args()

    p = Params(1.0, 1.0, 0.0, 200.0, args.b)
    geo = sliding_geometry(p)
    print(f"e_cr={geo.e_cr:.6g} J  x_star={geo.x_star:.6g} m  half period={geo.half_period:.6f} s")
    print(f"{'t_end':>7} {'outcome':>22} {'exponent':>9} {'last stick':>11} {'rel. err':>9} "
          f"{'E/e_cr - 1':>11} {'cpu s':>6}")
    for t_end in args.t_end:
        sc = Scenario(p, on_sliding_strip(p, args.ratio), t_end, ModelVariant.FILIPPOV,
                      EventRK4(args.h, 1e-9))
        t0 = time.perf_counter()
        tr = simulate(sc)
        cpu = time.perf_counter() - t0
        out = classify_outcome(p, tr, 1e-12)
        last = [iv.length for iv in stick_intervals(tr) if not iv.open][-1]
        exp = "-" if out.fit_exponent is None else f"{out.fit_exponent:.3f}"
        print(f"{t_end:>7g} {out.kind.value:>22} {exp:>9} {last:>11.5f} "
              f"{last / geo.half_period - 1:>+9.2%} {tr.energy[-1] / geo.e_cr - 1:>11.3e} {cpu:>6.1f}")


if __name__ == "__main__":
    main()

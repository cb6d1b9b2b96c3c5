"""Large-deflection cantilever: which discretisations survive 50 load steps?

For each grid size and number of points per cell the script reports either
the total (maximum) Newton iterations or the last stable load step, with and
without the ghost stiffness.  The finest grid takes a few minutes per run;
pass ``--h 0.5`` for a quick look.
"""
import argparse

from _common import load_raw, run


def beam(h, ppc, ghost):
    data = load_raw("beam")
    n = int(round(12 / h))
    data["grid"].update(h=h, nx=n, ny=n)
    data["bodies"][0]["points_per_cell"] = ppc
    data["ghost"]["enabled"] = ghost
    return run(data).summary


def cell(s):
    if s["failed_at"] is None:
        return f"ok {s['total_iterations']}({s['max_iterations']})"
    return f"x {s['final_stable_step']}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    ap.add_argument("--ppc", type=int, nargs="+", default=[2, 3, 4])
    args = ap.parse_args()

    print(f"{'h':>6s} {'ppc':>4s} {'standard':>12s} {'ghost':>12s} {'tip v (m)':>10s} {'elastica':>9s}")
    for h in args.h:
        for ppc in args.ppc:
            plain, ghost = beam(h, ppc, False), beam(h, ppc, True)
            tip = ghost.get("tip_displacement", [float("nan")] * 2)[1]
            print(f"{h:6.3f} {ppc:4d} {cell(plain):>12s} {cell(ghost):>12s} {tip:10.3f} {-ghost['elastica_tip'][1]:9.3f}")


if __name__ == "__main__":
    main()

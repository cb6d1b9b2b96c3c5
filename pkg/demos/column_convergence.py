"""Self-weight compression of a 50 m column: stress error under refinement.

The column halves its height over 40 load steps.  The normalised vertical
stress error is compared with and without the ghost stiffness and its
observed order of convergence is fitted.
"""
import argparse

from _common import load_raw, run
from ghostmpm.diagnostics import convergence_order


def column(h, ghost, ratio=1.0):
    data = load_raw("column")
    data["grid"].update(h=h, ny=int(round(50 / h)) + 1)
    data["grid"]["dirichlet"][1] = {"x": h, "fix": ["x"]}
    data["bodies"][0]["rect"] = [[0.0, 0.0], [h, 50.0]]
    data["ghost"] = {"enabled": ghost, "gamma_k": ratio * data["materials"][0]["E"]}
    return run(data).summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=4, help="meshes h = 50/2^3 ... 50/2^(2+levels)")
    args = ap.parse_args()

    hs = [50 / 2**k for k in range(3, 3 + args.levels)]
    for ghost in (False, True):
        errs = []
        for h in hs:
            s = column(h, ghost)
            errs.append(s["stress_error"])
            print(f"ghost={ghost!s:5s} h={h:8.5f}  error={s['stress_error']:.4e}  height={s['final_height']:.2f} m  iterations={s['total_iterations']}")
        print(f"  observed order {convergence_order(hs, errs):.2f}\n")

    print("penalty sensitivity at h = 1.5625")
    for r in (1e-6, 1e-3, 1.0, 1e3, 1e6):
        print(f"  gamma_k/E = {r:7.0e}  error = {column(1.5625, True, r)['stress_error']:.4e}")


if __name__ == "__main__":
    main()

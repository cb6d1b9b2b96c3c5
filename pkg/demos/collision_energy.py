"""Energy error of two colliding elastic squares for each mass treatment.

Prints the normalised mean energy error for USL and USF with ghost and
lumped mass, at the base time step and at half of it.  ``--steps`` counts
steps at the base time step, so a small value just shortens the run.
"""
import argparse

from _common import load_raw, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=1000)
    args = ap.parse_args()

    print(f"{'order':5s} {'mass':7s} {'n steps':>8s} {'error':>12s}")
    for order in ("USL", "USF"):
        for mode in ("ghost", "lumped"):
            for refine in (1, 2):
                data = load_raw("colliding_elastic")
                e = data["solver"]["explicit"]
                n = args.steps * refine
                e.update(stress_order=order, mass_mode=mode, n_steps=n, dt=e["dt"] / refine)
                s = run(data).summary
                if s["diverged_at"] is None:
                    print(f"{order:5s} {mode:7s} {n:8d} {s['normalised_mean_energy_error']:12.4e}")
                else:
                    print(f"{order:5s} {mode:7s} {n:8d}   diverged at step {s['diverged_at']}")


if __name__ == "__main__":
    main()

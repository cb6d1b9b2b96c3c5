"""Uniform expansion of a stiffness-free square.

The exact grid acceleration is zero, so any displacement error comes from
the velocity mapping.  Ghost-stabilised consistent mass reproduces the
linear velocity field to round-off; lumped mass does not, and the plain
consistent mass cannot even be inverted once a corner point grazes a cell.
"""
import argparse

from _common import load_raw, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=1000)
    args = ap.parse_args()

    for mode in ("ghost", "lumped", "consistent"):
        for update in ("FLIP", "PIC"):
            data = load_raw("stretching_body")
            data["solver"]["explicit"].update(mass_mode=mode, velocity_update=update, n_steps=args.steps)
            s = run(data).summary
            if s["diverged_at"] is not None:
                print(f"{mode:10s} {update:4s}  diverged at step {s['diverged_at']}: {s['message']}")
            else:
                print(f"{mode:10s} {update:4s}  max |u - t v0| = {s['max_displacement_error']:.3e} m")


if __name__ == "__main__":
    main()

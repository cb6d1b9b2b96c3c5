"""Run the imported point-cloud example through the command line entry point.

Equivalent to ``ghostmpm run configs/custom_disc.yaml --output-dir out/custom_disc``;
afterwards the VTK snapshots can be opened in ParaView.
"""
import sys

from _common import CONFIGS
from ghostmpm.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(CONFIGS.parent / "out" / "custom_disc")
    sys.exit(main(["run", str(CONFIGS / "custom_disc.yaml"), "--output-dir", out, "--dump-ghost-edges"]))

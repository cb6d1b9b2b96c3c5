"""Small helpers shared by the demo scripts."""
import copy
from pathlib import Path

import yaml

from ghostmpm.config import parse_config
from ghostmpm.scenarios import run_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load_raw(name):
    return yaml.safe_load((CONFIGS / f"{name}.yaml").read_text())


def run(data, output_dir=None):
    data = copy.deepcopy(data)
    data.pop("output", None)
    return run_scenario(parse_config(data, base_dir=CONFIGS), output_dir=output_dir)

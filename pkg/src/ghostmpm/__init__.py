"""Plane-strain material point method with ghost-penalty stabilisation.

The package covers sMPM and GIMP bases, explicit dynamics with consistent,
lumped or ghost-stabilised mass, implicit quasi-static Newton load stepping
with ghost stiffness, and the diagnostics used to compare them.
"""
from .basis import evaluate
from .config import load_config, parse_config
from .errors import ConfigurationError, DivergenceError, OutOfDomainError, PointCloudParseError
from .explicit import ExplicitConfig, run_explicit
from .grid import BackgroundGrid, build_grid
from .implicit import ImplicitConfig, run_implicit
from .mpoints import Material, MaterialPoints, generate_block, generate_rect, import_point_cloud
from .scenarios import run_scenario

__version__ = "0.1.0"

__all__ = [
    "BackgroundGrid",
    "ConfigurationError",
    "DivergenceError",
    "ExplicitConfig",
    "ImplicitConfig",
    "Material",
    "MaterialPoints",
    "OutOfDomainError",
    "PointCloudParseError",
    "build_grid",
    "evaluate",
    "generate_block",
    "generate_rect",
    "import_point_cloud",
    "load_config",
    "parse_config",
    "run_explicit",
    "run_implicit",
    "run_scenario",
]

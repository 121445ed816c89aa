"""
Settings loader: config.json sections merged over built-in defaults
"""

import copy
import json
import logging
import os
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

CONFIG_PATH = os.path.join(os.path.dirname(__file__), "..", "config.json")

DEFAULT_SETTINGS: Dict[str, Dict[str, Any]] = {
    "tolerances": {
        "eps_herm": 1e-12,
        "eps_rank": 1e-9,
        "eps_root_cluster": 1e-8,
        "eps_snap": 1e-8,
        "eps_unitary": 1e-10,
        "quad_target": 1e-8,
    },
    "spectra": {
        "branch_delta": 0.1,
        "branch_grid_size": 201,
        "trim_threshold": 1e-10,
    },
    "levinson": {
        "initial_grid": 256,
        "max_refine": 12,
        "rounding_residual": 0.01,
    },
    "completeness": {
        "x_cut": 6,
        "quad_limit": 2000,
        "acceptance": 1e-6,
        "half_bound_acceptance": 1e-4,
    },
    "dynamics": {
        "sigma_x": 10.0,
        "length": 400,
        "buffer": 20,
        "measure_fraction": 0.7,
        "leakage_threshold": 0.05,
    },
    "fuzz": {
        "count": 500,
        "max_n": 4,
        "max_m": 6,
        "weight": 2.0,
        "complex_weights": True,
        "workers": 4,
    },
}


def load_settings(config_path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """Load configuration settings, section by section over the defaults"""
    settings = copy.deepcopy(DEFAULT_SETTINGS)
    path = config_path or CONFIG_PATH

    if not os.path.exists(path):
        if config_path is not None:
            logger.warning("Config file %s not found, using defaults", path)
        return settings

    try:
        with open(path, "r", encoding="utf-8") as f:
            loaded = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.warning("Could not read %s (%s), using defaults", path, e)
        return settings

    for section, values in loaded.items():
        if not isinstance(values, dict):
            logger.warning("Ignoring non-object config section '%s'", section)
            continue
        settings.setdefault(section, {}).update(values)

    return settings

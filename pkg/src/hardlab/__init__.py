"""Hard-disc chaos, time-reversal and semiclassical spreading lab."""

from hardlab.model_core import (
    SystemConfig,
    SystemState,
    Vec2,
    de_broglie,
    load_config,
    mean_free_path_nominal,
    parse_region,
    sample_initial_configuration,
)

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "SystemState",
    "Vec2",
    "de_broglie",
    "load_config",
    "mean_free_path_nominal",
    "parse_region",
    "sample_initial_configuration",
]

"""Space-time adaptive solver for periodic parabolic problems.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from _heatpot import (  # noqa: F401
    Field,
    HeatpotConfigError,
    HeatpotError,
    build_field,
    default_config,
    gauss_transform,
    heat_kernel,
    helmholtz_decompose,
    poisson_solve,
    simulate,
    vorticity,
)

__all__ = [
    "Field",
    "HeatpotConfigError",
    "HeatpotError",
    "build_field",
    "default_config",
    "gauss_transform",
    "heat_kernel",
    "helmholtz_decompose",
    "poisson_solve",
    "simulate",
    "vorticity",
]

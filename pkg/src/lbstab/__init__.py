"""Linear stability of lattice BGK models with non-ideal equations of state."""

__version__ = "0.1.0"

from .eos import (  # noqa: E402
    EntropicIsothermal,
    EquationOfState,
    IdealGas,
    ShallowWater,
    VanDerWaals,
    eos_from_config,
    maxwell_coexistence,
)
from .lattice import D1Q3, D2Q9, D3Q27, LatticeDescriptor, UniformState  # noqa: E402

__all__ = [
    "EntropicIsothermal",
    "EquationOfState",
    "IdealGas",
    "ShallowWater",
    "VanDerWaals",
    "eos_from_config",
    "maxwell_coexistence",
    "D1Q3",
    "D2Q9",
    "D3Q27",
    "LatticeDescriptor",
    "UniformState",
]

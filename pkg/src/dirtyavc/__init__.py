"""Simulation and numerical checks for the Gaussian arbitrarily varying channel
with a state known to the encoder and the jammer, coded by dirty-paper binning."""
__version__ = "0.1.0"

from .channel import DerivedConstants, SystemParams, derive_constants, transmit
from .codec import CodeConfig, Codebook, build_codebook, decode, encode
from .errors import (ConfigError, DegenerateInputError, DimensionError, DirtyAVCError,
                     DomainError, GeometryError, ResourceError)
from .jammer import JammerStrategy, make_jammer, shipped_strategies

__all__ = [
    "CodeConfig", "Codebook", "ConfigError", "DegenerateInputError", "DerivedConstants",
    "DimensionError", "DirtyAVCError", "DomainError", "GeometryError", "JammerStrategy",
    "ResourceError", "SystemParams", "build_codebook", "decode", "derive_constants", "encode",
    "make_jammer", "shipped_strategies", "transmit",
]

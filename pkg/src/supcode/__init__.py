"""Superimposed random coding: code generation, signature statistics, false-drop prediction."""

from .bitkit import BitPattern, LengthMismatchError, bit_or, covers, superimpose
from .codegen import Codebook, CodeSpec, SplitMix64, build_codebook
from .estimator import SuperimposedEncoder
from .isotropic import IsotropicDistribution, InvalidDistributionError, from_binomial, from_fixed_weight
from .models import DesignReport, SourceModel

__version__ = "0.1.0"

__all__ = [
    "BitPattern", "LengthMismatchError", "bit_or", "covers", "superimpose",
    "Codebook", "CodeSpec", "SplitMix64", "build_codebook",
    "SuperimposedEncoder",
    "IsotropicDistribution", "InvalidDistributionError", "from_binomial", "from_fixed_weight",
    "DesignReport", "SourceModel",
]

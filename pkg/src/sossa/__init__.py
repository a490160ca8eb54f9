"""Workbench for sum-of-squares spectral amplification pipelines."""

__version__ = "0.1.0"

from . import doublefact, operators, phaseest, sampler, sosopt, specamp, syk

__all__ = [
    "doublefact",
    "operators",
    "phaseest",
    "sampler",
    "sosopt",
    "specamp",
    "syk",
    "__version__",
]

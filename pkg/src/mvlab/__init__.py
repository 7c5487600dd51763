"""mvlab: simulation and verification lab for distribution-dependent
(mean-field) SDEs and spectrally truncated SPDEs with memory.

Subpackages follow the pipeline: core value types, model definitions,
optimal-transport distances, trajectory integrators, mean-field /
particle machinery, analysis (condition checkers, rate fits,
experiments), and a batch CLI.
"""

__version__ = "0.1.0"

from .core import (
    EmpiricalMeasure,
    NoiseStream,
    Segment,
    gaussian_increments,
    segment_shift,
    sup_norm,
)

__all__ = [
    "EmpiricalMeasure",
    "NoiseStream",
    "Segment",
    "gaussian_increments",
    "segment_shift",
    "sup_norm",
    "__version__",
]

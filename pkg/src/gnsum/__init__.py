"""Hidden-population size estimation from network reports.

Submodules: ``datamodel`` and ``io`` (survey records and files), ``netsim``
(simulated populations), ``sampling`` (designs and resamplers),
``estimators``, ``sensitivity``, ``variance`` (intervals), ``simharness``
(simulation experiments) and ``cli``.
"""

from .datamodel import (
    Estimate,
    FrameSurvey,
    HiddenSurvey,
    Interval,
    KnownPopulationRegistry,
    ProbeGroup,
)
from .errors import ValidationError
from .estimators import (
    AdjustmentFactors,
    adjusted_scaleup,
    basic_scaleup,
    degree_ratio,
    frame_ratio,
    generalized_scaleup,
    kp_mean_degree,
    true_positive_rate,
    visibility_mean,
)
from .netsim import SimConfig, census_quantities, generate_population

__version__ = "0.1.0"

__all__ = [
    "AdjustmentFactors",
    "Estimate",
    "FrameSurvey",
    "HiddenSurvey",
    "Interval",
    "KnownPopulationRegistry",
    "ProbeGroup",
    "SimConfig",
    "ValidationError",
    "adjusted_scaleup",
    "basic_scaleup",
    "census_quantities",
    "degree_ratio",
    "frame_ratio",
    "generalized_scaleup",
    "generate_population",
    "kp_mean_degree",
    "true_positive_rate",
    "visibility_mean",
]

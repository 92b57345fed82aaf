"""nlpot: numerical toolkit for nonlinear potentials of measures,
measure-growth regularity criteria, and model solvers for p-Laplacian
equations with measure data."""

from .geometry import Ball, SpaceParams
from .measures import (
    BallCloud,
    BoxUniform,
    DiracSum,
    MeasureSum,
    RadialDensity,
    Restricted,
    Scaled,
    ball_mass,
    dilate,
    integrate,
    lebesgue_ball,
    mollify,
    restrict,
    scale,
    total_mass,
    zero_measure,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "SpaceParams",
    "DiracSum",
    "RadialDensity",
    "BallCloud",
    "BoxUniform",
    "Restricted",
    "Scaled",
    "MeasureSum",
    "ball_mass",
    "restrict",
    "scale",
    "mollify",
    "total_mass",
    "dilate",
    "integrate",
    "lebesgue_ball",
    "zero_measure",
    "__version__",
]

"""Densities with constant geodesic X-ray transform, their synthesis and boundary tests."""

__version__ = "0.1.0"

from .abel import RadialDensity, abel_forward, abel_inverse, synthesize_constant  # noqa: E402
from .metric import RadialProfile, herglotz_check, trace_geodesic  # noqa: E402
from .xray2d import SupportFunction, ball_density, disc_test, line_integral  # noqa: E402

__all__ = [
    "RadialDensity",
    "RadialProfile",
    "SupportFunction",
    "abel_forward",
    "abel_inverse",
    "ball_density",
    "disc_test",
    "herglotz_check",
    "line_integral",
    "synthesize_constant",
    "trace_geodesic",
]

"""Haar-random unitary spectra and numerical checks on the logarithmic
derivative of CUE characteristic polynomials."""

__version__ = "0.1.0"

from .logderiv import MesoscopicSpec, log_deriv, s_n  # noqa: E402
from .sampler import RngStream, eigenangles, sample_cue_angles, sample_haar_unitary  # noqa: E402

__all__ = [
    "MesoscopicSpec",
    "RngStream",
    "eigenangles",
    "log_deriv",
    "s_n",
    "sample_cue_angles",
    "sample_haar_unitary",
]

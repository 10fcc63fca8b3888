"""Singularity detection for conductivity jumps from CGO spectral data.

Pipeline: phantom -> Beltrami CGO solves over ``k = tau e^{i phi}`` ->
partial Fourier transform in ``tau`` -> boundary-averaged sinogram ->
parity combination -> filtered back-projection or Lambda reconstruction.
"""

from .grid import FT_CONVENTION, ComplexField, PeriodicGrid, make_grid
from .phantom import PhantomSpec, Shape, SmoothBump, build_phantom, named_phantom, sigma_to_mu
from .spectral import KGrid, Sinogram, SpectralCube

__all__ = [
    "FT_CONVENTION", "ComplexField", "PeriodicGrid", "make_grid", "PhantomSpec", "Shape",
    "SmoothBump", "build_phantom", "named_phantom", "sigma_to_mu", "KGrid", "Sinogram",
    "SpectralCube",
]
__version__ = "0.1.0"

"""Stage functions shared by the CLI and the acceptance checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, make_grid
from .phantom import PhantomSpec, build_phantom, mu_to_sigma, named_phantom, sigma_to_mu
from .singpred import InterfaceCurve
from .spectral import (KGrid, Sinogram, SolverSettings, boundary_points, cube_to_sinogram,
                       parity_combine, sweep, sweep_neumann, apply_window_t)
from .tomo import ANALYTIC_CONSTANT, calibrate_constant, fbp_invert, forward_T1a, lambda_invert

log = logging.getLogger(__name__)

REFERENCE_PHANTOM = "radial-smooth"


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def phantom_mu(spec: PhantomSpec, side_half: float, exponent: int):
    grid = make_grid(side_half, exponent)
    sigma = build_phantom(spec, grid)
    mu, eps = sigma_to_mu(sigma)
    return sigma, mu, eps


@dataclass
class SinogramSet:
    plus: Sinogram
    minus: Sinogram
    odd: Sinogram
    even: Sinogram


def sinograms_from_cubes(cubes: dict, kgrid: KGrid, weight=1.0) -> SinogramSet:
    plus = cube_to_sinogram(cubes["+"], kgrid, weight)
    minus = cube_to_sinogram(cubes["-"], kgrid, weight)
    odd, even = parity_combine(plus, minus)
    return SinogramSet(plus, minus, odd, even)


def full_sinograms(mu: ComplexField, kgrid: KGrid, n_b: int, settings=SolverSettings(),
                   workers: int = 1, weight=1.0) -> tuple[dict, SinogramSet]:
    cubes = sweep(mu, kgrid, boundary_points(n_b), (1, -1), settings, workers)
    return cubes, sinograms_from_cubes(cubes, kgrid, weight)


def neumann_sinograms(mu: ComplexField, kgrid: KGrid, n_b: int, N: int, signs=(1,),
                      workers: int = 1, weight=1.0) -> dict:
    """``{(sign, n): Sinogram}`` for the first ``N`` Neumann terms."""
    cubes = sweep_neumann(mu, kgrid, boundary_points(n_b), N, signs, workers)
    return {key: cube_to_sinogram(c, kgrid, weight) for key, c in cubes.items()}


def calibrate(side_half: float, exponent: int, kgrid: KGrid, n_b: int, workers: int = 1,
              spec: PhantomSpec | None = None) -> complex:
    """Least-squares constant between the term-1 sinogram and the windowed oracle."""
    spec = spec or named_phantom(REFERENCE_PHANTOM)
    _, mu, _ = phantom_mu(spec, side_half, exponent)
    term1 = neumann_sinograms(mu, kgrid, n_b, 1, workers=workers)[("+", 1)]
    unit = windowed_oracle(mu, kgrid, 1.0)
    return calibrate_constant(term1, unit)


def windowed_oracle(mu: ComplexField, kgrid: KGrid, constant=ANALYTIC_CONSTANT) -> Sinogram:
    """Radon-oracle term-1 sinogram with the spectral window applied in ``t``."""
    s = forward_T1a(mu, kgrid.t, kgrid.phi, constant)
    s.values = apply_window_t(s.values, kgrid)
    return s


def reconstruct(sino: Sinogram, grid, constant, route: str = "fbp") -> dict:
    """Return ``{"fbp": (mu, sigma), "lambda": edge}`` for the requested route(s)."""
    out = {}
    if route in ("fbp", "both"):
        mu_rec = fbp_invert(sino, grid, constant)
        out["fbp"] = (mu_rec, mu_to_sigma(mu_rec))
    if route in ("lambda", "both"):
        out["lambda"] = lambda_invert(sino, grid, constant)
    return out


def phantom_curves(spec: PhantomSpec) -> list[InterfaceCurve]:
    """Jump curves of the inclusions (the smooth background has none).

    A half disc contributes its full circle and its diameter; the circle part
    over-predicts on the missing half.
    """
    curves = []
    for s in spec.inclusions:
        c = complex(s.center)
        if s.kind == "disc":
            curves.append(InterfaceCurve("circle", c, s.radius))
        elif s.kind == "annulus":
            curves.append(InterfaceCurve("circle", c, s.radius))
            curves.append(InterfaceCurve("circle", c, s.inner))
        elif s.kind == "ellipse":
            curves.append(InterfaceCurve("ellipse", c, semi_axes=tuple(s.semi_axes),
                                         rotation=s.rotation))
        elif s.kind == "halfdisc":
            curves.append(InterfaceCurve("circle", c, s.radius))
            d = 1j * np.exp(1j * s.rotation) * s.radius
            curves.append(InterfaceCurve("polyline", vertices=(c + d, c - d), closed=False))
    return curves

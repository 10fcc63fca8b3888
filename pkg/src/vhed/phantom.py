"""Conductivity phantoms and the conductivity <-> Beltrami coefficient maps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import ComplexField, PeriodicGrid

log = logging.getLogger(__name__)

SUPPORT_RADIUS = 0.95
MU_CLAMP = 0.95


@dataclass(frozen=True)
class SmoothBump:
    """Gaussian bump ``amplitude * exp(-|z - center|^2 / width)``.

    The bump is multiplied by a C-infinity cutoff equal to 1 for
    ``|z| <= taper_start`` and 0 for ``|z| >= SUPPORT_RADIUS`` so the
    conductivity is identically 1 near the boundary.
    """

    amplitude: float = 0.4
    width: float = 0.36
    center: complex = 0j
    taper_start: float = 0.7

    def __call__(self, z: np.ndarray) -> np.ndarray:
        bump = self.amplitude * np.exp(-np.abs(z - self.center) ** 2 / self.width)
        return bump * smooth_cutoff(np.abs(z), self.taper_start, SUPPORT_RADIUS)


def smooth_cutoff(r: np.ndarray, r0: float, r1: float) -> np.ndarray:
    """C-infinity step: 1 for r <= r0, 0 for r >= r1."""
    x = np.clip((np.asarray(r, dtype=float) - r0) / (r1 - r0), 0.0, 1.0)

    def psi(a):
        out = np.zeros_like(a)
        pos = a > 0
        out[pos] = np.exp(-1.0 / a[pos])
        return out

    a, b = psi(1.0 - x), psi(x)
    return a / (a + b)


@dataclass(frozen=True)
class Shape:
    """One inclusion: ``kind`` is disc, ellipse, halfdisc or annulus.

    Parameters used per kind:

    - disc: ``center``, ``radius``
    - ellipse: ``center``, ``semi_axes``, ``rotation`` (radians)
    - halfdisc: ``center``, ``radius``, ``rotation`` (direction of the flat side's
      outward normal is ``-exp(i rotation)``; the curved side faces ``exp(i rotation)``)
    - annulus: ``center``, ``inner``, ``radius`` (outer)
    """

    kind: str
    offset: float
    center: complex = 0j
    radius: float = 0.0
    semi_axes: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    inner: float = 0.0

    def __post_init__(self):
        if self.kind not in ("disc", "ellipse", "halfdisc", "annulus"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.extent() > SUPPORT_RADIUS:
            raise ValueError(f"{self.kind} reaches radius {self.extent():.3f} > {SUPPORT_RADIUS}")

    def extent(self) -> float:
        c = abs(complex(self.center))
        if self.kind == "ellipse":
            return c + max(self.semi_axes)
        return c + self.radius

    def indicator(self, z: np.ndarray) -> np.ndarray:
        w = (z - complex(self.center)) * np.exp(-1j * self.rotation)
        if self.kind == "disc":
            return np.abs(w) < self.radius
        if self.kind == "annulus":
            return (np.abs(w) < self.radius) & (np.abs(w) >= self.inner)
        if self.kind == "halfdisc":
            return (np.abs(w) < self.radius) & (w.real >= 0)
        a, b = self.semi_axes
        return (w.real / a) ** 2 + (w.imag / b) ** 2 < 1.0


@dataclass(frozen=True)
class PhantomSpec:
    background: SmoothBump | None = None
    inclusions: tuple[Shape, ...] = field(default_factory=tuple)
    smoothing_cells: int = 0


def build_phantom(spec: PhantomSpec, grid: PeriodicGrid) -> ComplexField:
    """Sample the conductivity of ``spec`` on ``grid`` (real-valued field).

    Jumps are sampled by midpoint membership; ``smoothing_cells > 0`` blurs
    the inclusion layer with a Gaussian of that many cells.
    """
    z = grid.z
    sigma = np.ones(z.shape)
    if spec.background is not None:
        sigma = sigma + spec.background(z)
    jumps = np.zeros(z.shape)
    for shape in spec.inclusions:
        jumps += shape.offset * shape.indicator(z)
    if spec.smoothing_cells:
        from scipy.ndimage import gaussian_filter

        jumps = gaussian_filter(jumps, spec.smoothing_cells, mode="wrap")
        jumps[np.abs(z) >= SUPPORT_RADIUS] = 0.0
    sigma = sigma + jumps
    if grid.side_half < 2 * SUPPORT_RADIUS:
        raise ValueError(f"grid side_half {grid.side_half} < 2 x support radius")
    if sigma.min() <= 0:
        raise ValueError(f"conductivity not positive (min {sigma.min():.3g})")
    return ComplexField(grid, sigma.astype(complex))


def sigma_to_mu(sigma: ComplexField) -> tuple[ComplexField, float]:
    """Return ``mu = (1 - sigma) / (1 + sigma)`` and ``eps = 1 - max|mu|``."""
    s = sigma.values.real
    if s.min() <= 0:
        raise ValueError("conductivity must be positive")
    mu = (1.0 - s) / (1.0 + s)
    return ComplexField(sigma.grid, mu.astype(complex)), float(1.0 - np.abs(mu).max())


def mu_to_sigma(mu: ComplexField, imag_tol: float = 1e-6) -> ComplexField:
    """Invert the Beltrami map on the real part of ``mu``, clamped to [-0.95, 0.95]."""
    v = mu.values
    scale = max(np.abs(v).max(), 1e-300)
    if np.abs(v.imag).max() > imag_tol * scale:
        log.warning("discarding imaginary part of mu (max %.3g)", np.abs(v.imag).max())
    m = v.real
    clipped = np.clip(m, -MU_CLAMP, MU_CLAMP)
    if np.any(clipped != m):
        log.info("clamped %d values of mu to +-%.2f", int(np.sum(clipped != m)), MU_CLAMP)
    return ComplexField(mu.grid, ((1.0 - clipped) / (1.0 + clipped)).astype(complex))


def named_phantom(name: str, **params) -> PhantomSpec:
    """Built-in phantoms.

    ``radial-smooth``, ``radial-1jump`` and ``radial-2jump`` are the three
    radial conductivities (smooth background, one jump of -0.3 at radius 0.6,
    and an extra +0.3 at radius 0.4).  ``circle-rho`` is a single disc of
    radius ``rho`` (default 0.2) with offset ``offset`` (default +1.0) on a
    unit background; ``nested-circles`` is the piecewise constant two-jump
    profile without background.  ``hme`` is an ellipse containing a half
    disc; ``stroke-hem`` / ``stroke-clot`` place a high / low conductivity
    lesion inside a low-conductivity skull shell.
    """
    bg = SmoothBump(**params.pop("background", {}))
    if name == "radial-smooth":
        spec = PhantomSpec(bg)
    elif name == "radial-1jump":
        spec = PhantomSpec(bg, (Shape("disc", -0.3, radius=0.6),))
    elif name == "radial-2jump":
        spec = PhantomSpec(bg, (Shape("disc", -0.3, radius=0.6), Shape("disc", 0.3, radius=0.4)))
    elif name == "nested-circles":
        spec = PhantomSpec(None, (Shape("disc", -0.3, radius=0.6), Shape("disc", 0.3, radius=0.4)))
    elif name == "circle-rho":
        rho = params.pop("rho", 0.2)
        offset = params.pop("offset", 1.0)
        center = complex(params.pop("center", 0j))
        spec = PhantomSpec(None, (Shape("disc", offset, center=center, radius=rho),))
    elif name == "hme":
        spec = PhantomSpec(
            None,
            (
                Shape("ellipse", 0.5, semi_axes=(0.7, 0.45)),
                Shape("halfdisc", 0.6, center=0.15 + 0.05j, radius=0.25, rotation=np.pi / 2),
            ),
        )
    elif name in ("stroke-hem", "stroke-clot"):
        lesion = 0.5 if name == "stroke-hem" else -0.4
        spec = PhantomSpec(
            None,
            (
                Shape("annulus", -0.7, inner=0.8, radius=0.9),
                Shape("disc", lesion, center=0.3 + 0.2j, radius=0.2),
            ),
        )
    else:
        raise KeyError(f"unknown phantom {name!r}")
    if params:
        raise ValueError(f"unused phantom parameters for {name}: {sorted(params)}")
    return spec

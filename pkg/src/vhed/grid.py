"""Periodic computational grid and the planar Fourier-multiplier operators.

Transform convention (used by every module in the package)
----------------------------------------------------------
A field ``f`` sampled on the torus ``[-s, s)^2`` is expanded as

    f(x, y) = sum_xi  fhat(xi) * exp(i (xi_x x + xi_y y)),

with ``xi = (pi / s) * m`` for integer ``m`` (``numpy.fft.fftfreq``
ordering).  Under this convention

    dbar  = (d/dx + i d/dy) / 2   has symbol   i (xi_x + i xi_y) / 2
    d     = (d/dx - i d/dy) / 2   has symbol   i (xi_x - i xi_y) / 2

and the solid Cauchy transform ``P`` and Beurling transform ``S`` are the
multipliers ``1 / sym(dbar)`` and ``sym(d) / sym(dbar)``.  Both are set to
zero at the zero frequency.  Fields are treated as periodic; anything that
is not periodic on the torus (for example a linear trend in ``z``) must be
windowed by the caller before it is differentiated.

The multipliers are the torus transforms: ``P`` convolves with
``(zeta(w) - (pi / A) conj(w)) / pi`` (``zeta`` the Weierstrass function of
the period lattice, ``A`` the torus area) rather than with ``1 / (pi w)``.
For compactly supported fields the smooth difference is a polynomial in
the moments of ``f``; ``plane=True`` adds it back (see
``PeriodicGrid.lattice_correction``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from scipy.special import binom, gamma

FT_CONVENTION = "vhed-ft1"

# lattice sums G_p = sum' w^-p are kept for p = 4, 8, ..., LATTICE_ORDER
LATTICE_ORDER = 28


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform ``n x n`` sampling of the torus ``[-side_half, side_half)^2``.

    Values are stored row-major with rows indexed by ``y`` and columns by
    ``x``: ``values[i, j]`` lives at ``x[j] + 1j * y[i]``.
    """

    side_half: float
    n: int

    def __post_init__(self):
        if self.side_half <= 0:
            raise ValueError(f"side_half must be positive, got {self.side_half}")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.side_half / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.side_half + self.spacing * np.arange(self.n)

    @cached_property
    def z(self) -> np.ndarray:
        x = self.axis
        return x[None, :] + 1j * x[:, None]

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical angular frequencies ``(xi_x, xi_y)`` on the FFT layout."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        return np.broadcast_to(xi[None, :], (self.n, self.n)), np.broadcast_to(
            xi[:, None], (self.n, self.n)
        )

    @cached_property
    def dbar_symbol(self) -> np.ndarray:
        xx, xy = self.frequencies
        return 0.5j * (xx + 1j * xy)

    @cached_property
    def d_symbol(self) -> np.ndarray:
        xx, xy = self.frequencies
        return 0.5j * (xx - 1j * xy)

    @cached_property
    def cauchy_multiplier(self) -> np.ndarray:
        sym = self.dbar_symbol
        out = np.zeros_like(sym)
        nz = sym != 0
        out[nz] = 1.0 / sym[nz]
        return out

    @cached_property
    def beurling_multiplier(self) -> np.ndarray:
        sym = self.dbar_symbol
        out = np.zeros_like(sym)
        nz = sym != 0
        out[nz] = self.d_symbol[nz] / sym[nz]
        return out

    @cached_property
    def lattice_sums(self) -> dict[int, float]:
        """``G_p = sum' w^-p`` over the period lattice ``2 s (Z + iZ)``.

        Only ``p = 0 mod 4`` survive the square symmetry; ``G_4`` has a closed form.
        """
        period = 2.0 * self.side_half
        m = np.arange(-64, 65)
        w = (m[None, :] + 1j * m[:, None]).ravel()
        w = w[w != 0]
        out = {4: gamma(0.25) ** 8 / (960.0 * np.pi**2) / period**4}
        for p in range(8, LATTICE_ORDER + 1, 4):
            out[p] = float(np.sum(w ** (-p)).real) / period**p
        return out

    def lattice_correction(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(P f - P_per f, S f - S_per f)`` on the whole grid.

        Uses ``1/w - zeta(w) = sum_p G_p w^(p-1)``; accurate when ``f`` is
        supported in ``|z| <= side_half / 2`` and the result is read there.
        """
        corr = LatticeCorrection(self, values != 0)
        dp, ds = corr(values[values != 0])
        return dp.reshape(self.n, self.n), ds.reshape(self.n, self.n)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return sfft.fft2(values)

    def ifft(self, spectrum: np.ndarray) -> np.ndarray:
        return sfft.ifft2(spectrum)

    def multiply(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        return sfft.ifft2(sfft.fft2(values) * multiplier)

    def cauchy_and_beurling(self, values: np.ndarray, plane: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(P f, S f)`` sharing one forward transform."""
        spec = sfft.fft2(values)
        p = sfft.ifft2(spec * self.cauchy_multiplier)
        s = sfft.ifft2(spec * self.beurling_multiplier)
        if plane:
            dp, ds = self.lattice_correction(values)
            p += dp
            s += ds
        return p, s

    def field(self, values) -> "ComplexField":
        return ComplexField(self, np.asarray(values, dtype=complex))

    def zeros(self) -> "ComplexField":
        return ComplexField(self, np.zeros((self.n, self.n), dtype=complex))

    def check_support(self, values: np.ndarray, radius: float) -> None:
        """Assert that ``values`` vanish outside ``radius`` and that the torus
        is at least twice as wide as the support."""
        if self.side_half < 2.0 * radius:
            raise ValueError(
                f"side_half={self.side_half} is below twice the support radius {radius}"
            )
        outside = np.abs(self.z) > radius
        if np.any(np.abs(values[outside]) > 0):
            raise ValueError(f"field is not supported inside radius {radius}")


class LatticeCorrection:
    """Plane-minus-periodic parts of ``P`` and ``S`` as moment polynomials.

    Sources live on ``source_mask``; values are returned on ``target_mask``
    (the whole grid by default).  Both products are small dense matmuls, so
    one instance is reused across the matvecs of a solve.
    """

    def __init__(self, grid: PeriodicGrid, source_mask: np.ndarray, target_mask=None):
        self.grid = grid
        self.src = np.flatnonzero(source_mask)
        self.tgt = (np.arange(grid.n * grid.n) if target_mask is None
                    else np.flatnonzero(target_mask))
        powers = np.arange(LATTICE_ORDER)
        zs = grid.z.ravel()[self.src]
        zt = grid.z.ravel()[self.tgt]
        self.vs = (zs[:, None] ** powers) * grid.cell_area
        self.vt = zt[:, None] ** powers
        self.zbar_s = np.conj(zs) * grid.cell_area
        self.zbar_t = np.conj(zt)
        self.area = (2.0 * grid.side_half) ** 2
        # coefficient of z^q from moment j: sum_p G_p binom(p-1, q) (-1)^j, q + j = p - 1
        bp = np.zeros((LATTICE_ORDER, LATTICE_ORDER))
        bs = np.zeros((LATTICE_ORDER, LATTICE_ORDER))
        for p, g in grid.lattice_sums.items():
            for deg, coef, mat in ((p - 1, g, bp), (p - 2, g * (p - 1), bs)):
                q = np.arange(deg + 1)
                mat[q, deg - q] += coef * binom(deg, q) * (-1.0) ** (deg - q)
        self.bp = bp / np.pi
        self.bs = bs / np.pi

    def __call__(self, f_src: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        moments = f_src @ self.vs
        dp = self.vt @ (self.bp @ moments)
        dp += (self.zbar_t * moments[0] - self.zbar_s @ f_src) / self.area
        ds = self.vt @ (self.bs @ moments)
        return dp, ds


def make_grid(side_half: float, exponent: int) -> PeriodicGrid:
    """Build a grid with ``2**exponent`` samples per axis."""
    if int(exponent) != exponent or exponent < 4:
        raise ValueError(f"exponent must be an integer >= 4, got {exponent}")
    return PeriodicGrid(float(side_half), 2 ** int(exponent))


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n,) * 2}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("field contains NaN or Inf")
        object.__setattr__(self, "values", v)

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.conj())

    def __add__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "ComplexField":
        return ComplexField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.values) * self.grid.spacing)


def _apply(f: ComplexField, multiplier: np.ndarray) -> ComplexField:
    return ComplexField(f.grid, f.grid.multiply(f.values, multiplier))


def cauchy_apply(f: ComplexField, plane: bool = False) -> ComplexField:
    """Discrete solid Cauchy transform ``P f`` (inverse of dbar off zero frequency).

    ``plane=True`` adds the lattice correction so that, for ``f`` supported
    in ``|z| <= side_half / 2``, the result matches the plane transform there.
    """
    out = _apply(f, f.grid.cauchy_multiplier)
    if plane:
        out = ComplexField(f.grid, out.values + f.grid.lattice_correction(f.values)[0])
    return out


def beurling_apply(f: ComplexField, plane: bool = False) -> ComplexField:
    """Discrete Beurling transform ``S f = d P f``; unimodular multiplier."""
    out = _apply(f, f.grid.beurling_multiplier)
    if plane:
        out = ComplexField(f.grid, out.values + f.grid.lattice_correction(f.values)[1])
    return out


def dbar_apply(f: ComplexField) -> ComplexField:
    return _apply(f, f.grid.dbar_symbol)


def d_apply(f: ComplexField) -> ComplexField:
    return _apply(f, f.grid.d_symbol)


class CauchyTrace:
    """Direct quadrature of ``omega(z_b) = -(1/pi) sum conj(u)(z1) / (z_b - z1) dA``.

    The kernel is restricted to the cells in ``mask`` and precomputed, so one
    instance serves every solve of a sweep.
    """

    def __init__(self, grid: PeriodicGrid, points, mask: np.ndarray | None = None):
        self.grid = grid
        self.points = np.atleast_1d(np.asarray(points, dtype=complex))
        if mask is None:
            mask = np.abs(grid.z) <= 0.99
        self.mask = np.asarray(mask, dtype=bool)
        z1 = grid.z[self.mask]
        diff = z1[None, :] - self.points[:, None]
        if np.any(np.abs(diff) < 0.5 * grid.spacing):
            raise ValueError("boundary point coincides with a support cell")
        self.kernel = (grid.cell_area / np.pi) / diff

    def __call__(self, u_masked: np.ndarray) -> np.ndarray:
        """Trace of ``-P(conj u)`` from the masked values of ``u``."""
        return self.kernel @ np.conj(u_masked)


def boundary_cauchy_trace(u: ComplexField, boundary_points) -> np.ndarray:
    """Evaluate ``-P(conj u)`` at points outside the support by direct quadrature.

    ``u`` must vanish (to 1e-12) outside radius 0.99.
    """
    r = np.abs(u.grid.z)
    outside = r > 0.99
    if np.any(np.abs(u.values[outside]) > 1e-12):
        raise ValueError("u is not supported strictly inside the unit disc")
    trace = CauchyTrace(u.grid, boundary_points, mask=~outside)
    return trace(u.values[~outside])

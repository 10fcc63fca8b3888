"""Radon oracle, the first-order averaged forward map and its two inversions.

Geometry: the projection direction for angle ``phi`` is
``omega = (cos phi, -sin phi)`` so that ``x . omega = Re(e^{i phi} z)``.

With boundary weight ``a = 1``, contour normalization ``1/(2 pi i)`` and the
``exp(+i t tau)`` transform of :mod:`vhed.spectral`, the averaged first
Neumann term satisfies

    T1(t, phi) = c * exp(-i phi) * (d/ds R mu)(t / 2, phi),   c = -1/2.

``c`` is what :func:`calibrate_constant` measures; it is carried explicitly
by every function here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import ComplexField, PeriodicGrid
from .spectral import Sinogram

ANALYTIC_CONSTANT = -0.5
S_MAX = 1.2


@dataclass
class RadonData:
    values: np.ndarray
    s: np.ndarray
    phi: np.ndarray


def default_s_grid(grid: PeriodicGrid, s_max: float = S_MAX) -> np.ndarray:
    m = int(np.ceil(s_max / grid.spacing))
    return grid.spacing * np.arange(-m, m + 1)


def _radon_matrix(grid: PeriodicGrid, s: np.ndarray, phi: np.ndarray,
                  half_length: float) -> sp.csr_matrix:
    """Ray-driven line quadrature with bilinear interpolation, as a sparse matrix.

    Row ``j * len(phi) + p`` is the line ``x . omega_p = s_j``.
    """
    h = grid.spacing
    du = 0.5 * h
    u = du * (np.arange(int(np.ceil(half_length / du)) * 2 + 1) - np.ceil(half_length / du))
    n = grid.n
    rows, cols, vals = [], [], []
    for p, ph in enumerate(phi):
        om = np.exp(-1j * ph)             # (cos phi, -sin phi) as a complex number
        perp = 1j * om
        pts = s[:, None] * om + u[None, :] * perp
        fx = (pts.real + grid.side_half) / h
        fy = (pts.imag + grid.side_half) / h
        ix = np.floor(fx).astype(int)
        iy = np.floor(fy).astype(int)
        ax = fx - ix
        ay = fy - iy
        row = (np.arange(s.size) * phi.size + p)[:, None] * np.ones_like(ix)
        for dx, dy, w in ((0, 0, (1 - ax) * (1 - ay)), (1, 0, ax * (1 - ay)),
                          (0, 1, (1 - ax) * ay), (1, 1, ax * ay)):
            cx, cy = ix + dx, iy + dy
            ok = (cx >= 0) & (cx < n) & (cy >= 0) & (cy < n) & (w > 0)
            rows.append(row[ok])
            cols.append((cy * n + cx)[ok])
            vals.append(w[ok] * du)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(s.size * phi.size, n * n),
    )
    return mat.tocsr()


@lru_cache(maxsize=8)
def _cached_radon(grid, s_key, phi_key, half_length):
    return _radon_matrix(grid, np.array(s_key), np.array(phi_key), half_length)


def radon_operator(grid: PeriodicGrid, s: np.ndarray, phi: np.ndarray,
                   half_length: float = S_MAX) -> sp.csr_matrix:
    return _cached_radon(grid, tuple(np.round(s, 14)), tuple(np.round(phi, 14)), half_length)


def radon(f: ComplexField, s_grid: np.ndarray, phi_grid: np.ndarray,
          support: float = 1.0) -> RadonData:
    """Line integrals of ``f`` over ``x . omega = s``."""
    outside = np.abs(f.grid.z) > support
    if np.any(np.abs(f.values[outside]) > 0):
        raise ValueError(f"f is not supported in the disc of radius {support}")
    s_grid = np.asarray(s_grid, float)
    phi_grid = np.asarray(phi_grid, float)
    mat = radon_operator(f.grid, s_grid, phi_grid, max(support, 1.0) * 1.05)
    v = f.values.ravel()
    data = mat @ v if np.iscomplexobj(v) and np.any(v.imag) else (mat @ v.real).astype(complex)
    values = data.reshape(s_grid.size, phi_grid.size)
    values[np.abs(s_grid) > support] = 0.0
    return RadonData(values, s_grid, phi_grid)


def _centered_difference(s: np.ndarray) -> sp.csr_matrix:
    n = s.size
    h = s[1] - s[0]
    d = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        d[i, i - 1] = -0.5 / h
        d[i, i + 1] = 0.5 / h
    d[0, 0], d[0, 1] = -1 / h, 1 / h
    d[n - 1, n - 2], d[n - 1, n - 1] = -1 / h, 1 / h
    return d.tocsr()


def _interp_matrix(src: np.ndarray, dst: np.ndarray) -> sp.csr_matrix:
    """Linear interpolation from uniform ``src`` samples to ``dst`` (0 outside)."""
    h = src[1] - src[0]
    f = (dst - src[0]) / h
    i = np.floor(f).astype(int)
    a = f - i
    rows, cols, vals = [], [], []
    for di, w in ((0, 1 - a), (1, a)):
        c = i + di
        ok = (c >= 0) & (c < src.size) & (w > 0) & (f >= 0) & (f <= src.size - 1)
        rows.append(np.flatnonzero(ok))
        cols.append(c[ok])
        vals.append(w[ok])
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(dst.size, src.size)).tocsr()


class T1aOperator:
    """Discrete ``mu -> c e^{-i phi} (d/ds R mu)(t/2, phi)`` with its exact adjoint."""

    def __init__(self, grid: PeriodicGrid, t: np.ndarray, phi: np.ndarray,
                 constant: complex = ANALYTIC_CONSTANT):
        self.grid = grid
        self.t = np.asarray(t, float)
        self.phi = np.asarray(phi, float)
        self.constant = complex(constant)
        self.s = default_s_grid(grid)
        R = radon_operator(grid, self.s, self.phi)
        n_phi = self.phi.size
        D = sp.kron(_centered_difference(self.s), sp.identity(n_phi), format="csr")
        L = sp.kron(_interp_matrix(self.s, self.t / 2), sp.identity(n_phi), format="csr")
        phase = np.tile(self.constant * np.exp(-1j * self.phi), self.t.size)
        self.matrix = (sp.diags(phase) @ (L @ (D @ R))).tocsr()
        self._adjoint = self.matrix.conj().T.tocsr()

    def forward(self, mu: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(mu).ravel()).reshape(self.t.size, self.phi.size)

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        return (self._adjoint @ np.asarray(g).ravel()).reshape(self.grid.n, self.grid.n)


def forward_T1a(mu: ComplexField, t: np.ndarray, phi: np.ndarray,
                constant: complex = ANALYTIC_CONSTANT) -> Sinogram:
    """Radon-oracle prediction of the averaged first-term sinogram."""
    if np.any(np.abs(mu.values[np.abs(mu.grid.z) > 1.0]) > 0):
        raise ValueError("mu must be supported in the unit disc")
    op = T1aOperator(mu.grid, t, phi, constant)
    return Sinogram(op.forward(mu.values), np.asarray(t, float), np.asarray(phi, float),
                    provenance="oracle")


def abs_fourier_filter(g: np.ndarray, dt: float, p: float, axis: int = 0,
                       pad: int = 1) -> np.ndarray:
    """Multiply the spectrum along ``axis`` by ``|freq|^p``; zero frequency -> 0 for p < 0.

    ``pad`` extra copies of zeros are appended before filtering to limit
    wrap-around; ``pad=0`` gives the exact periodic multiplier.
    """
    g = np.asarray(g)
    n = g.shape[axis]
    m = n * (1 + pad)
    spec = np.fft.fft(g, n=m, axis=axis)
    freq = np.abs(2 * np.pi * np.fft.fftfreq(m, d=dt))
    mult = np.zeros_like(freq)
    nz = freq > 0
    mult[nz] = freq[nz] ** p
    if p >= 0:
        mult[~nz] = 1.0 if p == 0 else 0.0
    shape = [1] * g.ndim
    shape[axis] = -1
    out = np.fft.ifft(spec * mult.reshape(shape), axis=axis)
    return np.take(out, np.arange(n), axis=axis)


def _spectral_derivative(g: np.ndarray, ds: float, axis: int = 0, pad: int = 1) -> np.ndarray:
    n = g.shape[axis]
    m = n * (1 + pad)
    spec = np.fft.fft(g, n=m, axis=axis)
    freq = 2 * np.pi * np.fft.fftfreq(m, d=ds)
    if m % 2 == 0:
        freq[m // 2] = 0.0
    shape = [1] * g.ndim
    shape[axis] = -1
    out = np.fft.ifft(spec * (1j * freq).reshape(shape), axis=axis)
    return np.take(out, np.arange(n), axis=axis)


def backproject(q: np.ndarray, s: np.ndarray, phi: np.ndarray, grid: PeriodicGrid,
                radius: float = 1.0) -> np.ndarray:
    """``sum_phi q(x . omega_phi, phi) dphi`` with linear interpolation in ``s``."""
    z = grid.z
    inside = np.abs(z) <= radius
    zi = z[inside]
    acc = np.zeros(zi.shape, dtype=complex)
    for j, ph in enumerate(phi):
        x = (np.exp(1j * ph) * zi).real
        col = q[:, j]
        acc += np.interp(x, s, col.real, left=0, right=0) + 1j * np.interp(
            x, s, col.imag, left=0, right=0)
    out = np.zeros(z.shape, dtype=complex)
    out[inside] = acc * (np.pi / phi.size)
    return out


def _check_angles(phi: np.ndarray) -> None:
    n = phi.size
    expected = np.pi * np.arange(n) / n + phi[0]
    if n < 2 or not np.allclose(phi, expected) or abs(phi[0]) > 1e-12:
        raise ValueError("inversion needs uniform angles covering [0, pi)")


def _strip(sino: Sinogram, constant: complex) -> np.ndarray:
    """Recover ``d/ds R mu`` samples at ``s = t/2``."""
    return sino.values / (complex(constant) * np.exp(-1j * sino.phi)[None, :])


def fbp_invert(sino: Sinogram, grid: PeriodicGrid, constant: complex = ANALYTIC_CONSTANT,
               radius: float = 1.0) -> ComplexField:
    """Filtered back-projection for derivative-of-Radon data.

    ``mu(x) = (1 / 2 pi) int_0^pi H[d_s R mu](x . omega) dphi``; the Hilbert
    filter is applied as ``-d_s |D_s|^{-1}``.
    """
    _check_angles(sino.phi)
    d = _strip(sino, constant)
    s = sino.t / 2
    ds = s[1] - s[0]
    q = -_spectral_derivative(abs_fourier_filter(d, ds, -1.0), ds)
    return ComplexField(grid, backproject(q, s, sino.phi, grid, radius) / (2 * np.pi))


def lambda_invert(sino: Sinogram, grid: PeriodicGrid, constant: complex = ANALYTIC_CONSTANT,
                  radius: float = 1.0) -> ComplexField:
    """Edge-enhanced reconstruction ``|D| mu = (1 / 2 pi) int_0^pi (-d_s^2 R mu) dphi``."""
    _check_angles(sino.phi)
    d = _strip(sino, constant)
    s = sino.t / 2
    ds = s[1] - s[0]
    q = -_spectral_derivative(d, ds)
    return ComplexField(grid, backproject(q, s, sino.phi, grid, radius) / (2 * np.pi))


def calibrate_constant(spectral: Sinogram, oracle_unit: Sinogram) -> complex:
    """Least-squares ``c`` with ``spectral ~ c * oracle_unit``."""
    a = oracle_unit.values.ravel()
    b = spectral.values.ravel()
    return complex(np.vdot(a, b) / np.vdot(a, a))

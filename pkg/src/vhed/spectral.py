"""Spectral sweep over ``k = tau e^{i phi}``, partial Fourier transform in
``tau`` and boundary-averaged sinograms.

The ``tau -> t`` transform uses the kernel ``exp(+i t tau)``:

    what(t) = sum_i window(tau_i) exp(i t tau_i) omega(tau_i) dtau.

With this sign the first-order singularities produced by the CGO solver sit
at ``t = 2 Re(e^{i phi} z)`` for jump points ``z``, the same geometry used
by :mod:`vhed.singpred` and :mod:`vhed.tomo`.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .beltrami import SolverError, assemble_coefficients, neumann_terms, solve_cgo
from .grid import CauchyTrace, ComplexField

log = logging.getLogger(__name__)

WINDOWS = ("blackman", "hann", "rect")


def window_values(name: str, tau: np.ndarray, R: float) -> np.ndarray:
    x = np.asarray(tau, dtype=float) / R
    inside = np.abs(x) <= 1
    if name == "rect":
        w = np.ones_like(x)
    elif name == "hann":
        w = 0.5 + 0.5 * np.cos(np.pi * x)
    elif name == "blackman":
        w = 0.42 + 0.5 * np.cos(np.pi * x) + 0.08 * np.cos(2 * np.pi * x)
    else:
        raise ValueError(f"unknown window {name!r}; choose from {WINDOWS}")
    return np.where(inside, np.maximum(w, 0.0), 0.0)


@dataclass(frozen=True)
class KGrid:
    R: float = 60.0
    n_tau: int = 128
    n_phi: int = 32
    window: str = "blackman"

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.n_tau < 2 or self.n_tau & (self.n_tau - 1):
            raise ValueError("n_tau must be a power of two")
        if self.n_phi < 1:
            raise ValueError("n_phi must be positive")
        window_values(self.window, np.zeros(1), 1.0)

    @property
    def dtau(self) -> float:
        return 2.0 * self.R / self.n_tau

    @property
    def tau(self) -> np.ndarray:
        return -self.R + self.dtau * np.arange(self.n_tau)

    @property
    def phi(self) -> np.ndarray:
        return np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def dt(self) -> float:
        return 2.0 * np.pi / (self.n_tau * self.dtau)

    @property
    def t(self) -> np.ndarray:
        return self.dt * (np.arange(self.n_tau) - self.n_tau // 2)

    def weights(self) -> np.ndarray:
        return window_values(self.window, self.tau, self.R)


def boundary_points(n_b: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n_b) / n_b)


@dataclass
class SpectralCube:
    """Boundary traces indexed ``(b, radial, angle)``.

    ``domain`` is ``"tau"`` before and ``"t"`` after :func:`partial_ft`;
    ``axis`` holds the matching radial coordinates.
    """

    values: np.ndarray
    z_b: np.ndarray
    axis: np.ndarray
    phi: np.ndarray
    domain: str
    sign: str
    provenance: str = "full"
    stats: dict = field(default_factory=dict)


@dataclass
class Sinogram:
    """Complex function of ``(t, phi)``; ``values[i, j]`` at ``(t[i], phi[j])``."""

    values: np.ndarray
    t: np.ndarray
    phi: np.ndarray
    sign: str = "+"
    provenance: str = "full"
    weight: complex = 1.0

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def column(self, phi: float) -> np.ndarray:
        j = int(np.argmin(np.abs(np.angle(np.exp(1j * (self.phi - phi))))))
        return self.values[:, j]


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 500
    warm_start: bool = True
    method: str = "gmres"


_STATE: dict = {}


def _init_worker(mu_values, grid, z_b, kgrid, settings, terms):
    mu = ComplexField(grid, mu_values)
    mask = mu.values.real != 0
    _STATE.update(
        mu=mu, trace=CauchyTrace(grid, z_b, mask=mask) if mask.any() else None,
        kgrid=kgrid, settings=settings, terms=terms, n_b=len(z_b),
    )


def _ray_order(tau: np.ndarray) -> list[int]:
    """Indices walking outward from tau = 0 in both directions."""
    i0 = int(np.argmin(np.abs(tau)))
    return list(range(i0, tau.size)) + list(range(i0 - 1, -1, -1))


def _solve_ray(task):
    phi, sign = task
    st = _STATE
    kgrid, settings, trace = st["kgrid"], st["settings"], st["trace"]
    tau = kgrid.tau
    n_terms = st["terms"]
    shape = (st["n_b"], tau.size) if n_terms is None else (n_terms, st["n_b"], tau.size)
    out = np.zeros(shape, dtype=complex)
    iters = np.zeros(tau.size, dtype=int)
    if trace is None:
        return out, iters
    z = st["mu"].grid.z
    i0 = int(np.argmin(np.abs(tau)))
    prev = {}
    for i in _ray_order(tau):
        k = tau[i] * np.exp(1j * phi)
        if k == 0:
            continue
        ws = assemble_coefficients(st["mu"], sign, k)
        if n_terms is not None:
            terms = neumann_terms(ws, n_terms, trace=trace, interior=False)
            for n, (_, _, tr) in enumerate(terms):
                out[n, :, i] = tr
            continue
        x0 = None
        side = i >= i0
        if settings.warm_start and side in prev:
            # carry the previous solution over with the phase and amplitude of u_1
            k_prev, u_prev = prev[side]
            x0 = u_prev * (k / k_prev) * np.exp(2j * ((k - k_prev) * z).real)
        try:
            sol = solve_cgo(ws, tol=settings.tol, max_iter=settings.max_iter, x0=x0,
                            trace=trace, method=settings.method, interior=False)
        except SolverError as exc:
            raise SolverError(f"sweep failed at k={k:.6g}, sign={sign:+d}: {exc}",
                              exc.history) from exc
        prev[side] = (k, sol.u.values)
        out[:, i] = sol.trace
        iters[i] = sol.iterations
    return out, iters


def _run(mu: ComplexField, kgrid: KGrid, z_b, signs, settings, terms, workers):
    tasks = [(phi, s) for s in signs for phi in kgrid.phi]
    init = (mu.values, mu.grid, z_b, kgrid, settings, terms)
    if workers <= 1:
        _init_worker(*init)
        results = [_solve_ray(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=init) as ex:
            results = list(ex.map(_solve_ray, tasks))
    return tasks, results


def sweep(mu: ComplexField, kgrid: KGrid, z_b: np.ndarray, signs=(1, -1),
          settings: SolverSettings = SolverSettings(), workers: int = 1) -> dict:
    """Boundary traces of the full CGO remainder for each requested sign.

    Returns ``{"+": SpectralCube, "-": SpectralCube}`` (tau-domain).  Rays
    are independent tasks; within a ray the solves are warm-started outward
    from ``tau = 0``.  Results do not depend on ``workers``.
    """
    z_b = np.asarray(z_b, dtype=complex)
    tasks, results = _run(mu, kgrid, z_b, signs, settings, None, workers)
    cubes = {}
    for s in signs:
        vals = np.zeros((z_b.size, kgrid.n_tau, kgrid.n_phi), dtype=complex)
        its = np.zeros((kgrid.n_tau, kgrid.n_phi), dtype=int)
        for (phi, sign), (out, iters) in zip(tasks, results):
            if sign == s:
                j = int(np.argmin(np.abs(kgrid.phi - phi)))
                vals[:, :, j] = out
                its[:, j] = iters
        tag = "+" if s > 0 else "-"
        cubes[tag] = SpectralCube(vals, z_b, kgrid.tau, kgrid.phi, "tau", tag, "full",
                                  {"iterations": its})
        log.info("sweep %s: %d solves, mean %.1f iterations", tag, int((its > 0).sum()),
                 its[its > 0].mean() if (its > 0).any() else 0.0)
    return cubes


def sweep_neumann(mu: ComplexField, kgrid: KGrid, z_b: np.ndarray, N: int, signs=(1,),
                  workers: int = 1) -> dict:
    """Per-term boundary traces: ``{(sign, n): SpectralCube}`` for ``n = 1..N``."""
    z_b = np.asarray(z_b, dtype=complex)
    tasks, results = _run(mu, kgrid, z_b, signs, SolverSettings(), N, workers)
    cubes = {}
    for s in signs:
        tag = "+" if s > 0 else "-"
        vals = np.zeros((N, z_b.size, kgrid.n_tau, kgrid.n_phi), dtype=complex)
        for (phi, sign), (out, _) in zip(tasks, results):
            if sign == s:
                j = int(np.argmin(np.abs(kgrid.phi - phi)))
                vals[..., j] = out
        for n in range(N):
            cubes[(tag, n + 1)] = SpectralCube(vals[n], z_b, kgrid.tau, kgrid.phi, "tau",
                                               tag, f"term{n + 1}")
    return cubes


# ---------------------------------------------------------------------------
# transforms


def partial_ft(cube: SpectralCube, kgrid: KGrid) -> SpectralCube:
    """Windowed ``tau -> t`` transform along axis 1 (kernel ``exp(+i t tau)``)."""
    if cube.domain != "tau":
        raise ValueError("partial_ft expects a tau-domain cube")
    n = kgrid.n_tau
    w = kgrid.weights()
    data = cube.values * w[None, :, None]
    spec = np.fft.ifft(np.fft.ifftshift(data, axes=1), axis=1) * (n * kgrid.dtau)
    spec = np.fft.fftshift(spec, axes=1)
    return replace(cube, values=spec, axis=kgrid.t, domain="t")


def inverse_partial_ft(values: np.ndarray, kgrid: KGrid, axis: int = 0) -> np.ndarray:
    """Exact discrete inverse of the unwindowed transform (t samples -> tau samples)."""
    n = kgrid.n_tau
    spec = np.fft.ifftshift(values, axes=axis)
    return np.fft.fftshift(np.fft.fft(spec, axis=axis), axes=axis) / (n * kgrid.dtau)


def apply_window_t(values: np.ndarray, kgrid: KGrid, axis: int = 0) -> np.ndarray:
    """Window a t-domain signal exactly as :func:`partial_ft` windows tau data."""
    tau_vals = inverse_partial_ft(values, kgrid, axis)
    shape = [1] * values.ndim
    shape[axis] = -1
    tau_vals = tau_vals * kgrid.weights().reshape(shape)
    n = kgrid.n_tau
    spec = np.fft.ifft(np.fft.ifftshift(tau_vals, axes=axis), axis=axis) * (n * kgrid.dtau)
    return np.fft.fftshift(spec, axes=axis)


def boundary_average(cube: SpectralCube, weight=1.0, normalization: complex = 1 / (2j * np.pi)
                     ) -> Sinogram:
    """Trapezoidal contour integral ``normalization * sum a(z_b) what(z_b) i z_b dtheta``.

    ``weight`` is a constant or a callable of the boundary points.
    """
    z_b = cube.z_b
    theta = np.angle(z_b)
    n_b = z_b.size
    expected = np.exp(1j * (theta[0] + 2 * np.pi * np.arange(n_b) / n_b))
    if not np.allclose(z_b, expected, atol=1e-12):
        raise ValueError("boundary points must be uniform on the unit circle")
    a = weight(z_b) if callable(weight) else np.full(n_b, complex(weight))
    dz = 1j * z_b * (2 * np.pi / n_b)
    vals = normalization * np.tensordot(a * dz, cube.values, axes=(0, 0))
    return Sinogram(vals, cube.axis.copy(), cube.phi.copy(), cube.sign, cube.provenance,
                    weight if not callable(weight) else np.nan)


def parity_combine(plus: Sinogram, minus: Sinogram) -> tuple[Sinogram, Sinogram]:
    """Return ``((plus - minus) / 2, (plus + minus) / 2)``."""
    if plus.values.shape != minus.values.shape or not (
        np.array_equal(plus.t, minus.t) and np.array_equal(plus.phi, minus.phi)
    ):
        raise ValueError("sinogram grids do not match")
    if plus.provenance != minus.provenance:
        raise ValueError("sinogram provenance does not match")
    odd = replace(plus, values=(plus.values - minus.values) / 2, sign="odd")
    even = replace(plus, values=(plus.values + minus.values) / 2, sign="even")
    return odd, even


def cube_to_sinogram(cube: SpectralCube, kgrid: KGrid, weight=1.0) -> Sinogram:
    return boundary_average(partial_ft(cube, kgrid), weight)

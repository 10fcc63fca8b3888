"""CGO solutions of the Beltrami equation through the integral equation

    (I + A rho) u = -conj(alpha),   A = -conj(alpha) P - conj(nu) S,

with ``rho`` complex conjugation, ``nu = e_{-k} mu`` and
``alpha = -i conj(k) e_{-k} mu``.  The remainder is ``omega = -P conj(u)``.

Only cells where ``mu != 0`` carry unknowns: every term of ``A rho u`` is
multiplied by ``conj(alpha)`` or ``conj(nu)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .grid import CauchyTrace, ComplexField, LatticeCorrection, PeriodicGrid

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


def e_k(z: np.ndarray, k: complex) -> np.ndarray:
    """Unimodular phase ``exp(2i Re(k z))``."""
    return np.exp(2j * (k * z).real)


@dataclass(eq=False)
class CgoWorkspace:
    grid: PeriodicGrid
    mu: np.ndarray
    sign: int
    k: complex
    mask: np.ndarray = field(repr=False)
    e_minus_k: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    plane: bool = True

    @property
    def nu_bar(self) -> np.ndarray:
        return self.nu.conj()

    @property
    def alpha_bar(self) -> np.ndarray:
        return self.alpha.conj()

    @cached_property
    def lattice(self) -> LatticeCorrection:
        return LatticeCorrection(self.grid, self.mask, self.mask)

    def apply_A(self, v: np.ndarray) -> np.ndarray:
        """``A v = -conj(alpha) P v - conj(nu) S v`` on full-grid arrays.

        ``v`` must vanish off ``mask``; the output is only meaningful on it.
        """
        p, s = self.grid.cauchy_and_beurling(v)
        if self.plane:
            dp, ds = self.lattice(v.reshape(-1)[self.lattice.src])
            p.reshape(-1)[self.lattice.tgt] += dp
            s.reshape(-1)[self.lattice.tgt] += ds
        return -self.alpha_bar * p - self.nu_bar * s

    def apply_A_rho(self, u: np.ndarray) -> np.ndarray:
        return self.apply_A(u.conj())

    def omega(self, u: np.ndarray) -> np.ndarray:
        return -self.grid.cauchy_and_beurling(u.conj(), plane=self.plane)[0]


def assemble_coefficients(mu: ComplexField, sign: int, k: complex, plane: bool = True) -> CgoWorkspace:
    """Coefficients for ``sign * mu`` at ``k``.

    ``plane=True`` uses the lattice-corrected transforms, so the solution is
    that of the plane equation rather than its periodization.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    grid = mu.grid
    m = sign * mu.values.real
    ek = e_k(grid.z, -complex(k))
    nu = ek * m
    alpha = -1j * np.conj(complex(k)) * nu
    return CgoWorkspace(grid, m, sign, complex(k), m != 0, ek, nu, alpha, plane)


def apply_A_rho(ws: CgoWorkspace, u: ComplexField) -> ComplexField:
    return ComplexField(ws.grid, ws.apply_A_rho(u.values))


@dataclass
class CgoSolution:
    u: ComplexField
    omega: ComplexField | None
    trace: np.ndarray | None
    residual: float
    iterations: int
    history: list = field(default_factory=list)


class _RealifiedSystem:
    """``x -> x + A rho x`` on the masked unknowns, split into real/imag parts."""

    def __init__(self, ws: CgoWorkspace):
        self.ws = ws
        self.idx = np.flatnonzero(ws.mask.ravel())
        self.m = self.idx.size
        self._full = np.zeros(ws.grid.n * ws.grid.n, dtype=complex)
        self.rhs = -ws.alpha_bar.ravel()[self.idx]

    def to_complex(self, x):
        return x[: self.m] + 1j * x[self.m :]

    def to_real(self, c):
        return np.concatenate([c.real, c.imag])

    def expand(self, c):
        full = self._full.copy()
        full[self.idx] = c
        return full.reshape(self.ws.grid.n, self.ws.grid.n)

    def apply_complex(self, c):
        return c + self.ws.apply_A_rho(self.expand(c)).ravel()[self.idx]

    def matvec(self, x):
        return self.to_real(self.apply_complex(self.to_complex(x)))

    def operator(self):
        return LinearOperator((2 * self.m, 2 * self.m), matvec=self.matvec, dtype=float)


def solve_cgo(
    ws: CgoWorkspace,
    tol: float = 1e-8,
    max_iter: int = 500,
    restart: int = 30,
    x0: np.ndarray | None = None,
    trace: CauchyTrace | None = None,
    method: str = "gmres",
    interior: bool = True,
) -> CgoSolution:
    """Solve ``(I + A rho) u = -conj(alpha)``.

    ``x0`` is an optional full-grid complex initial guess.  ``trace`` (a
    ``CauchyTrace`` built on the same mask) yields boundary values of
    ``omega``; ``interior=False`` skips the interior ``omega`` field.
    ``method='fixed-point'`` runs the plain iteration ``u <- -conj(alpha) - A rho u``.
    """
    grid = ws.grid
    if ws.k == 0 or not ws.mask.any():
        u = grid.zeros()
        tr = None if trace is None else np.zeros(trace.points.size, dtype=complex)
        return CgoSolution(u, grid.zeros() if interior else None, tr, 0.0, 0)
    if np.abs(ws.mu).max() >= 1:
        raise ValueError("|mu| must stay below 1")

    system = _RealifiedSystem(ws)
    b = system.rhs
    bnorm = np.linalg.norm(b)
    c0 = np.zeros(system.m, dtype=complex) if x0 is None else np.asarray(x0).ravel()[system.idx]
    history: list[float] = []

    if method == "gmres":
        op = system.operator()
        xr = system.to_real(c0)
        br = system.to_real(b)
        iters = 0
        for _ in range(max(1, max_iter // restart) + 1):
            counter = []

            def cb(prn):
                counter.append(prn)

            xr, info = gmres(
                op, br, x0=xr, rtol=tol * 0.5, atol=0.0, restart=restart,
                maxiter=max(1, (max_iter - iters) // restart), callback=cb,
                callback_type="pr_norm",
            )
            iters += len(counter)
            history.extend(counter)
            c = system.to_complex(xr)
            res = np.linalg.norm(system.apply_complex(c) - b) / bnorm
            if res <= tol or iters >= max_iter:
                break
    elif method == "fixed-point":
        c = c0
        iters = 0
        res = np.inf
        while iters < max_iter:
            c = b - (system.apply_complex(c) - c)
            iters += 1
            res = np.linalg.norm(system.apply_complex(c) - b) / bnorm
            history.append(res)
            if res <= tol:
                break
    else:
        raise ValueError(f"unknown method {method!r}")

    if not np.isfinite(res):
        raise SolverError(f"NaN in CGO solve at k={ws.k}", history)
    if res > tol:
        raise SolverError(
            f"CGO solve at k={ws.k}, sign={ws.sign} stopped at residual {res:.2e} "
            f"after {iters} iterations", history,
        )
    u = system.expand(c)
    omega = ComplexField(grid, ws.omega(u)) if interior else None
    tr = None
    if trace is not None:
        tr = trace(u[trace.mask])
    log.debug("k=%s sign=%+d iters=%d residual=%.2e", ws.k, ws.sign, iters, res)
    return CgoSolution(ComplexField(grid, u), omega, tr, float(res), iters, history)


def neumann_terms(ws: CgoWorkspace, N: int, trace: CauchyTrace | None = None,
                  interior: bool = True):
    """First ``N`` Neumann-series terms ``(u_n, omega_n, trace_n)``.

    ``u_1 = -conj(alpha)``, ``u_{n+1} = -A conj(u_n)``, ``omega_n = -P conj(u_n)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    out = []
    u = -ws.alpha_bar
    for n in range(1, N + 1):
        if n > 1:
            u = -ws.apply_A_rho(u)
        omega = ComplexField(ws.grid, ws.omega(u)) if interior else None
        tr = None if trace is None else trace(u[trace.mask])
        out.append((ComplexField(ws.grid, u), omega, tr))
    return out


@dataclass
class ParityReport:
    max_deviation: list[float]
    passed: bool


def parity_witness(mu: ComplexField, k: complex, N: int, tol: float = 1e-12) -> ParityReport:
    """Check ``u_n(+mu) = (-1)^n u_n(-mu)`` term by term (``u_n`` has degree ``n``)."""
    plus = neumann_terms(assemble_coefficients(mu, 1, k), N, interior=False)
    minus = neumann_terms(assemble_coefficients(mu, -1, k), N, interior=False)
    devs = []
    for n, ((up, _, _), (um, _, _)) in enumerate(zip(plus, minus), start=1):
        scale = max(np.abs(up.values).max(), 1e-300)
        devs.append(float(np.abs(up.values - (-1) ** n * um.values).max() / scale))
    passed = all(d <= tol for d in devs)
    if not passed:
        log.error("parity violated: %s", devs)
    return ParityReport(devs, passed)

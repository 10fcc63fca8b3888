"""Predicted singularity locations in sinograms, and peak detection.

A jump across a curve produces first-order singularities at
``t = 2 Re(e^{i phi} z1)`` for the curve points ``z1`` whose normal is
``+-e^{-i phi}``.  Order-``m`` scattering moves them to
``t = (-1)^{m+1} 2 Re(e^{i phi} (z1 - z2 + ... +- zm))``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .phantom import SUPPORT_RADIUS
from .spectral import Sinogram

log = logging.getLogger(__name__)

MAX_ORDER = 5


@dataclass(frozen=True)
class InterfaceCurve:
    """Jump curve: ``kind`` is circle, ellipse or polyline.

    For a polyline only the interiors of the segments are used; with
    ``closed=True`` the last vertex connects back to the first.
    """

    kind: str
    center: complex = 0j
    radius: float = 0.0
    semi_axes: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    vertices: tuple[complex, ...] = ()
    closed: bool = True

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "polyline"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind == "polyline" and len(self.vertices) < (3 if self.closed else 2):
            raise ValueError("too few polyline vertices")
        if self.extent() > SUPPORT_RADIUS:
            raise ValueError(f"curve reaches radius {self.extent():.3f} > {SUPPORT_RADIUS}")

    def extent(self) -> float:
        if self.kind == "circle":
            return abs(complex(self.center)) + self.radius
        if self.kind == "ellipse":
            return abs(complex(self.center)) + max(self.semi_axes)
        return max(abs(complex(v)) for v in self.vertices)

    def point(self, theta):
        if self.kind == "circle":
            return complex(self.center) + self.radius * np.exp(1j * np.asarray(theta))
        a, b = self.semi_axes
        th = np.asarray(theta)
        return complex(self.center) + np.exp(1j * self.rotation) * (a * np.cos(th) + 1j * b * np.sin(th))

    def normal(self, theta):
        """Outward unit normal for circle and ellipse parameters."""
        if self.kind == "circle":
            return np.exp(1j * np.asarray(theta))
        a, b = self.semi_axes
        th = np.asarray(theta)
        n = np.exp(1j * self.rotation) * (b * np.cos(th) + 1j * a * np.sin(th))
        return n / np.abs(n)


@dataclass
class SingularityLadder:
    """``t_values[m][j]`` is the sorted array of predicted ``t`` at ``phi[j]``."""

    phi: np.ndarray
    t_values: dict = field(default_factory=dict)

    @property
    def orders(self) -> list[int]:
        return sorted(self.t_values)

    def at(self, m: int, j: int) -> np.ndarray:
        return self.t_values[m][j]

    def union(self, orders) -> list[np.ndarray]:
        out = []
        for j in range(self.phi.size):
            vals = [self.t_values[m][j] for m in orders if m in self.t_values]
            out.append(np.unique(np.concatenate(vals)) if vals else np.empty(0))
        return out

    def merge(self, other: "SingularityLadder") -> "SingularityLadder":
        if not np.allclose(self.phi, other.phi):
            raise ValueError("ladders use different angle grids")
        merged = SingularityLadder(self.phi.copy(), {})
        for m in set(self.t_values) | set(other.t_values):
            a = self.t_values.get(m)
            b = other.t_values.get(m)
            if a is None or b is None:
                merged.t_values[m] = list(a if a is not None else b)
            else:
                merged.t_values[m] = [np.union1d(x, y) for x, y in zip(a, b)]
        return merged


def _ellipse_normal_params(curve: InterfaceCurve, direction: complex) -> list[float]:
    """Parameters where the ellipse normal is parallel to ``direction``.

    The normal ``(b cos th, a sin th)`` is parallel to ``d`` exactly when
    ``(cos th, sin th) ~ (a d_x, b d_y)``, which gives the two roots in closed form.
    """
    a, b = curve.semi_axes
    d = direction * np.exp(-1j * curve.rotation)
    th = float(np.arctan2(b * d.imag, a * d.real))
    return [th, th + np.pi]


def normal_points(curve: InterfaceCurve, phi: float, tol: float = 1e-9) -> list[tuple[complex, int]]:
    """Curve points whose unit normal is ``sign * e^{-i phi}``.

    For a polyline, segments with a matching normal contribute their
    midpoint (the whole segment is singular; ``tol`` sets the parallelism test).
    """
    target = np.exp(-1j * phi)
    if curve.kind == "circle":
        return [(complex(curve.center) + s * curve.radius * target, s) for s in (1, -1)]
    if curve.kind == "ellipse":
        out = []
        for th in _ellipse_normal_params(curve, target):
            n = complex(curve.normal(th))
            s = 1 if (n * np.conj(target)).real > 0 else -1
            out.append((complex(curve.point(th)), s))
        return out
    verts = [complex(v) for v in curve.vertices]
    ends = verts[1:] + verts[:1] if curve.closed else verts[1:]
    area = sum((p.conjugate() * q).imag for p, q in zip(verts, ends))
    orient = 1 if area >= 0 else -1
    out = []
    for p, q in zip(verts, ends):
        edge = q - p
        n = -1j * orient * edge / abs(edge)
        cross = (n * np.conj(target)).imag
        if abs(cross) < tol:
            out.append(((p + q) / 2, 1 if (n * np.conj(target)).real > 0 else -1))
    return out


def _dedup(values: np.ndarray, tol: float) -> np.ndarray:
    v = np.sort(np.asarray(values, float))
    if v.size == 0:
        return v
    keep = [v[0]]
    for x in v[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.array(keep)


def predict_first_order(curve: InterfaceCurve, phi_grid, dedup_tol: float = 1e-9) -> SingularityLadder:
    phi_grid = np.asarray(phi_grid, float)
    ts = []
    for ph in phi_grid:
        pts = normal_points(curve, ph)
        ts.append(_dedup([2 * (np.exp(1j * ph) * z).real for z, _ in pts], dedup_tol))
    return SingularityLadder(phi_grid, {1: ts})


def predict_sc(curve, m: int, phi_grid, dedup_tol: float = 1e-9) -> SingularityLadder:
    """Order-``m`` scattering ladder.

    Every ``z_j`` ranges over the normal points of ``curve`` (a curve or a
    list of curves).  Both covector signs are admissible at a jump, so the
    alternating sums run over all ``m``-tuples.  Use ``dedup_tol = dt / 4``
    when comparing with a sampled sinogram.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > MAX_ORDER:
        raise ValueError(f"m={m} exceeds the enumeration guard {MAX_ORDER}")
    curves = [curve] if isinstance(curve, InterfaceCurve) else list(curve)
    phi_grid = np.asarray(phi_grid, float)
    ts = []
    for ph in phi_grid:
        if m == 0:
            ts.append(np.zeros(1))
            continue
        pts = np.array([z for c in curves for z, _ in normal_points(c, ph)], dtype=complex)
        signs = np.array([(-1) ** j for j in range(m)])
        vals = []
        for tup in itertools.product(pts, repeat=m):
            alt = np.dot(signs, np.array(tup))
            vals.append((-1) ** (m + 1) * 2 * (np.exp(1j * ph) * alt).real)
        ts.append(_dedup(vals, dedup_tol))
    return SingularityLadder(phi_grid, {m: ts})


def ladder(curves, orders, phi_grid, dedup_tol: float = 1e-9) -> SingularityLadder:
    """Union of :func:`predict_sc` over ``orders``."""
    out = SingularityLadder(np.asarray(phi_grid, float), {})
    for m in orders:
        out = out.merge(predict_sc(curves, m, phi_grid, dedup_tol))
    return out


def peak_detect(sino: Sinogram, phi: float, threshold: float = 0.1) -> list[float]:
    """Local maxima of ``|column|`` above ``threshold * max``, parabolically refined."""
    col = np.abs(sino.column(phi))
    return _peaks(col, sino.t, threshold)


def _peaks(col: np.ndarray, t: np.ndarray, threshold: float) -> list[float]:
    top = col.max() if col.size else 0.0
    if top <= 0:
        return []
    dt = t[1] - t[0]
    out = []
    for i in range(1, col.size - 1):
        if col[i] >= threshold * top and col[i] > col[i - 1] and col[i] >= col[i + 1]:
            a, b, c = col[i - 1], col[i], col[i + 1]
            den = a - 2 * b + c
            shift = 0.5 * (a - c) / den if den != 0 else 0.0
            out.append(float(t[i] + np.clip(shift, -0.5, 0.5) * dt))
    return out


@dataclass
class ContainmentReport:
    checked: int
    misses: list  # (phi, t, distance)

    @property
    def passed(self) -> bool:
        return not self.misses


def check_containment(sino: Sinogram, allowed: list[np.ndarray], tol: float,
                      threshold: float = 0.1) -> ContainmentReport:
    """Every detected peak in every column must lie within ``tol`` of ``allowed[j]``."""
    checked, misses = 0, []
    for j, ph in enumerate(sino.phi):
        peaks = _peaks(np.abs(sino.values[:, j]), sino.t, threshold)
        for p in peaks:
            checked += 1
            a = allowed[j]
            d = np.abs(a - p).min() if a.size else np.inf
            if d > tol:
                misses.append((float(ph), p, float(d)))
    return ContainmentReport(checked, misses)

"""Built-in compact manifolds: circle, flat 2-torus and unit 2-sphere.

Each manifold comes with an explicit real orthonormal eigenbasis of the
(positive) Laplace-Beltrami operator, its geodesic metric, and a product
quadrature that serves as the ground-truth integral everywhere else in the
package.

Points are handled as float arrays of shape ``(P, c)`` where ``c`` is the
number of chart coordinates: ``theta`` on the circle, ``(theta1, theta2)`` on
the torus and ``(colatitude, longitude)`` on the sphere.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2.0 * math.pi

__all__ = [
    "ManifoldDescriptor",
    "EigenPair",
    "CIRCLE",
    "TORUS2",
    "SPHERE2",
    "get_manifold",
    "as_points",
    "eigen_basis",
    "spectrum",
    "evaluate_basis",
    "band_degree",
    "geodesic_distance",
    "ball_volume",
    "quadrature_grid",
    "reference_integral",
    "SpatialIndex",
    "sphere_to_cartesian",
    "resolution_for_degree",
    "MAX_RESOLUTION",
]


@dataclass(frozen=True)
class ManifoldDescriptor:
    kind: str
    n: int
    volume: float
    group_dim: int
    chart_ranges: tuple

    @property
    def coord_dim(self) -> int:
        return len(self.chart_ranges)

    @property
    def diameter(self) -> float:
        if self.kind == "torus2":
            return math.pi * math.sqrt(2.0)
        return math.pi

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "volume": self.volume,
            "group_dim": self.group_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManifoldDescriptor":
        m = get_manifold(data["kind"])
        for key in ("n", "volume", "group_dim"):
            if key in data and data[key] != getattr(m, key):
                raise ValueError(f"manifold field {key!r} inconsistent with kind {m.kind!r}")
        return m


CIRCLE = ManifoldDescriptor("circle", 1, TWO_PI, 1, ((0.0, TWO_PI),))
TORUS2 = ManifoldDescriptor("torus2", 2, TWO_PI**2, 2, ((0.0, TWO_PI), (0.0, TWO_PI)))
SPHERE2 = ManifoldDescriptor("sphere2", 2, 4.0 * math.pi, 3, ((0.0, math.pi), (0.0, TWO_PI)))

_MANIFOLDS = {m.kind: m for m in (CIRCLE, TORUS2, SPHERE2)}


def get_manifold(kind) -> ManifoldDescriptor:
    if isinstance(kind, ManifoldDescriptor):
        return kind
    try:
        return _MANIFOLDS[kind]
    except KeyError:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {sorted(_MANIFOLDS)}") from None


# ---------------------------------------------------------------------------
# points


def _wrap(angle):
    out = np.mod(angle, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out[out >= TWO_PI] = 0.0
    return out


def as_points(m: ManifoldDescriptor, pts) -> np.ndarray:
    """Return ``pts`` as a normalized ``(P, c)`` float array.

    Angles are wrapped into ``[0, 2*pi)``. On the sphere, colatitudes outside
    ``[0, pi]`` are reflected through the pole and pole points get longitude 0.
    """
    arr = np.array(pts, dtype=float)
    if arr.ndim == 0 or (arr.ndim == 1 and m.coord_dim == 1):
        arr = arr.reshape(-1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[-1] != m.coord_dim:
        raise ValueError(f"{m.kind} points need {m.coord_dim} coordinates, got shape {arr.shape}")
    arr = arr.reshape(-1, m.coord_dim).copy()
    if m.kind in ("circle", "torus2"):
        return _wrap(arr)
    phi, theta = arr[:, 0], arr[:, 1]
    if np.any((phi < 0.0) | (phi > math.pi)):
        phi, theta = _from_cartesian(_to_cartesian(phi, theta))
    theta = _wrap(theta)
    theta[(phi == 0.0) | (phi == math.pi)] = 0.0
    return np.column_stack([phi, theta])


def _to_cartesian(phi, theta):
    s = np.sin(phi)
    return np.stack([s * np.cos(theta), s * np.sin(theta), np.cos(phi)], axis=-1)


def _from_cartesian(xyz):
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    phi = np.arctan2(np.hypot(x, y), z)
    theta = np.arctan2(y, x)
    return phi, theta


def sphere_to_cartesian(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return _to_cartesian(pts[:, 0], pts[:, 1])


# ---------------------------------------------------------------------------
# spectrum


@dataclass(frozen=True)
class EigenPair:
    index: int
    eigenvalue: float
    label: tuple
    evaluator: Callable[[np.ndarray], np.ndarray]

    def __call__(self, pts):
        return self.evaluator(pts)


def _circle_labels(cutoff):
    top = math.isqrt(int(math.floor(cutoff))) if cutoff >= 0 else -1
    labels = []
    for k in range(top + 1):
        labels.append((k, "c"))
        if k > 0:
            labels.append((k, "s"))
    return labels


_TORUS_VARIANTS = ("cc", "cs", "sc", "ss")


def _torus_labels(cutoff):
    if cutoff < 0:
        return []
    top = math.isqrt(int(math.floor(cutoff)))
    labels = []
    for m1 in range(top + 1):
        for m2 in range(top + 1):
            if m1 * m1 + m2 * m2 > cutoff:
                continue
            for var in _TORUS_VARIANTS:
                if (m1 == 0 and var[0] == "s") or (m2 == 0 and var[1] == "s"):
                    continue
                labels.append((m1, m2, var))
    labels.sort(key=lambda t: (t[0] ** 2 + t[1] ** 2, t[0], t[1], _TORUS_VARIANTS.index(t[2])))
    return labels


def _sphere_max_degree(cutoff):
    if cutoff < 0:
        return -1
    ell = int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * cutoff)) / 2.0))
    # guard the float sqrt on both sides
    while (ell + 1) * (ell + 2) <= cutoff:
        ell += 1
    while ell >= 0 and ell * (ell + 1) > cutoff:
        ell -= 1
    return ell


def _sphere_labels(cutoff):
    top = _sphere_max_degree(cutoff)
    return [(ell, mm) for ell in range(top + 1) for mm in range(-ell, ell + 1)]


def _label_eigenvalue(kind, label):
    if kind == "circle":
        return float(label[0] ** 2)
    if kind == "torus2":
        return float(label[0] ** 2 + label[1] ** 2)
    return float(label[0] * (label[0] + 1))


@functools.lru_cache(maxsize=256)
def _spectrum_cached(kind, cutoff):
    labels = {"circle": _circle_labels, "torus2": _torus_labels, "sphere2": _sphere_labels}[kind](cutoff)
    lam = np.array([_label_eigenvalue(kind, lab) for lab in labels], dtype=float)
    lam.setflags(write=False)
    return lam, tuple(labels)


def spectrum(m: ManifoldDescriptor, cutoff: float):
    """Eigenvalues and mode labels of all eigenpairs with eigenvalue <= cutoff."""
    m = get_manifold(m)
    return _spectrum_cached(m.kind, float(cutoff))


def band_degree(m: ManifoldDescriptor, cutoff: float) -> int:
    """Largest trigonometric/polynomial degree present in E_cutoff.

    Per-axis frequency on the circle and torus, harmonic degree on the sphere.
    """
    m = get_manifold(m)
    if cutoff < 0:
        return -1
    if m.kind == "sphere2":
        return _sphere_max_degree(cutoff)
    return math.isqrt(int(math.floor(cutoff)))


def eigen_basis(m: ManifoldDescriptor, cutoff: float) -> list[EigenPair]:
    """All eigenpairs with eigenvalue <= cutoff, in canonical order."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    m = get_manifold(m)
    lam, labels = spectrum(m, cutoff)

    def make(j):
        return lambda pts: evaluate_basis(m, cutoff, pts)[j]

    return [EigenPair(j, float(lam[j]), labels[j], make(j)) for j in range(len(labels))]


def _periodic_factor(k, kind, theta, deriv=0):
    """cos/sin factor of the circle eigenbasis, differentiated ``deriv`` times."""
    if k == 0:
        if deriv:
            return np.zeros_like(theta)
        return np.full_like(theta, 1.0 / math.sqrt(TWO_PI))
    shift = 0.0 if kind == "c" else math.pi / 2.0
    return (k**deriv) * np.cos(k * theta - shift + deriv * math.pi / 2.0) / math.sqrt(math.pi)


def _normalized_legendre(lmax, phi):
    """Orthonormal associated Legendre factors q[l][m](phi), 0 <= m <= l <= lmax.

    ``q[l][m] * cos(m theta) * sqrt(2)`` (m > 0) is a unit-norm spherical
    harmonic; no Condon-Shortley phase.
    """
    x = np.cos(phi)
    s = np.sin(phi)
    q = [[None] * (ell + 1) for ell in range(lmax + 1)]
    diag = np.full_like(phi, 1.0 / math.sqrt(4.0 * math.pi))
    for mm in range(lmax + 1):
        if mm > 0:
            diag = math.sqrt((2.0 * mm + 1.0) / (2.0 * mm)) * s * diag
        q[mm][mm] = diag
        if mm + 1 <= lmax:
            q[mm + 1][mm] = math.sqrt(2.0 * mm + 3.0) * x * diag
        for ell in range(mm + 2, lmax + 1):
            a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - mm * mm))
            b = math.sqrt(((ell - 1.0) ** 2 - mm * mm) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            q[ell][mm] = a * (x * q[ell - 1][mm] - b * q[ell - 2][mm])
    return q


def evaluate_basis(m: ManifoldDescriptor, cutoff: float, pts, derivative=None) -> np.ndarray:
    """Matrix ``U`` with ``U[j, p] = u_j(pts[p])`` over all eigenpairs <= cutoff.

    ``derivative`` (circle/torus only) is a per-axis tuple of derivative
    orders, e.g. ``(0, 2)`` for d^2/dtheta2^2 on the torus.
    """
    m = get_manifold(m)
    pts = as_points(m, pts)
    _, labels = spectrum(m, cutoff)
    out = np.empty((len(labels), pts.shape[0]))
    if m.kind == "circle":
        (order,) = derivative or (0,)
        for j, (k, var) in enumerate(labels):
            out[j] = _periodic_factor(k, var, pts[:, 0], order)
        return out
    if m.kind == "torus2":
        o1, o2 = derivative or (0, 0)
        for j, (k1, k2, var) in enumerate(labels):
            out[j] = _periodic_factor(k1, var[0], pts[:, 0], o1) * _periodic_factor(k2, var[1], pts[:, 1], o2)
        return out
    if derivative:
        raise ValueError("closed-form derivatives are only provided on the circle and torus")
    lmax = _sphere_max_degree(cutoff)
    if lmax < 0:
        return out
    phi, theta = pts[:, 0], pts[:, 1]
    q = _normalized_legendre(lmax, phi)
    root2 = math.sqrt(2.0)
    cos_m = [np.cos(mm * theta) for mm in range(lmax + 1)]
    sin_m = [np.sin(mm * theta) for mm in range(lmax + 1)]
    for j, (ell, mm) in enumerate(labels):
        if mm == 0:
            out[j] = q[ell][0]
        elif mm > 0:
            out[j] = root2 * q[ell][mm] * cos_m[mm]
        else:
            out[j] = root2 * q[ell][-mm] * sin_m[-mm]
    return out


# ---------------------------------------------------------------------------
# metric


def geodesic_distance(m: ManifoldDescriptor, p, q) -> np.ndarray:
    """Geodesic distance between point arrays ``p`` and ``q`` (broadcasting).

    Scalars are returned for single points.
    """
    m = get_manifold(m)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if m.kind == "circle":
        p = p[..., None] if p.ndim == 0 or p.shape[-1] != 1 else p
        q = q[..., None] if q.ndim == 0 or q.shape[-1] != 1 else q
    if m.kind in ("circle", "torus2"):
        d = np.abs(p - q) % TWO_PI
        d = np.minimum(d, TWO_PI - d)
        out = np.sqrt(np.sum(d * d, axis=-1))
    else:
        xp = _to_cartesian(p[..., 0], p[..., 1])
        xq = _to_cartesian(q[..., 0], q[..., 1])
        chord = np.linalg.norm(xp - xq, axis=-1)
        out = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    return out[()] if out.ndim == 0 else out


def ball_volume(m: ManifoldDescriptor, r: float) -> float:
    """Measure of a closed geodesic ball of radius ``r`` (same for every centre)."""
    m = get_manifold(m)
    if r <= 0:
        return 0.0
    if m.kind == "circle":
        return min(2.0 * r, TWO_PI)
    if m.kind == "sphere2":
        return 2.0 * math.pi * (1.0 - math.cos(min(r, math.pi)))
    # flat torus: disc of radius r clipped to the fundamental square [-pi, pi]^2
    if r >= math.pi * math.sqrt(2.0):
        return TWO_PI**2
    area = math.pi * r * r
    if r > math.pi:
        # four circular segments beyond the square's sides; they are disjoint for r < pi*sqrt(2)
        seg = r * r * math.acos(math.pi / r) - math.pi * math.sqrt(r * r - math.pi**2)
        area -= 4.0 * seg
    return area


class SpatialIndex:
    """Nearest-neighbour queries in the geodesic metric.

    Circle and torus use a periodic k-d tree (the wrapped Euclidean metric is
    the geodesic one); the sphere uses chord length in R^3, which is monotone
    in geodesic distance.
    """

    def __init__(self, m: ManifoldDescriptor, pts):
        self.manifold = get_manifold(m)
        self.points = as_points(self.manifold, pts)
        self._tree = cKDTree(self._embed(self.points), boxsize=self._boxsize())

    def _boxsize(self):
        return TWO_PI if self.manifold.kind in ("circle", "torus2") else None

    def _embed(self, pts):
        if self.manifold.kind == "sphere2":
            return _to_cartesian(pts[:, 0], pts[:, 1])
        return pts

    def _to_tree_radius(self, r):
        if self.manifold.kind == "sphere2":
            return 2.0 * math.sin(min(r, math.pi) / 2.0)
        return r

    def _from_tree_distance(self, d):
        if self.manifold.kind == "sphere2":
            return 2.0 * np.arcsin(np.clip(d / 2.0, 0.0, 1.0))
        return d

    def query(self, pts, k=1):
        """Geodesic distance to and index of the ``k`` nearest indexed points."""
        pts = as_points(self.manifold, pts)
        d, idx = self._tree.query(self._embed(pts), k=k)
        return self._from_tree_distance(d), idx

    def query_ball(self, pts, r):
        pts = as_points(self.manifold, pts)
        return self._tree.query_ball_point(self._embed(pts), self._to_tree_radius(r))

    def count_within(self, pts, r):
        pts = as_points(self.manifold, pts)
        return self._tree.query_ball_point(self._embed(pts), self._to_tree_radius(r), return_length=True)


# ---------------------------------------------------------------------------
# reference quadrature

MAX_RESOLUTION = 512


@functools.lru_cache(maxsize=64)
def _grid_cached(kind, resolution):
    nper = 2 * resolution
    theta = TWO_PI * np.arange(nper) / nper
    wper = np.full(nper, TWO_PI / nper)
    if kind == "circle":
        nodes, weights = theta[:, None], wper
    elif kind == "torus2":
        t1, t2 = np.meshgrid(theta, theta, indexing="ij")
        nodes = np.column_stack([t1.ravel(), t2.ravel()])
        weights = np.outer(wper, wper).ravel()
    else:
        x, wx = np.polynomial.legendre.leggauss(resolution)
        phi = np.arccos(x)[::-1]
        wx = wx[::-1]
        p1, t2 = np.meshgrid(phi, theta, indexing="ij")
        nodes = np.column_stack([p1.ravel(), t2.ravel()])
        weights = np.outer(wx, wper).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def quadrature_grid(m: ManifoldDescriptor, resolution: int):
    """Nodes and weights of the reference product rule.

    Periodic directions use ``2*resolution`` equispaced nodes (exact for
    trigonometric degree < 2*resolution); the sphere adds ``resolution``
    Gauss-Legendre colatitudes, exact for spherical polynomials of degree
    <= 2*resolution - 1.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    m = get_manifold(m)
    return _grid_cached(m.kind, int(resolution))


def resolution_for_degree(degree: int) -> int:
    """Smallest resolution whose rule is exact for polynomial degree ``degree``."""
    return max(2, degree // 2 + 1)


def reference_integral(m: ManifoldDescriptor, f, resolution=None, tol=1e-12) -> float:
    """Integral of ``f`` over ``m`` with the reference product rule.

    ``f`` maps a ``(P, c)`` point array to ``P`` values. Without an explicit
    resolution, the resolution is doubled from 8 until two consecutive results
    agree to ``tol`` (relative to max(1, |I|)), capped at 512.
    """
    m = get_manifold(m)
    if resolution is not None:
        nodes, weights = quadrature_grid(m, resolution)
        return float(weights @ np.asarray(f(nodes), dtype=float))
    res = 8
    prev = reference_integral(m, f, res)
    while res < MAX_RESOLUTION:
        cur = reference_integral(m, f, 2 * res)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return prev
        res, prev = 2 * res, cur
    return prev

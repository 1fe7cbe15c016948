"""Band-limited functions stored as eigenbasis coefficient vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CutoffExceeded
from .manifold import (
    MAX_RESOLUTION,
    ManifoldDescriptor,
    band_degree,
    evaluate_basis,
    get_manifold,
    quadrature_grid,
    resolution_for_degree,
    spectrum,
)

__all__ = [
    "SpectralFunction",
    "BernsteinReport",
    "synthesize",
    "analyze",
    "bernstein_check",
    "projection_tail",
    "modulus_of_continuity",
    "apply_power",
    "random_function",
    "fit_decay_exponent",
]


@dataclass(frozen=True)
class SpectralFunction:
    """f = sum_j c_j u_j over the eigenpairs with eigenvalue <= cutoff."""

    manifold: ManifoldDescriptor
    cutoff: float
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = get_manifold(self.manifold)
        object.__setattr__(self, "manifold", m)
        object.__setattr__(self, "cutoff", float(self.cutoff))
        c = np.array(self.coefficients, dtype=float).ravel()
        expected = len(spectrum(m, self.cutoff)[0])
        if c.shape[0] != expected:
            raise ValueError(f"{expected} coefficients expected for cutoff {self.cutoff}, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def eigenvalues(self) -> np.ndarray:
        return spectrum(self.manifold, self.cutoff)[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def __call__(self, pts):
        return synthesize(self, pts)

    def extend(self, cutoff: float) -> "SpectralFunction":
        """Same function re-expressed over a different cutoff (truncating if lower)."""
        n_new = len(spectrum(self.manifold, cutoff)[0])
        c = np.zeros(n_new)
        k = min(n_new, len(self.coefficients))
        c[:k] = self.coefficients[:k]
        return SpectralFunction(self.manifold, cutoff, c)

    def __add__(self, other):
        if other.manifold != self.manifold:
            raise ValueError("functions live on different manifolds")
        cut = max(self.cutoff, other.cutoff)
        return SpectralFunction(self.manifold, cut, self.extend(cut).coefficients + other.extend(cut).coefficients)

    def __mul__(self, scalar):
        return SpectralFunction(self.manifold, self.cutoff, scalar * self.coefficients)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold.to_dict(),
            "cutoff": self.cutoff,
            "coefficients": [float(x) for x in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralFunction":
        return cls(ManifoldDescriptor.from_dict(data["manifold"]), data["cutoff"], data["coefficients"])


def synthesize(f: SpectralFunction, pts) -> np.ndarray:
    """Values sum_j c_j u_j(x) at each point."""
    return f.coefficients @ evaluate_basis(f.manifold, f.cutoff, pts)


def analyze(m: ManifoldDescriptor, f, cutoff: float, resolution=None, tol=1e-13) -> SpectralFunction:
    """Project an evaluator onto E_cutoff with the reference quadrature.

    ``f`` maps a ``(P, c)`` point array to ``P`` values. If ``resolution`` is
    not given it is doubled, starting from the smallest rule exact on
    E_cutoff x E_cutoff, until the coefficient vector is stable to ``tol``.
    """
    m = get_manifold(m)

    def project(res):
        nodes, weights = quadrature_grid(m, res)
        return evaluate_basis(m, cutoff, nodes) @ (weights * np.asarray(f(nodes), dtype=float))

    if resolution is not None:
        return SpectralFunction(m, cutoff, project(resolution))
    res = max(8, resolution_for_degree(2 * band_degree(m, cutoff)))
    prev = project(res)
    while 2 * res <= MAX_RESOLUTION:
        cur = project(2 * res)
        if np.max(np.abs(cur - prev), initial=0.0) <= tol * max(1.0, np.linalg.norm(cur)):
            break
        res, prev = 2 * res, cur
    return SpectralFunction(m, cutoff, prev)


def apply_power(f: SpectralFunction, s: float) -> SpectralFunction:
    """L^s f computed spectrally (0^0 is taken as 1)."""
    lam = f.eigenvalues
    mult = np.where(lam > 0, lam ** float(s), 1.0 if s == 0 else 0.0)
    return SpectralFunction(f.manifold, f.cutoff, mult * f.coefficients)


@dataclass(frozen=True)
class BernsteinReport:
    omega: float
    s: float
    power_norm: float
    bound: float
    ratio: float
    holds: bool


def bernstein_check(f: SpectralFunction, omega: float, s: float, rtol: float = 1e-12) -> BernsteinReport:
    """Compare ||L^s f|| with omega^s ||f|| for f in E_omega."""
    lam = f.eigenvalues
    c = f.coefficients
    fnorm = f.norm()
    beyond = lam > omega
    if np.any(beyond) and np.max(np.abs(c[beyond])) > rtol * max(fnorm, np.finfo(float).tiny):
        raise CutoffExceeded(f"function has energy above omega={omega}")
    power_norm = apply_power(f, s).norm()
    bound = omega**s * fnorm
    ratio = power_norm / bound if bound > 0 else 0.0
    return BernsteinReport(omega, s, power_norm, bound, ratio, ratio <= 1.0 + rtol)


def projection_tail(f: SpectralFunction, omega: float) -> float:
    """||f - f_omega||, the energy above the cutoff omega."""
    c = f.coefficients[f.eigenvalues > omega]
    return float(np.linalg.norm(c))


def _difference_norm(lam, c2, tau, r):
    mult = (2.0 * np.abs(np.sin(np.outer(tau, lam) / 2.0))) ** (2 * r)
    return np.sqrt(mult @ c2)


def modulus_of_continuity(f: SpectralFunction, r: int, s: float, tau_grid: int = 256) -> float:
    """Omega_r(f, s) = sup_{|tau| <= s} ||Delta_tau^r f||.

    The r-th difference of the unitary group exp(i tau L) has multiplier
    magnitude (2|sin(tau lambda_j / 2)|)^r. The even-in-tau sup is located on
    a uniform grid of [0, s] plus the peaks tau*lambda = pi (mod 2 pi) of the
    dominant mode; the grid maxima within 1% of the best are then refined by
    bounded scalar maximization.
    """
    if tau_grid < 64:
        raise ValueError("tau_grid must be >= 64")
    if r < 1:
        raise ValueError("r must be a positive integer")
    lam = f.eigenvalues
    c2 = f.coefficients**2
    if s <= 0 or not np.any((lam > 0) & (c2 > 0)):
        return 0.0
    tau = np.linspace(0.0, s, tau_grid)
    active = np.flatnonzero((lam > 0) & (c2 > 0))
    dom = lam[active[np.argmax(c2[active])]]
    npeaks = int(math.floor((s * dom / math.pi - 1.0) / 2.0)) + 1
    if npeaks > 0:
        peaks = (2.0 * np.arange(min(npeaks, 4096)) + 1.0) * math.pi / dom
        tau = np.union1d(tau, peaks[peaks <= s])
    vals = _difference_norm(lam, c2, tau, r)
    best = float(vals.max())
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    candidates = interior[vals[interior] >= 0.99 * best]
    for i in candidates[np.argsort(vals[candidates])[::-1][:16]]:
        res = minimize_scalar(
            lambda t: -_difference_norm(lam, c2, np.array([t]), r)[0],
            bounds=(tau[i - 1], tau[i + 1]),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, s)},
        )
        best = max(best, -float(res.fun))
    return best


def random_function(m: ManifoldDescriptor, cutoff: float, rng, scale=1.0) -> SpectralFunction:
    """Random element of E_cutoff with i.i.d. normal coefficients."""
    m = get_manifold(m)
    rng = np.random.default_rng(rng)
    n = len(spectrum(m, cutoff)[0])
    return SpectralFunction(m, cutoff, scale * rng.standard_normal(n))


def fit_decay_exponent(x, y) -> float:
    """Least-squares slope p of log y = a - p log x."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)

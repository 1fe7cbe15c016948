"""Cubature rules exact on E_omega: minimal-norm and positive weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAFrame, PositivityFailed
from .frames import RANK_RTOL, SamplingMatrix, sampling_matrix
from .lattice import Lattice, VoronoiWeights
from .manifold import evaluate_basis, spectrum
from .spectral import SpectralFunction, apply_power, modulus_of_continuity, synthesize

__all__ = [
    "CubatureRule",
    "CONSTRUCTIONS",
    "moments",
    "exact_weights",
    "positive_weights",
    "integrate",
    "exactness_residual",
    "error_report",
    "ErrorReport",
    "voronoi_discrepancy",
    "voronoi_rule",
    "exact_rule",
]

CONSTRUCTIONS = ("min_norm", "positive_corrected", "voronoi_plain", "spline")


@dataclass(frozen=True)
class CubatureRule:
    lattice: Lattice
    weights: np.ndarray = field(repr=False)
    omega: float
    construction: str

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        w = np.array(self.weights, dtype=float).ravel()
        if w.shape[0] != len(self.lattice):
            raise ValueError("one weight per lattice node required")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def positive(self) -> bool:
        return bool(np.all(self.weights > 0))

    @property
    def manifold(self):
        return self.lattice.manifold

    def scaled_range(self):
        """(min, max) of w_k / rho^n."""
        scale = self.lattice.rho**self.manifold.n
        return float(self.weights.min() / scale), float(self.weights.max() / scale)

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "weights": [float(x) for x in self.weights],
            "omega": self.omega,
            "positive": self.positive,
            "construction": self.construction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CubatureRule":
        rule = cls(Lattice.from_dict(data["lattice"]), data["weights"], data["omega"], data["construction"])
        if "positive" in data and bool(data["positive"]) != rule.positive:
            raise ValueError("'positive' flag disagrees with the weights")
        return rule


def moments(m, omega: float) -> np.ndarray:
    """Integrals of the eigenfunctions: (sqrt(Vol), 0, ..., 0)."""
    out = np.zeros(len(spectrum(m, omega)[0]))
    out[0] = math.sqrt(m.volume)
    return out


def exact_weights(S: SamplingMatrix) -> CubatureRule:
    """Minimal-l2-norm weights with U w = moments (exact on E_omega).

    These coincide with the integrals of the dual frame elements.
    """
    if not S.is_frame():
        raise NotAFrame(f"no exact rule: {len(S.lattice)} nodes do not sample E_{S.omega}")
    w, *_ = np.linalg.lstsq(S.entries, moments(S.manifold, S.omega), rcond=None)
    return CubatureRule(S.lattice, w, S.omega, "min_norm")


def _range_basis(U):
    """Orthonormal basis of range(U^T) in node space."""
    Q, R = np.linalg.qr(U.T)
    diag = np.abs(np.diag(R))
    keep = diag > RANK_RTOL * diag.max()
    return Q[:, keep]


def positive_weights(S: SamplingMatrix, V: VoronoiWeights) -> CubatureRule:
    """Exact weights obtained by correcting the Voronoi measures.

    With v the minimal-norm exact weights (which lie in range(U^T)) and P the
    orthogonal projector onto range(U^T), returns mu = v + (I - P) w for the
    Voronoi measures w. Then U mu = U v, and mu - w = v - P w has norm at most
    ||w - v||.

    Raises
    ------
    NotAFrame
        If the nodes do not determine E_omega.
    PositivityFailed
        If some corrected weight is not strictly positive (rho * sqrt(1 + omega)
        too large); the weights are attached to the exception.
    """
    if V.lattice is not S.lattice and not np.array_equal(V.lattice.points, S.lattice.points):
        raise ValueError("Voronoi measures belong to a different lattice")
    v = exact_weights(S).weights
    w = np.asarray(V.measures, dtype=float)
    Q = _range_basis(S.entries)
    mu = v + w - Q @ (Q.T @ w)
    if np.any(mu <= 0):
        bad = int(np.sum(mu <= 0))
        raise PositivityFailed(
            f"{bad} of {len(mu)} corrected weights are not positive "
            f"(rho*sqrt(1+omega) = {S.lattice.rho * math.sqrt(1 + S.omega):.3g})",
            mu,
        )
    return CubatureRule(S.lattice, mu, S.omega, "positive_corrected")


def voronoi_rule(V: VoronoiWeights) -> CubatureRule:
    """Plain Voronoi-measure rule (exact on constants only)."""
    return CubatureRule(V.lattice, V.measures, 0.0, "voronoi_plain")


def integrate(rule: CubatureRule, samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != rule.weights.shape:
        raise ValueError(f"expected {rule.weights.shape[0]} samples, got shape {samples.shape}")
    return float(rule.weights @ samples)


def exactness_residual(rule: CubatureRule, omega: float | None = None) -> float:
    """max_j |sum_k w_k u_j(x_k) - integral of u_j| over eigenvalues <= omega."""
    omega = rule.omega if omega is None else omega
    U = evaluate_basis(rule.manifold, omega, rule.lattice.points)
    return float(np.max(np.abs(U @ rule.weights - moments(rule.manifold, omega))))


@dataclass(frozen=True)
class ErrorReport:
    omega: float
    lhs: float
    lhs_full: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs_full / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        return {"omega": self.omega, "lhs": self.lhs, "lhs_full": self.lhs_full, "rhs": self.rhs, "ratio": self.ratio}


def error_report(rule: CubatureRule, f: SpectralFunction, k: int, m_order: int, tau_grid: int = 512) -> ErrorReport:
    """Integration error of ``rule`` on a (long-truncated) function f.

    ``lhs`` follows the error estimate literally and samples the projection
    f_omega; since the rule is exact on E_omega it vanishes up to rounding.
    ``lhs_full`` samples f itself, which is the practically relevant error.
    ``rhs`` is Omega_{m-k}(L^k f, 1/omega) / omega^k.
    """
    if not 0 <= k < m_order:
        raise ValueError("need 0 <= k < m_order")
    omega = rule.omega
    exact = math.sqrt(f.manifold.volume) * f.coefficients[0]
    f_proj = f.extend(omega) if f.cutoff > omega else f
    lhs = abs(exact - integrate(rule, synthesize(f_proj, rule.lattice.points)))
    lhs_full = abs(exact - integrate(rule, synthesize(f, rule.lattice.points)))
    rhs = modulus_of_continuity(apply_power(f, k), m_order - k, 1.0 / omega, tau_grid) / omega**k
    return ErrorReport(omega, lhs, lhs_full, rhs)


def voronoi_discrepancy(V: VoronoiWeights, f: SpectralFunction):
    """|sum_k f(x_k) |cell_k| - integral f| and the scale rho^n (rho sqrt(1+omega)) ||f(x)||."""
    lat = V.lattice
    samples = synthesize(f, lat.points)
    exact = math.sqrt(lat.manifold.volume) * f.coefficients[0]
    lhs = abs(float(V.measures @ samples) - exact)
    scale = lat.rho**lat.manifold.n * lat.rho * math.sqrt(1.0 + f.cutoff) * float(np.linalg.norm(samples))
    return lhs, scale


def exact_rule(lat: Lattice, omega: float) -> CubatureRule:
    return exact_weights(sampling_matrix(lat, omega))

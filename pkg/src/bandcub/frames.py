"""Sampling matrices, frame bounds, dual frames and exact reconstruction on E_omega."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NotAFrame
from .lattice import Lattice
from .manifold import evaluate_basis
from .spectral import SpectralFunction

__all__ = [
    "SamplingMatrix",
    "FrameBounds",
    "RANK_RTOL",
    "sampling_matrix",
    "frame_bounds",
    "dual_frame",
    "reconstruct",
    "scaled_bounds",
]

# relative singular-value floor below which the sampling operator is not injective
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SamplingMatrix:
    """U[j, k] = u_j(x_k) for eigenvalues <= omega and lattice nodes x_k."""

    lattice: Lattice
    omega: float
    entries: np.ndarray = field(repr=False)

    @property
    def manifold(self):
        return self.lattice.manifold

    @property
    def shape(self):
        return self.entries.shape

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def is_frame(self) -> bool:
        rows, cols = self.entries.shape
        if rows > cols:
            return False
        sv = self.singular_values()
        return bool(sv[-1] > RANK_RTOL * sv[0])


def sampling_matrix(lat: Lattice, omega: float) -> SamplingMatrix:
    U = evaluate_basis(lat.manifold, omega, lat.points)
    U.setflags(write=False)
    return SamplingMatrix(lat, float(omega), U)


@dataclass(frozen=True)
class FrameBounds:
    """A * sum f(x_k)^2 <= ||f||^2 <= B * sum f(x_k)^2 on E_omega."""

    A: float
    B: float

    @property
    def condition(self) -> float:
        return self.B / self.A if self.A > 0 else np.inf

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "condition": self.condition}


def frame_bounds(S: SamplingMatrix) -> FrameBounds:
    """Sharp frame constants from the extreme singular values of U.

    ``A = 0`` (and ``B = inf``) signals that the samples do not determine
    the function.
    """
    if not S.is_frame():
        return FrameBounds(0.0, np.inf)
    sv = S.singular_values()
    return FrameBounds(1.0 / sv[0] ** 2, 1.0 / sv[-1] ** 2)


def scaled_bounds(S: SamplingMatrix):
    """Range of rho^(-n/2) ||f|| / ||f(x_k)||_2 over f in E_omega."""
    fb = frame_bounds(S)
    scale = S.lattice.rho ** (-S.manifold.n / 2.0)
    return scale * np.sqrt(fb.A), scale * np.sqrt(fb.B)


def dual_frame(S: SamplingMatrix) -> np.ndarray:
    """Coefficient vectors of the dual frame: Theta = (U U^T)^-1 U.

    Column k holds the eigen-coefficients of Theta_k, so that
    f = sum_k f(x_k) Theta_k for every f in E_omega.
    """
    if not S.is_frame():
        raise NotAFrame(f"{len(S.lattice)} samples do not determine E_{S.omega} ({S.shape[0]} dims)")
    U = S.entries
    return cho_solve(cho_factor(U @ U.T), U)


def reconstruct(S: SamplingMatrix, samples) -> SpectralFunction:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (S.shape[1],):
        raise ValueError(f"expected {S.shape[1]} samples, got shape {samples.shape}")
    theta = dual_frame(S)
    return SpectralFunction(S.manifold, S.omega, theta @ samples)

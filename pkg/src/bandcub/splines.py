"""Variational (polyharmonic) splines interpolating on a lattice.

H^{2k} is represented by the finite eigenbasis E_T for a truncation cutoff T.
The Lagrangian spline at node x_g minimizes the seminorm ||L^k s||^2 =
sum_j lambda_j^{2k} c_j^2 among s in E_T with s(x_h) = delta_gh. The constant
mode (lambda_0 = 0) is kept as a free, unpenalized direction.

Both solvers work in the scaled unknowns d_j = lambda_j^k c_j (j >= 1), in
which the penalty is ||d||^2 and the constraint reads a0 c_0 + B d = e with
B = A_1 diag(lambda^-k).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .cubature import CubatureRule
from .errors import TruncationTooSmall
from .lattice import Lattice
from .manifold import ManifoldDescriptor, evaluate_basis, spectrum
from .spectral import SpectralFunction, apply_power, synthesize

__all__ = [
    "SplineModel",
    "lagrangian_basis",
    "lagrangian_nullspace",
    "spline_interpolate",
    "spline_weights",
    "spline_error_decay",
    "default_truncation",
    "kkt_residual",
    "penalty",
    "riesz_condition",
    "save_model",
    "load_model",
]

SIDECAR_MAGIC = b"SPLM"
SIDECAR_VERSION = 1


def default_truncation(lat: Lattice) -> float:
    """Smallest cutoff with > 100 rho^-2 and >= 3|lattice| eigenpairs, rounded up to an eigenvalue."""
    m = lat.manifold
    target = 100.0 / lat.rho**2
    cutoff = target
    while len(spectrum(m, cutoff)[0]) < 3 * len(lat):
        cutoff *= 1.25
    lam = spectrum(m, cutoff)[0]
    return float(lam[-1])


@dataclass(frozen=True)
class SplineModel:
    """Lagrangian splines of order k: column g of ``matrix`` holds L_g's coefficients."""

    lattice: Lattice
    k: int
    truncation: float
    matrix: np.ndarray = field(repr=False)
    multipliers: np.ndarray = field(repr=False, default=None)

    @property
    def manifold(self) -> ManifoldDescriptor:
        return self.lattice.manifold

    @property
    def eigenvalues(self) -> np.ndarray:
        return spectrum(self.manifold, self.truncation)[0]

    def lagrangian(self, g: int) -> SpectralFunction:
        return SpectralFunction(self.manifold, self.truncation, self.matrix[:, g])

    def to_dict(self, sidecar: str) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "k": self.k,
            "truncation": self.truncation,
            "matrix": {"path": sidecar, "rows": self.matrix.shape[0], "cols": self.matrix.shape[1]},
        }


def _check_model_inputs(lat, k, truncation):
    if k < 1:
        raise ValueError("smoothness order k must be >= 1")
    lam, _ = spectrum(lat.manifold, truncation)
    if len(lam) < 3 * len(lat):
        raise TruncationTooSmall(
            f"E_{truncation} has {len(lam)} eigenpairs; at least {3 * len(lat)} needed for {len(lat)} nodes"
        )
    A = evaluate_basis(lat.manifold, truncation, lat.points).T
    scale = lam[1:] ** (-float(k))
    return lam, A[:, 0], A[:, 1:] * scale, scale


def _min_singular_value(B, a0):
    sv = np.linalg.svd(np.column_stack([a0, B]), compute_uv=False)
    if sv[-1] <= 1e-13 * sv[0]:
        raise TruncationTooSmall("node-evaluation matrix is rank deficient at this truncation")
    return sv[-1]


def lagrangian_basis(lat: Lattice, k: int, truncation: float | None = None, refine: int = 3) -> SplineModel:
    """Lagrangian splines from the saddle-point system.

    Solves, for all nodes at once,

        [ a I   B^T   0 ] [ d  ]   [ 0 ]
        [ B     0     a0] [-nu ] = [ I ]
        [ 0     a0^T  0 ] [ c0 ]   [ 0 ]

    i.e. stationarity d = B^T mu (mu = nu / a), the interpolation constraints,
    and a0^T mu = 0 for the unpenalized constant. The scale ``a`` is the
    smallest singular value of [a0 | B], which keeps the system's condition
    comparable to that of B; a few steps of iterative refinement follow.
    The multipliers mu are the node masses of L^{2k} L_g.
    """
    truncation = default_truncation(lat) if truncation is None else float(truncation)
    lam, a0, B, scale = _check_model_inputs(lat, k, truncation)
    alpha = _min_singular_value(B, a0)
    nd, nn = B.shape[1], B.shape[0]
    K = np.zeros((nd + nn + 1, nd + nn + 1))
    K[:nd, :nd] = alpha * np.eye(nd)
    K[:nd, nd : nd + nn] = B.T
    K[nd : nd + nn, :nd] = B
    K[nd : nd + nn, -1] = a0
    K[-1, nd : nd + nn] = a0
    rhs = np.zeros((nd + nn + 1, nn))
    rhs[nd : nd + nn] = np.eye(nn)
    lu = scipy.linalg.lu_factor(K)
    sol = scipy.linalg.lu_solve(lu, rhs)
    for _ in range(refine):
        sol += scipy.linalg.lu_solve(lu, rhs - K @ sol)
    C = np.empty((nd + 1, nn))
    C[0] = sol[-1]
    C[1:] = scale[:, None] * sol[:nd]
    return SplineModel(lat, int(k), truncation, C, -sol[nd : nd + nn] / alpha)


def lagrangian_nullspace(lat: Lattice, k: int, truncation: float | None = None) -> np.ndarray:
    """Lagrangian coefficient matrix by eliminating the constant direction.

    Minimizes ||d|| subject to P B d = P e (P projects node space onto the
    complement of the constant column), then recovers c0. Independent of the
    saddle-point factorization; used as a cross-check.
    """
    truncation = default_truncation(lat) if truncation is None else float(truncation)
    _, a0, B, scale = _check_model_inputs(lat, k, truncation)
    nn = B.shape[0]
    u = a0 / np.linalg.norm(a0)
    P = np.eye(nn) - np.outer(u, u)
    d, *_ = np.linalg.lstsq(P @ B, P, rcond=None)
    c0 = (a0 @ (np.eye(nn) - B @ d)) / (a0 @ a0)
    C = np.empty((B.shape[1] + 1, nn))
    C[0] = c0
    C[1:] = scale[:, None] * d
    return C


def penalty(f: SpectralFunction, k: int) -> float:
    """||L^k f||^2."""
    return apply_power(f, k).norm() ** 2


def kkt_residual(model: SplineModel) -> float:
    """Distance of lambda^{2k} c from the span of node-evaluation rows.

    Zero exactly when L^{2k} L_g is a combination of point masses at the
    nodes with zero total mass, i.e. when L_g is a variational spline.
    """
    A = evaluate_basis(model.manifold, model.truncation, model.lattice.points)
    lam = model.eigenvalues
    grad = (lam ** (2 * model.k))[:, None] * model.matrix
    masses, *_ = np.linalg.lstsq(A, grad, rcond=None)
    resid = A @ masses - grad
    scale = np.linalg.norm(grad, axis=0).max()
    return float(np.abs(resid).max() / scale)


def spline_interpolate(model: SplineModel, samples) -> SpectralFunction:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (len(model.lattice),):
        raise ValueError(f"expected {len(model.lattice)} samples, got shape {samples.shape}")
    return SpectralFunction(model.manifold, model.truncation, model.matrix @ samples)


def spline_weights(model: SplineModel) -> CubatureRule:
    """Integrals of the Lagrangian splines: sqrt(Vol) times their constant coefficient."""
    w = math.sqrt(model.manifold.volume) * model.matrix[0]
    return CubatureRule(model.lattice, w, 0.0, "spline")


def riesz_condition(model: SplineModel) -> float:
    """Condition number of the Gram matrix of {L_g} in <f,g> = sum f(x)g(x) + <L^k f, L^k g>."""
    A = evaluate_basis(model.manifold, model.truncation, model.lattice.points)
    w = model.eigenvalues ** (2 * model.k)
    C = model.matrix
    vals = A.T @ C
    G = vals.T @ vals + C.T @ (w[:, None] * C)
    ev = np.linalg.eigvalsh(G)
    return float(ev[-1] / ev[0])


@dataclass(frozen=True)
class DecayTable:
    rows: list
    rho_sqrt_omega: float
    contracting: bool
    fitted_rate: float

    def errors(self):
        return np.array([r["error"] for r in self.rows])


def spline_error_decay(
    lat: Lattice, f: SpectralFunction, k_range, truncation=None, contraction_limit=1.0, k_min=None
):
    """Spline-cubature error for each smoothness order k.

    Each row records err(k) = |int f - sum lambda_g^(k) f(x_g)| together with
    the Sobolev-side quantity Vol * ||L^{k/2} f|| of the error bound. The fitted
    per-step contraction factor is the geometric-mean ratio err(k+1)/err(k);
    ``contracting`` holds when errors decrease monotonically and
    rho*sqrt(omega) is below ``contraction_limit``. Rows with k below
    ``k_min`` (default n + 1) are flagged, not dropped.
    """
    k_min = lat.manifold.n + 1 if k_min is None else int(k_min)
    truncation = default_truncation(lat) if truncation is None else float(truncation)
    samples = synthesize(f, lat.points)
    exact = math.sqrt(f.manifold.volume) * f.coefficients[0]
    omega = float(f.eigenvalues[np.flatnonzero(f.coefficients)[-1]]) if np.any(f.coefficients) else 0.0
    rows = []
    for k in k_range:
        model = lagrangian_basis(lat, k, truncation)
        rule = spline_weights(model)
        err = abs(exact - float(rule.weights @ samples))
        rows.append(
            {
                "k": int(k),
                "error": err,
                "sobolev_norm": f.manifold.volume * apply_power(f, k / 2.0).norm(),
                "above_threshold": k >= k_min,
            }
        )
    errs = np.array([r["error"] for r in rows])
    scale = lat.rho * math.sqrt(omega)
    monotone = bool(np.all(np.diff(errs) < 0)) if len(errs) > 1 else True
    if len(errs) > 1 and np.all(errs > 0):
        rate = float(np.exp(np.mean(np.diff(np.log(errs)))))
    else:
        rate = 0.0
    return DecayTable(rows, scale, monotone and scale < contraction_limit, rate)


# ---------------------------------------------------------------------------
# persistence


def save_model(model: SplineModel, json_path) -> dict:
    """Write the model JSON and its little-endian float64 sidecar next to it."""
    json_path = Path(json_path)
    bin_path = json_path.with_suffix(".bin")
    rows, cols = model.matrix.shape
    with open(bin_path, "wb") as fh:
        fh.write(SIDECAR_MAGIC + struct.pack("<III", SIDECAR_VERSION, rows, cols))
        fh.write(np.ascontiguousarray(model.matrix, dtype="<f8").tobytes())
    doc = model.to_dict(bin_path.name)
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc


def read_sidecar(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != SIDECAR_MAGIC:
        raise ValueError(f"{path}: not a spline matrix sidecar")
    version, rows, cols = struct.unpack("<III", raw[4:16])
    if version != SIDECAR_VERSION:
        raise ValueError(f"{path}: unsupported sidecar version {version}")
    data = np.frombuffer(raw, dtype="<f8", offset=16)
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols).astype(float)


def load_model(json_path) -> SplineModel:
    json_path = Path(json_path)
    doc = json.loads(json_path.read_text(encoding="utf-8"))
    lat = Lattice.from_dict(doc["lattice"])
    C = read_sidecar(json_path.parent / doc["matrix"]["path"])
    if C.shape != (doc["matrix"]["rows"], doc["matrix"]["cols"]):
        raise ValueError("sidecar shape disagrees with the model document")
    return SplineModel(lat, int(doc["k"]), float(doc["truncation"]), C)

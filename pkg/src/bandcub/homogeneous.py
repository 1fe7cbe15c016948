"""Products of band-limited functions and exact Fourier coefficients from samples.

On a compact homogeneous manifold M = G/K with d = dim G, the product of two
functions in E_omega lies in E_{4 d omega}. Consequently a cubature rule exact
on E_{4 d omega} computes every Fourier coefficient of f in E_omega exactly
from the samples f(x_k).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cubature import CubatureRule
from .errors import InsufficientExactness, UnsupportedManifold
from .manifold import band_degree, evaluate_basis, quadrature_grid, resolution_for_degree, spectrum
from .spectral import SpectralFunction, synthesize

__all__ = [
    "ProductReport",
    "product_bound",
    "product_coefficients",
    "product_bandlimit_check",
    "discrete_fourier_transform",
    "derivative_coefficients",
    "derivative_identity_check",
]

SUPPORT_RTOL = 1e-10


def product_bound(m, omega: float) -> float:
    """4 d omega with d the dimension of the acting group."""
    return 4.0 * m.group_dim * float(omega)


@dataclass(frozen=True)
class ProductReport:
    omega: float
    bound: float
    max_leakage: float
    empirical_cutoff: float

    @property
    def holds(self) -> bool:
        return self.max_leakage <= SUPPORT_RTOL

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "bound": self.bound,
            "max_leakage": self.max_leakage,
            "empirical_cutoff": self.empirical_cutoff,
            "holds": self.holds,
        }


def product_coefficients(f: SpectralFunction, g: SpectralFunction, cutoff_out: float) -> SpectralFunction:
    """Projection of the pointwise product f g onto E_cutoff_out.

    The reference rule is chosen exact for the integrands f g u_j, so the
    projection carries no quadrature error.
    """
    if f.manifold != g.manifold:
        raise ValueError("functions live on different manifolds")
    m = f.manifold
    degree = band_degree(m, f.cutoff) + band_degree(m, g.cutoff) + max(band_degree(m, cutoff_out), 0)
    nodes, weights = quadrature_grid(m, resolution_for_degree(degree))
    values = synthesize(f, nodes) * synthesize(g, nodes)
    coeffs = evaluate_basis(m, cutoff_out, nodes) @ (weights * values)
    return SpectralFunction(m, cutoff_out, coeffs)


def product_bandlimit_check(f: SpectralFunction, g: SpectralFunction, probe: float | None = None) -> ProductReport:
    """Measure how much of f g lies above 4 d omega, omega = max cutoff of f, g.

    ``probe`` (default 1.5 times the bound) is the cutoff up to which the
    product is expanded; it must exceed the bound for leakage to be visible.
    """
    m = f.manifold
    omega = max(f.cutoff, g.cutoff)
    bound = product_bound(m, omega)
    probe = 1.5 * bound if probe is None else float(probe)
    if probe <= bound:
        raise ValueError(f"probe cutoff {probe} must exceed the bound {bound}")
    h = product_coefficients(f, g, probe)
    lam, c = h.eigenvalues, np.abs(h.coefficients)
    scale = h.norm()
    if scale == 0.0:
        return ProductReport(omega, bound, 0.0, 0.0)
    rel = c / scale
    above = lam > bound
    leakage = float(rel[above].max()) if np.any(above) else 0.0
    support = lam[rel > SUPPORT_RTOL]
    return ProductReport(omega, bound, leakage, float(support.max()) if support.size else 0.0)


def discrete_fourier_transform(rule: CubatureRule, samples, omega: float, check: bool = True) -> SpectralFunction:
    """c_j = sum_k f(x_k) u_j(x_k) w_k for all eigenvalues <= omega.

    Exact for f in E_omega when the rule is exact on E_{4 d omega}. With
    ``check=False`` the exactness requirement is not enforced.
    """
    m = rule.manifold
    samples = np.asarray(samples, dtype=float)
    if samples.shape != rule.weights.shape:
        raise ValueError(f"expected {rule.weights.shape[0]} samples, got shape {samples.shape}")
    need = product_bound(m, omega)
    if check and rule.omega < need:
        raise InsufficientExactness(f"rule is exact on E_{rule.omega:g}; E_{need:g} (= 4 d omega) is required")
    U = evaluate_basis(m, omega, rule.lattice.points)
    return SpectralFunction(m, omega, U @ (rule.weights * samples))


def _derivative_matrix(m, cutoff, axis):
    """Matrix of d/dtheta_axis acting on eigen-coefficients (circle and torus).

    d/dtheta cos(k theta) = -k sin(k theta), d/dtheta sin(k theta) = k cos(k theta);
    derivatives preserve each eigenspace, so the matrix is square on E_cutoff.
    """
    _, labels = spectrum(m, cutoff)
    index = {lab: j for j, lab in enumerate(labels)}
    D = np.zeros((len(labels), len(labels)))
    flip = {"c": "s", "s": "c"}
    for j, lab in enumerate(labels):
        if m.kind == "circle":
            k, var = lab
            target = (k, flip[var])
        else:
            k, var = lab[axis], lab[2][axis]
            variant = lab[2][:axis] + flip[var] + lab[2][axis + 1 :]
            target = (lab[0], lab[1], variant)
        if k == 0:
            continue
        D[index[target], j] = -k if var == "c" else k
    return D


def derivative_coefficients(f: SpectralFunction, orders) -> SpectralFunction:
    """Coefficients of the mixed partial derivative with per-axis ``orders``."""
    m = f.manifold
    if m.kind == "sphere2":
        raise UnsupportedManifold("invariant vector fields are only realized on the circle and torus")
    if len(orders) != m.n:
        raise ValueError(f"expected {m.n} derivative orders")
    c = np.array(f.coefficients)
    for axis, order in enumerate(orders):
        D = _derivative_matrix(m, f.cutoff, axis)
        for _ in range(order):
            c = D @ c
    return SpectralFunction(m, f.cutoff, c)


def derivative_identity_check(f: SpectralFunction, s: int) -> float:
    """Relative residual of sum over tuples ||D_i1 ... D_is f||^2 = ||L^{s/2} f||^2.

    The D_i are the coordinate fields d/dtheta_i, a basis of the Lie algebra of
    the acting torus group. Returns 0 when both sides vanish.
    """
    m = f.manifold
    if m.kind == "sphere2":
        raise UnsupportedManifold("invariant vector fields are only realized on the circle and torus")
    if s < 1:
        raise ValueError("s must be a positive integer")
    lhs = 0.0
    for tup in itertools.product(range(m.n), repeat=s):
        orders = [tup.count(axis) for axis in range(m.n)]
        lhs += derivative_coefficients(f, orders).norm() ** 2
    rhs = float(np.sum(f.eigenvalues**s * f.coefficients**2))
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else abs(lhs - rhs) / scale

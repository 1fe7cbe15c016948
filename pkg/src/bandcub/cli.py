"""Command-line front end: lattices, cubature rules, verification, DFTs, splines, sweeps.

Every subcommand writes UTF-8 JSON (CSV for ``sweep``) to ``-o`` or to standard
output. Exit status is 0 on success, 1 when a verification or construction
fails, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import errors
from .cubature import (
    CubatureRule,
    error_report,
    exact_rule,
    exact_weights,
    exactness_residual,
    positive_weights,
)
from .frames import frame_bounds, sampling_matrix
from .homogeneous import discrete_fourier_transform, product_bandlimit_check, product_bound
from .lattice import Lattice, build_lattice, rho_for_omega, verify_lattice, voronoi_measures
from .manifold import evaluate_basis, get_manifold, spectrum
from .spectral import SpectralFunction, random_function, synthesize
from .splines import kkt_residual, lagrangian_basis, save_model, spline_weights

__all__ = ["RunConfig", "build_parser", "run", "main"]

MANIFOLD_CHOICES = ("circle", "torus2", "sphere2")


class UsageError(Exception):
    """Invalid combination of options (exit status 2)."""


@dataclass(frozen=True)
class RunConfig:
    """Validated options shared by the subcommands."""

    command: str
    manifold: str | None = None
    rho: float | None = None
    omega: float | None = None
    c0: float | None = None
    seed: int = 0
    resolution: int | None = None
    tol: float = 1e-10
    output: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.manifold is not None and self.manifold not in MANIFOLD_CHOICES:
            raise UsageError(f"unknown manifold {self.manifold!r}")
        if not self.tol > 0:
            raise UsageError("tolerances must be positive")
        if self.rho is not None and self.c0 is not None:
            raise UsageError("give either --rho or --omega/--c0, not both")
        if self.rho is not None and not self.rho > 0:
            raise UsageError("--rho must be positive")
        if self.c0 is not None and not self.c0 > 0:
            raise UsageError("--c0 must be positive")
        if self.resolution is not None and self.resolution < 2:
            raise UsageError("--resolution must be >= 2")

    def lattice_scale(self) -> float:
        if self.rho is not None:
            return self.rho
        if self.c0 is None or self.omega is None:
            raise UsageError("need --rho, or both --omega and --c0")
        if not self.omega > 0:
            raise UsageError("--omega must be positive")
        return rho_for_omega(self.omega, self.c0)


# ---------------------------------------------------------------------------
# io helpers


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, default=_plain) + "\n"


def _emit(text: str, output: str | None):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _load_lattice(path: str) -> Lattice:
    doc = _load_json(path)
    if "lattice" in doc:
        doc = doc["lattice"]
    return Lattice.from_dict(doc)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_lattice(cfg: RunConfig) -> int:
    lat = build_lattice(get_manifold(cfg.manifold), cfg.lattice_scale(), cfg.seed)
    _emit(_dump_json(lat.to_dict()), cfg.output)
    return 0


def _cmd_weights(cfg: RunConfig) -> int:
    opts = cfg.options
    lat = _load_lattice(opts["lattice"])
    if opts["spline"] is not None:
        model = lagrangian_basis(lat, opts["spline"], opts["truncation"])
        rule = spline_weights(model)
    else:
        if cfg.omega is None:
            raise UsageError("--omega is required for --exact and --positive")
        S = sampling_matrix(lat, cfg.omega)
        if opts["positive"]:
            rule = positive_weights(S, voronoi_measures(lat, cfg.resolution))
        else:
            rule = exact_weights(S)
    _emit(_dump_json(rule.to_dict()), cfg.output)
    return 0


def _rule_checks(rule: CubatureRule, tol: float) -> list[dict]:
    m = rule.manifold
    checks = []
    total = float(rule.weights.sum())
    checks.append({"name": "weight_sum", "value": total, "target": m.volume, "passed": abs(total - m.volume) <= tol})
    if rule.omega > 0:
        resid = exactness_residual(rule)
        checks.append({"name": "exactness_residual", "value": resid, "limit": tol, "passed": resid <= tol})
        fb = frame_bounds(sampling_matrix(rule.lattice, rule.omega))
        checks.append({"name": "frame_bounds", **fb.to_dict(), "passed": fb.A > 0})
    c1, c2 = rule.scaled_range()
    envelope = {"name": "weight_envelope", "c1": c1, "c2": c2}
    if rule.construction == "positive_corrected":
        envelope["passed"] = c1 > 0
    checks.append(envelope)
    return checks


def _cmd_verify(cfg: RunConfig) -> int:
    opts = cfg.options
    if not (opts["rule"] or opts["lattice"] or opts["product_omega"] is not None):
        raise UsageError("nothing to verify: give --rule, --lattice or --product-omega")
    report = {"checks": []}
    checks = report["checks"]
    rule = None
    if opts["rule"]:
        rule = CubatureRule.from_dict(_load_json(opts["rule"]))
        checks.extend(_rule_checks(rule, cfg.tol))
    if opts["lattice"] or rule is not None:
        lat = _load_lattice(opts["lattice"]) if opts["lattice"] else rule.lattice
        rep = verify_lattice(lat, strict=False)
        checks.append({"name": "lattice", **rep.to_dict(), "passed": rep.valid})
    if opts["product_omega"] is not None:
        kind = cfg.manifold or (rule.manifold.kind if rule is not None else None)
        if kind is None:
            raise UsageError("--product-omega needs --manifold or --rule")
        m = get_manifold(kind)
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(opts["product_trials"]):
            f = random_function(m, opts["product_omega"], rng)
            g = random_function(m, opts["product_omega"], rng)
            worst = max(worst, product_bandlimit_check(f, g).max_leakage)
        checks.append(
            {
                "name": "product_leakage",
                "omega": opts["product_omega"],
                "bound": product_bound(m, opts["product_omega"]),
                "max_leakage": worst,
                "passed": worst <= cfg.tol,
            }
        )
    report["passed"] = all(c.get("passed", True) for c in checks)
    _emit(_dump_json(report), cfg.output)
    return 0 if report["passed"] else 1


def _cmd_dft(cfg: RunConfig) -> int:
    opts = cfg.options
    if cfg.omega is None:
        raise UsageError("--omega is required")
    rule = CubatureRule.from_dict(_load_json(opts["rule"]))
    m = rule.manifold
    if opts["function"]:
        f = SpectralFunction.from_dict(_load_json(opts["function"]))
        if f.manifold != m:
            raise UsageError("function and rule live on different manifolds")
    else:
        f = random_function(m, cfg.omega, np.random.default_rng(cfg.seed))
    samples = synthesize(f, rule.lattice.points)
    report = {"omega": cfg.omega, "rule_omega": rule.omega, "required_omega": product_bound(m, cfg.omega)}
    try:
        c = discrete_fourier_transform(rule, samples, cfg.omega, check=not opts["no_check"])
    except errors.InsufficientExactness as exc:
        report.update({"error": "InsufficientExactness", "message": str(exc), "passed": False})
        _emit(_dump_json(report), cfg.output)
        return 1
    truth = f.extend(cfg.omega).coefficients
    err = float(np.max(np.abs(c.coefficients - truth)))
    report.update({"coefficients": [float(x) for x in c.coefficients], "max_error": err, "passed": err <= opts["dft_tol"]})
    _emit(_dump_json(report), cfg.output)
    return 0 if report["passed"] else 1


def _cmd_spline(cfg: RunConfig) -> int:
    opts = cfg.options
    if cfg.output is None:
        raise UsageError("spline needs -o (the matrix goes to a binary sidecar next to it)")
    lat = _load_lattice(opts["lattice"])
    model = lagrangian_basis(lat, opts["k"], opts["truncation"])
    save_model(model, cfg.output)
    A = evaluate_basis(model.manifold, model.truncation, lat.points)
    interp = float(np.max(np.abs(A.T @ model.matrix - np.eye(len(lat)))))
    summary = {
        "model": cfg.output,
        "k": model.k,
        "truncation": model.truncation,
        "interpolation_residual": interp,
        "kkt_residual": kkt_residual(model),
        "passed": interp <= cfg.tol,
    }
    sys.stdout.write(_dump_json(summary))
    return 0 if summary["passed"] else 1


def sweep_test_function(m, cutoff: float, alpha: float) -> SpectralFunction:
    """Test function with coefficients (1 + lambda_j)^(-alpha)."""
    lam = spectrum(m, cutoff)[0]
    return SpectralFunction(m, cutoff, (1.0 + lam) ** (-alpha))


def _cmd_sweep(cfg: RunConfig) -> int:
    opts = cfg.options
    if cfg.c0 is None:
        raise UsageError("sweep needs --c0")
    m = get_manifold(cfg.manifold)
    omegas = opts["omegas"]
    if any(not w > 0 for w in omegas):
        raise UsageError("sweep omegas must be positive")
    ks = opts["k"]
    f = sweep_test_function(m, opts["test_cutoff"] or 16.0 * max(omegas), opts["alpha"])
    exact = math.sqrt(m.volume) * f.coefficients[0]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega", "rho", "point_count", "ratio", "A", "B", "condition"] + [f"err_{k}" for k in ks])
    for omega in omegas:
        rho = rho_for_omega(omega, cfg.c0, opts["scaling"])
        lat = build_lattice(m, rho, cfg.seed)
        fb = frame_bounds(sampling_matrix(lat, omega))
        row = [omega, rho, len(lat), len(lat) / omega ** (m.n / 2.0), fb.A, fb.B, fb.condition]
        samples = synthesize(f, lat.points)
        for k in ks:
            if k == 0:
                rule = exact_rule(lat, omega) if fb.A > 0 else None
                row.append(error_report(rule, f, 1, 3).lhs_full if rule is not None else math.nan)
            else:
                rule = spline_weights(lagrangian_basis(lat, k))
                row.append(abs(exact - float(rule.weights @ samples)))
        writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    _emit(buf.getvalue(), cfg.output)
    return 0


# ---------------------------------------------------------------------------
# parser


def _positive_float(text):
    try:
        val = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not val > 0 or not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"must be a positive number: {text!r}")
    return val


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandcub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifold=False, scale=False):
        if manifold:
            p.add_argument("--manifold", choices=MANIFOLD_CHOICES, required=True)
        if scale:
            p.add_argument("--rho", type=_positive_float)
            p.add_argument("--c0", type=_positive_float, help="rho = c0 / sqrt(omega)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=_positive_float, default=1e-10)
        p.add_argument("-o", "--output")

    p = sub.add_parser("lattice", help="build a greedy rho-lattice")
    common(p, manifold=True, scale=True)
    p.add_argument("--omega", type=_positive_float)

    p = sub.add_parser("weights", help="cubature weights on a lattice")
    common(p)
    p.add_argument("--lattice", required=True)
    p.add_argument("--omega", type=_positive_float)
    p.add_argument("--resolution", type=int, help="reference grid for Voronoi measures")
    p.add_argument("--truncation", type=_positive_float, help="spline eigenbasis cutoff")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--exact", action="store_true")
    kind.add_argument("--positive", action="store_true")
    kind.add_argument("--spline", type=int, metavar="K")

    p = sub.add_parser("verify", help="check a rule and/or lattice, report measured constants")
    common(p)
    p.add_argument("--rule")
    p.add_argument("--lattice")
    p.add_argument("--manifold", choices=MANIFOLD_CHOICES)
    p.add_argument("--product-omega", type=_positive_float)
    p.add_argument("--product-trials", type=int, default=5)

    p = sub.add_parser("dft", help="Fourier coefficients from samples")
    common(p)
    p.add_argument("--rule", required=True)
    p.add_argument("--omega", type=_positive_float, required=True)
    p.add_argument("--function", help="SpectralFunction JSON (default: random, from --seed)")
    p.add_argument("--no-check", action="store_true", help="skip the exactness precondition")
    p.add_argument("--dft-tol", type=_positive_float, default=1e-8)

    p = sub.add_parser("spline", help="Lagrangian spline model (JSON + binary sidecar)")
    common(p)
    p.add_argument("--lattice", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--truncation", type=_positive_float)

    p = sub.add_parser("sweep", help="Weyl-count and error table over omega (CSV)")
    common(p, manifold=True, scale=True)
    p.add_argument("--omegas", type=_float_list, required=True)
    p.add_argument("--k", type=_int_list, default=[0], help="error columns: 0 = exact rule, k >= 1 = spline order")
    p.add_argument("--alpha", type=_positive_float, default=2.0)
    p.add_argument("--test-cutoff", type=_positive_float)
    p.add_argument("--scaling", choices=("sqrt", "linear"), default="sqrt", help="rho = c0/sqrt(omega) or c0/omega")
    return parser


_SHARED = {"command", "manifold", "rho", "omega", "c0", "seed", "resolution", "tol", "output"}


def _config(ns: argparse.Namespace) -> RunConfig:
    values = vars(ns)
    shared = {k: values[k] for k in _SHARED if k in values}
    options = {k: v for k, v in values.items() if k not in _SHARED}
    if "spline" in options and options["spline"] is not None and options["spline"] < 1:
        raise UsageError("--spline K needs K >= 1")
    if "k" in options and isinstance(options["k"], int) and options["k"] < 1:
        raise UsageError("--k must be >= 1")
    if "k" in options and isinstance(options["k"], list) and any(k < 0 for k in options["k"]):
        raise UsageError("--k entries must be >= 0")
    return RunConfig(options=options, **shared)


_HANDLERS = {
    "lattice": _cmd_lattice,
    "weights": _cmd_weights,
    "verify": _cmd_verify,
    "dft": _cmd_dft,
    "spline": _cmd_spline,
    "sweep": _cmd_sweep,
}

_FAILURES = (
    errors.RhoTooLarge,
    errors.NotALattice,
    errors.NotAFrame,
    errors.PositivityFailed,
    errors.CutoffExceeded,
    errors.TruncationTooSmall,
    errors.InsufficientExactness,
    errors.UnsupportedManifold,
)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(ns)
        return _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"bandcub {ns.command}: {exc}", file=sys.stderr)
        return 2
    except _FAILURES as exc:
        print(f"bandcub {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        print(f"bandcub {ns.command}: invalid input: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())

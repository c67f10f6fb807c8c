"""
Problem instances: type distributions, the valuation model
v(t, q) = alpha1(q) t + alpha2(q), the reserve r(q) = k q, numeric settings,
and the assumption checks of the model.
"""
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from distribution_factory import distribution_from_config
from families.base_distribution import BaseDistribution, Interval
from medmech.errors import ConfigError, EvaluationError, ValidationError
from medmech.utils.expression import Expression, eval_expression, parse_expression, to_text

logger = logging.getLogger(__name__)

__all__ = [
    "Interval", "ValuationModel", "NumericConfig", "ProblemInstance", "Violation", "ValidationReport",
    "parse_expression", "eval_expression", "pdf", "cdf", "quantile",
    "validate_instance", "instance_from_config", "load_instance",
]


@dataclass(frozen=True)
class NumericConfig:
    quad_nodes: int = 2001      # Simpson nodes per axis
    grid_n: int = 2001          # virtual-function tabulation
    iron_n: int = 4001          # ironing w-grid
    validation_n: int = 1001    # "for all x" assumption checks
    audit_n: int = 101
    tol: float = 1e-9
    ic_tol: float = 1e-5
    lp_cap: int = 900
    zero_mass: float = 1e-12    # interim mass treated as an empty trade set

    def __post_init__(self):
        for name in ("quad_nodes", "grid_n", "iron_n", "validation_n", "audit_n"):
            if int(getattr(self, name)) < 3:
                raise ConfigError(f"numerics.{name} must be at least 3")
        if self.tol <= 0 or self.ic_tol <= 0 or self.zero_mass < 0:
            raise ConfigError("numerics tolerances must be positive")
        if self.lp_cap < 4:
            raise ConfigError("numerics.lp_cap must be at least 4")

    @classmethod
    def from_dict(cls, doc: Optional[Dict[str, Any]]) -> "NumericConfig":
        doc = dict(doc or {})
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - set(known))
        if unknown:
            raise ConfigError(f"unknown numerics fields: {', '.join(unknown)}")
        try:
            kwargs = {k: (int(v) if known[k] in (int, "int") else float(v)) for k, v in doc.items()}
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad numerics value: {e}")
        return cls(**kwargs)


@dataclass(frozen=True)
class ValuationModel:
    alpha1: Expression
    alpha2: Expression
    k: float

    def value(self, t, q):
        return eval_expression(self.alpha1, q) * t + eval_expression(self.alpha2, q)

    def reserve(self, q):
        return self.k * np.asarray(q, dtype=float) if np.ndim(q) else self.k * float(q)

    def describe(self) -> Dict[str, Any]:
        return {"alpha1": self.alpha1.source or to_text(self.alpha1),
                "alpha2": self.alpha2.source or to_text(self.alpha2),
                "k": self.k}


@dataclass(frozen=True)
class ProblemInstance:
    buyer_dist: BaseDistribution
    seller_dist: BaseDistribution
    valuation: ValuationModel
    numerics: NumericConfig = field(default_factory=NumericConfig)
    name: str = ""

    @property
    def T(self) -> Interval:
        return self.buyer_dist.support

    @property
    def Q(self) -> Interval:
        return self.seller_dist.support

    @property
    def k(self) -> float:
        return self.valuation.k

    def alpha1(self, q):
        return eval_expression(self.valuation.alpha1, q)

    def alpha2(self, q):
        return eval_expression(self.valuation.alpha2, q)

    def value(self, t, q):
        return self.valuation.value(t, q)

    def reserve(self, q):
        return self.valuation.reserve(q)

    def with_numerics(self, **overrides) -> "ProblemInstance":
        return dataclasses.replace(self, numerics=dataclasses.replace(self.numerics, **overrides))

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "buyer_dist": self.buyer_dist.describe(),
            "seller_dist": self.seller_dist.describe(),
            "valuation": self.valuation.describe(),
            "numerics": dataclasses.asdict(self.numerics),
        }


# ---------------------------
# thin operation wrappers
# ---------------------------
def pdf(dist: BaseDistribution, x):
    return dist.pdf(x)


def cdf(dist: BaseDistribution, x):
    return dist.cdf(x)


def quantile(dist: BaseDistribution, p):
    return dist.quantile(p)


# ---------------------------
# validation
# ---------------------------
@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    witness: Optional[float] = None
    extent: Optional[Tuple[float, float]] = None

    def as_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "message": self.message, "witness": self.witness,
                "extent": list(self.extent) if self.extent else None}


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()
    normalization: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(v.message for v in self.violations)


def _failing(grid: np.ndarray, bad: np.ndarray) -> Tuple[float, Tuple[float, float]]:
    pts = grid[bad]
    return float(pts[0]), (float(pts.min()), float(pts.max()))


def _check_distribution(side: str, dist: BaseDistribution, n: int) -> List[Violation]:
    out: List[Violation] = []
    grid = dist.support.grid(n)
    dens = np.asarray(dist.pdf(grid), dtype=float)
    bad = ~(np.isfinite(dens) & (dens > 0))
    # infinite density at an endpoint (beta with a<1) is still positive
    bad &= ~(np.isinf(dens) & (dens > 0))
    if np.any(bad):
        w, ext = _failing(grid, bad)
        out.append(Violation(f"{side}_density", f"{side} density is not strictly positive at x={w:.6g}", w, ext))

    raw_lo, raw_hi = dist.raw_cdf(dist.support.lo), dist.raw_cdf(dist.support.hi)
    if abs(raw_lo) > 1e-9 or abs(raw_hi - 1.0) > 1e-9:
        out.append(Violation(f"{side}_cdf_bounds", f"{side} cdf endpoints are {raw_lo:.3g}, {raw_hi:.3g}, not 0 and 1"))

    cdfs = np.asarray(dist.cdf(grid))
    dec = np.diff(cdfs) < -1e-12
    if np.any(dec):
        w, ext = _failing(grid[1:], dec)
        out.append(Violation(f"{side}_cdf_monotone", f"{side} cdf decreases near x={w:.6g}", w, ext))

    h = 1e-5 * dist.support.width
    inner = grid[1:-1]
    inner = inner[(inner - h > dist.support.lo) & (inner + h < dist.support.hi)]
    if len(inner):
        deriv = (np.asarray(dist.cdf(inner + h)) - np.asarray(dist.cdf(inner - h))) / (2 * h)
        dens_in = np.asarray(dist.pdf(inner))
        mismatch = np.abs(deriv - dens_in) > 1e-4 * np.maximum(1.0, dens_in)
        if np.any(mismatch):
            w, ext = _failing(inner, mismatch)
            out.append(Violation(f"{side}_pdf_cdf", f"{side} pdf does not match the cdf derivative at x={w:.6g}", w, ext))
    return out


def validate_instance(inst: ProblemInstance) -> ValidationReport:
    """Sampling check of the model assumptions on a uniform grid, not a proof."""
    n = inst.numerics.validation_n
    violations: List[Violation] = []
    violations += _check_distribution("buyer", inst.buyer_dist, n)
    violations += _check_distribution("seller", inst.seller_dist, n)

    qs = inst.Q.grid(n)
    try:
        a1 = np.asarray(inst.alpha1(qs))
        bad = ~(a1 > 0)
        if np.any(bad):
            w, ext = _failing(qs, bad)
            violations.append(Violation("alpha1_positive", f"alpha1(q) <= 0 at q={w:.6g} (failing on [{ext[0]:.6g}, {ext[1]:.6g}])", w, ext))
    except EvaluationError as e:
        violations.append(Violation("alpha1_eval", f"alpha1 cannot be evaluated on the seller support: {e}"))
    try:
        inst.alpha2(qs)
    except EvaluationError as e:
        violations.append(Violation("alpha2_eval", f"alpha2 cannot be evaluated on the seller support: {e}"))

    if inst.k < 0:
        violations.append(Violation("k_negative", f"k negative ({inst.k})", inst.k))

    norm = {side: d.normalization for side, d in (("buyer", inst.buyer_dist), ("seller", inst.seller_dist))
            if d.normalization != 1.0}
    report = ValidationReport(tuple(violations), norm)
    if not report.ok:
        logger.warning(f"[{inst.name or 'instance'}] validation failed: {report.summary()}")
    return report


# ---------------------------
# config ingestion
# ---------------------------
def instance_from_config(doc: Dict[str, Any], name: str = "", validate: bool = True) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise ConfigError("instance document must be a JSON object")
    for key in ("buyer_dist", "seller_dist", "valuation"):
        if key not in doc:
            raise ConfigError(f"instance document is missing '{key}'")
    val = doc["valuation"]
    if not isinstance(val, dict) or "alpha1" not in val:
        raise ConfigError("valuation needs at least alpha1 (alpha2 defaults to 0, k to 0)")
    try:
        k = float(val.get("k", 0.0))
    except (TypeError, ValueError):
        raise ConfigError(f"valuation.k must be a number, got {val.get('k')!r}")

    inst = ProblemInstance(
        buyer_dist=distribution_from_config(doc["buyer_dist"]),
        seller_dist=distribution_from_config(doc["seller_dist"]),
        valuation=ValuationModel(parse_expression(str(val["alpha1"])),
                                 parse_expression(str(val.get("alpha2", "0"))), k),
        numerics=NumericConfig.from_dict(doc.get("numerics")),
        name=str(doc.get("name", name)),
    )
    if validate:
        report = validate_instance(inst)
        if not report.ok:
            raise ValidationError(report)
    return inst


def load_instance(path, validate: bool = True) -> ProblemInstance:
    path = Path(path)
    try:
        with open(path, "r") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    except OSError as e:
        raise ConfigError(f"{path}: cannot read instance file ({e})")
    return instance_from_config(doc, name=path.stem, validate=validate)

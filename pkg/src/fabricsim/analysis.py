"""Analytic throughput-overhead model and least-squares model fitting.

Two closed forms operate on packet geometry and topology scale:

  traffic_overhead  = (intra_header/intra_payload + 1) / (inter_header/inter_payload + 1)
  throughput_bound  = model_adjustment / (traffic_overhead * inter_pct) * num_nodes

with inter_pct on a 0..100 scale. The bound's model_adjustment is a fitted
constant taken as an input, never hard-coded.

The fitting procedure matches four candidate models (linear, quadratic,
cubic, power law) to (inter %, throughput) data by least squares and selects
the lowest SSE. Polynomials are solved by normal equations with column
scaling; the power law a*x^b is seeded by log-log regression, then refined
by Gauss-Newton (fixed 50 iterations, 1e-10 relative tolerance), so repeated
runs converge to identical coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import PacketGeometry


class FitModel(enum.Enum):
    LINEAR = "Linear"
    QUADRATIC = "Quadratic"
    CUBIC = "Cubic"
    POWER_LAW = "PowerLaw"


_POLY_DEGREE = {FitModel.LINEAR: 1, FitModel.QUADRATIC: 2, FitModel.CUBIC: 3}


@dataclass(frozen=True)
class OverheadInputs:
    """Inputs to the throughput bound for one (geometry, pattern, scale) case."""

    geometry: PacketGeometry
    traffic_inter_pct: float  # 0..100 scale, e.g. 20 for a 20% inter pattern
    num_nodes: int
    model_adjustment: float  # Gbps-scale fitted constant, an input by design

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be >= 1")


@dataclass
class FitResult:
    """One fitted model: coefficients, SSE, and goodness of fit."""

    model: FitModel
    parameters: list
    sse: float
    r_squared: float
    failed: bool = False


def traffic_overhead(geom: PacketGeometry) -> float:
    """Wire-efficiency ratio between the two packet tiers (1.138 with defaults).

    Equal geometries give exactly 1; swapping the tiers gives the reciprocal.
    """
    if geom.intra_payload_bytes <= 0 or geom.inter_payload_bytes <= 0:
        raise ValueError("payload sizes must be positive")
    intra = Fraction(geom.intra_header_bytes, geom.intra_payload_bytes) + 1
    inter = Fraction(geom.inter_header_bytes, geom.inter_payload_bytes) + 1
    return float(intra / inter)


def throughput_bound(inputs: OverheadInputs) -> float:
    """Expected saturated network throughput in Gbps for an inter-heavy pattern.

    Undefined for a 0% inter pattern (pure intra traffic never crosses the
    gateway, so the bound does not apply).
    """
    if inputs.traffic_inter_pct <= 0:
        raise ValueError("traffic_inter_pct must be > 0; the bound is undefined at 0")
    factor = traffic_overhead(inputs.geometry)
    return inputs.model_adjustment / (factor * inputs.traffic_inter_pct) * inputs.num_nodes


def _fit_poly(x: np.ndarray, y: np.ndarray, degree: int) -> list:
    """Least squares polynomial via normal equations with column scaling.

    Returns coefficients highest power first. Raises LinAlgError when the
    scaled normal matrix is singular.
    """
    cols = np.vander(x, degree + 1)  # [x^d, ..., x, 1]
    scale = np.sqrt((cols * cols).sum(axis=0))
    scale[scale == 0.0] = 1.0
    scaled = cols / scale
    gram = scaled.T @ scaled
    rhs = scaled.T @ y
    beta = np.linalg.solve(gram, rhs)
    return list(beta / scale)


def _fit_power_law(x: np.ndarray, y: np.ndarray) -> list:
    """Fit y = a * x^b: log-log seed, then bounded Gauss-Newton refinement."""
    if np.any(x <= 0):
        raise ValueError("power-law fit requires positive x")
    if np.any(y <= 0):
        raise ValueError("power-law fit requires positive y")
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = _fit_poly(lx, ly, 1)
    a = math.exp(intercept)
    b = slope
    for _ in range(50):
        xb = np.power(x, b)
        f = a * xb
        resid = y - f
        j_a = xb
        j_b = f * lx
        g11 = float(j_a @ j_a)
        g12 = float(j_a @ j_b)
        g22 = float(j_b @ j_b)
        det = g11 * g22 - g12 * g12
        if det == 0.0 or not math.isfinite(det):
            break
        r1 = float(j_a @ resid)
        r2 = float(j_b @ resid)
        da = (g22 * r1 - g12 * r2) / det
        db = (g11 * r2 - g12 * r1) / det
        a += da
        b += db
        step = max(abs(da) / max(abs(a), 1e-12), abs(db) / max(abs(b), 1e-12))
        if step < 1e-10:
            break
    return [a, b]


def _evaluate(model: FitModel, params: list, x: np.ndarray) -> np.ndarray:
    if model is FitModel.POWER_LAW:
        a, b = params
        return a * np.power(x, b)
    return np.polyval(params, x)


def fit_models(data) -> tuple:
    """Fit all four models to (x, y) pairs; return (results, best-by-SSE).

    `data` is a sequence of (inter_traffic_pct, throughput_gbps) pairs, at
    least 5 of them. A model whose solve fails (singular normal equations,
    non-positive data for the power law) is reported as failed and skipped
    for selection; `best` is None only if every model failed.
    """
    pairs = [(float(a), float(b)) for a, b in data]
    if len(pairs) < 5:
        raise ValueError(f"need at least 5 data points, got {len(pairs)}")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    sst = float(((y - y.mean()) ** 2).sum())

    results = []
    for model in FitModel:
        try:
            if model is FitModel.POWER_LAW:
                params = _fit_power_law(x, y)
            else:
                params = _fit_poly(x, y, _POLY_DEGREE[model])
            if not all(math.isfinite(p) for p in params):
                raise ValueError("non-finite coefficients")
        except (ValueError, np.linalg.LinAlgError):
            results.append(FitResult(model, [], math.inf, -math.inf, failed=True))
            continue
        resid = y - _evaluate(model, params, x)
        sse = float((resid * resid).sum())
        if sst > 0.0:
            r_squared = 1.0 - sse / sst
        else:
            r_squared = 1.0 if sse < 1e-12 else 0.0
        results.append(FitResult(model, params, sse, r_squared))

    usable = [r for r in results if not r.failed]
    best = min(usable, key=lambda r: r.sse) if usable else None
    return results, best

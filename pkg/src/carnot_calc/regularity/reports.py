"""Report containers and the scale-regression verdict rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Thresholds:
    """A modulus 'vanishes' when its log-log slope is at least ``slope_min`` and
    the smallest-scale value is at most ``decay_ratio`` times the largest.
    Band moduli whose slope is at most ``unbounded_slope`` grow as the scale
    shrinks and yield the verdict 'unbounded'."""

    slope_min: float = 0.1
    decay_ratio: float = 0.1
    unbounded_slope: float = -0.1
    min_scales: int = 6

    def to_dict(self) -> dict:
        return {
            "slope_min": self.slope_min,
            "decay_ratio": self.decay_ratio,
            "unbounded_slope": self.unbounded_slope,
            "min_scales": self.min_scales,
        }


DEFAULT_THRESHOLDS = Thresholds()


def _clean(x) -> object:
    """Make a value JSON-safe (nan/inf become strings, arrays become lists)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def log_slope(radii, values) -> float:
    """Least-squares slope of log(values) against log(radii).

    Zero values are floored just below the smallest positive one so a
    modulus that is exactly zero at small scales still reads as decaying.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    pos = v[v > 0]
    if pos.size == 0:
        return math.nan
    floor = pos.min() * 1e-3
    y = np.log(np.maximum(v, floor))
    x = np.log(r)
    if np.ptp(x) == 0:
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def classify(radii, moduli, band=None, th: Thresholds = DEFAULT_THRESHOLDS) -> tuple:
    """(fitted slope, band slope, verdict) for moduli sampled at decreasing radii."""
    moduli = np.asarray(moduli, dtype=float)
    if len(moduli) < th.min_scales:
        raise ValueError(f"need at least {th.min_scales} scales, got {len(moduli)}")
    slope = log_slope(radii, moduli)
    band_slope = log_slope(radii, band) if band is not None else math.nan
    if not np.all(np.isfinite(moduli)):
        return slope, band_slope, "unbounded"
    top = moduli[0]
    if top == 0.0:
        return slope, band_slope, "vanishing"
    decays = moduli[-1] <= th.decay_ratio * top
    if decays and (math.isnan(slope) or slope >= th.slope_min):
        return slope, band_slope, "vanishing"
    if not math.isnan(band_slope) and band_slope <= th.unbounded_slope:
        return slope, band_slope, "unbounded"
    return slope, band_slope, "bounded_nonvanishing"


@dataclass
class HolderReport:
    exponent: float
    radii: np.ndarray
    moduli: np.ndarray
    fitted_slope: float
    verdict: str
    band_moduli: np.ndarray = None
    band_slope: float = math.nan
    label: str = ""
    samples: int = 0
    thresholds: Thresholds = DEFAULT_THRESHOLDS

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(r) >= 0):
            raise ValueError("radii must be strictly decreasing")
        if np.any(np.asarray(self.moduli) < 0):
            raise ValueError("moduli must be nonnegative")

    @classmethod
    def build(cls, exponent, radii, moduli, band=None, label="", samples=0, th=DEFAULT_THRESHOLDS) -> "HolderReport":
        slope, band_slope, verdict = classify(radii, moduli, band, th)
        return cls(
            exponent=float(exponent),
            radii=np.asarray(radii, dtype=float),
            moduli=np.asarray(moduli, dtype=float),
            fitted_slope=slope,
            verdict=verdict,
            band_moduli=None if band is None else np.asarray(band, dtype=float),
            band_slope=band_slope,
            label=label,
            samples=int(samples),
            thresholds=th,
        )

    @property
    def vanishing(self) -> bool:
        return self.verdict == "vanishing"

    def to_dict(self) -> dict:
        return _clean(
            {
                "label": self.label,
                "exponent": self.exponent,
                "radii": self.radii,
                "moduli": self.moduli,
                "band_moduli": self.band_moduli if self.band_moduli is not None else [],
                "fitted_slope": self.fitted_slope,
                "band_slope": self.band_slope,
                "verdict": self.verdict,
                "samples": self.samples,
                "thresholds": self.thresholds.to_dict(),
            }
        )

    def csv_rows(self) -> list:
        band = self.band_moduli if self.band_moduli is not None else [math.nan] * len(self.radii)
        return [[repr(float(r)), repr(float(f)), repr(float(b))] for r, f, b in zip(self.radii, self.moduli, band)]


@dataclass
class VerificationReport:
    check: str
    grid: dict
    max_residual: float
    tolerance: float
    residuals: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        # a non-finite residual never passes, even against an infinite tolerance
        ok = math.isfinite(self.max_residual) and self.max_residual <= self.tolerance
        return "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _clean(
            {
                "check": self.check,
                "grid": self.grid,
                "max_residual": self.max_residual,
                "tolerance": self.tolerance,
                "verdict": self.verdict,
                "residuals": self.residuals,
                "details": self.details,
            }
        )


@dataclass
class IntrinsicGradientEstimate:
    point: np.ndarray
    matrix: np.ndarray
    method: str
    uncertainty: float

    def to_dict(self) -> dict:
        return _clean({"point": self.point, "matrix": self.matrix, "method": self.method, "uncertainty": self.uncertainty})

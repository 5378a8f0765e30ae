"""Strain-energy quantity of interest and the CDF discrepancy metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import StressStrainCurve


class CurveTooShort(Exception):
    """Curve does not reach the requested integration strain."""


class EmptySamples(Exception):
    """A sample set required to be non-empty was empty."""


class ZeroMean(Exception):
    """Data samples have zero mean; the normalized metric is undefined."""


def strain_energy(curve: StressStrainCurve, up_to_strain: float = 0.008) -> float:
    """Trapezoidal integral of |stress| over |strain| in [0, up_to_strain], GPa."""
    strain = np.abs(curve.strain)
    stress = np.abs(curve.stress)
    step = np.max(np.diff(strain)) if strain.size > 1 else np.inf
    if strain.max() + step < up_to_strain:
        raise CurveTooShort(
            f"curve reaches {strain.max():.4g}, need {up_to_strain:.4g}")
    mask = strain <= up_to_strain + 1e-15
    return float(np.trapezoid(stress[mask], strain[mask]))


def flow_stress(curve: StressStrainCurve, modulus: float,
                offset: float = 0.002) -> float:
    """Offset-method yield stress: curve intersection with E (ε − offset).

    Works on magnitude curves; raises CurveTooShort when the curve never
    crosses the offset line.
    """
    strain = np.abs(curve.strain)
    stress = np.abs(curve.stress)
    gap = stress - modulus * (strain - offset)
    # the offset line starts below the curve; find the first sign change
    for i in range(1, strain.size):
        if gap[i] <= 0.0:
            t = gap[i - 1] / (gap[i - 1] - gap[i])
            return float(stress[i - 1] + t * (stress[i] - stress[i - 1]))
    raise CurveTooShort("curve never crosses the offset line")


def post_yield_tangent(curve: StressStrainCurve,
                       window: tuple[float, float] = (0.006, 0.008)) -> float:
    """Least-squares slope of |stress| vs |strain| over a strain window, GPa."""
    strain = np.abs(curve.strain)
    stress = np.abs(curve.stress)
    mask = (strain >= window[0]) & (strain <= window[1])
    if np.count_nonzero(mask) < 2:
        raise CurveTooShort(f"fewer than 2 samples in window {window}")
    slope, _ = np.polyfit(strain[mask], stress[mask], 1)
    return float(slope)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step CDF of a finite sample."""

    sorted_values: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCdf":
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size == 0:
            raise EmptySamples("cannot build a CDF from an empty sample")
        return cls(arr)

    def __call__(self, x: float) -> float:
        return float(np.searchsorted(self.sorted_values, x, side="right")
                     / self.sorted_values.size)


def wasserstein_1d(a, b) -> float:
    """Exact integral of |F_a - F_b| over the union of step locations."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySamples("both sample sets must be non-empty")
    grid = np.concatenate([a, b])
    grid.sort()
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * np.diff(grid)))


def cdf_error(data_samples, model_samples) -> float:
    """Mean-normalized CDF discrepancy (1-Wasserstein / mean of data)."""
    data = np.asarray(data_samples, dtype=float)
    model = np.asarray(model_samples, dtype=float)
    if data.size == 0 or model.size == 0:
        raise EmptySamples("both sample sets must be non-empty")
    mean = float(np.mean(data))
    if mean == 0.0:
        raise ZeroMean("data samples have zero mean")
    return wasserstein_1d(data, model) / mean

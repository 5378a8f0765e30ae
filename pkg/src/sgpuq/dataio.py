"""Dataset ingestion, synthetic stress-strain data, train/test splits.

Dataset directories hold one CSV per (size, replicate) named
``L<size_nm>_r<replicate>.csv`` with header ``strain,stress_gpa``; both
columns are magnitudes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fem import StressStrainCurve
from .model import SgpModel

# Variance split of the replicate noise: most of the spread is a
# curve-level factor (initial-microstructure effect), the rest is
# per-point jitter that largely averages out of integral quantities.
CURVE_NOISE_FRACTION = 0.25

_FILE_RE = re.compile(r"^L(?P<size>[0-9.]+)_r(?P<rep>\d+)\.csv$")


class ParseError(Exception):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


class ValidationError(Exception):
    pass


class MissingSize(Exception):
    pass


@dataclass(frozen=True)
class DatasetEntry:
    size: float
    replicate: int
    curve: StressStrainCurve


@dataclass
class Dataset:
    """Replicated stress-strain curves per pillar size."""

    entries: list = field(default_factory=list)
    provenance: str = "ingested"

    @property
    def sizes(self) -> tuple:
        return tuple(sorted({e.size for e in self.entries}))

    def by_size(self, size: float) -> list:
        found = [e for e in self.entries if e.size == size]
        if not found:
            raise MissingSize(f"no entries for size {size} nm")
        return sorted(found, key=lambda e: e.replicate)

    def stress_matrix(self, size: float) -> tuple[np.ndarray, np.ndarray]:
        """(common strain grid, replicates x points stress matrix)."""
        entries = self.by_size(size)
        grid = entries[0].curve.strain
        for e in entries[1:]:
            if e.curve.strain.shape != grid.shape or \
                    not np.allclose(e.curve.strain, grid):
                raise ValidationError(
                    f"replicates at size {size} nm have differing strain grids")
        return grid, np.vstack([e.curve.stress for e in entries])

    def noise_std(self, size: float) -> float:
        """Pooled std of the replicate stresses at one size, GPa."""
        _, stresses = self.stress_matrix(size)
        if stresses.shape[0] < 2:
            raise ValidationError(
                f"need >= 2 replicates at size {size} nm to estimate noise")
        return float(np.sqrt(np.mean(np.var(stresses, axis=0, ddof=1))))

    def noise_profile(self, size: float) -> np.ndarray:
        """Per-strain-point std of the replicate stresses at one size, GPa."""
        _, stresses = self.stress_matrix(size)
        if stresses.shape[0] < 2:
            raise ValidationError(
                f"need >= 2 replicates at size {size} nm to estimate noise")
        return np.std(stresses, axis=0, ddof=1)

    def relative_noise(self, size: float) -> float:
        """Mean per-point std over mean stress level, dimensionless."""
        _, stresses = self.stress_matrix(size)
        std = np.std(stresses, axis=0, ddof=1)
        denom = float(np.mean(np.abs(stresses)))
        return float(np.mean(std)) / denom

    def export(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for e in self.entries:
            e.curve.to_csv(directory / f"L{e.size:g}_r{e.replicate}.csv")


@dataclass(frozen=True)
class CaseSplit:
    """Disjoint training/testing size sets."""

    training: tuple
    testing: tuple
    label: str = ""

    def __post_init__(self):
        if not self.training or not self.testing:
            raise ValueError("training and testing must both be non-empty")
        if set(self.training) & set(self.testing):
            raise ValueError("training and testing sizes overlap")


# Table-style default splits: held-out smallest vs held-out largest size.
CASE_I = CaseSplit(training=(300.0, 500.0, 700.0, 1000.0),
                   testing=(200.0,), label="case-1")
CASE_II = CaseSplit(training=(200.0, 300.0, 500.0, 700.0),
                    testing=(1000.0,), label="case-2")


def _read_curve(path: Path) -> StressStrainCurve:
    strains, stresses = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "strain,stress_gpa":
            raise ParseError(path, 1, f"unexpected header {header!r}")
        for ln, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 2:
                raise ParseError(path, ln, f"expected 2 columns, got {len(parts)}")
            try:
                strains.append(float(parts[0]))
                stresses.append(float(parts[1]))
            except ValueError as exc:
                raise ParseError(path, ln, str(exc)) from exc
    strain = np.abs(np.asarray(strains))
    stress = np.abs(np.asarray(stresses))
    if strain.size < 2:
        raise ValidationError(f"{path}: curve needs at least 2 points")
    if np.any(np.diff(strain) <= 0):
        raise ValidationError(f"{path}: strain grid is not strictly increasing")
    return StressStrainCurve(strain, stress, label=path.stem)


def ingest(path) -> Dataset:
    """Load every L*_r*.csv file under `path` into a Dataset."""
    directory = Path(path)
    if not directory.is_dir():
        raise ValidationError(f"{directory} is not a directory")
    entries = []
    for f in sorted(directory.glob("*.csv")):
        match = _FILE_RE.match(f.name)
        if not match:
            continue
        entries.append(DatasetEntry(size=float(match["size"]),
                                    replicate=int(match["rep"]),
                                    curve=_read_curve(f)))
    if not entries:
        raise ValidationError(f"no dataset files found under {directory}")
    return Dataset(entries=entries, provenance="ingested")


def generate_synthetic(truth, sizes, replicates: int, noise_level: float,
                       seed, model: SgpModel | None = None) -> Dataset:
    """Solve the forward model at `truth` per size and add replicate noise.

    Noise: lognormal per-curve factor plus per-point Gaussian jitter whose
    std is proportional to the local stress, with variance split
    CURVE_NOISE_FRACTION / (1 - CURVE_NOISE_FRACTION), so the realized
    per-size relative stress spread matches `noise_level` at every strain
    level (the replicate scatter in such data grows with the stress).
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    model = model or SgpModel()
    rng = np.random.default_rng(seed)
    sigma_curve = noise_level * np.sqrt(CURVE_NOISE_FRACTION)
    sigma_point_rel = noise_level * np.sqrt(1.0 - CURVE_NOISE_FRACTION)
    entries = []
    for size in sizes:
        base = model.curve(truth, size)
        sigma_log = np.sqrt(np.log1p(sigma_curve ** 2))
        for rep in range(1, replicates + 1):
            if noise_level > 0.0:
                factor = rng.lognormal(mean=-0.5 * sigma_log ** 2,
                                       sigma=sigma_log)
                jitter = rng.normal(0.0, sigma_point_rel,
                                    size=base.stress.size) \
                    * np.abs(base.stress)
            else:
                factor, jitter = 1.0, 0.0
            stress = np.abs(base.stress * factor + jitter)
            entries.append(DatasetEntry(
                size=float(size), replicate=rep,
                curve=StressStrainCurve(base.strain.copy(), stress,
                                        label=f"L{size:g}_r{rep}")))
    return Dataset(entries=entries, provenance="synthetic")


def case_split(dataset: Dataset, case: CaseSplit) -> tuple[Dataset, Dataset]:
    """Disjoint (training, testing) views of the dataset."""
    for size in (*case.training, *case.testing):
        if size not in dataset.sizes:
            raise MissingSize(f"size {size} nm not present in dataset")
    train = [e for e in dataset.entries if e.size in case.training]
    test = [e for e in dataset.entries if e.size in case.testing]
    return (Dataset(train, dataset.provenance),
            Dataset(test, dataset.provenance))

"""Uniform parameter boxes, Latin hypercube sampling, pick-freeze matrices.

All randomness flows through numpy's PCG64 generator so that any sample
matrix is reproducible from its seed on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Calibrated parameter names in canonical order (m, q stay fixed).
PARAM_NAMES = ("l_dis", "l_en", "yield_strength", "h_iso", "r_iso",
               "elastic_modulus")

# Uniform prior bounds: lengths nm, stresses GPa, r dimensionless.
DEFAULT_BOUNDS = {
    "l_dis": (40.0, 900.0),
    "l_en": (120.0, 450.0),
    "yield_strength": (0.02, 0.21),
    "h_iso": (1.0e-5, 0.75),
    "r_iso": (0.2, 450.0),
    "elastic_modulus": (118.43, 140.64),
}


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned box of uniform marginals."""

    names: tuple = PARAM_NAMES
    lower: np.ndarray = field(
        default_factory=lambda: np.array([DEFAULT_BOUNDS[n][0] for n in PARAM_NAMES]))
    upper: np.ndarray = field(
        default_factory=lambda: np.array([DEFAULT_BOUNDS[n][1] for n in PARAM_NAMES]))

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("parameter names must be unique")
        if len(self.names) != self.lower.size or len(self.names) != self.upper.size:
            raise ValueError("names/bounds size mismatch")
        if np.any(self.lower >= self.upper):
            raise ValueError("every lower bound must be < its upper bound")

    @property
    def n_params(self) -> int:
        return len(self.names)

    @property
    def ranges(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def prior_variance(self) -> np.ndarray:
        return self.ranges ** 2 / 12.0

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    @classmethod
    def from_dict(cls, bounds: dict) -> "ParamBox":
        names = tuple(bounds)
        return cls(names,
                   np.array([bounds[n][0] for n in names], dtype=float),
                   np.array([bounds[n][1] for n in names], dtype=float))


@dataclass(frozen=True)
class SampleMatrix:
    """N x K matrix of parameter values with generation metadata."""

    values: np.ndarray
    names: tuple
    seed: object
    kind: str = "A"

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        header = ",".join(self.names)
        np.savetxt(path, self.values, delimiter=",", header=header,
                   comments="", fmt="%.12g")


def lhs_sample(box: ParamBox, n: int, seed, kind: str = "A") -> SampleMatrix:
    """Latin hypercube draw: one point per stratum per dimension, strata
    permuted independently across dimensions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    k = box.n_params
    unit = np.empty((n, k))
    for col in range(k):
        perm = rng.permutation(n)
        unit[:, col] = (perm + rng.uniform(size=n)) / n
    values = box.lower + unit * box.ranges
    return SampleMatrix(values, box.names, seed, kind)


def saltelli_matrices(box: ParamBox, n: int, seed):
    """Pick-freeze matrices (A, B, [AB_1..AB_K]); AB_k is A with column k
    taken from B.  Distinct model-input rows total N (K + 2)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    seed_a, seed_b = ss.spawn(2)
    a = lhs_sample(box, n, seed_a, kind="A")
    b = lhs_sample(box, n, seed_b, kind="B")
    ab = []
    for k in range(box.n_params):
        vals = a.values.copy()
        vals[:, k] = b.values[:, k]
        ab.append(SampleMatrix(vals, box.names, seed, kind=f"AB_{k}"))
    return a, b, ab

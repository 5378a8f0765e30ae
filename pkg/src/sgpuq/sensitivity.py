"""Total-effect sensitivity indices of the strain-energy output.

Pick-freeze evaluation with the Jansen form of the estimator: the raw
half-mean-square numerator is divided by the unbiased variance of the
pooled (y_A, y_B) outputs so the result matches the variance-ratio
definition of the total-effect index.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fem import SolverFailure
from .model import SgpModel
from .qoi import CurveTooShort
from .sampling import ParamBox, SampleMatrix, saltelli_matrices


class ZeroVariance(Exception):
    """Pooled output variance too small to normalize the indices."""


class BatchFailure(Exception):
    """More than the tolerated fraction of model evaluations failed."""


FAILURE_TOLERANCE = 0.01


def _qoi_task(args):
    model, theta, size = args
    try:
        return model.qoi(theta, size)
    except (SolverFailure, CurveTooShort):
        return np.nan


def evaluate_qoi_batch(matrix, size: float, model: SgpModel,
                       jobs: int = 1) -> np.ndarray:
    """One QoI per matrix row (order preserving); failed solves are NaN.

    Raises BatchFailure when more than FAILURE_TOLERANCE of rows fail.
    """
    rows = np.asarray(matrix.values if isinstance(matrix, SampleMatrix)
                      else matrix, dtype=float)
    tasks = [(model, rows[i], size) for i in range(rows.shape[0])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = np.array(list(pool.map(_qoi_task, tasks,
                                         chunksize=max(1, len(tasks) // (8 * jobs)))))
    else:
        out = np.array([_qoi_task(t) for t in tasks])
    n_fail = int(np.sum(~np.isfinite(out)))
    if n_fail > FAILURE_TOLERANCE * len(out):
        raise BatchFailure(f"{n_fail}/{len(out)} model evaluations failed")
    return out


def total_effect_indices(y_a, y_b, y_ab_list) -> np.ndarray:
    """Jansen estimator per parameter, NaN rows dropped pairwise."""
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    pooled = np.concatenate([y_a, y_b])
    pooled = pooled[np.isfinite(pooled)]
    if pooled.size < 2:
        raise ZeroVariance("not enough valid outputs")
    var = float(np.var(pooled, ddof=1))
    if var < 1e-30:
        raise ZeroVariance(f"pooled output variance {var:.3e} below 1e-30")
    indices = np.empty(len(y_ab_list))
    for k, y_ab in enumerate(y_ab_list):
        y_ab = np.asarray(y_ab, dtype=float)
        mask = np.isfinite(y_a) & np.isfinite(y_ab)
        diff = y_a[mask] - y_ab[mask]
        indices[k] = 0.5 * float(np.mean(diff ** 2)) / var
    return indices


@dataclass
class SensitivityReport:
    """Replication mean/std of the indices, per size and size-averaged."""

    names: tuple
    sizes: tuple
    per_size_mean: dict = field(default_factory=dict)
    per_size_std: dict = field(default_factory=dict)
    averaged_mean: np.ndarray | None = None
    averaged_std: np.ndarray | None = None
    n_samples: int = 0
    n_replicates: int = 0
    seed: int | None = None
    n_evaluations: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("parameter,size,S_mean,S_std\n")
            for size in self.sizes:
                for i, name in enumerate(self.names):
                    fh.write(f"{name},{size:g},{self.per_size_mean[size][i]:.8g},"
                             f"{self.per_size_std[size][i]:.8g}\n")
            for i, name in enumerate(self.names):
                fh.write(f"{name},average,{self.averaged_mean[i]:.8g},"
                         f"{self.averaged_std[i]:.8g}\n")


def _qoi_fn_for(model):
    if callable(model) and not isinstance(model, SgpModel):
        return lambda rows, size, jobs: np.array([model(r, size) for r in rows])
    return lambda rows, size, jobs: evaluate_qoi_batch(rows, size, model, jobs)


def size_sweep_sensitivity(box: ParamBox, sizes, n: int, model,
                           n_replicates: int = 4, seed=0,
                           jobs: int = 1) -> SensitivityReport:
    """Indices per pillar size plus indices of the across-size mean QoI.

    The same parameter samples are reused across sizes within a replicate;
    replicates use independent child seeds.  `model` is an SgpModel or a
    plain callable (theta, size) -> float for analytic test functions.
    """
    sizes = tuple(sizes)
    if not sizes:
        raise ValueError("sizes must be non-empty")
    k = box.n_params
    qoi_fn = _qoi_fn_for(model)
    root = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    child_seeds = root.spawn(n_replicates)

    per_size = {size: [] for size in sizes}
    averaged = []
    n_eval = 0
    for rep in range(n_replicates):
        a, b, ab = saltelli_matrices(box, n, child_seeds[rep])
        rows = np.vstack([a.values, b.values] + [m.values for m in ab])
        y_by_size = {}
        for size in sizes:
            y_by_size[size] = qoi_fn(rows, size, jobs)
            n_eval += rows.shape[0]
        y_stack = np.vstack([y_by_size[s] for s in sizes])
        y_mean = np.mean(y_stack, axis=0)

        def split(y):
            y_a = y[:n]
            y_b = y[n:2 * n]
            y_ab = [y[(2 + j) * n:(3 + j) * n] for j in range(k)]
            return y_a, y_b, y_ab

        for size in sizes:
            per_size[size].append(total_effect_indices(*split(y_by_size[size])))
        averaged.append(total_effect_indices(*split(y_mean)))

    report = SensitivityReport(names=box.names, sizes=sizes,
                               n_samples=n, n_replicates=n_replicates,
                               seed=seed, n_evaluations=n_eval)
    for size in sizes:
        stack = np.vstack(per_size[size])
        report.per_size_mean[size] = stack.mean(axis=0)
        report.per_size_std[size] = stack.std(axis=0, ddof=1) \
            if n_replicates > 1 else np.zeros(k)
    stack = np.vstack(averaged)
    report.averaged_mean = stack.mean(axis=0)
    report.averaged_std = stack.std(axis=0, ddof=1) \
        if n_replicates > 1 else np.zeros(k)
    return report


def scatter_export(matrix: SampleMatrix, qoi_vector, path) -> None:
    """Parameter columns + QoI column for external scatter plotting."""
    qoi_vector = np.asarray(qoi_vector, dtype=float)
    if qoi_vector.size != matrix.values.shape[0]:
        raise ValueError("matrix rows and QoI vector length differ")
    data = np.column_stack([matrix.values, qoi_vector])
    header = ",".join(matrix.names) + ",qoi"
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.12g")

import numpy as np
import pytest

from sgpuq.fem import SolverFailure
from sgpuq.model import SgpModel
from sgpuq.sampling import ParamBox, lhs_sample, saltelli_matrices
from sgpuq.sensitivity import (BatchFailure, ZeroVariance,
                               evaluate_qoi_batch, scatter_export,
                               size_sweep_sensitivity,
                               total_effect_indices)

from conftest import REF_PARAMS

# analytic total indices of Q = x1 + 2 x2 + 3 x3 on U(0,1)^3
ADDITIVE_TRUTH = np.array([1.0, 4.0, 9.0]) / 14.0

# Ishigami (a=7, b=0.1) total indices, closed form computed independently
ISHIGAMI_TRUTH = np.array([0.5575888552099592, 0.4424111447900409,
                           0.2436836640621477])


def additive(theta, size=0.0):
    return float(theta[0] + 2.0 * theta[1] + 3.0 * theta[2])


def ishigami(theta, size=0.0):
    return float(np.sin(theta[0]) + 7.0 * np.sin(theta[1]) ** 2
                 + 0.1 * theta[2] ** 4 * np.sin(theta[0]))


def unit_box():
    return ParamBox(("x1", "x2", "x3"), np.zeros(3), np.ones(3))


def ishigami_box():
    return ParamBox(("x1", "x2", "x3"), np.full(3, -np.pi), np.full(3, np.pi))


def indices_for(fn, box, n, seed):
    a, b, ab = saltelli_matrices(box, n, seed)
    y_a = np.array([fn(r) for r in a.values])
    y_b = np.array([fn(r) for r in b.values])
    y_ab = [np.array([fn(r) for r in m.values]) for m in ab]
    return total_effect_indices(y_a, y_b, y_ab)


class TestTotalEffectIndices:
    def test_additive_oracle(self):
        s = indices_for(additive, unit_box(), 4000, 11)
        np.testing.assert_allclose(s, ADDITIVE_TRUTH, atol=0.03)

    def test_ishigami_oracle(self):
        s = indices_for(ishigami, ishigami_box(), 8000, 12)
        np.testing.assert_allclose(s, ISHIGAMI_TRUTH, atol=0.05)

    def test_constant_model_zero_variance(self):
        y = np.ones(100)
        with pytest.raises(ZeroVariance):
            total_effect_indices(y, y, [y, y, y])

    def test_nan_rows_dropped_pairwise(self):
        rng = np.random.default_rng(0)
        y_a = rng.normal(size=200)
        y_b = rng.normal(size=200)
        y_ab = y_a + rng.normal(scale=0.1, size=200)
        full = total_effect_indices(y_a, y_b, [y_ab])
        y_a2, y_ab2 = y_a.copy(), y_ab.copy()
        y_a2[:5] = np.nan
        y_ab2[5:10] = np.nan
        partial = total_effect_indices(y_a2, y_b, [y_ab2])
        assert np.isfinite(partial[0])
        assert partial[0] == pytest.approx(full[0], rel=0.2)


class _StubModel:
    """Picklable stand-in with the SgpModel.qoi interface."""

    def __init__(self, fail_below=-np.inf):
        self.fail_below = fail_below

    def qoi(self, theta, size):
        if theta[0] < self.fail_below:
            raise SolverFailure("stub failure")
        return float(np.sum(theta)) + size


class TestEvaluateQoiBatch:
    def test_single_row_smoke(self):
        model = SgpModel()
        theta = [REF_PARAMS[n] for n in model.names]
        out = evaluate_qoi_batch(np.array([theta]), 500.0, model)
        assert out.shape == (1,)
        assert out[0] > 0.0

    def test_order_preservation_and_batching(self):
        box = unit_box()
        m = lhs_sample(box, 64, 5)
        stub = _StubModel()
        batch = evaluate_qoi_batch(m.values, 2.0, stub)
        single = np.array([stub.qoi(r, 2.0) for r in m.values])
        np.testing.assert_array_equal(batch, single)
        perm = np.random.default_rng(1).permutation(64)
        batch_perm = evaluate_qoi_batch(m.values[perm], 2.0, stub)
        np.testing.assert_array_equal(batch_perm, batch[perm])

    def test_batch_failure_above_tolerance(self):
        values = np.linspace(0.0, 1.0, 100)[:, None] * np.ones((1, 3))
        with pytest.raises(BatchFailure):
            evaluate_qoi_batch(values, 0.0, _StubModel(fail_below=0.05))

    def test_sparse_failures_become_nan(self):
        values = np.linspace(0.0, 1.0, 200)[:, None] * np.ones((1, 3))
        out = evaluate_qoi_batch(values, 0.0, _StubModel(fail_below=0.004))
        assert np.isnan(out[0])
        assert np.isfinite(out[1:]).all()


class TestSizeSweep:
    def test_degenerate_sweep_matches_direct_estimator(self):
        box = unit_box()
        report = size_sweep_sensitivity(box, (0.0,), 512, additive,
                                        n_replicates=1, seed=9)
        child = np.random.SeedSequence(9).spawn(1)[0]
        direct = indices_for(additive, box, 512, child)
        np.testing.assert_allclose(report.per_size_mean[0.0], direct,
                                   rtol=1e-12)
        np.testing.assert_allclose(report.averaged_mean, direct, rtol=1e-12)

    def test_replication_spread_and_averaging(self):
        box = unit_box()
        report = size_sweep_sensitivity(box, (0.0, 1.0), 1024, additive,
                                        n_replicates=3, seed=10)
        # size enters additively, so indices agree across sizes
        np.testing.assert_allclose(report.per_size_mean[0.0],
                                   report.per_size_mean[1.0], atol=1e-9)
        np.testing.assert_allclose(report.averaged_mean, ADDITIVE_TRUTH,
                                   atol=0.06)
        assert np.all(report.per_size_std[0.0] >= 0.0)
        assert report.n_evaluations == 3 * 2 * 1024 * 5

    def test_empty_sizes_rejected(self):
        with pytest.raises(ValueError):
            size_sweep_sensitivity(unit_box(), (), 16, additive)

    def test_report_csv_layout(self, tmp_path):
        report = size_sweep_sensitivity(unit_box(), (0.0,), 64, additive,
                                        n_replicates=2, seed=1)
        path = tmp_path / "indices.csv"
        report.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "parameter,size,S_mean,S_std"
        # 3 parameters x (1 size + 1 average row)
        assert len(lines) == 1 + 3 * 2
        assert lines[-1].startswith("x3,average,")


class TestScatterExport:
    def test_roundtrip(self, tmp_path):
        m = lhs_sample(unit_box(), 10, 2)
        y = np.arange(10.0)
        path = tmp_path / "scatter.csv"
        scatter_export(m, y, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (10, 4)
        np.testing.assert_allclose(data[:, -1], y, rtol=1e-11)

    def test_length_mismatch(self, tmp_path):
        m = lhs_sample(unit_box(), 10, 2)
        with pytest.raises(ValueError):
            scatter_export(m, np.arange(9.0), tmp_path / "s.csv")

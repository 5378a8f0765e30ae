import numpy as np
import pytest

from sgpuq import (LoadProgram, Mesh1D, MixedField, NonConvergence,
                   SgpParams, SolverSettings, StressStrainCurve,
                   run_compression)
from sgpuq.fem import (OutOfRange, SolverFailure, assemble_jacobian,
                       assemble_residual, boundary_stress,
                       newton_step_solve, plastic_profile)
from sgpuq.sampling import ParamBox, lhs_sample

from conftest import REF_PARAMS


class TestMesh:
    def test_dof_counts(self):
        mesh = Mesh1D(length=500.0, n_elements=30)
        assert mesh.n_dof_u == 61
        assert mesh.n_dof_p == 31
        np.testing.assert_allclose(mesh.element_sizes, 500.0 / 30)
        assert mesh.nodes_p[0] == 0.0 and mesh.nodes_p[-1] == 500.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Mesh1D(length=0.0)
        with pytest.raises(ValueError):
            Mesh1D(length=500.0, n_elements=1)


class TestLoadProgram:
    def test_default_steps(self):
        assert LoadProgram().n_steps == 160

    def test_validation(self):
        with pytest.raises(ValueError):
            LoadProgram(dt=0.0)
        with pytest.raises(ValueError):
            LoadProgram(final_strain=0.0)
        with pytest.raises(ValueError):
            LoadProgram(strain_rate=1.0, final_strain=-0.008)


class TestCurve:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            StressStrainCurve(np.zeros(3), np.zeros(4))

    def test_csv(self, tmp_path):
        c = StressStrainCurve(np.array([0.0, 0.004]), np.array([0.0, 0.5]))
        path = tmp_path / "c.csv"
        c.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "strain,stress_gpa"
        assert len(lines) == 3


class TestResidual:
    def test_zero_state_zero_residual(self, ref_params, mesh500):
        zero = MixedField.zero(mesh500)
        F = assemble_residual(zero, zero, 5e-5, ref_params, mesh500, 0.0)
        np.testing.assert_array_equal(F, np.zeros_like(F))

    def test_bc_rows(self, ref_params, mesh500):
        zero = MixedField.zero(mesh500)
        u_dag = -0.1
        F = assemble_residual(zero, zero, 5e-5, ref_params, mesh500, u_dag)
        assert F[mesh500.n_dof_u - 1] == -u_dag  # x - bc on the BC row

    def test_elastic_exact_solution(self, ref_params, mesh500):
        # linear displacement, zero plastic strain: interior residual
        # vanishes because T is spatially constant
        u_dag = -0.001 * mesh500.length
        u = np.linspace(0.0, u_dag, mesh500.n_dof_u)
        fields = MixedField(u, np.zeros(mesh500.n_dof_p))
        F = assemble_residual(fields, MixedField.zero(mesh500), 5e-5,
                              ref_params, mesh500, u_dag)
        n_u = mesh500.n_dof_u
        # displacement equations: exactly balanced
        assert np.max(np.abs(F[1:n_u - 1])) < 1e-12
        assert abs(F[0]) == 0.0 and abs(F[n_u - 1]) == 0.0


class TestJacobian:
    def test_matches_finite_differences(self, rng):
        box = ParamBox()
        mesh = Mesh1D(length=500.0, n_elements=6)
        ndof = mesh.n_dof_u + mesh.n_dof_p
        for trial in range(5):
            theta = lhs_sample(box, 1, rng.integers(2 ** 31)).values[0]
            params = SgpParams(**dict(zip(box.names, theta)))
            x = rng.normal(0.0, 1e-3, size=ndof)
            p_prev = rng.normal(0.0, 1e-4, size=mesh.n_dof_p)
            u_dag = -0.05
            fields = MixedField(x[:mesh.n_dof_u], x[mesh.n_dof_u:])
            prev = MixedField(np.zeros(mesh.n_dof_u), p_prev)
            J = assemble_jacobian(fields, prev, 5e-5, params, mesh, u_dag)
            J_fd = np.empty_like(J)
            for j in range(ndof):
                h = 1e-7 * max(1.0, abs(x[j]))
                xp = x.copy(); xp[j] += h
                xm = x.copy(); xm[j] -= h
                fp = assemble_residual(MixedField(xp[:mesh.n_dof_u],
                                                  xp[mesh.n_dof_u:]),
                                       prev, 5e-5, params, mesh, u_dag)
                fm = assemble_residual(MixedField(xm[:mesh.n_dof_u],
                                                  xm[mesh.n_dof_u:]),
                                       prev, 5e-5, params, mesh, u_dag)
                J_fd[:, j] = (fp - fm) / (2.0 * h)
            scale = np.max(np.abs(J))
            assert np.max(np.abs(J - J_fd)) / scale < 1e-5


class TestNewtonStep:
    def test_elastic_step_fast(self, ref_params, mesh500):
        # stress stays below yield: few iterations, eps_p ~ 0
        prev = MixedField.zero(mesh500)
        u_dag = -5e-5 * mesh500.length  # strain 5e-5, stress ~ 0.006 GPa
        new, n_iter = newton_step_solve(prev, u_dag, 1e-4, ref_params,
                                        mesh500)
        assert n_iter <= 3
        assert np.max(np.abs(new.eps_p)) < 1e-10

    def test_nonconvergence_error_path(self, ref_params, mesh500):
        prev = MixedField.zero(mesh500)
        with pytest.raises(NonConvergence) as err:
            newton_step_solve(prev, -0.004 * mesh500.length, 5e-5,
                              ref_params, mesh500, max_iter=0)
        assert err.value.iterations == 0
        assert err.value.residual > 0.0


class TestRunCompression:
    def test_elastic_limit(self, mesh500, program):
        params = SgpParams(**{**REF_PARAMS, "yield_strength": 1.0e3})
        curve, trace = run_compression(params, mesh500, program)
        expected = params.elastic_modulus * curve.strain[1:]
        rel = np.abs(curve.stress[1:] - expected) / expected
        assert np.max(rel) < 1e-3
        assert np.max(np.abs(trace.profiles[-1])) < 1e-10

    def test_curve_shape_and_start(self, ref_solution, program):
        curve, trace = ref_solution
        assert curve.strain[0] == 0.0 and curve.stress[0] == 0.0
        assert curve.strain.size == program.n_steps + 1
        assert np.all(np.diff(curve.strain) > 0)
        assert np.all(curve.stress >= 0.0)

    def test_bc_exact_and_symmetric_profile(self, ref_solution):
        _, trace = ref_solution
        for profile in (trace.profiles[40], trace.profiles[-1]):
            assert profile[0] == 0.0 and profile[-1] == 0.0
            assert np.max(np.abs(profile - profile[::-1])) < 1e-8

    def test_interior_plasticity_developed(self, ref_solution):
        _, trace = ref_solution
        assert np.max(np.abs(trace.profiles[-1])) > 1e-3

    def test_frozen_reference_stress(self, ref_solution):
        # regression anchor for the full nonlinear solve
        curve, _ = ref_solution
        assert curve.stress[-1] == pytest.approx(0.18961255416, rel=1e-9)

    def test_substepping_bisects_oversized_increments(
            self, ref_params, mesh500, fast_program, monkeypatch):
        # force failure for any increment above half the program step so
        # every step must bisect exactly once
        import sgpuq.fem as fem
        real = fem.newton_step_solve

        def flaky(prev, u_dag, dt, *args, **kwargs):
            if dt > 0.5 * fast_program.dt + 1e-15:
                raise NonConvergence(0, 1.0)
            return real(prev, u_dag, dt, *args, **kwargs)

        monkeypatch.setattr(fem, "newton_step_solve", flaky)
        curve, trace = fem.run_compression(ref_params, mesh500,
                                           fast_program)
        assert all(s == 2 for s in trace.substeps[1:])
        reference, _ = run_compression(ref_params, mesh500, fast_program)
        # halved increments resolve the same (nearly rate-independent) path
        np.testing.assert_allclose(curve.stress, reference.stress,
                                   rtol=1e-4)

    def test_solver_failure_when_depth_exhausted(self, ref_params, mesh500,
                                                 fast_program):
        settings = SolverSettings(max_iter=1, max_substep_depth=1)
        with pytest.raises(SolverFailure):
            run_compression(ref_params, mesh500, fast_program, settings)


class TestBoundaryStress:
    def test_elastic_value(self, ref_params, mesh500):
        strain = -1e-4
        u = np.linspace(0.0, strain * mesh500.length, mesh500.n_dof_u)
        fields = MixedField(u, np.zeros(mesh500.n_dof_p))
        assert boundary_stress(fields, ref_params, mesh500) == \
            pytest.approx(ref_params.elastic_modulus * strain, rel=1e-12)


class TestPlasticProfile:
    def test_nearest_step(self, ref_solution):
        _, trace = ref_solution
        prof = plastic_profile(trace, 0.008)
        np.testing.assert_array_equal(prof, trace.profiles[-1])

    def test_out_of_range(self, ref_solution):
        _, trace = ref_solution
        with pytest.raises(OutOfRange):
            plastic_profile(trace, 0.02)


class TestMeshRefinement:
    def test_stress_converges_with_mesh(self, ref_params, fast_program):
        # halving element size changes the reported stress by little
        results = []
        for n_el in (15, 30, 60):
            mesh = Mesh1D(length=500.0, n_elements=n_el)
            curve, _ = run_compression(ref_params, mesh, fast_program)
            results.append(curve.stress[-1])
        err_coarse = abs(results[0] - results[2])
        err_fine = abs(results[1] - results[2])
        assert err_fine < err_coarse
        assert err_fine / results[2] < 5e-3

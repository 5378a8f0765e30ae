import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sgpuq.fem import StressStrainCurve
from sgpuq.qoi import (CurveTooShort, EmptySamples, EmpiricalCdf, ZeroMean,
                       cdf_error, flow_stress, post_yield_tangent,
                       strain_energy, wasserstein_1d)

samples = arrays(np.float64, st.integers(1, 30),
                 elements=st.floats(-100, 100, allow_nan=False,
                                    allow_infinity=False))


def linear_curve(modulus, n=161, final=0.008):
    strain = np.linspace(0.0, final, n)
    return StressStrainCurve(strain, modulus * strain)


class TestStrainEnergy:
    def test_linear_elastic_closed_form(self):
        q = strain_energy(linear_curve(128.44), 0.008)
        assert q == pytest.approx(0.5 * 128.44 * 0.008 ** 2, rel=1e-12)

    def test_zero_stress(self):
        strain = np.linspace(0.0, 0.008, 161)
        curve = StressStrainCurve(strain, np.zeros_like(strain))
        assert strain_energy(curve, 0.008) == 0.0

    def test_elastic_perfectly_plastic(self):
        # E=100, yield 0.1 -> kink at strain 0.001; grid hits it exactly
        strain = np.linspace(0.0, 0.008, 81)
        stress = np.minimum(100.0 * strain, 0.1)
        q = strain_energy(StressStrainCurve(strain, stress), 0.008)
        assert q == pytest.approx(7.5e-4, rel=1e-12)

    def test_too_short(self):
        with pytest.raises(CurveTooShort):
            strain_energy(linear_curve(100.0, final=0.004), 0.008)

    def test_magnitudes_used(self):
        strain = np.linspace(0.0, 0.008, 161)
        curve = StressStrainCurve(-strain, -128.44 * strain)
        assert strain_energy(curve, 0.008) == \
            pytest.approx(0.5 * 128.44 * 0.008 ** 2, rel=1e-12)


class TestFlowStress:
    def test_elastic_plastic_offset(self):
        # bilinear curve: E=100 up to 0.1 GPa then flat; 0.2% offset
        # line sigma = 100 (eps - 0.002) meets the plateau at 0.1
        strain = np.linspace(0.0, 0.008, 801)
        stress = np.minimum(100.0 * strain, 0.1)
        fs = flow_stress(StressStrainCurve(strain, stress), 100.0)
        assert fs == pytest.approx(0.1, rel=1e-9)

    def test_never_yields(self):
        with pytest.raises(CurveTooShort):
            flow_stress(linear_curve(100.0, final=0.001), 100.0)


class TestPostYieldTangent:
    def test_linear_slope(self):
        assert post_yield_tangent(linear_curve(128.44)) == \
            pytest.approx(128.44, rel=1e-9)

    def test_window_too_narrow(self):
        with pytest.raises(CurveTooShort):
            post_yield_tangent(linear_curve(100.0, n=5),
                               window=(0.0079, 0.008))


class TestEmpiricalCdf:
    def test_step_values(self):
        cdf = EmpiricalCdf.from_samples([1.0, 2.0, 3.0, 4.0])
        assert cdf(0.5) == 0.0
        assert cdf(1.0) == 0.25
        assert cdf(2.5) == 0.5
        assert cdf(4.0) == 1.0

    def test_empty(self):
        with pytest.raises(EmptySamples):
            EmpiricalCdf.from_samples([])


class TestWasserstein:
    @given(a=samples)
    def test_identity(self, a):
        assert wasserstein_1d(a, a) == 0.0

    @given(a=samples, b=samples)
    def test_symmetry(self, a, b):
        assert wasserstein_1d(a, b) == pytest.approx(
            wasserstein_1d(b, a), rel=1e-12, abs=1e-12)

    @given(a=samples, c=st.floats(-10, 10, allow_nan=False))
    def test_shift_distance(self, a, c):
        assert wasserstein_1d(a, a + c) == pytest.approx(abs(c), abs=1e-9)

    def test_hand_checked(self):
        # {0,2} vs {1,3}: CDFs differ by 1/2 on [0,1] and [2,3] -> 1.0
        assert wasserstein_1d([0.0, 2.0], [1.0, 3.0]) == \
            pytest.approx(1.0, rel=1e-14)

    def test_empty(self):
        with pytest.raises(EmptySamples):
            wasserstein_1d([], [1.0])


class TestCdfError:
    def test_identical_sets(self):
        assert cdf_error([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_point_mass_shift(self):
        assert cdf_error([1.0] * 4, [2.0] * 4) == pytest.approx(1.0, rel=1e-14)

    def test_hand_checked(self):
        assert cdf_error([0.0, 2.0], [1.0, 3.0]) == pytest.approx(1.0, rel=1e-14)

    def test_zero_mean(self):
        with pytest.raises(ZeroMean):
            cdf_error([-1.0, 1.0], [0.0])

    def test_empty(self):
        with pytest.raises(EmptySamples):
            cdf_error([1.0], [])

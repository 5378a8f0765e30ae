import numpy as np
import pytest

from sgpuq import LoadProgram, Mesh1D, SgpParams, run_compression

# Reference parameter set used throughout (also config.FIG3_PARAMS).
REF_PARAMS = dict(l_dis=20.0, l_en=75.0, yield_strength=0.047,
                  h_iso=0.062, r_iso=298.42, elastic_modulus=128.44)


@pytest.fixture(scope="session")
def ref_params():
    return SgpParams(**REF_PARAMS)


@pytest.fixture(scope="session")
def mesh500():
    return Mesh1D(length=500.0)


@pytest.fixture(scope="session")
def program():
    return LoadProgram()


@pytest.fixture(scope="session")
def fast_program():
    """Coarse-in-time program for smoke tests (20 steps)."""
    return LoadProgram(dt=4.0e-4)


@pytest.fixture(scope="session")
def ref_solution(ref_params, mesh500, program):
    """Full-resolution compression at the reference parameters."""
    return run_compression(ref_params, mesh500, program)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260823)

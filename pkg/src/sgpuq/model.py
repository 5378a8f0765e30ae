"""Bridge from calibrated parameter vectors to forward model outputs."""

from __future__ import annotations

from dataclasses import dataclass

from .fem import (LoadProgram, Mesh1D, SolverSettings, StressStrainCurve,
                  run_compression)
from .material import SgpParams
from .qoi import strain_energy
from .sampling import PARAM_NAMES


@dataclass(frozen=True)
class SgpModel:
    """Forward model: theta vector + pillar size -> curve / strain energy.

    theta carries the six calibrated parameters in `names` order; the
    rate parameters and Poisson ratio stay fixed.
    """

    names: tuple = PARAM_NAMES
    n_elements: int = 30
    program: LoadProgram = LoadProgram()
    settings: SolverSettings = SolverSettings()
    poisson: float = 0.3
    rate_power: float = 0.0
    rate_coeff: float = 1.0
    qoi_strain: float = 0.008

    def params_from_theta(self, theta) -> SgpParams:
        kwargs = dict(zip(self.names, (float(v) for v in theta)))
        return SgpParams(rate_power=self.rate_power,
                         rate_coeff=self.rate_coeff,
                         poisson=self.poisson, **kwargs)

    def solve(self, theta, size: float):
        mesh = Mesh1D(length=float(size), n_elements=self.n_elements)
        return run_compression(self.params_from_theta(theta), mesh,
                               self.program, self.settings)

    def curve(self, theta, size: float) -> StressStrainCurve:
        return self.solve(theta, size)[0]

    def qoi(self, theta, size: float) -> float:
        return strain_energy(self.curve(theta, size), self.qoi_strain)

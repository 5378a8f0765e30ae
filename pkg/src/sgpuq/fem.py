"""1D dual-mixed finite element solver for the gradient-plasticity model.

Displacement lives on 3-node quadratic elements, plastic strain on 2-node
linear elements.  A compression history is applied through the boundary
displacement and integrated with backward Euler; each step is solved by
Newton's method with recursive load-increment bisection on failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .material import RATE_FLOOR, SgpParams


class NonConvergence(Exception):
    """Newton iteration failed; caller may substep."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations, "
                         f"residual {residual:.3e}")


class SolverFailure(Exception):
    """Substepping depth exhausted without convergence."""


class OutOfRange(Exception):
    """Requested strain outside the computed loading history."""


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh on [0, L] with quadratic u / linear eps_p spaces."""

    length: float
    n_elements: int = 30

    def __post_init__(self):
        if self.n_elements < 2:
            raise ValueError("n_elements must be >= 2")
        if self.length <= 0.0:
            raise ValueError("length must be > 0")

    @property
    def n_dof_u(self) -> int:
        return 2 * self.n_elements + 1

    @property
    def n_dof_p(self) -> int:
        return self.n_elements + 1

    @property
    def element_sizes(self) -> np.ndarray:
        return np.full(self.n_elements, self.length / self.n_elements)

    @property
    def nodes_p(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_dof_p)


@dataclass
class MixedField:
    """Nodal values of the mixed unknowns (u quadratic, eps_p linear)."""

    u: np.ndarray
    eps_p: np.ndarray

    @classmethod
    def zero(cls, mesh: Mesh1D) -> "MixedField":
        return cls(np.zeros(mesh.n_dof_u), np.zeros(mesh.n_dof_p))

    def copy(self) -> "MixedField":
        return MixedField(self.u.copy(), self.eps_p.copy())


@dataclass(frozen=True)
class LoadProgram:
    """Constant-strain-rate compression program (negative = compression)."""

    strain_rate: float = -1.0
    dt: float = 5.0e-5
    final_strain: float = -0.008

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.final_strain == 0.0:
            raise ValueError("final_strain must be nonzero")
        if np.sign(self.strain_rate) != np.sign(self.final_strain):
            raise ValueError("strain_rate and final_strain must share a sign")

    @property
    def n_steps(self) -> int:
        return int(round(self.final_strain / (self.strain_rate * self.dt)))


@dataclass(frozen=True)
class StressStrainCurve:
    """|strain| vs |stress| samples of one loading history."""

    strain: np.ndarray
    stress: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.strain.shape != self.stress.shape:
            raise ValueError("strain and stress must have equal length")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("strain,stress_gpa\n")
            for e, s in zip(self.strain, self.stress):
                fh.write(f"{e:.12g},{s:.12g}\n")


@dataclass
class SolveTrace:
    """Per accepted step: applied strain, boundary stress, eps_p profile."""

    applied_strain: list = field(default_factory=list)
    stress: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    newton_iters: list = field(default_factory=list)
    substeps: list = field(default_factory=list)


def assemble_residual(fields: MixedField, prev: MixedField, dt: float,
                      params: SgpParams, mesh: Mesh1D, u_dagger: float,
                      rate_floor: float = RATE_FLOOR) -> np.ndarray:
    """Residual of both variational equations; BC rows are x - bc value."""
    x = np.concatenate([fields.u, fields.eps_p])
    F, _ = _kernels._assemble(x, prev.eps_p, dt, mesh.element_sizes,
                              _kernels.pack_params(params, rate_floor),
                              u_dagger, False)
    return F


def assemble_jacobian(fields: MixedField, prev: MixedField, dt: float,
                      params: SgpParams, mesh: Mesh1D, u_dagger: float,
                      rate_floor: float = RATE_FLOOR) -> np.ndarray:
    x = np.concatenate([fields.u, fields.eps_p])
    _, J = _kernels._assemble(x, prev.eps_p, dt, mesh.element_sizes,
                              _kernels.pack_params(params, rate_floor),
                              u_dagger, True)
    return J


def newton_step_solve(prev: MixedField, target_u_dagger: float, dt: float,
                      params: SgpParams, mesh: Mesh1D,
                      tol: float = 1e-10, tol_abs: float = 1e-12,
                      max_iter: int = 50,
                      rate_floor: float = RATE_FLOOR,
                      guess: MixedField | None = None) -> tuple[MixedField, int]:
    """One backward-Euler step; raises NonConvergence on failure.

    `guess` overrides the Newton starting point (e.g. a time-extrapolated
    predictor); the backward-Euler history is always taken from `prev`.
    """
    start = guess if guess is not None else prev
    x0 = np.concatenate([start.u, start.eps_p])
    prm = _kernels.pack_params(params, rate_floor)
    x, n_iter, ok, res = _kernels._newton(
        x0, prev.eps_p, dt, mesh.element_sizes, prm, target_u_dagger,
        tol, tol_abs, max_iter)
    if not ok:
        raise NonConvergence(n_iter, res)
    n_u = mesh.n_dof_u
    return MixedField(x[:n_u], x[n_u:]), n_iter


def boundary_stress(fields: MixedField, params: SgpParams,
                    mesh: Mesh1D) -> float:
    """Element-averaged Cauchy stress over the loaded (last) element."""
    h = mesh.length / mesh.n_elements
    jac = 0.5 * h
    iu0 = mesh.n_dof_u - 3
    ip0 = mesh.n_dof_p - 2
    u_e = fields.u[iu0:iu0 + 3]
    p_e = fields.eps_p[ip0:ip0 + 2]
    acc = 0.0
    for g in range(3):
        du = float(_kernels.DSHP_U[g] @ u_e) / jac
        pv = float(_kernels.SHP_P[g] @ p_e)
        acc += _kernels.GAUSS_W[g] * params.elastic_modulus * (du - pv)
    return acc / 2.0  # Gauss weights sum to 2 on [-1, 1]


@dataclass(frozen=True)
class SolverSettings:
    """Newton/substepping controls."""

    tol_rel: float = 1e-10
    tol_abs: float = 1e-12
    # the step crossing first yield can need ~30 iterations when the
    # dissipative length scale is large relative to the pillar
    max_iter: int = 50
    max_substep_depth: int = 10
    rate_floor: float = RATE_FLOOR


def _advance(state: MixedField, t0: float, t1: float, rate_times_L: float,
             params: SgpParams, mesh: Mesh1D, settings: SolverSettings,
             depth: int, guess: MixedField | None = None
             ) -> tuple[MixedField, int, int]:
    """Advance from t0 to t1 with recursive bisection; returns
    (state, newton_iters, substeps)."""
    dt = t1 - t0
    # a good predictor converges in a few iterations; cap the attempt so a
    # bad one fails fast before the full-budget retry below
    max_iter = min(settings.max_iter, 12) if guess is not None \
        else settings.max_iter
    try:
        new, n_iter = newton_step_solve(
            state, rate_times_L * t1, dt, params, mesh,
            tol=settings.tol_rel, tol_abs=settings.tol_abs,
            max_iter=max_iter, rate_floor=settings.rate_floor,
            guess=guess)
        return new, n_iter, 1
    except NonConvergence:
        if guess is not None:
            # the extrapolated predictor may have started Newton in a bad
            # basin; retry once from the last converged state
            return _advance(state, t0, t1, rate_times_L, params, mesh,
                            settings, depth, guess=None)
        if depth >= settings.max_substep_depth:
            raise SolverFailure(
                f"substepping depth {depth} exhausted at t = {t1:.6g} s")
        mid = 0.5 * (t0 + t1)
        s1, i1, c1 = _advance(state, t0, mid, rate_times_L, params, mesh,
                              settings, depth + 1)
        s2, i2, c2 = _advance(s1, mid, t1, rate_times_L, params, mesh,
                              settings, depth + 1)
        return s2, i1 + i2, c1 + c2


def run_compression(params: SgpParams, mesh: Mesh1D, program: LoadProgram,
                    settings: SolverSettings = SolverSettings(),
                    label: str = "") -> tuple[StressStrainCurve, SolveTrace]:
    """Integrate the full loading program.

    The curve is reported in (|strain|, |stress|) magnitudes including the
    initial (0, 0) point; stress is the element-averaged Cauchy stress at
    the loaded boundary.
    """
    trace = SolveTrace()
    state = MixedField.zero(mesh)
    rate_times_L = program.strain_rate * mesh.length

    trace.applied_strain.append(0.0)
    trace.stress.append(0.0)
    trace.profiles.append(state.eps_p.copy())
    trace.newton_iters.append(0)
    trace.substeps.append(0)

    t = 0.0
    older = None
    for j in range(1, program.n_steps + 1):
        t_next = j * program.dt
        # linear time extrapolation as the Newton predictor (uniform steps)
        guess = None
        if older is not None:
            guess = MixedField(2.0 * state.u - older.u,
                               2.0 * state.eps_p - older.eps_p)
        older = state
        state, n_iter, n_sub = _advance(
            state, t, t_next, rate_times_L, params, mesh, settings, 0,
            guess=guess)
        t = t_next
        trace.applied_strain.append(program.strain_rate * t)
        trace.stress.append(boundary_stress(state, params, mesh))
        trace.profiles.append(state.eps_p.copy())
        trace.newton_iters.append(n_iter)
        trace.substeps.append(n_sub)

    curve = StressStrainCurve(
        strain=np.abs(np.asarray(trace.applied_strain)),
        stress=np.abs(np.asarray(trace.stress)),
        label=label)
    return curve, trace


def plastic_profile(trace: SolveTrace, at_strain: float) -> np.ndarray:
    """eps_p profile at the accepted step nearest to |at_strain|."""
    strains = np.abs(np.asarray(trace.applied_strain))
    target = abs(at_strain)
    if target > strains.max() + 1e-12:
        raise OutOfRange(
            f"strain {at_strain} outside computed range [0, {strains.max():.4g}]")
    idx = int(np.argmin(np.abs(strains - target)))
    return trace.profiles[idx].copy()

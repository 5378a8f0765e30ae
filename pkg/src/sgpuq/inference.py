"""Bayesian calibration by random-walk MCMC with delayed rejection and
adaptive proposals, plus posterior summaries and forward prediction."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import CURVE_NOISE_FRACTION, Dataset
from .fem import SolverFailure, StressStrainCurve
from .model import SgpModel
from .qoi import strain_energy
from .sampling import ParamBox

log = logging.getLogger(__name__)


class EmptyEnsemble(Exception):
    pass


def subsample_indices(grid, stride: int, anchor_strains=()) -> np.ndarray:
    """Strided indices into a strain grid plus nearest-point anchors.

    A coarse stride can skip an entire response regime (e.g. the short
    elastic ramp before yield); `anchor_strains` forces the points
    nearest the given strain magnitudes into the subsample.
    """
    grid = np.asarray(grid, dtype=float)
    idx = set(range(0, grid.size, stride))
    for strain in anchor_strains:
        idx.add(int(np.argmin(np.abs(np.abs(grid) - abs(strain)))))
    return np.array(sorted(idx), dtype=int)


@dataclass(frozen=True)
class LikelihoodSpec:
    """Gaussian noise levels and residual subsampling stride.

    `sigmas` maps size -> noise std in GPa, either a scalar applied to
    every strain point or an array aligned with the subsampled strain
    grid (see `subsample_indices`).
    """

    sigmas: dict
    stride: int = 1
    anchor_strains: tuple = ()

    def __post_init__(self):
        for size, s in self.sigmas.items():
            arr = np.asarray(s, dtype=float)
            if arr.size == 0 or np.any(arr <= 0.0):
                raise ValueError(
                    f"noise levels at size {size} must all be > 0")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @classmethod
    def from_dataset(cls, training: Dataset, stride: int = 1,
                     override: float | None = None, per_point: bool = True,
                     floor_fraction: float = 0.05,
                     within_curve_correlation: float = 0.0,
                     anchor_strains: tuple = ()
                     ) -> "LikelihoodSpec":
        """Estimate noise levels from the replicate spread.

        Default is a per-strain-point std (heteroscedastic: replicate
        scatter grows with stress level), floored at `floor_fraction` of
        its per-size maximum so near-zero-stress points cannot acquire
        unbounded weight.  `per_point=False` pools to one std per size,
        except at `anchor_strains` points, which always carry their
        local replicate std (a pooled, curve-level σ would swamp the
        low-stress elastic ramp the anchors exist to resolve).
        `override` forces a single scalar everywhere.

        `within_curve_correlation` (rho in [0, 1]) applies a design-effect
        inflation sqrt(1 + (n_points - 1) * rho) to every noise level.
        The diagonal Gaussian likelihood treats all points of a curve as
        independent, but curve-level noise and systematic model error are
        shared across a curve; rho = 1 makes each curve carry one
        effective observation, preventing the point count from inflating
        confidence in the presence of such correlated errors.
        """
        if not 0.0 <= within_curve_correlation <= 1.0:
            raise ValueError("within_curve_correlation must be in [0, 1]")
        if override is not None:
            sigmas = {size: override for size in training.sizes}
        elif per_point:
            sigmas = {}
            for size in training.sizes:
                grid, _ = training.stress_matrix(size)
                idx = subsample_indices(grid, stride, anchor_strains)
                prof = training.noise_profile(size)[idx]
                sigmas[size] = np.maximum(prof,
                                          floor_fraction * prof.max())
        elif anchor_strains:
            sigmas = {}
            for size in training.sizes:
                grid, _ = training.stress_matrix(size)
                idx = subsample_indices(grid, stride, anchor_strains)
                pooled = training.noise_std(size)
                sig = np.full(idx.size, pooled)
                prof = training.noise_profile(size)
                anchor_idx = [int(np.argmin(np.abs(np.abs(grid) - abs(s))))
                              for s in anchor_strains]
                local = np.isin(idx, anchor_idx)
                sig[local] = np.maximum(prof[idx[local]],
                                        floor_fraction * pooled)
                sigmas[size] = sig
        else:
            sigmas = {size: training.noise_std(size) for size in training.sizes}
        if within_curve_correlation > 0.0:
            rho = within_curve_correlation
            inflated = {}
            for size in training.sizes:
                grid, _ = training.stress_matrix(size)
                n = subsample_indices(grid, stride, anchor_strains).size
                inflated[size] = sigmas[size] * np.sqrt(1.0 + (n - 1) * rho)
            sigmas = inflated
        return cls(sigmas=sigmas, stride=stride,
                   anchor_strains=tuple(anchor_strains))


@dataclass(frozen=True)
class ChainConfig:
    n_chains: int = 10
    chain_length: int = 10000
    burn_in_fraction: float = 0.10
    proposal_scale: float = 0.05      # initial std as fraction of prior range
    adapt_start: int = 500
    adapt_interval: int = 100
    dr_scale: float = 0.2
    adapt_sd: float | None = None     # default 2.38^2 / K
    adapt_eps: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must be in [0, 1)")
        if self.chain_length < 100:
            raise ValueError("chain_length must be >= 100")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")


@dataclass
class PosteriorEnsemble:
    """Post burn-in samples pooled over chains."""

    samples: np.ndarray          # n x K
    log_posts: np.ndarray        # n
    acceptance_rates: np.ndarray  # per chain
    config: ChainConfig
    names: tuple = ()

    @property
    def size(self) -> int:
        return self.samples.shape[0]


class SgpLogPosterior:
    """Picklable log-posterior of theta against training curves.

    Uniform box prior; the likelihood treats every replicate at every
    training size as an i.i.d. Gaussian realization around the model
    stress interpolated onto the data strain grid.  Forward solves are
    memoized on theta rounded to 12 significant digits.
    """

    def __init__(self, box: ParamBox, training: Dataset,
                 spec: LikelihoodSpec, model: SgpModel | None = None):
        self.box = box
        self.spec = spec
        self.model = model or SgpModel(names=box.names)
        self._data = {}
        for size in training.sizes:
            grid, stresses = training.stress_matrix(size)
            idx = subsample_indices(grid, spec.stride, spec.anchor_strains)
            grid = grid[idx]
            sigma = np.asarray(spec.sigmas[size], dtype=float)
            if sigma.ndim > 0 and sigma.shape != grid.shape:
                raise ValueError(
                    f"per-point noise at size {size} has {sigma.size} values "
                    f"but the subsampled grid has {grid.size} points")
            self._data[size] = (grid, stresses[:, idx])
        self._cache = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state

    def _model_stress(self, theta, size):
        key = (tuple(np.format_float_scientific(v, precision=11)
                     for v in theta), size)
        if key not in self._cache:
            curve = self.model.curve(theta, size)
            grid, _ = self._data[size]
            self._cache[key] = np.interp(grid, curve.strain, curve.stress)
        return self._cache[key]

    def log_likelihood(self, theta) -> float:
        total = 0.0
        for size, (grid, stresses) in self._data.items():
            sigma = np.broadcast_to(
                np.asarray(self.spec.sigmas[size], dtype=float), grid.shape)
            try:
                pred = self._model_stress(theta, size)
            except SolverFailure as exc:
                log.warning("solver failure at theta=%s size=%g: %s",
                            np.asarray(theta), size, exc)
                return -np.inf
            resid = (stresses - pred[None, :]) / sigma[None, :]
            total += -0.5 * np.log(2.0 * np.pi) * resid.size
            total += -stresses.shape[0] * float(np.sum(np.log(sigma)))
            total += -0.5 * float(np.sum(resid ** 2))
        return total

    def __call__(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if not self.box.contains(theta):
            return -np.inf
        return self.log_likelihood(theta)


def gaussian_log_likelihood(model_values, data_matrix, sigma) -> float:
    """Reference evaluation of the i.i.d. Gaussian log-likelihood.

    `sigma` is a scalar or a per-point array broadcast over replicates.
    """
    model_values = np.asarray(model_values, dtype=float)
    data = np.atleast_2d(np.asarray(data_matrix, dtype=float))
    sig = np.broadcast_to(np.asarray(sigma, dtype=float),
                          model_values.shape)
    resid = (model_values[None, :] - data) / sig[None, :]
    n = resid.size
    return float(-0.5 * np.log(2.0 * np.pi) * n
                 - data.shape[0] * np.sum(np.log(sig))
                 - 0.5 * np.sum(resid ** 2))


def _log1m_exp(log_a: float) -> float:
    """log(1 - exp(log_a)) for log_a <= 0; -inf when log_a == 0."""
    if log_a >= 0.0:
        return -np.inf
    if log_a > -0.693:
        return float(np.log(-np.expm1(log_a)))
    return float(np.log1p(-np.exp(log_a)))


def _run_chain(log_post, init, cov0, length: int, rng,
               adapt: bool, dr: bool, cfg: ChainConfig):
    """Single chain; returns (samples, log posts, acceptance rate)."""
    k = init.size
    sd = cfg.adapt_sd if cfg.adapt_sd is not None else 2.38 ** 2 / k
    chol = np.linalg.cholesky(cov0)

    x = init.astype(float).copy()
    lp_x = float(log_post(x))
    if not np.isfinite(lp_x):
        raise ValueError("initial point has zero posterior density")

    samples = np.empty((length, k))
    lps = np.empty(length)
    n_acc = 0

    # running history moments for adaptation
    hist_mean = x.copy()
    hist_m2 = np.zeros((k, k))
    n_hist = 1

    for step in range(length):
        y1 = x + chol @ rng.standard_normal(k)
        lp_y1 = float(log_post(y1))
        log_a1 = min(0.0, lp_y1 - lp_x)
        accepted = False
        if np.log(rng.uniform()) < log_a1:
            x, lp_x = y1, lp_y1
            accepted = True
        elif dr:
            y2 = x + (cfg.dr_scale * chol) @ rng.standard_normal(k)
            lp_y2 = float(log_post(y2))
            log_u2 = np.log(rng.uniform())
            if np.isfinite(lp_y2):
                # stage-2 acceptance preserving detailed balance; the
                # stage-1 proposal is symmetric with covariance chol chol^T
                ci = np.linalg.inv(chol)
                d_y2 = ci @ (y1 - y2)
                d_x = ci @ (y1 - x)
                log_q_ratio = -0.5 * float(d_y2 @ d_y2) + 0.5 * float(d_x @ d_x)
                log_a1_rev = min(0.0, lp_y1 - lp_y2)
                num = lp_y2 + log_q_ratio + _log1m_exp(log_a1_rev)
                den = lp_x + _log1m_exp(log_a1)
                if log_u2 < num - den:
                    x, lp_x = y2, lp_y2
                    accepted = True
        if accepted:
            n_acc += 1
        samples[step] = x
        lps[step] = lp_x

        if adapt:
            n_hist += 1
            delta = x - hist_mean
            hist_mean += delta / n_hist
            hist_m2 += np.outer(delta, x - hist_mean)
            if step + 1 >= cfg.adapt_start and \
                    (step + 1) % cfg.adapt_interval == 0:
                cov = sd * hist_m2 / (n_hist - 1) + cfg.adapt_eps * np.eye(k)
                try:
                    chol = np.linalg.cholesky(cov)
                except np.linalg.LinAlgError:
                    pass
    return samples, lps, n_acc / length


def _initial_points(cfg: ChainConfig, box: ParamBox | None, init_points,
                    dim: int):
    if init_points is not None:
        pts = np.atleast_2d(np.asarray(init_points, dtype=float))
        if pts.shape[0] < cfg.n_chains:
            raise ValueError("need one init point per chain")
        return pts[:cfg.n_chains]
    if box is None:
        raise ValueError("provide init_points or a prior box")
    from .sampling import lhs_sample
    return lhs_sample(box, cfg.n_chains,
                      np.random.SeedSequence([cfg.seed, 0xC0FFEE])).values


def _initial_cov(cfg: ChainConfig, box: ParamBox | None, dim: int,
                 proposal_cov):
    if proposal_cov is not None:
        return np.asarray(proposal_cov, dtype=float)
    if box is not None:
        return np.diag((cfg.proposal_scale * box.ranges) ** 2)
    return np.eye(dim) * cfg.proposal_scale ** 2


def _sample(log_post, config: ChainConfig, box, init_points, proposal_cov,
            adapt: bool, dr: bool, names, jobs: int = 1) -> PosteriorEnsemble:
    inits = _initial_points(config, box, init_points, 0)
    dim = inits.shape[1]
    cov0 = _initial_cov(config, box, dim, proposal_cov)
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_chains)

    args = [(log_post, inits[c], cov0, config.chain_length,
             np.random.default_rng(seeds[c]), adapt, dr, config)
            for c in range(config.n_chains)]
    if jobs > 1 and config.n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, config.n_chains)) as pool:
            results = list(pool.map(_chain_worker, args))
    else:
        results = [_run_chain(*a) for a in args]

    burn = int(config.burn_in_fraction * config.chain_length)
    samples = np.vstack([r[0][burn:] for r in results])
    lps = np.concatenate([r[1][burn:] for r in results])
    rates = np.array([r[2] for r in results])
    return PosteriorEnsemble(samples=samples, log_posts=lps,
                             acceptance_rates=rates, config=config,
                             names=tuple(names) if names else ())


def _chain_worker(args):
    return _run_chain(*args)


def mh_sample(log_post, config: ChainConfig, box: ParamBox | None = None,
              init_points=None, proposal_cov=None, names=(),
              jobs: int = 1) -> PosteriorEnsemble:
    """Random-walk Metropolis with a fixed Gaussian proposal."""
    return _sample(log_post, config, box, init_points, proposal_cov,
                   adapt=False, dr=False, names=names, jobs=jobs)


def dram_sample(log_post, config: ChainConfig, box: ParamBox | None = None,
                init_points=None, proposal_cov=None, names=(),
                adapt: bool = True, dr: bool = True,
                jobs: int = 1) -> PosteriorEnsemble:
    """Delayed-rejection adaptive Metropolis; with adapt and dr disabled
    this reduces bitwise to mh_sample under the same seed."""
    return _sample(log_post, config, box, init_points, proposal_cov,
                   adapt=adapt, dr=dr, names=names, jobs=jobs)


def map_estimate(ens: PosteriorEnsemble) -> np.ndarray:
    """Retained sample with maximal log-posterior (first occurrence wins)."""
    if ens.size == 0:
        raise EmptyEnsemble("ensemble has no samples")
    return ens.samples[int(np.argmax(ens.log_posts))].copy()


def information_measure(ens: PosteriorEnsemble, box: ParamBox) -> np.ndarray:
    """Posterior-to-prior marginal variance ratio per parameter."""
    if ens.size == 0:
        raise EmptyEnsemble("ensemble has no samples")
    post_var = np.var(ens.samples, axis=0, ddof=1)
    info = post_var / box.prior_variance
    if np.any(info > 1.2):
        log.warning("information measure exceeds 1.2 for %s",
                    [n for n, v in zip(box.names, info) if v > 1.2])
    return info


def _predict_task(args):
    model, theta, size = args
    try:
        return model.curve(theta, size)
    except SolverFailure:
        return None


@dataclass
class PredictiveBand:
    strain: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    qoi_samples: np.ndarray
    n_failed: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("strain,stress_mean,stress_std,stress_q025,stress_q975\n")
            for row in zip(self.strain, self.mean, self.std,
                           self.q025, self.q975):
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def posterior_predict(ens: PosteriorEnsemble, size: float, n_draws: int,
                      seed, model: SgpModel | None = None,
                      jobs: int = 1,
                      noise_level: float = 0.0) -> PredictiveBand:
    """Propagate posterior draws through the forward model at one size.

    The stress band (mean/std/quantiles) always reflects parameter
    uncertainty alone.  When `noise_level` > 0, each QoI sample is taken
    from a synthetic observation of its drawn curve — the same replicate
    noise model used for data generation — so the QoI sample set is a
    posterior predictive for new observations and directly comparable to
    QoIs computed from noisy measurements.
    """
    if ens.size == 0:
        raise EmptyEnsemble("ensemble has no samples")
    if model is None:
        model = SgpModel(names=ens.names) if ens.names else SgpModel()
    rng = np.random.default_rng(seed)
    replace_draws = n_draws > ens.size
    idx = rng.choice(ens.size, size=n_draws, replace=replace_draws)
    thetas = ens.samples[idx]

    tasks = [(model, thetas[i], size) for i in range(n_draws)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            curves = list(pool.map(_predict_task, tasks))
    else:
        curves = [_predict_task(t) for t in tasks]
    n_failed = sum(c is None for c in curves)
    curves = [c for c in curves if c is not None]
    if not curves:
        raise SolverFailure("every predictive draw failed to solve")
    if n_failed:
        log.warning("%d/%d predictive draws failed", n_failed, n_draws)

    strain = curves[0].strain
    stresses = np.vstack([c.stress for c in curves])
    if noise_level > 0.0:
        sigma_curve = noise_level * np.sqrt(CURVE_NOISE_FRACTION)
        sigma_point_rel = noise_level * np.sqrt(1.0 - CURVE_NOISE_FRACTION)
        sigma_log = np.sqrt(np.log1p(sigma_curve ** 2))
        qois = []
        for c in curves:
            factor = rng.lognormal(mean=-0.5 * sigma_log ** 2,
                                   sigma=sigma_log)
            jitter = rng.normal(0.0, sigma_point_rel,
                                size=c.stress.size) * np.abs(c.stress)
            noisy = StressStrainCurve(c.strain,
                                      np.abs(c.stress * factor + jitter))
            qois.append(strain_energy(noisy, model.qoi_strain))
        qois = np.array(qois)
    else:
        qois = np.array([strain_energy(c, model.qoi_strain) for c in curves])
    return PredictiveBand(
        strain=strain,
        mean=stresses.mean(axis=0),
        std=stresses.std(axis=0, ddof=1) if len(curves) > 1
        else np.zeros_like(strain),
        q025=np.quantile(stresses, 0.025, axis=0),
        q975=np.quantile(stresses, 0.975, axis=0),
        qoi_samples=qois,
        n_failed=n_failed)


def export_posterior(ens: PosteriorEnsemble, path) -> None:
    """One line per sample: K parameter values + log-posterior."""
    with open(path, "w") as fh:
        for theta, lp in zip(ens.samples, ens.log_posts):
            fh.write(" ".join(f"{v:.12g}" for v in theta)
                     + f" {lp:.12g}\n")


def load_posterior(path, names=(), config=None) -> PosteriorEnsemble:
    raw = np.loadtxt(path, ndmin=2)
    return PosteriorEnsemble(samples=raw[:, :-1], log_posts=raw[:, -1],
                             acceptance_rates=np.array([]),
                             config=config or ChainConfig(),
                             names=tuple(names))

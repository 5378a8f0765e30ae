"""Experiment configuration: one YAML file drives every CLI subcommand."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from .dataio import CaseSplit
from .fem import LoadProgram, SolverSettings
from .inference import ChainConfig
from .material import SgpParams
from .sampling import DEFAULT_BOUNDS, ParamBox


class ConfigError(Exception):
    pass


FIG3_PARAMS = dict(l_dis=20.0, l_en=75.0, yield_strength=0.047,
                   h_iso=0.062, r_iso=298.42, elastic_modulus=128.44)

DEFAULT_SIZES = (200.0, 300.0, 500.0, 700.0, 1000.0)


@dataclass(frozen=True)
class SolverConfig:
    n_elements: int = 30
    tol_rel: float = 1e-10
    tol_abs: float = 1e-12
    max_iter: int = 50
    max_substep_depth: int = 10

    def settings(self) -> SolverSettings:
        return SolverSettings(tol_rel=self.tol_rel, tol_abs=self.tol_abs,
                              max_iter=self.max_iter,
                              max_substep_depth=self.max_substep_depth)


@dataclass(frozen=True)
class DataConfig:
    path: str = "data"
    sizes: tuple = DEFAULT_SIZES
    replicates: int = 5
    noise_level: float = 0.20
    truth: dict = field(default_factory=lambda: dict(FIG3_PARAMS))


@dataclass(frozen=True)
class SensitivityConfig:
    n_samples: int = 1000
    n_replicates: int = 4
    sizes: tuple = DEFAULT_SIZES
    scatter_size: float = 500.0


@dataclass(frozen=True)
class InferenceConfig:
    n_chains: int = 10
    chain_length: int = 10000
    burn_in_fraction: float = 0.10
    proposal_scale: float = 0.05
    adapt_start: int = 500
    adapt_interval: int = 100
    dr_scale: float = 0.2
    stride: int = 1
    sigma_override: float | None = None
    sigma_per_point: bool = True
    curve_correlation: float = 0.0
    anchor_strains: tuple = ()
    training: tuple = (300.0, 500.0, 700.0, 1000.0)
    testing: tuple = (200.0,)
    case_label: str = "case-1"
    n_predict_draws: int = 200

    def chain_config(self, seed: int) -> ChainConfig:
        return ChainConfig(n_chains=self.n_chains,
                           chain_length=self.chain_length,
                           burn_in_fraction=self.burn_in_fraction,
                           proposal_scale=self.proposal_scale,
                           adapt_start=self.adapt_start,
                           adapt_interval=self.adapt_interval,
                           dr_scale=self.dr_scale, seed=seed)

    def case(self) -> CaseSplit:
        return CaseSplit(training=self.training, testing=self.testing,
                         label=self.case_label)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 20260823
    jobs: int = 1
    out_dir: str = "out"
    size: float = 500.0
    solver: SolverConfig = SolverConfig()
    program: LoadProgram = LoadProgram()
    params: dict = field(default_factory=lambda: dict(FIG3_PARAMS, poisson=0.3))
    param_box: dict = field(default_factory=lambda: {
        k: list(v) for k, v in DEFAULT_BOUNDS.items()})
    data: DataConfig = DataConfig()
    sensitivity: SensitivityConfig = SensitivityConfig()
    inference: InferenceConfig = InferenceConfig()

    def sgp_params(self) -> SgpParams:
        return SgpParams(**self.params)

    def box(self) -> ParamBox:
        return ParamBox.from_dict(self.param_box)


def _build(cls, raw: dict, path: str):
    fields = {f.name for f in cls.__dataclass_fields__.values()} \
        if hasattr(cls, "__dataclass_fields__") else set()
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    coerced = {}
    for key, val in raw.items():
        if isinstance(val, list) and key in ("sizes", "training", "testing",
                                             "anchor_strains"):
            val = tuple(float(v) for v in val)
        coerced[key] = val
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    sub = {"solver": SolverConfig, "program": LoadProgram,
           "data": DataConfig, "sensitivity": SensitivityConfig,
           "inference": InferenceConfig}
    kwargs = {}
    for key, val in raw.items():
        if key in sub:
            if not isinstance(val, dict):
                raise ConfigError(f"{key}: must be a mapping")
            kwargs[key] = _build(sub[key], val, key)
        elif key in ("params", "param_box"):
            if not isinstance(val, dict):
                raise ConfigError(f"{key}: must be a mapping")
            kwargs[key] = val
        elif key in ("seed", "jobs", "out_dir", "size"):
            kwargs[key] = val
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    cfg = _build(ExperimentConfig, kwargs, "config")
    try:
        cfg.sgp_params()
        cfg.box()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def apply_overrides(cfg: ExperimentConfig, seed=None, jobs=None,
                    out_dir=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = int(seed)
    if jobs is not None:
        updates["jobs"] = int(jobs)
    if out_dir is not None:
        updates["out_dir"] = str(out_dir)
    return replace(cfg, **updates) if updates else cfg


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def snapshot(cfg: ExperimentConfig, path) -> None:
    """Write the effective configuration next to command outputs."""
    with open(path, "w") as fh:
        yaml.safe_dump(_plain(asdict(cfg)), fh, sort_keys=False)

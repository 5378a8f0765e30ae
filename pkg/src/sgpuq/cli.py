"""Command line interface: simulate | gen-data | sensitivity | calibrate | predict.

Exit codes: 0 success, 2 configuration/validation error, 3 solver failure,
4 I/O error.  All randomness derives from the config seed, split per
subsystem, so every subcommand is reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio, qoi, sensitivity
from .config import ConfigError, apply_overrides, load_config, snapshot
from .fem import Mesh1D, SolverFailure, plastic_profile, run_compression
from .inference import (ChainConfig, LikelihoodSpec, SgpLogPosterior,
                        dram_sample, export_posterior, information_measure,
                        load_posterior, map_estimate, posterior_predict)
from .model import SgpModel
from .sampling import ParamBox, lhs_sample

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

# Seed stream tags per subsystem.
_TAG_DATA, _TAG_SENS, _TAG_CALIB, _TAG_PREDICT, _TAG_SCATTER = range(5)


def _subsystem_seed(root_seed: int, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root_seed), tag])


def _model_from(cfg) -> SgpModel:
    return SgpModel(names=cfg.box().names,
                    n_elements=cfg.solver.n_elements,
                    program=cfg.program,
                    settings=cfg.solver.settings(),
                    poisson=cfg.params.get("poisson", 0.3))


def _prepare_out(cfg, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot(cfg, out / f"{name}_config.yaml")
    return out


def cmd_simulate(cfg, args) -> int:
    out = _prepare_out(cfg, "simulate")
    params = cfg.sgp_params()
    mesh = Mesh1D(length=cfg.size, n_elements=cfg.solver.n_elements)
    curve, trace = run_compression(params, mesh, cfg.program,
                                   cfg.solver.settings())
    curve.to_csv(out / "curve.csv")
    profile = plastic_profile(trace, cfg.program.final_strain)
    with open(out / "profile.csv", "w") as fh:
        fh.write("y_over_l,eps_plastic\n")
        for y, ep in zip(mesh.nodes_p / mesh.length, profile):
            fh.write(f"{y:.12g},{ep:.12g}\n")
    print(f"wrote {out / 'curve.csv'} and {out / 'profile.csv'}")
    return EXIT_OK


def cmd_gen_data(cfg, args) -> int:
    out = _prepare_out(cfg, "gen_data")
    model = _model_from(cfg)
    truth = [cfg.data.truth[name] for name in model.names]
    dataset = dataio.generate_synthetic(
        truth, cfg.data.sizes, cfg.data.replicates, cfg.data.noise_level,
        _subsystem_seed(cfg.seed, _TAG_DATA), model)
    dataset.export(cfg.data.path)
    print(f"wrote {len(dataset.entries)} curves to {cfg.data.path}")
    return EXIT_OK


def _additive_test_model(theta, size):
    return float(np.dot([1.0, 2.0, 3.0], theta[:3]))


def _ishigami_test_model(theta, size):
    return float(np.sin(theta[0]) + 7.0 * np.sin(theta[1]) ** 2
                 + 0.1 * theta[2] ** 4 * np.sin(theta[0]))


def cmd_sensitivity(cfg, args) -> int:
    out = _prepare_out(cfg, "sensitivity")
    seed = _subsystem_seed(cfg.seed, _TAG_SENS)
    if args.test_model == "additive":
        box = ParamBox(("x1", "x2", "x3"), np.zeros(3), np.ones(3))
        model, sizes = _additive_test_model, (0.0,)
    elif args.test_model == "ishigami":
        box = ParamBox(("x1", "x2", "x3"),
                       np.full(3, -np.pi), np.full(3, np.pi))
        model, sizes = _ishigami_test_model, (0.0,)
    else:
        box = cfg.box()
        model = _model_from(cfg)
        sizes = cfg.sensitivity.sizes
    report = sensitivity.size_sweep_sensitivity(
        box, sizes, cfg.sensitivity.n_samples, model,
        n_replicates=cfg.sensitivity.n_replicates, seed=seed,
        jobs=cfg.jobs)
    report.to_csv(out / "indices.csv")

    scatter_size = cfg.sensitivity.scatter_size
    if args.test_model is None and scatter_size in sizes:
        matrix = lhs_sample(box, cfg.sensitivity.n_samples,
                            _subsystem_seed(cfg.seed, _TAG_SCATTER))
        y = sensitivity.evaluate_qoi_batch(matrix, scatter_size, model,
                                           jobs=cfg.jobs)
        sensitivity.scatter_export(matrix, y,
                                   out / f"scatter_L{scatter_size:g}.csv")
    print(f"wrote {out / 'indices.csv'}")
    return EXIT_OK


def _gaussian_test_target(theta):
    return -0.5 * float(np.sum(np.asarray(theta) ** 2))


def cmd_calibrate(cfg, args) -> int:
    out = _prepare_out(cfg, "calibrate")
    seed_int = int(_subsystem_seed(cfg.seed, _TAG_CALIB).generate_state(1)[0])
    inf = cfg.inference
    if args.test_target == "gaussian":
        box = ParamBox(("x1", "x2"), np.full(2, -10.0), np.full(2, 10.0))
        log_post = _gaussian_test_target
        ens = dram_sample(log_post, inf.chain_config(seed_int), box=box,
                          names=box.names)
        info = information_measure(ens, box)
    else:
        box = cfg.box()
        dataset = dataio.ingest(cfg.data.path)
        train, _ = dataio.case_split(dataset, inf.case())
        spec = LikelihoodSpec.from_dataset(
            train, stride=inf.stride, override=inf.sigma_override,
            per_point=inf.sigma_per_point,
            within_curve_correlation=inf.curve_correlation,
            anchor_strains=inf.anchor_strains)
        log_post = SgpLogPosterior(box, train, spec, _model_from(cfg))
        ens = dram_sample(log_post, inf.chain_config(seed_int), box=box,
                          names=box.names, jobs=cfg.jobs)
        info = information_measure(ens, box)

    export_posterior(ens, out / "posterior.txt")
    summary = {
        "case": inf.case_label,
        "map": dict(zip(box.names, map_estimate(ens).tolist())),
        "information": dict(zip(box.names, info.tolist())),
        "acceptance_rates": ens.acceptance_rates.tolist(),
        "n_samples": int(ens.size),
    }
    with open(out / "calibration_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"wrote {out / 'posterior.txt'} and "
          f"{out / 'calibration_summary.json'}")
    return EXIT_OK


def cmd_predict(cfg, args) -> int:
    out = _prepare_out(cfg, "predict")
    posterior_path = Path(args.posterior)
    if not posterior_path.is_file():
        print(f"error: posterior file {posterior_path} not found",
              file=sys.stderr)
        return EXIT_IO
    box = cfg.box()
    ens = load_posterior(posterior_path, names=box.names)
    dataset = dataio.ingest(cfg.data.path)
    model = _model_from(cfg)
    inf = cfg.inference
    seed = _subsystem_seed(cfg.seed, _TAG_PREDICT)

    rows = []
    for size in dataset.sizes:
        # replicate scatter at this size sets the observation noise folded
        # into the predictive QoI samples (single replicate: no estimate)
        noise = dataset.relative_noise(size) \
            if len(dataset.by_size(size)) > 1 else 0.0
        band = posterior_predict(ens, size, inf.n_predict_draws, seed,
                                 model, jobs=cfg.jobs, noise_level=noise)
        role = "testing" if size in inf.testing else "training"
        if size in inf.testing:
            band.to_csv(out / f"band_L{size:g}.csv")
        data_qois = [qoi.strain_energy(e.curve, model.qoi_strain)
                     for e in dataset.by_size(size)]
        rows.append((size, role,
                     qoi.cdf_error(data_qois, band.qoi_samples)))
    with open(out / "prediction_report.csv", "w") as fh:
        fh.write("size,set,cdf_error\n")
        for size, role, err in rows:
            fh.write(f"{size:g},{role},{err:.6g}\n")
    print(f"wrote {out / 'prediction_report.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgpuq",
        description="Gradient-plasticity micro-pillar UQ pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **extra):
        p = sub.add_parser(name)
        p.add_argument("config", help="YAML experiment configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.set_defaults(fn=fn)
        return p

    add("simulate", cmd_simulate)
    add("gen-data", cmd_gen_data)
    p = add("sensitivity", cmd_sensitivity)
    p.add_argument("--test-model", choices=("additive", "ishigami"),
                   default=None)
    p = add("calibrate", cmd_calibrate)
    p.add_argument("--test-target", choices=("gaussian",), default=None)
    p = add("predict", cmd_predict)
    p.add_argument("--posterior", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, jobs=args.jobs,
                              out_dir=args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dataio.ValidationError, dataio.ParseError,
            dataio.MissingSize) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

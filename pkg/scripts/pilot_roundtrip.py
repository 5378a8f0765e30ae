"""Reduced-scale round-trip calibration pilot.

Generates synthetic data at a known parameter vector, calibrates on the
four largest sizes, and reports truth-recovery diagnostics for the
held-out 200 nm size.  Used to sanity-check the full-scale round trip.
"""

import json
import sys
import time

import numpy as np

from sgpuq import ParamBox
from sgpuq.dataio import CASE_I, case_split, generate_synthetic
from sgpuq.inference import (ChainConfig, LikelihoodSpec, SgpLogPosterior,
                             dram_sample, information_measure, map_estimate,
                             posterior_predict)
from sgpuq.model import SgpModel
from sgpuq.qoi import cdf_error, strain_energy

TRUTH = np.array([75.0, 150.0, 0.047, 0.062, 298.42, 128.44])
SIZES = (200.0, 300.0, 500.0, 700.0, 1000.0)


def main(n_chains=2, length=1500, stride=20, seed=20260823):
    box = ParamBox()
    model = SgpModel()
    t0 = time.time()
    data = generate_synthetic(TRUTH, SIZES, 5, 0.20,
                              np.random.SeedSequence([seed, 0]), model)
    train, test = case_split(data, CASE_I)
    spec = LikelihoodSpec.from_dataset(train, stride=stride,
                                       per_point=False,
                                       within_curve_correlation=0.25,
                                       anchor_strains=(0.0002, 0.0004))
    print("mean sigmas:", {k: round(float(np.mean(v)), 5)
                           for k, v in spec.sigmas.items()}, flush=True)
    log_post = SgpLogPosterior(box, train, spec, model)

    cfg = ChainConfig(n_chains=n_chains, chain_length=length, seed=seed)
    ens = dram_sample(log_post, cfg, box=box, names=box.names)
    print(f"sampling done in {time.time() - t0:.0f}s, "
          f"acc rates {ens.acceptance_rates}", flush=True)

    lo = np.quantile(ens.samples, 0.025, axis=0)
    hi = np.quantile(ens.samples, 0.975, axis=0)
    cover = (TRUTH >= lo) & (TRUTH <= hi)
    info = information_measure(ens, box)
    mp = map_estimate(ens)
    for i, name in enumerate(box.names):
        print(f"{name:16s} truth {TRUTH[i]:10.4g} map {mp[i]:10.4g} "
              f"ci [{lo[i]:10.4g}, {hi[i]:10.4g}] cover {cover[i]} "
              f"I {info[i]:.4g}", flush=True)

    band = posterior_predict(ens, 200.0, 100,
                             np.random.SeedSequence([seed, 1]), model,
                             noise_level=test.relative_noise(200.0))
    data_qois = [strain_energy(e.curve, model.qoi_strain)
                 for e in test.by_size(200.0)]
    err = cdf_error(data_qois, band.qoi_samples)
    _, stresses = test.stress_matrix(200.0)
    data_var = float(np.mean(np.var(stresses, axis=0, ddof=1)))
    pred_var = float(np.mean(band.std[1:] ** 2))
    print(json.dumps({
        "coverage": int(cover.sum()),
        "information": dict(zip(box.names, np.round(info, 5).tolist())),
        "cdf_error_200": round(err, 5),
        "data_var": data_var, "pred_var": pred_var,
        "var_reduction": 1.0 - pred_var / data_var,
        "wall_s": round(time.time() - t0, 1),
    }, indent=2), flush=True)


if __name__ == "__main__":
    kw = {}
    for arg in sys.argv[1:]:
        k, v = arg.split("=")
        kw[k] = int(v)
    main(**kw)

"""Probe the P_out desk-scale SUPG ordering over 5 seeds (criterion-7 shape)."""

import json
import sys
import time

import numpy as np

from vpinn.loss import LossConfig
from vpinn.trainer import TrainingConfig, default_indicator, train

base = dict(
    problem="outflow_layer",
    epsilon=1e-8,
    nx=4,
    ny=4,
    n_quad_per_dim=8,
    n_test_per_dim=5,
    learning_rate=5e-3,
    epochs=10000,
    eval_every=500,
    indicator=default_indicator("outflow_layer", 1e-8, "modified"),
)

modes = {
    "none": ([2, 20, 20, 20, 1], LossConfig("variational")),
    "const": ([2, 20, 20, 20, 1], LossConfig("variational+supg_const", tau_const=1e-5)),
    "learnt": ([2, 20, 20, 20, 2], LossConfig("variational+supg_learnt", tau_growth=1.0)),
}

results = {}
for name, (ls, lc) in modes.items():
    bests = []
    for seed in range(5):
        t0 = time.perf_counter()
        rec = train(TrainingConfig(layer_sizes=ls, loss=lc, seed=seed, **base))
        bests.append(rec.best_l2_err)
        print(
            f"{name} seed={seed} best={rec.best_l2_err:.4e} "
            f"({time.perf_counter()-t0:.0f}s)",
            flush=True,
        )
    results[name] = bests
    print(f"{name}: median={np.median(bests):.4e}  all={['%.3e' % b for b in bests]}", flush=True)

med = {k: float(np.median(v)) for k, v in results.items()}
print(json.dumps(med))
print("hard assertion learnt<=none:", med["learnt"] <= med["none"])
print("band learnt<=1.1*const:", med["learnt"] <= 1.1 * med["const"])
print("band const<=1.1*none:", med["const"] <= 1.1 * med["none"])

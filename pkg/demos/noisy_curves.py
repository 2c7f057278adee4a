# Clustering curves seen only through noisy samples on the grid.
import warnings

import numpy as np

from funmodal.density import make_model
from funmodal.flow import modal_clustering
from funmodal.grid import Grid
from funmodal.reconstruction import SmootherSpec, default_bandwidth, phi_plugin, reconstruct_sample
from funmodal.significance import ThresholdInputs, classify, resolve_M
from funmodal.simgen import observe_noisy, rand_index, sample_mixture, two_component_spec

warnings.simplefilter("ignore")
m = 257
grid = Grid(m)
sim = sample_mixture(two_component_spec(grid, seed=2), 100)
obs = observe_noisy(sim.sample, sigma=0.2, seed=3)

b = default_bandwidth(m)  # m^(-1/5)
rec = reconstruct_sample(obs, SmootherSpec(b=b))
err = np.sqrt(((rec.values - sim.sample.values) ** 2) @ grid.weights)
print(f"smoothing bandwidth b={b:.3f}, mean L2 reconstruction error {err.mean():.4f}")

model = make_model(rec, "exponential", 0.2)
cl = modal_clustering(model)
print("modes:", len(cl.modeset), " Rand index:", rand_index(cl.labels, sim.labels))

# the reconstruction error enters the thresholds through phi(m)
M, _ = resolve_M(rec)
plain = classify(cl.modeset, ThresholdInputs(rec.n, M, 0.05, model.constants))
tilde = classify(cl.modeset, ThresholdInputs(rec.n, M, 0.05, model.constants, phi_m=phi_plugin(m)))
print(f"threshold with exact curves   {plain.threshold:.2f}")
print(f"threshold with reconstruction {tilde.threshold:.2f}  (phi={phi_plugin(m):.3f})")

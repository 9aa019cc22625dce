import logging

import numpy as np

from elmid.elm_model import OutputWeights, init_random_projection, normalize
from elmid.harness import ExperimentConfig, export_csv, run_experiment, summary_table
from elmid.lyapunov_estimator import LyapunovElm, stability_threshold
from elmid.plants import dc_motor_plant, simulate
from elmid.signals import PrmsConfig, prms_generate

logging.basicConfig(level=logging.INFO)

# Full benchmark run: both methods, clean and noisy
results = [run_experiment(ExperimentConfig(plant="dc_motor", seed=0, noise_sigma=sigma)) for sigma in (0.0, 0.01)]
print(summary_table(results, title="DC motor"))
export_csv(results[0], "dc_motor_clean_seed0.csv")

# The same pieces by hand
plant = dc_motor_plant()
dt = 1e-4
u_norm = prms_generate(PrmsConfig(duration=2.0, dt=dt, seed=1))
u_phys = 0.1 * u_norm
states = simulate(plant, plant.initial_state, u_phys, dt)
z = normalize(states, plant.state_bounds)

A = np.diag([-50.0, -50.0])
projection = init_random_projection(input_dim=3, hidden_dim=8, seed=1)
estimator = LyapunovElm(A, projection, OutputWeights.zeros(8, 2), z[0], gain=1e5)
for k in range(u_norm.shape[0]):
    estimator.step(z[k], np.concatenate(([u_norm[k]], z[k])), dt)

error = np.linalg.norm(z[-1] - estimator.state.z_hat)
print(f"Final normalized error: {error:.5f}")
print(f"Stability radius for xi=0.1: {stability_threshold(A, 0.1).gamma:.4f}")

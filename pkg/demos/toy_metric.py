"""Two-level toy: minimal scrambling angles and the algebra metric.

For H = sum_i (eps_i Z_i + J_i X_i) the minimizing algebra is the computational
algebra rotated by theta_i = arctan(J_i / eps_i). Moving (eps, J) rotates it,
and the squared distance between neighbouring minimizers gives the metric.
"""
import numpy as np

from mereo import models, scrambling, sweep

p = models.ToyParams([1.0, 0.6, -0.8], [1.0, 0.3, 0.5])
theta = models.theta_min_closed(p)
h = models.build_abelian_toy(p)
print("theta_min     ", np.round(theta, 6))
print("sigma_s there ", scrambling.sigma_s(models.abelian_toy_algebra(theta), h))

deps, dj = np.array([0.2, -0.1, 0.3]), np.array([0.1, 0.4, -0.2])
print("\n    dh        discrete g      closed g     rel. error")
for dh in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
    g, ref = sweep.abelian_toy_susceptibility(p, deps, dj, dh)
    print(f"{dh:9.2e}  {g:.10e}  {ref:.10e}  {abs(g - ref) / ref:.2e}")

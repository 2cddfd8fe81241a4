"""Algebra OTOC of a half-chain bipartition, against its two limits.

At short times G(t) ~ (2/d) sigma_s^2 t^2. Its long-time average is the
closed form sigma_l, valid when the spectral gaps are non-resonant, as they
are for this Golomb-ruler spectrum.
"""
import numpy as np

from mereo import algebra, models, scrambling

rng = np.random.default_rng(1)
h = models.golomb_hamiltonian(8, rng)
alg = algebra.factor_bipartition(3, [0])
ss = scrambling.sigma_s(alg, h)
for e in scrambling.otoc_curve(alg, h, [0.0, 0.05, 0.1, 0.2, 1.0, 5.0, 20.0], n_samples=512,
                               rng=rng, estimator="conditional"):
    print(f"t = {e.t:5.2f}  G = {e.mean:.5f} +- {e.std_error:.5f}   (2/d) s^2 t^2 = {2 / 8 * ss**2 * e.t**2:.5f}")
mean, se = scrambling.time_average_mc(alg, h, 1e3, n_samples=2048, rng=rng)
print(f"\nsigma_l closed form {scrambling.sigma_l_nrc(alg, h):.4f}, time average {mean:.4f} +- {se:.4f}")

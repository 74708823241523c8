"""
Measuring weak dependence of the simulated field
================================================

The coupling coefficient delta(s) compares the field with a copy whose
innovations are zeroed outside a window of radius s. Its decay rate should
reappear in the decay of covariances between sites at lattice distance r.
"""

import numpy as np

from narfield import (NarParams, SampleRegion, delta_to_eta, estimate_delta, generate_covariates,
                      generate_power_decay_network, row_normalized_weights, theoretical_moments)
from narfield.dependence import covariance_decay_from_array
from narfield.nar_model import simulate_batch
from narfield.seeding import derive_replication_seed

w = row_normalized_weights(generate_power_decay_network(50, 2.0, 3, 11))
Z = generate_covariates(50, 2, 5)
params = NarParams(0.3, 0.2, 0.3, (0.5, -0.4))

###############################################################################
# Coupling coefficients at sampled sites, maximised over the sample.
est = estimate_delta(params, w, Z, SampleRegion(50, 50), [1, 2, 3, 4], replications=200, seed=2024)
eta = delta_to_eta(est.profile)
print("delta(s):", np.round(est.profile.values, 5))
print("log-log slope:", round(est.profile.log_slope(), 3))
print("eta grid:", eta.grid, " nonincreasing:", eta.is_nonincreasing)

###############################################################################
# Ensemble covariances on a short panel with many replications. Centring by
# the exact mean removes the bias a sample mean would add.
R = 20000
y, _ = simulate_batch(params, w, Z, 8, [derive_replication_seed(99, 0, r) for r in range(R)])
mean = theoretical_moments(params, w, Z).mean
cd = covariance_decay_from_array(y - mean[None, :, None], [1, 2, 3, 4], True, 8, 3)
print("max |cov| at r:", np.round(cd.profile.values, 5))
print("empirical slope:", round(cd.slope, 3))

###############################################################################
# With moments of order p, the covariance inherits the eta rate scaled by
# (p - 2) / (p - 1). For a gaussian field any p works, and p = 8 is used here.
p = 8
print("implied slope:", round((p - 2) / (p - 1) * eta.log_slope(), 3))

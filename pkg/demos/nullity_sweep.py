"""Fit (kappa, mu) on the solvable family g_sigma for a range of sigma.

The metric dz^2 + exp(2 sigma z) dx^2 + exp(-2 sigma z) dy^2 carries an
almost co-Kähler structure whose Reeb field is d_z.
"""
# %%
import numpy as np

from geodesk.contact import eta_einstein_fit, nullity_fit
from geodesk.models import build_model, sample_points

print(f"{'sigma':>6} {'kappa':>12} {'mu':>12} {'-sigma^2':>10} {'b1':>10}")
for sigma in np.linspace(0.25, 2.0, 8):
    spec = build_model("g-sigma", {"sigma": sigma})
    pts = sample_points(spec, 6, seed=0)
    fit = nullity_fit(spec.structure, pts)
    ee = eta_einstein_fit(spec.structure, pts)
    print(f"{sigma:6.3f} {fit.kappa:12.8f} {fit.mu:12.2e} {-sigma**2:10.5f} {ee.b1:10.5f}")

# %% sigma = 0 is flat: h vanishes and mu cannot be identified
spec = build_model("g-sigma", {"sigma": 0})
fit = nullity_fit(spec.structure, sample_points(spec, 4, seed=0))
print("sigma = 0:", fit.kappa, fit.mu, fit.report().notes)

"""Walk through the strictly almost co-Kähler example on z > 0.

Run with ``python3 demos/almost_cokahler_example.py``.
"""
# %%
import numpy as np

from geodesk.contact import check_cokahler, identity_reports, nullity_fit
from geodesk.models import build_model, quantity, sample_points
from geodesk.soliton import soliton_curvature_identity, soliton_residual

spec = build_model("paper-example")
pts = sample_points(spec, 8, seed=42)
print(spec.description)
print("sample points:", np.round(pts[:3], 3), "...")

# %% frame brackets and Levi-Civita connection in the frame d1, d2, d3
p = pts[0]
for key in ("bracket.1.3", "bracket.2.3", "connection.1.2", "connection.2.3"):
    print(f"{key:16s}", np.round(quantity(spec, key, p), 6))
print("exp(z) at the point:", round(float(np.exp(p[2])), 6))

# %% the operator h = (1/2) Lie_xi phi is diagonal with eigenvalues -exp(z), exp(z), 0
for i in (1, 2, 3):
    print(f"h d{i} =", np.round(quantity(spec, f"h.{i}", p), 6))

# %% every almost co-Kähler identity holds, but the structure is not co-Kähler
for rep in identity_reports(spec.structure, pts):
    print(f"{rep.name:36s} {rep.max_residual:.2e}  {rep.verdict.value}")
print("nabla Phi residual:", f"{check_cokahler(spec.structure, pts).max_residual:.3g}")

# %% no constant (kappa, mu) describes the curvature along xi
fit = nullity_fit(spec.structure, pts)
kappas = [round(k, 3) for k, _ in fit.per_point]
print("per-point kappa:", kappas)
print("fit succeeded:", fit.succeeded)

# %% yet w = z is a quasi-Einstein potential with m = 1
rep = soliton_residual(spec.metric, spec.soliton, pts)
print("soliton residual:", f"{rep.max_residual:.2e}")
ident = soliton_curvature_identity(spec.metric, spec.soliton, pts)
print("curvature identity:", f"{ident.max_residual:.2e}")
bent = soliton_curvature_identity(spec.metric, spec.soliton.with_omega("z + 0.1*x"), pts)
print("with w = z + 0.1 x:", f"{bent.max_residual:.3g}")

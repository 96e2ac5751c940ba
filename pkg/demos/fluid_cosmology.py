"""Perfect-fluid reading of spatially flat FLRW spacetimes.

For a(t) = t^q in four dimensions the fluid is p = w sigma with w = 2/(3q) - 1:
q = 2/3 gives dust, q = 1/2 radiation, q = 1/3 stiff matter, and exponential
growth dark energy.
"""
# %%
from geodesk.fluid import efe_check, flow_kinematics, fluid_fit
from geodesk.models import build_model, sample_points

cases = [
    ("flrw", {"a": "t^0.6666666666666666"}),
    ("flrw", {"a": "t^0.5"}),
    ("flrw", {"a": "t^0.3333333333333333"}),
    ("flrw", {"a": "t^2"}),
    ("de-sitter", {"H": 1.0}),
]
for name, params in cases:
    spec = build_model(name, params)
    pts = sample_points(spec, 4, seed=1)
    fd = fluid_fit(spec.metric, spec.velocity, pts)
    rep = efe_check(fd)
    p, s = rep.details["p"][0], rep.details["sigma"][0]
    kin = flow_kinematics(spec.metric, spec.velocity, pts)
    label = params.get("a", f"exp({params.get('H')}*t)")
    print(f"a = {label:22s} t = {pts[0][0]:.3f}  p = {p:+.5f}  sigma = {s:.5f}  "
          f"eos = {rep.details['eos'][0]:12s} div u = {kin.divergence[0]:.4f}")

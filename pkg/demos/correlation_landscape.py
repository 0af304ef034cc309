"""Where the jammer's best attack sits on the (V, W) plane.

V is the jammer's alignment with the state and W its power. The printed grid
of f(V, W) shows the minimum at V = 0, W = Lambda: spending the full budget on
noise that ignores the state is the strongest attack.

    python demos/correlation_landscape.py
"""
import numpy as np

from dirtyavc import SystemParams, analysis, derive_constants

params = SystemParams(P=1.0, Lam=1.0, noise_var=1.0, state_var=1.0, n=1)
c = derive_constants(params)
V = np.linspace(-1, 1, 9)
W = np.linspace(0, params.Lam, 5)
vals = analysis.f_vw(params, V[:, None], W[None, :])

print("rows V, columns W = " + "  ".join(f"{w:.2f}" for w in W))
for v, row in zip(V, vals):
    print(f"V={v:+.2f}  " + "  ".join(f"{x:.4f}" for x in row))

cert = analysis.verify_f_claim(params, 1000)
print(f"\ntheta = {c.theta:.6f}; grid minimum {cert.min_value:.6f} at "
      f"V={cert.argmin_V:+.4f}, W={cert.argmin_W:.4f}")
print(f"C = {c.C:.6f}, C_tilde = {c.C_tilde:.6f}, C + C_tilde = {c.C_U:.6f} "
      f"= -0.5 log2(1 - theta^2) = {-0.5 * np.log2(1 - c.theta ** 2):.6f}")

"""Where should an attacker mount the RIS? Reflected-path gain over (d_ar, H).

Run: python3 demos/deployment.py
"""
import numpy as np

from risjam.scene import deployment_grid, reference_scenario

s = reference_scenario()
d_ar, H, g = deployment_grid(s, (0.0, s.D), (0.0, 5.0), (11, 6))
print("beta_r x 1e3; rows: height H, columns: distance from Alice d_ar")
print("   H \\ d " + "".join(f"{x:7.1f}" for x in d_ar))
for j, h in enumerate(H):
    cells = "".join("     --" if np.isnan(v) else f"{1e3 * v:7.3f}" for v in g[:, j])
    print(f"{h:8.1f} {cells}")
i, j = np.unravel_index(np.nanargmax(g), g.shape)
print(f"\nstrongest reflection at d_ar={d_ar[i]:g} m, H={H[j]:g} m: {g[i, j]:.2e}")
print("Midway between the terminals the gain dips towards the Brewster angle.")

# %% [markdown]
# # Removing the walls
#
# Releasing phi_10 from the box turns its standing wave into two running
# packets with momenta near +-hbar n pi / L.  The paths that were at rest
# inside the box pick up the same speeds, half to each side, and the cloud
# of paths keeps tracking |psi_t|^2 the whole way.  (About 20 s.)

# %%
from bohmlab.scenarios import ScenarioConfig, run_scenario

rep = run_scenario(ScenarioConfig("wall_release"))
s = rep.scalars
print(f"open domain {s['domain']:g} L, t_final {s['t_final']:.3g}, {s['steps']} steps")
for a in rep.assertions:
    print(" ", a.describe())

# %% [markdown]
# The momentum density and the trajectory bundle are kept as plot-ready
# series; the asymptotic velocity series pairs every bulk path's start
# point with its final speed.

# %%
s = rep.scalars
print(f"peaks at p = {s['peak_left']:+.3f} and {s['peak_right']:+.3f} "
      f"(hbar n pi / L = {s['peak_target']:.3f}, bin {s['fourier_bin']:.3f})")
print("series:", sorted(rep.series))

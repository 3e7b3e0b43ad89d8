# %% [markdown]
# # A particle at rest in its own eigenstate
#
# A real eigenstate of the box carries no current, so every Bohmian path
# stands still.  Its kinetic energy lives entirely in the quantum potential:
# V + Q equals the level E_n away from the nodes.

# %%
import numpy as np

from bohmlab.fields import total_potential_and_forces
from bohmlab.grid import make_grid
from bohmlab.scenarios import ScenarioConfig, run_scenario
from bohmlab.tdse import infinite_well, well_eigenstate

cfg = ScenarioConfig("stationary_well")
units = cfg.units
grid = make_grid(0.0, units.box_length_L, 400, 1e-3)

for n in (1, 2, 5):
    phi, E = well_eigenstate(n, grid, units)
    f = total_potential_and_forces(phi, infinite_well(units).evaluate(grid), units)
    ok = ~f.node_mask
    print(f"n={n}: E_n={E:9.4f}  max|v|={np.abs(f.v[ok]).max():.1e}  "
          f"spread of V+Q={np.ptp(f.U[ok]) / E:.1e} (relative)")

# %% [markdown]
# The nodes of phi_5 split the box into five cells.  Paths sampled from
# |phi_5|^2 stay where they start for ten periods hbar/E_5.

# %%
rep = run_scenario(ScenarioConfig("stationary_well", n=5, n_traj=1000))
print(f"cell crossings: {rep.scalars['cell_crossings']}, "
      f"largest drift: {rep.scalars['max_drift']:.1e} L")
for a in rep.assertions:
    print(" ", a.describe())

"""Derived fields against closed forms: plane-wave packets, eigenstates, chirps."""

import numpy as np
import pytest

from bohmlab.fields import (continuity_residual, current, hamilton_jacobi_residual,
                            phase_laplacian, quantum_potential, total_potential_and_forces,
                            unwrapped_phase, velocity_field)
from bohmlab.grid import WaveFunction, make_grid, make_grid_2d, normalize
from bohmlab.tdse import gaussian_packet, infinite_well, propagate_1d, well_eigenstate


def test_gaussian_velocity_is_group_velocity(units):
    g = make_grid(-10.0, 10.0, 2001, 1e-3)
    k = 3.0
    psi = gaussian_packet(g, 0.0, 1.0, k, units.hbar)
    v, mask = velocity_field(psi, units)
    core = (np.abs(g.x) < 3) & ~mask
    # centred difference of A(x) exp(ikx) with A = exp(-x^2/4): the exact
    # discrete velocity is sin(k dx)/dx times the envelope average (A+ + A-)/2A
    dx = g.dx
    envelope = np.exp(-dx * dx / 4) * np.cosh(g.x * dx / 2)
    expect = units.hbar * np.sin(k * dx) / (units.mass_m * dx) * envelope
    assert np.allclose(v[core], expect[core], rtol=1e-10)


def test_real_state_carries_no_current(units):
    g = make_grid(0.0, 1.0, 201, 1e-3)
    phi, _ = well_eigenstate(2, g, units)
    assert np.max(np.abs(current(phi, units))) == 0.0
    v, _ = velocity_field(phi.replace(values=np.exp(0.7j) * phi.values), units)
    assert np.max(np.abs(v)) < 1e-12


@pytest.mark.parametrize("n", [1, 3])
def test_eigenstate_total_potential_is_flat(units, n):
    """For a stationary state V + Q equals the discrete eigenvalue off the nodes."""
    n_points = 401
    g = make_grid(0.0, 1.0, n_points, 1e-3)
    phi, E = well_eigenstate(n, g, units)
    fields = total_potential_and_forces(phi, infinite_well(units).evaluate(g, 0.0), units)
    ok = ~fields.node_mask
    dx = g.dx
    E_discrete = 2 * units.hbar ** 2 / (units.mass_m * dx * dx) * np.sin(n * np.pi * dx / 2) ** 2
    assert np.allclose(fields.U[ok], E_discrete, rtol=1e-9)
    assert np.isnan(fields.Q[fields.node_mask]).all()


def test_quantum_potential_masks_interior_nodes(units):
    g = make_grid(0.0, 1.0, 400, 1e-3)
    phi, _ = well_eigenstate(2, g, units)
    _, mask = quantum_potential(phi, units)
    near = np.abs(g.x - 0.5) < 2 * g.dx
    assert mask[near].any()
    assert not mask[np.abs(g.x - 0.25) < 0.1].any()


def test_phase_laplacian_of_chirp():
    g = make_grid(-3.0, 3.0, 3001, 1e-3)
    a = 0.8
    psi = WaveFunction(g, np.exp(-g.x ** 2 + 1j * a * g.x ** 2))
    lap, mask = phase_laplacian(psi)
    core = (np.abs(g.x) < 1.5) & ~mask
    assert np.allclose(lap[core], 2 * a, rtol=1e-4)


def test_phase_laplacian_2d_uses_both_masses(units):
    gx = make_grid(0.0, 1.0, 201, 1e-3)
    gX = make_grid(-2.0, 2.0, 401, 1e-3)
    g = make_grid_2d(gx, gX)
    x, X = g.mesh()
    a, b = 0.5, 2.0
    psi = WaveFunction(g, np.exp(-X ** 2) * np.sin(np.pi * x) * np.exp(1j * (a * x * x + b * X * X)))
    lap, mask = phase_laplacian(psi, units)
    core = (np.abs(X) < 1) & (np.abs(x - 0.5) < 0.3) & ~mask
    expect = 2 * a / units.mass_m + 2 * b / units.mass_M
    # second-order stencils on dx = 5e-3 with the sin(pi x) amplitude: O(1e-3)
    assert np.allclose(lap[core], expect, rtol=3e-3)


def test_continuity_residual_vanishes_for_evolving_superposition(units):
    g = make_grid(0.0, 1.0, 801, 1e-4)
    a, _ = well_eigenstate(1, g, units)
    b, _ = well_eigenstate(2, g, units)
    psi = normalize(a.replace(values=a.values + b.values + 0j))
    snaps = propagate_1d(psi, infinite_well(units), 200, units, every=100)
    r = continuity_residual(*snaps, units)
    scale = np.max(np.abs(current(snaps[1], units))) / g.dx
    interior = slice(2, -2)
    # both differences are second order; the residual is a small fraction of |dJ/dx|
    assert np.max(np.abs(r[interior])) < 1e-3 * scale


def test_hamilton_jacobi_for_free_packet(units):
    g = make_grid(-12.0, 12.0, 2401, 2e-3)
    psi = gaussian_packet(g, -2.0, 1.0, 2.0, units.hbar)
    free = np.zeros(g.n_points)
    from bohmlab.tdse import Potential
    snaps = propagate_1d(psi, Potential("static_profile", profile=free), 10, units, every=5)
    hj = hamilton_jacobi_residual(snaps, free, units)
    rho = np.abs(snaps[1].values) ** 2
    core = rho > 1e-3 * rho.max()
    r = hj.residuals[0]
    assert np.nanmax(np.abs(r[core])) < 5e-3
    assert hj.unwrap_failures == 0


def test_hj_needs_three_snapshots(units):
    g = make_grid(0.0, 1.0, 32, 1e-3)
    phi, _ = well_eigenstate(1, g, units)
    with pytest.raises(ValueError):
        hamilton_jacobi_residual([phi, phi], np.zeros(32), units)


def test_unwrapped_phase_recovers_linear_ramp():
    g = make_grid(0.0, 20.0, 2001, 1e-3)
    psi = WaveFunction(g, np.exp(1j * 3.0 * g.x))
    S, low, ambiguous = unwrapped_phase(psi)
    assert not low.any() and not ambiguous.any()
    assert np.allclose(np.diff(S), 3.0 * g.dx, atol=1e-12)

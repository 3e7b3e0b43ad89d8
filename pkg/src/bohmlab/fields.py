"""Bohmian fields derived from a wavefunction snapshot.

Every spatial derivative is a second-order centred difference; the ends of
the grid are Dirichlet walls, so the second difference sees zeros beyond the
last node (the same operator the propagators use) and first differences are
one-sided there.  In 2D the x-terms use the system mass m and the X-terms the
meter mass M.

Masked nodes (density below the floor) carry ``nan`` in Q, U and F and zero
in v; the boolean mask is always returned alongside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import UnitSystem, WaveFunction, integrate

DEFAULT_RELATIVE_FLOOR = 1e-10


@dataclass(frozen=True)
class DerivedFields:
    rho: np.ndarray
    J: np.ndarray
    v: np.ndarray
    Q: np.ndarray
    U: np.ndarray
    F: np.ndarray
    node_mask: np.ndarray


def _spacings(grid) -> list[float]:
    return [grid.dx] if grid.ndim == 1 else [grid.axis_x.dx, grid.axis_X.dx]


def _masses(grid, units: UnitSystem) -> list[float]:
    return [units.mass_m] if grid.ndim == 1 else [units.mass_m, units.mass_M]


def gradient(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    return np.gradient(values, h, axis=axis, edge_order=2)


def second_difference(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Three-point second difference, zero Dirichlet values beyond the ends."""
    pad = [(1, 1) if a == axis else (0, 0) for a in range(values.ndim)]
    padded = np.pad(values, pad)
    lo = tuple(slice(None, -2) if a == axis else slice(None) for a in range(values.ndim))
    hi = tuple(slice(2, None) if a == axis else slice(None) for a in range(values.ndim))
    return (padded[hi] - 2 * values + padded[lo]) / (h * h)


def rho_floor_for(rho: np.ndarray, rho_floor: float | None) -> float:
    return DEFAULT_RELATIVE_FLOOR * float(rho.max()) if rho_floor is None else float(rho_floor)


def density(psi: WaveFunction) -> np.ndarray:
    return np.abs(psi.values) ** 2


def current(psi: WaveFunction, units: UnitSystem) -> np.ndarray:
    """Probability current (hbar/m) Im(psi* grad psi).

    Returns an array of shape ``grid.shape`` in 1D and ``(2, *grid.shape)``
    (components along x and X) in 2D.
    """
    grid = psi.grid
    comps = []
    for axis, (h, mass) in enumerate(zip(_spacings(grid), _masses(grid, units))):
        d = gradient(psi.values, h, axis)
        comps.append(units.hbar / mass * np.imag(np.conj(psi.values) * d))
    return comps[0] if grid.ndim == 1 else np.stack(comps)


def velocity_field(psi: WaveFunction, units: UnitSystem,
                   rho_floor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Guidance velocity J/rho and the mask of nodes with rho below the floor."""
    rho = density(psi)
    mask = rho < rho_floor_for(rho, rho_floor)
    J = current(psi, units)
    safe = np.where(mask, 1.0, rho)
    v = np.where(mask, 0.0, J / safe)
    return v, mask


def _straddles_node(values: np.ndarray, axis: int) -> np.ndarray:
    """True where a stencil neighbour lies across a sign change of psi.

    The amplitude |psi| has a kink at a node, so the second difference of
    |psi| is meaningless on stencils that straddle one.
    """
    prod = np.real(np.conj(values) * np.roll(values, -1, axis=axis))
    idx = [slice(None)] * values.ndim
    idx[axis] = -1
    prod[tuple(idx)] = 0.0
    bad = prod < 0
    return bad | np.roll(bad, 1, axis=axis)


def quantum_potential(psi: WaveFunction, units: UnitSystem,
                      rho_floor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Q = -hbar^2 lap|psi| / (2 m |psi|), with one term per axis in 2D."""
    grid = psi.grid
    a = np.abs(psi.values)
    rho = a * a
    mask = rho < rho_floor_for(rho, rho_floor)
    Q = np.zeros(grid.shape)
    safe = np.where(mask, 1.0, a)
    for axis, (h, mass) in enumerate(zip(_spacings(grid), _masses(grid, units))):
        Q -= units.hbar ** 2 / (2 * mass) * second_difference(a, h, axis) / safe
        mask = mask | _straddles_node(psi.values, axis)
    return np.where(mask, np.nan, Q), mask


def total_potential_and_forces(psi: WaveFunction, V: np.ndarray, units: UnitSystem,
                               rho_floor: float | None = None) -> DerivedFields:
    """All derived fields; U = V + Q and F = -grad U (one component per axis)."""
    grid = psi.grid
    rho = density(psi)
    J = current(psi, units)
    v, vmask = velocity_field(psi, units, rho_floor)
    Q, qmask = quantum_potential(psi, units, rho_floor)
    U = np.asarray(V, dtype=float).reshape(grid.shape) + Q
    comps = [-gradient(U, h, axis) for axis, h in enumerate(_spacings(grid))]
    F = comps[0] if grid.ndim == 1 else np.stack(comps)
    return DerivedFields(rho, J, v, Q, U, F, vmask | qmask)


def phase_laplacian(psi: WaveFunction, units: UnitSystem | None = None,
                    rho_floor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Divergence of the guidance velocity, sum over axes of (hbar/mass) lap(arg psi).

    Computed without unwrapping from lap(theta) = Im(lap psi / psi)
    - 2 Re(grad psi / psi) . Im(grad psi / psi).  With ``units=None`` the
    plain phase Laplacian (hbar = mass = 1) is returned.
    """
    grid = psi.grid
    units = UnitSystem(1.0, 1.0, 1.0, 1.0) if units is None else units
    rho = density(psi)
    mask = rho < rho_floor_for(rho, rho_floor)
    safe = np.where(mask, 1.0, psi.values)
    out = np.zeros(grid.shape)
    for axis, (h, mass) in enumerate(zip(_spacings(grid), _masses(grid, units))):
        lap = second_difference(psi.values, h, axis) / safe
        grad = gradient(psi.values, h, axis) / safe
        out += units.hbar / mass * (lap.imag - 2 * grad.real * grad.imag)
    return np.where(mask, np.nan, out), mask


def continuity_residual(prev: WaveFunction, cur: WaveFunction, nxt: WaveFunction,
                        units: UnitSystem) -> np.ndarray:
    """d(rho)/dt + div J at ``cur`` with a centred time difference."""
    dt_total = nxt.time - prev.time
    drho = (density(nxt) - density(prev)) / dt_total
    J = current(cur, units)
    grid = cur.grid
    if grid.ndim == 1:
        div = gradient(J, grid.dx, 0)
    else:
        div = gradient(J[0], grid.axis_x.dx, 0) + gradient(J[1], grid.axis_X.dx, 1)
    return drho + div


def l2_norm(field: np.ndarray, grid) -> float:
    return float(np.sqrt(integrate(np.nan_to_num(field) ** 2, grid)))


# ------------------------------------------------------------ Hamilton-Jacobi check


@dataclass(frozen=True)
class HJResidual:
    times: np.ndarray
    residuals: list
    masks: list
    max_abs: float
    l2: float
    unwrap_failures: int


def unwrapped_phase(psi: WaveFunction, rho_floor: float | None = None):
    """arg(psi) unwrapped along grid lines outward from the node of largest rho.

    Returns the phase and a mask of nodes whose unwrapping is ambiguous
    (low density, or a neighbour jump larger than pi/2).
    """
    values = psi.values
    rho = np.abs(values) ** 2
    low = rho < rho_floor_for(rho, rho_floor)
    raw = np.angle(values)

    def unwrap_from(line: np.ndarray, ref: int) -> np.ndarray:
        out = np.empty_like(line)
        out[ref:] = np.unwrap(line[ref:])
        out[:ref + 1] = np.unwrap(line[:ref + 1][::-1])[::-1]
        return out

    ref = np.unravel_index(np.argmax(rho), rho.shape)
    if values.ndim == 1:
        S = unwrap_from(raw, ref[0])
    else:
        S = np.empty_like(raw)
        S[ref[0], :] = unwrap_from(raw[ref[0], :], ref[1])
        for j in range(raw.shape[1]):
            col = raw[:, j].copy()
            col[ref[0]] = S[ref[0], j]
            S[:, j] = unwrap_from(col, ref[0])
    ambiguous = np.zeros(values.shape, dtype=bool)
    for axis in range(values.ndim):
        jump = np.abs(np.diff(S, axis=axis)) > np.pi / 2
        pad = [(0, 1) if a == axis else (0, 0) for a in range(values.ndim)]
        first = np.pad(jump, pad)
        pad = [(1, 0) if a == axis else (0, 0) for a in range(values.ndim)]
        ambiguous |= first | np.pad(jump, pad)
    return S, low, ambiguous & ~low


def hamilton_jacobi_residual(snapshots: Sequence[WaveFunction], V, units: UnitSystem,
                             rho_floor: float | None = None) -> HJResidual:
    """dS/dt + |grad S|^2 / (2 mass) + V + Q for every interior snapshot.

    ``V`` is a nodal array or a :class:`~bohmlab.tdse.Potential`.  S is the
    unwrapped phase times hbar; nodes near zeros of psi or with ambiguous
    unwrapping are masked (the ambiguous ones are counted).
    """
    if len(snapshots) < 3:
        raise ValueError("need at least three consecutive snapshots")
    grid = snapshots[0].grid
    residuals, masks, times = [], [], []
    failures = 0
    phases = [unwrapped_phase(s, rho_floor) for s in snapshots]
    for k in range(1, len(snapshots) - 1):
        prev, cur, nxt = snapshots[k - 1], snapshots[k], snapshots[k + 1]
        stack = np.unwrap(np.stack([phases[k - 1][0], phases[k][0], phases[k + 1][0]]), axis=0)
        dSdt = units.hbar * (stack[2] - stack[0]) / (nxt.time - prev.time)
        S = units.hbar * phases[k][0]
        kinetic = np.zeros(grid.shape)
        for axis, (h, mass) in enumerate(zip(_spacings(grid), _masses(grid, units))):
            kinetic += gradient(S, h, axis) ** 2 / (2 * mass)
        Vk = V.evaluate(grid, cur.time) if hasattr(V, "evaluate") else np.asarray(V)
        Q, qmask = quantum_potential(cur, units, rho_floor)
        mask = qmask | phases[k][1] | phases[k][2]
        for axis in range(grid.ndim):
            # derivative stencils reach one node further
            mask = mask | np.roll(mask, 1, axis) | np.roll(mask, -1, axis)
        failures += int(phases[k][2].sum())
        r = dSdt + kinetic + Vk + Q
        residuals.append(np.where(mask, np.nan, r))
        masks.append(mask)
        times.append(cur.time)
    finite = [np.abs(r[~m]) for r, m in zip(residuals, masks) if np.any(~m)]
    max_abs = float(max(f.max() for f in finite)) if finite else float("nan")
    l2 = float(max(l2_norm(np.where(m, 0, r), grid) for r, m in zip(residuals, masks)))
    return HJResidual(np.array(times), residuals, masks, max_abs, l2, failures)

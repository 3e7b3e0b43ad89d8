"""Finite-difference Schrodinger solvers: stationary states and propagation.

Spatial derivatives use the three-point Laplacian.  Walls are Dirichlet
nodes (the wavefunction is pinned to zero there) rather than a large finite
potential.  Time stepping is Crank-Nicolson (a Cayley transform, unitary to
round-off); in 2D the x and X directions are Strang-split, each sub-step a
Cayley transform in its own direction, so the composite step stays unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from .errors import (DomainTooSmallError, GeometryError, InvalidConfigError, NumericError,
                     PropagationIntegrityError, ResolutionError)
from .grid import Grid1D, Grid2D, UnitSystem, WaveFunction, inner_product, integrate

# stability-of-accuracy guard on dt * max|V| / hbar
POTENTIAL_STEP_GUARD = 0.5
DELTA_WIDTH_IN_DX = 2.0
DELTA_TRUNCATION = 6.0
# X-edge amplitude above which the 2D box is declared too small
EDGE_AMPLITUDE_LIMIT = 1e-6


@dataclass(frozen=True)
class SwitchingProfile:
    """Time profile g(t) of a coupling, normalised so that its integral is 1.

    ``adiabatic_window`` is ``(2/T) sin^2(pi (t + T/2) / T)`` on
    ``[-T/2, T/2]``.  ``impulsive`` is a delta in time and is never sampled;
    it is applied as a single unitary kick.
    """

    kind: str = "adiabatic_window"
    T: float = 50.0

    def __post_init__(self):
        if self.kind not in ("impulsive", "adiabatic_window"):
            raise InvalidConfigError(f"unknown switching kind {self.kind!r}")
        if self.kind == "adiabatic_window" and not self.T > 0:
            raise InvalidConfigError(f"switching duration T must be positive, got {self.T}")

    @property
    def t_start(self) -> float:
        return -self.T / 2 if self.kind == "adiabatic_window" else 0.0

    @property
    def t_end(self) -> float:
        return self.T / 2 if self.kind == "adiabatic_window" else 0.0

    @property
    def peak(self) -> float:
        return 2.0 / self.T

    def g(self, t):
        if self.kind == "impulsive":
            raise ValueError("an impulsive profile has no pointwise value; apply it as a kick")
        t = np.asarray(t, dtype=float)
        s = t + self.T / 2
        inside = (s >= 0) & (s <= self.T)
        return np.where(inside, (2.0 / self.T) * np.sin(np.pi * s / self.T) ** 2, 0.0)

    def integral(self, t):
        """Analytic integral of g from -infinity to t."""
        if self.kind == "impulsive":
            return np.where(np.asarray(t) >= 0, 1.0, 0.0)
        s = np.clip(np.asarray(t, dtype=float) + self.T / 2, 0.0, self.T)
        return s / self.T - np.sin(2 * np.pi * s / self.T) / (2 * np.pi)


@dataclass(frozen=True)
class Potential:
    """A potential energy V on a grid.

    kinds
        ``infinite_well``: zero inside, Dirichlet walls at ``walls``.
        ``static_profile``: fixed nodal array or callable ``profile(x[, X])``.
        ``delta_coupling``: ``-hbar * epsilon * g(t) * delta_sigma(x - x0) * X``;
        on a 1D grid the meter coordinate is frozen at ``X_value``.
        ``time_dependent_composite``: callable ``profile(grid, t)`` and/or a
        sum of ``parts``.
    """

    kind: str = "infinite_well"
    profile: object = None
    walls: Optional[tuple[float, float]] = None
    x0: float = 0.5
    epsilon: float = 0.0
    switching: SwitchingProfile = field(default_factory=SwitchingProfile)
    sigma_delta: Optional[float] = None
    X_value: float = 0.0
    hbar: float = 1.0
    parts: tuple = ()

    def __post_init__(self):
        kinds = ("infinite_well", "static_profile", "delta_coupling", "time_dependent_composite")
        if self.kind not in kinds:
            raise InvalidConfigError(f"unknown potential kind {self.kind!r}")

    @property
    def is_static(self) -> bool:
        if self.kind == "infinite_well":
            return True
        if self.kind == "static_profile":
            return True
        if self.kind == "delta_coupling":
            return self.epsilon == 0
        return self.profile is None and all(p.is_static for p in self.parts)

    @property
    def all_walls(self) -> Optional[tuple[float, float]]:
        if self.walls is not None:
            return self.walls
        for p in self.parts:
            if p.all_walls is not None:
                return p.all_walls
        return None

    def delta_profile(self, axis: Grid1D) -> np.ndarray:
        return regularized_delta(self.x0, axis, self.sigma_delta, walls=self.all_walls)

    def evaluate(self, grid, t: float = 0.0) -> np.ndarray:
        """Nodal values of V at time ``t`` on a 1D or 2D grid."""
        if self.kind == "infinite_well":
            return np.zeros(grid.shape)
        if self.kind == "static_profile":
            if callable(self.profile):
                coords = (grid.x,) if grid.ndim == 1 else grid.mesh()
                return np.broadcast_to(np.asarray(self.profile(*coords), dtype=float),
                                       grid.shape).copy()
            return np.asarray(self.profile, dtype=float).reshape(grid.shape)
        if self.kind == "delta_coupling":
            if self.switching.kind == "impulsive":
                return np.zeros(grid.shape)
            scale = -self.hbar * self.epsilon * float(self.switching.g(t))
            if grid.ndim == 1:
                return scale * self.X_value * self.delta_profile(grid)
            delta = self.delta_profile(grid.axis_x)
            return scale * delta[:, None] * grid.axis_X.x[None, :]
        total = np.zeros(grid.shape)
        if callable(self.profile):
            total += np.asarray(self.profile(grid, t), dtype=float)
        for part in self.parts:
            total += part.evaluate(grid, t)
        return total

    def frozen(self, t: float, X: float) -> "Potential":
        """The static 1D potential seen by the system at fixed (t, X)."""
        if self.kind == "delta_coupling":
            g = 1.0 if self.switching.kind == "impulsive" else float(self.switching.g(t))
            return Potential("delta_coupling", x0=self.x0, epsilon=self.epsilon * g,
                             switching=_UNIT_STEP, sigma_delta=self.sigma_delta,
                             X_value=X, hbar=self.hbar, walls=self.walls)
        if self.kind == "time_dependent_composite":
            return Potential("time_dependent_composite", walls=self.walls,
                             parts=tuple(p.frozen(t, X) for p in self.parts))
        return self


class _ConstantSwitching(SwitchingProfile):
    def g(self, t):
        return np.ones_like(np.asarray(t, dtype=float))


_UNIT_STEP = _ConstantSwitching("adiabatic_window", 1.0)


def infinite_well(units: UnitSystem) -> Potential:
    return Potential("infinite_well", walls=(0.0, units.box_length_L))


def delta_coupling(x0: float, epsilon: float, switching: SwitchingProfile, units: UnitSystem,
                   sigma_delta: float | None = None, X_value: float = 0.0) -> Potential:
    """Infinite well plus the point coupling ``-hbar eps g(t) delta(x - x0) X``."""
    return Potential("delta_coupling", x0=x0, epsilon=epsilon, switching=switching,
                     sigma_delta=sigma_delta, X_value=X_value, hbar=units.hbar,
                     walls=(0.0, units.box_length_L))


def frozen_delta(x0: float, strength: float, units: UnitSystem,
                 sigma_delta: float | None = None) -> Potential:
    """Static well + delta with coupling ``strength = eps * g * X`` (V = -hbar s delta)."""
    return Potential("delta_coupling", x0=x0, epsilon=strength, switching=_UNIT_STEP,
                     sigma_delta=sigma_delta, X_value=1.0, hbar=units.hbar,
                     walls=(0.0, units.box_length_L))


@dataclass(frozen=True)
class EigenSolution:
    energies: np.ndarray
    states: list
    residuals: np.ndarray


def regularized_delta(x0: float, grid: Grid1D, sigma: float | None = None,
                      walls: tuple[float, float] | None = None) -> np.ndarray:
    """Unit-integral Gaussian stand-in for delta(x - x0), width ``2 dx`` by default.

    The kernel is truncated at six standard deviations and renormalised with
    the trapezoidal rule so that it integrates to one on the grid.
    """
    dx = grid.dx
    lo, hi = walls if walls is not None else (grid.x_min, grid.x_max)
    if not (lo + 4 * dx <= x0 <= hi - 4 * dx):
        raise GeometryError(f"delta centre x0={x0} must lie at least 4 dx inside [{lo}, {hi}]")
    sigma = DELTA_WIDTH_IN_DX * dx if sigma is None else float(sigma)
    if not sigma > 0:
        raise InvalidConfigError("sigma_delta must be positive")
    x = grid.x
    u = (x - x0) / sigma
    kernel = np.where(np.abs(u) <= DELTA_TRUNCATION, np.exp(-0.5 * u * u), 0.0)
    kernel[(x <= lo) | (x >= hi)] = 0.0
    total = np.trapezoid(kernel, dx=dx)
    if not total > 0:
        raise ResolutionError("delta kernel is narrower than the grid can resolve")
    return kernel / total


def _active_range(axis: Grid1D, walls) -> slice:
    """Interior nodes strictly between the walls (or the grid ends)."""
    x = axis.x
    tol = 1e-9 * axis.dx
    lo, hi = walls if walls is not None else (axis.x_min, axis.x_max)
    lo = max(lo, axis.x_min)
    hi = min(hi, axis.x_max)
    idx = np.nonzero((x > lo + tol) & (x < hi - tol))[0]
    if idx.size < 3:
        raise GeometryError("walls leave fewer than three interior nodes")
    return slice(int(idx[0]), int(idx[-1]) + 1)


def kinetic_coefficients(dx: float, mass: float, hbar: float) -> tuple[float, float]:
    """Diagonal and off-diagonal entries of -hbar^2/(2 mass) d^2/dx^2."""
    c = hbar ** 2 / (2.0 * mass * dx * dx)
    return 2.0 * c, -c


def hamiltonian_1d(grid: Grid1D, potential: Potential, units: UnitSystem, t: float = 0.0,
                   mass: float | None = None):
    """Tridiagonal Hamiltonian on the active nodes: (diag, offdiag, active slice)."""
    mass = units.mass_m if mass is None else mass
    active = _active_range(grid, potential.all_walls)
    V = potential.evaluate(grid, t)[active]
    d0, e0 = kinetic_coefficients(grid.dx, mass, units.hbar)
    diag = d0 + V
    off = np.full(diag.size - 1, e0)
    return diag, off, active


def well_eigenstate(n: int, grid: Grid1D, units: UnitSystem) -> tuple[WaveFunction, float]:
    """sqrt(2/L) sin(n pi x / L) on ``grid`` and its continuum energy."""
    L = units.box_length_L
    if int(n) != n or n < 1:
        raise InvalidConfigError(f"quantum number must be a positive integer, got {n}")
    if abs(grid.x_min) > 1e-9 * L or abs(grid.x_max - L) > 1e-9 * L:
        raise GeometryError(f"grid must span the well [0, {L}]")
    if (L / n) / grid.dx < 8:
        raise ResolutionError(
            f"n={n} leaves fewer than 8 points per half-wavelength at dx={grid.dx:.3g}")
    x = grid.x
    values = np.sqrt(2.0 / L) * np.sin(n * np.pi * x / L)
    values[0] = values[-1] = 0.0
    return WaveFunction(grid, values), units.well_energy(n)


def solve_stationary(potential: Potential, grid: Grid1D, k: int, units: UnitSystem,
                     t: float = 0.0) -> EigenSolution:
    """Lowest ``k`` eigenpairs of the finite-difference Hamiltonian (Dirichlet walls)."""
    if k < 1 or k > grid.n_points / 4:
        raise InvalidConfigError(f"k must be in [1, n_points/4], got {k}")
    diag, off, active = hamiltonian_1d(grid, potential, units, t)
    try:
        energies, vectors = scipy.linalg.eigh_tridiagonal(
            diag, off, select="i", select_range=(0, k - 1))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"tridiagonal eigensolver failed: {exc}") from exc
    states, residuals = [], []
    for i in range(k):
        vec = vectors[:, i]
        lead = vec[np.argmax(np.abs(vec) > 1e-3 * np.abs(vec).max())]
        vec = vec * np.sign(lead)
        hv = diag * vec
        hv[:-1] += off * vec[1:]
        hv[1:] += off * vec[:-1]
        residuals.append(np.linalg.norm(hv - energies[i] * vec) / np.linalg.norm(vec))
        full = np.zeros(grid.n_points)
        full[active] = vec / np.sqrt(grid.dx)
        states.append(WaveFunction(grid, full, t))
    residuals = np.array(residuals)
    scale = max(1.0, float(np.abs(energies).max()))
    if np.any(residuals > 1e-6 * scale):
        raise NumericError(f"eigenpair residuals too large: {residuals.max():.3e}")
    gram = np.array([[inner_product(a, b) for b in states] for a in states])
    if np.abs(gram - np.eye(k)).max() > 1e-8:
        raise NumericError("eigenvectors failed the orthonormality check")
    return EigenSolution(np.asarray(energies), states, residuals)


def slope_jump(state: WaveFunction, x0: float, window: int = 8,
               sigma_delta: float | None = None) -> float:
    """Change of dphi/dx across the regularised delta support at ``x0``.

    Centred-difference slopes are taken on ``window`` nodes on each side just
    outside the kernel support, fitted with a straight line in x, and both
    fits are extrapolated to ``x0``.
    """
    grid = state.grid
    dx = grid.dx
    sigma = DELTA_WIDTH_IN_DX * dx if sigma_delta is None else sigma_delta
    half = DELTA_TRUNCATION * sigma
    x = grid.x
    phi = state.values.real
    left = np.nonzero(x < x0 - half)[0][-window:]
    right = np.nonzero(x > x0 + half)[0][:window]
    if (left.size < window or right.size < window or left[0] < 1
            or right[-1] > grid.n_points - 2):
        raise GeometryError(f"x0={x0} is within {window} nodes of a wall")
    slopes = (phi[2:] - phi[:-2]) / (2 * dx)

    def extrapolate(idx):
        fit = np.polyfit(x[idx], slopes[idx - 1], 1)
        return np.polyval(fit, x0)

    return float(extrapolate(right) - extrapolate(left))


def slope_jump_prediction(state: WaveFunction, x0: float, strength: float,
                          units: UnitSystem) -> float:
    """-2 m (eps g X) phi(x0) / hbar for a coupling of the given strength."""
    phi0 = float(np.interp(x0, state.grid.x, state.values.real))
    return -2.0 * units.mass_m * strength * phi0 / units.hbar


# --------------------------------------------------------------------------- propagation


class _CrankNicolson1D:
    """Cayley-transform stepper for a (possibly time-dependent) 1D potential.

    Each solve gets one step of iterative refinement with the residual
    formed in extended precision.  Without it the backward error of the
    solve, about eps * dt * max|H| times the local amplitude, shows up as
    relative phase noise next to nodes, where it dominates the velocity
    J / rho of a stationary state.
    """

    def __init__(self, grid: Grid1D, potential: Potential, units: UnitSystem, mass: float):
        self.grid, self.potential, self.units, self.mass = grid, potential, units, mass
        self.active = _active_range(grid, potential.all_walls)
        self.dt = grid.dt
        self._lu = None
        self._matrix = None

    def _factor(self, t_mid: float):
        diag, off, _ = hamiltonian_1d(self.grid, self.potential, self.units, t_mid, self.mass)
        vmax = np.abs(diag - kinetic_coefficients(self.grid.dx, self.mass,
                                                  self.units.hbar)[0]).max()
        if self.dt * vmax / self.units.hbar >= POTENTIAL_STEP_GUARD:
            raise InvalidConfigError(
                f"dt*max|V|/hbar = {self.dt * vmax / self.units.hbar:.3g} exceeds "
                f"{POTENTIAL_STEP_GUARD}; reduce dt")
        a = 0.5j * self.dt / self.units.hbar
        d, e = 1 + a * diag, a * off + 0j
        self._lu = _gttrf(e, d, e.copy())
        self._matrix = (d.astype(np.clongdouble), e.astype(np.clongdouble))

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        y = _gttrs(self._lu, rhs)
        d, e = self._matrix
        yl = y.astype(np.clongdouble)
        r = rhs.astype(np.clongdouble) - d * yl
        r[:-1] -= e * yl[1:]
        r[1:] -= e * yl[:-1]
        return y + _gttrs(self._lu, r.astype(complex))

    def step(self, values: np.ndarray, t: float) -> np.ndarray:
        if self._lu is None or not self.potential.is_static:
            self._factor(t + 0.5 * self.dt)
        psi = values[self.active]
        out = np.zeros_like(values)
        # (1 + aH)^-1 (1 - aH) psi == 2 (1 + aH)^-1 psi - psi
        out[self.active] = 2 * self._solve(psi) - psi
        return out


def _norm_tolerance(steps: int) -> float:
    return 1e-6 * (steps / 1000.0 + 1.0)


def _check_norm(values, grid, steps, norm0):
    norm = float(np.sqrt(integrate(np.abs(values) ** 2, grid)))
    if abs(norm - norm0) > _norm_tolerance(steps):
        raise PropagationIntegrityError(
            f"norm drifted by {abs(norm - norm0):.3e} after {steps} steps")
    return norm


def evolve_1d(psi: WaveFunction, potential: Potential, steps: int,
              units: UnitSystem | None = None, every: int = 1,
              mass: float | None = None) -> Iterator[WaveFunction]:
    """Yield ``psi`` and then every ``every``-th state of a Crank-Nicolson run."""
    units = UnitSystem() if units is None else units
    mass = units.mass_m if mass is None else mass
    stepper = _CrankNicolson1D(psi.grid, potential, units, mass)
    values = np.array(psi.values)
    values[np.arange(values.size) < stepper.active.start] = 0
    values[np.arange(values.size) >= stepper.active.stop] = 0
    norm0 = float(np.sqrt(integrate(np.abs(values) ** 2, psi.grid)))
    t0, dt = psi.time, psi.grid.dt
    yield psi.replace(values=values)
    for n in range(1, steps + 1):
        values = stepper.step(values, t0 + (n - 1) * dt)
        if n % every == 0 or n == steps:
            _check_norm(values, psi.grid, n, norm0)
            yield WaveFunction(psi.grid, values, t0 + n * dt)


def propagate_1d(psi: WaveFunction, potential: Potential, steps: int,
                 units: UnitSystem | None = None, every: int | None = None,
                 mass: float | None = None) -> list[WaveFunction]:
    """Crank-Nicolson propagation; returns the initial state and snapshots."""
    every = steps if every is None else every
    return list(evolve_1d(psi, potential, steps, units, every, mass))


class _ADIStepper2D:
    """Strang splitting X(dt/2) . x(dt) . X(dt/2) of Cayley transforms.

    The x sub-step carries the kinetic term in x plus the full potential
    V(x, X_j) for every meter column j; all columns are solved as one long
    tridiagonal system with decoupled blocks, factored once per step.  The X
    sub-steps carry the meter kinetic term only; that factorisation is built
    once.  The stiff x-direction gets the single full step on purpose: a
    product of two Cayley half-steps sends its grid-scale modes to near-zero
    phase per step, where a slowly switched coupling excites them.
    Internally the active block is stored as ``(n_X, n_x)`` so x is the
    contiguous axis.
    """

    def __init__(self, grid: Grid2D, potential: Potential, units: UnitSystem):
        self.grid, self.potential, self.units = grid, potential, units
        self.ax = _active_range(grid.axis_x, potential.all_walls)
        self.aX = _active_range(grid.axis_X, None)
        self.nx = self.ax.stop - self.ax.start
        self.nX = self.aX.stop - self.aX.start
        self.dt = grid.dt
        hbar = units.hbar
        self._dx0, self._ex0 = kinetic_coefficients(grid.axis_x.dx, units.mass_m, hbar)
        dX0, eX0 = kinetic_coefficients(grid.axis_X.dx, units.mass_M, hbar)
        b = 1j * (0.5 * self.dt) / (2 * hbar)
        off = np.full(self.nX - 1, b * eX0, dtype=complex)
        self._X_factor = _gttrf(off, np.full(self.nX, 1 + b * dX0, dtype=complex), off.copy())
        self._a = 1j * self.dt / (2 * hbar)
        off_x = np.full(self.nx * self.nX - 1, self._a * self._ex0, dtype=complex)
        off_x[self.nx - 1::self.nx] = 0.0
        self._off_x = off_x
        self._x_factor = None

    def potential_at(self, t: float) -> np.ndarray:
        V = self.potential.evaluate(self.grid, t)[self.ax, self.aX]
        vmax = np.abs(V).max()
        if self.dt * vmax / self.units.hbar >= POTENTIAL_STEP_GUARD:
            raise InvalidConfigError(
                f"dt*max|V|/hbar = {self.dt * vmax / self.units.hbar:.3g} exceeds "
                f"{POTENTIAL_STEP_GUARD}; reduce dt")
        return V

    def _factor_x(self, t_mid: float):
        if self._x_factor is not None and self.potential.is_static:
            return self._x_factor
        V = self.potential_at(t_mid)
        diag = 1 + self._a * (self._dx0 + V.T.ravel())
        self._x_factor = _gttrf(self._off_x, diag.astype(complex), self._off_x.copy())
        return self._x_factor

    def step(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Advance the active block (layout ``(n_X, n_x)``) by one dt."""
        fx = self._factor_x(t + 0.5 * self.dt)
        psi = 2 * _gttrs(self._X_factor, psi) - psi
        flat = psi.ravel()
        flat = 2 * _gttrs(fx, flat) - flat
        psi = flat.reshape(self.nX, self.nx)
        return 2 * _gttrs(self._X_factor, psi) - psi

    def load(self, values: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(values[self.ax, self.aX].T)

    def unload(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=complex)
        out[self.ax, self.aX] = psi.T
        return out


def _gttrf(dl, d, du):
    dl, d, du, du2, ipiv, info = scipy.linalg.lapack.zgttrf(dl, d, du)
    if info != 0:
        raise NumericError(f"tridiagonal factorisation failed (info={info})")
    return dl, d, du, du2, ipiv


def _gttrs(factor, rhs):
    out, info = scipy.linalg.lapack.zgttrs(*factor, rhs)
    if info != 0:
        raise NumericError(f"tridiagonal solve failed (info={info})")
    return out


def edge_amplitude(values: np.ndarray) -> float:
    """Largest |psi| on the first/last interior meter nodes."""
    return float(max(np.abs(values[:, 1]).max(), np.abs(values[:, -2]).max()))


def evolve_2d(psi: WaveFunction, potential: Potential, steps: int,
              units: UnitSystem | None = None, every: int = 1) -> Iterator[WaveFunction]:
    units = UnitSystem() if units is None else units
    grid = psi.grid
    stepper = _ADIStepper2D(grid, potential, units)
    block = stepper.load(psi.values)
    values = stepper.unload(block)
    norm0 = float(np.sqrt(integrate(np.abs(values) ** 2, grid)))
    t0, dt = psi.time, grid.dt
    yield psi.replace(values=values)
    for n in range(1, steps + 1):
        block = stepper.step(block, t0 + (n - 1) * dt)
        if n % every == 0 or n == steps:
            values = stepper.unload(block)
            _check_norm(values, grid, n, norm0)
            edge = edge_amplitude(values)
            if edge > EDGE_AMPLITUDE_LIMIT:
                raise DomainTooSmallError(
                    f"meter-axis edge amplitude {edge:.2e} exceeds {EDGE_AMPLITUDE_LIMIT:g}")
            yield WaveFunction(grid, values, t0 + n * dt)


def propagate_2d(psi: WaveFunction, potential: Potential, steps: int,
                 units: UnitSystem | None = None, every: int | None = None) -> list[WaveFunction]:
    every = steps if every is None else every
    return list(evolve_2d(psi, potential, steps, units, every))


def impulsive_kick(psi: WaveFunction, potential: Potential) -> WaveFunction:
    """Exact unitary exp(-i/hbar int V dt) for an impulsive delta coupling.

    With g(t) = delta(t) the integral of ``-hbar eps g delta(x-x0) X`` is
    ``-hbar eps delta(x-x0) X``, so the kick is ``exp(i eps delta(x-x0) X)``.
    """
    if potential.kind != "delta_coupling":
        raise InvalidConfigError("impulsive kicks are defined for delta couplings only")
    grid = psi.grid
    if grid.ndim == 1:
        phase = potential.epsilon * potential.delta_profile(grid) * potential.X_value
    else:
        delta = potential.delta_profile(grid.axis_x)
        phase = potential.epsilon * delta[:, None] * grid.axis_X.x[None, :]
    return psi.replace(values=psi.values * np.exp(1j * phase))


def energy_expectation(psi: WaveFunction, potential: Potential, units: UnitSystem,
                       t: float | None = None) -> float:
    """<H> with the same finite-difference operator the propagators use."""
    t = psi.time if t is None else t
    grid = psi.grid
    values = psi.values
    V = potential.evaluate(grid, t)
    if grid.ndim == 1:
        lap = _laplacian(values, grid.dx, 0)
        hpsi = -units.hbar ** 2 / (2 * units.mass_m) * lap + V * values
    else:
        lap_x = _laplacian(values, grid.axis_x.dx, 0)
        lap_X = _laplacian(values, grid.axis_X.dx, 1)
        hpsi = (-units.hbar ** 2 / (2 * units.mass_m) * lap_x
                - units.hbar ** 2 / (2 * units.mass_M) * lap_X + V * values)
    return float(np.real(integrate(np.conj(values) * hpsi, grid)))


def _laplacian(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Three-point second difference with zero Dirichlet values beyond the ends."""
    padded = np.pad(values, [(1, 1) if a == axis else (0, 0) for a in range(values.ndim)])
    sl = lambda s: tuple(s if a == axis else slice(None) for a in range(values.ndim))
    return (padded[sl(slice(2, None))] - 2 * values + padded[sl(slice(None, -2))]) / (h * h)


def gaussian_packet(grid: Grid1D, center: float, sigma: float, momentum: float = 0.0,
                    hbar: float = 1.0, time: float = 0.0) -> WaveFunction:
    """Normalised Gaussian with |psi|^2 of standard deviation ``sigma``."""
    x = grid.x
    values = ((2 * np.pi * sigma ** 2) ** -0.25
              * np.exp(-((x - center) ** 2) / (4 * sigma ** 2) + 1j * momentum * x / hbar))
    return WaveFunction(grid, values, time)


def product_state(system: WaveFunction, meter: WaveFunction, dt: float | None = None) -> WaveFunction:
    """psi(x) * M(X) on the product grid."""
    grid = Grid2D(system.grid, meter.grid, system.grid.dt if dt is None else dt)
    return WaveFunction(grid, system.values[:, None] * meter.values[None, :], system.time)

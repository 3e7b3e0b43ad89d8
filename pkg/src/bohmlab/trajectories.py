"""Bohmian trajectories, Born-rule ensembles and equivariance diagnostics.

Paths are advanced with classical RK4 through velocity snapshots that are
interpolated linearly in space (bilinearly in 2D) and linearly in time.  The
integrator is streaming: it only ever holds the two snapshots that bracket
the current time, so long 2D runs never need the full field history.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import InvalidConfigError
from .fields import density, phase_laplacian, velocity_field
from .grid import UnitSystem, WaveFunction, interpolate

COMPLETED, NODE_REJECTED, CLAMPED = "completed", "node_rejected", "clamped"
CFL_LIMIT = 0.5
LOW_STATISTICS = 100


@dataclass(frozen=True)
class VelocitySnapshot:
    time: float
    grid: object
    v: np.ndarray
    mask: np.ndarray
    div: np.ndarray | None = None


def velocity_snapshot(psi: WaveFunction, units: UnitSystem, rho_floor: float | None = None,
                      divergence: bool = False) -> VelocitySnapshot:
    """Guidance field of ``psi``; with ``divergence`` also div v (nan-free, 0 on the mask)."""
    v, mask = velocity_field(psi, units, rho_floor)
    div = None
    if divergence:
        d, dmask = phase_laplacian(psi, units, rho_floor)
        div = np.where(dmask, 0.0, d)
    return VelocitySnapshot(psi.time, psi.grid, v, mask, div)


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: str = COMPLETED

    @property
    def start(self):
        return self.positions[0]


@dataclass
class Ensemble:
    """Paths stored as one array: ``positions[path, sample(, axis)]``."""

    times: np.ndarray
    positions: np.ndarray
    status: np.ndarray
    seed: int | None
    init_time: float
    low_statistics: bool = False
    # int_0^t div v dt along each path, per sample (when tracked)
    divergence_integral: np.ndarray | None = None

    def __len__(self):
        return self.positions.shape[0]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.times, self.positions[i], str(self.status[i]))

    @property
    def trajectories(self) -> list[Trajectory]:
        return [self.trajectory(i) for i in range(len(self))]

    @property
    def initial(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def final(self) -> np.ndarray:
        return self.positions[:, -1]

    def rejected_fraction(self) -> float:
        return float(np.mean(self.status == NODE_REJECTED))


# ------------------------------------------------------------------------ sampling


def grid_cdf(rho: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Normalised cumulative trapezoid of a nodal density."""
    c = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    return c / c[-1]


def cdf_function(rho: np.ndarray, x: np.ndarray):
    cdf = grid_cdf(rho, x)
    return lambda q: np.interp(q, x, cdf)


def _inverse_cdf(u: np.ndarray, cdf: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Invert a piecewise-linear CDF; zero-density stretches are never hit."""
    k = np.clip(np.searchsorted(cdf, u, side="right"), 1, cdf.size - 1)
    lo, hi = cdf[k - 1], cdf[k]
    width = np.where(hi > lo, hi - lo, 1.0)
    frac = np.clip(np.where(hi > lo, (u - lo) / width, 0.5), 0.0, 1.0)
    return x[k - 1] + frac * (x[k] - x[k - 1])


def dkw_epsilon(n: int, alpha: float = 1e-3) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band half-width at confidence ``alpha``."""
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))


def sample_ensemble(psi: WaveFunction, n: int, seed: int) -> Ensemble:
    """Draw ``n`` initial positions from |psi|^2 by inverse-CDF sampling.

    In 2D the meter coordinate X is drawn from its marginal and x from the
    conditional density on the linearly interpolated row at that X.
    """
    if n < 1:
        raise InvalidConfigError("ensemble size must be positive")
    rng = np.random.default_rng(seed)
    grid = psi.grid
    rho = density(psi)
    if grid.ndim == 1:
        pos = _inverse_cdf(rng.random(n), grid_cdf(rho, grid.x), grid.x)
    else:
        x, X = grid.axis_x.x, grid.axis_X.x
        marginal = np.trapezoid(rho, dx=grid.axis_x.dx, axis=0)
        Xs = _inverse_cdf(rng.random(n), grid_cdf(marginal, X), X)
        j = np.clip(np.searchsorted(X, Xs) - 1, 0, X.size - 2)
        w = ((Xs - X[j]) / grid.axis_X.dx)[:, None]
        rows = (1 - w) * rho[:, j].T + w * rho[:, j + 1].T
        cum = np.concatenate([np.zeros((n, 1)),
                              np.cumsum(0.5 * (rows[:, 1:] + rows[:, :-1]), axis=1)], axis=1)
        cum /= cum[:, -1:]
        u = rng.random(n)
        xs = np.array([_inverse_cdf(ui, c, x) for ui, c in zip(u, cum)])
        pos = np.stack([xs, Xs], axis=-1)
    return Ensemble(np.array([psi.time]), pos[:, None], np.full(n, COMPLETED, dtype="<U13"),
                    seed, psi.time, low_statistics=n < LOW_STATISTICS)


def ensemble_from_positions(positions, time: float = 0.0, seed: int | None = None) -> Ensemble:
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    return Ensemble(np.array([time]), positions[:, None], np.full(n, COMPLETED, dtype="<U13"),
                    seed, time, low_statistics=n < LOW_STATISTICS)


# --------------------------------------------------------------------- integration


def _spacing(grid) -> np.ndarray:
    return np.array([grid.dx]) if grid.ndim == 1 else np.array(grid.spacing)


def _nearest_masked(mask: np.ndarray, grid, pos: np.ndarray) -> np.ndarray:
    if grid.ndim == 1:
        i = np.clip(np.rint((pos - grid.x_min) / grid.dx).astype(int), 0, grid.n_points - 1)
        return mask[i]
    i = np.clip(np.rint((pos[:, 0] - grid.axis_x.x_min) / grid.axis_x.dx).astype(int),
                0, grid.axis_x.n_points - 1)
    j = np.clip(np.rint((pos[:, 1] - grid.axis_X.x_min) / grid.axis_X.dx).astype(int),
                0, grid.axis_X.n_points - 1)
    return mask[i, j]


def _interp_velocity(snap: VelocitySnapshot, pos: np.ndarray):
    grid = snap.grid
    if grid.ndim == 1:
        return interpolate(snap.v, grid, pos)
    vx, clamped = interpolate(snap.v[0], grid, pos)
    vX, _ = interpolate(snap.v[1], grid, pos)
    return np.stack([vx, vX], axis=-1), clamped


class FlowIntegrator:
    """Advance a set of paths through a stream of velocity snapshots.

    ``dt_traj`` (default: the snapshot spacing) is the nominal RK4 step; it is
    further sub-divided whenever |v| dt / dx would exceed 0.5 at any live
    path.  Positions are recorded at every snapshot time.

    When every snapshot carries ``div`` the integral of div v along each path
    is advanced with the same RK4 stages, so rho0 exp(-integral) is the
    density transported along the path without any resampling error.
    """

    def __init__(self, positions, t0: float, dt_traj: float | None = None,
                 probes: dict | None = None):
        pos = np.array(positions, dtype=float)
        self.pos = pos
        self.t = t0
        self.dt_traj = dt_traj
        self.status = np.full(pos.shape[0], COMPLETED, dtype="<U13")
        self.times = [t0]
        self.samples = [pos.copy()]
        self.probes = probes or {}
        self.probe_samples = {name: [] for name in self.probes}
        self.div_integral = np.zeros(pos.shape[0])
        self.div_samples = [self.div_integral.copy()]
        self.track_divergence = True
        self._prev = None

    @property
    def live(self) -> np.ndarray:
        return self.status == COMPLETED

    def feed(self, snap: VelocitySnapshot):
        self.track_divergence = self.track_divergence and snap.div is not None
        if self._prev is None:
            if abs(snap.time - self.t) > 1e-12 * max(1.0, abs(self.t)):
                raise ValueError("first snapshot must coincide with the initial time")
            self._flag(np.nonzero(self.live)[0], snap, snap, 0.0)
            self._probe(snap)
            self._prev = snap
            return
        a, b = self._prev, snap
        span = b.time - a.time
        if span <= 0:
            raise ValueError("snapshots must be strictly increasing in time")
        dt_traj = span if self.dt_traj is None else self.dt_traj
        if dt_traj > span * (1 + 1e-9):
            raise InvalidConfigError("dt_traj must not exceed the snapshot spacing")
        n_nominal = max(1, int(round(span / dt_traj)))
        h_nominal = span / n_nominal
        h_grid = _spacing(a.grid)
        for step in range(n_nominal):
            live = np.nonzero(self.live)[0]
            if live.size == 0:
                break
            t_local = step * h_nominal
            va, _ = _interp_velocity(a, self.pos[live])
            vb, _ = _interp_velocity(b, self.pos[live])
            courant = np.maximum(np.abs(va), np.abs(vb)) * h_nominal
            if courant.ndim > 1:
                courant = np.max(courant / h_grid, axis=1)
            else:
                courant = courant / h_grid[0]
            # per-path sub-step counts, grouped by powers of two
            n_sub = np.maximum(1, np.ceil(np.nan_to_num(courant) / CFL_LIMIT))
            level = 2 ** np.ceil(np.log2(n_sub)).astype(int)
            for lev in np.unique(level):
                idx = live[level == lev]
                h = h_nominal / lev
                for k in range(lev):
                    idx = idx[self.status[idx] == COMPLETED]
                    if idx.size == 0:
                        break
                    self._rk4(idx, a, b, t_local + k * h, h, span)
                    self._flag(idx, a, b, (t_local + (k + 1) * h) / span)
        self.t = b.time
        self.times.append(b.time)
        self.samples.append(self.pos.copy())
        self.div_samples.append(self.div_integral.copy())
        self._probe(b)
        self._prev = b

    def _velocity(self, a, b, w, pos):
        va, _ = _interp_velocity(a, pos)
        vb, _ = _interp_velocity(b, pos)
        return (1 - w) * va + w * vb

    def _divergence(self, a, b, w, pos):
        return ((1 - w) * interpolate(a.div, a.grid, pos)[0]
                + w * interpolate(b.div, b.grid, pos)[0])

    def _rk4(self, idx, a, b, t_local, h, span):
        x = self.pos[idx]
        w0, w1, w2 = t_local / span, (t_local + 0.5 * h) / span, (t_local + h) / span
        stages = [(w0, x)]
        k1 = self._velocity(a, b, w0, x)
        stages.append((w1, x + 0.5 * h * k1))
        k2 = self._velocity(a, b, w1, stages[-1][1])
        stages.append((w1, x + 0.5 * h * k2))
        k3 = self._velocity(a, b, w1, stages[-1][1])
        stages.append((w2, x + h * k3))
        k4 = self._velocity(a, b, w2, stages[-1][1])
        self.pos[idx] = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if self.track_divergence:
            d = [self._divergence(a, b, w, y) for w, y in stages]
            self.div_integral[idx] += h / 6.0 * (d[0] + 2 * d[1] + 2 * d[2] + d[3])

    def _flag(self, idx, a, b, w):
        if idx.size == 0:
            return
        snap = a if w < 0.5 else b
        pos = self.pos[idx]
        grid = snap.grid
        if grid.ndim == 1:
            out = (pos < grid.x_min) | (pos > grid.x_max)
            self.pos[idx] = np.clip(pos, grid.x_min, grid.x_max)
        else:
            lo = np.array([grid.axis_x.x_min, grid.axis_X.x_min])
            hi = np.array([grid.axis_x.x_max, grid.axis_X.x_max])
            out = np.any((pos < lo) | (pos > hi), axis=1)
            self.pos[idx] = np.clip(pos, lo, hi)
        self.status[idx[out]] = CLAMPED
        hit = _nearest_masked(snap.mask, grid, self.pos[idx]) & ~out
        self.status[idx[hit]] = NODE_REJECTED
        self.pos[idx[hit]] = np.nan

    def _probe(self, snap):
        for name, fn in self.probes.items():
            self.probe_samples[name].append(fn(snap, self.pos.copy()))

    def ensemble(self, seed: int | None = None, low_statistics: bool = False) -> Ensemble:
        positions = np.stack(self.samples, axis=1)
        integral = np.stack(self.div_samples, axis=1) if self.track_divergence else None
        return Ensemble(np.array(self.times), positions, self.status.copy(), seed,
                        self.times[0], low_statistics, integral)


def integrate_ensemble(ensemble: Ensemble, field_series: Iterable[VelocitySnapshot],
                       dt_traj: float | None = None, probes: dict | None = None) -> Ensemble:
    """Evolve the initial positions of ``ensemble`` through ``field_series``."""
    integ = FlowIntegrator(ensemble.initial, ensemble.init_time, dt_traj, probes)
    for snap in field_series:
        integ.feed(snap)
    out = integ.ensemble(ensemble.seed, ensemble.low_statistics)
    out.probe_samples = {k: np.stack(v, axis=1) for k, v in integ.probe_samples.items()}
    return out


def integrate_trajectory(x0, field_series: Iterable[VelocitySnapshot],
                         dt_traj: float | None = None) -> Trajectory:
    """Single path through ``field_series`` (which must start at the initial time)."""
    series = iter(field_series)
    first = next(series)
    pos = np.atleast_1d(np.asarray(x0, dtype=float))[None, ...]
    if first.grid.ndim == 1:
        pos = pos[:, 0]
    else:
        pos = pos.reshape(1, 2)
    integ = FlowIntegrator(pos, first.time, dt_traj)
    if _nearest_masked(first.mask, first.grid, pos)[0]:
        raise InvalidConfigError("initial point lies inside the node mask")
    integ.feed(first)
    for snap in series:
        integ.feed(snap)
    ens = integ.ensemble()
    return ens.trajectory(0)


# --------------------------------------------------------------------- diagnostics


@dataclass
class EquivarianceReport:
    time: float
    ks: tuple
    n_paths: int
    rejected_fraction: float
    threshold: float
    integrity_failure: bool
    passed: bool
    warnings: list = field(default_factory=list)


def _ks_1d(samples, rho, x) -> float:
    samples = samples[np.isfinite(samples)]
    return float(stats.kstest(samples, cdf_function(rho, x)).statistic)


def ks_distance(positions: np.ndarray, psi: WaveFunction) -> tuple:
    """KS distance to |psi|^2; per-axis marginals in 2D."""
    grid = psi.grid
    rho = density(psi)
    if grid.ndim == 1:
        return (_ks_1d(positions, rho, grid.x),)
    rho_x = np.trapezoid(rho, dx=grid.axis_X.dx, axis=1)
    rho_X = np.trapezoid(rho, dx=grid.axis_x.dx, axis=0)
    return (_ks_1d(positions[:, 0], rho_x, grid.axis_x.x),
            _ks_1d(positions[:, 1], rho_X, grid.axis_X.x))


def equivariance_check(ensemble: Ensemble, psi_t: WaveFunction, threshold: float = 0.03,
                       max_rejected: float = 0.01) -> EquivarianceReport:
    """Compare the evolved ensemble with |psi_t|^2 at the ensemble's last time."""
    if abs(ensemble.times[-1] - psi_t.time) > 1e-9 * max(1.0, abs(psi_t.time)):
        raise ValueError("ensemble has not been evolved to the time of psi_t")
    ok = ensemble.status != NODE_REJECTED
    ks = ks_distance(ensemble.final[ok], psi_t)
    rejected = ensemble.rejected_fraction()
    integrity = rejected > max_rejected
    warnings = []
    if integrity:
        warnings.append(f"{rejected:.1%} of paths were node-rejected")
    if ensemble.low_statistics:
        warnings.append("low statistics")
    passed = (not integrity) and max(ks) < threshold
    return EquivarianceReport(psi_t.time, ks, len(ensemble), rejected, threshold, integrity,
                              passed, warnings)


def divergence_samples(snap_psi: WaveFunction, positions: np.ndarray,
                       units: UnitSystem) -> np.ndarray:
    """div v = sum (hbar/mass) lap(arg psi) interpolated at ``positions``."""
    div, mask = phase_laplacian(snap_psi, units)
    values, _ = interpolate(np.where(mask, np.nan, div), snap_psi.grid, positions)
    return values


def density_along_path(traj: Trajectory, divergence: Sequence[float], rho0: float) -> np.ndarray:
    """rho(x(t), t) = rho0 exp(-int div v dt) along ``traj``.

    ``divergence`` holds div v sampled at the path's sample times.  A path
    that touched the node mask (nan samples) is not computable.
    """
    div = np.asarray(divergence, dtype=float)
    if traj.status != COMPLETED or not np.all(np.isfinite(div)):
        raise ValueError("path touches the node mask; density along it is not computable")
    t = traj.times
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (div[1:] + div[:-1]) * np.diff(t))])
    return rho0 * np.exp(-integral)


def transported_density(ensemble: Ensemble, rho0: np.ndarray) -> np.ndarray:
    """rho0 exp(-int div v dt) per path and sample, from the tracked integral."""
    if ensemble.divergence_integral is None:
        raise ValueError("ensemble was integrated without divergence snapshots")
    return np.asarray(rho0, dtype=float)[:, None] * np.exp(-ensemble.divergence_integral)


@dataclass
class ConfinementReport:
    n: int
    cells: np.ndarray
    crossings: int
    offending: list
    passed: bool


def node_confinement_check(ensemble: Ensemble, psi: WaveFunction, n: int,
                           units: UnitSystem, tolerance: float = 1e-6) -> ConfinementReport:
    """Every path must stay inside its initial nodal cell (k L/n, (k+1) L/n).

    ``psi`` is the state the ensemble was drawn from; it must be the n-th
    well eigenstate up to a phase.
    """
    from .tdse import well_eigenstate  # noqa: avoid import cycle at module load

    phi_n, _ = well_eigenstate(n, psi.grid, units)
    overlap = abs(np.trapezoid(np.conj(phi_n.values) * psi.values, dx=psi.grid.dx)) ** 2
    if overlap < 1 - tolerance:
        raise InvalidConfigError("node confinement is defined for a single eigenstate only")
    cell_size = units.box_length_L / n
    cells = np.floor(ensemble.initial / cell_size).astype(int)
    pos = ensemble.positions
    lo = (cells * cell_size)[:, None]
    hi = ((cells + 1) * cell_size)[:, None]
    inside = (pos > lo) & (pos < hi)
    bad = ~np.all(inside | np.isnan(pos), axis=1) | (ensemble.status == NODE_REJECTED)
    offending = [ensemble.trajectory(i) for i in np.nonzero(bad)[0]]
    return ConfinementReport(n, cells, int(bad.sum()), offending, not np.any(bad))

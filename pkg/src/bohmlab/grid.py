"""Grids, units, wavefunction storage and elementary functionals.

All quadratures use the trapezoidal rule so that they are consistent with the
second-order finite differences used everywhere else.  Two-dimensional fields
are indexed ``field[i, j] = f(x_i, X_j)``: axis 0 is the system coordinate
``x``, axis 1 the meter coordinate ``X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegenerateStateError, GridMismatchError, InvalidConfigError

MIN_POINTS = 16


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    mass_m: float = 1.0
    mass_M: float = 100.0
    box_length_L: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass_m", "mass_M", "box_length_L"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidConfigError(f"units.{name} must be positive, got {value!r}")
        if self.mass_M < self.mass_m:
            raise InvalidConfigError("units.mass_M must be >= units.mass_m")

    def well_energy(self, n: int) -> float:
        """Continuum infinite-well level (hbar n pi / L)^2 / (2 m)."""
        return (self.hbar * n * np.pi / self.box_length_L) ** 2 / (2.0 * self.mass_m)


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int
    dt: float

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise InvalidConfigError(
                f"grid extent must satisfy x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise InvalidConfigError(f"grid needs n_points >= {MIN_POINTS}, got {self.n_points}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InvalidConfigError(f"grid dt must be positive, got {self.dt}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def shape(self) -> tuple[int]:
        return (self.n_points,)

    @property
    def ndim(self) -> int:
        return 1

    def with_dt(self, dt: float) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.n_points, dt)


@dataclass(frozen=True)
class Grid2D:
    axis_x: Grid1D
    axis_X: Grid1D
    dt: float

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InvalidConfigError(f"grid dt must be positive, got {self.dt}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.axis_x.n_points, self.axis_X.n_points)

    @property
    def ndim(self) -> int:
        return 2

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.axis_x.dx, self.axis_X.dx)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis_x.x, self.axis_X.x, indexing="ij")

    def with_dt(self, dt: float) -> "Grid2D":
        return Grid2D(self.axis_x.with_dt(dt), self.axis_X.with_dt(dt), dt)


Grid = Union[Grid1D, Grid2D]


def make_grid(x_min: float, x_max: float, n_points: int, dt: float) -> Grid1D:
    return Grid1D(float(x_min), float(x_max), int(n_points), float(dt))


def make_grid_2d(x_axis: Grid1D, X_axis: Grid1D, dt: float | None = None) -> Grid2D:
    dt = x_axis.dt if dt is None else dt
    return Grid2D(x_axis.with_dt(dt), X_axis.with_dt(dt), float(dt))


def _freeze(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=complex)
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitude sampled on every node of ``grid`` at ``time``."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        values = _freeze(self.values)
        if values.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {values.shape} do not fit grid of shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("wavefunction contains non-finite values")
        object.__setattr__(self, "values", values)

    def replace(self, values: np.ndarray | None = None, time: float | None = None) -> "WaveFunction":
        return WaveFunction(self.grid,
                            self.values if values is None else values,
                            self.time if time is None else time)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(np.sqrt(integrate(self.density, self.grid)))

    def __mul__(self, scalar):
        return self.replace(values=self.values * scalar)

    __rmul__ = __mul__


def integrate(values: np.ndarray, grid: Grid) -> complex | float:
    """Trapezoidal integral of a nodal field over the whole grid."""
    if grid.ndim == 1:
        return np.trapezoid(values, dx=grid.dx)
    inner = np.trapezoid(values, dx=grid.axis_X.dx, axis=1)
    return np.trapezoid(inner, dx=grid.axis_x.dx)


def normalize(psi: WaveFunction) -> WaveFunction:
    norm = psi.norm()
    if not norm > 0:
        raise DegenerateStateError("cannot normalize a wavefunction with zero norm")
    return psi.replace(values=psi.values / norm)


def _check_same_grid(a: WaveFunction, b: WaveFunction):
    if a.grid.shape != b.grid.shape or a.grid.ndim != b.grid.ndim:
        raise GridMismatchError("wavefunctions live on different grids")
    if a.grid.ndim == 1:
        same = (a.grid.x_min, a.grid.x_max) == (b.grid.x_min, b.grid.x_max)
    else:
        same = all((p.x_min, p.x_max) == (q.x_min, q.x_max)
                   for p, q in ((a.grid.axis_x, b.grid.axis_x), (a.grid.axis_X, b.grid.axis_X)))
    if not same:
        raise GridMismatchError("wavefunctions live on different grids")


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_same_grid(a, b)
    return complex(integrate(np.conj(a.values) * b.values, a.grid))


def _locate(coord: np.ndarray, axis: Grid1D):
    """Cell index, fractional offset and clamp flag of coordinates on an axis."""
    coord = np.asarray(coord, dtype=float)
    clamped = (coord < axis.x_min) | (coord > axis.x_max)
    s = (np.clip(coord, axis.x_min, axis.x_max) - axis.x_min) / axis.dx
    finite = np.isfinite(s)
    i = np.clip(np.floor(np.where(finite, s, 0.0)).astype(int), 0, axis.n_points - 2)
    # nan coordinates (rejected paths) interpolate to nan
    return i, np.where(finite, s - i, np.nan), clamped


def interpolate(values: np.ndarray, grid: Grid, points) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear (1D) or bilinear (2D) interpolation of a nodal field.

    ``points`` is a scalar or array of positions in 1D, or an ``(..., 2)``
    array of ``(x, X)`` pairs in 2D.  Points outside the grid are clamped to
    the boundary; the second return value flags them.
    """
    values = np.asarray(values)
    if grid.ndim == 1:
        i, w, clamped = _locate(points, grid)
        out = (1.0 - w) * values[i] + w * values[i + 1]
        return out, clamped
    points = np.asarray(points, dtype=float)
    i, u, cx = _locate(points[..., 0], grid.axis_x)
    j, w, cX = _locate(points[..., 1], grid.axis_X)
    out = ((1 - u) * (1 - w) * values[i, j] + u * (1 - w) * values[i + 1, j]
           + (1 - u) * w * values[i, j + 1] + u * w * values[i + 1, j + 1])
    return out, cx | cX

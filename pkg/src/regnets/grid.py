"""Uniform periodic grids, complex grid functions, discrete norms and pairings.

Everything else in the package computes on these. Grids live on the box
[-L, L)^n with n in {1, 2} and a power-of-two number of points per axis,
so spectral differentiation and Sobolev norms come from plain FFTs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import GridError, ResolutionError, UnsupportedOrderError

MAX_SOBOLEV_ORDER = 4


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [-L, L)^dim with M points per axis."""

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if not self.half_width > 0:
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.points_per_axis < 8 or not _is_power_of_two(self.points_per_axis):
            raise GridError(
                f"points_per_axis must be a power of two >= 8, got {self.points_per_axis}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_coords(self) -> np.ndarray:
        M = self.points_per_axis
        return -self.half_width + self.spacing * np.arange(M)

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        x = self.axis_coords()
        if self.dim == 1:
            return (x,)
        return np.meshgrid(x, x, indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers xi_k = pi k / L along each axis (fft order)."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)
        return (xi,) * self.dim

    def require_resolves(self, scale: float, factor: float = 8.0):
        """Raise ResolutionError unless spacing <= scale / factor."""
        if self.spacing > scale / factor + 1e-15:
            needed = 2.0 * self.half_width * factor / scale
            m_min = 8
            while m_min < needed:
                m_min *= 2
            raise ResolutionError(
                f"grid spacing {self.spacing:.3g} exceeds {scale:.3g}/{factor:g}; "
                f"need points_per_axis >= {m_min} at half_width {self.half_width:g}",
                required_points=m_min,
            )


class GridFunction:
    """Complex-valued function sampled on a SpatialGrid. Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: SpatialGrid, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape:
            raise GridError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("values contain NaN or Inf")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_profile(cls, grid: SpatialGrid, profile) -> "GridFunction":
        """Sample a callable profile(x) (1d) or profile(x, y) (2d)."""
        return cls(grid, profile(*grid.meshgrid()))

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, np.conj(self.values))

    def abs2(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values) ** 2)

    def boundary_decay(self) -> float:
        """Max |value| on the outermost layer relative to the global max.

        Diagnostic for the periodic-box truncation: inputs should satisfy
        boundary_decay() < 1e-10 for the box to stand in for R^n.
        """
        v = np.abs(self.values)
        peak = v.max()
        if peak == 0.0:
            return 0.0
        if self.grid.dim == 1:
            edge = max(v[0], v[-1])
        else:
            edge = max(v[0, :].max(), v[-1, :].max(), v[:, 0].max(), v[:, -1].max())
        return float(edge / peak)


def _check_same_grid(u, v):
    if u.grid != v.grid:
        raise GridError("operands live on different grids")


@dataclass(frozen=True)
class TestFunction:
    """Real compactly supported test function with a symbolic descriptor.

    Carries the sampled GridFunction plus the generating profile so that
    exact point evaluations (e.g. at measure atoms) remain available.
    """

    __test__ = False  # not a pytest collectible despite the name

    gridfunc: GridFunction
    name: str
    params: dict = field(default_factory=dict)
    profile: object = None  # callable x -> psi(x); (x, y) in 2d

    def __post_init__(self):
        v = self.gridfunc.values
        if np.max(np.abs(v.imag)) > 0:
            raise GridError("test function must be real-valued")
        g = self.gridfunc.grid
        if g.dim == 1:
            edge = max(abs(v[0]), abs(v[-1]))
        else:
            edge = max(
                np.abs(v[0, :]).max(),
                np.abs(v[-1, :]).max(),
                np.abs(v[:, 0]).max(),
                np.abs(v[:, -1]).max(),
            )
        if edge != 0.0:
            raise GridError("test function must vanish on the outermost grid layer")

    @property
    def grid(self) -> SpatialGrid:
        return self.gridfunc.grid

    def __call__(self, *point):
        return self.profile(*point)


def _bump_profile(center, width):
    center = np.atleast_1d(np.asarray(center, dtype=float))

    def profile(*coords):
        arrs = [np.asarray(c, dtype=float) for c in coords]
        r2 = sum((c - ci) ** 2 for c, ci in zip(arrs, center)) / width**2
        scalar = np.ndim(r2) == 0
        r2 = np.atleast_1d(np.asarray(r2, dtype=float))
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, r2, 0.0)))
        out[inside] = vals[inside]
        return float(out[0]) if scalar else out

    return profile


def bump(grid: SpatialGrid, center=0.0, width: float = 1.0) -> TestFunction:
    """Smooth bump with value 1 at its center, supported in a ball of radius width."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if np.max(np.abs(center)) + width >= grid.half_width:
        raise GridError("bump support reaches the box boundary")
    profile = _bump_profile(center, width)
    gf = GridFunction.from_profile(grid, profile)
    return TestFunction(
        gridfunc=gf,
        name="bump",
        params={"center": tuple(center), "width": width},
        profile=profile,
    )


def oscillatory_bump(
    grid: SpatialGrid, center=0.0, width: float = 1.0, wavenumber: float = 3.0
) -> TestFunction:
    """Bump modulated by cos(k x_1): oscillatory member of the test catalog."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if np.max(np.abs(center)) + width >= grid.half_width:
        raise GridError("bump support reaches the box boundary")
    base = _bump_profile(center, width)

    def profile(*coords):
        return base(*coords) * np.cos(wavenumber * (coords[0] - center[0]))

    gf = GridFunction.from_profile(grid, profile)
    return TestFunction(
        gridfunc=gf,
        name="oscillatory_bump",
        params={"center": tuple(center), "width": width, "wavenumber": wavenumber},
        profile=profile,
    )


def linear_bump(grid: SpatialGrid, center=0.0, width: float = 1.0) -> TestFunction:
    """x_1 times a bump: odd test function, useful for symmetry checks."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    base = _bump_profile(center, width)

    def profile(*coords):
        return base(*coords) * (coords[0] - center[0])

    gf = GridFunction.from_profile(grid, profile)
    return TestFunction(
        gridfunc=gf,
        name="linear_bump",
        params={"center": tuple(center), "width": width},
        profile=profile,
    )


# ---------------------------------------------------------------------------
# norms, derivatives, pairings


def norm_l2(u: GridFunction) -> float:
    """Discrete L2 norm (cell volume weighted)."""
    return float(np.sqrt(u.grid.cell_volume * np.sum(np.abs(u.values) ** 2)))


def norm_linf(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))


@lru_cache(maxsize=64)
def _sobolev_weights(dim: int, points: int, spacing: float, k: int):
    """Sum over multi-indices |alpha| <= k of prod xi_i^(2 alpha_i)."""
    xi = 2.0 * np.pi * np.fft.fftfreq(points, d=spacing)
    if dim == 1:
        axes = (xi,)
    else:
        axes = np.meshgrid(xi, xi, indexing="ij")
    w = np.zeros((points,) * dim)
    for alpha in product(range(k + 1), repeat=dim):
        if sum(alpha) > k:
            continue
        term = np.ones_like(w)
        for ax, a in zip(axes, alpha):
            if a:
                term = term * ax ** (2 * a)
        w += term
    w.setflags(write=False)
    return w


def norm_hk(u: GridFunction, k: int) -> float:
    """Discrete Sobolev norm: spectral derivatives up to total order k <= 4."""
    if k < 0 or k > MAX_SOBOLEV_ORDER:
        raise UnsupportedOrderError(f"Sobolev order {k} not supported (0 <= k <= 4)")
    if k == 0:
        return norm_l2(u)
    g = u.grid
    F = np.fft.fftn(u.values)
    w = _sobolev_weights(g.dim, g.points_per_axis, g.spacing, k)
    total = np.sum(w * np.abs(F) ** 2)
    # Parseval: sum |u|^2 = sum |F|^2 / M^n
    return float(np.sqrt(g.cell_volume * total / g.points_per_axis**g.dim))


def norm_h_minus1(u: GridFunction) -> float:
    """Spectral H^-1 norm: (1 + |xi|^2)^(-1/2) weight in frequency."""
    g = u.grid
    F = np.fft.fftn(u.values)
    w = _sobolev_weights(g.dim, g.points_per_axis, g.spacing, 1)
    total = np.sum(np.abs(F) ** 2 / w)
    return float(np.sqrt(g.cell_volume * total / g.points_per_axis**g.dim))


def derivative(u: GridFunction, axis: int = 0, order: int = 1) -> GridFunction:
    """Fourier-collocation derivative along one axis; exact for band-limited u."""
    if order not in (1, 2):
        raise UnsupportedOrderError(f"derivative order must be 1 or 2, got {order}")
    g = u.grid
    if axis < 0 or axis >= g.dim:
        raise GridError(f"axis {axis} out of range for dim {g.dim}")
    xi = 2.0 * np.pi * np.fft.fftfreq(g.points_per_axis, d=g.spacing)
    mult = (1j * xi) ** order
    if order % 2 == 1:
        mult[g.points_per_axis // 2] = 0.0  # drop the unsigned Nyquist mode
    shape = [1] * g.dim
    shape[axis] = g.points_per_axis
    F = np.fft.fft(u.values, axis=axis)
    out = np.fft.ifft(mult.reshape(shape) * F, axis=axis)
    return GridFunction(g, out)


def pair(u: GridFunction, psi: TestFunction) -> complex:
    """Distributional pairing <u, psi> = cell_volume * sum(u * psi), no conjugation."""
    _check_same_grid(u, psi.gridfunc)
    return complex(u.grid.cell_volume * np.sum(u.values * psi.gridfunc.values.real))

"""Uniform space-time grids, discrete operators, and weighted norms.

Fields live on tensor grids (t runs along axis 0, x along axis 1).  All
stencils are the plain second-order central ones, with second-order one-sided
differences at edges for first derivatives; the wave operator zeroes its
boundary ring instead (all probes keep their supports well inside).

``apply_box`` is the *physical* wave operator box = d_tt - Lap + q.  The
weighted-identity machinery elsewhere works with the Lorentzian Laplacian,
which is exactly ``-apply_box`` at q = 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridTooSmall, NonFiniteDetected
from .geometry import GeometryConfig, Region, region_mask, volume_weight

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "apply_box",
    "gradient",
    "norm",
    "integrate",
]

_MAGIC = b"CLB1"


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid: nt x nx nodes over [t_min,t_max] x [x_min,x_max].

    Point counts must be odd (so a t = 0 row exists on symmetric spans and
    refinement by nt -> 2nt-1 stays odd) and at least 33 per axis; smaller
    grids cannot carry the estimates' stencils plus support margins and are
    refused with GridTooSmall.
    """

    t_min: float
    t_max: float
    x_min: float
    x_max: float
    nt: int
    nx: int

    def __post_init__(self):
        if self.nt < 33 or self.nx < 33 or self.nt % 2 == 0 or self.nx % 2 == 0:
            raise GridTooSmall(
                f"grids must be odd and >= 33 points per axis, got "
                f"nt={self.nt}, nx={self.nx}"
            )
        if not (self.t_max > self.t_min and self.x_max > self.x_min):
            raise ValueError("grid extents must be increasing")

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.t, self.x, indexing="ij")

    def refined(self) -> "GridSpec":
        """Halve both spacings (nt -> 2nt-1, nx -> 2nx-1), same extents."""
        return GridSpec(
            self.t_min, self.t_max, self.x_min, self.x_max,
            2 * self.nt - 1, 2 * self.nx - 1,
        )

    def as_dict(self) -> dict:
        return {
            "t_min": self.t_min, "t_max": self.t_max,
            "x_min": self.x_min, "x_max": self.x_max,
            "nt": self.nt, "nx": self.nx,
        }


def _check_values(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != (grid.nt, grid.nx):
        raise ValueError(
            f"field shape {values.shape} does not match grid "
            f"({grid.nt}, {grid.nx})"
        )
    if not np.isfinite(values).all():
        raise NonFiniteDetected("field contains NaN or inf")
    return values


@dataclass
class ScalarField:
    """Array of real (or complex) samples bound to its grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values)

    @staticmethod
    def from_function(grid: GridSpec, fn) -> "ScalarField":
        T, X = grid.mesh()
        return ScalarField(grid, np.asarray(fn(T, X)))

    @staticmethod
    def zeros(grid: GridSpec) -> "ScalarField":
        return ScalarField(grid, np.zeros((grid.nt, grid.nx)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    # -- serialization ------------------------------------------------------

    def to_binary(self, path) -> None:
        """Flat binary dump: 4-byte magic, complex flag, nt, nx, extents,
        then the row-major samples (float64 or complex128)."""
        is_complex = np.iscomplexobj(self.values)
        header = _MAGIC + struct.pack(
            "<Iqqdddd",
            int(is_complex), self.grid.nt, self.grid.nx,
            self.grid.t_min, self.grid.t_max, self.grid.x_min, self.grid.x_max,
        )
        data = np.ascontiguousarray(
            self.values, dtype=np.complex128 if is_complex else np.float64
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(data.tobytes())

    @staticmethod
    def from_binary(path) -> "ScalarField":
        raw = Path(path).read_bytes()
        if raw[:4] != _MAGIC:
            raise ValueError(f"{path}: not a field dump (bad magic)")
        flag, nt, nx, t0, t1, x0, x1 = struct.unpack_from("<Iqqdddd", raw, 4)
        grid = GridSpec(t0, t1, x0, x1, nt, nx)
        off = 4 + struct.calcsize("<Iqqdddd")
        dtype = np.complex128 if flag else np.float64
        values = np.frombuffer(raw, dtype=dtype, offset=off).reshape(nt, nx)
        return ScalarField(grid, values.copy())

    def to_csv(self, path) -> None:
        """Matrix dump for eyeballing: one grid row per line, 17 significant
        digits, '.' decimal separator regardless of locale."""
        g = self.grid
        header = (
            f"nt={g.nt} nx={g.nx} t=[{g.t_min:.17g},{g.t_max:.17g}] "
            f"x=[{g.x_min:.17g},{g.x_max:.17g}]"
        )
        np.savetxt(path, self.values, fmt="%.17g", delimiter=",", header=header)


@dataclass
class VectorField:
    """Pair of component fields (t-component, x-component) on one grid."""

    grid: GridSpec
    comp_t: np.ndarray
    comp_x: np.ndarray

    def __post_init__(self):
        self.comp_t = _check_values(self.grid, self.comp_t)
        self.comp_x = _check_values(self.grid, self.comp_x)


def gradient(u: ScalarField) -> VectorField:
    """(d_t u, d_x u): central in the interior, one-sided order 2 at edges."""
    gt, gx = np.gradient(u.values, u.grid.dt, u.grid.dx, edge_order=2)
    return VectorField(u.grid, gt, gx)


def divergence(cfg: GeometryConfig, X: VectorField) -> ScalarField:
    """d_t X^t + d_x X^x, plus (n-1)/r X^x in radial mode.

    Central differences: for compactly supported X the interior sum of the
    cartesian part telescopes to zero exactly.
    """
    g = X.grid
    dt_part = np.gradient(X.comp_t, g.dt, axis=0, edge_order=2)
    dx_part = np.gradient(X.comp_x, g.dx, axis=1, edge_order=2)
    vals = dt_part + dx_part
    if cfg.mode == "radial-nd" and cfg.n > 1:
        vals = vals + (cfg.n - 1) / g.x[None, :] * X.comp_x
    return ScalarField(g, vals)


def apply_box(
    cfg: GeometryConfig, u: ScalarField, q: ScalarField | None = None
) -> ScalarField:
    """The wave operator (d_tt - Lap + q) u with a zeroed boundary ring.

    In radial mode Lap = d_rr + (n-1)/r d_r.  Linear in u to machine
    precision; second-order accurate in both spacings.
    """
    g = u.grid
    if g.nt < 5 or g.nx < 5:
        raise GridTooSmall("apply_box needs at least 5 points per axis")
    if cfg.mode == "radial-nd" and g.x_min <= 0.0:
        raise ValueError("radial grids require r_min > 0")
    v = u.values
    out = np.zeros_like(v)
    dtt = (v[2:, 1:-1] - 2.0 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / g.dt**2
    dxx = (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / g.dx**2
    lap = dxx
    if cfg.mode == "radial-nd" and cfg.n > 1:
        dr = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * g.dx)
        lap = lap + (cfg.n - 1) / g.x[None, 1:-1] * dr
    out[1:-1, 1:-1] = dtt - lap
    if q is not None:
        out[1:-1, 1:-1] += q.values[1:-1, 1:-1] * v[1:-1, 1:-1]
    return ScalarField(g, out)


def _weights(
    cfg: GeometryConfig, grid: GridSpec, region: Region | None
) -> np.ndarray:
    cell = grid.dt * grid.dx * volume_weight(cfg, grid.x)[None, :]
    if region is None:
        return np.broadcast_to(cell, (grid.nt, grid.nx))
    return region_mask(cfg, region, grid.t, grid.x) * cell


def integrate(
    cfg: GeometryConfig,
    values: np.ndarray,
    grid: GridSpec,
    region: Region | None = None,
) -> float:
    """Signed quadrature of a sample array over the grid (or a region)."""
    w = _weights(cfg, grid, region)
    return complex(np.sum(w * values)).real if np.iscomplexobj(values) else float(
        np.sum(w * values)
    )


def norm(
    cfg: GeometryConfig,
    u: ScalarField | VectorField,
    region: Region | None = None,
    kind: str = "L2",
) -> float:
    """Weighted norm over the grid or a region.

    Kinds: "L2"; "H1" = (L2^2 + |full gradient|_L2^2)^(1/2); "H1x" drops the
    time derivative (the spatial-regularity norm used by the low-frequency
    propagation estimates).  Vector fields only support L2 (of the Euclidean
    component magnitude), which makes norm(u, H1)^2 = norm(u, L2)^2 +
    norm(gradient(u), L2)^2 hold by construction.
    """
    if isinstance(u, VectorField):
        if kind != "L2":
            raise ValueError("vector fields only carry the L2 norm")
        w = _weights(cfg, u.grid, region)
        return float(
            np.sqrt(np.sum(w * (np.abs(u.comp_t) ** 2 + np.abs(u.comp_x) ** 2)))
        )
    w = _weights(cfg, u.grid, region)
    l2sq = np.sum(w * np.abs(u.values) ** 2)
    if kind == "L2":
        return float(np.sqrt(l2sq))
    grad = gradient(u)
    if kind == "H1":
        gsq = np.sum(w * (np.abs(grad.comp_t) ** 2 + np.abs(grad.comp_x) ** 2))
        return float(np.sqrt(l2sq + gsq))
    if kind == "H1x":
        gsq = np.sum(w * np.abs(grad.comp_x) ** 2)
        return float(np.sqrt(l2sq + gsq))
    raise ValueError(f"unknown norm kind {kind!r}")

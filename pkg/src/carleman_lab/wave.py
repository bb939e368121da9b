"""Forward solver for (box + q) u = f and finite-speed diagnostics.

An explicit three-level leapfrog marches Cauchy data at t = 0 toward both
ends of the time grid, because the laboratory's grids are symmetric about
t = 0 and the wave equation is time-reversible.  The scheme is chosen for
one structural property the rest of the package leans on: at CFL <= 1 its
stencil moves information exactly one cell per step, so the solution is
*bitwise* zero outside the numerical domain of dependence — finite speed of
propagation holds on the grid, not just up to discretization error.

The spatial operator is assembled in self-adjoint (flux) form.  In radial
mode that is r^(1-n) d_r(r^(n-1) d_r u) with half-node coefficients, which
keeps the discrete energy

    E^(m+1/2) = 1/2 ||(u^(m+1) - u^m)/dt||^2
                + 1/2 <flux d u^(m+1), d u^m> + 1/2 <q u^(m+1), u^m>

an exact invariant of the march (up to roundoff) for f = 0, and gives a
Neumann-compatible closure at r_min.  Sources enter with trapezoidal
half-step weighting, (f^(m-1) + 2 f^m + f^(m+1))/4, preserving order 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CflViolation, NonFiniteDetected
from .geometry import GeometryConfig, bump_profile, volume_weight
from .grid_ops import GridSpec, ScalarField, apply_box, gradient

__all__ = [
    "CauchyProblem",
    "EnsembleSpec",
    "ManufacturedSolution",
    "solve",
    "energy_series",
    "energy_drift",
    "finite_speed_leakage",
    "dod_violation",
    "manufacture_solutions",
    "RECIPES",
]

RECIPES = ("plane-wave", "focused-bump", "random-band-limited", "far-support")

_BOUNDARIES = ("fixed", "periodic")


def _time_origin(grid: GridSpec) -> int:
    i0 = int(np.argmin(np.abs(grid.t)))
    if abs(grid.t[i0]) > 1e-9 * max(abs(grid.t_min), abs(grid.t_max)):
        raise ValueError(
            "Cauchy data lives at t = 0; the time grid has no such row "
            f"(closest is t = {grid.t[i0]:.6g})"
        )
    return i0


@dataclass(frozen=True)
class CauchyProblem:
    """Cauchy data for the wave operator with a time-independent potential.

    q is stored as a spatial slice, which makes time-independence true by
    construction.  ``boundary="fixed"`` freezes the two spatial edge columns
    at their initial values (zero for compactly supported data — the
    intended use: the grid must contain the data's propagation cone);
    ``boundary="periodic"`` identifies the first and last columns, for
    translation-invariant exact solutions.  In radial mode the inner edge is
    closed with a zero-flux (Neumann) face instead.
    """

    grid: GridSpec
    u0: np.ndarray
    u1: np.ndarray
    q: np.ndarray | None = None
    f: ScalarField | None = None
    cfl: float = 0.9
    boundary: str = "fixed"

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise CflViolation(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.grid.dt > self.cfl * self.grid.dx * (1.0 + 1e-12):
            raise CflViolation(
                f"dt = {self.grid.dt:.6g} exceeds cfl * dx = "
                f"{self.cfl * self.grid.dx:.6g}"
            )
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")
        for name, arr in (("u0", self.u0), ("u1", self.u1)):
            a = np.asarray(arr)
            if a.shape != (self.grid.nx,):
                raise ValueError(
                    f"{name} must have shape ({self.grid.nx},), got {a.shape}"
                )
            if not np.all(np.isfinite(a)):
                raise NonFiniteDetected(f"{name} contains non-finite values")
        if self.q is not None:
            qa = np.asarray(self.q)
            if qa.shape != (self.grid.nx,):
                raise ValueError(
                    f"q must be a spatial slice of shape ({self.grid.nx},), "
                    f"got {qa.shape}"
                )
        if self.f is not None and self.f.grid != self.grid:
            raise ValueError("source grid does not match the problem grid")
        _time_origin(self.grid)


def _face_weights(cfg: GeometryConfig, grid: GridSpec, boundary: str) -> np.ndarray:
    """Volume weights at inter-node half-faces (flux coefficients)."""
    if boundary == "periodic":
        # faces between consecutive columns, wrapping the seam; cartesian only
        return np.ones(grid.nx - 1)
    x = grid.x
    if cfg.mode == "cartesian-1d":
        return np.ones(grid.nx - 1)
    half = 0.5 * (x[:-1] + x[1:])
    return volume_weight(cfg, half)


def _make_laplacian(cfg: GeometryConfig, grid: GridSpec, boundary: str):
    """Self-adjoint discrete Laplacian as a row closure u -> Lap u."""
    dx2 = grid.dx**2
    if boundary == "periodic":
        if cfg.mode != "cartesian-1d":
            raise ValueError("periodic boundaries are cartesian-only")

        def lap_periodic(u: np.ndarray) -> np.ndarray:
            # columns 0 .. nx-2 are the independent unknowns
            core = u[:-1]
            out = (np.roll(core, -1) - 2.0 * core + np.roll(core, 1)) / dx2
            return np.concatenate([out, out[:1]])

        return lap_periodic

    w_face = _face_weights(cfg, grid, boundary)
    w_node = volume_weight(cfg, grid.x)

    def lap_fixed(u: np.ndarray) -> np.ndarray:
        flux = w_face * (u[1:] - u[:-1])  # at faces j+1/2
        out = np.zeros_like(u)
        out[1:-1] = (flux[1:] - flux[:-1]) / (w_node[1:-1] * dx2)
        if cfg.mode == "radial-nd":
            # zero-flux inner face: only the outward face contributes
            out[0] = flux[0] / (w_node[0] * dx2)
        return out

    return lap_fixed


def solve(cfg: GeometryConfig, problem: CauchyProblem) -> ScalarField:
    """March the data through the full space-time grid.

    Second-order throughout: a Taylor half-start from the t = 0 row, then
    the three-level update in both time directions.  Raises
    NonFiniteDetected if the march blows up (the CFL guard makes this a
    should-not-happen for sane potentials).
    """
    g = problem.grid
    i0 = _time_origin(g)
    lap = _make_laplacian(cfg, g, problem.boundary)
    q = np.zeros(g.nx) if problem.q is None else np.asarray(problem.q, dtype=float)
    dt2 = g.dt**2

    if problem.f is None:
        def f_row(m: int) -> float:
            return 0.0
    else:
        f_vals = problem.f.values

        def f_row(m: int):
            return f_vals[m]

    def accel(u: np.ndarray, m: int, half_weighted: bool) -> np.ndarray:
        if half_weighted:
            lo = max(m - 1, 0)
            hi = min(m + 1, g.nt - 1)
            src = (f_row(lo) + 2.0 * f_row(m) + f_row(hi)) / 4.0
        else:
            src = f_row(m)
        return lap(u) - q * u + src

    u0 = np.asarray(problem.u0, dtype=float)
    u1 = np.asarray(problem.u1, dtype=float)
    U = np.zeros((g.nt, g.nx))
    U[i0] = u0
    a0 = accel(u0, i0, half_weighted=False)
    if i0 + 1 < g.nt:
        U[i0 + 1] = u0 + g.dt * u1 + 0.5 * dt2 * a0
    if i0 - 1 >= 0:
        U[i0 - 1] = u0 - g.dt * u1 + 0.5 * dt2 * a0

    def enforce_boundary(row: np.ndarray) -> None:
        if problem.boundary == "periodic":
            row[-1] = row[0]
        else:
            if cfg.mode == "cartesian-1d":
                row[0] = u0[0]
            # radial: inner edge evolves through its zero-flux face
            row[-1] = u0[-1]

    enforce_boundary(U[i0])
    if i0 + 1 < g.nt:
        enforce_boundary(U[i0 + 1])
    if i0 - 1 >= 0:
        enforce_boundary(U[i0 - 1])

    for m in range(i0 + 1, g.nt - 1):
        U[m + 1] = 2.0 * U[m] - U[m - 1] + dt2 * accel(U[m], m, True)
        enforce_boundary(U[m + 1])
    for m in range(i0 - 1, 0, -1):
        U[m - 1] = 2.0 * U[m] - U[m + 1] + dt2 * accel(U[m], m, True)
        enforce_boundary(U[m - 1])

    if not np.all(np.isfinite(U)):
        raise NonFiniteDetected(
            "leapfrog march produced non-finite values; check the potential's "
            "magnitude against the CFL margin"
        )
    return ScalarField(g, U)


# ---------------------------------------------------------------------------
# Energy diagnostics
# ---------------------------------------------------------------------------

def energy_series(
    cfg: GeometryConfig,
    u: ScalarField,
    q: np.ndarray | None = None,
    boundary: str = "fixed",
) -> np.ndarray:
    """The leapfrog's staggered energy at every half-step interface.

    This is the exact discrete invariant of the scheme (conserved to
    roundoff for f = 0, any sign of q), not the continuum energy sampled on
    the grid — the latter oscillates at O(dt^2) even for a perfect march.
    """
    g = u.grid
    U = u.values
    w_node = volume_weight(cfg, g.x)
    w_face = _face_weights(cfg, g, boundary)
    qv = np.zeros(g.nx) if q is None else np.asarray(q, dtype=float)

    up, um = U[1:], U[:-1]
    if boundary == "periodic":
        # the last column duplicates the first; sum over unique columns only
        kinetic = 0.5 * np.sum(((up - um)[:, :-1] / g.dt) ** 2, axis=1) * g.dx
        dup = np.diff(up[:, :-1], axis=1, append=up[:, :1])
        dum = np.diff(um[:, :-1], axis=1, append=um[:, :1])
        potential = 0.5 * np.sum(dup * dum, axis=1) / g.dx
        zeroth = 0.5 * np.sum((qv * up * um)[:, :-1], axis=1) * g.dx
        return kinetic + potential + zeroth
    kinetic = 0.5 * np.sum(w_node * ((up - um) / g.dt) ** 2, axis=1) * g.dx
    dup = np.diff(up, axis=1)
    dum = np.diff(um, axis=1)
    potential = 0.5 * np.sum(w_face * dup * dum, axis=1) / g.dx
    zeroth = 0.5 * np.sum(w_node * qv * up * um, axis=1) * g.dx
    return kinetic + potential + zeroth


def energy_drift(
    cfg: GeometryConfig,
    u: ScalarField,
    q: np.ndarray | None = None,
    boundary: str = "fixed",
) -> float:
    """Worst relative drift of the staggered energy across the march."""
    e = energy_series(cfg, u, q, boundary)
    if e.size == 0 or e[0] == 0.0:
        return 0.0
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


# ---------------------------------------------------------------------------
# Finite speed of propagation
# ---------------------------------------------------------------------------

def finite_speed_leakage(
    cfg: GeometryConfig, u: ScalarField, initial_support_radius: float
) -> float:
    """Fraction of solution energy outside the cone {r <= radius + |t|}.

    The density is u_t^2 + u_x^2 + u^2 (the zeroth-order term catches the
    displacement plateau a 1-D packet leaves behind).  For data honoring the
    declared radius this measures the scheme's superluminal tail, which
    decays spectrally; anything above solver error means the precondition
    was violated.
    """
    g = u.grid
    tt, xx = g.mesh()
    grads = gradient(u)
    density = (grads.comp_t**2 + grads.comp_x**2 + u.values**2) * volume_weight(
        cfg, g.x
    )[None, :]
    total = float(density.sum())
    if total == 0.0:
        return 0.0
    inside = cfg.radius(xx) <= initial_support_radius + np.abs(tt)
    outside_mass = float(density[~inside].sum())
    return outside_mass / total


def dod_violation(u: ScalarField, support_mask: np.ndarray) -> float:
    """Worst |u| outside the numerical domain of dependence (exactly 0 at CFL <= 1).

    support_mask flags the spatial cells carrying nonzero Cauchy data; the
    admissible set grows by one cell per time step away from the t = 0 row,
    because the three-point stencil moves information exactly that fast.
    """
    g = u.grid
    support = np.asarray(support_mask, dtype=bool)
    if support.shape != (g.nx,):
        raise ValueError(f"support mask must have shape ({g.nx},)")
    i0 = _time_origin(g)
    worst = 0.0

    def sweep(rows) -> float:
        bad = 0.0
        allowed = support.copy()
        for m in rows:
            grown = allowed.copy()
            grown[1:] |= allowed[:-1]
            grown[:-1] |= allowed[1:]
            allowed = grown
            row = u.values[m]
            if not np.all(allowed):
                bad = max(bad, float(np.abs(row[~allowed]).max()))
        return bad

    worst = max(worst, sweep(range(i0 + 1, g.nt)))
    worst = max(worst, sweep(range(i0 - 1, -1, -1)))
    row0 = u.values[i0]
    if not np.all(support):
        worst = max(worst, float(np.abs(row0[~support]).max()))
    return worst


# ---------------------------------------------------------------------------
# Manufactured ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    """Seeded recipe for a family of (solution, residual) pairs.

    Recipes: "plane-wave" (exact analytic family, sampled not solved),
    "focused-bump" (compact packets launched toward the region's center),
    "random-band-limited" (windowed low-mode Cauchy data), "far-support"
    (data placed outside radius 2 * r_tilde, so the solution must vanish on
    the central diamond by finite speed).  Residuals are recorded with the
    same discrete operator the probes use, f = box u + q u on the grid.
    """

    kind: str
    count: int
    seed: int
    grid: GridSpec
    q: np.ndarray | None = None
    cfl: float = 0.9
    amplitude: tuple[float, float] = (0.5, 2.0)
    support_radius: float | None = None

    def __post_init__(self):
        if self.kind not in RECIPES:
            raise ValueError(f"recipe must be one of {RECIPES}, got {self.kind!r}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


@dataclass
class ManufacturedSolution:
    u: ScalarField
    f: ScalarField
    kind: str
    index: int
    meta: dict = field(default_factory=dict)


def _record_residual(
    cfg: GeometryConfig, u: ScalarField, q: np.ndarray | None
) -> ScalarField:
    q_field = None
    if q is not None:
        q_field = ScalarField(
            u.grid, np.broadcast_to(np.asarray(q, float), u.values.shape).copy()
        )
    return apply_box(cfg, u, q_field)


def manufacture_solutions(
    cfg: GeometryConfig, spec: EnsembleSpec
) -> list[ManufacturedSolution]:
    """Generate the seeded ensemble; identical seeds give bitwise-equal output."""
    if cfg.mode != "cartesian-1d":
        raise ValueError("solution recipes are built for cartesian-1d mode")
    rng = np.random.default_rng(spec.seed)
    g = spec.grid
    out: list[ManufacturedSolution] = []
    for index in range(spec.count):
        amp = float(rng.uniform(*spec.amplitude))
        if spec.kind == "plane-wave":
            freq = float(rng.uniform(1.0, 3.0))
            speed = float(rng.choice([-1.0, 1.0]))
            phase = float(rng.uniform(0.0, 2.0 * math.pi))
            tt, xx = g.mesh()
            u = ScalarField(g, amp * np.sin(freq * (xx - speed * tt) + phase))
            meta = {"freq": freq, "speed": speed, "phase": phase, "amp": amp}
        else:
            u0, u1, meta = _draw_cauchy_data(cfg, spec, rng, amp)
            problem = CauchyProblem(
                grid=g, u0=u0, u1=u1, q=spec.q, cfl=spec.cfl
            )
            u = solve(cfg, problem)
            meta["amp"] = amp
        f = _record_residual(cfg, u, spec.q)
        out.append(ManufacturedSolution(u=u, f=f, kind=spec.kind, index=index, meta=meta))
    return out


def _draw_cauchy_data(
    cfg: GeometryConfig,
    spec: EnsembleSpec,
    rng: np.random.Generator,
    amp: float,
) -> tuple[np.ndarray, np.ndarray, dict]:
    g = spec.grid
    x = g.x
    t_span = max(abs(g.t_min), abs(g.t_max))
    if spec.kind == "focused-bump":
        width = float(rng.uniform(0.15, 0.35))
        side = float(rng.choice([-1.0, 1.0]))
        center = side * float(rng.uniform(0.8, 1.2)) * cfg.r_tilde
        # keep the cone inside the grid: center +/- (width + t span) + margin
        reach = abs(center) + width + t_span + 4 * g.dx
        if reach > min(abs(g.x_min), abs(g.x_max)):
            raise ValueError(
                "grid too narrow for the focused-bump cone; widen the x extent"
            )
        u0 = amp * bump_profile((x - center) / width)
        # launch toward the center: rightward packet for center < 0
        direction = -side
        du0 = np.gradient(u0, g.dx, edge_order=2)
        u1 = -direction * du0
        meta = {"center": center, "width": width, "direction": direction}
    elif spec.kind == "random-band-limited":
        width = float(rng.uniform(0.5, 1.0)) * cfg.r_tilde
        center = float(rng.uniform(-0.5, 0.5)) * cfg.r_tilde
        window = bump_profile((x - center) / (2.0 * width))
        n_modes = int(rng.integers(2, 6))
        u0 = np.zeros_like(x)
        u1 = np.zeros_like(x)
        for _ in range(n_modes):
            k = float(rng.uniform(0.5, 4.0))
            p = float(rng.uniform(0.0, 2.0 * math.pi))
            c0 = float(rng.normal(0.0, 1.0))
            c1 = float(rng.normal(0.0, 1.0))
            u0 += c0 * np.cos(k * x + p)
            u1 += c1 * k * np.sin(k * x + p)
        scale = float(np.abs(u0 * window).max())
        norm_factor = amp / scale if scale > 0 else amp
        u0 = u0 * window * norm_factor
        u1 = u1 * window * norm_factor
        meta = {"center": center, "width": width, "modes": n_modes}
    elif spec.kind == "far-support":
        exclusion = (
            spec.support_radius
            if spec.support_radius is not None
            else 2.0 * cfg.r_tilde
        )
        width = float(rng.uniform(0.15, 0.3))
        side = float(rng.choice([-1.0, 1.0]))
        lo = exclusion + width + 2 * g.dx
        hi = min(abs(g.x_min), abs(g.x_max)) - width - t_span - 4 * g.dx
        if hi <= lo:
            raise ValueError(
                "grid too narrow to place far-support data outside radius "
                f"{exclusion:g}; widen the x extent"
            )
        center = side * float(rng.uniform(lo, hi))
        u0 = amp * bump_profile((x - center) / width)
        u1 = -float(rng.choice([-1.0, 1.0])) * np.gradient(u0, g.dx, edge_order=2)
        meta = {"center": center, "width": width, "exclusion": exclusion}
    else:  # pragma: no cover — guarded by EnsembleSpec
        raise ValueError(spec.kind)
    return u0, u1, meta

"""Space-time geometry: the hyperbolic foliation, its regions, and cutoffs.

Everything here is exact closed-form algebra on the foliation

    phi(t, x) = (-t**2 + (r - r1)**2) / 2,      r = |x|,

whose level sets foliate the diamond-shaped region where unique continuation
is quantified.  Two coordinate modes are supported:

* ``cartesian-1d`` — one space dimension, x runs over the full line and
  r = |x|;
* ``radial-nd`` — n >= 1 space dimensions reduced to the radial coordinate
  r > 0, with the volume element c_n r**(n-1).

The derived radii are fixed multiples of the configured scale ``r_tilde``:
r1 = 1.5 r_tilde (center of the foliation) and r0_inner = (13/14) r_tilde
(inner radius above which the quadratic-form coercivity constants hold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DegenerateBand, EmptyRegion

__all__ = [
    "GeometryConfig",
    "Region",
    "CutoffSpec",
    "smooth_cutoff",
    "bump_profile",
    "foliation_phi",
    "grad_phi",
    "region_mask",
    "region_measure",
    "volume_weight",
    "sphere_area",
]

MODES = ("cartesian-1d", "radial-nd")

# Relative sub-grid offsets used for fractional boundary-cell weights:
# 4 points per axis, 4**2 = 16 per (t, x) cell.
_SUB = (np.arange(4) + 0.5) / 4.0 - 0.5


@dataclass(frozen=True)
class GeometryConfig:
    """Fixed geometric data for one laboratory setup.

    Parameters
    ----------
    r0:
        Scale bound, > 1.  All radii live in [1/r0, r0].
    r_tilde:
        The base radius (the theorem's R); must lie in [1/r0, r0].
    n:
        Space dimension, >= 1.
    mode:
        "cartesian-1d" or "radial-nd".  Cartesian mode forces n = 1.
    """

    r0: float = 2.0
    r_tilde: float = 1.0
    n: int = 1
    mode: str = "cartesian-1d"

    def __post_init__(self):
        if not self.r0 > 1.0:
            raise ValueError(f"r0 must exceed 1, got {self.r0}")
        if not (1.0 / self.r0 <= self.r_tilde <= self.r0):
            raise ValueError(
                f"r_tilde={self.r_tilde} outside [1/r0, r0] = "
                f"[{1.0 / self.r0}, {self.r0}]"
            )
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "cartesian-1d" and self.n != 1:
            raise ValueError("cartesian-1d mode requires n = 1")

    @property
    def r1(self) -> float:
        """Center radius of the foliation, exactly 1.5 * r_tilde."""
        return 1.5 * self.r_tilde

    @property
    def r0_inner(self) -> float:
        """Inner coercivity radius, exactly (13/14) * r_tilde."""
        return (13.0 / 14.0) * self.r_tilde

    def radius(self, x):
        """Radial coordinate of the spatial variable in either mode."""
        x = np.asarray(x, dtype=float)
        return np.abs(x) if self.mode == "cartesian-1d" else x

    def as_dict(self) -> dict:
        return {
            "r0": self.r0,
            "r_tilde": self.r_tilde,
            "n": self.n,
            "mode": self.mode,
            "r1": self.r1,
            "r0_inner": self.r0_inner,
        }


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (c_n in c_n r^(n-1) dr).

    n = 1 gives 2 (two half-lines), n = 2 gives 2*pi, n = 3 gives 4*pi.
    """
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def volume_weight(cfg: GeometryConfig, x) -> np.ndarray:
    """Pointwise volume element: 1 in cartesian mode, c_n r^(n-1) radial."""
    x = np.asarray(x, dtype=float)
    if cfg.mode == "cartesian-1d":
        return np.ones_like(x)
    return sphere_area(cfg.n) * cfg.radius(x) ** (cfg.n - 1)


def foliation_phi(cfg: GeometryConfig, t, x) -> np.ndarray:
    """Evaluate phi = (-t^2 + (r - r1)^2)/2 at (t, x); broadcasts."""
    t = np.asarray(t, dtype=float)
    r = cfg.radius(x)
    return 0.5 * (-(t**2) + (r - cfg.r1) ** 2)


def grad_phi(cfg: GeometryConfig, t, x) -> tuple[np.ndarray, np.ndarray]:
    """Contravariant Minkowski gradient of phi: components (t, r - r1).

    With the metric -dt^2 + dx^2 the raised gradient of phi is
    (-d_t phi, d_x phi) = (t, r - r1); in cartesian mode the spatial
    component picks up sign(x) from r = |x|.  The Minkowski square of the
    result equals 2*phi identically (the eikonal identity).
    """
    t = np.asarray(t, dtype=float)
    r = cfg.radius(x)
    comp_t = np.broadcast_to(t, np.broadcast_shapes(t.shape, r.shape)).copy()
    comp_x = r - cfg.r1
    if cfg.mode == "cartesian-1d":
        # Direction of increasing r; take +1 at x = 0 so the Minkowski
        # square of the result equals 2*phi on every grid node.
        xv = np.asarray(x, dtype=float)
        comp_x = comp_x * np.where(xv >= 0.0, 1.0, -1.0)
    comp_x = np.broadcast_to(comp_x, comp_t.shape).copy()
    return comp_t, comp_x


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """A space-time region, closed under the membership predicate only.

    Kinds
    -----
    diamond        {r + |t| < 3R/2} ∩ {|t| < R/2}, R = r_tilde
    cylinder       {r < R} x {|t| < R/2}
    phi-superlevel {phi > gamma}
    diamond-delta  diamond ∩ {phi > delta^2}   (squared-level convention)
    omega-delta    {phi > delta}               (linear-level convention)
    annulus        {r_lo < r < r_hi}, all t
    """

    kind: str
    gamma: float = 0.0
    delta: float = 0.0
    r_lo: float = 0.0
    r_hi: float = 0.0

    @staticmethod
    def diamond() -> "Region":
        return Region("diamond")

    @staticmethod
    def cylinder() -> "Region":
        return Region("cylinder")

    @staticmethod
    def phi_superlevel(gamma: float) -> "Region":
        return Region("phi-superlevel", gamma=float(gamma))

    @staticmethod
    def diamond_delta(delta: float) -> "Region":
        return Region("diamond-delta", delta=float(delta))

    @staticmethod
    def omega_delta(delta: float) -> "Region":
        return Region("omega-delta", delta=float(delta))

    @staticmethod
    def annulus(r_lo: float, r_hi: float) -> "Region":
        if not r_hi > r_lo:
            raise ValueError(f"annulus needs r_hi > r_lo, got [{r_lo}, {r_hi}]")
        return Region("annulus", r_lo=float(r_lo), r_hi=float(r_hi))

    def contains(self, cfg: GeometryConfig, t, x) -> np.ndarray:
        """Vectorized membership test; t and x broadcast."""
        t = np.asarray(t, dtype=float)
        r = cfg.radius(x)
        R = cfg.r_tilde
        if self.kind == "diamond":
            return (np.abs(t) < 0.5 * R) & (r + np.abs(t) < 1.5 * R)
        if self.kind == "cylinder":
            return (np.abs(t) < 0.5 * R) & (r < R)
        if self.kind == "phi-superlevel":
            return foliation_phi(cfg, t, x) > self.gamma
        if self.kind == "diamond-delta":
            inner = (np.abs(t) < 0.5 * R) & (r + np.abs(t) < 1.5 * R)
            return inner & (foliation_phi(cfg, t, x) > self.delta**2)
        if self.kind == "omega-delta":
            return foliation_phi(cfg, t, x) > self.delta
        if self.kind == "annulus":
            return (r > self.r_lo) & (r < self.r_hi)
        raise ValueError(f"unknown region kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "phi-superlevel":
            return f"phi-superlevel({self.gamma:g})"
        if self.kind == "diamond-delta":
            return f"diamond-delta({self.delta:g}, level-sq)"
        if self.kind == "omega-delta":
            return f"omega-delta({self.delta:g}, level-lin)"
        if self.kind == "annulus":
            return f"annulus({self.r_lo:g}, {self.r_hi:g})"
        return self.kind


def region_mask(
    cfg: GeometryConfig,
    region: Region,
    t: np.ndarray,
    x: np.ndarray,
    subsample: bool = True,
) -> np.ndarray:
    """Quadrature weights in [0, 1] for the region on a tensor grid.

    Each node (t_i, x_j) represents the cell of size dt x dx centered on it.
    Cells are classified on a 4x4 sub-grid; interior cells get weight 1,
    boundary cells the fraction of sub-points inside.  The same sub-points
    serve every region, so masks of nested regions dominate pointwise.

    Raises EmptyRegion if no cell intersects the region.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    dt = t[1] - t[0] if t.size > 1 else 1.0
    dx = x[1] - x[0] if x.size > 1 else 1.0

    if not subsample:
        w = region.contains(cfg, t[:, None], x[None, :]).astype(float)
    else:
        w = np.zeros((t.size, x.size))
        for ot in _SUB:
            tt = (t + ot * dt)[:, None]
            for ox in _SUB:
                xx = (x + ox * dx)[None, :]
                w += region.contains(cfg, tt, xx)
        w /= _SUB.size**2

    if not w.any():
        raise EmptyRegion(f"region {region.label()} misses the grid")
    return w


def region_measure(
    cfg: GeometryConfig, region: Region, t: np.ndarray, x: np.ndarray
) -> float:
    """Measure of the region with the mode's volume element, via the mask."""
    w = region_mask(cfg, region, t, x)
    dt = t[1] - t[0] if t.size > 1 else 1.0
    dx = x[1] - x[0] if x.size > 1 else 1.0
    return float(np.sum(w * volume_weight(cfg, x)[None, :]) * dt * dx)


# ---------------------------------------------------------------------------
# Smooth cutoffs
# ---------------------------------------------------------------------------

def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / si - 1.0 / (1.0 - si))
    return out


# Dense cumulative table of the normalized smoothstep
#   S(s) = int_0^s exp(-1/u - 1/(1-u)) du / int_0^1 (same),
# monotone 0 -> 1 with all derivatives vanishing at both ends.
_STEP_GRID = np.linspace(0.0, 1.0, 2**14 + 1)
_STEP_CUM = cumulative_trapezoid(_bump(_STEP_GRID), _STEP_GRID, initial=0.0)
_STEP_CUM /= _STEP_CUM[-1]


def _smoothstep(s: np.ndarray) -> np.ndarray:
    return np.interp(np.clip(s, 0.0, 1.0), _STEP_GRID, _STEP_CUM)


def bump_profile(s: np.ndarray | float) -> np.ndarray:
    """Standard C-infinity bump exp(1 - 1/(1 - s**2)) on |s| < 1, else 0.

    Normalized to peak value 1 at s = 0.  Used to build analytic compactly
    supported test fields whose derivatives are available in closed form.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """One-dimensional plateau cutoff: support (lo, hi), plateau [p_lo, p_hi].

    The profile is 0 outside the support, 1 on the plateau, and follows the
    integrated exp(-1/s)exp(-1/(1-s)) smoothstep across each transition band.
    A side may be half-infinite (lo = p_lo = -inf, or hi = p_hi = +inf), in
    which case that band is absent.  Finite bands of zero width are refused.
    """

    lo: float
    p_lo: float
    p_hi: float
    hi: float

    def __post_init__(self):
        lo, p_lo, p_hi, hi = self.lo, self.p_lo, self.p_hi, self.hi
        if math.isinf(lo) != math.isinf(p_lo) or math.isinf(hi) != math.isinf(p_hi):
            raise DegenerateBand(
                "half-infinite support requires the plateau edge to be "
                "infinite on the same side"
            )
        if not (lo <= p_lo <= p_hi <= hi):
            raise ValueError(
                f"cutoff edges must be ordered lo<=p_lo<=p_hi<=hi, got "
                f"({lo}, {p_lo}, {p_hi}, {hi})"
            )
        if math.isfinite(lo) and not p_lo > lo:
            raise DegenerateBand(f"rising band [{lo}, {p_lo}] has zero width")
        if math.isfinite(hi) and not hi > p_hi:
            raise DegenerateBand(f"falling band [{p_hi}, {hi}] has zero width")

    @staticmethod
    def symmetric(plateau_half: float, support_half: float) -> "CutoffSpec":
        """Even profile: 1 on [-plateau_half, plateau_half], 0 outside
        (-support_half, support_half)."""
        return CutoffSpec(-support_half, -plateau_half, plateau_half, support_half)


class SmoothCutoff:
    """Callable C-infinity plateau profile built from a CutoffSpec."""

    def __init__(self, spec: CutoffSpec):
        self.spec = spec

    def __call__(self, s) -> np.ndarray:
        sp = self.spec
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        plateau = (s >= sp.p_lo) & (s <= sp.p_hi)
        out[plateau] = 1.0
        if math.isfinite(sp.lo):
            rise = (s > sp.lo) & (s < sp.p_lo)
            out[rise] = _smoothstep((s[rise] - sp.lo) / (sp.p_lo - sp.lo))
        if math.isfinite(sp.hi):
            fall = (s > sp.p_hi) & (s < sp.hi)
            out[fall] = _smoothstep((sp.hi - s[fall]) / (sp.hi - sp.p_hi))
        return out

    def band_derivative_l1(self, side: str = "rising", samples: int = 4097) -> float:
        """Numerical int |chi'| across one transition band (= 1 by
        monotonicity, up to table interpolation error)."""
        sp = self.spec
        if side == "rising":
            if not math.isfinite(sp.lo):
                raise DegenerateBand("no rising band on a half-infinite side")
            a, b = sp.lo, sp.p_lo
        else:
            if not math.isfinite(sp.hi):
                raise DegenerateBand("no falling band on a half-infinite side")
            a, b = sp.p_hi, sp.hi
        s = np.linspace(a, b, samples)
        v = self(s)
        return float(np.sum(np.abs(np.diff(v))))


def smooth_cutoff(spec: CutoffSpec) -> SmoothCutoff:
    """Build the callable profile for a cutoff specification."""
    return SmoothCutoff(spec)

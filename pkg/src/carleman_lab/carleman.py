"""Weighted-operator algebra and inequality probes for the wave operator.

The laboratory's core object is the conjugation of the wave operator by an
exponential weight e^(tau*phi) built on the hyperbolic foliation.  Writing
ell = tau*phi and Delta_g = -box for the Lorentzian Laplacian (metric
signature (-, +)), the conjugated operator splits as

    P v = e^ell Delta_g (e^-ell v) = Delta_g v - L v + q v,

with the transport part L v = 2 g(grad ell, grad v) and the zeroth-order
coefficient q = G(grad ell) - Delta_g ell, where G(X) = g(X, X).  Everything
in this module rests on one pointwise equality: splitting P v into the
symmetric part (Delta_g + q + sigma) v and the antisymmetric part
(L + sigma) v, the cross term is a sum of two quadratic forms, an exact
divergence, and a zeroth-order remainder,

    |P v|^2 / 2 = |(Delta_g + q + sigma) v|^2 / 2 + |(L + sigma) v|^2 / 2
                  + Q_plus(grad v) + Q_minus(grad ell) v^2 + div B + R,

valid for any multiplier field sigma.  ``identity_residual`` assembles every
term by central differences and reports how far the two sides drift apart;
the gap must shrink at second order under grid refinement, which pins all
sign conventions at once.

On top of the identity sit the two inequality probes:

* ``subelliptic_check`` witnesses the constant in the interior positivity
  estimate for the regularized conjugated operator (time-Gaussian smoothing
  of scale epsilon/tau folded into the operator as lower-order corrections);
* ``carleman_estimate_check`` witnesses the constants in the global weighted
  estimate, including the exponentially small error term, by sweeping tau.

The exponential weights are always applied in shifted form
e^(tau*(phi - max phi on supp u)); both sides of every estimate scale the
same way, so witnessed constants are unchanged while the largest exponent
stays at 1.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NumericalOverflow,
    PreconditionViolated,
    SupportViolation,
)
from .geometry import (
    GeometryConfig,
    Region,
    bump_profile,
    foliation_phi,
    grad_phi,
)
from .grid_ops import (
    GridSpec,
    ScalarField,
    VectorField,
    apply_box,
    divergence,
    gradient,
    integrate,
    norm,
)
from .multipliers import MultiplierSpec, apply as apply_multiplier

__all__ = [
    "CarlemanParams",
    "IdentityBreakdown",
    "WitnessReport",
    "BumpSpec",
    "admissible_bumps",
    "identity_residual",
    "q_plus",
    "q_minus_on_grad_ell",
    "coercivity_check",
    "angular_coercivity_floor",
    "conjugated_wave_apply",
    "direct_conjugation_apply",
    "intertwining_residual",
    "subelliptic_check",
    "carleman_estimate_check",
    "laplace_beltrami_phi",
    "sigma_field",
    "q_coefficient",
    "COERCIVITY_CONSTANT",
]

# Sharp constant of the angular coercivity bound, attained at r = r0_inner:
# a/tau + 2 - 2*r1/r = 7/2 - 3*(14/13) = 7/26 with the standard multiplier.
COERCIVITY_CONSTANT = 7.0 / 26.0

# Exponent ceiling for shifted weights (exp(350) ~ 1e152 leaves headroom for
# squaring) and the admissible dynamic range of tau * (phi spread).
_EXP_CLIP = 350.0
_EXP_RANGE_LIMIT = 700.0

_SUPPORT_RTOL = 1e-12
_REGION_PAD = 1e-9


@dataclass(frozen=True)
class CarlemanParams:
    """Parameter bundle for one weighted-operator experiment.

    tau is the large parameter multiplying the foliation in the weight
    exponent; epsilon the time-Gaussian regularization scale; gamma the
    level offset used both by superlevel supports and by the shifted weight
    variant (``weight="psi"`` uses phi - gamma, which differs from phi by a
    constant, so it renormalizes weighted norms without changing any
    conjugated operator).  sigma_shift adds a constant to the multiplier
    field sigma — the identity must hold for any such shift, and the
    robustness tests exercise it.
    """

    tau: float
    epsilon: float = 0.0
    gamma: float = 0.25
    weight: str = "phi"
    sigma_shift: float = 0.0
    epsilon0: float = 0.05
    tau_floor_multiplier: float = 1.0

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.weight not in ("phi", "psi"):
            raise ValueError(f"weight must be 'phi' or 'psi', got {self.weight!r}")
        if not self.epsilon0 > 0.0:
            raise ValueError(f"epsilon0 must be positive, got {self.epsilon0}")

    @property
    def a_choice(self) -> float:
        """The multiplier normalization a = 3*tau/2 (plus any sigma shift)."""
        return 1.5 * self.tau + self.sigma_shift

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "weight": self.weight,
            "sigma_shift": self.sigma_shift,
            "epsilon0": self.epsilon0,
            "tau_floor_multiplier": self.tau_floor_multiplier,
            "a_choice": self.a_choice,
        }


# ---------------------------------------------------------------------------
# Closed-form coefficient fields
# ---------------------------------------------------------------------------

def laplace_beltrami_phi(cfg: GeometryConfig, x) -> np.ndarray:
    """Delta_g phi = 2 + (n-1)(r - r1)/r, exact in both modes."""
    r = cfg.radius(x)
    out = np.full_like(np.asarray(r, dtype=float), 2.0)
    if cfg.n > 1:
        out = out + (cfg.n - 1) * (r - cfg.r1) / r
    return out


def weight_base(cfg: GeometryConfig, params: CarlemanParams, t, x) -> np.ndarray:
    """The weight's base field: phi, or phi - gamma for the shifted variant."""
    base = foliation_phi(cfg, t, x)
    if params.weight == "psi":
        base = base - params.gamma
    return base


def sigma_field(cfg: GeometryConfig, params: CarlemanParams, x) -> np.ndarray:
    """Multiplier field sigma = a + tau * Delta_g phi (t-independent)."""
    return params.a_choice + params.tau * laplace_beltrami_phi(cfg, x)


def q_coefficient(cfg: GeometryConfig, params: CarlemanParams, t, x) -> np.ndarray:
    """Zeroth-order coefficient q = G(grad ell) - Delta_g ell = 2 tau^2 phi - tau Delta_g phi.

    Identical for both weight variants: the shifted base has the same
    gradient, and G(grad phi) = 2 phi is the eikonal identity.
    """
    tau = params.tau
    return 2.0 * tau**2 * foliation_phi(cfg, t, x) - tau * laplace_beltrami_phi(cfg, x)


def _grad_sigma_x(cfg: GeometryConfig, params: CarlemanParams, x) -> np.ndarray:
    # Spatial (contravariant) component of grad sigma; zero when n = 1.
    r = cfg.radius(x)
    if cfg.n == 1:
        return np.zeros_like(np.asarray(r, dtype=float))
    return params.tau * (cfg.n - 1) * cfg.r1 / r**2


def _laplace_sigma(cfg: GeometryConfig, params: CarlemanParams, x) -> np.ndarray:
    # Delta_g sigma = tau (n-1)(n-3) r1 / r^3; zero when n = 1.
    r = cfg.radius(x)
    if cfg.n == 1:
        return np.zeros_like(np.asarray(r, dtype=float))
    return params.tau * (cfg.n - 1) * (cfg.n - 3) * cfg.r1 / r**3


# ---------------------------------------------------------------------------
# Quadratic forms
# ---------------------------------------------------------------------------

def q_plus(
    cfg: GeometryConfig,
    params: CarlemanParams,
    X: VectorField,
    theta: np.ndarray | None = None,
) -> ScalarField:
    """The sign-definite quadratic form Q_plus(X) = 2 D^2(ell)(X,X) + a G(X).

    For grid vector fields (time and radial components) the closed form is
    (a + 2 tau)(-|X^t|^2 + |X^r|^2); an optional angular coordinate
    component adds ((a + 2 tau) r^2 - 2 tau r1 r)|X^theta|^2, whose
    coefficient is where the coercivity constant is decided.
    """
    a = params.a_choice
    tau = params.tau
    coeff = a + 2.0 * tau
    vals = coeff * (-(X.comp_t**2) + X.comp_x**2)
    if theta is not None:
        r = cfg.radius(X.grid.x)[None, :]
        vals = vals + (coeff * r**2 - 2.0 * tau * cfg.r1 * r) * np.asarray(theta) ** 2
    return ScalarField(X.grid, vals)


def q_minus_on_grad_ell(
    cfg: GeometryConfig,
    params: CarlemanParams,
    grid: GridSpec,
    assembly: str = "closed",
) -> ScalarField:
    """Q_minus evaluated on grad ell itself, two independent assemblies.

    assembly="closed": the reduced form 2 phi (2 tau^3 - a tau^2), which is
    phi * tau^3 at the standard choice a = 3 tau / 2.  assembly="defining":
    2 D^2(ell)(grad ell, grad ell) - a G(grad ell) from the gradient
    components, using that the foliation's Hessian acts as the metric on
    in-plane vectors.  The two must agree to machine precision — no
    discretization is involved in either.
    """
    tau = params.tau
    a = params.a_choice
    tt, xx = grid.mesh()
    if assembly == "closed":
        vals = 2.0 * foliation_phi(cfg, tt, xx) * (2.0 * tau**3 - a * tau**2)
    elif assembly == "defining":
        gl_t, gl_x = grad_phi(cfg, tt, xx)
        minkowski_sq = -((tau * gl_t) ** 2) + (tau * gl_x) ** 2
        vals = 2.0 * tau * minkowski_sq - a * minkowski_sq
    else:
        raise ValueError(f"assembly must be 'closed' or 'defining', got {assembly!r}")
    return ScalarField(grid, vals)


def angular_coercivity_floor(
    cfg: GeometryConfig, params: CarlemanParams, r
) -> np.ndarray:
    """Angular Q_plus coefficient per unit tau and unit |X_perp|^2.

    Equals a/tau + 2 - 2 r1 / r = 7/2 - 3 r_tilde / r at the standard
    multiplier; increasing in r, with value exactly 7/26 at r = r0_inner.
    """
    r = np.asarray(r, dtype=float)
    return (params.a_choice / params.tau) + 2.0 - 2.0 * cfg.r1 / r


def coercivity_check(
    cfg: GeometryConfig,
    params: CarlemanParams,
    v: ScalarField,
    tolerance: float = 0.01,
) -> dict:
    """Pointwise compensated positivity of Q_plus on a field supported in r >= r0_inner.

    Checks Q_plus(grad v) + (a + 2 tau)|d_t v|^2 >= (7/26 - tolerance) * tau
    * |d_x v|^2 at every node (the time-derivative compensation carries the
    same coefficient that multiplies it inside Q_plus; the remaining content
    is the spatial coefficient bound, sharp in the angular direction at
    r0_inner).  Returns the worst margin and the witnessed floor.
    """
    tt, xx = v.grid.mesh()
    r = cfg.radius(xx)
    peak = float(np.abs(v.values).max())
    if peak > 0.0:
        outside = r < cfg.r0_inner - _REGION_PAD
        leak = float(np.abs(np.where(outside, v.values, 0.0)).max())
        if leak > _SUPPORT_RTOL * peak:
            raise SupportViolation(
                f"field leaks below r = r0_inner = {cfg.r0_inner:.6g} "
                f"(worst sample {leak:.3e} vs peak {peak:.3e})"
            )
    tau = params.tau
    coeff = params.a_choice + 2.0 * tau
    grads = gradient(v)
    qp = q_plus(cfg, params, grads)
    gt2 = grads.comp_t**2
    gx2 = grads.comp_x**2
    compensated = qp.values + coeff * gt2
    target = (COERCIVITY_CONSTANT - tolerance) * tau * gx2
    margin = compensated - target
    # Assembling Q_plus and compensating afterwards cancels the time part in
    # floating point, leaving noise at the level of coeff * |grad v|^2 * eps;
    # any genuine coefficient violation would sit at the same scale as the
    # terms themselves, far above this floor.
    noise_floor = 1e-12 * coeff * float((gt2 + gx2).max(initial=0.0))
    meaningful = gx2 > 1e-12 * float(gx2.max(initial=0.0))
    if np.any(meaningful):
        witnessed = float(
            np.min(compensated[meaningful] / (tau * gx2[meaningful]))
        )
    else:
        witnessed = math.inf
    return {
        "min_margin": float(margin.min()),
        "witnessed_floor": witnessed,
        "required_floor": COERCIVITY_CONSTANT - tolerance,
        "passed": bool(margin.min() >= -noise_floor),
    }


# ---------------------------------------------------------------------------
# The pointwise identity
# ---------------------------------------------------------------------------

@dataclass
class IdentityBreakdown:
    """Every term of the conjugation identity, plus the two residuals.

    residual_integrated drops the divergence term (its integral vanishes for
    compactly supported fields); residual_pointwise keeps it, assembled by
    central differences of the flux field.
    """

    lhs: ScalarField
    square1: ScalarField
    square2: ScalarField
    q_plus_term: ScalarField
    q_minus_term: ScalarField
    div_B_term: ScalarField
    R_term: ScalarField
    residual_pointwise: float
    residual_integrated: float
    lhs_integral: float

    @property
    def residual_integrated_relative(self) -> float:
        if self.lhs_integral == 0.0:
            return 0.0
        return self.residual_integrated / abs(self.lhs_integral)

    def as_dict(self) -> dict:
        return {
            "residual_pointwise": self.residual_pointwise,
            "residual_integrated": self.residual_integrated,
            "residual_integrated_relative": self.residual_integrated_relative,
            "lhs_integral": self.lhs_integral,
        }


def _require_interior_support(v: ScalarField, cells: int = 3) -> None:
    m = np.abs(v.values)
    peak = float(m.max())
    if peak == 0.0:
        return
    tol = _SUPPORT_RTOL * peak
    worst = max(
        float(m[:cells, :].max()),
        float(m[-cells:, :].max()),
        float(m[:, :cells].max()),
        float(m[:, -cells:].max()),
    )
    if worst > tol:
        raise SupportViolation(
            f"field reaches within {cells} cells of the grid boundary "
            f"(worst sample {worst:.3e} vs peak {peak:.3e})"
        )


def _transport_apply(
    cfg: GeometryConfig, params: CarlemanParams, v: ScalarField
) -> tuple[np.ndarray, VectorField]:
    """L v = 2 g(grad ell, grad v) plus the raw gradient, shared by callers."""
    tt, xx = v.grid.mesh()
    gl_t, gl_x = grad_phi(cfg, tt, xx)
    grads = gradient(v)
    lv = 2.0 * params.tau * (gl_t * grads.comp_t + gl_x * grads.comp_x)
    return lv, grads


def identity_residual(
    cfg: GeometryConfig, params: CarlemanParams, v: ScalarField
) -> IdentityBreakdown:
    """Assemble both sides of the conjugation identity term by term.

    All differential pieces use second-order central differences; all
    coefficient fields are exact closed forms.  For smooth compactly
    supported v both residuals vanish at O(h^2) under refinement — this is
    the test that locks every sign convention in the module.
    """
    _require_interior_support(v)
    g = v.grid
    tt, xx = g.mesh()
    tau = params.tau
    a = params.a_choice

    phi = foliation_phi(cfg, tt, xx)
    lap_phi = laplace_beltrami_phi(cfg, xx)
    sigma = a + tau * lap_phi
    q = 2.0 * tau**2 * phi - tau * lap_phi
    gl_t, gl_x = grad_phi(cfg, tt, xx)

    lv, grads = _transport_apply(cfg, params, v)
    box_v = apply_box(cfg, v).values
    lap_g_v = -box_v  # Lorentzian Laplacian is minus the wave operator
    vals = v.values

    pv = lap_g_v - lv + q * vals
    lhs = 0.5 * pv**2
    sq1 = 0.5 * (lap_g_v + (q + sigma) * vals) ** 2
    sq2 = 0.5 * (lv + sigma * vals) ** 2

    g_grad_v = -(grads.comp_t**2) + grads.comp_x**2
    qp = (a + 2.0 * tau) * g_grad_v
    qm = 2.0 * phi * (2.0 * tau**3 - a * tau**2) * vals**2

    # Flux field B; the time component of grad sigma vanishes, the spatial
    # one is tau (n-1) r1 / r^2.
    common = g_grad_v - (q + sigma) * vals**2
    b_t = (lv + sigma * vals) * grads.comp_t + tau * gl_t * common
    b_x = (
        -(lv + sigma * vals) * grads.comp_x
        + tau * gl_x * common
        + 0.5 * vals**2 * _grad_sigma_x(cfg, params, xx)
    )
    div_b = divergence(cfg, VectorField(g, b_t, b_x)).values

    r_term = (
        a * tau * lap_phi - a * sigma - 0.5 * _laplace_sigma(cfg, params, xx)
    ) * vals**2

    residual_field = lhs - (sq1 + sq2 + qp + qm + div_b + r_term)
    residual_pointwise = float(np.abs(residual_field).max())

    lhs_integral = integrate(cfg, lhs, g)
    rhs_integral = integrate(cfg, sq1 + sq2 + qp + qm + r_term, g)
    residual_integrated = abs(lhs_integral - rhs_integral)

    return IdentityBreakdown(
        lhs=ScalarField(g, lhs),
        square1=ScalarField(g, sq1),
        square2=ScalarField(g, sq2),
        q_plus_term=ScalarField(g, qp),
        q_minus_term=ScalarField(g, qm),
        div_B_term=ScalarField(g, div_b),
        R_term=ScalarField(g, r_term),
        residual_pointwise=residual_pointwise,
        residual_integrated=residual_integrated,
        lhs_integral=lhs_integral,
    )


# ---------------------------------------------------------------------------
# Conjugated-perturbed operator
# ---------------------------------------------------------------------------

def conjugated_wave_apply(
    cfg: GeometryConfig,
    params: CarlemanParams,
    v: ScalarField,
    potential: ScalarField | None = None,
) -> ScalarField:
    """Apply the conjugated wave operator with Gaussian-weight corrections.

    Base part: box v + L v - q v (the exponential conjugation of box by
    e^(tau*phi), sign convention box = d_tt - Lap).  Conjugating once more
    by the time-Gaussian multiplier of scale epsilon/tau turns every
    multiplication by t into t + (epsilon/tau) d_t, which adds the exact
    lower-order corrections

        epsilon (2 + epsilon) d_tt v + 2 epsilon tau t d_t v + epsilon tau v.

    The output boundary ring is zeroed, matching apply_box.  An optional
    time-independent potential is added to the base operator.
    """
    _require_interior_support(v)
    g = v.grid
    tt, xx = g.mesh()
    eps = params.epsilon
    tau = params.tau

    lv, grads = _transport_apply(cfg, params, v)
    q = q_coefficient(cfg, params, tt, xx)
    vals = apply_box(cfg, v, potential).values + lv - q * v.values

    if eps > 0.0:
        dtt = np.zeros_like(v.values)
        dtt[1:-1, :] = (
            v.values[2:, :] - 2.0 * v.values[1:-1, :] + v.values[:-2, :]
        ) / g.dt**2
        vals = vals + (
            eps * (2.0 + eps) * dtt
            + 2.0 * eps * tau * tt * grads.comp_t
            + eps * tau * v.values
        )

    vals[0, :] = 0.0
    vals[-1, :] = 0.0
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return ScalarField(g, vals)


def direct_conjugation_apply(
    cfg: GeometryConfig, params: CarlemanParams, v: ScalarField
) -> ScalarField:
    """e^ell box (e^-ell v) assembled literally, as an independent cross-check.

    Used to validate conjugated_wave_apply at epsilon = 0; the exponentials
    are shift-normalized, and the admissible dynamic range of the exponent
    is guarded (the literal assembly, unlike the expanded one, must
    represent e^(+/- tau*phi) on the whole grid).
    """
    _require_interior_support(v)
    g = v.grid
    tt, xx = g.mesh()
    ell = params.tau * weight_base(cfg, params, tt, xx)
    spread = float(ell.max() - ell.min())
    if spread > _EXP_RANGE_LIMIT / 2.0:
        raise NumericalOverflow(
            f"exponent spread tau*(phi range) = {spread:.3g} exceeds "
            f"{_EXP_RANGE_LIMIT / 2:.0f}; shrink tau or the grid"
        )
    shift = float(ell.max())
    inner = ScalarField(g, np.exp(-(ell - shift)) * v.values)
    boxed = apply_box(cfg, inner)
    return ScalarField(g, np.exp(ell - shift) * boxed.values)


def intertwining_residual(
    cfg: GeometryConfig, params: CarlemanParams, v: ScalarField
) -> float:
    """Relative defect of smoothing-conjugation: E (base op) v vs (corrected op) E v.

    E is the time-Gaussian multiplier of scale epsilon/tau.  The defect is
    measured against the H1 norm of v and decays at discretization order;
    it is the numerical lock on the signs of the epsilon-corrections.
    """
    if params.epsilon <= 0.0:
        raise PreconditionViolated("intertwining check needs epsilon > 0")
    E = MultiplierSpec.gaussian_weight(params.epsilon, params.tau)
    base = dataclasses.replace(params, epsilon=0.0)
    lhs = apply_multiplier(E, conjugated_wave_apply(cfg, base, v))
    rhs = conjugated_wave_apply(cfg, params, apply_multiplier(E, v))
    diff = lhs.values - rhs.values
    # Both assemblies zero the ring only up to smearing; compare interiors.
    diff[0, :] = diff[-1, :] = 0.0
    diff[:, 0] = diff[:, -1] = 0.0
    denom = norm(cfg, v, kind="H1")
    if denom == 0.0:
        return 0.0
    return norm(cfg, ScalarField(v.grid, diff), kind="L2") / denom


# ---------------------------------------------------------------------------
# Seeded analytic test fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpSpec:
    """Closed-form compactly supported test field.

    A tensor bump, optionally modulated by a few low-frequency cosine modes
    (``modes`` holds (amplitude, freq_t, freq_x, phase_t, phase_x) tuples).
    Being a closure, the same spec can be sampled on any grid, which is what
    makes refinement-drift measurements meaningful.
    """

    center_t: float
    center_x: float
    width_t: float
    width_x: float
    amplitude: float = 1.0
    modes: tuple = ()

    def __call__(self, t, x) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        vals = (
            self.amplitude
            * bump_profile((t - self.center_t) / self.width_t)
            * bump_profile((x - self.center_x) / self.width_x)
        )
        if self.modes:
            carrier = np.ones_like(vals)
            for amp, ft, fx, pt, px in self.modes:
                carrier = carrier + amp * np.cos(
                    2.0 * math.pi * ft * (t - self.center_t) + pt
                ) * np.cos(2.0 * math.pi * fx * (x - self.center_x) + px)
            vals = vals * carrier
        return vals

    def field(self, grid: GridSpec) -> ScalarField:
        tt, xx = grid.mesh()
        return ScalarField(grid, self(tt, xx))

    def support_box(self) -> tuple[float, float, float, float]:
        return (
            self.center_t - self.width_t,
            self.center_t + self.width_t,
            self.center_x - self.width_x,
            self.center_x + self.width_x,
        )


def _box_admissible(
    cfg: GeometryConfig,
    box: tuple[float, float, float, float],
    phi_floor: float | None,
    r_floor: float | None,
) -> bool:
    t_lo, t_hi, x_lo, x_hi = box
    t_max = max(abs(t_lo), abs(t_hi))
    if r_floor is not None and x_lo < r_floor:
        return False
    if phi_floor is not None:
        # min over the box of (r - r1)^2 at the r closest to r1
        if x_lo <= cfg.r1 <= x_hi:
            sq = 0.0
        else:
            sq = min(abs(x_lo - cfg.r1), abs(x_hi - cfg.r1)) ** 2
        if 0.5 * (sq - t_max**2) < phi_floor:
            return False
    return True


def admissible_bumps(
    cfg: GeometryConfig,
    grid: GridSpec,
    count: int,
    seed: int,
    *,
    phi_floor: float | None = None,
    r_floor: float | None = None,
    width_t: tuple[float, float] = (0.08, 0.2),
    width_x: tuple[float, float] = (0.1, 0.3),
    amplitude: tuple[float, float] = (0.5, 2.0),
    modulated: bool = False,
    margin_cells: int = 4,
) -> list[BumpSpec]:
    """Draw seeded bumps whose closed supports satisfy the region constraints.

    Rejection sampling against exact support-box checks: inside the grid by
    ``margin_cells`` cells, r >= r_floor, and phi >= phi_floor over the whole
    box when those floors are given.  ``modulated=True`` adds up to three
    low-frequency cosine modes (band-limited texture for estimate probes).
    """
    rng = np.random.default_rng(seed)
    t_lo = grid.t_min + margin_cells * grid.dt
    t_hi = grid.t_max - margin_cells * grid.dt
    x_lo = grid.x_min + margin_cells * grid.dx
    x_hi = grid.x_max - margin_cells * grid.dx
    out: list[BumpSpec] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 20000:
            raise PreconditionViolated(
                "could not place the requested bumps: the admissible region "
                "is too small for the configured widths"
            )
        wt = rng.uniform(*width_t)
        wx = rng.uniform(*width_x)
        ct = rng.uniform(t_lo + wt, t_hi - wt)
        cx = rng.uniform(x_lo + wx, x_hi - wx)
        if not _box_admissible(
            cfg, (ct - wt, ct + wt, cx - wx, cx + wx), phi_floor, r_floor
        ):
            continue
        modes: tuple = ()
        if modulated:
            k = int(rng.integers(1, 4))
            modes = tuple(
                (
                    float(rng.uniform(0.05, 0.25)) / k,
                    float(rng.uniform(0.5, 3.0)),
                    float(rng.uniform(0.5, 3.0)),
                    float(rng.uniform(0.0, 2.0 * math.pi)),
                    float(rng.uniform(0.0, 2.0 * math.pi)),
                )
                for _ in range(k)
            )
        out.append(
            BumpSpec(
                center_t=float(ct),
                center_x=float(cx),
                width_t=float(wt),
                width_x=float(wx),
                amplitude=float(rng.uniform(*amplitude)),
                modes=modes,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Witnessed inequality probes
# ---------------------------------------------------------------------------

@dataclass
class WitnessReport:
    """Outcome of one inequality probe over a tau sweep."""

    kind: str
    gamma: float
    epsilon: float
    tau_values: list
    lhs: list
    rhs: list
    witnessed_constant: float
    witnessed_secondary: float | None
    refinement_ratios: list
    passed: bool
    notes: str = ""
    details: dict | None = None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "tau_values": list(self.tau_values),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "witnessed_constant": self.witnessed_constant,
            "witnessed_secondary": self.witnessed_secondary,
            "refinement_ratios": list(self.refinement_ratios),
            "pass": self.passed,
            "notes": self.notes,
            "details": self.details or {},
        }


def _require_region_support(
    cfg: GeometryConfig,
    v: ScalarField,
    phi_floor: float,
    r_floor: float,
) -> None:
    peak = float(np.abs(v.values).max())
    if peak == 0.0:
        return
    tt, xx = v.grid.mesh()
    ok = (cfg.radius(xx) >= r_floor - _REGION_PAD) & (
        foliation_phi(cfg, tt, xx) >= phi_floor - _REGION_PAD
    )
    leak = float(np.abs(np.where(ok, 0.0, v.values)).max())
    if leak > _SUPPORT_RTOL * peak:
        raise SupportViolation(
            f"support leaks outside {{r >= {r_floor:.6g}}} ∩ "
            f"{{phi >= {phi_floor:.6g}}}: worst outside sample {leak:.3e} "
            f"vs peak {peak:.3e}"
        )


def _subelliptic_single(
    cfg: GeometryConfig,
    v: ScalarField,
    gamma: float,
    tau_values: list,
    epsilon: float,
    epsilon0: float,
) -> dict:
    grads = gradient(v)
    l2_sq = norm(cfg, v, kind="L2") ** 2
    grad_sq = norm(cfg, grads, kind="L2") ** 2
    dt_sq = integrate(cfg, grads.comp_t**2, v.grid)
    rows = []
    for tau in tau_values:
        params = CarlemanParams(
            tau=float(tau), epsilon=epsilon, gamma=gamma, epsilon0=epsilon0
        )
        op = conjugated_wave_apply(cfg, params, v)
        lhs = gamma * tau**3 * l2_sq + tau * grad_sq
        a_sq = norm(cfg, op, kind="L2") ** 2
        if lhs == 0.0:
            c_pair = c_simple = 0.0
        elif dt_sq > 0.0:
            c_pair = (-a_sq + math.sqrt(a_sq**2 + 4.0 * tau * dt_sq * lhs)) / (
                2.0 * tau * dt_sq
            )
            c_simple = lhs / (a_sq + tau * dt_sq)
        elif a_sq > 0.0:
            c_pair = c_simple = lhs / a_sq
        else:
            c_pair = c_simple = math.inf
        rows.append(
            {
                "tau": float(tau),
                "lhs": lhs,
                "rhs_unscaled": a_sq + tau * dt_sq,
                "op_sq": a_sq,
                "dt_sq": dt_sq,
                "c_pair": c_pair,
                "c_simple": c_simple,
            }
        )
    return {
        "rows": rows,
        "c_pair_sup": max(r["c_pair"] for r in rows),
        "c_simple_sup": max(r["c_simple"] for r in rows),
    }


def subelliptic_check(
    cfg: GeometryConfig,
    v: ScalarField,
    gamma: float,
    tau_values: list,
    epsilon: float,
    *,
    epsilon0: float = 0.05,
    resample=None,
    drift_tolerance: float = 0.2,
) -> WitnessReport:
    """Witness the interior positivity constant for one test field.

    The probed inequality (support in {r >= r0_inner} ∩ {phi >= gamma}) is

        gamma tau^3 ∫ v^2 + tau ∫ |grad v|^2
            <= C ∫ |op v|^2 + C^2 tau ∫ |d_t v|^2,

    with op the epsilon-corrected conjugated operator.  The two occurrences
    of C are treated as independent: the paired witness solves the quadratic
    in C exactly, the simple witness treats both as first powers; both are
    reported, the paired one decides.  When ``resample`` (a grid -> field
    closure) is given, the sweep is repeated on the refined grid and the
    drift of the paired witness must stay within ``drift_tolerance``.

    The sweep's theoretical admissibility floor tau >= (const)/gamma has an
    anonymous constant; it is recorded in the report, not enforced.
    """
    if epsilon > gamma * epsilon0 + 1e-15:
        raise PreconditionViolated(
            f"epsilon = {epsilon:.6g} exceeds gamma * epsilon0 = "
            f"{gamma * epsilon0:.6g}"
        )
    if not tau_values:
        raise PreconditionViolated("tau sweep must be nonempty")
    _require_region_support(cfg, v, phi_floor=gamma, r_floor=cfg.r0_inner)

    coarse = _subelliptic_single(cfg, v, gamma, tau_values, epsilon, epsilon0)
    ratios: list = []
    notes = "tau floor (const)/gamma recorded, constant anonymous; not enforced"
    drift = None
    if resample is not None:
        fine_grid = v.grid.refined()
        v_fine = resample(fine_grid)
        _require_region_support(cfg, v_fine, phi_floor=gamma, r_floor=cfg.r0_inner)
        fine = _subelliptic_single(cfg, v_fine, gamma, tau_values, epsilon, epsilon0)
        for rc, rf in zip(coarse["rows"], fine["rows"]):
            ratios.append(
                rf["c_pair"] / rc["c_pair"] if rc["c_pair"] > 0 else math.nan
            )
        c0, c1 = coarse["c_pair_sup"], fine["c_pair_sup"]
        drift = abs(c1 - c0) / c0 if c0 > 0 else 0.0
        notes += f"; refinement drift {drift:.3%}"
    else:
        notes += "; no resample closure given, refinement skipped"

    finite = math.isfinite(coarse["c_pair_sup"])
    passed = finite and (drift is None or drift <= drift_tolerance)
    return WitnessReport(
        kind="subelliptic",
        gamma=gamma,
        epsilon=epsilon,
        tau_values=[float(t) for t in tau_values],
        lhs=[r["lhs"] for r in coarse["rows"]],
        rhs=[r["rhs_unscaled"] for r in coarse["rows"]],
        witnessed_constant=coarse["c_pair_sup"],
        witnessed_secondary=coarse["c_simple_sup"],
        refinement_ratios=ratios,
        passed=passed,
        notes=notes,
        details={
            "rows": coarse["rows"],
            "drift": drift,
            "epsilon0": epsilon0,
        },
    )


def _shifted_weight(
    cfg: GeometryConfig,
    params: CarlemanParams,
    u: ScalarField,
) -> tuple[np.ndarray, float]:
    """e^(tau*(base - shift)) with shift = max of the base over supp u."""
    tt, xx = u.grid.mesh()
    base = weight_base(cfg, params, tt, xx)
    m = np.abs(u.values)
    peak = float(m.max())
    if peak == 0.0:
        return np.ones_like(base), 0.0
    on_supp = m > _SUPPORT_RTOL * peak
    shift = float(base[on_supp].max())
    spread = params.tau * float(shift - base[on_supp].min())
    if spread > _EXP_RANGE_LIMIT:
        raise NumericalOverflow(
            f"tau * (weight spread over the support) = {spread:.3g} exceeds "
            f"{_EXP_RANGE_LIMIT:.0f}; shrink tau or the support"
        )
    w = np.exp(np.minimum(params.tau * (base - shift), _EXP_CLIP))
    return w, shift


def _estimate_single(
    cfg: GeometryConfig,
    u: ScalarField,
    gamma: float,
    tau_values: list,
    epsilon0: float,
    potential: ScalarField | None,
    assumed_constant: float | None,
) -> dict:
    g = u.grid
    epsilon = gamma * epsilon0
    source_region = Region.phi_superlevel(gamma / 2.0)
    box_u = apply_box(cfg, u, potential)
    rows = []
    for tau in tau_values:
        params = CarlemanParams(
            tau=float(tau), epsilon=epsilon, gamma=gamma, epsilon0=epsilon0
        )
        w, shift = _shifted_weight(cfg, params, u)
        wu = ScalarField(g, w * u.values)
        ew = apply_multiplier(
            MultiplierSpec.gaussian_weight(epsilon, float(tau)), wu
        )
        lhs = (
            tau**3 * norm(cfg, ew, kind="L2") ** 2
            + tau * norm(cfg, gradient(ew), kind="L2") ** 2
        )
        wbox = ScalarField(g, w * box_u.values)
        ewbox = apply_multiplier(
            MultiplierSpec.gaussian_weight(epsilon, float(tau)), wbox
        )
        source = norm(cfg, ewbox, region=source_region, kind="L2") ** 2
        h1_err = norm(cfg, wu, kind="H1") ** 2
        rows.append(
            {
                "tau": float(tau),
                "lhs": lhs,
                "source": source,
                "h1_error": h1_err,
                "shift": shift,
                "chi": lhs / source if source > 0 else math.inf,
            }
        )
    if all(r["lhs"] == 0.0 for r in rows):
        return {"rows": rows, "constant": 0.0, "rate_zero_constant": 0.0,
                "a_hat": math.inf, "certificate_ok": True}

    # Minimal constant covering the sweep with the error term at full
    # strength (decay rate zero), and its binding tau.
    c_zero = max(r["lhs"] / (r["source"] + r["h1_error"]) for r in rows)
    binding = max(
        range(len(rows)),
        key=lambda i: rows[i]["lhs"] / (rows[i]["source"] + rows[i]["h1_error"]),
    )
    if assumed_constant is not None:
        constant = assumed_constant
        headroom = None
    else:
        # Anchor the constant's headroom to the H1 term at the binding tau:
        # with C = c_zero (1 + h/2s) the remainder the error term must cover
        # there is exactly h/2/(1 + h/2s) — a closed form, immune to the
        # cancellation that direct subtraction would suffer when the source
        # dominates the H1 term by orders of magnitude.
        s_b, h_b = rows[binding]["source"], rows[binding]["h1_error"]
        headroom = h_b / (2.0 * s_b) if s_b > 0.0 else 1.0
        constant = c_zero * (1.0 + headroom)

    a_candidates = []
    for i, r in enumerate(rows):
        if assumed_constant is None and i == binding:
            needed = rows[binding]["h1_error"] / (2.0 * (1.0 + headroom))
        else:
            needed = (r["lhs"] - constant * r["source"]) / constant
        r["needed_remainder"] = needed
        if needed <= 0.0:
            r["a_bound"] = math.inf  # this tau imposes no constraint
        elif r["h1_error"] <= 0.0:
            r["a_bound"] = -math.inf
        else:
            r["a_bound"] = math.log(r["h1_error"] / needed) / (gamma**2 * r["tau"])
        a_candidates.append(r["a_bound"])
    a_hat = min(a_candidates)

    # Verify the certificate (C, a_hat) against every tau of the sweep.
    certificate_ok = True
    if math.isfinite(a_hat):
        for r in rows:
            rhs = constant * (
                r["source"]
                + math.exp(-a_hat * gamma**2 * r["tau"]) * r["h1_error"]
            )
            r["certificate_rhs"] = rhs
            if r["lhs"] > rhs * (1.0 + 1e-9):
                certificate_ok = False
    return {
        "rows": rows,
        "constant": constant,
        "rate_zero_constant": c_zero,
        "a_hat": a_hat,
        "certificate_ok": certificate_ok,
    }


def carleman_estimate_check(
    cfg: GeometryConfig,
    u: ScalarField,
    gamma: float,
    tau_values: list,
    *,
    epsilon0: float = 0.05,
    potential: ScalarField | None = None,
    potential_bound: float | None = None,
    assumed_constant: float | None = None,
    resample=None,
    stability_tolerance: float = 0.3,
) -> WitnessReport:
    """Witness the constants of the global weighted estimate over a tau sweep.

    Probed shape, for u supported in {phi >= gamma} ∩ {r >= r0_inner}:

        tau^3 ||E W u||^2 + tau ||grad E W u||^2
            <= (C/gamma) (||E W box u||^2 on {phi > gamma/2}
                          + e^(-a gamma^2 tau) ||W u||^2_H1),

    W the shifted exponential weight, E the time-Gaussian of scale
    epsilon/tau with epsilon = gamma * epsilon0.  Two constants are
    witnessed jointly: first the minimal C/gamma covering the sweep with the
    error term at full strength (decay rate zero), then — after giving that
    constant headroom anchored to the H1 term at its binding tau — the
    extremal decay rate a-hat that still leaves the inequality valid at
    every tau.  The reported pair is an explicit certificate, re-verified
    term by term.  The probe passes when a-hat > 0, the certificate holds,
    and, given a ``resample`` closure, a-hat is stable under one refinement
    within ``stability_tolerance``.

    The theorem-side floor tau >= (const)/gamma^8 has an anonymous constant:
    recorded (with the configured multiplier), not enforced.  A bounded
    potential raises the floor to (const dep. on its sup norm)/gamma — the
    variant is probed by passing ``potential``/``potential_bound``.
    """
    if not tau_values:
        raise PreconditionViolated("tau sweep must be nonempty")
    _require_region_support(cfg, u, phi_floor=gamma, r_floor=cfg.r0_inner)
    if potential is not None and potential_bound is not None:
        sup_q = float(np.abs(potential.values).max())
        if sup_q > potential_bound + 1e-12:
            raise PreconditionViolated(
                f"potential sup-norm {sup_q:.6g} exceeds the declared bound "
                f"{potential_bound:.6g}"
            )

    coarse = _estimate_single(
        cfg, u, gamma, tau_values, epsilon0, potential, assumed_constant
    )
    ratios: list = []
    notes = (
        "tau floor (const)/gamma^8 recorded, constant anonymous; not enforced"
    )
    if potential is not None:
        notes += "; potential variant: floor raised to (const dep. on sup|q|)/gamma"
    stable = True
    if resample is not None and math.isfinite(coarse["a_hat"]):
        fine_grid = u.grid.refined()
        u_fine = resample(fine_grid)
        _require_region_support(cfg, u_fine, phi_floor=gamma, r_floor=cfg.r0_inner)
        pot_fine = None
        if potential is not None:
            tt, xx = fine_grid.mesh()
            pot_vals = np.interp(fine_grid.x, u.grid.x, potential.values[0])
            pot_fine = ScalarField(
                fine_grid, np.broadcast_to(pot_vals, (fine_grid.nt, fine_grid.nx)).copy()
            )
        fine = _estimate_single(
            cfg, u_fine, gamma, tau_values, epsilon0, pot_fine,
            assumed_constant,
        )
        if math.isfinite(fine["a_hat"]) and coarse["a_hat"] != 0.0:
            ratios.append(fine["a_hat"] / coarse["a_hat"])
            stable = abs(fine["a_hat"] - coarse["a_hat"]) <= (
                stability_tolerance * abs(coarse["a_hat"])
            )
        else:
            stable = False
        notes += f"; refinement a-hat ratio {ratios[-1]:.4f}" if ratios else ""

    a_hat = coarse["a_hat"]
    nonzero = any(lv > 0.0 for lv in (r["lhs"] for r in coarse["rows"]))
    passed = (
        coarse["certificate_ok"]
        and stable
        and (not nonzero or (math.isfinite(a_hat) and a_hat > 0.0))
    )
    return WitnessReport(
        kind="carleman-estimate",
        gamma=gamma,
        epsilon=gamma * epsilon0,
        tau_values=[float(t) for t in tau_values],
        lhs=[r["lhs"] for r in coarse["rows"]],
        rhs=[r["source"] for r in coarse["rows"]],
        witnessed_constant=coarse["constant"],
        witnessed_secondary=a_hat,
        refinement_ratios=ratios,
        passed=passed,
        notes=notes,
        details={
            "rows": coarse["rows"],
            "rate_zero_constant": coarse["rate_zero_constant"],
            "certificate_ok": coarse["certificate_ok"],
            "epsilon0": epsilon0,
            "tau_floor_note": "tau >= (const)/gamma^8",
            "potential_bound": potential_bound,
        },
    )

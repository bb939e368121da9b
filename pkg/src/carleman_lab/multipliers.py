"""Time-frequency multipliers and decay-envelope probes.

All operators here act along the time axis only and are diagonal on the
discrete Fourier side:

* ``gaussian-weight``  exp(-eps xi^2 / (2 tau)) — the conjugation weight;
* ``regularizer``      exp(-xi^2 / lam)          — Gaussian smoothing, kernel
  sqrt(lam/4pi) exp(-lam (t-s)^2 / 4);
* ``low-pass``         m(xi/mu) with a fixed smooth profile m equal to 1 on
  |s| < 3/4 and supported in |s| < 1;
* ``low-pass-reg``     m_lam(xi/mu), the same profile first smoothed at scale
  lam and then rescaled ("first regularize, then localize").

Application zero-pads the field in t to at least twice its length before the
FFT, so the circle approximates the line; a field whose time support reaches
within 10% of the grid edge is refused (wrap-around would silently corrupt
it).  ``boundary="periodic"`` skips padding and the guard — in that mode the
discrete symbol action is exact, which is what the pure-tone calculus checks
and the commutation property need (their fields legitimately fill the grid).

``bound_probe`` measures the decay envelopes that the multiplier calculus
asserts (smoothing across separated supports, low-pass commutation defects,
weighted half-line bounds, high-frequency damping) and fits the claimed
exponential rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import InsufficientSweep, SupportTooWide
from .geometry import CutoffSpec, GeometryConfig, smooth_cutoff
from .grid_ops import GridSpec, ScalarField, gradient, norm

__all__ = [
    "MultiplierSpec",
    "apply",
    "conjugation_residual",
    "bound_probe",
    "ProbeReport",
    "PROBE_IDS",
]

# The fixed low-pass profile: 1 on |s| <= 3/4, 0 outside |s| < 1.
_PROFILE = smooth_cutoff(CutoffSpec.symmetric(0.75, 1.0))

# Support-detection threshold (relative to the field's max modulus) and the
# fraction of the grid that must stay clear at each time edge.
_SUPPORT_RTOL = 1e-12
_EDGE_FRACTION = 0.1


@dataclass(frozen=True)
class MultiplierSpec:
    """One multiplier, identified by kind + parameters."""

    kind: str
    epsilon: float = 0.0
    tau: float = 0.0
    lam: float = 0.0
    mu: float = 0.0

    @staticmethod
    def gaussian_weight(epsilon: float, tau: float) -> "MultiplierSpec":
        if tau <= 0 or epsilon < 0:
            raise ValueError("gaussian weight needs tau > 0, epsilon >= 0")
        return MultiplierSpec("gaussian-weight", epsilon=epsilon, tau=tau)

    @staticmethod
    def regularizer(lam: float) -> "MultiplierSpec":
        if lam <= 0:
            raise ValueError("regularizer needs lam > 0")
        return MultiplierSpec("regularizer", lam=lam)

    @staticmethod
    def low_pass(mu: float) -> "MultiplierSpec":
        if mu <= 0:
            raise ValueError("low-pass needs mu > 0")
        return MultiplierSpec("low-pass", mu=mu)

    @staticmethod
    def low_pass_reg(mu: float, lam: float) -> "MultiplierSpec":
        if mu <= 0 or lam <= 0:
            raise ValueError("low-pass-reg needs mu > 0 and lam > 0")
        return MultiplierSpec("low-pass-reg", mu=mu, lam=lam)

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        """Evaluate the (real, even) symbol on angular frequencies xi."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "gaussian-weight":
            return np.exp(-self.epsilon * xi**2 / (2.0 * self.tau))
        if self.kind == "regularizer":
            return np.exp(-(xi**2) / self.lam)
        if self.kind == "low-pass":
            return _PROFILE(xi / self.mu)
        if self.kind == "low-pass-reg":
            return smoothed_profile(xi / self.mu, self.lam)
        raise ValueError(f"unknown multiplier kind {self.kind!r}")

    def label(self) -> str:
        p = {
            "gaussian-weight": f"(eps={self.epsilon:g}, tau={self.tau:g})",
            "regularizer": f"(lam={self.lam:g})",
            "low-pass": f"(mu={self.mu:g})",
            "low-pass-reg": f"(mu={self.mu:g}, lam={self.lam:g})",
        }[self.kind]
        return self.kind + p


def smoothed_profile(s, lam: float, quad_points: int = 4001) -> np.ndarray:
    """The low-pass profile smoothed at scale lam in its own variable:
    (G_lam * m)(s) with G_lam(y) = sqrt(lam/4pi) exp(-lam y^2/4).

    Fixed-node Simpson quadrature over the profile's support [-1, 1]; the
    kernel width is sqrt(2/lam), so the default node count resolves scales
    lam <~ 1e5 comfortably.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    sq = np.linspace(-1.0, 1.0, quad_points)
    w = np.full(quad_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (sq[1] - sq[0]) / 3.0
    mv = _PROFILE(sq) * w
    kern = np.exp(-lam * (s[:, None] - sq[None, :]) ** 2 / 4.0)
    out = math.sqrt(lam / (4.0 * math.pi)) * kern @ mv
    return np.clip(out, 0.0, 1.0)


def _support_rows(values: np.ndarray) -> tuple[int, int] | None:
    mags = np.max(np.abs(values), axis=1)
    peak = mags.max()
    if peak == 0.0:
        return None
    hit = np.nonzero(mags > _SUPPORT_RTOL * peak)[0]
    return int(hit[0]), int(hit[-1])


def apply(
    spec: MultiplierSpec, u: ScalarField, boundary: str = "pad"
) -> ScalarField:
    """Apply the multiplier along the time axis.

    boundary="pad" (default): zero-pad to the next power of two >= 2 nt and
    refuse fields whose time support reaches within 10% of the grid edge
    (SupportTooWide).  boundary="periodic": plain DFT on the raw grid, exact
    on tones; no guard.
    """
    if boundary not in ("pad", "periodic"):
        raise ValueError(f"boundary must be 'pad' or 'periodic', got {boundary!r}")
    g = u.grid
    v = u.values
    if boundary == "pad":
        rows = _support_rows(v)
        if rows is not None:
            margin = int(math.ceil(_EDGE_FRACTION * g.nt))
            lo, hi = rows
            if lo < margin or hi > g.nt - 1 - margin:
                raise SupportTooWide(
                    f"time support occupies rows [{lo}, {hi}] of {g.nt}; "
                    f"needs a clear margin of {margin} rows at both edges"
                )
        n_fft = 1 << (2 * g.nt - 1).bit_length()
    else:
        n_fft = g.nt
    xi = 2.0 * math.pi * np.fft.fftfreq(n_fft, d=g.dt)
    mult = spec.symbol(xi)[:, None]
    spectrum = np.fft.fft(v, n=n_fft, axis=0)
    out = np.fft.ifft(mult * spectrum, axis=0)[: g.nt]
    if not np.iscomplexobj(v):
        out = out.real
    return ScalarField(g, out)


def conjugation_residual(
    cfg: GeometryConfig,
    u: ScalarField,
    epsilon: float,
    tau: float,
    boundary: str = "pad",
) -> float:
    """Relative L2 defect of the weight-conjugation identity

        E (t u) = (t + (eps/tau) d_t) E u,   E = gaussian-weight(eps, tau).

    Exact on the line; discretely the defect is the central-difference error
    on d_t(E u) plus the line-vs-circle truncation, both O(dt^2).
    """
    E = MultiplierSpec.gaussian_weight(epsilon, tau)
    t_col = u.grid.t[:, None]
    lhs = apply(E, ScalarField(u.grid, t_col * u.values), boundary=boundary)
    Eu = apply(E, u, boundary=boundary)
    d_t = gradient(Eu).comp_t
    rhs = t_col * Eu.values + (epsilon / tau) * d_t
    diff = ScalarField(u.grid, lhs.values - rhs)
    denom = norm(cfg, u, kind="L2")
    if denom == 0.0:
        return 0.0
    return norm(cfg, diff, kind="L2") / denom


# ---------------------------------------------------------------------------
# Envelope probes
# ---------------------------------------------------------------------------

PROBE_IDS = ("A2", "LL2_3", "LL2_4", "LL2_10", "LL2_11", "LL2_13", "LL2_14")


@dataclass
class ProbeReport:
    """Fit of one decay envelope over a parameter sweep."""

    lemma_id: str
    sweep: list[float]
    lhs_values: list[float]
    fitted_C: float
    fitted_rate: float
    expected_rate: float | None
    rate_tolerance: float
    validated: bool
    passed: bool
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "sweep": list(self.sweep),
            "lhs_values": list(self.lhs_values),
            "fitted_C": self.fitted_C,
            "fitted_rate": self.fitted_rate,
            "expected_rate": self.expected_rate,
            "rate_tolerance": self.rate_tolerance,
            "validated": self.validated,
            "pass": self.passed,
            "notes": self.notes,
        }


def _fit_probe(
    lemma_id: str,
    params: np.ndarray,
    lhs: np.ndarray,
    known: np.ndarray,
    expected_rate: float | None,
    rate_tol: float,
    decay: bool,
    notes: str = "",
    one_sided: bool = False,
) -> ProbeReport:
    """Least-squares envelope fit with the two largest parameters held out.

    The rate comes from the fit set (all points when only 4 are given); the
    dominating constant is lifted over the fit set and validated against the
    held-out points (which may not raise it by more than 10x).  With
    ``one_sided`` the measured decay only has to be at least the claimed
    rate — decaying faster than the asserted envelope is consistent.
    """
    if params.size < 4:
        raise InsufficientSweep(
            f"{lemma_id}: need at least 4 sweep samples, got {params.size}"
        )
    floor = max(lhs.max() * 1e-14, 1e-290)
    usable = lhs > floor
    if usable.sum() < 4:
        raise InsufficientSweep(
            f"{lemma_id}: only {int(usable.sum())} sweep samples above the "
            "numerical floor"
        )
    order = np.argsort(params)
    params, lhs, known, usable = (
        params[order], lhs[order], known[order], usable[order]
    )
    y = np.where(usable, np.log(np.maximum(lhs, floor)), 0.0) - known

    n_fit = params.size - 2 if usable[: params.size - 2].sum() >= 3 else params.size
    fit_idx = np.nonzero(usable[:n_fit])[0]
    slope, intercept = np.polyfit(params[fit_idx], y[fit_idx], 1)

    resid = y - slope * params
    c_fit = float(np.exp(resid[fit_idx].max()))
    c_all = float(np.exp(resid[usable].max()))
    validated = c_all <= 10.0 * c_fit and math.isfinite(c_all)

    rate = -slope if decay else slope
    if expected_rate is None:
        # No pinned constant: the claimed form just has to decay visibly.
        rate_ok = decay and rate * (params[-1] - params[0]) > 2.0
    elif one_sided:
        rate_ok = rate >= expected_rate * (1.0 - rate_tol)
    else:
        rate_ok = abs(rate - expected_rate) <= rate_tol * abs(expected_rate)

    return ProbeReport(
        lemma_id=lemma_id,
        sweep=[float(p) for p in params],
        lhs_values=[float(v) for v in lhs],
        fitted_C=c_fit,
        fitted_rate=float(rate),
        expected_rate=expected_rate,
        rate_tolerance=rate_tol,
        validated=bool(validated),
        passed=bool(validated and rate_ok),
        notes=notes,
    )


@dataclass
class ProbeInstance:
    """Geometry of one envelope probe: supports separated by ``separation``
    on a time window [-extent, extent], discretized with nt points."""

    separation: float = 1.0
    extent: float = 4.0
    nt: int = 641
    nx: int = 33
    seed: int = 0
    tau: float = 2.0
    epsilon: float = 1.0
    lam_fixed: float = 400.0
    half_line_edge: float = 0.5

    def grid(self) -> GridSpec:
        return GridSpec(-self.extent, self.extent, -1.0, 1.0, self.nt, self.nx)


def _x_bump(x: np.ndarray) -> np.ndarray:
    return np.exp(-4.0 * x**2)


def _left_cutoff(inst: ProbeInstance):
    """Profile supported in (-extent*0.7, -d/2], ~1 up to the inner edge."""
    d = inst.separation
    a = -0.7 * inst.extent
    return smooth_cutoff(CutoffSpec(a, a + 0.3, -d / 2 - 0.05, -d / 2))


def _right_cutoff(inst: ProbeInstance):
    d = inst.separation
    b = 0.7 * inst.extent
    return smooth_cutoff(CutoffSpec(d / 2, d / 2 + 0.05, b - 0.3, b))


def _band_limited_field(inst: ProbeInstance, window) -> ScalarField:
    """Seeded low-frequency field times a time window, on the probe grid."""
    g = inst.grid()
    rng = np.random.default_rng(inst.seed)
    t = g.t[:, None]
    vals = np.zeros((g.nt, 1))
    for k in range(1, 6):
        vals += rng.normal() * np.cos(k * t / inst.extent) + rng.normal() * np.sin(
            k * t / inst.extent
        )
    vals = (0.5 + 0.1 * vals) * window(g.t)[:, None]
    return ScalarField(g, vals * _x_bump(g.x)[None, :])


def _probe_a2(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """Smoothing across separated supports: || chi1 * R_lam(chi2 u) ||_L2
    decays like exp(-d^2 lam / 4).

    Near-indicator cutoffs keep the support gap exactly d, and the known
    lam^-1 prefactor of the erfc^2 tail integral is removed before the
    log-linear fit so the measured slope isolates the Gaussian rate.
    """
    d = inst.separation
    cfg = GeometryConfig()
    a = -0.7 * inst.extent
    b = 0.7 * inst.extent
    chi2 = smooth_cutoff(CutoffSpec(a, a + 0.3, -d / 2 - 0.005, -d / 2))
    chi1 = smooth_cutoff(CutoffSpec(d / 2, d / 2 + 0.005, b - 0.3, b))
    u = _band_limited_field(inst, lambda t: np.ones_like(t))
    g = u.grid
    inner = ScalarField(g, chi2(g.t)[:, None] * u.values)
    denom = norm(cfg, u, kind="L2")
    lhs = []
    for lam in sweep:
        sm = apply(MultiplierSpec.regularizer(lam), inner)
        outer = ScalarField(g, chi1(g.t)[:, None] * sm.values)
        lhs.append(norm(cfg, outer, kind="L2") / denom)
    return _fit_probe(
        "A2", sweep, np.array(lhs), -np.log(sweep),
        expected_rate=d * d / 4.0, rate_tol=0.15, decay=True,
        notes="rate pinned to d^2/4 from the explicit Gaussian kernel; "
        "lam^-1 tail prefactor removed before the fit",
    )


def _probe_ll2_3(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """Sup bound: |R_lam(f1) * f2|_inf over disjoint supports."""
    d = inst.separation
    f1 = _left_cutoff(inst)
    f2 = _right_cutoff(inst)
    g = inst.grid()
    fld1 = ScalarField(g, np.repeat(f1(g.t)[:, None], g.nx, axis=1))
    f2_col = f2(g.t)[:, None]
    lhs = []
    for lam in sweep:
        sm = apply(MultiplierSpec.regularizer(lam), fld1)
        lhs.append(float(np.max(np.abs(sm.values * f2_col))))
    return _fit_probe(
        "LL2_3", sweep, np.array(lhs), np.zeros_like(sweep),
        expected_rate=d * d / 4.0, rate_tol=0.5, decay=True,
    )


def _probe_ll2_4(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """H1 bound: || R_lam(f1) * f2 ||_H1 / || f1 ||_H1 across a gap."""
    d = inst.separation
    cfg = GeometryConfig()
    f2 = _right_cutoff(inst)
    u = _band_limited_field(inst, _left_cutoff(inst))
    g = u.grid
    f2_col = f2(g.t)[:, None]
    denom = norm(cfg, u, kind="H1")
    lhs = []
    for lam in sweep:
        sm = apply(MultiplierSpec.regularizer(lam), u)
        lhs.append(norm(cfg, ScalarField(g, sm.values * f2_col), kind="H1") / denom)
    return _fit_probe(
        "LL2_4", sweep, np.array(lhs), np.zeros_like(sweep),
        expected_rate=d * d / 4.0, rate_tol=0.5, decay=True,
    )


def _probe_ll2_10(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """Cutoff / low-pass / cutoff sandwich across a gap, mu = lam.

    Runs periodically: the smoothed intermediate has Gaussian tails, so pad
    mode would (correctly) refuse it, while the wrap-around path here is
    several times longer than the gap and contributes nothing measurable.
    """
    cfg = GeometryConfig()
    f1 = _right_cutoff(inst)
    u = _band_limited_field(inst, _left_cutoff(inst))
    g = u.grid
    f1_col = f1(g.t)[:, None]
    denom = norm(cfg, u, kind="H1")
    lhs = []
    for lam in sweep:
        inner = apply(MultiplierSpec.regularizer(lam), u, boundary="periodic")
        mid = apply(
            MultiplierSpec.low_pass_reg(lam, lam), inner, boundary="periodic"
        )
        lhs.append(
            norm(cfg, ScalarField(g, f1_col * mid.values), kind="H1") / denom
        )
    return _fit_probe(
        "LL2_10", sweep, np.array(lhs), np.zeros_like(sweep),
        expected_rate=None, rate_tol=0.0, decay=True,
    )


def _probe_ll2_11(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """Low-pass commutation through a smoothed factor: multiplying a
    low-passed field by f_lam creates only exponentially little mass beyond
    twice the cutoff, so the frequency-doubling leakage

        || (1 - M^{2mu}_lam) ( f_lam * M^mu_lam u ) ||_H1 / || u ||_H1

    decays in lam = mu.  Periodic mode, for the same reason as the sandwich
    probe: the smoothed factor f_lam has full-width Gaussian tails.
    """
    cfg = GeometryConfig()
    f = _left_cutoff(inst)
    u = _band_limited_field(inst, lambda t: np.ones_like(t))
    g = u.grid
    denom = norm(cfg, u, kind="H1")
    f_field = ScalarField(g, np.repeat(f(g.t)[:, None], g.nx, axis=1))
    lhs = []
    for lam in sweep:
        f_lam = apply(
            MultiplierSpec.regularizer(lam), f_field, boundary="periodic"
        ).values
        inner = apply(
            MultiplierSpec.low_pass_reg(lam, lam), u, boundary="periodic"
        )
        prod = ScalarField(g, f_lam * inner.values)
        passed = apply(
            MultiplierSpec.low_pass_reg(2 * lam, lam), prod, boundary="periodic"
        )
        defect = ScalarField(g, prod.values - passed.values)
        lhs.append(norm(cfg, defect, kind="H1") / denom)
    return _fit_probe(
        "LL2_11", sweep, np.array(lhs), np.zeros_like(sweep),
        expected_rate=None, rate_tol=0.0, decay=True,
    )


def _probe_ll2_13(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """Exponential weight against a smoothed half-line cutoff:
    max_s e^{tau s} chi_lam(s) <= C <lam>^(1/2) e^{D tau} e^{tau^2/lam};
    after removing tau^2/lam the log-slope in tau is the support edge D.

    1-D convolution on a fine shared grid, independent of the FFT machinery
    under test.  The cutoff's ramp is much narrower than the smoothing
    width sqrt(2/lam), and the sweep sits in the regime tau >~ sqrt(lam)
    where the maximizer has crossed into the Gaussian tail, so the slope
    isolates D up to O(1/sqrt(lam)).
    """
    D = inst.half_line_edge
    lam = inst.lam_fixed
    chi = smooth_cutoff(CutoffSpec(-math.inf, -math.inf, D - 0.02, D))
    h = 2.5e-4
    s = np.arange(-2.0, D + 1.2, h)
    sigma = math.sqrt(2.0 / lam) / h
    chi_lam = gaussian_filter1d(chi(s), sigma=sigma, mode="nearest", truncate=12.0)
    lhs = np.array([float(np.max(np.exp(tau * s) * chi_lam)) for tau in sweep])
    known = sweep**2 / lam
    return _fit_probe(
        "LL2_13", sweep, lhs, known,
        expected_rate=D, rate_tol=0.2, decay=False,
        notes=f"slope compared against the support edge D={D} after "
        "removing the tau^2/lam term; lam fixed at "
        f"{lam}; growth envelope, not decay",
    )


def _probe_ll2_14(inst: ProbeInstance, sweep: np.ndarray) -> ProbeReport:
    """High-frequency damping of the conjugation weight through the
    complement of a low-pass: symbol-level sup over a dense frequency grid.

    The claimed envelope is exp(-eps mu^2 / (8 tau)) plus a lam-tail; tying
    lam = 16 mu^2 puts both branches on the quadratic scale, and the check
    is one-sided: the measured sup must decay at least as fast as the
    envelope's slow branch eps/(8 tau) per unit mu^2.
    """
    eps, tau = inst.epsilon, inst.tau
    lhs = []
    for mu in sweep:
        lam = 16.0 * mu**2
        xi = np.linspace(0.0, 4.0 * mu, 8001)
        sym = np.exp(-eps * xi**2 / (2.0 * tau)) * (
            1.0 - smoothed_profile(xi / mu, lam)
        )
        lhs.append(float(sym.max()))
    return _fit_probe(
        "LL2_14", sweep**2, np.array(lhs), np.zeros_like(sweep),
        expected_rate=eps / (8.0 * tau), rate_tol=0.0, decay=True,
        one_sided=True,
        notes="parameter is mu^2; lam tied to 16 mu^2 so both envelope "
        "branches share the quadratic scale; one-sided rate check",
    )


_PROBES = {
    "A2": (_probe_a2, np.array([8.0, 16.0, 32.0, 64.0, 96.0])),
    "LL2_3": (_probe_ll2_3, np.array([8.0, 12.0, 16.0, 24.0, 32.0, 48.0])),
    "LL2_4": (_probe_ll2_4, np.array([8.0, 12.0, 16.0, 24.0, 32.0, 48.0])),
    "LL2_10": (_probe_ll2_10, np.array([8.0, 12.0, 16.0, 24.0, 32.0, 48.0])),
    "LL2_11": (_probe_ll2_11, np.array([8.0, 12.0, 16.0, 24.0, 32.0, 48.0])),
    "LL2_13": (_probe_ll2_13, np.array([12.0, 16.0, 20.0, 24.0, 28.0, 32.0])),
    "LL2_14": (_probe_ll2_14, np.array([2.5, 3.0, 3.5, 4.0, 4.5, 5.0])),
}


def bound_probe(
    lemma_id: str,
    sweep=None,
    instance: ProbeInstance | None = None,
) -> ProbeReport:
    """Run one envelope probe and fit (C, rate) by log-linear regression.

    ``lemma_id`` is one of PROBE_IDS; ``sweep`` overrides the default
    parameter sweep (fewer than 4 samples raises InsufficientSweep).
    """
    if lemma_id not in _PROBES:
        raise ValueError(f"lemma_id must be one of {PROBE_IDS}, got {lemma_id!r}")
    fn, default_sweep = _PROBES[lemma_id]
    params = np.asarray(sweep if sweep is not None else default_sweep, dtype=float)
    if params.size < 4:
        raise InsufficientSweep(
            f"{lemma_id}: need at least 4 sweep samples, got {params.size}"
        )
    return fn(instance or ProbeInstance(), params)

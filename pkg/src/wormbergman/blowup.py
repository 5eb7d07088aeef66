"""Weighted L^p integrals of z1-derivatives of the (0, -2) kernel near z1 = 0 and z1 = infinity.

On the probe cone

    {Re(z1 e^{-2 i alpha ln|zn|}) > |z'|^2, 1 + delta < |zn| < beta - delta,
     |theta1 - 2 alpha ln|zn|| < pi/4}

with ``|z1| < delta`` (near side) or ``|z1| > 1/delta`` (far side) we integrate
``|r_inf|^{p t} |d^m/dz1^m K(z, w)|^p``.  With ``phi = theta1 - 2 alpha ln rho``
one has ``|r_inf| = r1 cos(phi) - |z'|^2``, and the ``z'`` ball integral is

    int_{|z'|^2 < R} (R - |z'|^2)^{pt} dV(z') = pi^d Gamma(pt+1)/Gamma(pt+d+1) R^{pt+d}

with ``d = n - 2`` and ``R = r1 cos(phi)``.  The remaining ``(r1, phi, rho)``
integral is done by Gauss-Legendre, in ``ln r1`` one octave at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import InconclusiveFitError, PreconditionError
from .params import ModeIndex, WormParams
from .poles import ResidueExpansion, residue_series
from .quadrature import panel_rule

NEAR = "near"
FAR = "far"
LEADING = "LeadingTerm"
SERIES = "ResidueSeries"

CONVERGENT = "convergent"
LOG_DIVERGENT = "log-divergent"
POWER_DIVERGENT = "power-divergent"


@dataclass(frozen=True)
class SobolevParams:
    p: float
    s: float
    m: int
    t_frac: float

    def __post_init__(self):
        if self.p < 1:
            raise PreconditionError("p must be >= 1")
        if self.s < 0:
            raise PreconditionError("s must be >= 0")
        if not 0 <= self.t_frac < 1 or abs(self.m - self.t_frac - self.s) > 1e-12:
            raise PreconditionError("need s = m - t with 0 <= t < 1")

    @classmethod
    def from_s(cls, p: float, s: float) -> "SobolevParams":
        m = math.ceil(s - 1e-12)
        t = m - s
        if abs(t) < 1e-12:
            t = 0.0
        return cls(float(p), float(s), int(m), float(t))


@dataclass(frozen=True)
class ProbeRegion:
    delta: float
    angle_halfwidth: float = math.pi / 4
    annulus: tuple[float, float] = field(default=(0.0, 0.0))

    @classmethod
    def default(cls, p: WormParams, delta: float | None = None) -> "ProbeRegion":
        if delta is None:
            delta = min(0.05, (p.beta - 1) / 4)
        lo, hi = 1 + delta, p.beta - delta
        if not lo < hi:
            raise PreconditionError(f"empty annulus (1 + {delta}, {p.beta} - {delta})")
        return cls(delta, math.pi / 4, (lo, hi))

    @property
    def r1_max(self) -> float:
        return self.delta


@dataclass(frozen=True)
class Threshold:
    s_star: float
    lp_range: tuple[float, float] | None


def threshold_and_range(p: float, params: WormParams) -> Threshold:
    """``s* = nu + n (1/p - 1/2)`` and, when ``n alpha ln beta > pi``, the
    pair of exponents outside which even ``s = 0`` fails."""
    if p < 1:
        raise PreconditionError("p must be >= 1")
    n = params.dim
    s_star = params.nu + n * (1 / p - 0.5)
    gap = math.pi / (2 * n * params.alpha * params.log_beta)
    rng = (1 / (0.5 + gap), 1 / (0.5 - gap)) if n * params.alpha * params.log_beta > math.pi else None
    return Threshold(s_star, rng)


def radial_exponent(p, s, n: int, nu):
    """r1-power of the leading-term integrand on the near side (exact if inputs are Fractions)."""
    m = math.ceil(s)
    t = m - s
    return p * nu + p * t - p * m + n - 1 - p * Fraction(n, 2)


def far_radial_exponent(p, s, n: int, nu):
    """r1-power of the leading-term integrand on the far side."""
    m = math.ceil(s)
    t = m - s
    return p * t + n - 1 - p * (nu + Fraction(n, 2) + m)


def falling_factorial(a: complex, m: int) -> complex:
    out = 1 + 0j
    for i in range(m):
        out *= a - i
    return out


# ---------------------------------------------------------------------------
# kernel derivative on the model domain


@dataclass
class DerivativeTerms:
    """``d^m K / dz1^m = sum_j coeff_j z1^{power_j}`` at fixed ``w`` and ``|zn| = 1``."""

    coeffs: np.ndarray
    powers: np.ndarray


def default_w(params: WormParams) -> tuple[complex, complex]:
    """``(ln w1, wn)`` with ``w1 = 1``, ``|wn| = sqrt(beta)``."""
    return 0j, complex(math.sqrt(params.beta))


def derivative_terms(
    expansion: ResidueExpansion, m: int, params: WormParams, use_kernel: str = LEADING, w=None
) -> DerivativeTerms:
    """Differentiate the lifted residue terms ``m`` times in ``z1``.

    A strip term ``c e^{a (ln z1 - conj ln w1)}`` becomes, after the lift, a
    multiple of ``z1^{a - n/2}``; its ``m``-th derivative carries the falling
    factorial of ``a - n/2``.
    """
    logw1, wn = w if w is not None else default_w(params)
    n = params.dim
    terms = [expansion.winding_term] if use_kernel == LEADING else expansion.terms
    if use_kernel not in (LEADING, SERIES):
        raise PreconditionError(f"unknown kernel approximation {use_kernel!r}")
    lift = np.conj(np.exp(-n / 2 * logw1) * wn**-2)
    coeffs, powers = [], []
    for t in terms:
        b = t.exponent - n / 2
        c = t.coeff * np.exp(-t.exponent * np.conj(logw1)) * lift * falling_factorial(b, m)
        coeffs.append(c)
        powers.append(b - m)
    return DerivativeTerms(np.array(coeffs, dtype=complex), np.array(powers, dtype=complex))


def _ball_factor(pt: float, d: int) -> float:
    return math.exp(d * math.log(math.pi) + gammaln(pt + 1) - gammaln(pt + d + 1))


@dataclass
class TailGrid:
    """Quadrature in ``(phi, rho)``; ``r1`` nodes are added per octave."""

    phi: np.ndarray
    w_phi: np.ndarray
    rho: np.ndarray
    w_rho: np.ndarray

    @classmethod
    def build(cls, region: ProbeRegion, order: int = 24) -> "TailGrid":
        phi, wphi = panel_rule([-region.angle_halfwidth, region.angle_halfwidth], order)
        rho, wrho = panel_rule(list(region.annulus), order)
        return cls(phi, wphi, rho, wrho)


def _shell_integral(
    lo: float,
    hi: float,
    sp: SobolevParams,
    params: WormParams,
    terms: DerivativeTerms,
    grid: TailGrid,
    nodes_per_octave: int = 12,
    modulus_only: bool = False,
) -> float:
    """Integral over ``lo < r1 < hi`` of the probe cone."""
    octaves = max(1, math.ceil(math.log2(hi / lo) - 1e-9))
    u, wu = panel_rule(np.linspace(math.log(lo), math.log(hi), octaves + 1), nodes_per_octave)
    r1 = np.exp(u)
    n = params.dim
    d = n - 2
    pt = sp.p * sp.t_frac
    R, PHI, RHO = np.meshgrid(r1, grid.phi, grid.rho, indexing="ij")
    theta1 = PHI + 2 * params.alpha * np.log(RHO)
    log_r1 = np.log(R)
    # sum_j c_j z1^{b_j}, z1^{b} = exp(b (ln r1 + i theta1))
    lz = log_r1 + 1j * theta1
    if modulus_only:
        lz = log_r1 + 0j
    deriv = np.zeros(R.shape, dtype=complex)
    for c, b in zip(terms.coeffs, terms.powers):
        deriv += c * np.exp(b * lz)
    kernel_p = np.abs(deriv) ** sp.p * RHO ** (-2 * sp.p)
    ball = _ball_factor(pt, d) * (R * np.cos(PHI)) ** (pt + d)
    # dV = r1 dr1 dtheta1 * dV(z') * rho drho dt; dr1 = r1 du
    dens = 2 * math.pi * kernel_p * ball * R**2 * RHO
    w = wu[:, None, None] * grid.w_phi[None, :, None] * grid.w_rho[None, None, :]
    return float(np.sum(dens * w))


def sobolev_tail_integral(
    sp: SobolevParams,
    region: ProbeRegion,
    params: WormParams,
    eps: float,
    w=None,
    use_kernel: str = LEADING,
    side: str = NEAR,
    modulus_only: bool = False,
) -> float:
    """``I(eps)``: the cone integral over ``eps < r1 < delta`` (near) or ``1/delta < r1 < 1/eps`` (far)."""
    if not 0 < eps < region.r1_max:
        raise PreconditionError(f"eps must lie in (0, {region.r1_max})")
    mode = ModeIndex.for_dim(params.dim)
    exp_side = "lower" if side == NEAR else "upper"
    if side not in (NEAR, FAR):
        raise PreconditionError("side must be 'near' or 'far'")
    expansion = residue_series(mode, params, side=exp_side)
    terms = derivative_terms(expansion, sp.m, params, use_kernel, w)
    grid = TailGrid.build(region)
    lo, hi = (eps, region.delta) if side == NEAR else (1 / region.delta, 1 / eps)
    return _shell_integral(lo, hi, sp, params, terms, grid, modulus_only=modulus_only)


# ---------------------------------------------------------------------------
# classification


def default_eps_grid(region: ProbeRegion, lo_power: int = 4, hi_power: int = 14) -> list[float]:
    """``2^-j`` for ``j = lo..hi``, dropping values not below ``delta``."""
    return [2.0**-j for j in range(lo_power, hi_power + 1) if 2.0**-j < region.delta]


@dataclass
class TailProfile:
    eps: np.ndarray
    integral: np.ndarray  # cumulative I(eps_j)
    increments: np.ndarray  # I(eps_{j+1}) - I(eps_j)


def tail_profile(
    sp: SobolevParams,
    region: ProbeRegion,
    params: WormParams,
    eps_grid,
    w=None,
    use_kernel: str = LEADING,
    side: str = NEAR,
    modulus_only: bool = False,
) -> TailProfile:
    """``I(eps)`` on a decreasing grid, built shell by shell."""
    eps = np.sort(np.asarray(eps_grid, dtype=float))[::-1]
    if eps[0] >= region.delta:
        raise PreconditionError("eps grid must lie below delta")
    mode = ModeIndex.for_dim(params.dim)
    expansion = residue_series(mode, params, side="lower" if side == NEAR else "upper")
    terms = derivative_terms(expansion, sp.m, params, use_kernel, w)
    grid = TailGrid.build(region)
    outer = [region.delta] + list(eps)
    shells = []
    for a, b in zip(outer[1:], outer[:-1]):
        lo, hi = (a, b) if side == NEAR else (1 / b, 1 / a)
        shells.append(_shell_integral(lo, hi, sp, params, terms, grid, modulus_only=modulus_only))
    cum = np.cumsum(shells)
    return TailProfile(eps, cum, np.array(shells[1:]))


@dataclass
class Classification:
    label: str
    slope: float  # growth rate of shell contributions in ln(1/eps)
    r_squared: float  # of I(eps) against ln(1/eps)
    residual: float

    @property
    def divergent(self) -> bool:
        return self.label != CONVERGENT


def classify_profile(profile: TailProfile, slope_tol: float = 0.02, max_residual: float = 0.25) -> Classification:
    """Slope of ``ln(shell)`` against ``ln(1/eps)``.

    Shells over octaves behave like ``eps^{e+1}``: negative slope means the
    tail converges, zero means ``I`` grows like ``ln(1/eps)``, positive means
    power growth.
    """
    inc = profile.increments
    if np.any(inc <= 0) or not np.all(np.isfinite(inc)):
        raise InconclusiveFitError("nonpositive or non-finite shell integral")
    x = np.log(1 / profile.eps[1:])
    y = np.log(inc)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - A @ coef) ** 2)))
    if resid > max_residual:
        raise InconclusiveFitError(f"shell regression residual {resid:.3f} exceeds {max_residual}")
    slope = float(coef[0])
    xI = np.log(1 / profile.eps)
    r2 = _r_squared(xI, profile.integral)
    if slope < -slope_tol:
        label = CONVERGENT
    elif slope <= slope_tol:
        label = LOG_DIVERGENT
    else:
        label = POWER_DIVERGENT
    return Classification(label, slope, r2, resid)


def _r_squared(x, y) -> float:
    coef = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - np.polyval(coef, x)) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def log_fit(profile: TailProfile) -> tuple[float, float, float]:
    """``I(eps) = a ln(1/eps) + b``; returns ``(a, b, R^2)``."""
    x = np.log(1 / profile.eps)
    a, b = np.polyfit(x, profile.integral, 1)
    return float(a), float(b), _r_squared(x, profile.integral)


@dataclass
class ScanRow:
    p: float
    s: float
    s_star: float
    eps: float
    integral: float
    slope: float
    label: str
    r_squared: float
    side: str


SCAN_COLUMNS = ["p", "s", "s_star", "eps", "I_eps", "fit_slope", "classification", "r_squared", "side"]


@dataclass
class ScanResult:
    rows: list[ScanRow]
    table: dict  # (p, s) -> Classification (combined over sides)

    def boundary(self, p: float) -> float | None:
        """Midpoint between the last convergent and first divergent ``s`` for this ``p``."""
        pts = sorted((s, c.divergent) for (pp, s), c in self.table.items() if pp == p)
        for (s0, d0), (s1, d1) in zip(pts, pts[1:]):
            if not d0 and d1:
                return 0.5 * (s0 + s1)
        return None

    def monotone(self, p: float) -> bool:
        flags = [c.divergent for (pp, s), c in sorted(self.table.items()) if pp == p]
        return all(b or not a for a, b in zip(flags, flags[1:]))


def divergence_scan(
    p_grid,
    s_grid,
    params: WormParams,
    region: ProbeRegion | None = None,
    eps_grid=None,
    use_kernel: str = LEADING,
    sides=(NEAR,),
    slope_tol: float = 0.02,
) -> ScanResult:
    """Classify each ``(p, s)``; with several sides, divergence on any side wins."""
    region = region or ProbeRegion.default(params)
    eps_grid = eps_grid if eps_grid is not None else default_eps_grid(region)
    rows, table = [], {}
    rank = {CONVERGENT: 0, LOG_DIVERGENT: 1, POWER_DIVERGENT: 2}
    for p in p_grid:
        s_star = threshold_and_range(p, params).s_star
        for s in s_grid:
            sp = SobolevParams.from_s(p, s)
            worst = None
            for side in sides:
                prof = tail_profile(sp, region, params, eps_grid, use_kernel=use_kernel, side=side)
                cls = classify_profile(prof, slope_tol)
                for e, I in zip(prof.eps, prof.integral):
                    rows.append(ScanRow(p, s, s_star, e, I, cls.slope, cls.label, cls.r_squared, side))
                if worst is None or rank[cls.label] > rank[worst.label]:
                    worst = cls
            table[(p, s)] = worst
    return ScanResult(rows, table)


def s_grid_around(s_star: float, step: float = 0.05, half_width: int = 4) -> list[float]:
    """Multiples of ``step`` bracketing ``s_star``, clipped at 0."""
    base = math.floor(s_star / step)
    return [round((base + i) * step, 10) for i in range(-half_width + 1, half_width + 1) if (base + i) * step >= 0]


"""Zeros of ``G(zeta) = F(W_Jk)(-2 i zeta)`` and the residue expansion of the strip kernel.

The strip kernel is ``K(z, w) = PREF * int_R e^{i X xi} / G(xi) d xi`` with
``X = z - conj(w)``.  Moving the line of integration down to
``Im xi = -(nu + eps)`` picks up ``-2 pi i`` times the residue at each zero
passed, moving it up picks up ``+2 pi i``.  A simple zero ``zeta0`` therefore
contributes ``c e^{i X zeta0}`` with ``c = -+ 2 pi i PREF / G'(zeta0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CountMismatchError, DoublePoleError, PreconditionError, ToleranceError
from .params import ModeIndex, WormParams
from .quadrature import panel_rule
from .weight import (
    WeightSpec,
    fourier_weight,
    fourier_weight_derivative,
    fourier_weight_logderiv,
    log_fourier_weight,
)

# (2 pi)^{-3/2}: Plancherel normalization of the weighted strip kernel, pinned by
# the reproducing-property test (the 1/sqrt(2 pi) form is off by 2 pi)
KERNEL_PREFACTOR = (2.0 * math.pi) ** -1.5

COSINE = "CosineFactor"
ANNULUS = "AnnulusFactor"


# ---------------------------------------------------------------------------
# G and its derivatives


def g_value(zeta, spec: WeightSpec):
    vals, _ = fourier_weight(-2j * np.asarray(zeta, dtype=complex), spec)
    return vals


def g_log(zeta, spec: WeightSpec):
    logF, _ = log_fourier_weight(-2j * np.atleast_1d(np.asarray(zeta, dtype=complex)), spec)
    return logF


def g_logderiv(zeta, spec: WeightSpec):
    return -2j * fourier_weight_logderiv(-2j * np.asarray(zeta, dtype=complex), spec)


def g_derivative(zeta, spec: WeightSpec):
    return -2j * fourier_weight_derivative(-2j * np.atleast_1d(np.asarray(zeta, dtype=complex)), spec)


# ---------------------------------------------------------------------------
# predicted zeros


@dataclass(frozen=True)
class Region:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise PreconditionError(f"degenerate region {self}")

    def contains(self, z: complex, slack: float = 1e-12) -> bool:
        return (self.x0 - slack <= z.real <= self.x1 + slack) and (self.y0 - slack <= z.imag <= self.y1 + slack)

    def expanded(self, eta: float) -> "Region":
        return Region(self.x0 - eta, self.x1 + eta, self.y0 - eta, self.y1 + eta)

    def boundary_distance(self, z: complex) -> float:
        """Distance from ``z`` to the rectangle's boundary curve."""
        x, y = z.real, z.imag
        dx = max(self.x0 - x, 0.0, x - self.x1)
        dy = max(self.y0 - y, 0.0, y - self.y1)
        if dx == 0 and dy == 0:
            return min(x - self.x0, self.x1 - x, y - self.y0, self.y1 - y)
        return math.hypot(dx, dy)

    @classmethod
    def parse(cls, text: str) -> "Region":
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 4:
            raise PreconditionError("region must be x0,x1,y0,y1")
        return cls(*vals)


@dataclass
class Pole:
    location: complex
    source: str
    multiplicity: int = 1
    residual: float = float("nan")


@dataclass
class PoleSet:
    poles: list[Pole]
    search_region: Region

    def locations(self) -> np.ndarray:
        return np.array([p.location for p in self.poles], dtype=complex)

    def __len__(self):
        return len(self.poles)

    @property
    def count(self) -> int:
        """Zeros counted with multiplicity."""
        return sum(p.multiplicity for p in self.poles)

    def rows(self):
        for p in self.poles:
            yield [p.location.real, p.location.imag, p.source, p.multiplicity, p.residual]


POLE_COLUMNS = ["re", "im", "source", "multiplicity", "residual"]


def _cosine_zeros(q: int, band: float) -> list[complex]:
    """Cosine-factor zeros with ``|Im| <= band``, indexed as in the enumerated lists."""
    out = []
    mmax = int(math.ceil(band)) + 1
    if q % 2 == 0:
        excluded = set(range(-(q // 2), q // 2 + 1))
        for m in range(-mmax, mmax + 1):
            if m not in excluded:
                out.append(complex(0.0, m))
    else:
        half = (q - 1) // 2
        excluded = set(range(-half, half + 1)) | {-(q + 1) // 2}
        for m in range(-mmax - 1, mmax + 1):
            if m not in excluded:
                out.append(complex(0.0, m + 0.5))
    return [z for z in out if abs(z.imag) <= band + 1e-12]


def _annulus_zeros(p: WormParams, k: int, band: float) -> list[complex]:
    step = math.pi / (2 * p.alpha * p.log_beta)
    re = (k + 1) / (2 * p.alpha)
    mmax = int(band / step) + 1
    return [complex(re, m * step) for m in range(-mmax, mmax + 1) if m != 0 and abs(m * step) <= band + 1e-12]


def _merge(cos: list[complex], ann: list[complex], tol: float = 1e-9) -> list[Pole]:
    poles = [Pole(z, COSINE) for z in cos]
    for z in ann:
        hit = next((p for p in poles if abs(p.location - z) < tol), None)
        if hit is None:
            poles.append(Pole(z, ANNULUS))
        else:
            hit.multiplicity = 2
            hit.source = f"{COSINE}+{ANNULUS}"
    poles.sort(key=lambda p: (p.location.imag, p.location.real))
    return poles


def all_zeros(mode: ModeIndex, p: WormParams, band: float) -> list[Pole]:
    q = mode.cos_power(p.dim)
    return _merge(_cosine_zeros(q, band), _annulus_zeros(p, mode.k, band))


def poles_predicted(mode: ModeIndex, p: WormParams, region: Region) -> PoleSet:
    """Zeros of ``G`` inside the closed rectangle ``region``, with source tags."""
    mode.check_dim(p.dim)
    band = max(abs(region.y0), abs(region.y1))
    poles = [z for z in all_zeros(mode, p, band) if region.contains(z.location)]
    return PoleSet(poles, region)


def double_pole_detect(mode: ModeIndex, p: WormParams, band: float | None = None) -> list[Pole]:
    """Coincident cosine/annulus zeros with ``|Im| <= band``."""
    if band is None:
        band = max(p.nu, (mode.j_abs + p.dim) / 2) + 10.0
    return [z for z in all_zeros(mode, p, band) if z.multiplicity > 1]


# ---------------------------------------------------------------------------
# numeric confirmation


def _contour_for(region: Region, zeros: list[complex], min_gap: float = 0.05) -> Region:
    """Contour for the closed region, nudged outward off any zero on its edge."""
    for eta in np.arange(0.0, 0.5, 0.01):
        c = region.expanded(float(eta))
        gap = min((c.boundary_distance(z) for z in zeros), default=np.inf)
        shell = any(c.contains(z, 0.0) and not region.contains(z) for z in zeros)
        if gap >= min_gap and not shell:
            return c
    raise PreconditionError("could not place a contour away from the zeros")


def argument_principle_count(spec: WeightSpec, contour: Region, nodes: int = 4096) -> float:
    """``(1/2 pi i) oint G'/G`` around the rectangle, Gauss-Legendre on each edge."""
    per_edge = nodes // 4
    order = 16
    t, w = panel_rule(np.linspace(0.0, 1.0, per_edge // order + 1), order)
    corners = [
        complex(contour.x0, contour.y0),
        complex(contour.x1, contour.y0),
        complex(contour.x1, contour.y1),
        complex(contour.x0, contour.y1),
    ]
    total = 0j
    for a, b in zip(corners, corners[1:] + corners[:1]):
        z = a + (b - a) * t
        total += np.sum(w * g_logderiv(z, spec)) * (b - a)
    return (total / (2j * math.pi)).real


def newton_refine(spec: WeightSpec, z0: complex, tol: float = 1e-10, max_iter: int = 60) -> tuple[complex, float]:
    """Newton on ``G`` using ``G/G' = 1 / (log G)'``; returns ``(zero, |G|)``."""
    z = complex(z0)
    for _ in range(max_iter):
        ld = complex(g_logderiv(np.array([z]), spec)[0])
        if not np.isfinite(ld):
            break
        if ld == 0:
            # secant fallback
            h = 1e-7
            g1, g2 = g_value(np.array([z, z + h]), spec)
            step = g1 * h / (g2 - g1)
        else:
            step = 1.0 / ld
        z -= step
        if abs(step) < tol * 1e-4:
            break
    return z, float(abs(g_value(np.array([z]), spec)[0]))


def poles_numeric(
    mode: ModeIndex,
    p: WormParams,
    region: Region,
    tol: float = 1e-8,
    nodes: int = 4096,
    seed_offset: complex = 1e-3 + 1e-3j,
) -> PoleSet:
    """Confirm the predicted zeros by contour counting and Newton refinement.

    Each seed is displaced by ``seed_offset`` before refinement so that
    agreement with the prediction is a genuine check.
    """
    spec = WeightSpec.build(mode, p)
    predicted = poles_predicted(mode, p, region)
    nearby = [z.location for z in all_zeros(mode, p, max(abs(region.y0), abs(region.y1)) + 1.0)]
    contour = _contour_for(region, nearby)
    raw = argument_principle_count(spec, contour, nodes)
    count = int(round(raw))
    if abs(raw - count) > 0.05:
        raise ToleranceError(f"argument-principle integral {raw:.6f} is not near an integer")
    if count != predicted.count:
        raise CountMismatchError(
            f"argument principle counts {count} zeros in {contour}, prediction lists {predicted.count}"
        )
    refined = []
    for pole in predicted.poles:
        z, res = newton_refine(spec, pole.location + seed_offset, tol=tol)
        if abs(z - pole.location) > max(100 * tol, 1e-6):
            raise ToleranceError(f"Newton from {pole.location} converged to {z}")
        refined.append(Pole(z, pole.source, pole.multiplicity, res))
    out = PoleSet(refined, region)
    out.contour_count = count  # type: ignore[attr-defined]
    return out


# ---------------------------------------------------------------------------
# residue expansion


@dataclass
class ResidueTerm:
    """One term ``coeff * exp(exponent * X)`` of the strip kernel."""

    coeff: complex
    exponent: complex
    zeta: complex
    source: str
    ell: int | None = None


@dataclass
class ResidueExpansion:
    discrete_terms: list[ResidueTerm]
    winding_term: ResidueTerm
    remainder_order: float
    depth: float
    next_depth: float
    side: str = "lower"
    mode: ModeIndex | None = None
    extra_terms: list[ResidueTerm] = field(default_factory=list)

    @property
    def terms(self) -> list[ResidueTerm]:
        out = self.discrete_terms + self.extra_terms + [self.winding_term]
        return sorted(out, key=lambda t: abs(t.zeta.imag))

    def evaluate(self, X):
        X = np.asarray(X, dtype=complex)
        return sum(t.coeff * np.exp(t.exponent * X) for t in self.terms)


def default_epsilon(depths: list[float], nu: float) -> float:
    """``min(0.1, half the gap from nu to the next deeper zero)``."""
    deeper = [d for d in depths if d > nu + 1e-12]
    if not deeper:
        return 0.1
    return min(0.1, 0.5 * (min(deeper) - nu))


def residue_series(
    mode: ModeIndex,
    p: WormParams,
    depth_epsilon: float | None = None,
    side: str = "lower",
) -> ResidueExpansion:
    """Residue expansion of the strip kernel through depth ``nu + eps``.

    ``side="lower"`` gives the expansion as ``Re(z - conj(w)) -> -infinity``
    (``z1 -> 0`` on the model domain), ``side="upper"`` the one as
    ``Re(z - conj(w)) -> +infinity``.
    """
    if side not in ("lower", "upper"):
        raise PreconditionError("side must be 'lower' or 'upper'")
    mode.check_dim(p.dim)
    spec = WeightSpec.build(mode, p)
    nu = p.nu
    sgn = -1.0 if side == "lower" else 1.0
    zeros = [z for z in all_zeros(mode, p, 2 * nu + (mode.j_abs + p.dim) / 2 + 2) if sgn * z.location.imag > 0]
    depths = sorted({round(abs(z.location.imag), 12) for z in zeros})
    eps = default_epsilon(depths, nu) if depth_epsilon is None else float(depth_epsilon)
    if eps <= 0:
        raise PreconditionError("depth epsilon must be positive")
    limit = nu + eps
    if any(abs(abs(z.location.imag) - limit) < 1e-9 for z in zeros):
        raise PreconditionError(f"a zero lies on the shifted contour |Im xi| = {limit}")
    inside = [z for z in zeros if abs(z.location.imag) < limit]
    doubles = [z for z in inside if z.multiplicity > 1]
    if doubles:
        raise DoublePoleError(
            f"double zeros at {[z.location for z in doubles]}; their terms carry logarithms"
        )
    locs = np.array([z.location for z in inside])
    dG = g_derivative(locs, spec)
    if np.any(np.abs(dG) < 1e-6):
        raise ToleranceError("zero in the band is not numerically simple")
    factor = (-2j if side == "lower" else 2j) * math.pi * KERNEL_PREFACTOR
    discrete, extra, winding = [], [], None
    base = (mode.j_abs + p.dim) / 2
    for z, d in zip(inside, dG):
        term = ResidueTerm(factor / d, 1j * z.location, z.location, z.source)
        depth = abs(z.location.imag)
        if z.source == ANNULUS and abs(depth - nu) < 1e-9:
            winding = term
        elif z.source == COSINE:
            term.ell = int(round(depth - base))
            discrete.append(term)
        else:
            extra.append(term)
    if winding is None:
        raise PreconditionError("winding zero missing from the band")
    discrete.sort(key=lambda t: abs(t.zeta.imag))
    deeper = [d for d in depths if d > limit]
    return ResidueExpansion(
        discrete_terms=discrete,
        winding_term=winding,
        remainder_order=limit,
        depth=limit,
        next_depth=min(deeper) if deeper else math.inf,
        side=side,
        mode=mode,
        extra_terms=extra,
    )

r"""Strip weight ``W_Jk`` and its Fourier transform.

With ``q = |J| + n - 2`` and ``L = ln beta``,

.. math::
    W_{Jk}(\theta) = C_{nJ}\int_0^{2L} \cos^q(\theta-\alpha t)\,
        \chi_{\pi/2}(\theta-\alpha t)\, e^{(k+1)t}\,dt,

and with :math:`\mathcal F f(\xi) = (2\pi)^{-1/2}\int f(t)e^{-i\xi t}dt`

.. math::
    \mathcal F W_{Jk}(\xi) = D_{nJ}\, e^{-i\xi\pi/2}
        \frac{(e^{i\xi\pi} - (-1)^q)}{\prod_{s=0}^{q}(\xi + q - 2s)}
        \frac{e^{2L(k+1-i\alpha\xi)} - 1}{k+1-i\alpha\xi},
    \qquad D_{nJ} = C_{nJ}\,\frac{(-i)^{q+1}\,q!}{\sqrt{2\pi}}.

``D_nJ`` comes from convolving the two factor transforms and undoing the
``y/alpha`` dilation; it is checked against a brute-force transform in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import PoleError, WormValidationError
from .params import ModeIndex, WormParams
from .quadrature import gauss_legendre

SQRT_2PI = math.sqrt(2.0 * math.pi)
REMOVABLE_RADIUS = 1e-4


def cnj_constant(n: int, J: Sequence[int]) -> float:
    """Norm-reduction constant ``(2 pi)^{n-1} 2^{1-n} prod(j_i!) / (|J|+n-2)!``.

    Produced by integrating out the ``n - 1`` torus angles, the ``z'`` ball
    (a Dirichlet integral) and the substitution ``s = ln|z_n|^2``.  The value
    is cross-checked against :func:`wormbergman.oracle.dirichlet_constant`.
    """
    if n < 3:
        raise WormValidationError("n must be >= 3")
    J = tuple(int(j) for j in J)
    if len(J) != n - 2 or any(j < 0 for j in J):
        raise WormValidationError(f"J must be {n - 2} nonnegative integers, got {J}")
    q = sum(J) + n - 2
    prod = math.prod(math.factorial(j) for j in J)
    return (2 * math.pi) ** (n - 1) * 2.0 ** (1 - n) * prod / math.factorial(q)


@dataclass(frozen=True)
class WeightSpec:
    mode: ModeIndex
    params: WormParams
    c_nj: float
    cos_power: int

    @classmethod
    def build(cls, mode: ModeIndex, params: WormParams, c_nj: float | None = None) -> "WeightSpec":
        mode.check_dim(params.dim)
        if c_nj is None:
            c_nj = cnj_constant(params.dim, mode.j_multi)
        if not c_nj > 0:
            raise WormValidationError("C_nJ must be positive")
        return cls(mode, params, float(c_nj), mode.cos_power(params.dim))

    @property
    def k(self) -> int:
        return self.mode.k

    @property
    def d_nj(self) -> complex:
        q = self.cos_power
        return self.c_nj * (-1j) ** (q + 1) * math.factorial(q) / SQRT_2PI

    def support(self) -> tuple[float, float]:
        return -math.pi / 2, self.params.strip_top

    def breakpoints(self) -> np.ndarray:
        """Support ends and interior kinks of ``W`` (sorted, deduplicated)."""
        a, L = self.params.alpha, self.params.log_beta
        pts = [-math.pi / 2, math.pi / 2, 2 * a * L - math.pi / 2, 2 * a * L + math.pi / 2]
        return np.unique(np.round(pts, 15))


def weight_direct(theta1, spec: WeightSpec, order: int = 48, normalized: bool = False):
    """Evaluate ``W_Jk`` by Gauss-Legendre quadrature over the support overlap.

    The integrand is analytic on the overlap ``[0, 2L] cap [(theta-pi/2)/alpha,
    (theta+pi/2)/alpha]``, so a single high-order panel is exact to rounding.
    ``normalized=True`` drops the ``C_nJ`` prefactor.
    """
    th = np.atleast_1d(np.asarray(theta1, dtype=float))
    a, L = spec.params.alpha, spec.params.log_beta
    lo = np.maximum(0.0, (th - math.pi / 2) / a)
    hi = np.minimum(2 * L, (th + math.pi / 2) / a)
    width = np.clip(hi - lo, 0.0, None)
    x, w = gauss_legendre(order)
    t = lo[:, None] + 0.5 * width[:, None] * (x[None, :] + 1.0)
    c = np.cos(th[:, None] - a * t)
    vals = np.clip(c, 0.0, None) ** spec.cos_power * np.exp((spec.k + 1) * t)
    out = 0.5 * width * (vals @ w)
    if not normalized:
        out = spec.c_nj * out
    out[width <= 0] = 0.0
    return out if np.ndim(theta1) else float(out[0])


# ---------------------------------------------------------------------------
# closed-form transform


def _exprel_taylor(x):
    # (e^x - 1)/x, six terms
    return 1 + x / 2 + x**2 / 6 + x**3 / 24 + x**4 / 120 + x**5 / 720


def _log_exprel(x):
    """``log((e^x - 1)/x)`` without overflow or cancellation."""
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    big = ~small & (x.real > 20)
    neg = ~small & (x.real < -20)
    mid = ~(small | big | neg)
    out[small] = np.log(_exprel_taylor(x[small]))
    xb = x[big]
    out[big] = xb - np.log(xb) + np.log1p(-np.exp(-xb))
    xn = x[neg]
    out[neg] = np.log1p(-np.exp(xn)) - np.log(-xn)
    xm = x[mid]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[mid] = np.log(np.expm1(xm) / xm)
    return out


def _cos_roots(q: int) -> np.ndarray:
    return np.array([q - 2 * s for s in range(q + 1)], dtype=float)


def _log_cos_factor(xi, q: int):
    """``log[e^{-i xi pi/2} (e^{i xi pi} - (-1)^q) / prod_s (xi + q - 2s)]``.

    Returns ``(value, removable_mask)``.
    """
    xi = np.asarray(xi, dtype=complex)
    c = (-1) ** q
    a = 1j * np.pi * xi / 2
    roots = _cos_roots(q)
    # the product vanishes at xi = -(q - 2s)
    dist = np.abs(xi[..., None] + roots[None, :])
    nearest = np.argmin(dist, axis=-1)
    near = np.take_along_axis(dist, nearest[..., None], axis=-1)[..., 0] < REMOVABLE_RADIUS
    out = np.empty_like(xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = ~near
        af = a[far]
        pos = af.real >= 0
        logN = np.empty_like(af)
        logN[pos] = af[pos] + np.log(1 - c * np.exp(-2 * af[pos]))
        logN[~pos] = -af[~pos] + np.log(np.exp(2 * af[~pos]) - c)
        logden = np.sum(np.log(xi[far][:, None] + roots[None, :]), axis=-1)
        out[far] = logN - logden
        if near.any():
            xn = xi[near]
            rho = -roots[nearest[near]]
            h = xn - rho
            logN = -1j * np.pi * xn / 2 + np.log(c * 1j * np.pi * _exprel_taylor(1j * np.pi * h))
            den = xn[:, None] + roots[None, :]
            skip = np.arange(q + 1)[None, :] == nearest[near][:, None]
            den = np.where(skip, 1.0, den)
            out[near] = logN - np.sum(np.log(den), axis=-1)
    return out, near


def _annulus_arg(xi, spec: WeightSpec):
    """``x = 2L (k + 1 - i alpha xi)``."""
    L = spec.params.log_beta
    return 2 * L * (spec.k + 1 - 1j * spec.params.alpha * np.asarray(xi, dtype=complex))


def annulus_singular_point(spec: WeightSpec) -> complex:
    """Where ``k + 1 - i alpha xi = 0``."""
    return -1j * (spec.k + 1) / spec.params.alpha


def log_fourier_weight(xi, spec: WeightSpec):
    """``log F(W_Jk)(xi)`` (any branch) and the removable-point mask."""
    xi = np.asarray(xi, dtype=complex)
    logA, near_cos = _log_cos_factor(xi, spec.cos_power)
    x = _annulus_arg(xi, spec)
    logB = math.log(2 * spec.params.log_beta) + _log_exprel(x)
    near_ann = np.abs(xi - annulus_singular_point(spec)) < REMOVABLE_RADIUS
    return np.log(spec.d_nj) + logA + logB, near_cos | near_ann


def fourier_weight(xi, spec: WeightSpec):
    """Vectorized closed-form ``F(W_Jk)(xi)``; returns ``(values, removable_flags)``."""
    logF, flags = log_fourier_weight(np.atleast_1d(xi), spec)
    with np.errstate(over="ignore"):
        return np.exp(logF), flags


@dataclass(frozen=True)
class TransformValue:
    xi: complex
    value: complex
    removable_flag: bool


def weight_fourier_closed(xi: complex, spec: WeightSpec) -> TransformValue:
    vals, flags = fourier_weight(np.array([complex(xi)]), spec)
    return TransformValue(complex(xi), complex(vals[0]), bool(flags[0]))


def fourier_weight_logderiv(xi, spec: WeightSpec):
    """``d/dxi log F(W_Jk)(xi)``; valid away from removable points."""
    xi = np.asarray(xi, dtype=complex)
    q = spec.cos_power
    c = (-1) ** q
    a = 1j * np.pi * xi / 2
    pos = a.real >= 0
    # (e^a + c e^-a)/(e^a - c e^-a) written in the non-overflowing direction
    ratio = np.empty_like(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = c * np.exp(-2 * a[pos])
        ratio[pos] = (1 + w) / (1 - w)
        w = np.exp(2 * a[~pos])
        ratio[~pos] = (w + c) / (w - c)
    dN = 1j * np.pi / 2 * ratio
    dden = np.sum(1.0 / (xi[..., None] + _cos_roots(q)), axis=-1)
    x = _annulus_arg(xi, spec)
    dx = -2j * spec.params.alpha * spec.params.log_beta
    small = np.abs(x) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        gen = -1.0 / np.expm1(-x) - 1.0 / x
    tay = 0.5 + x / 12 - x**3 / 720
    dB = dx * np.where(small, tay, gen)
    return dN - dden + dB


def fourier_weight_derivative(xi, spec: WeightSpec, h: float = 1e-6):
    """``d/dxi F(W_Jk)(xi)``, exact at zeros of either factor.

    Uses the product rule on the two factors; near removable points falls
    back to a complex central difference.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    q = spec.cos_power
    c = (-1) ** q
    roots = _cos_roots(q)
    a = 1j * np.pi * xi / 2
    N = np.exp(a) - c * np.exp(-a)
    dN = 1j * np.pi / 2 * (np.exp(a) + c * np.exp(-a))
    den = np.prod(xi[:, None] + roots[None, :], axis=-1)
    sum_inv = np.sum(1.0 / (xi[:, None] + roots[None, :]), axis=-1)
    A = N / den
    dA = dN / den - A * sum_inv
    x = _annulus_arg(xi, spec)
    dx = -2j * spec.params.alpha * spec.params.log_beta
    small = np.abs(x) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.where(small, _exprel_taylor(x), np.expm1(x) / x)
        dB_dx = np.where(small, 0.5 + x / 3 + x**2 / 8 + x**3 / 30, (np.exp(x) * x - np.expm1(x)) / x**2)
    B = 2 * spec.params.log_beta * B
    dB = 2 * spec.params.log_beta * dB_dx * dx
    out = spec.d_nj * (dA * B + A * dB)
    _, flags = _log_cos_factor(xi, q)
    if flags.any():
        xf = xi[flags]
        fp, _ = fourier_weight(xf + h, spec)
        fm, _ = fourier_weight(xf - h, spec)
        out[flags] = (fp - fm) / (2 * h)
    return out


# ---------------------------------------------------------------------------
# exact binomial-sum identity


def sum_eval(j: int, alpha, xi) -> tuple[Fraction, Fraction]:
    """Both sides of the alternating binomial sum identity in exact rationals.

    ``sum_s binom(j,s) (-1)^s / (xi + alpha (j - 2s))`` and
    ``(-2 alpha)^j j! / prod_s (xi + alpha (j - 2s))``.
    """
    if j < 0:
        raise WormValidationError("j must be >= 0")
    alpha = Fraction(alpha)
    xi = Fraction(xi)
    dens = [xi + alpha * (j - 2 * s) for s in range(j + 1)]
    if any(d == 0 for d in dens):
        raise PoleError(f"xi + alpha (j - 2s) vanishes for some s (j={j}, alpha={alpha}, xi={xi})")
    lhs = sum(Fraction(math.comb(j, s) * (-1) ** s) / d for s, d in enumerate(dens))
    rhs = Fraction((-2 * alpha) ** j * math.factorial(j)) / math.prod(dens)
    return lhs, rhs


def transform_table(xis, spec: WeightSpec) -> list[list]:
    """Rows ``xi_re, xi_im, val_re, val_im, removable_flag``."""
    xis = np.asarray(xis, dtype=complex)
    vals, flags = fourier_weight(xis, spec)
    return [
        [x.real, x.imag, v.real, v.imag, int(f)] for x, v, f in zip(xis, vals, flags)
    ]


TRANSFORM_COLUMNS = ["xi_re", "xi_im", "val_re", "val_im", "removable_flag"]


@lru_cache(maxsize=None)
def default_spec(params: WormParams, mode: ModeIndex) -> WeightSpec:
    return WeightSpec.build(mode, params)

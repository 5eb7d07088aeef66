"""Brute-force reference computations.

Nothing here calls the closed forms it is used to validate: the Fourier
oracle integrates samples, the Hessian oracle differentiates an
independent mpmath implementation of ``r``, and the constant oracle
integrates the ``z'`` ball numerically instead of using Gamma functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import DomainError, NormDivergenceError, ToleranceError
from .params import CPoint, WormParams
from .quadrature import panel_rule

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SampledFunction:
    """Values on the uniform grid ``start + step * arange(count)``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("need at least two samples")
        if not self.step > 0:
            raise ValueError("step must be positive")
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @classmethod
    def sample(cls, f: Callable, start: float, stop: float, count: int) -> "SampledFunction":
        x = np.linspace(start, stop, count)
        return cls(start, x[1] - x[0], f(x))


def _simpson(y, h):
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


@dataclass(frozen=True)
class FourierEstimate:
    value: complex
    error: float


def numeric_fourier(f: SampledFunction, xi: float) -> FourierEstimate:
    """Composite Simpson transform ``(2 pi)^{-1/2} int f(t) e^{-i xi t} dt``.

    The error estimate is the Richardson difference against the rule on
    every other sample; the returned value is the extrapolated one.  The grid
    is trimmed to ``4m + 1`` samples so both rules apply.
    """
    y = f.values
    if max(abs(y[0]), abs(y[-1])) > 1e-12:
        warnings.warn("samples do not vanish at the grid ends; support may be clipped")
    m = (f.count - 1) // 4
    if m < 1:
        raise ValueError("need at least 5 samples")
    y = y[: 4 * m + 1] * np.exp(-1j * xi * f.grid[: 4 * m + 1])
    fine = _simpson(y, f.step)
    coarse = _simpson(y[::2], 2 * f.step)
    corr = (fine - coarse) / 15
    return FourierEstimate(INV_SQRT_2PI * (fine + corr), INV_SQRT_2PI * abs(corr))


def fourier_panels(f: Callable, breaks: Sequence[float], xi, order: int = 48, max_width: float = 0.25):
    """Transform of a piecewise-smooth ``f`` supported on ``[breaks[0], breaks[-1]]``.

    Gauss-Legendre panels are split at every breakpoint so each panel sees
    an analytic integrand.
    """
    t, w = panel_rule(breaks, order, max_width)
    ft = f(t) * w
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    return INV_SQRT_2PI * (np.exp(-1j * np.outer(xi, t)) @ ft)


# ---------------------------------------------------------------------------
# weighted strip inner product


@dataclass
class StripQuadConfig:
    x_panel: float = 0.25
    order: int = 20
    y_nodes: int = 200
    boundary_tol: float = 1e-12


def strip_grid(weight_fn: Callable, breaks: Sequence[float], trunc_x: float, cfg: StripQuadConfig | None = None):
    """Tensor Gauss-Legendre grid on ``[-X, X] x (support of W)``.

    About ``cfg.y_nodes`` nodes across the strip, with panels split at the
    kinks of ``W``.  Returns ``(zeta, w, W)``; ``w`` already includes
    ``W(Im zeta)``.
    """
    cfg = cfg or StripQuadConfig()
    breaks = np.asarray(breaks, dtype=float)
    span = breaks[-1] - breaks[0]
    y, wy = panel_rule(breaks, cfg.order, max_width=span * cfg.order / cfg.y_nodes)
    x, wx = panel_rule([-trunc_x, trunc_x], cfg.order, max_width=cfg.x_panel)
    W = weight_fn(y)
    zeta = x[:, None] + 1j * y[None, :]
    return zeta, wx[:, None] * (wy * W)[None, :], W


def strip_inner_product(f: Callable, g: Callable, spec, trunc_x: float, cfg: StripQuadConfig | None = None) -> complex:
    """``<f, g> = int f conj(g) W(Im z) dx dy`` over ``|Re z| <= trunc_x``."""
    from .weight import weight_direct

    cfg = cfg or StripQuadConfig()
    zeta, w, W = strip_grid(lambda y: weight_direct(y, spec), spec.breakpoints(), trunc_x, cfg)
    integrand = f(zeta) * np.conj(g(zeta))
    peak = np.max(np.abs(integrand) * W[None, :])
    edge = np.concatenate([trunc_x + 1j * zeta[0].imag, -trunc_x + 1j * zeta[0].imag])
    edge_peak = np.max(np.abs(f(edge) * np.conj(g(edge))) * np.tile(W, 2))
    if edge_peak > cfg.boundary_tol * max(peak, 1e-300):
        raise NormDivergenceError(
            f"weighted integrand at |Re z| = {trunc_x} is {edge_peak:.3e} "
            f"(peak {peak:.3e}); f*conj(g) does not decay"
        )
    return complex(np.sum(integrand * w))


def gaussian_norm_semianalytic(spec, order: int = 40) -> float:
    """``||e^{-z^2}||_W^2`` from the closed x-marginal ``sqrt(pi/2) e^{2 y^2}``."""
    from .weight import weight_direct

    y, w = panel_rule(spec.breakpoints(), order, max_width=0.25)
    return float(np.sum(w * weight_direct(y, spec) * math.sqrt(math.pi / 2) * np.exp(2 * y**2)))


# ---------------------------------------------------------------------------
# norm-reduction constant


def _ball_integral(J: Sequence[int], dps: int) -> mpmath.mpf:
    """``int_{r_i >= 0, sum r_i^2 < 1} prod r_i^{2 j_i + 1} dr`` by nested quadrature."""
    with mpmath.workdps(dps):

        def inner(level: int, rem):
            if level == len(J):
                return mpmath.mpf(1)
            j = J[level]
            top = mpmath.sqrt(rem)
            return mpmath.quad(lambda r: r ** (2 * j + 1) * inner(level + 1, rem - r**2), [0, top])

        return inner(0, mpmath.mpf(1))


def dirichlet_constant(n: int, J: Sequence[int], dps: int = 30, tol: float = 1e-20) -> mpmath.mpf:
    """High-precision ``C_nJ`` from the norm reduction.

    For a separable test function ``F = z1^{-(|J|+n)/2} f(z1) z'^J z_n^k`` the
    ``(2n)``-dimensional norm integral splits into the torus angles
    ``(2 pi)^{n-1}``, the ``s = ln|z_n|^2`` Jacobian ``1/2``, and the ``z'`` ball
    integral, which scales as ``R^{2(|J|+n-2)}`` with ``R^2 = r1 cos(...)``.
    The ratio to the reduced strip integral is therefore
    ``(2 pi)^{n-1} / 2 * B(1)``, where ``B(1)`` is integrated numerically here
    at two working precisions.
    """
    J = tuple(int(j) for j in J)
    if len(J) != n - 2:
        raise ValueError(f"J must have {n - 2} entries")
    vals = []
    for d in (dps, dps + 15):
        with mpmath.workdps(d):
            B = _ball_integral(J, d)
            vals.append((2 * mpmath.pi) ** (n - 1) / 2 * B)
    with mpmath.workdps(dps + 15):
        if abs(vals[0] - vals[1]) > tol * abs(vals[1]):
            raise ToleranceError(f"constant quadrature unstable: {vals[0]} vs {vals[1]}")
    return +vals[1]


# ---------------------------------------------------------------------------
# finite-difference Hessian


def _r_mp(x: Sequence, p: WormParams):
    """Defining function on real coordinates ``(Re z1, Im z1, ..., Re zn, Im zn)``."""
    n = p.dim
    z = [mpmath.mpc(x[2 * j], x[2 * j + 1]) for j in range(n)]
    zn_abs = abs(z[-1])
    if zn_abs == 0:
        raise DomainError("z_n = 0")
    E = mpmath.exp(2j * p.alpha * mpmath.log(zn_abs))
    M = mpmath.mpf(p.smoothing_m)

    def sig(t):
        return M * mpmath.exp(-1 / t) if t > 0 else mpmath.mpf(0)

    T = zn_abs**2
    return (
        abs(z[0] - E) ** 2
        + sum(abs(v) ** 2 for v in z[1:-1])
        - 1
        + sig(T - mpmath.mpf(p.beta) ** 2)
        + sig(1 - T)
    )


def finite_difference_hessian(z: CPoint, p: WormParams, step: float = 1e-5, dps: int = 40) -> np.ndarray:
    """Central-difference ``d^2 r / dz_j d conj(z_k)`` at extended precision."""
    n = p.dim
    if abs(z.zn) <= 10 * step:
        raise DomainError("point too close to z_n = 0 for this step")
    with mpmath.workdps(dps):
        base = []
        for v in z.as_array():
            base += [mpmath.mpf(v.real), mpmath.mpf(v.imag)]
        h = mpmath.mpf(step)
        m = 2 * n

        def f(shifts):
            x = list(base)
            for i, s in shifts:
                x[i] += s * h
            return _r_mp(x, p)

        f0 = f([])
        R = [[mpmath.mpf(0)] * m for _ in range(m)]
        for i in range(m):
            R[i][i] = (f([(i, 1)]) - 2 * f0 + f([(i, -1)])) / h**2
            for j in range(i + 1, m):
                v = (
                    f([(i, 1), (j, 1)]) - f([(i, 1), (j, -1)])
                    - f([(i, -1), (j, 1)]) + f([(i, -1), (j, -1)])
                ) / (4 * h**2)
                R[i][j] = R[j][i] = v
        R = np.array([[float(v) for v in row] for row in R])
    H = np.empty((n, n), dtype=complex)
    for j in range(n):
        xj, yj = 2 * j, 2 * j + 1
        for k in range(n):
            xk, yk = 2 * k, 2 * k + 1
            H[j, k] = 0.25 * (R[xj, xk] + R[yj, yk] + 1j * (R[xj, yk] - R[yj, xk]))
    return H

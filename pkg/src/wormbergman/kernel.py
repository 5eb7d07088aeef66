"""Weighted strip Bergman kernel and its lift to the model domain.

On the strip ``-pi/2 < Im z < pi/2 + 2 alpha ln beta`` with weight ``W_Jk`` the
kernel depends only on ``X = z - conj(w)``:

    K(X) = PREF * int_R e^{i X xi} / G(xi) d xi,   G(xi) = F(W)(-2 i xi) > 0.

The integrand decays like ``e^{-(pi + Im X) xi}`` to the right and like
``e^{-(pi + 4 alpha ln beta - Im X)|xi|}`` to the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, MarginError, NormDivergenceError, PreconditionError, ResolutionError, ToleranceError
from .oracle import StripQuadConfig, strip_grid
from .params import ModeIndex, WormParams
from .poles import KERNEL_PREFACTOR, ResidueExpansion, all_zeros, g_log
from .quadrature import panel_rule
from .weight import WeightSpec, weight_direct

MARGIN_MIN = 1e-3


@dataclass(frozen=True)
class StripPoint:
    z: complex
    params: WormParams

    def __post_init__(self):
        y = complex(self.z).imag
        if not (-math.pi / 2 < y < self.params.strip_top):
            raise DomainError(f"Im z = {y} outside the strip (-pi/2, {self.params.strip_top})")


@dataclass(frozen=True)
class KernelEvalConfig:
    truncation: float | None = None  # None: chosen from the decay margins
    nodes: int = 16  # Gauss-Legendre order per panel
    tol: float = 1e-12
    contour_shift: float = 0.0


def decay_margins(X: complex, p: WormParams) -> tuple[float, float]:
    """Right and left exponential decay rates of the integrand."""
    y = complex(X).imag
    return math.pi + y, math.pi + 4 * p.alpha * p.log_beta - y


def check_margins(X, p: WormParams, margin: float = MARGIN_MIN) -> None:
    y = np.atleast_1d(np.asarray(X, dtype=complex)).imag
    top = math.pi + 4 * p.alpha * p.log_beta
    if np.any(y + math.pi <= margin) or np.any(top - y <= margin):
        raise MarginError(
            f"Im(z - conj w) must lie in (-pi + {margin}, {top} - {margin}); got range [{y.min()}, {y.max()}]"
        )


def _log_integrand_modulus(xi: np.ndarray, y: float, spec: WeightSpec) -> np.ndarray:
    return -y * xi - g_log(xi, spec).real


def _pole_clearance(mode: ModeIndex, p: WormParams) -> float:
    zs = all_zeros(mode, p, max(p.nu, (mode.j_abs + p.dim) / 2) + 3)
    clearance = min(abs(z.location.imag) for z in zs)
    if clearance < 1e-9:
        raise PreconditionError("G has a zero on the real axis")
    return clearance


class StripKernel:
    """Reusable quadrature plan for one mode.

    A single node set is built for a batch of ``X`` values, so that many
    kernel values cost one matrix product.
    """

    def __init__(self, mode: ModeIndex, p: WormParams, cfg: KernelEvalConfig | None = None):
        mode.check_dim(p.dim)
        self.mode = mode
        self.params = p
        self.cfg = cfg or KernelEvalConfig()
        self.spec = WeightSpec.build(mode, p)
        self.clearance = _pole_clearance(mode, p)

    # -- node construction

    def _truncation(self, y_lo: float, y_hi: float) -> tuple[float, float]:
        """``[a, b]`` outside which the tail bound is below ``tol / 10``."""
        if self.cfg.truncation is not None:
            return -self.cfg.truncation, self.cfg.truncation
        target = math.log(self.cfg.tol / 10 / KERNEL_PREFACTOR)
        ends = []
        for sign, y in ((1.0, y_lo), (-1.0, y_hi)):
            rate = math.pi + y if sign > 0 else math.pi + 4 * self.params.alpha * self.params.log_beta - y
            t = 4.0
            while True:
                logmod = _log_integrand_modulus(np.array([sign * t]), y, self.spec)[0]
                # tail of a function decaying at least like e^{-rate xi / 2} beyond t
                if logmod - math.log(rate / 2) < target:
                    break
                t *= 1.25
                if t > 1e4:
                    raise ToleranceError("truncation search did not terminate")
            ends.append(sign * t)
        return ends[1], ends[0]

    def nodes(self, X, refine: int = 1):
        X = np.atleast_1d(np.asarray(X, dtype=complex))
        check_margins(X, self.params)
        a, b = self._truncation(X.imag.min(), X.imag.max())
        width = min(2 * math.pi / (1 + np.abs(X.real).max()), self.clearance / 2) / refine
        xi, w = panel_rule([a, b], self.cfg.nodes, max_width=width)
        xi = xi + 1j * self.cfg.contour_shift
        return xi, w

    def _weights_over_g(self, xi, w):
        return KERNEL_PREFACTOR * w * np.exp(-g_log(xi, self.spec))

    # -- evaluation

    def evaluate(self, X, with_error: bool = False):
        """Kernel values at ``X = z - conj(w)``; optionally the panel-halving error."""
        X = np.atleast_1d(np.asarray(X, dtype=complex))
        out = self._eval(X, 1)
        if not with_error:
            return out
        err = np.abs(out - self._eval(X, 2))
        return out, err

    def _eval(self, X, refine):
        xi, w = self.nodes(X, refine)
        c = self._weights_over_g(xi, w)
        out = np.empty(X.shape, dtype=complex)
        chunk = max(1, 2_000_000 // xi.size)
        for s in range(0, X.size, chunk):
            out[s : s + chunk] = np.exp(1j * np.outer(X[s : s + chunk], xi)) @ c
        return out

    def tensor(self, x: np.ndarray, y: np.ndarray, w: complex) -> np.ndarray:
        """``K(w, zeta)`` for ``zeta = x + i y`` on a tensor grid (rows x, columns y).

        Uses ``e^{i (w - conj zeta) xi} = e^{i (Re w - x) xi} e^{-(Im w + y) xi}``.
        """
        Xall = np.array([w.real - x.min() + 1j * (w.imag + y.min()), w.real - x.max() + 1j * (w.imag + y.max()),
                         w.real - x.min() + 1j * (w.imag + y.max()), w.real - x.max() + 1j * (w.imag + y.min())])
        xi, wq = self.nodes(Xall)
        log_c = np.log(KERNEL_PREFACTOR * wq) - g_log(xi, self.spec)
        A = np.exp(1j * np.outer(w.real - x, xi))
        B = np.exp(log_c[:, None] - np.outer(xi, w.imag + y))
        return A @ B


def _X(z: StripPoint, w: StripPoint) -> complex:
    return complex(z.z) - complex(w.z).conjugate()


def strip_kernel_quadrature(
    z: StripPoint, w: StripPoint, mode: ModeIndex, p: WormParams, cfg: KernelEvalConfig | None = None
) -> complex:
    """Strip kernel by direct quadrature; raises if the error estimate exceeds ``cfg.tol``."""
    ker = StripKernel(mode, p, cfg)
    val, err = ker.evaluate(_X(z, w), with_error=True)
    scale = max(1.0, abs(val[0]))
    if err[0] > ker.cfg.tol * scale:
        raise ToleranceError(f"kernel error estimate {err[0]:.2e} exceeds tol {ker.cfg.tol:.1e}")
    return complex(val[0])


def strip_kernel_batch(X, mode: ModeIndex, p: WormParams, cfg: KernelEvalConfig | None = None):
    """Values and error estimates for an array of ``X = z - conj(w)``."""
    return StripKernel(mode, p, cfg).evaluate(X, with_error=True)


def strip_kernel_residue(z: StripPoint, w: StripPoint, expansion: ResidueExpansion) -> complex:
    """Partial residue sum; the difference from quadrature is the remainder."""
    return complex(expansion.evaluate(_X(z, w)))


# ---------------------------------------------------------------------------
# model domain


def model_kernel(
    logz1: complex,
    zprime: Sequence[complex],
    zn: complex,
    logw1: complex,
    wprime: Sequence[complex],
    wn: complex,
    mode: ModeIndex,
    p: WormParams,
    cfg: KernelEvalConfig | None = None,
    strip: StripKernel | None = None,
) -> complex:
    """Mode ``(J, k)`` Bergman kernel of the model domain, taking ``ln z1`` and ``ln w1``."""
    for v in (zn, wn):
        if not 1.0 < abs(v) < p.beta:
            raise DomainError(f"|z_n| = {abs(v)} outside (1, {p.beta})")
    zprime = np.asarray(zprime, dtype=complex)
    wprime = np.asarray(wprime, dtype=complex)
    if zprime.size != p.dim - 2 or wprime.size != p.dim - 2:
        raise DomainError(f"z' must have {p.dim - 2} entries")
    StripPoint(logz1, p)
    StripPoint(logw1, p)
    strip = strip or StripKernel(mode, p, cfg)
    J = np.asarray(mode.j_multi)
    a = (mode.j_abs + p.dim) / 2
    kval = strip.evaluate(complex(logz1) - complex(logw1).conjugate())[0]
    mono_z = np.prod(zprime**J) * complex(zn) ** mode.k
    mono_w = np.conj(np.prod(wprime**J) * complex(wn) ** mode.k)
    return complex(kval * mono_z * mono_w * np.exp(-a * logz1) * np.conj(np.exp(-a * logw1)))


# ---------------------------------------------------------------------------
# reproducing property


@dataclass(frozen=True)
class GaussianTest:
    """``f(z) = exp(-((z - center) / scale)^2)``."""

    center: complex = 0.0
    scale: float = 1.0

    def __call__(self, z):
        return np.exp(-(((np.asarray(z) - self.center) / self.scale) ** 2))

    def truncation(self) -> float:
        return 6.0 / self.scale + abs(self.center)


@dataclass
class ReproducingResult:
    value: complex
    expected: complex
    rel_error: float


def reproducing_check(
    test_fn: Callable,
    w: StripPoint,
    mode: ModeIndex,
    p: WormParams,
    cfg: KernelEvalConfig | None = None,
    trunc_x: float | None = None,
    quad: StripQuadConfig | None = None,
) -> ReproducingResult:
    """``<f, K(., w)>_W`` by 2D quadrature, compared with ``f(w)``.

    The norm of ``f`` is evaluated on ``|Re zeta| <= X`` and ``2X``; growth
    beyond the quadrature tolerance means ``f`` is not in the weighted space.
    """
    ker = StripKernel(mode, p, cfg)
    spec = ker.spec
    if trunc_x is None:
        trunc_x = test_fn.truncation() if hasattr(test_fn, "truncation") else 8.0
    quad = quad or StripQuadConfig()
    weight_fn = lambda y: weight_direct(y, spec)  # noqa: E731
    norms = []
    for X in (trunc_x, 2 * trunc_x):
        zeta, wts, _ = strip_grid(weight_fn, spec.breakpoints(), X, quad)
        norms.append(float(np.sum(np.abs(test_fn(zeta)) ** 2 * wts.real)))
    if not np.isfinite(norms[1]) or norms[1] - norms[0] > 1e-6 * max(norms[0], 1e-300):
        raise NormDivergenceError(
            f"weighted norm of the test function grows with the truncation ({norms[0]:.4e} -> {norms[1]:.4e})"
        )
    zeta, wts, _ = strip_grid(weight_fn, spec.breakpoints(), trunc_x, quad)
    x = zeta[:, 0].real
    y = zeta[0, :].imag
    kwz = ker.tensor(x, y, complex(w.z))  # K(w, zeta)
    value = complex(np.sum(test_fn(zeta) * kwz * wts))
    expected = complex(test_fn(np.array([w.z]))[0])
    return ReproducingResult(value, expected, abs(value - expected) / abs(expected))


# ---------------------------------------------------------------------------
# torus projection


def mode_project(samples: np.ndarray, mode: ModeIndex, p: WormParams) -> np.ndarray:
    """Project samples on a uniform ``(n-1)``-torus grid onto the character ``(J, k)``.

    Axis ``i < n-2`` is the angle of ``z'_i``; the last axis is the angle of
    ``z_n``.  Uniform-grid averaging is exact for trigonometric polynomials of
    degree below the grid size.
    """
    mode.check_dim(p.dim)
    samples = np.asarray(samples, dtype=complex)
    freqs = list(mode.j_multi) + [mode.k]
    if samples.ndim != p.dim - 1:
        raise ResolutionError(f"expected a {p.dim - 1}-dimensional torus grid, got {samples.ndim}")
    for size, f in zip(samples.shape, freqs):
        if size < 4 * (abs(f) + 1):
            raise ResolutionError(f"grid of {size} points per axis under-resolves frequency {f}")
    grids = np.meshgrid(*[2 * np.pi * np.arange(s) / s for s in samples.shape], indexing="ij")
    char = np.exp(1j * sum(f * g for f, g in zip(freqs, grids)))
    coeff = np.mean(samples * np.conj(char))
    return coeff * char


KERNEL_COLUMNS = ["z_re", "z_im", "w_re", "w_im", "K_re", "K_im", "method", "est_error"]

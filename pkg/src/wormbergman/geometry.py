"""Worm domain defining function, Levi geometry and the scaling limit.

The defining function is

    r(z) = |z1 - e^{2 i alpha ln|zn|}|^2 + |z'|^2 - 1
           + sigma(|zn|^2 - beta^2) + sigma(1 - |zn|^2),

evaluated in the algebraically identical expanded form
``|z1|^2 - 2 Re(conj(z1) E) + |z'|^2 + ...`` with ``|E| = 1``.  The expanded
form keeps ``lambda^2 r(tau_lambda^{-1} z)`` free of cancellation.

Internally everything is vectorized over a leading batch axis; the public
functions accept a :class:`~wormbergman.params.CPoint`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGradientError, DomainError, PreconditionError
from .params import CPoint, WormParams

# e^{-1/t}/t^4 overflows below this; all derivatives of sigma vanish there anyway
_SIGMA_FLOOR = 1e-300


def sigma(t, m_amp: float):
    """Smooth cutoff ``M e^{-1/t}`` for ``t > 0`` and ``0`` for ``t <= 0``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = m_amp * np.exp(-1.0 / t[pos])
    return out if out.ndim else float(out)


def _sigma_derivs(t, m_amp: float):
    """Return ``(sigma', sigma'')`` evaluated piecewise."""
    t = np.asarray(t, dtype=float)
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    pos = t > _SIGMA_FLOOR
    tp = t[pos]
    lt = np.log(tp)
    # M e^{-1/t} (1/t^2) and M e^{-1/t} (1/t^4 - 2/t^3)
    d1[pos] = m_amp * np.exp(-1.0 / tp - 2.0 * lt)
    d2[pos] = m_amp * (np.exp(-1.0 / tp - 4.0 * lt) - 2.0 * np.exp(-1.0 / tp - 3.0 * lt))
    return d1, d2


def _split(z: CPoint, p: WormParams):
    if z.dim != p.dim:
        raise DomainError(f"point has dimension {z.dim}, params have dim {p.dim}")
    return (
        np.array([z.z1]),
        np.array([z.zprime], dtype=complex).reshape(1, p.dim - 2),
        np.array([z.zn]),
    )


def _winding(zn, alpha: float):
    """``E = e^{2 i alpha ln|zn|}`` and ``T = |zn|^2``."""
    T = np.abs(zn) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        E = np.exp(1j * alpha * np.log(T))
    return E, T


def defining_batch(z1, zp, zn, p: WormParams):
    """Vectorized ``r`` on arrays ``z1 (N,)``, ``zp (N, n-2)``, ``zn (N,)``."""
    E, T = _winding(zn, p.alpha)
    r = (
        np.abs(z1) ** 2
        - 2.0 * np.real(np.conj(z1) * E)
        + np.sum(np.abs(zp) ** 2, axis=-1)
        + sigma(T - p.beta**2, p.smoothing_m)
        + sigma(1.0 - T, p.smoothing_m)
    )
    return r


def defining_function(z: CPoint, p: WormParams) -> float:
    """Worm defining function ``r(z)``; negative inside, zero on the boundary."""
    return float(defining_batch(*_split(z, p), p)[0])


def gradient_batch(z1, zp, zn, p: WormParams):
    """Complex gradient ``(dr/dz_1, ..., dr/dz_n)``, shape ``(N, n)``."""
    E, T = _winding(zn, p.alpha)
    a = p.alpha
    s1_out, _ = _sigma_derivs(T - p.beta**2, p.smoothing_m)
    s1_in, _ = _sigma_derivs(1.0 - T, p.smoothing_m)
    g1 = np.conj(z1) - np.conj(E)
    gp = np.conj(zp)
    gn = (
        -(1j * a / zn) * (np.conj(z1) * E - z1 * np.conj(E))
        + np.conj(zn) * s1_out
        - np.conj(zn) * s1_in
    )
    return np.concatenate([g1[:, None], gp, gn[:, None]], axis=1)


def hessian_batch(z1, zp, zn, p: WormParams):
    """Closed-form complex Hessian ``H[j, k] = d^2 r / dz_j d conj(z_k)``."""
    n = p.dim
    N = z1.shape[0]
    E, T = _winding(zn, p.alpha)
    a = p.alpha
    s1_out, s2_out = _sigma_derivs(T - p.beta**2, p.smoothing_m)
    s1_in, s2_in = _sigma_derivs(1.0 - T, p.smoothing_m)
    H = np.zeros((N, n, n), dtype=complex)
    idx = np.arange(n - 1)
    H[:, idx, idx] = 1.0
    h1n = 1j * a * np.conj(E) / np.conj(zn)
    H[:, 0, n - 1] = h1n
    H[:, n - 1, 0] = np.conj(h1n)
    H[:, n - 1, n - 1] = (
        2.0 * a**2 * np.real(np.conj(z1) * E) / T
        + s1_out
        + T * s2_out
        - s1_in
        + T * s2_in
    )
    return H


def complex_hessian(z: CPoint, p: WormParams) -> np.ndarray:
    """Closed-form ``n x n`` Hermitian complex Hessian of ``r`` at ``z``."""
    return hessian_batch(*_split(z, p), p)[0]


def tangent_basis(grad) -> np.ndarray:
    """Orthonormal basis of ``{w : sum_j w_j grad_j = 0}``, shape ``(..., n, n-1)``.

    Gram-Schmidt (via Householder QR) of the identity against the normalized
    vector ``conj(grad)``.
    """
    v = np.conj(grad)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    n = v.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=complex), v.shape[:-1] + (n, n))
    A = np.concatenate([v[..., :, None], eye], axis=-1)
    Q, _ = np.linalg.qr(A)
    return Q[..., :, 1:n]


def levi_min_eig_batch(z1, zp, zn, p: WormParams):
    """Minimum eigenvalue of the Levi form on the complex tangent space.

    Returns ``(min_eig, grad_norm)`` arrays.
    """
    g = gradient_batch(z1, zp, zn, p)
    gnorm = np.linalg.norm(g, axis=-1)
    H = hessian_batch(z1, zp, zn, p)
    U = tangent_basis(g)
    # quadratic form w^T H conj(w) restricted to w = U c
    M = np.einsum("...ji,...jk,...kl->...il", U, H, np.conj(U))
    M = 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))
    eig = np.linalg.eigvalsh(M)
    return eig[..., 0], gnorm


@dataclass(frozen=True)
class LeviReport:
    point: CPoint
    min_tangential_eigenvalue: float
    tangent_dimension: int
    gradient_norm: float


def tangential_levi_min_eig(
    z: CPoint, p: WormParams, boundary_tol: float = 1e-8, grad_tol: float = 1e-12
) -> LeviReport:
    """Levi form of ``r`` at a boundary point, restricted to the complex tangent space."""
    z1, zp, zn = _split(z, p)
    r = defining_batch(z1, zp, zn, p)[0]
    g = gradient_batch(z1, zp, zn, p)[0]
    gnorm = float(np.linalg.norm(g))
    if gnorm < grad_tol:
        raise DegenerateGradientError(f"gradient norm {gnorm:.3e} below {grad_tol:.1e}")
    if abs(r) / gnorm >= boundary_tol:
        raise DomainError(f"point is not on the boundary: r = {r:.3e}")
    eig, _ = levi_min_eig_batch(z1, zp, zn, p)
    return LeviReport(z, float(eig[0]), p.dim - 1, gnorm)


def distance_to_weak_set(z1, zp, zn, beta: float):
    """Distance to ``{z1 = 0, z' = 0, 1 <= |zn| <= beta}``."""
    rn = np.abs(zn)
    radial = np.maximum(0.0, np.maximum(1.0 - rn, rn - beta))
    return np.sqrt(np.abs(z1) ** 2 + np.sum(np.abs(zp) ** 2, axis=-1) + radial**2)


# ---------------------------------------------------------------------------
# boundary sampling


def _anchor(p: WormParams):
    rho = 0.5 * (1.0 + p.beta)
    z1 = np.exp(2j * p.alpha * math.log(rho))
    return np.concatenate([[z1], np.zeros(p.dim - 2), [rho]]).astype(complex)


def sample_directions(p: WormParams, count: int, seed: int) -> np.ndarray:
    """Unit directions in C^n; sample ``i`` uses its own substream ``(seed, i)``."""
    out = np.empty((count, p.dim), dtype=complex)
    for i in range(count):
        x = np.random.default_rng([seed, i]).standard_normal(2 * p.dim)
        x /= np.linalg.norm(x)
        out[i] = x[: p.dim] + 1j * x[p.dim:]
    return out


def boundary_points(
    p: WormParams,
    directions: np.ndarray,
    step: float = 0.02,
    t_max: float = 12.0,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> np.ndarray:
    """First boundary crossing along rays from an interior anchor.

    The anchor is the centre of the ``z1`` disc over ``|zn| = (1+beta)/2``;
    the crossing is bracketed by marching and refined by bisection.
    """
    anchor = _anchor(p)
    n = p.dim

    def r_at(t):
        z = anchor[None, :] + t[:, None] * directions
        with np.errstate(invalid="ignore", divide="ignore"):
            val = defining_batch(z[:, 0], z[:, 1 : n - 1], z[:, n - 1], p)
        return np.where(np.isfinite(val), val, np.inf)

    N = directions.shape[0]
    lo = np.zeros(N)
    hi = np.full(N, np.nan)
    t = 0.0
    active = np.ones(N, dtype=bool)
    while active.any() and t < t_max:
        t += step
        tt = np.full(N, t)
        r = r_at(tt)
        hit = active & (r > 0)
        hi[hit] = t
        lo[active & ~hit] = t
        active &= ~hit
    if active.any():
        raise DomainError("ray did not leave the domain; is M > e^2?")
    lo = hi - step
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        rm = r_at(mid)
        inside = rm < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.all(np.abs(rm) < tol) or np.all(hi - lo < 1e-15):
            break
    tb = 0.5 * (lo + hi)
    return anchor[None, :] + tb[:, None] * directions


@dataclass
class ScanReport:
    params: WormParams
    points: np.ndarray
    min_eigs: np.ndarray
    grad_norms: np.ndarray
    distances: np.ndarray
    residuals: np.ndarray
    weak_threshold: float = 1e-6

    @property
    def global_min(self) -> float:
        return float(self.min_eigs.min())

    @property
    def argmin_point(self) -> CPoint:
        return CPoint.from_array(self.points[int(np.argmin(self.min_eigs))])

    @property
    def near_zero(self) -> np.ndarray:
        """Indices with eigenvalue below ``weak_threshold``."""
        return np.flatnonzero(self.min_eigs < self.weak_threshold)

    @property
    def most_negative(self) -> float:
        """Most negative eigenvalue seen, 0 if none; guides the search for admissible M."""
        return float(min(0.0, self.global_min))

    def rows(self):
        n = self.params.dim
        for z, e, g, d in zip(self.points, self.min_eigs, self.grad_norms, self.distances):
            row = []
            for j in range(n):
                row += [z[j].real, z[j].imag]
            yield row + [e, g, d]

    def header(self) -> list[str]:
        cols = []
        for j in range(1, self.params.dim + 1):
            cols += [f"z{j}_re", f"z{j}_im"]
        return cols + ["min_eig", "gradient_norm", "distance_to_weak_set"]


def pseudoconvexity_scan(p: WormParams, sample_count: int, seed: int = 0) -> ScanReport:
    """Sample boundary points and evaluate the tangential Levi form at each."""
    p.require_bounded()
    if sample_count < 1:
        raise PreconditionError("sample_count must be >= 1")
    dirs = sample_directions(p, sample_count, seed)
    pts = boundary_points(p, dirs)
    n = p.dim
    z1, zp, zn = pts[:, 0], pts[:, 1 : n - 1], pts[:, n - 1]
    eig, gnorm = levi_min_eig_batch(z1, zp, zn, p)
    return ScanReport(
        params=p,
        points=pts,
        min_eigs=eig,
        grad_norms=gnorm,
        distances=distance_to_weak_set(z1, zp, zn, p.beta),
        residuals=defining_batch(z1, zp, zn, p),
    )


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class ScalingFrame:
    """``tau_lambda(z1, z', zn) = (2 lambda^2 z1, lambda z', zn)``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise PreconditionError("lambda must be positive")

    def forward(self, z: CPoint) -> CPoint:
        lam = self.lam
        return CPoint(2 * lam**2 * z.z1, tuple(lam * v for v in z.zprime), z.zn)

    def inverse(self, z: CPoint) -> CPoint:
        lam = self.lam
        return CPoint(z.z1 / (2 * lam**2), tuple(v / lam for v in z.zprime), z.zn)


def limit_defining(z: CPoint, p: WormParams) -> float:
    """``r_inf = |z'|^2 - Re(z1 e^{-2 i alpha ln|zn|})``."""
    E = np.exp(2j * p.alpha * math.log(abs(z.zn)))
    return float(sum(abs(v) ** 2 for v in z.zprime) - (z.z1 * np.conj(E)).real)


def scaled_defining(lam: float, z: CPoint, p: WormParams) -> tuple[float, float]:
    """``(lambda^2 r(tau_lambda^{-1} z), r_inf(z))``."""
    frame = ScalingFrame(lam)
    r_lam = lam**2 * defining_function(frame.inverse(z), p)
    return r_lam, limit_defining(z, p)


def annulus_points(p: WormParams, count: int, seed: int, z1_radius: float = 2.0) -> list[CPoint]:
    """Seeded points with ``1 < |zn| < beta``, ``|z1| < z1_radius`` and ``|z'_j| < 1``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z1 = z1_radius * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform())
        zp = tuple(math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform()) for _ in range(p.dim - 2))
        rho = rng.uniform(1.0, p.beta)
        if rho == 1.0:
            rho = 0.5 * (1.0 + p.beta)
        out.append(CPoint(complex(z1), zp, complex(rho * np.exp(2j * math.pi * rng.uniform()))))
    return out


@dataclass(frozen=True)
class ScalingRow:
    index: int
    lam: float
    r_lambda: float
    r_limit: float
    predicted: float

    @property
    def abs_error(self) -> float:
        return abs((self.r_lambda - self.r_limit) - self.predicted)


def scaling_residuals(p: WormParams, lams, count: int = 100, seed: int = 0) -> list[ScalingRow]:
    """``r_lambda - r_inf`` against ``|z1|^2 / (4 lambda^2)`` on seeded annulus points."""
    rows = []
    for i, z in enumerate(annulus_points(p, count, seed)):
        for lam in lams:
            r_lam, r_inf = scaled_defining(lam, z, p)
            rows.append(ScalingRow(i, float(lam), r_lam, r_inf, abs(z.z1) ** 2 / (4 * lam**2)))
    return rows

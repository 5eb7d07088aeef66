"""Parameter containers shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, WormValidationError

E2 = math.e ** 2


@dataclass(frozen=True)
class WormParams:
    """Worm domain parameters.

    ``alpha`` is the winding speed, ``beta`` the outer radius of the annulus
    ``1 < |z_n| < beta``, ``smoothing_m`` the amplitude ``M`` of the cutoff
    ``sigma`` and ``dim`` the complex dimension ``n``.  ``nu`` and ``mu`` are
    derived and cannot be passed in.
    """

    alpha: float = 1.0
    beta: float = math.e
    smoothing_m: float = 20.0
    dim: int = 4
    nu: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise WormValidationError(f"invariant alpha > 0 violated (alpha={self.alpha})")
        if not (self.beta > 1 and math.isfinite(self.beta)):
            raise WormValidationError(f"invariant beta > 1 violated (beta={self.beta})")
        if int(self.dim) != self.dim or self.dim < 3:
            raise WormValidationError(f"invariant dim >= 3 violated (dim={self.dim})")
        if not self.smoothing_m > 0:
            raise WormValidationError(f"invariant M > 0 violated (M={self.smoothing_m})")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "nu", math.pi / (2.0 * self.alpha * math.log(self.beta)))
        object.__setattr__(self, "mu", 1.0 / (2.0 * self.alpha))

    @property
    def log_beta(self) -> float:
        return math.log(self.beta)

    @property
    def total_winding(self) -> float:
        return 2.0 * self.alpha * math.log(self.beta)

    @property
    def strip_top(self) -> float:
        """Upper edge of the strip ``-pi/2 < Im z < pi/2 + 2 alpha ln beta``."""
        return math.pi / 2 + self.total_winding

    def require_bounded(self) -> None:
        """Boundedness of the worm domain needs ``M > e^2``."""
        if not self.smoothing_m > E2:
            raise PreconditionError(
                f"boundedness precondition M > e^2 = {E2:.6f} violated (M={self.smoothing_m})"
            )


@dataclass(frozen=True)
class ModeIndex:
    """Torus character ``(J, k)``; ``J`` has one entry per ``z'`` coordinate."""

    j_multi: tuple[int, ...]
    k: int

    def __post_init__(self):
        j = tuple(int(v) for v in self.j_multi)
        if any(v < 0 for v in j):
            raise WormValidationError(f"J must be nonnegative, got {j}")
        object.__setattr__(self, "j_multi", j)
        object.__setattr__(self, "k", int(self.k))

    @property
    def j_abs(self) -> int:
        return sum(self.j_multi)

    @classmethod
    def for_dim(cls, dim: int, j: Sequence[int] | None = None, k: int = -2) -> "ModeIndex":
        if j is None or len(j) == 0:
            j = (0,) * (dim - 2)
        if len(j) != dim - 2:
            raise WormValidationError(f"J must have dim-2={dim - 2} entries, got {len(j)}")
        return cls(tuple(j), k)

    def check_dim(self, dim: int) -> None:
        if len(self.j_multi) != dim - 2:
            raise WormValidationError(
                f"mode J has {len(self.j_multi)} entries but dim-2 = {dim - 2}"
            )

    def cos_power(self, dim: int) -> int:
        return self.j_abs + dim - 2


@dataclass(frozen=True)
class CPoint:
    """Point ``(z1, z', z_n)`` of C^n."""

    z1: complex
    zprime: tuple[complex, ...]
    zn: complex

    def __post_init__(self):
        object.__setattr__(self, "z1", complex(self.z1))
        object.__setattr__(self, "zprime", tuple(complex(v) for v in self.zprime))
        object.__setattr__(self, "zn", complex(self.zn))
        if self.zn == 0:
            raise DomainError("z_n = 0: ln|z_n| undefined")

    @property
    def dim(self) -> int:
        return len(self.zprime) + 2

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, *self.zprime, self.zn], dtype=complex)

    @classmethod
    def from_array(cls, z) -> "CPoint":
        z = np.asarray(z, dtype=complex)
        return cls(z[0], tuple(z[1:-1]), z[-1])

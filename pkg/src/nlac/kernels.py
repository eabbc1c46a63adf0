"""Fractional-power interaction kernels and their analytic invariants.

The kernel family is

    rho(r) = 2*(4 - alpha) / (pi * delta**(4 - alpha) * r**alpha),   0 < r <= delta,

and zero beyond the horizon ``delta``. The normalization fixes the second
moment of the kernel over the interaction disc at 4 (twice the spatial
dimension), which is what makes the nonlocal operator consistent with the
Laplacian as ``delta -> 0``. For ``alpha < 2`` the kernel is integrable and
its total mass governs whether steady interfaces are continuous or carry a
finite jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class NonIntegrableKernelError(ValueError):
    """Raised when a finite kernel mass is requested for alpha >= 2."""


@dataclass(frozen=True)
class KernelSpec:
    """Fractional-power kernel with exponent ``alpha`` and horizon ``delta``.

    Immutable; all derived constants are recomputed from the closed forms so
    the pair (alpha, delta) is the single source of truth.
    """

    alpha: float
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 4.0:
            raise ValueError(f"kernel exponent must lie in [0, 4), got alpha={self.alpha}")
        if not self.delta > 0.0:
            raise ValueError(f"kernel horizon must be positive, got delta={self.delta}")

    @property
    def normalization(self) -> float:
        """Prefactor 2(4-alpha)/(pi delta^(4-alpha)) of the kernel."""
        return 2.0 * (4.0 - self.alpha) / (math.pi * self.delta ** (4.0 - self.alpha))

    @property
    def integrable(self) -> bool:
        return self.alpha < 2.0


def evaluate_kernel(spec: KernelSpec, r: float) -> float:
    """Evaluate the kernel at radius ``r > 0``; zero outside the horizon.

    The kernel is singular at r = 0 for alpha > 0, so r <= 0 is rejected
    outright rather than returning an infinity that quadrature code could
    silently propagate.
    """
    if r <= 0.0:
        raise ValueError(f"kernel radius must be positive, got r={r}")
    if r > spec.delta:
        return 0.0
    return spec.normalization / r ** spec.alpha


def kernel_mass(spec: KernelSpec) -> float:
    """Total kernel mass over the interaction disc, 4(4-alpha)/((2-alpha) delta^2).

    Only defined for integrable kernels (alpha < 2); alpha >= 2 raises
    NonIntegrableKernelError so that jump predictions cannot silently operate
    on an infinite mass.
    """
    if not spec.integrable:
        raise NonIntegrableKernelError(
            f"kernel mass diverges for alpha={spec.alpha} >= 2"
        )
    return 4.0 * (4.0 - spec.alpha) / ((2.0 - spec.alpha) * spec.delta ** 2)


def critical_delta(alpha: float, eps: float) -> float:
    """Horizon at which eps^2 * kernel_mass == 1 for the given exponent.

    Below this horizon the steady interface is continuous; above it a jump
    opens up. Closed form: 2 * eps * sqrt((4-alpha)/(2-alpha)).
    """
    if not 0.0 <= alpha < 2.0:
        raise ValueError(f"critical horizon requires 0 <= alpha < 2, got alpha={alpha}")
    if not eps > 0.0:
        raise ValueError(f"interfacial parameter must be positive, got eps={eps}")
    return 2.0 * eps * math.sqrt((4.0 - alpha) / (2.0 - alpha))


def predicted_jump(spec: KernelSpec, eps: float) -> float:
    """Theoretical steady-state interface jump 2*sqrt(1 - eps^2 * mass).

    Returns 0 when eps^2 * mass >= 1 (continuous steady state). Applies to
    the locally monotone cross-section of a steady interface.
    """
    if not eps > 0.0:
        raise ValueError(f"interfacial parameter must be positive, got eps={eps}")
    mass_term = eps * eps * kernel_mass(spec)
    if mass_term >= 1.0:
        return 0.0
    return 2.0 * math.sqrt(1.0 - mass_term)

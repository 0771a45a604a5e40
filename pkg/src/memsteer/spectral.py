"""Sine-basis representation of states and operators on (0, pi).

States are vectors of coefficients against the orthonormal basis
e_n(xi) = sqrt(2/pi) sin(n xi), n = 1..N.  All spatial operators used by
the toolkit (diffusion-reaction generator, its fractional powers, the
actuator window) are realized against this basis: the generator and its
powers are diagonal, the actuator matrix has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BasisSpec",
    "CoefficientFunctions",
    "default_coefficients",
    "project",
    "mode_values",
    "mode_derivative_values",
    "fractional_power_apply",
    "control_matrix",
]


@dataclass(frozen=True)
class BasisSpec:
    """Truncation of the sine basis plus the physical collocation grid.

    n_modes
        Number of retained modes N.
    collocation_points
        Number of uniform subintervals of [0, pi] used whenever a state
        has to be evaluated pointwise (quadrature, nonlinearities).  Must
        be even (composite Simpson) and at least 2*n_modes so that mode
        products are integrated without aliasing.  Defaults to 4*n_modes.
    """

    n_modes: int
    collocation_points: int = 0

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.collocation_points == 0:
            object.__setattr__(self, "collocation_points", 4 * self.n_modes)
        if self.collocation_points < 2 * self.n_modes:
            raise ValueError(
                f"collocation_points={self.collocation_points} must be >= "
                f"2*n_modes={2 * self.n_modes}"
            )
        if self.collocation_points % 2 != 0:
            raise ValueError("collocation_points must be even for Simpson quadrature")

    @property
    def xi(self) -> np.ndarray:
        """Collocation nodes xi_j = j*pi/M, j = 0..M."""
        return np.linspace(0.0, np.pi, self.collocation_points + 1)

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)


@lru_cache(maxsize=32)
def _colloc_matrices(n_modes: int, m: int):
    xi = np.linspace(0.0, np.pi, m + 1)
    n = np.arange(1, n_modes + 1)
    scale = np.sqrt(2.0 / np.pi)
    values = scale * np.sin(np.outer(xi, n))  # (M+1, N): coeffs -> point values
    derivs = scale * np.cos(np.outer(xi, n)) * n  # d/dxi of the series
    w = np.zeros(m + 1)
    w[0] = w[-1] = 1.0
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (np.pi / m) / 3.0  # composite Simpson weights
    return values, derivs, w


def mode_values(x: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Evaluate the state with coefficients ``x`` on the collocation grid."""
    values, _, _ = _colloc_matrices(basis.n_modes, basis.collocation_points)
    return values @ np.asarray(x, dtype=float)


def mode_derivative_values(x: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Evaluate the spatial derivative of the state on the collocation grid."""
    _, derivs, _ = _colloc_matrices(basis.n_modes, basis.collocation_points)
    return derivs @ np.asarray(x, dtype=float)


def project(f, basis: BasisSpec) -> np.ndarray:
    """Project a spatial function onto the truncated sine basis.

    ``f`` is either a callable on [0, pi] (vectorized over an ndarray of
    nodes) or an array of values on the collocation grid.  Returns the
    coefficient vector of length ``basis.n_modes`` computed by composite
    Simpson quadrature of <f, e_n>.
    """
    values_mat, _, w = _colloc_matrices(basis.n_modes, basis.collocation_points)
    if callable(f):
        fv = np.asarray(f(basis.xi), dtype=float)
    else:
        fv = np.asarray(f, dtype=float)
    if fv.shape != basis.xi.shape:
        raise ValueError(
            f"expected {basis.xi.shape[0]} point values, got shape {fv.shape}"
        )
    if not np.all(np.isfinite(fv)):
        raise ValueError("function values contain non-finite entries")
    return values_mat.T @ (w * fv)


@dataclass(frozen=True)
class CoefficientFunctions:
    """Time-dependent problem coefficients.

    b
        Reaction coefficient b(t); must accept ndarray arguments.  The
        standing hypothesis of the model class is b(t) < -1; violations
        are surfaced by the instability diagnostics of the resolvent
        march rather than rejected up front.
    c_kernel
        Memory kernel C(t, s) for s <= t, or None for the memory-free
        problem.
    dc_ds
        Partial derivative of the kernel in its second argument, used by
        the correction-kernel reconstructions.  When None it is replaced
        by a second-order finite difference.
    dc_dt_bound
        Known bound on |dC/dt|, recorded in run manifests.
    """

    b: Callable[[np.ndarray], np.ndarray]
    c_kernel: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    dc_ds: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    dc_dt_bound: Optional[float] = None

    @property
    def memory_free(self) -> bool:
        return self.c_kernel is None


def default_coefficients(
    b0: float = -2.0, b1: float = -0.1, c0: float = 0.5, decay: float = 1.0
) -> CoefficientFunctions:
    """Smooth default coefficient family.

    b(t) = b0 + b1*sin(t) and C(t, s) = c0*exp(-decay*(t-s)).  With
    b0 <= -2 and |b1| <= 0.5 the reaction coefficient stays below -1;
    c0 = 0 gives the memory-free problem.
    """
    if b0 + abs(b1) >= -1.0:
        raise ValueError(f"b0={b0}, b1={b1} do not keep b(t) < -1")

    def b(t):
        return b0 + b1 * np.sin(t)

    if c0 == 0.0:
        return CoefficientFunctions(b=b)

    def c_kernel(t, s):
        return c0 * np.exp(-decay * (t - np.asarray(s)))

    def dc_ds(t, s):
        return c0 * decay * np.exp(-decay * (t - np.asarray(s)))

    return CoefficientFunctions(
        b=b, c_kernel=c_kernel, dc_ds=dc_ds, dc_dt_bound=abs(c0) * decay
    )


def fractional_power_apply(
    x: np.ndarray, alpha: float, t0: float, coeffs: CoefficientFunctions
) -> np.ndarray:
    """Apply the fractional power of the diffusion-reaction generator.

    Mode n is scaled by (n^2 - b(t0))**alpha; negative alpha applies the
    inverse power.  alpha must lie in (-1, 1] and be nonzero.
    """
    if not (-1.0 < alpha <= 1.0) or alpha == 0.0:
        raise ValueError(f"alpha={alpha} outside (-1, 1] \\ {{0}}")
    bt = float(coeffs.b(np.asarray(t0)))
    if bt >= -1.0:
        raise ValueError(f"b(t0)={bt} >= -1; fractional powers need b(t0) < -1")
    x = np.asarray(x, dtype=float)
    n = np.arange(1, x.shape[-1] + 1)
    return x * (n * n - bt) ** alpha


def control_matrix(a1: float, a2: float, basis: BasisSpec) -> np.ndarray:
    """Matrix of the actuator window chi_(a1,a2) against the sine basis.

    Entry (m, n) = (2/pi) * int_{a1}^{a2} sin(m xi) sin(n xi) dxi, in
    closed form.  The result is symmetric positive semidefinite with
    eigenvalues in [0, 1]; the full window (0, pi) gives the identity.
    """
    if not (0.0 <= a1 < a2 <= np.pi):
        raise ValueError(f"need 0 <= a1 < a2 <= pi, got a1={a1}, a2={a2}")
    n = basis.mode_numbers.astype(float)
    diff = n[:, None] - n[None, :]
    summ = n[:, None] + n[None, :]

    def antiderivative(xi):
        # int sin(m xi) sin(n xi) dxi, valid entrywise with the m == n
        # diagonal patched separately
        with np.errstate(divide="ignore", invalid="ignore"):
            off = np.sin(diff * xi) / (2.0 * diff) - np.sin(summ * xi) / (2.0 * summ)
        diag = xi / 2.0 - np.sin(2.0 * n * xi) / (4.0 * n)
        off[np.eye(basis.n_modes, dtype=bool)] = diag
        return off

    mat = (2.0 / np.pi) * (antiderivative(a2) - antiderivative(a1))
    return 0.5 * (mat + mat.T)

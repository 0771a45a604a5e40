"""Exponentially weighted histories on (-infinity, 0].

A history is stored as samples on a uniform grid [-T, 0] plus an
explicit tail model describing the function beyond -T (zero, frozen at
the last sample, or exponentially relaxing from it).  The weighted
supremum norm sup e^{gamma theta} ||psi(theta)|| makes the far past
negligible, which is what justifies the truncation: with the default
T = 3/gamma the neglected weighted mass is at most e^{-3} relative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import CoefficientFunctions, fractional_power_apply

__all__ = [
    "HistorySegment",
    "DelayLaw",
    "decaying_mode_history",
    "weighted_norm",
    "shifted_weighted_norm",
    "segment_extract",
    "delay_evaluate",
    "history_bound_constants",
]

TAIL_KINDS = ("zero", "constant", "exponential")


@dataclass(frozen=True)
class HistorySegment:
    """Sampled history with weight rate gamma and an explicit tail.

    theta
        Increasing uniform sample points, theta[-1] == 0.
    values
        States at the sample points, shape (len(theta), n_modes).
    tail
        Behaviour for theta < theta[0]: "zero", "constant"
        (value frozen at theta[0]), or "exponential"
        (values[0] * exp(tail_rate * (theta - theta[0])), tail_rate >= 0).
    """

    theta: np.ndarray
    values: np.ndarray
    gamma: float
    tail: str = "zero"
    tail_rate: float = 0.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "values", values)
        if theta.ndim != 1 or len(theta) < 2:
            raise ValueError("need at least two history nodes")
        if abs(theta[-1]) > 1e-12:
            raise ValueError(f"last history node must be 0, got {theta[-1]}")
        if np.any(np.diff(theta) <= 0):
            raise ValueError("history nodes must be strictly increasing")
        if values.shape[0] != len(theta):
            raise ValueError("values and theta length mismatch")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.tail not in TAIL_KINDS:
            raise ValueError(f"tail must be one of {TAIL_KINDS}, got {self.tail!r}")
        if self.tail_rate < 0:
            raise ValueError(f"tail_rate must be >= 0, got {self.tail_rate}")
        if not np.all(np.isfinite(values)):
            raise ValueError("history values contain non-finite entries")

    @property
    def horizon(self) -> float:
        return -float(self.theta[0])

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def value_at(self, theta: float) -> np.ndarray:
        """Evaluate the history at a single time offset theta <= 0."""
        if theta > 1e-12:
            raise ValueError(f"history is defined for theta <= 0, got {theta}")
        t0 = self.theta[0]
        if theta >= t0:
            out = np.empty(self.n_modes)
            for k in range(self.n_modes):
                out[k] = np.interp(theta, self.theta, self.values[:, k])
            return out
        if self.tail == "zero":
            return np.zeros(self.n_modes)
        if self.tail == "constant":
            return self.values[0].copy()
        return self.values[0] * np.exp(self.tail_rate * (theta - t0))

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], np.ndarray],
        gamma: float,
        horizon: float,
        n_nodes: int,
        tail: str = "zero",
        tail_rate: float = 0.0,
    ) -> "HistorySegment":
        theta = np.linspace(-horizon, 0.0, n_nodes + 1)
        values = np.stack([np.asarray(fn(th), dtype=float) for th in theta])
        return cls(theta=theta, values=values, gamma=gamma, tail=tail, tail_rate=tail_rate)


def decaying_mode_history(
    n_modes: int,
    gamma: float,
    amplitude: float = 1.0,
    rate: float = 1.0,
    mode: int = 1,
    horizon: Optional[float] = None,
    n_nodes: int = 64,
) -> HistorySegment:
    """History amplitude * e^{rate*theta} in a single mode, exact tail."""
    if horizon is None:
        horizon = 3.0 / gamma

    def fn(theta):
        v = np.zeros(n_modes)
        v[mode - 1] = amplitude * np.exp(rate * theta)
        return v

    return HistorySegment.from_function(
        fn, gamma, horizon, n_nodes, tail="exponential", tail_rate=rate
    )


def _node_norms(psi: HistorySegment, alpha_flag, t0, coeffs) -> np.ndarray:
    vals = psi.values
    if alpha_flag:
        if coeffs is None:
            raise ValueError("alpha-weighted norm needs coefficient functions")
        vals = np.stack(
            [fractional_power_apply(v, 0.5, t0, coeffs) for v in vals]
        )
    return np.linalg.norm(vals, axis=1)


def _tail_weighted_sup(psi: HistorySegment, anchor_norm: float, cutoff: float) -> float:
    """sup of e^{gamma theta} ||psi(theta)|| over theta <= cutoff in the tail.

    Requires cutoff <= theta[0].  Closed form per tail kind; every tail
    envelope is nondecreasing in theta so the supremum sits at cutoff.
    """
    g = psi.gamma
    t0 = psi.theta[0]
    if psi.tail == "zero":
        return 0.0
    if psi.tail == "constant":
        return float(np.exp(g * cutoff)) * anchor_norm
    return float(np.exp(g * cutoff + psi.tail_rate * (cutoff - t0))) * anchor_norm


def weighted_norm(
    psi: HistorySegment,
    alpha_flag: bool = False,
    t0: float = 0.0,
    coeffs: Optional[CoefficientFunctions] = None,
) -> float:
    """Weighted supremum norm sup_{theta <= 0} e^{gamma theta} ||psi(theta)||.

    With the alpha flag the state norm is taken after applying the
    square-root fractional power of the generator frozen at t0.  The
    supremum is evaluated at the grid nodes plus the closed-form tail
    supremum (which for every supported tail kind is attained at the
    truncation point and never exceeds the node there).
    """
    norms = _node_norms(psi, alpha_flag, t0, coeffs)
    grid_sup = float(np.max(np.exp(psi.gamma * psi.theta) * norms))
    tail_sup = _tail_weighted_sup(psi, norms[0], psi.theta[0])
    return max(grid_sup, tail_sup)


def shifted_weighted_norm(
    psi: HistorySegment,
    t: float,
    alpha_flag: bool = False,
    t0: float = 0.0,
    coeffs: Optional[CoefficientFunctions] = None,
) -> float:
    """Weighted norm of the shifted history psi_t(theta) = psi(t + theta), t <= 0.

    Equals e^{-gamma t} * sup_{theta' <= t} e^{gamma theta'} ||psi(theta')||.
    """
    if t > 1e-12:
        raise ValueError(f"shift must be <= 0, got {t}")
    g = psi.gamma
    norms = _node_norms(psi, alpha_flag, t0, coeffs)
    lead = psi.theta[0]
    if t <= lead:
        sup = _tail_weighted_sup(psi, norms[0], t)
    else:
        mask = psi.theta <= t + 1e-15
        sup = float(np.max(np.exp(g * psi.theta[mask]) * norms[mask])) if mask.any() else 0.0
        vt = psi.value_at(t)
        if alpha_flag:
            vt = fractional_power_apply(vt, 0.5, t0, coeffs)
        sup = max(sup, float(np.exp(g * t)) * float(np.linalg.norm(vt)))
        sup = max(sup, _tail_weighted_sup(psi, norms[0], lead))
    return float(np.exp(-g * t)) * sup


def segment_extract(
    times: np.ndarray, states: np.ndarray, phi: HistorySegment, t: float
) -> HistorySegment:
    """History segment of a trajectory at time t.

    The returned segment agrees with the trajectory (linearly
    interpolated) on [-t, 0] and with the shifted initial history on
    (-infinity, -t); the initial history's tail kind carries over
    unchanged.  ``times``/``states`` sample the trajectory on [0, tau].
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if not (0.0 <= t <= times[-1] + 1e-12):
        raise ValueError(f"t={t} outside trajectory span [0, {times[-1]}]")
    dt_traj = times[1] - times[0] if len(times) > 1 else phi.horizon
    d_phi = phi.theta[1] - phi.theta[0]
    dtheta = min(dt_traj, d_phi)
    span = t + phi.horizon
    n_nodes = max(2, int(round(span / dtheta)))
    theta = np.linspace(-span, 0.0, n_nodes + 1)
    values = np.empty((n_nodes + 1, phi.n_modes))
    for k, th in enumerate(theta):
        absolute = t + th
        if absolute >= 0.0:
            for m in range(phi.n_modes):
                values[k, m] = np.interp(absolute, times, states[:, m])
        else:
            values[k] = phi.value_at(absolute)
    return HistorySegment(
        theta=theta,
        values=values,
        gamma=phi.gamma,
        tail=phi.tail,
        tail_rate=phi.tail_rate,
    )


@dataclass(frozen=True)
class DelayLaw:
    """State-dependent lag t -> t - sigma(||psi(0)||).

    ``sigma`` maps the current state magnitude to a nonnegative lag.
    ``constant_value`` is set when the lag does not depend on the state,
    which is what the direct-marching oracle requires.
    """

    sigma: Callable[[float], float]
    constant_value: Optional[float] = None

    @classmethod
    def constant(cls, value: float) -> "DelayLaw":
        if value < 0:
            raise ValueError(f"lag must be >= 0, got {value}")
        return cls(sigma=lambda _s, _v=value: _v, constant_value=value)

    @classmethod
    def from_callable(cls, fn: Callable[[float], float]) -> "DelayLaw":
        return cls(sigma=fn)

    def lag(self, state_norm: float) -> float:
        val = float(self.sigma(state_norm))
        if val < 0:
            raise ValueError(f"delay law returned a negative lag {val}")
        return val


def delay_evaluate(t: float, psi: HistorySegment, law: DelayLaw) -> float:
    """Delayed time t - sigma(||psi(0)||), possibly landing in the history."""
    return t - law.lag(float(np.linalg.norm(psi.value_at(0.0))))


def history_bound_constants(
    phi: HistorySegment, rho_samples, **norm_kwargs
) -> tuple[float, float]:
    """Constants (H2, H3) bounding segment norms along a trajectory.

    For the exponentially weighted space the segment inequality holds
    with unit gain on the running supremum, so H3 = 1.  H2 collects the
    worst shifted-history amplification over the sampled negative delay
    times plus the (unit) supremum of the fading factor e^{-gamma t}
    over [0, tau].  An all-zero history contributes nothing by
    convention.
    """
    base = weighted_norm(phi, **norm_kwargs)
    sup_theta = 0.0
    for t in rho_samples:
        if t > 0:
            raise ValueError(f"delay samples must be <= 0, got {t}")
        if base == 0.0:
            continue
        sup_theta = max(sup_theta, shifted_weighted_norm(phi, t, **norm_kwargs) / base)
    return sup_theta + 1.0, 1.0

"""Flat key = value scenario configuration.

The format is INI-style sections of plain key = value pairs (parsed by
:mod:`configparser`, so syntax errors come with line numbers).  Unknown
sections or keys are rejected by name, as are values violating module
preconditions; the full schema is documented in the README.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .history import DelayLaw, HistorySegment, decaying_mode_history
from .mild import DelayProblem, Nonlinearity, NONLINEARITY_KINDS
from .resolvent import TimeGrid
from .spectral import BasisSpec, CoefficientFunctions, default_coefficients

__all__ = ["ScenarioConfig", "load_config", "parse_config"]

MODES = (
    "resolvent-check",
    "steer-linear",
    "steer-nonlinear",
    "lambda-sweep",
    "duality-lab",
)

_SCHEMA = {
    "run": {"mode", "seed", "output_dir"},
    "grid": {"tau", "n_steps"},
    "basis": {"n_modes", "collocation_points"},
    "coefficients": {"b0", "b1", "c0", "decay"},
    "actuator": {"a1", "a2"},
    "history": {"gamma", "amplitude", "rate", "mode", "nodes", "horizon"},
    "delay": {"sigma"},
    "nonlinearity": {"kind", "kappa"},
    "target": {"kind", "modes", "scale"},
    "steer": {"lambda_value", "lambda_list", "sweep_kind", "dump_trajectory"},
    "resolvent_check": {"beta_list", "alpha", "epsilon_steps", "dump_table"},
    "duality": {"dim", "p_list", "lambda_list", "n_random"},
}


@dataclass
class ScenarioConfig:
    """Validated scenario parameters plus factory methods."""

    mode: str
    seed: int
    output_dir: str
    tau: float
    n_steps: int
    n_modes: int
    collocation_points: int
    b0: float
    b1: float
    c0: float
    decay: float
    a1: float
    a2: float
    gamma: float
    amplitude: float
    rate: float
    history_mode: int
    history_nodes: int
    history_horizon: float
    sigma: float
    nl_kind: str
    kappa: float
    target_kind: str
    target_modes: list[float]
    target_scale: float
    lambda_value: float
    lambda_list: list[float]
    sweep_kind: str
    dump_trajectory: bool
    beta_list: list[float]
    alpha: float
    epsilon_steps: list[int]
    dump_table: bool
    duality_dim: int
    p_list: list[float]
    duality_lambda_list: list[float]
    duality_n_random: int
    raw: dict = field(default_factory=dict)

    def grid(self) -> TimeGrid:
        return TimeGrid(tau=self.tau, n_steps=self.n_steps)

    def basis(self) -> BasisSpec:
        return BasisSpec(
            n_modes=self.n_modes, collocation_points=self.collocation_points
        )

    def coeffs(self) -> CoefficientFunctions:
        return default_coefficients(
            b0=self.b0, b1=self.b1, c0=self.c0, decay=self.decay
        )

    def phi(self) -> HistorySegment:
        horizon = self.history_horizon if self.history_horizon > 0 else None
        return decaying_mode_history(
            n_modes=self.n_modes,
            gamma=self.gamma,
            amplitude=self.amplitude,
            rate=self.rate,
            mode=self.history_mode,
            horizon=horizon,
            n_nodes=self.history_nodes,
        )

    def law(self) -> DelayLaw:
        return DelayLaw.constant(self.sigma)

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(kind=self.nl_kind, kappa=self.kappa)

    def problem(self) -> DelayProblem:
        return DelayProblem(
            basis=self.basis(),
            grid=self.grid(),
            coeffs=self.coeffs(),
            phi=self.phi(),
            law=self.law(),
            nonlinearity=self.nonlinearity(),
            actuator=(self.a1, self.a2),
        )

    def target(self) -> np.ndarray:
        d = np.zeros(self.n_modes)
        if self.target_kind == "first-mode":
            d[0] = self.target_scale
        else:
            if len(self.target_modes) > self.n_modes:
                raise ConfigError(
                    f"target.modes lists {len(self.target_modes)} coefficients "
                    f"but basis.n_modes = {self.n_modes}"
                )
            d[: len(self.target_modes)] = self.target_modes
        return d


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def _raw(self, section, key, default):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        if default is None:
            raise ConfigError(f"missing required key {section}.{key}")
        return None

    def get_float(self, section, key, default=None) -> float:
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} = {raw!r} is not a number") from None
        if not math.isfinite(val):
            raise ConfigError(f"{section}.{key} must be finite, got {raw!r}")
        return val

    def get_int(self, section, key, default=None) -> int:
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} = {raw!r} is not an integer") from None

    def get_str(self, section, key, default=None) -> str:
        raw = self._raw(section, key, default)
        return default if raw is None else raw.strip()

    def get_bool(self, section, key, default=None) -> bool:
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{section}.{key} = {raw!r} is not a boolean")

    def get_float_list(self, section, key, default=None) -> list[float]:
        raw = self._raw(section, key, default)
        if raw is None:
            return list(default)
        raw = raw.strip()
        if not raw:
            return []
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(
                f"{section}.{key} = {raw!r} is not a list of numbers"
            ) from None

    def get_int_list(self, section, key, default=None) -> list[int]:
        vals = self.get_float_list(section, key, default)
        out = []
        for v in vals:
            if v != int(v):
                raise ConfigError(f"{section}.{key} entries must be integers")
            out.append(int(v))
        return out


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse and validate a scenario configuration from INI text."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"configuration syntax error: {exc}") from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    r = _Reader(parser)

    mode = r.get_str("run", "mode")
    if mode not in MODES:
        raise ConfigError(f"run.mode = {mode!r} must be one of {MODES}")
    seed = r.get_int("run", "seed", 0)
    if seed < 0:
        raise ConfigError(f"run.seed must be >= 0, got {seed}")
    tau = r.get_float("grid", "tau", 1.0)
    if tau <= 0:
        raise ConfigError(f"grid.tau must be positive, got {tau}")
    n_steps = r.get_int("grid", "n_steps", 200)
    if n_steps < 2:
        raise ConfigError(f"grid.n_steps must be >= 2, got {n_steps}")
    n_modes = r.get_int("basis", "n_modes", 32)
    if n_modes < 1:
        raise ConfigError(f"basis.n_modes must be >= 1, got {n_modes}")
    colloc = r.get_int("basis", "collocation_points", 0)
    if colloc == 0:
        colloc = 4 * n_modes
    if colloc < 2 * n_modes or colloc % 2 != 0:
        raise ConfigError(
            f"basis.collocation_points = {colloc} must be even and >= 2*n_modes"
        )
    b0 = r.get_float("coefficients", "b0", -2.0)
    b1 = r.get_float("coefficients", "b1", -0.1)
    if b0 + abs(b1) >= -1.0:
        raise ConfigError(
            f"coefficients.b0 = {b0} with coefficients.b1 = {b1} violates b(t) < -1"
        )
    c0 = r.get_float("coefficients", "c0", 0.5)
    decay = r.get_float("coefficients", "decay", 1.0)
    if decay < 0:
        raise ConfigError(f"coefficients.decay must be >= 0, got {decay}")
    a1 = r.get_float("actuator", "a1", np.pi / 4)
    a2 = r.get_float("actuator", "a2", 3 * np.pi / 4)
    if not (0.0 <= a1 < a2 <= np.pi + 1e-12):
        raise ConfigError(
            f"actuator window needs 0 <= a1 < a2 <= pi, got a1 = {a1}, a2 = {a2}"
        )
    gamma = r.get_float("history", "gamma", 2.0)
    if gamma <= 0:
        raise ConfigError(f"history.gamma must be positive, got {gamma}")
    amplitude = r.get_float("history", "amplitude", 1.0)
    rate = r.get_float("history", "rate", 1.0)
    if rate < 0:
        raise ConfigError(f"history.rate must be >= 0, got {rate}")
    history_mode = r.get_int("history", "mode", 1)
    if not (1 <= history_mode <= n_modes):
        raise ConfigError(
            f"history.mode = {history_mode} outside 1..{n_modes}"
        )
    history_nodes = r.get_int("history", "nodes", 64)
    if history_nodes < 2:
        raise ConfigError(f"history.nodes must be >= 2, got {history_nodes}")
    history_horizon = r.get_float("history", "horizon", 0.0)
    sigma = r.get_float("delay", "sigma", 0.5)
    if sigma < 0:
        raise ConfigError(f"delay.sigma must be >= 0, got {sigma}")
    nl_kind = r.get_str("nonlinearity", "kind", "kappa_sin")
    if nl_kind not in NONLINEARITY_KINDS:
        raise ConfigError(
            f"nonlinearity.kind = {nl_kind!r} must be one of {NONLINEARITY_KINDS}"
        )
    kappa = r.get_float("nonlinearity", "kappa", 0.1)
    target_kind = r.get_str("target", "kind", "first-mode")
    if target_kind not in ("first-mode", "modes"):
        raise ConfigError(
            f"target.kind = {target_kind!r} must be first-mode or modes"
        )
    target_modes = r.get_float_list("target", "modes", [])
    target_scale = r.get_float("target", "scale", 0.1)
    lambda_value = r.get_float("steer", "lambda_value", 1e-3)
    if lambda_value <= 0:
        raise ConfigError(f"steer.lambda_value must be positive, got {lambda_value}")
    lambda_list = r.get_float_list("steer", "lambda_list", [1e-1, 1e-2, 1e-3])
    if any(v <= 0 for v in lambda_list):
        raise ConfigError("steer.lambda_list entries must be positive")
    if any(b >= a for a, b in zip(lambda_list, lambda_list[1:])):
        raise ConfigError("steer.lambda_list must be strictly decreasing")
    sweep_kind = r.get_str("steer", "sweep_kind", "nonlinear")
    if sweep_kind not in ("linear", "nonlinear"):
        raise ConfigError(
            f"steer.sweep_kind = {sweep_kind!r} must be linear or nonlinear"
        )
    dump_trajectory = r.get_bool("steer", "dump_trajectory", True)
    beta_list = r.get_float_list("resolvent_check", "beta_list", [0.25, 0.5, 0.75])
    if any(not (0 < b < 1) for b in beta_list):
        raise ConfigError("resolvent_check.beta_list entries must lie in (0, 1)")
    alpha = r.get_float("resolvent_check", "alpha", 0.5)
    if not (0 < alpha <= 1):
        raise ConfigError(f"resolvent_check.alpha must lie in (0, 1], got {alpha}")
    epsilon_steps = r.get_int_list("resolvent_check", "epsilon_steps", [4, 8, 16])
    if any(e < 1 for e in epsilon_steps):
        raise ConfigError("resolvent_check.epsilon_steps entries must be >= 1")
    dump_table = r.get_bool("resolvent_check", "dump_table", False)
    duality_dim = r.get_int("duality", "dim", 4)
    if duality_dim < 1:
        raise ConfigError(f"duality.dim must be >= 1, got {duality_dim}")
    p_list = r.get_float_list("duality", "p_list", [1.5, 2.0, 3.0, 4.0])
    if any(not (1 < p) for p in p_list):
        raise ConfigError("duality.p_list entries must be > 1")
    duality_lambda_list = r.get_float_list(
        "duality", "lambda_list", [1.0, 0.1, 0.01, 0.001]
    )
    if any(v <= 0 for v in duality_lambda_list):
        raise ConfigError("duality.lambda_list entries must be positive")
    duality_n_random = r.get_int("duality", "n_random", 1000)
    if duality_n_random < 1:
        raise ConfigError("duality.n_random must be >= 1")

    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return ScenarioConfig(
        mode=mode,
        seed=seed,
        output_dir=r.get_str("run", "output_dir", "out"),
        tau=tau,
        n_steps=n_steps,
        n_modes=n_modes,
        collocation_points=colloc,
        b0=b0,
        b1=b1,
        c0=c0,
        decay=decay,
        a1=a1,
        a2=a2,
        gamma=gamma,
        amplitude=amplitude,
        rate=rate,
        history_mode=history_mode,
        history_nodes=history_nodes,
        history_horizon=history_horizon,
        sigma=sigma,
        nl_kind=nl_kind,
        kappa=kappa,
        target_kind=target_kind,
        target_modes=target_modes,
        target_scale=target_scale,
        lambda_value=lambda_value,
        lambda_list=lambda_list,
        sweep_kind=sweep_kind,
        dump_trajectory=dump_trajectory,
        beta_list=beta_list,
        alpha=alpha,
        epsilon_steps=epsilon_steps,
        dump_table=dump_table,
        duality_dim=duality_dim,
        p_list=p_list,
        duality_lambda_list=duality_lambda_list,
        duality_n_random=duality_n_random,
        raw=raw,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(text, source=str(path))

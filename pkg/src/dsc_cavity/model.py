"""Physical parameters and per-mode couplings for a planar cavity with a dipole wall.

Frequencies are in units of the fundamental cavity frequency ``omega_c`` (hbar = 1).
Bath loss coefficients are the exception: they are given in units of ``omega_0``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

DEFAULT_N_MODES = 200

# |l*n - round(l*n)| below this counts as an integer, i.e. the mode has a node on the wall
DECOUPLED_TOL = 1e-9


class ParameterError(ValueError):
    """An invariant of the input parameters is violated."""


class DampingProfile(str, enum.Enum):
    FLAT = "flat"
    SMOOTH_ZERO = "smooth_zero"


@dataclass(frozen=True)
class SystemParams:
    omega_0: float
    omega_r: float
    l: float
    n_modes: int = DEFAULT_N_MODES
    omega_c: float = 1.0

    @classmethod
    def from_ratio(cls, omega_0: float, ratio: float, l: float, n_modes: int = DEFAULT_N_MODES,
                   omega_c: float = 1.0) -> "SystemParams":
        """Build parameters with the Rabi frequency given as ``omega_r / omega_0``."""
        return cls(omega_0=omega_0, omega_r=ratio * omega_0, l=l, n_modes=n_modes, omega_c=omega_c)

    @property
    def ratio(self) -> float:
        return self.omega_r / self.omega_0

    def with_ratio(self, ratio: float) -> "SystemParams":
        return replace(self, omega_r=ratio * self.omega_0)

    def with_modes(self, n_modes: int) -> "SystemParams":
        return replace(self, n_modes=n_modes)

    def mode_frequencies(self) -> np.ndarray:
        return self.omega_c * np.arange(1, self.n_modes + 1, dtype=float)


@dataclass(frozen=True)
class BathParams:
    gamma_el: float
    gamma_ph: float
    profile: DampingProfile = DampingProfile.FLAT

    def kappa_el(self, omega_0: float) -> float:
        # Gamma = pi kappa^2, with Gamma converted from omega_0 units
        return float(np.sqrt(self.gamma_el * omega_0 / np.pi))

    def kappa_ph(self, omega_0: float) -> float:
        return float(np.sqrt(self.gamma_ph * omega_0 / np.pi))


def validate(params: SystemParams) -> SystemParams:
    checks = [
        (params.omega_c > 0, "omega_c must be > 0"),
        (params.omega_0 > 0, "omega_0 must be > 0"),
        (params.omega_r >= 0, "omega_r must be >= 0"),
        (0.0 < params.l < 1.0, "l out of (0,1)"),
        (int(params.n_modes) == params.n_modes and params.n_modes >= 1, "n_modes must be an integer >= 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise ParameterError(message)
    return params


def validate_bath(bath: BathParams) -> BathParams:
    if not bath.gamma_el > 0:
        raise ParameterError("gamma_el must be > 0")
    if not bath.gamma_ph > 0:
        raise ParameterError("gamma_ph must be > 0")
    if not isinstance(bath.profile, DampingProfile):
        raise ParameterError(f"unknown damping profile {bath.profile!r}")
    return bath


def is_decoupled(params: SystemParams, n) -> np.ndarray | bool:
    """True where the wall sits on a node of mode ``n`` (``l*n`` integer) or the coupling is off."""
    ln = params.l * np.asarray(n, dtype=float)
    node = np.abs(ln - np.round(ln)) < DECOUPLED_TOL
    result = node | (params.omega_r == 0)
    return bool(result) if np.ndim(result) == 0 else result


def coupling_coefficients(params: SystemParams, n) -> np.ndarray:
    """Omega_n = Omega sin(pi l n) / sqrt(n) with its sign; exactly zero on decoupled modes.

    Unlike :func:`coupling_coefficient`, ``n`` is not limited to the truncation.
    """
    n = np.asarray(n, dtype=float)
    values = params.omega_r * np.sin(np.pi * params.l * n) / np.sqrt(n)
    return np.where(is_decoupled(params, n), 0.0, values)


def coupling_coefficient(params: SystemParams, n: int) -> float:
    if int(n) != n or not 1 <= n <= params.n_modes:
        raise ParameterError(f"mode index {n} out of range 1..{params.n_modes}")
    return float(coupling_coefficients(params, n))


def coupling_vector(params: SystemParams) -> np.ndarray:
    return coupling_coefficients(params, np.arange(1, params.n_modes + 1))


def decoupled_modes(params: SystemParams, n_max: int | None = None) -> np.ndarray:
    """Indices n <= n_max (default: the truncation) whose bare frequency n omega_c is an exact eigenvalue."""
    n = np.arange(1, (params.n_modes if n_max is None else n_max) + 1)
    return n[is_decoupled(params, n)]


CONFIG_KEYS = ("omega_0", "omega_r", "l", "n_modes", "gamma_el", "gamma_ph", "damping_profile")


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a flat key-value config (JSON, or YAML by extension). Unknown keys are rejected."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, Mapping):
        raise ParameterError(f"{path}: config must be a key-value mapping")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ParameterError(f"{path}: unknown config keys {unknown}")
    return dict(data)


def params_from_config(config: Mapping[str, Any], defaults: Mapping[str, Any]) -> tuple[SystemParams, BathParams]:
    merged = {**defaults, **config}
    try:
        params = SystemParams(
            omega_0=float(merged["omega_0"]),
            omega_r=float(merged["omega_r"]),
            l=float(merged["l"]),
            n_modes=int(merged["n_modes"]),
        )
        bath = BathParams(
            gamma_el=float(merged["gamma_el"]),
            gamma_ph=float(merged["gamma_ph"]),
            profile=DampingProfile(str(merged["damping_profile"]).lower()),
        )
    except KeyError as exc:
        raise ParameterError(f"missing config key {exc.args[0]}") from None
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    return validate(params), validate_bath(bath)

"""Coupling of the polariton modes to photonic and electronic baths, scattering and emission.

Each polariton mode mu couples to the photonic bath with kappa_ph^mu and to the electronic
bath with kappa_el^mu. With the Lamb shift dropped, the modes obey

    G(omega) = [ i (omega_mu - omega) delta + pi k_ph k_ph^T + pi k_el k_el^T ]^-1

and the two-port scattering amplitudes are u_ab = delta_ab - 2 pi k_a^T G k_b. The spontaneous
emission rate is the electronic-to-photonic throughput gamma = int |u12|^2 d omega / 2 pi.

Two evaluation routes are provided: an explicit dense inverse of G (one frequency at a time)
and a rank-2 Woodbury form that only needs the 2x2 matrix S = -i sum_mu k k^T / (omega_mu - omega),
since k^T G k = S (1 + pi S)^-1. The second is vectorized over frequency and used for quadrature.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hopfield import PolaritonMode, frequencies, polariton_modes
from .model import BathParams, DampingProfile, SystemParams, validate, validate_bath

COND_LIMIT = 1e12
NODE_CLEARANCE = 1e-9
CHUNK = 4096


class GreenFunctionError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True, eq=False)
class Couplings:
    """Per-mode bath couplings at reference strength, plus what is needed for the envelope."""

    omegas: np.ndarray
    kappa_ph: np.ndarray
    kappa_el: np.ndarray
    omega_0: float
    profile: DampingProfile = DampingProfile.FLAT

    def envelope(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.profile is DampingProfile.SMOOTH_ZERO:
            return np.sqrt(omega / (omega + self.omega_0))
        return np.ones_like(omega)

    def at(self, omega: float) -> tuple[np.ndarray, np.ndarray]:
        s = float(self.envelope(omega))
        return s * self.kappa_ph, s * self.kappa_el


@dataclass(frozen=True)
class ScatteringMatrix:
    omega: float
    u11: complex
    u12: complex
    u21: complex
    u22: complex

    def to_array(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]])

    @property
    def photon_port_norm(self) -> float:
        """|u11|^2 + |u21|^2, reported as a diagnostic only."""
        return abs(self.u11) ** 2 + abs(self.u21) ** 2


def renormalized_couplings(modes: list[PolaritonMode], bath: BathParams, omega_0: float) -> Couplings:
    """kappa_ph^mu = kappa_ph sum_n U_mun / |U_mu|, kappa_el^mu = kappa_el U_mu0 / |U_mu|."""
    validate_bath(bath)
    U = np.array([mode.u for mode in modes])
    norm = np.sqrt(np.sum(U ** 2, axis=1))
    k_ph = bath.kappa_ph(omega_0) * U[:, 1:].sum(axis=1) / norm
    k_el = bath.kappa_el(omega_0) * U[:, 0] / norm
    return Couplings(frequencies(modes), k_ph, k_el, float(omega_0), bath.profile)


def green_function(couplings: Couplings, omega: float) -> np.ndarray:
    if not omega > 0:
        raise ValueError("omega must be > 0")
    k_ph, k_el = couplings.at(omega)
    inv = np.diag(1j * (couplings.omegas - omega)) + np.pi * (np.outer(k_ph, k_ph) + np.outer(k_el, k_el))
    cond = np.linalg.cond(inv)
    if not cond < COND_LIMIT:
        raise GreenFunctionError(f"near-singular Green function at omega={omega:.9g} (condition number {cond:.3e})")
    return np.linalg.inv(inv)


def scattering_matrix(couplings: Couplings, omega: float) -> ScatteringMatrix:
    G = green_function(couplings, omega)
    k_ph, k_el = couplings.at(omega)
    return ScatteringMatrix(
        omega=float(omega),
        u11=complex(1 - 2 * np.pi * k_ph @ G @ k_ph),
        u12=complex(-2 * np.pi * k_ph @ G @ k_el),
        u21=complex(-2 * np.pi * k_el @ G @ k_ph),
        u22=complex(1 - 2 * np.pi * k_el @ G @ k_el),
    )


def scattering_amplitudes(couplings: Couplings, omega) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(u11, u12, u21, u22) on an array of frequencies via the rank-2 reduction.

    Frequencies must avoid the mode frequencies themselves, where S has poles.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    weights = np.stack([couplings.kappa_ph ** 2, couplings.kappa_ph * couplings.kappa_el, couplings.kappa_el ** 2])
    out = np.empty((4, omega.size), dtype=complex)
    for start in range(0, omega.size, CHUNK):
        w = omega[start:start + CHUNK]
        cauchy = 1.0 / (couplings.omegas[:, None] - w[None, :])
        s2 = couplings.envelope(w) ** 2
        a, b, c = (-1j * (weights @ cauchy)) * s2
        det = (1 + np.pi * a) * (1 + np.pi * c) - (np.pi * b) ** 2
        x_pp = (a + np.pi * (a * c - b * b)) / det
        x_pe = b / det
        x_ee = (c + np.pi * (a * c - b * b)) / det
        out[:, start:start + CHUNK] = [1 - 2 * np.pi * x_pp, -2 * np.pi * x_pe, -2 * np.pi * x_pe, 1 - 2 * np.pi * x_ee]
    return out[0], out[1], out[2], out[3]


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite grid: uniform base plus dense windows around each mode, all in units of Gamma_tot."""

    base_step: float = 1 / 20
    window_step: float = 1 / 200
    window_half_width: float = 10.0
    top_margin: float = 40.0
    density: float = 1.0  # multiplies the node density of both grids
    rtol: float = 1e-3


def frequency_grid(omegas: np.ndarray, gamma_tot: float, config: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Quadrature nodes on [0, max omega_mu + top_margin Gamma_tot]; ``gamma_tot`` in absolute units."""
    h_base = gamma_tot * config.base_step / config.density
    h_win = gamma_tot * config.window_step / config.density
    top = float(np.max(omegas)) + config.top_margin * gamma_tot
    base = np.linspace(0.0, top, int(np.ceil(top / h_base)) + 1)
    half = config.window_half_width * gamma_tot
    offsets = np.linspace(-half, half, int(round(2 * half / h_win)) + 1)
    dense = (omegas[:, None] + offsets[None, :]).ravel()
    nodes = np.unique(np.concatenate([base, dense[(dense > 0) & (dense < top)]]))
    # S has poles at the mode frequencies; G itself is smooth there, so dropping such nodes is harmless
    k = np.clip(np.searchsorted(omegas, nodes), 1, len(omegas) - 1) if len(omegas) > 1 else np.zeros(nodes.size, int)
    gap = np.abs(nodes - omegas[k])
    if len(omegas) > 1:
        gap = np.minimum(gap, np.abs(nodes - omegas[k - 1]))
    return nodes[gap > NODE_CLEARANCE * max(1.0, top)]


@dataclass(frozen=True)
class EmissionResult:
    gamma: float  # units of omega_0
    error: float  # estimated absolute quadrature error, units of omega_0
    n_nodes: int
    worst_interval: tuple[float, float]


def emission_rate(couplings: Couplings, gamma_tot: float, config: QuadratureConfig = QuadratureConfig(),
                  check: bool = True) -> EmissionResult:
    """gamma = int |u12|^2 d omega / 2 pi in units of omega_0, with a Richardson error estimate.

    ``gamma_tot`` = Gamma_el + Gamma_ph in absolute frequency units. The estimate compares the
    trapezoid rule on all nodes against every other node; with ``check`` a relative estimate
    above ``config.rtol`` raises :class:`QuadratureError` naming the worst interval.
    """
    if not np.any(couplings.kappa_el != 0):
        raise ValueError("no mode couples to the electronic bath")
    nodes = frequency_grid(couplings.omegas, gamma_tot, config)
    _, u12, _, _ = scattering_amplitudes(couplings, nodes)
    f = np.abs(u12) ** 2 / (2 * np.pi)

    if nodes.size % 2 == 0:  # coarse rule needs both ends
        nodes, f = np.append(nodes, 2 * nodes[-1] - nodes[-2]), np.append(f, 0.0)
    fine_pieces = 0.5 * (f[1:] + f[:-1]) * np.diff(nodes)
    fine = fine_pieces[0::2] + fine_pieces[1::2]
    coarse = 0.5 * (f[2::2] + f[:-2:2]) * (nodes[2::2] - nodes[:-2:2])
    total = float(fine.sum())
    local = np.abs(fine - coarse) / 3
    error = float(abs(total - coarse.sum()) / 3)
    k = int(np.argmax(local))
    worst = (float(nodes[2 * k]), float(nodes[2 * k + 2]))
    omega_0 = couplings.omega_0
    if check and error > config.rtol * abs(total):
        raise QuadratureError(
            f"quadrature not converged: relative error {error / abs(total):.2e} > {config.rtol:g};"
            f" worst interval [{worst[0]:.9g}, {worst[1]:.9g}] omega_c", worst)
    return EmissionResult(total / omega_0, error / omega_0, int(nodes.size), worst)


def purcell_reference(ratio, bath: BathParams):
    """Weak-coupling rate 2 Omega^2 / (Gamma_el + Gamma_ph), in units of omega_0."""
    return 2 * np.asarray(ratio, dtype=float) ** 2 / (bath.gamma_el + bath.gamma_ph)


def plateau_reference(bath: BathParams) -> float:
    """Saturated rate 2 Gamma_el Gamma_ph / (Gamma_el + Gamma_ph), in units of omega_0."""
    return 2 * bath.gamma_el * bath.gamma_ph / (bath.gamma_el + bath.gamma_ph)


@dataclass(frozen=True, eq=False)
class EmissionCurve:
    ratio: np.ndarray
    gamma: np.ndarray
    error: np.ndarray
    purcell: np.ndarray
    plateau: np.ndarray
    failures: tuple[tuple[float, str], ...] = field(default=())

    def rows(self):
        return zip(self.ratio, self.gamma, self.purcell, self.plateau, self.error)


def emission_point(params: SystemParams, bath: BathParams, config: QuadratureConfig = QuadratureConfig(),
                   check: bool = True) -> EmissionResult:
    validate(params)
    validate_bath(bath)
    modes = polariton_modes(params)
    couplings = renormalized_couplings(modes, bath, params.omega_0)
    return emission_rate(couplings, (bath.gamma_el + bath.gamma_ph) * params.omega_0, config, check)


def _sweep_point(args):
    params, bath, config = args
    try:
        return emission_point(params, bath, config), None
    except QuadratureError as exc:
        return emission_point(params, bath, config, check=False), str(exc)


def emission_sweep(params: SystemParams, bath: BathParams, ratios, config: QuadratureConfig = QuadratureConfig(),
                   jobs: int = 1) -> EmissionCurve:
    """gamma over a grid of Omega/omega_0 with the two reference curves.

    Points whose quadrature does not converge are kept, with their messages collected in ``failures``.
    """
    ratios = np.asarray(ratios, dtype=float)
    tasks = [(params.with_ratio(float(r)), bath, config) for r in ratios]
    if jobs == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs if jobs > 0 else os.cpu_count()) as pool:
            results = list(pool.map(_sweep_point, tasks))
    failures = tuple((float(r), msg) for r, (_, msg) in zip(ratios, results) if msg)
    return EmissionCurve(
        ratio=ratios,
        gamma=np.array([res.gamma for res, _ in results]),
        error=np.array([res.error for res, _ in results]),
        purcell=purcell_reference(ratios, bath),
        plateau=np.full(ratios.shape, plateau_reference(bath)),
        failures=failures,
    )

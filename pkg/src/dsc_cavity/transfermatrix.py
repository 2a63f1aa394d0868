"""Classical route: 2x2 transfer matrices between two perfect mirrors with a dipole sheet.

Amplitude vectors are ``(f+, f-)`` for the right- and left-going waves; every matrix maps
amplitudes on its left to amplitudes on its right, so a product reads right to left in the
order the wave meets the elements. Propagation phases are ``omega L / c = pi (omega/omega_c) (L/L_C)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _roots
from .model import SystemParams, validate
from .spectrum import SCAN_STEP, REFINE_STEP, SpectrumAuditError

MIRROR = np.array([1.0, -1.0], dtype=complex)  # E = f+ + f- = 0 on a metallic mirror


@dataclass(frozen=True)
class TwoPortMatrix:
    t11: complex
    t12: complex
    t21: complex
    t22: complex

    @classmethod
    def from_array(cls, a: np.ndarray) -> "TwoPortMatrix":
        return cls(complex(a[0, 0]), complex(a[0, 1]), complex(a[1, 0]), complex(a[1, 1]))

    def to_array(self) -> np.ndarray:
        return np.array([[self.t11, self.t12], [self.t21, self.t22]])

    def __matmul__(self, other: "TwoPortMatrix") -> "TwoPortMatrix":
        return TwoPortMatrix.from_array(self.to_array() @ other.to_array())


def wall_coefficients(params: SystemParams, omega: float) -> tuple[complex, complex]:
    """Reflection and transmission of the dipole sheet; t = 1 + r."""
    if not omega > 0:
        raise ValueError("omega must be > 0")
    p = params
    if p.omega_r ** 2 == 0:
        return 0j, 1 + 0j
    r = 1j * np.pi * p.omega_r ** 2 / ((p.omega_0 / omega) * (p.omega_0 ** 2 - omega ** 2) - 1j * np.pi * p.omega_r ** 2)
    return complex(r), complex(1 + r)


def propagation_matrix(params: SystemParams, omega: float, length: float) -> TwoPortMatrix:
    """Free propagation over ``length`` (units of L_C)."""
    phase = np.pi * omega / params.omega_c * length
    return TwoPortMatrix(np.exp(1j * phase), 0j, 0j, np.exp(-1j * phase))


def wall_matrix(params: SystemParams, omega: float) -> TwoPortMatrix:
    r, t = wall_coefficients(params, omega)
    return TwoPortMatrix((t * t - r * r) / t, r / t, -r / t, 1 / t)


def _scaled_wall(params: SystemParams, omega: float) -> np.ndarray:
    # t * T_W: finite through omega = omega_0 where t vanishes
    r, t = wall_coefficients(params, omega)
    return np.array([[t * t - r * r, r], [-r, 1.0]])


def total_matrix(params: SystemParams, omega: float) -> TwoPortMatrix:
    """Left mirror -> distance l L_C -> wall -> (1-l) L_C -> right mirror."""
    return (propagation_matrix(params, omega, 1 - params.l)
            @ wall_matrix(params, omega)
            @ propagation_matrix(params, omega, params.l))


def boundary_residual(params: SystemParams, omega: float) -> complex:
    """(T21 - T22) - (T12 - T11); zero on a cavity mode."""
    T = total_matrix(params, omega)
    return (T.t21 - T.t22) - (T.t12 - T.t11)


def classical_residual(params: SystemParams, omega) -> np.ndarray:
    """Real, pole-free form of the mirror condition, vectorized over ``omega``.

    The boundary residual equals 2i [sin(pi x) - 2 pi Omega^2 omega sin(pi l x) sin(pi (1-l) x)
    / (omega_0 (omega_0^2 - omega^2))]; its only pole comes from 1/t at omega_0. Multiplying by
    t times the wall denominator (omega_0/omega)(omega_0^2 - omega^2) - i pi Omega^2 leaves
    an entire function, computed here directly from the matrix entries.
    """
    p = params
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty(omega.shape)
    for i, w in enumerate(omega):
        P1 = propagation_matrix(p, w, p.l).to_array()
        P2 = propagation_matrix(p, w, 1 - p.l).to_array()
        T = P2 @ _scaled_wall(p, w) @ P1
        res = (T[1, 0] - T[1, 1]) - (T[0, 1] - T[0, 0])
        denom = (p.omega_0 / w) * (p.omega_0 ** 2 - w ** 2) - 1j * np.pi * p.omega_r ** 2
        out[i] = (denom * res).imag / 2
    return out


def _classical_residual_fast(params: SystemParams, omega: np.ndarray) -> np.ndarray:
    # same quantity as classical_residual with the 2x2 products expanded, for scanning
    p = params
    th1 = np.pi * omega / p.omega_c * p.l
    th2 = np.pi * omega / p.omega_c * (1 - p.l)
    denom = (p.omega_0 / omega) * (p.omega_0 ** 2 - omega ** 2) - 1j * np.pi * p.omega_r ** 2
    r = 1j * np.pi * p.omega_r ** 2  # denom * r
    e1, e2 = np.exp(1j * th1), np.exp(1j * th2)
    # entries of denom * t * T; t^2 - r^2 = 1 + 2r
    T11 = e2 * (denom + 2 * r) * e1
    T12 = e2 * r / e1
    T21 = -r * e1 / e2
    T22 = denom / (e1 * e2)
    return ((T21 - T22) - (T12 - T11)).imag / 2


def _brackets(func, xs: np.ndarray, vals: np.ndarray, exact: list, lo: list, hi: list) -> None:
    exact.extend(xs[vals == 0])
    for k in _roots.sign_changes(vals):
        lo.append(xs[k])
        hi.append(xs[k + 1])


def classical_spectrum(params: SystemParams, omega_max: float, step: float = SCAN_STEP,
                       refine_step: float = REFINE_STEP, rtol: float = 1e-12) -> np.ndarray:
    """Cavity modes in (0, omega_max] from the mirror condition, by scan and bisection.

    Dips of |residual| without a sign change (two roots closer than ``step``) are rescanned at
    ``refine_step``; a dip that stays unresolved and touches zero within rounding is reported.
    Without coupling the residual factors into (omega_0/omega)(omega_0^2 - omega^2) sin(pi x);
    the matter root omega_0 is then added directly, since it may coincide with a cavity root.
    """
    validate(params)
    if not omega_max > 0:
        raise ValueError("omega_max must be > 0")
    wc = params.omega_c
    bare = params.omega_r ** 2 == 0

    def g(w):
        if bare:
            return np.sin(np.pi * w / wc)
        return _classical_residual_fast(params, w)

    # scan a little past omega_max so a root sitting on the bound is bracketed from both sides
    top = omega_max + 2 * step * wc
    xs = _roots.grid(step * wc, top, step * wc)
    vals = g(xs)
    exact: list[float] = []
    lo: list[float] = []
    hi: list[float] = []
    _brackets(g, xs, vals, exact, lo, hi)
    scale = np.max(np.abs(vals))
    # Close pairs form where the sub-cavity resonances n/l and m/(1-l) meet, which happens only
    # at integer x (a wall-node mode of the full cavity); those cells are rescanned as well.
    windows = [(a, b, refine_step) for a, b in _roots.hidden_pair_windows(xs, vals)]
    for n in range(1, int(np.floor(omega_max / wc)) + 1):
        windows.append(((n - 2 * step) * wc, (n + 2 * step) * wc, refine_step / 100))
    for a, b, h in windows:
        fine = _roots.grid(a, b, h * wc)
        fv = g(fine)
        before = len(lo) + len(exact)
        _brackets(g, fine, fv, exact, lo, hi)
        k = int(np.argmin(np.abs(fv)))
        if len(lo) + len(exact) == before and 0 < k < fv.size - 1 and abs(fv[k]) < 1e-12 * scale:
            raise SpectrumAuditError((a, b), 0, "0 or 2 (grazing root)")
    roots = list(exact)
    if lo:
        lo_arr, hi_arr = np.array(lo), np.array(hi)
        found, _, _ = _roots.bisect(g, lo_arr, hi_arr, np.sign(g(lo_arr)), rtol=rtol)
        roots.extend(found)
    roots = np.sort(np.array(roots, dtype=float))
    roots = roots[roots <= omega_max]
    if roots.size:
        # a zero on a fine-grid node can also be reached by bisection from a coarse bracket
        roots = roots[np.concatenate([[True], np.diff(roots) > 1e-11 * roots[1:]])]
    if bare and params.omega_0 <= omega_max:
        roots = np.sort(np.append(roots, params.omega_0))
    return roots


def field_transfer(params: SystemParams, omega: float, z: float) -> np.ndarray:
    """Transfer from the left mirror to position ``z`` (units of L_C), up to an overall factor.

    The wall enters as t * T_W so that the map stays finite where t vanishes.
    """
    P1 = propagation_matrix(params, omega, min(z, params.l)).to_array()
    if z <= params.l:
        return wall_coefficients(params, omega)[1] * P1
    return propagation_matrix(params, omega, z - params.l).to_array() @ _scaled_wall(params, omega) @ P1


def classical_field_profile(params: SystemParams, omega: float, z_grid) -> np.ndarray:
    """E(z) = f+ + f- obtained by propagating the left-mirror condition (1, -1).

    Only the shape is meaningful; modes carry no relative normalization.
    """
    z = np.atleast_1d(np.asarray(z_grid, dtype=float))
    if np.any(z < 0) or np.any(z > 1):
        raise ValueError("z_grid must lie in [0, 1] (units of L_C)")
    out = np.empty(z.shape, dtype=complex)
    for i, zi in enumerate(z):
        f = field_transfer(params, omega, float(zi)) @ MIRROR
        out[i] = f[0] + f[1]
    return out

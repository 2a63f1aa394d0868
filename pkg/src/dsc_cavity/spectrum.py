"""Polariton eigenfrequencies from the closed-form dispersion relation.

With x = omega/omega_c the relation reads

    omega_0^2 - omega^2 = omega^2 f(omega),
    f(omega) = 2 pi Omega^2 / (omega_0 omega) * sin(pi l x) sin(pi (1-l) x) / sin(pi x).

``f`` is the resummed form of the mode sum ``sum_n 4 Omega_n^2 / (omega_0 omega_n (1 - omega^2/omega_n^2))``.
Every term of that sum is increasing in omega between its poles, so ``D = omega_0^2 - omega^2 (1 + f)``
is strictly decreasing on each inter-pole interval: +inf just right of a pole, -inf just left of the
next. Each interval therefore holds exactly one root, which the solver brackets and bisects.
Modes with a node on the wall (``l n`` integer) turn their pole into a removable point; their bare
frequency is inserted exactly instead of searched for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _roots
from .model import SystemParams, coupling_coefficients, is_decoupled, validate

POLE_WINDOW = 1e-6
SCAN_STEP = 1e-3
REFINE_STEP = 1e-4


class PoleError(ValueError):
    def __init__(self, n: int, omega: float):
        super().__init__(f"omega={omega!r} lies within {POLE_WINDOW:g} omega_c of the pole at n={n}")
        self.n = n
        self.omega = omega


class SpectrumAuditError(RuntimeError):
    """The sign-change count in an interval disagrees with the expected root count."""

    def __init__(self, interval: tuple[float, float], found: int, expected: str):
        super().__init__(
            f"interval ({interval[0]:.9g}, {interval[1]:.9g}) omega_c: {found} sign changes, expected {expected}"
            " (suspected double or grazing root)"
        )
        self.interval = interval
        self.found = found


@dataclass(frozen=True)
class Root:
    omega: float
    residual: float
    bracket: tuple[float, float]
    flag: str  # "lowest" | "regular" | "decoupled"


@dataclass(frozen=True)
class IntervalAudit:
    lo: float
    hi: float
    sign_changes: int
    refined: bool


@dataclass(frozen=True)
class SpectrumResult:
    roots: tuple[Root, ...]
    omega_max: float
    audit: tuple[IntervalAudit, ...] = field(default=(), repr=False)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([r.omega for r in self.roots])

    @property
    def flags(self) -> list[str]:
        return [r.flag for r in self.roots]

    def __len__(self) -> int:
        return len(self.roots)


def _ratio(params: SystemParams, x: np.ndarray, check_poles: bool) -> np.ndarray:
    """sin(pi l x) sin(pi (1-l) x) / sin(pi x), continuous through removable points."""
    l = params.l
    n = np.round(x)
    eps = x - n
    near = (np.abs(eps) < POLE_WINDOW) & (n >= 1)
    removable = near & is_decoupled(params, np.maximum(n, 1))
    if check_poles and np.any(near & ~removable):
        k = int(np.argmax(near & ~removable))
        raise PoleError(int(n.flat[k]), float(x.flat[k] * params.omega_c))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(np.pi * l * x) * np.sin(np.pi * (1 - l) * x) / np.sin(np.pi * x)
        # l n = k integer: the (-1)^k, (-1)^(n-k) and (-1)^n signs cancel
        local = np.where(eps == 0, 0.0,
                         np.sin(np.pi * l * eps) * np.sin(np.pi * (1 - l) * eps) / np.sin(np.pi * eps))
    return np.where(removable, local, direct)


def coupling_function(params: SystemParams, omega, check_poles: bool = True):
    """Closed-form f(omega). Raises :class:`PoleError` inside the window of a genuine pole."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("coupling_function requires omega > 0")
    x = omega / params.omega_c
    pref = 2 * np.pi * params.omega_r ** 2 / (params.omega_0 * omega)
    out = pref * _ratio(params, x, check_poles)
    return float(out) if out.ndim == 0 else out


def coupling_function_sum(params: SystemParams, omega, n_terms: int, chunk: int = 200_000):
    """f(omega) as the explicit mode sum truncated after ``n_terms`` modes."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    total = np.zeros_like(omega)
    for start in range(1, n_terms + 1, chunk):
        n = np.arange(start, min(start + chunk, n_terms + 1), dtype=float)
        omega_n = n * params.omega_c
        weight = 4 * coupling_coefficients(params, n) ** 2 / (params.omega_0 * omega_n)
        total += (weight[None, :] / (1 - (omega[:, None] / omega_n[None, :]) ** 2)).sum(axis=1)
    return total if total.size > 1 else float(total[0])


def dispersion_residual(params: SystemParams, omega, check_poles: bool = True):
    omega = np.asarray(omega, dtype=float)
    out = params.omega_0 ** 2 - omega ** 2 - omega ** 2 * coupling_function(params, omega, check_poles)
    return float(out) if np.ndim(out) == 0 else out


def _poles(params: SystemParams, x_max: float) -> list[int]:
    n = np.arange(1, int(np.floor(x_max + 1e-12)) + 1)
    return [int(k) for k in n[~np.asarray(is_decoupled(params, n), dtype=bool)]]


def solve_spectrum(params: SystemParams, omega_max: float, step: float = SCAN_STEP,
                   refine_step: float = REFINE_STEP, rtol: float = 1e-12) -> SpectrumResult:
    """All eigenfrequencies in (0, omega_max], sorted, with residuals and flags."""
    validate(params)
    if not omega_max > 0:
        raise ValueError("omega_max must be > 0")
    wc = params.omega_c
    x_max = omega_max / wc

    def D(x):
        return dispersion_residual(params, x * wc, check_poles=False)

    poles = _poles(params, x_max)
    edges = [0.0] + [float(p) for p in poles]
    if x_max > edges[-1] + POLE_WINDOW:
        edges.append(x_max)
    audit: list[IntervalAudit] = []
    brackets: list[tuple[float, float, float, int]] = []  # (lo, hi, sign at lo, interval)

    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        b_is_pole = i < len(poles)
        lo, hi = a + POLE_WINDOW, (b - POLE_WINDOW if b_is_pole else b)
        refined = False
        xs = _roots.grid(lo, hi, step)
        vals = D(xs)
        idx = _roots.sign_changes(np.where(vals >= 0, 1.0, -1.0))
        if (b_is_pole and len(idx) != 1) or len(idx) > 1:
            refined = True
            xs = _roots.grid(lo, hi, refine_step)
            vals = D(xs)
            idx = _roots.sign_changes(np.where(vals >= 0, 1.0, -1.0))
        audit.append(IntervalAudit(a * wc, b * wc, len(idx), refined))
        if len(idx) > 1:
            raise SpectrumAuditError((a * wc, b * wc), len(idx), "1" if b_is_pole else "0 or 1")
        if len(idx) == 1:
            k = idx[0]
            brackets.append((xs[k], xs[k + 1], 1.0, i))
        elif i > 0 and np.all(vals < 0):
            # root hugs a pole inside its exclusion window: D -> +inf on the right of a pole
            # and -inf on the left of the next, so the window itself is a valid bracket
            brackets.append((a, lo, 1.0, i))
        elif b_is_pole:
            if np.all(vals >= 0):
                brackets.append((hi, b, 1.0, i))
            else:
                raise SpectrumAuditError((a * wc, b * wc), 0, "1")

    roots: list[Root] = []
    if brackets:
        lo_arr, hi_arr, s_arr, which = (np.array(c) for c in zip(*brackets))
        x_root, _, _ = _roots.bisect(D, lo_arr, hi_arr, s_arr, rtol=rtol)
        for j, x in enumerate(x_root):
            flag = "lowest" if which[j] == 0 else "regular"
            roots.append(Root(float(x * wc), abs(float(D(np.array([x]))[0])),
                              (float(lo_arr[j] * wc), float(hi_arr[j] * wc)), flag))

    n_all = np.arange(1, int(np.floor(x_max + 1e-12)) + 1)
    for n in n_all[np.asarray(is_decoupled(params, n_all), dtype=bool)]:
        w = float(n * wc)
        roots.append(Root(w, abs(params.omega_0 ** 2 - w ** 2), (w, w), "decoupled"))

    roots.sort(key=lambda r: (r.omega, r.flag == "decoupled"))
    return SpectrumResult(tuple(roots), float(omega_max), tuple(audit))


def lowest_asymptote(params: SystemParams) -> float:
    """omega_0 / sqrt(1 + 2 pi^2 Omega^2 l (1-l) / (omega_0 omega_c)), i.e. omega_0 / sqrt(1 + f(0))."""
    p = params
    return p.omega_0 / np.sqrt(1 + 2 * np.pi ** 2 * p.omega_r ** 2 * p.l * (1 - p.l) / (p.omega_0 * p.omega_c))


def asymptotic_spectrum(params: SystemParams, n_max: int) -> list[float]:
    """Deep-strong-coupling limit: the soft matter mode plus the modes of the two sub-cavities."""
    n = np.arange(1, n_max + 1)
    values = np.concatenate([[lowest_asymptote(params)],
                             n * params.omega_c / params.l,
                             n * params.omega_c / (1 - params.l)])
    values = np.sort(values)
    keep = np.concatenate([[True], ~np.isclose(values[1:], values[:-1], rtol=1e-12, atol=0)])
    return [float(v) for v in values[keep]]

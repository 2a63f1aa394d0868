"""Hopfield-Bogoliubov diagonalization of the truncated light-matter Hamiltonian.

Basis order is ``[b, a_1..a_N, b^dag, a_1^dag..a_N^dag]``. The dynamical matrix ``M`` satisfies
``[v, H] = M v``; a polariton ``p = w . v`` obeys ``[p, H] = omega p`` iff ``M^T w = omega w``, and
``[p_mu, p_nu^dag] = w_mu^T eta w_nu``.

Truncating the photon sum at N leaves out a contribution ~ 2 Omega^2 / (omega_0 N) to f(omega),
which shifts eigenvalues by ~1e-3 at N = 400 in deep strong coupling. With
``tail_correction=True`` the modes above N are eliminated adiabatically: their static
response ``tau = sum_{n>N} 4 Omega_n^2 / (omega_0 omega_n)`` renormalizes the matter
oscillator to ``omega_0' = omega_0 / sqrt(1 + tau)`` and ``Omega' = Omega (1 + tau)^(-3/4)``,
which reproduces ``omega_0^2 - omega^2 (1 + tau + f_N) = 0`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemParams, coupling_vector, validate

IMAG_TOL = 1e-8
DEGENERACY_RTOL = 1e-9


class HopfieldError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HopfieldMatrix:
    m: np.ndarray
    eta: np.ndarray
    params: SystemParams
    omega_0_eff: float
    couplings: np.ndarray  # Omega_n actually used (after any tail renormalization)
    tail: float  # tau; 0 when the correction is off

    @property
    def n_modes(self) -> int:
        return self.m.shape[0] // 2 - 1


@dataclass(frozen=True, eq=False)
class PolaritonMode:
    omega: float
    u: np.ndarray  # (U_0, U_1..U_N)
    v: np.ndarray  # (V_0, V_1..V_N)
    decoupled: bool = False

    @property
    def eta_norm(self) -> float:
        return float(self.u @ self.u - self.v @ self.v)


def tail_sum(params: SystemParams) -> float:
    """Static weight of the photon modes above the truncation, from sum_n sin^2(pi l n)/n^2 = pi^2 l (1-l) / 2."""
    p = params
    n = np.arange(1, p.n_modes + 1)
    # Omega_n^2 / n = Omega^2 sin^2(pi l n) / n^2
    head = np.sum(coupling_vector(p) ** 2 / n) / p.omega_r ** 2 if p.omega_r > 0 else 0.0
    rest = max(np.pi ** 2 * p.l * (1 - p.l) / 2 - head, 0.0)
    return 4 * p.omega_r ** 2 / (p.omega_0 * p.omega_c) * rest


def build_hb_matrix(params: SystemParams, tail_correction: bool = True) -> HopfieldMatrix:
    validate(params)
    tau = tail_sum(params) if tail_correction else 0.0
    w0 = params.omega_0 / np.sqrt(1 + tau)
    g = coupling_vector(params) * (1 + tau) ** -0.75
    n = params.n_modes
    size = n + 1

    diag = np.concatenate([[w0], params.mode_frequencies()])
    c = np.concatenate([[0.0], g])
    # A^2 term of sum_{n,m} Omega_n Omega_m / omega_0 (a_n + a_n^dag)(a_m + a_m^dag)
    pair = 2 * np.outer(c, c) / w0
    pair[0, 1:] = g
    pair[1:, 0] = g
    A = np.diag(diag) + pair
    B = pair.copy()
    m = np.block([[A, B], [-B, -A]])
    eta = np.concatenate([np.ones(size), -np.ones(size)])
    return HopfieldMatrix(m=m, eta=eta, params=params, omega_0_eff=float(w0), couplings=g, tail=float(tau))


def _coupled_indices(matrix: HopfieldMatrix) -> tuple[np.ndarray, np.ndarray]:
    photon = np.arange(1, matrix.n_modes + 1)
    live = matrix.couplings != 0
    return np.concatenate([[0], photon[live]]), photon[~live]


def _eta_gram_schmidt(ws: list[np.ndarray], eta: np.ndarray) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for w in ws:
        for q in out:
            w = w - (q @ (eta * w)) * q
        norm = w @ (eta * w)
        if norm <= 0:
            raise HopfieldError("degenerate eigenspace is not eta-positive")
        out.append(w / np.sqrt(norm))
    return out


def _solve_eig(sub: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    ev, vecs = np.linalg.eig(sub.T)
    worst = np.max(np.abs(ev.imag)) if ev.size else 0.0
    if worst > IMAG_TOL:
        raise HopfieldError(f"eigenvalue with imaginary part {worst:.3e} omega_c (unstable parameters)")
    ev = ev.real
    vecs = vecs.real
    eta = np.concatenate([np.ones(k), -np.ones(k)])
    norms = np.einsum("ij,i,ij->j", vecs, eta, vecs)
    pick = ev > 0
    if pick.sum() != k or np.any(norms[pick] <= 0):
        raise HopfieldError("positive-frequency eigenvectors do not all have positive eta-norm")
    ev, vecs, norms = ev[pick], vecs[:, pick], norms[pick]
    order = np.argsort(ev)
    ev, vecs = ev[order], vecs[:, order] / np.sqrt(norms[order])

    # eta-orthogonalize inside clusters of coinciding frequencies
    start = 0
    for i in range(1, k + 1):
        if i == k or ev[i] - ev[i - 1] > DEGENERACY_RTOL * max(1.0, ev[i]):
            if i - start > 1:
                block = _eta_gram_schmidt([vecs[:, j] for j in range(start, i)], eta)
                vecs[:, start:i] = np.column_stack(block)
            start = i
    return ev, vecs


def _solve_quadrature(sub: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    A, B = sub[:k, :k], sub[:k, k:]
    d = np.diag(A - B)
    if not np.allclose(A - B, np.diag(d), rtol=0, atol=1e-12) or np.any(d <= 0):
        raise HopfieldError("quadrature route needs a positive diagonal momentum block")
    sq = np.sqrt(d)
    lam = sq[:, None] * (A + B) * sq[None, :]
    w2, O = np.linalg.eigh(lam)
    if w2[0] <= 0:
        raise HopfieldError(f"non-positive squared frequency {w2[0]:.3e} (unstable parameters)")
    w = np.sqrt(w2)
    r = np.sqrt(w[None, :] / d[:, None])
    U = 0.5 * O * (r + 1 / r)
    V = 0.5 * O * (r - 1 / r)
    return w, np.vstack([U, V])


def diagonalize(matrix: HopfieldMatrix, method: str = "eig") -> list[PolaritonMode]:
    """Positive-frequency, eta-normalized polariton modes sorted by frequency.

    ``method="eig"`` diagonalizes the non-symmetric ``M`` with a general dense solver.
    ``method="quadrature"`` uses the symmetric position-quadrature form (the momentum block
    ``A - B`` is diagonal here) and serves as an independent check.
    """
    size = matrix.n_modes + 1
    coupled, free = _coupled_indices(matrix)
    k = len(coupled)
    idx = np.concatenate([coupled, coupled + size])
    sub = matrix.m[np.ix_(idx, idx)]
    if method == "eig":
        ev, vecs = _solve_eig(sub, k)
    elif method == "quadrature":
        ev, vecs = _solve_quadrature(sub, k)
    else:
        raise ValueError(f"unknown method {method!r}")

    modes: list[PolaritonMode] = []
    for j in range(k):
        u = np.zeros(size)
        v = np.zeros(size)
        u[coupled] = vecs[:k, j]
        v[coupled] = vecs[k:, j]
        # phase: largest-magnitude U entry positive
        if u[np.argmax(np.abs(u))] < 0:
            u, v = -u, -v
        modes.append(PolaritonMode(float(ev[j]), u, v))
    wc = matrix.params.omega_c
    for n in free:
        u = np.zeros(size)
        u[n] = 1.0
        modes.append(PolaritonMode(float(n * wc), u, np.zeros(size), decoupled=True))
    modes.sort(key=lambda mode: mode.omega)
    return modes


def polariton_modes(params: SystemParams, tail_correction: bool = True, method: str = "eig") -> list[PolaritonMode]:
    return diagonalize(build_hb_matrix(params, tail_correction), method)


def frequencies(modes: list[PolaritonMode]) -> np.ndarray:
    return np.array([mode.omega for mode in modes])


def transformation_matrix(modes: list[PolaritonMode]) -> np.ndarray:
    """Rows map ``v`` to ``(p_1..p_K, p_1^dag..p_K^dag)``."""
    U = np.array([mode.u for mode in modes])
    V = np.array([mode.v for mode in modes])
    return np.block([[U, V], [V, U]])


def eta_products(modes: list[PolaritonMode]) -> np.ndarray:
    """Matrix of ``[p_mu, p_nu^dag]`` = U_mu.U_nu - V_mu.V_nu."""
    U = np.array([mode.u for mode in modes])
    V = np.array([mode.v for mode in modes])
    return U @ U.T - V @ V.T


def matter_fraction(mode: PolaritonMode) -> float:
    matter = mode.u[0] ** 2 + mode.v[0] ** 2
    return float(matter / (matter + np.sum(mode.u[1:] ** 2 + mode.v[1:] ** 2)))


def field_amplitude(mode: PolaritonMode, z) -> np.ndarray:
    """sum_n sqrt(n) sin(n pi z / L_C) (U_n + V_n), with ``z`` in units of L_C."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = np.arange(1, len(mode.u))
    weights = np.sqrt(n) * (mode.u[1:] + mode.v[1:])
    return np.sin(np.pi * np.outer(z, n)) @ weights


def field_profile(modes: list[PolaritonMode], mu: int, z_grid) -> tuple[np.ndarray, np.ndarray]:
    """Normally ordered photodetection signal |E_mu(z)|^2 (arbitrary units) and its max-normalized copy."""
    z = np.asarray(z_grid, dtype=float)
    if np.any(z < 0) or np.any(z > 1):
        raise ValueError("z_grid must lie in [0, 1] (units of L_C)")
    intensity = field_amplitude(modes[mu], z) ** 2
    peak = intensity.max()
    return intensity, (intensity / peak if peak > 0 else intensity)

"""Sign-change scanning and bracketed bisection shared by the two spectrum solvers."""

from __future__ import annotations

from typing import Callable

import numpy as np

Func = Callable[[np.ndarray], np.ndarray]


def bisect(func: Func, lo, hi, sign_lo, rtol: float = 1e-12, max_iter: int = 200):
    """Vectorized bisection on brackets ``[lo, hi]``.

    ``sign_lo`` is the sign of ``func`` at the left end; it is supplied rather than
    evaluated so that an end sitting on a pole never has to be touched. Only interior
    midpoints are evaluated. Iterates until the brackets are narrower than ``rtol``
    relative, and then on to machine precision (midpoint equal to an end).
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    sign_lo = np.broadcast_to(np.asarray(sign_lo, dtype=float), lo.shape).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        f_mid = func(mid)
        go_right = (np.sign(f_mid) == sign_lo) & active
        go_left = ~go_right & active
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_left, mid, hi)
    unconverged = (hi - lo) > rtol * np.abs(hi)
    if unconverged.any():
        raise RuntimeError(f"bisection did not reach rtol={rtol} on {int(unconverged.sum())} bracket(s)")
    return 0.5 * (lo + hi), lo, hi


def sign_changes(values: np.ndarray) -> np.ndarray:
    """Indices ``k`` with a sign change between samples ``k`` and ``k+1``."""
    s = np.sign(values)
    return np.nonzero(s[:-1] * s[1:] < 0)[0]


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = max(int(np.ceil((hi - lo) / step)), 1) + 1
    return np.linspace(lo, hi, count)


def hidden_pair_windows(x: np.ndarray, values: np.ndarray) -> list[tuple[float, float]]:
    """Windows around interior local minima of ``|values|`` with no sign change.

    Two roots closer than the scan step leave such a dip; the caller rescans these finer.
    """
    a = np.abs(values)
    s = np.sign(values)
    k = np.nonzero((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:]) & (s[:-2] == s[1:-1]) & (s[1:-1] == s[2:]))[0] + 1
    return [(float(x[i - 1]), float(x[i + 1])) for i in k]

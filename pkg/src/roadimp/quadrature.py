"""Adaptive composite Simpson rule for scalar or vector integrands."""

from __future__ import annotations

from typing import Callable

import numpy as np


def adaptive_simpson(
    f: Callable[[float], np.ndarray | float],
    a: float,
    b: float,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    max_depth: int = 50,
    min_depth: int = 4,
) -> np.ndarray | float:
    """Integrate ``f`` over ``[a, b]``.

    Panels are bisected until the Richardson error estimate of every output
    coordinate is below ``max(atol, rtol * |whole-interval estimate|)``.
    """
    if b < a:
        return -adaptive_simpson(f, b, a, rtol, atol, max_depth, min_depth)
    if b == a:
        return np.zeros_like(np.asarray(f(a), dtype=float))

    fa = np.asarray(f(a), dtype=float)
    fb = np.asarray(f(b), dtype=float)
    m = 0.5 * (a + b)
    fm = np.asarray(f(m), dtype=float)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = max(atol, rtol * float(np.max(np.abs(whole)))) if whole.size else atol

    total = np.zeros_like(whole)
    # explicit stack; each entry is one panel awaiting refinement
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = np.asarray(f(lm), dtype=float)
        frm = np.asarray(f(rm), dtype=float)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        err = left + right - est
        if depth >= max_depth or (depth >= min_depth and np.all(np.abs(err) <= 15.0 * eps)):
            total = total + left + right + err / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
    return total if total.ndim else float(total)

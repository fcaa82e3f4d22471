"""Derivative-free helpers: Nelder-Mead simplex and scalar bisection."""
from __future__ import annotations

from typing import Callable

import numpy as np


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    scale: float = 0.25,
    max_iter: int = 200,
    ftol: float = 1e-10,
) -> tuple[np.ndarray, float]:
    """Minimize f from x0; returns (best point, best value).

    Standard reflection/expansion/contraction/shrink coefficients.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    simplex = [x0]
    for i in range(n):
        pt = x0.copy()
        pt[i] += scale
        simplex.append(pt)
    values = [f(p) for p in simplex]

    for _ in range(max_iter):
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if abs(values[-1] - values[0]) <= ftol * (abs(values[0]) + ftol):
            break
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + (centroid - worst)
        fr = f(reflected)
        if fr < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            fe = f(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            fc = f(contracted)
            if fc < values[-1]:
                simplex[-1], values[-1] = contracted, fc
            else:
                best = simplex[0]
                simplex = [best] + [best + 0.5 * (p - best) for p in simplex[1:]]
                values = [values[0]] + [f(p) for p in simplex[1:]]
    i = int(np.argmin(values))
    return simplex[i], values[i]


def bisect_root(
    f: Callable[[float], float], lo: float, hi: float, iters: int = 80
) -> float:
    """Root of a scalar function with f(lo), f(hi) of opposite sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("bisection endpoints do not bracket a root")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def bisect_largest_passing(
    predicate: Callable[[float], bool], lo: float, hi: float, iters: int = 40
) -> float | None:
    """Largest x in [lo, hi] with predicate(x) true, assuming monotone predicate.

    Returns None when even `lo` fails.
    """
    if predicate(hi):
        return hi
    if not predicate(lo):
        return None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo

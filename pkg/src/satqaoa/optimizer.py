"""Nelder-Mead with random restarts for the QAOA angle search.

The simplex code runs many independent starts side by side ("lanes") so an
objective that accepts a ``(B, n)`` batch is evaluated once per step for all
lanes. Each lane follows exactly the path it would follow on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constellation import mix_seed

__all__ = ["OptimizationRun", "nelder_mead", "minimize_local", "multi_start", "random_starts"]

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5

DEFAULT_EVALS = 200
DEFAULT_TOL = 1e-6
DEFAULT_STEP = 0.1
# lanes per batched call; bounds peak memory for large restart budgets
CHUNK = 4096


@dataclass
class OptimizationRun:
    best_params: np.ndarray
    best_value: float
    evaluations: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    run_values: np.ndarray | None = None
    run_params: np.ndarray | None = None

    def best_after(self, runs: int) -> float:
        """Best-so-far value after the first ``runs`` restarts."""
        return self.trace[min(runs, len(self.trace)) - 1][1]


def _batched(fun: Callable) -> Callable[[np.ndarray], np.ndarray]:
    if getattr(fun, "vectorized", False):
        return lambda x: np.asarray(fun(x), dtype=float).reshape(x.shape[0])
    return lambda x: np.array([float(fun(row)) for row in x])


def nelder_mead(fun: Callable, starts: np.ndarray, max_evals: int = DEFAULT_EVALS, tol: float = DEFAULT_TOL,
                step: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimize ``fun`` from every row of ``starts``.

    The initial simplex is the start plus ``step`` along each axis. A lane
    stops once the largest vertex distance (max-norm) from its best vertex
    drops below ``tol`` or it has used ``max_evals`` evaluations; the check is
    made before each iteration, so a lane may overrun the budget by at most
    one iteration. Returns ``(best_x, best_f, n_evals)`` per lane.
    """
    x0 = np.atleast_2d(np.asarray(starts, dtype=float))
    lanes, n = x0.shape
    if max_evals < n + 2:
        raise ValueError(f"max_evals must be >= {n + 2}")
    f = _batched(fun)

    sim = np.repeat(x0[:, None, :], n + 1, axis=1)
    sim[:, np.arange(1, n + 1), np.arange(n)] += step
    fs = f(sim.reshape(-1, n)).reshape(lanes, n + 1)
    nfev = np.full(lanes, n + 1)

    while True:
        order = np.argsort(fs, axis=1, kind="stable")
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        diam = np.max(np.abs(sim[:, 1:, :] - sim[:, :1, :]), axis=(1, 2))
        active = np.nonzero((nfev < max_evals) & (diam >= tol))[0]
        if active.size == 0:
            break
        s, fa = sim[active], fs[active]
        best, worst = fa[:, 0], fa[:, -1]
        second = fa[:, -2]
        xw = s[:, -1, :]
        c = s[:, :-1, :].mean(axis=1)
        xr = c + REFLECT * (c - xw)
        fr = f(xr)
        nfev[active] += 1

        expand = fr < best
        accept_r = (fr >= best) & (fr < second)
        outside = (fr >= second) & (fr < worst)
        inside = fr >= worst

        x2 = np.where(expand[:, None], c + EXPAND * (xr - c),
                      np.where(outside[:, None], c + CONTRACT * (xr - c), c - CONTRACT * (c - xw)))
        need2 = ~accept_r
        f2 = np.full(active.size, np.inf)
        if need2.any():
            f2[need2] = f(x2[need2])
            nfev[active[need2]] += 1

        new_x = xr.copy()
        new_f = fr.copy()
        take2 = (expand & (f2 < fr)) | (outside & (f2 <= fr)) | (inside & (f2 < worst))
        new_x[take2] = x2[take2]
        new_f[take2] = f2[take2]
        shrink = (outside & ~(f2 <= fr)) | (inside & ~(f2 < worst))
        replace = ~shrink
        s[replace, -1, :] = new_x[replace]
        fa[replace, -1] = new_f[replace]

        if shrink.any():
            ss = s[shrink]
            ss[:, 1:, :] = ss[:, :1, :] + SHRINK * (ss[:, 1:, :] - ss[:, :1, :])
            fa_s = fa[shrink]
            fa_s[:, 1:] = f(ss[:, 1:, :].reshape(-1, n)).reshape(-1, n)
            s[shrink] = ss
            fa[shrink] = fa_s
            nfev[active[shrink]] += n

        sim[active] = s
        fs[active] = fa

    return sim[:, 0, :].copy(), fs[:, 0].copy(), nfev


def minimize_local(objective: Callable, start, max_evals: int = DEFAULT_EVALS,
                   tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    x, fx, _ = nelder_mead(objective, np.asarray(start, dtype=float)[None, :], max_evals, tol)
    return x[0], float(fx[0])


def random_starts(p: int, runs: int, seed: int, low: float = 0.0, high: float = math.pi) -> np.ndarray:
    """Start ``r`` is drawn from its own sub-seed ``mix_seed(seed, r)``."""
    return np.array([np.random.default_rng(mix_seed(seed, r)).uniform(low, high, 2 * p) for r in range(runs)])


def multi_start(objective: Callable, p: int, runs: int, evals_per_run: int = DEFAULT_EVALS, seed: int = 0,
                tol: float = DEFAULT_TOL) -> OptimizationRun:
    """Independent Nelder-Mead runs from uniform starts in ``[0, pi]^(2p)``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    starts = random_starts(p, runs, seed)
    xs, fs, ns = [], [], []
    for lo in range(0, runs, CHUNK):
        x, fx, nf = nelder_mead(objective, starts[lo:lo + CHUNK], evals_per_run, tol)
        xs.append(x)
        fs.append(fx)
        ns.append(nf)
    x = np.concatenate(xs)
    fx = np.concatenate(fs)
    nf = np.concatenate(ns)
    best_so_far = np.minimum.accumulate(fx)
    trace = [(r + 1, float(v)) for r, v in enumerate(best_so_far)]
    i = int(np.argmin(fx))
    return OptimizationRun(x[i].copy(), float(fx[i]), int(nf.sum()), trace, fx, x)

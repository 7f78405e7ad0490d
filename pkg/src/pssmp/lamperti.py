"""The Lamperti transform and its companions.

A positive self-similar Markov process started from x > 0 is
``X_t = x * exp(xi_{tau(t/x)})`` where tau inverts the exponential
functional ``I_s = int_0^s exp(xi_u) du`` (self-similarity index fixed
to 1).  This module implements the transform in both directions on grid
paths, the construction of the process started from 0 by concatenating
blocks between decreasing levels, and the Monte Carlo entrance-law
estimator built on the exponential functional of the dual process.

Quadrature convention: left-endpoint Riemann sums, consistent with
cadlag evaluation; the error is O(step) times the local integrand scale.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from . import engine
from .errors import DomainError, HorizonError, ModelError
from .levy import LevyModel, sample_increments
from .paths import PssmpPath, SamplePath
from .rng import stream

__all__ = [
    "exp_functional_partial",
    "time_change_tau",
    "lamperti_forward",
    "lamperti_inverse",
    "default_levels",
    "construct_from_zero",
    "construct_until_level",
    "entrance_law_estimate",
]


def _grid_exp_integral(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """I at every grid point: I[k] = sum_{j<k} exp(values[j]) * dt_j."""
    dt = np.diff(times)
    segs = np.exp(values[:-1]) * dt
    return np.concatenate([[0.0], np.cumsum(segs)])


def exp_functional_partial(path: SamplePath, s: float) -> float:
    """Left Riemann sum of exp(xi_u) du over [0, s]."""
    if s < 0 or s > path.horizon:
        raise HorizonError(f"s={s} outside the path horizon {path.horizon}")
    grid_i = _grid_exp_integral(path.times, path.values)
    k = int(np.searchsorted(path.times, s, side="right")) - 1
    return float(grid_i[k] + math.exp(path.values[k]) * (s - path.times[k]))


def time_change_tau(path: SamplePath, t: float) -> float:
    """Generalized inverse of s -> I_s at level t.

    Exact inverse of the piecewise-linear grid functional, located by
    binary search on the cumulative sums; tau(I_s) = s for grid s.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    grid_i = _grid_exp_integral(path.times, path.values)
    if t >= grid_i[-1]:
        raise HorizonError(
            f"time change exhausted: I_horizon={grid_i[-1]:.6g} <= t={t:.6g}; extend the path"
        )
    k = int(np.searchsorted(grid_i, t, side="right")) - 1
    return float(path.times[k] + (t - grid_i[k]) / math.exp(path.values[k]))


def lamperti_forward(x: float, path: SamplePath, model: Optional[LevyModel] = None) -> PssmpPath:
    """X^(x) on the image grid t_k = x * I_{s_k}, values x * exp(xi_{s_k}).

    Covers X-times up to x * I_horizon(xi).
    """
    if x <= 0:
        raise DomainError("start must be positive")
    grid_i = _grid_exp_integral(path.times, path.values)
    return PssmpPath(
        times=x * grid_i,
        values=x * np.exp(path.values),
        start=x,
        seed=path.seed,
        model=model,
    )


def lamperti_inverse(xpath: PssmpPath) -> SamplePath:
    """Recover the driving path: xi_s = log(X_{A(s)} / x).

    A inverts the additive functional int X^-1; with left sums in both
    directions the round trip reproduces xi exactly on the grid.
    """
    if xpath.start <= 0:
        raise DomainError("inverse requires a strictly positive start")
    if np.any(xpath.values <= 0):
        raise DomainError("inverse requires strictly positive path values")
    dt = np.diff(xpath.times)
    s = np.concatenate([[0.0], np.cumsum(dt / xpath.values[:-1])]) * xpath.start
    xi = np.log(xpath.values / xpath.start)
    xi[0] = 0.0
    return SamplePath(times=s, values=xi, seed=xpath.seed, step_policy="lamperti_inverse")


def default_levels(depth: int = 40) -> np.ndarray:
    """The standard level sequence 2^-1, ..., 2^-depth."""
    return 0.5 ** np.arange(1, depth + 1)


def _simulate_to_level(
    model: LevyModel, target: float, step: float, rng: np.random.Generator, chunk: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """One xi path run to its first passage of ``target``; returns (times, values).

    For the Brownian model, crossings between grid points are resolved by
    the exact bridge probability; a bridge hit ends the path half a step
    later at exactly the target level (upward passage is continuous).
    """
    gaussian = model.kind == "brownian_drift"
    var_step = 4.0 * model.sigma**2 * step if gaussian else 0.0
    pieces = [np.zeros(1)]
    last = 0.0
    n_done = 0
    while True:
        inc = sample_increments(model, step, chunk, rng)
        vals = last + np.cumsum(inc)
        prev = np.concatenate([[last], vals[:-1]])
        crossed = vals >= target
        if gaussian:
            u = rng.random(chunk)
            fired = (u < engine._bridge_prob(target - prev, target - vals, var_step)) & ~crossed
            hit = crossed | fired
        else:
            fired = np.zeros(chunk, dtype=bool)
            hit = crossed
        idx = np.nonzero(hit)[0]
        if idx.size:
            j = int(idx[0])
            if fired[j]:
                # bridge hit inside step j: end half a step in, exactly at the level
                values = np.concatenate(pieces + [vals[:j], [target]])
                uniform = step * np.arange(values.size - 1)
                return np.concatenate([uniform, [uniform[-1] + 0.5 * step]]), values
            values = np.concatenate(pieces + [vals[: j + 1]])
            return step * np.arange(values.size), values
        pieces.append(vals)
        last = vals[-1]
        n_done += chunk
        if n_done * step > 1e4 * (target + 1.0):
            raise ModelError("first passage simulation ran away; check the model drift")


def construct_until_level(
    model: LevyModel,
    top: float,
    seed: int,
    levels: Optional[Sequence[float]] = None,
    step: float = 1e-3,
) -> tuple[PssmpPath, float]:
    """Concatenated-block construction run exactly until the level ``top``.

    Returns the path from 0 together with its first passage time above
    ``top`` (the path's final grid time).
    """
    path = construct_from_zero(model, levels=levels, horizon=None, seed=seed, step=step, top=top)
    return path, path.horizon


def construct_from_zero(
    model: LevyModel,
    levels: Optional[Sequence[float]] = None,
    horizon: Optional[float] = 1.0,
    seed: int = 0,
    step: float = 1e-3,
    top: Optional[float] = None,
) -> PssmpPath:
    """The process started from 0, as a concatenation of level blocks.

    Independent copies of xi drive Lamperti blocks from each level up to
    the next one; the block above the top level runs free until the time
    ``horizon`` is covered (or, with ``top`` given, until first passage
    above ``top``).  The path starts at value 0 at time 0; values below
    the deepest level are represented by that block's start.

    The construction requires no positive jumps (upward passage must be
    continuous) and m >= 0.
    """
    if model.has_positive_jumps:
        raise ModelError("construction from 0 requires a spectrally negative model")
    if model.m < 0:
        raise ModelError("construction from 0 requires m >= 0")
    lv = np.asarray(default_levels() if levels is None else levels, dtype=float)
    if lv.ndim != 1 or lv.size < 1 or np.any(lv <= 0) or (lv.size > 1 and np.any(np.diff(lv) >= 0)):
        raise DomainError("levels must be strictly decreasing and positive")
    if horizon is None and top is None:
        raise DomainError("need a horizon or a top level")
    if top is not None:
        lv = lv[lv < top]
        if lv.size == 0:
            raise DomainError("top must exceed the deepest level")
        ends = np.concatenate([[top], lv[:-1]])  # block i runs from lv[i] to ends[i]
    else:
        ends = lv[:-1]
    rng = stream(seed, "lamperti")

    t_chunks = [np.zeros(1)]
    v_chunks = [np.zeros(1)]
    t_off = 0.0
    first_block = 0 if top is not None else 1
    for i in range(lv.size - 1, first_block - 1, -1):
        x_n = lv[i]
        s_grid, xi = _simulate_to_level(model, math.log(ends[i] / x_n), step, rng)
        t_grid = x_n * _grid_exp_integral(s_grid, xi)
        t_chunks.append(t_off + t_grid[1:])
        v_chunks.append(x_n * np.exp(xi[1:]))
        t_off += t_grid[-1]
    if top is None:
        # the block above the highest level runs free until the horizon
        x_top = lv[0]
        xi_off = 0.0
        while t_off < horizon:
            inc = sample_increments(model, step, 4096, rng)
            xi = xi_off + np.cumsum(inc)
            seg = np.exp(np.concatenate([[xi_off], xi[:-1]])) * step
            t_grid = x_top * np.cumsum(seg)
            t_chunks.append(t_off + t_grid)
            v_chunks.append(x_top * np.exp(xi))
            t_off += t_grid[-1]
            xi_off = xi[-1]
    times = np.concatenate(t_chunks)
    values = np.concatenate(v_chunks)
    if horizon is not None and top is None:
        cut = int(np.searchsorted(times, horizon, side="right"))
        times, values = times[:cut], values[:cut]
    return PssmpPath(times=times, values=values, start=0.0, seed=seed, model=model)


def entrance_law_estimate(
    model: LevyModel,
    t: float,
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    seed: int,
    tol: float = 1e-5,
    step: float = 1e-3,
) -> tuple[float, float]:
    """Monte Carlo of the entrance law at time t: (1/m) E[I^-1 f(t I^-1)].

    ``I`` is the exponential functional of the dual process,
    ``int_0^inf exp(-xi_s) ds``, sampled by integrating to a threshold
    chosen from ``tol``.  Returns (estimate, standard error).
    """
    if not (model.m > 0) or not math.isfinite(model.m):
        raise ModelError("entrance law estimator needs 0 < m < inf")
    if t <= 0:
        raise DomainError("t must be positive")
    rng = stream(seed, "lamperti")
    theta = engine.truncation_theta(tol, model.m)
    res = engine.threshold_functional(model, theta, step, n, rng, integrand="exp_neg")
    inv = 1.0 / res.integrals
    w = inv * np.asarray(f(t * inv), dtype=float) / model.m
    return float(np.mean(w)), float(np.std(w, ddof=1) / math.sqrt(n))

"""The Lévy process conditioned to stay positive and its dual pssMp.

The conditioned process is sampled by rejection: run xi from a small
start x0 > 0 and keep the paths that never touch 0 (for the Brownian
model the touch event is bridge-corrected, so acceptance is exact in
law).  The accepted path approximates the process conditioned to stay
positive started at 0+, with bias vanishing as x0 -> 0; the acceptance
frequency itself equals W(x0)/W(inf) and is reported for diagnostics.

From an accepted path the module computes the exponential functional
I(-xi^up) = int exp(-xi^up) (the first passage time of the level-1 dual
identity), builds the decreasing pssMp driven by -xi^up, and runs the
time-reversal comparison against the process constructed from 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine
from .errors import DomainError, ModelError
from .lamperti import construct_until_level
from .levy import LevyModel, sample_increments, scale_function_W, W_infinity
from .paths import PssmpPath, SamplePath
from .rng import stream
from .stats import ks_two_sample

__all__ = [
    "ConditionedSample",
    "sample_conditioned_positive",
    "extend_conditioned",
    "exp_functional_conditioned",
    "tilde_X_construct",
    "time_reversal_check",
    "acceptance_probability",
]


@dataclass(frozen=True)
class ConditionedSample:
    """An accepted approximation of xi conditioned to stay positive.

    ``accepted_after`` counts the rejected trials before this one; the
    acceptance frequency over many samples approximates W(x0)/W(inf).
    """

    path: SamplePath
    start_floor: float
    accepted_after: int
    model: LevyModel = field(compare=False)
    seed: int = 0
    ext_round: int = 0


def acceptance_probability(model: LevyModel, x0: float) -> float:
    """W(x0)/W(inf), the chance that xi from x0 never touches 0 (m > 0)."""
    w_inf = W_infinity(model)
    if not math.isfinite(w_inf):
        raise ModelError("acceptance probability is 0 when m = 0")
    return scale_function_W(model, x0) / w_inf


def _run_trial(
    model: LevyModel,
    x0: float,
    horizon: float,
    step: float,
    rng: np.random.Generator,
    chunk: int = 4096,
) -> Optional[np.ndarray]:
    """One path from x0 on [0, horizon]; None when it touches 0."""
    n_steps = int(round(horizon / step))
    gaussian = model.kind == "brownian_drift"
    var_step = 4.0 * model.sigma**2 * step if gaussian else 0.0
    vals = np.empty(n_steps + 1)
    vals[0] = x0
    done = 0
    while done < n_steps:
        L = min(chunk, n_steps - done)
        inc = sample_increments(model, step, L, rng)
        cum = vals[done] + np.cumsum(inc)
        prev = np.concatenate([[vals[done]], cum[:-1]])
        dead = cum <= 0.0
        if gaussian:
            u = rng.random(L)
            dead |= u < engine._bridge_prob(prev, cum, var_step)
        if dead.any():
            return None
        vals[done + 1 : done + L + 1] = cum
        done += L
    return vals


def sample_conditioned_positive(
    model: LevyModel,
    x0: float,
    horizon: float,
    seed: int,
    step: float = 1e-3,
    max_trials: int = 10_000_000,
) -> ConditionedSample:
    """Rejection sampler for xi conditioned to stay positive on [0, horizon].

    Requires a spectrally negative model with m > 0 (otherwise the
    acceptance probability vanishes) and a small x0 (default use is 1e-3;
    the bias of every functional decays with x0).
    """
    if not model.spectrally_negative:
        raise ModelError("conditioning requires a spectrally negative model")
    if not (model.m > 0):
        raise ModelError("m <= 0: conditioning has acceptance probability 0")
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    if horizon < 0 or step <= 0:
        raise DomainError("horizon must be >= 0 and step > 0")
    rng = stream(seed, "conditioned")
    if horizon == 0.0 or int(round(horizon / step)) == 0:
        path = SamplePath(np.zeros(1), np.array([x0]), seed=seed, zero_start=False,
                          step_policy=f"uniform:dt={step!r}")
        return ConditionedSample(path, x0, 0, model, seed=seed)
    for trial in range(max_trials):
        vals = _run_trial(model, x0, horizon, step, rng)
        if vals is not None:
            times = step * np.arange(vals.size)
            path = SamplePath(times, vals, seed=seed, zero_start=False,
                              step_policy=f"uniform:dt={step!r}")
            return ConditionedSample(path, x0, trial, model, seed=seed)
    raise ModelError("rejection sampler exhausted max_trials")


def extend_conditioned(sample: ConditionedSample, extra: float) -> ConditionedSample:
    """Deterministically extend an accepted path by ``extra`` time units.

    The continuation draws from a fresh stream keyed by the sample's seed
    and extension round, so repeated extension of the same sample is
    reproducible.  Extensions are unconditioned (a conditioned path that
    has escaped upward is overwhelmingly unlikely to die; a death in the
    extension raises, as the sample should first be run to escape).
    """
    path = sample.path
    step = float(path.times[1] - path.times[0]) if path.times.size > 1 else 1e-3
    rng = stream(sample.seed, "conditioned", replica=1_000_003 + sample.ext_round)
    n_steps = int(round(extra / step))
    inc = sample_increments(sample.model, step, n_steps, rng)
    cum = path.values[-1] + np.cumsum(inc)
    if np.any(cum <= 0.0):
        raise ModelError("extension touched 0; extend only after upward escape")
    times = np.concatenate([path.times, path.times[-1] + step * np.arange(1, n_steps + 1)])
    values = np.concatenate([path.values, cum])
    new_path = SamplePath(times, values, seed=path.seed, zero_start=False,
                          step_policy=path.step_policy)
    return ConditionedSample(new_path, sample.start_floor, sample.accepted_after,
                             sample.model, seed=sample.seed, ext_round=sample.ext_round + 1)


def _persistent_escape_index(times: np.ndarray, values: np.ndarray,
                             theta: float, window: float) -> Optional[int]:
    """First index from which values stay > theta for ``window`` time units."""
    above = values > theta
    n = values.size
    below_idx = np.nonzero(~above)[0]
    if below_idx.size == 0:
        t_next_below = np.full(n, np.inf)
    else:
        nxt = np.searchsorted(below_idx, np.arange(n))
        safe = np.minimum(nxt, below_idx.size - 1)
        t_next_below = np.where(nxt < below_idx.size, times[below_idx[safe]], np.inf)
    ok = above & (t_next_below - times >= window)
    hits = np.nonzero(ok)[0]
    return int(hits[0]) if hits.size else None


def exp_functional_conditioned(sample: ConditionedSample, tol: float = 1e-6,
                               window: float = 5.0) -> float:
    """Truncated I(-xi^up) = int exp(-xi^up) du with certified tail < tol.

    Integrates until the path has stayed above the tol-derived threshold
    for a full persistence window (guarding against excursions back
    down), extending the path as needed.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    theta = engine.truncation_theta(tol, sample.model.m)
    cur = sample
    for _ in range(64):
        t, v = cur.path.times, cur.path.values
        stop = _persistent_escape_index(t, v, theta, window)
        if stop is not None:
            end = min(int(np.searchsorted(t, t[stop] + window, side="right")), t.size - 1)
            dt = np.diff(t[: end + 1])
            return float(np.sum(np.exp(-v[:end]) * dt))
        grow = max(2.0 * (theta + window) / max(cur.model.m, 0.1), 10.0)
        cur = extend_conditioned(cur, grow)
    raise ModelError("path failed to escape; model drift too weak for truncation")


def tilde_X_construct(y: float, sample: ConditionedSample) -> PssmpPath:
    """The decreasing pssMp driven by -xi^up, started from y.

    The path decreases to 0 at the a.s. finite time y * I(-xi^up); the
    final grid point carries the estimated extinction time with value 0.
    """
    if y <= 0:
        raise DomainError("y must be positive")
    t, v = sample.path.times, sample.path.values
    dt = np.diff(t)
    i_grid = np.concatenate([[0.0], np.cumsum(np.exp(-v[:-1]) * dt)])
    times = y * i_grid
    values = y * np.exp(-v)
    # drop grid points where the additive clock has stalled at float precision
    keep = np.concatenate([[True], np.diff(times) > 0])
    times, values = times[keep], values[keep]
    m = sample.model.m
    residual = math.exp(-float(v[-1])) / m if m > 0 else 0.0
    t_end = max(y * (i_grid[-1] + residual), times[-1] * (1.0 + 1e-9) + 1e-300)
    times = np.concatenate([times, [t_end]])
    values = np.concatenate([values, [0.0]])
    return PssmpPath(times=times, values=values, start=float(values[0]),
                     seed=sample.seed, model=sample.model)


def _conditioned_escaped(model: LevyModel, x0: float, seed: int, step: float,
                         tol: float, window: float = 5.0) -> tuple[ConditionedSample, float]:
    """Accepted sample extended to persistent escape, plus its I(-xi^up)."""
    theta = engine.truncation_theta(tol, model.m)
    horizon = 2.0 * (theta + window) / model.m
    sample = sample_conditioned_positive(model, x0, horizon, seed, step=step)
    i_val = exp_functional_conditioned(sample, tol=tol, window=window)
    return sample, i_val


def time_reversal_check(
    model: LevyModel,
    x: float,
    n: int,
    seed: int,
    qs: tuple[float, ...] = (0.25, 0.5, 0.75),
    x0: float = 1e-2,
    step: float = 1e-3,
    tol: float = 1e-6,
) -> dict:
    """Compare the process reversed at its first passage with the dual process.

    Samples X^(0) at relative times q * S_x before its first passage above
    x, and the decreasing dual started at x at the same relative fractions
    of its extinction time; returns per-q two-sample KS results plus the
    duration comparison S_x versus x * I(-xi^up), and acceptance
    diagnostics of the rejection sampler.
    """
    if not model.spectrally_negative or not (model.m > 0):
        raise ModelError("time reversal check needs a spectrally negative model with m > 0")
    direct_vals = {q: np.empty(n) for q in qs}
    durations_direct = np.empty(n)
    for i in range(n):
        path, s_x = construct_until_level(model, x, seed=int(seed + 7919 * i), step=step)
        durations_direct[i] = s_x
        for q in qs:
            # left limit of the reversed path at time q*S_x
            direct_vals[q][i] = path.value_at((1.0 - q) * s_x)
    dual_vals = {q: np.empty(n) for q in qs}
    durations_dual = np.empty(n)
    rejected = 0
    for i in range(n):
        sample, i_val = _conditioned_escaped(model, x0, int(seed + 104729 + 31 * i), step, tol)
        rejected += sample.accepted_after
        rho = x * i_val
        durations_dual[i] = rho
        tilde = tilde_X_construct(x, sample)
        for q in qs:
            dual_vals[q][i] = tilde.value_at(q * rho)
    stat_d, p_d = ks_two_sample(durations_direct, durations_dual)
    report = {
        "durations": {"ks_stat": stat_d, "p_value": p_d},
        "marginals": [],
        "acceptance": {
            "accepted": n,
            "rejected": rejected,
            "rate": n / max(n + rejected, 1),
            "expected_rate": acceptance_probability(model, x0),
        },
    }
    for q in qs:
        stat, p = ks_two_sample(direct_vals[q], dual_vals[q])
        report["marginals"].append({"q": q, "ks_stat": stat, "p_value": p})
    return report

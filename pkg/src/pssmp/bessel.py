"""Exact squared-Bessel machinery.

The squared Bessel process of dimension delta = 2(a+1) is the Lamperti
transform of xi = 2(B + a t), which makes it the reference model for
every acceptance experiment in the package: its transitions are exactly
samplable (Poisson-Gamma mixture of the noncentral chi-square), its
passage-time Laplace transforms are explicit in the modified Bessel
functions I_a and K_a, and the lower tail of its first passage time
sits inside the Gruet-Shi band up to one multiplicative constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as _sp

from .envelope import TailFunction, TestFunction, Verdict, classify_integral
from .errors import DomainError, ModelError
from .rng import stream

__all__ = [
    "BesqParams",
    "besq_transition_sample",
    "besq_chain",
    "besq_ensemble",
    "bessel_I",
    "bessel_K",
    "laplace_S1",
    "laplace_U1",
    "kappa_S1",
    "kappa_U1",
    "kappa_inverse",
    "gruet_shi_shape",
    "gruet_shi_fit",
    "besq_passage_mc",
    "kde_integral_test",
]


@dataclass(frozen=True)
class BesqParams:
    """Squared Bessel dimension delta >= 0; index a = delta/2 - 1."""

    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise ModelError("dimension must be >= 0")

    @property
    def a(self) -> float:
        return self.delta / 2.0 - 1.0

    @property
    def transient(self) -> bool:
        return self.delta > 2.0


def besq_transition_sample(params: BesqParams, x: float, t: float, rng, size=None):
    """Exact draw(s) from the BESQ(delta) transition at time t from x.

    Poisson(x/(2t)) mixture of Gamma(delta/2 + N, scale 2t); the mean is
    x + delta*t.  ``rng`` may be a Generator or an integer seed.
    """
    if x < 0 or t <= 0:
        raise DomainError("need x >= 0 and t > 0")
    if params.delta <= 0:
        raise ModelError("the absorbed case delta = 0 is not supported")
    if not isinstance(rng, np.random.Generator):
        rng = stream(int(rng), "bessel")
    n_mix = rng.poisson(x / (2.0 * t), size)
    return rng.gamma(params.delta / 2.0 + n_mix, 2.0 * t, size)


def besq_chain(
    params: BesqParams, t_grid: np.ndarray, n: int, rng: np.random.Generator, x0: float = 0.0
) -> np.ndarray:
    """n independent exact paths observed on ``t_grid`` (strictly increasing)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be positive and strictly increasing")
    out = np.empty((n, t_grid.size))
    x = np.full(n, float(x0))
    t_prev = 0.0
    for j, t in enumerate(t_grid):
        dt = t - t_prev
        n_mix = rng.poisson(x / (2.0 * dt))
        x = rng.gamma(params.delta / 2.0 + n_mix, 2.0 * dt)
        out[:, j] = x
        t_prev = t
    return out


def besq_ensemble(
    params: BesqParams,
    t0: float,
    t_max: float,
    ratio: float,
    n: int,
    seed: int,
    exact_tail_infimum: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact-transition ensemble on a geometric grid, with future infima.

    Returns ``(grid, X, J)`` where X[i, k] is path i at grid[k] and J is
    the future infimum on the grid.  For transient dimensions the
    beyond-horizon infimum is appended exactly before suffix-minimizing:
    started from r, the eventual infimum of the Bessel(delta) norm is
    r * U^(1/(delta-2)) with U uniform (from the hitting probability
    (y/r)^(delta-2)), so J is free of horizon censoring.
    """
    if not (t0 > 0 and t_max > t0 and ratio > 1.0):
        raise DomainError("need 0 < t0 < t_max and ratio > 1")
    m = int(math.floor(math.log(t_max / t0) / math.log(ratio) + 1e-9)) + 1
    grid = t0 * ratio ** np.arange(m)
    rng = stream(seed, "bessel")
    x = besq_chain(params, grid, n, rng)
    if exact_tail_infimum and params.transient:
        u = rng.uniform(size=n) ** (2.0 / (params.delta - 2.0))
        tail = x[:, -1] * u
        stacked = np.concatenate([x, tail[:, None]], axis=1)
        j = np.minimum.accumulate(stacked[:, ::-1], axis=1)[:, ::-1][:, :-1]
    else:
        j = np.minimum.accumulate(x[:, ::-1], axis=1)[:, ::-1]
    return grid, x, j


# ---------------------------------------------------------------------------
# Modified Bessel functions and passage-time Laplace transforms
# ---------------------------------------------------------------------------

def bessel_I(a: float, z: float) -> float:
    """Modified Bessel function of the first kind, I_a(z), z > 0."""
    if z <= 0:
        raise DomainError("z must be positive")
    return float(_sp.iv(a, z))


def bessel_K(a: float, z: float) -> float:
    """Modified Bessel function of the second kind, K_a(z), z > 0."""
    if z <= 0:
        raise DomainError("z must be positive")
    return float(_sp.kv(a, z))


def laplace_S1(params: BesqParams, lam: float) -> float:
    """E exp(-lam * S_1) for the process from 0 hitting level 1."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    a = params.a
    z = math.sqrt(2.0 * lam)
    return lam ** (a / 2.0) / (2.0 ** (a / 2.0) * math.gamma(a + 1.0) * bessel_I(a, z))


def laplace_U1(params: BesqParams, lam: float) -> float:
    """E exp(-lam * U_1), the last exit below 1; needs transience (a > 0)."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    a = params.a
    if a <= 0:
        raise ModelError("last passage Laplace transform needs a > 0")
    z = math.sqrt(2.0 * lam)
    return lam ** (a / 2.0) / (2.0 ** (a / 2.0 - 1.0) * math.gamma(a)) * bessel_K(a, z)


def kappa_S1(params: BesqParams, lam: float) -> float:
    """Laplace exponent of S_1 (as an additive functional of the level):
    kappa(lam) = -log E exp(-lam S_1), computed overflow-safely."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    a = params.a
    z = math.sqrt(2.0 * lam)
    log_iv = math.log(float(_sp.ive(a, z))) + z
    return log_iv + math.log(2.0 ** (a / 2.0) * math.gamma(a + 1.0)) - (a / 2.0) * math.log(lam)


def kappa_U1(params: BesqParams, lam: float) -> float:
    """-log E exp(-lam U_1), overflow-safe; needs a > 0."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    a = params.a
    if a <= 0:
        raise ModelError("needs a > 0")
    z = math.sqrt(2.0 * lam)
    log_kv = math.log(float(_sp.kve(a, z))) - z
    return -(
        (a / 2.0) * math.log(lam) - math.log(2.0 ** (a / 2.0 - 1.0) * math.gamma(a)) + log_kv
    )


def kappa_inverse(kappa, y: float, lo: float = 1e-12, hi: float = 1.0) -> float:
    """Inverse of an increasing Laplace exponent by bracketed bisection."""
    if y <= 0:
        raise DomainError("y must be positive")
    while kappa(hi) < y:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("kappa never reaches y")
    while kappa(lo) > y:
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError("kappa stays above y")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if kappa(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-14:
            break
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# Gruet-Shi band
# ---------------------------------------------------------------------------

def gruet_shi_shape(params: BesqParams, s: float) -> float:
    """g(s) = s^(1 - delta/2) * exp(-1/(2s)), 0 < s <= 2, delta >= 2.

    P(S_1 < s) lies in [g/K, K*g] for a finite K > 1 that the paper does
    not quantify; see :func:`gruet_shi_fit`.
    """
    if not (0.0 < s <= 2.0):
        raise DomainError("shape defined for 0 < s <= 2")
    if params.delta < 2.0:
        raise ModelError("band needs delta >= 2")
    return s ** (1.0 - params.delta / 2.0) * math.exp(-0.5 / s)


def gruet_shi_fit(params: BesqParams, s1_samples, grid=None) -> float:
    """Fitted band constant: max over the grid of max(g/P-hat, P-hat/g).

    The constant is estimated, never assumed; the acceptance criterion is
    its stability under sample-size doubling.
    """
    samples = np.sort(np.asarray(s1_samples, dtype=float))
    if grid is None:
        grid = np.linspace(0.1, 2.0, 39)
    khat = 1.0
    for s in np.asarray(grid, dtype=float):
        p_hat = np.searchsorted(samples, s, side="left") / samples.size
        if p_hat <= 0.0:
            raise DomainError("empirical tail vanishes on the grid; need more samples")
        g = gruet_shi_shape(params, float(s))
        khat = max(khat, g / p_hat, p_hat / g)
    return float(khat)


# ---------------------------------------------------------------------------
# Passage-time Monte Carlo on exact transitions
# ---------------------------------------------------------------------------

@dataclass
class PassageMC:
    """Passage samples harvested from one exact-transition ensemble.

    ``s1``: first crossing times of the level (linear interpolation inside
    the bracketing grid step).  ``u1``: last observed grid time at or below
    the level.  ``u1_weight``: probability that the path never returns
    below the level after the horizon (from the hitting probability of
    the endpoint), the unbiased weight for Laplace-transform estimates;
    ``censored`` flags paths that never crossed within the horizon.
    """

    s1: np.ndarray
    u1: np.ndarray
    u1_weight: np.ndarray
    censored: np.ndarray
    level: float
    horizon: float


def besq_passage_mc(
    params: BesqParams,
    n: int,
    seed: int,
    level: float = 1.0,
    t_min: float = 5e-3,
    t_max: float = 50.0,
    ratio: float = 1.01,
    batch: int = 50_000,
) -> PassageMC:
    """First and last passage of ``level`` for the process from 0.

    One exact chain per path on a geometric grid.  S_1 is interpolated
    inside the crossing step; U_1 is the last grid visit at or below the
    level together with its no-return weight (delta > 2).
    """
    if level <= 0:
        raise DomainError("level must be positive")
    m = int(math.ceil(math.log(t_max / t_min) / math.log(ratio))) + 1
    grid = t_min * ratio ** np.arange(m)
    rng = stream(seed, "bessel")
    s1 = np.empty(n)
    u1 = np.empty(n)
    w = np.empty(n)
    cens = np.zeros(n, dtype=bool)
    done = 0
    while done < n:
        nb = min(batch, n - done)
        x = besq_chain(params, grid, nb, rng)
        crossed = x >= level
        first = np.argmax(crossed, axis=1)
        hit = crossed.any(axis=1)
        # interpolate the crossing time inside the bracketing step
        j = np.clip(first, 1, m - 1)
        x0 = x[np.arange(nb), j - 1]
        x1 = x[np.arange(nb), j]
        t0g, t1g = grid[j - 1], grid[j]
        frac = np.clip((level - x0) / np.maximum(x1 - x0, 1e-300), 0.0, 1.0)
        s_interp = np.where(first == 0, grid[0] * level / np.maximum(x[:, 0], level),
                            t0g + frac * (t1g - t0g))
        s1[done : done + nb] = np.where(hit, s_interp, grid[-1])
        cens[done : done + nb] = ~hit
        below = x <= level
        any_below = below.any(axis=1)
        last = m - 1 - np.argmax(below[:, ::-1], axis=1)
        u1[done : done + nb] = np.where(any_below, grid[last], 0.0)
        if params.transient:
            w[done : done + nb] = 1.0 - np.minimum(level / x[:, -1], 1.0) ** (
                params.delta / 2.0 - 1.0
            )
        else:
            w[done : done + nb] = 0.0
        done += nb
    return PassageMC(s1=s1, u1=u1, u1_weight=w, censored=cens, level=level, horizon=grid[-1])


def kde_integral_test(
    params: BesqParams,
    h: TestFunction,
    end: str,
    budget: int = 20,
    form: str = "squared",
    F: Optional[TailFunction] = None,
) -> Verdict:
    """Envelope integral test specialized to the (squared) Bessel tails.

    ``form="squared"`` uses the integrand (h/t)^((delta-2)/2) e^(-h/(2t))
    dt/t (delta >= 2), i.e. the Gruet-Shi shape composed with t/h;
    ``form="bessel"`` uses the dimension-delta form h_n^delta e^(-h_n^2/2)
    with h_n = h/sqrt(t), handed to the classifier through h^2.  Passing
    an explicit ``F`` (e.g. an empirical tail of S_1 samples) replaces
    the closed-form shape.
    """
    if form == "squared":
        if params.delta < 2.0 and F is None:
            raise ModelError("squared form needs delta >= 2")
        tail = F if F is not None else TailFunction.chi_shape(1.0 - params.delta / 2.0)
        return classify_integral(tail, h, end, mode="upper", budget=budget)
    if form == "bessel":
        if params.delta < 1.0 and F is None:
            raise ModelError("dimension form needs delta >= 1")
        if h.family != "sqrt_loglog":
            raise DomainError("bessel form expects a sqrt_loglog gauge")
        h_sq = TestFunction.loglog_linear(h.params["c"])
        tail = F if F is not None else TailFunction.chi_shape(-params.delta / 2.0)
        return classify_integral(tail, h_sq, end, mode="upper", budget=budget)
    raise DomainError(f"unknown form {form!r}")

"""First and last passage times of the pssMp, directly and by duality.

Direct extraction works on any grid path.  The duality samplers produce
the laws of S_1 (first passage of the level 1 by the process from 0) and
U_1 (last exit below 1) through their exponential-functional identities:
S_1 as the total integral of exp(-xi^up) over the conditioned process,
U_1 as the total integral of exp(-xi) over the unconditioned one.  The
direct counterparts never touch those identities: S_1 comes from the
level-block construction collapsed to one driver path (upward passage is
continuous, so consecutive blocks glue into a single first-passage
problem), U_1 from the first-passage time plus the exponential time
change read at the driver's last visit below its starting level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import engine
from .errors import DomainError, ModelError
from .levy import LevyModel
from .paths import PssmpPath
from .rng import stream

__all__ = [
    "PassageSample",
    "first_passage_time",
    "last_passage_time",
    "future_infimum",
    "sample_S1_duality",
    "sample_U1_duality",
    "sample_S1_direct",
    "sample_U1_direct",
]

DEFAULT_DEPTH = 25  # deepest sampler level 2^-25; truncation ~ 3e-8 in expectation


@dataclass(frozen=True)
class PassageSample:
    level: float
    value: float
    method: str             # "direct" or "duality"
    truncation_error: float = 0.0


def first_passage_time(xpath: PssmpPath, y: float) -> Optional[float]:
    """First grid time with X >= y, or None when unreached on this horizon.

    Monotone nondecreasing in y; for paths without positive jumps the
    value at the passage time equals y up to grid error.
    """
    if y <= 0:
        raise DomainError("level must be positive")
    hits = np.nonzero(xpath.values >= y)[0]
    if hits.size == 0:
        return None
    return float(xpath.times[hits[0]])


def last_passage_time(
    xpath: PssmpPath, y: float, guard: float = math.exp(10.0)
) -> Optional[float]:
    """Last grid time with X <= y, or None (unbounded) on a short horizon.

    Finiteness is only trusted when the path has ended above ``guard*y``;
    otherwise the supremum may sit beyond the horizon and None is
    returned.  A path that never goes <= y reports 0.0 (supremum of the
    empty set, by convention).
    """
    if y <= 0:
        raise DomainError("level must be positive")
    model = xpath.model
    if model is not None and not (model.m > 0):
        raise ModelError("last passage is a.s. finite only when m > 0")
    if xpath.values[-1] < guard * y:
        return None
    hits = np.nonzero(xpath.values <= y)[0]
    if hits.size == 0:
        return 0.0
    return float(xpath.times[hits[-1]])


def future_infimum(xpath: PssmpPath) -> PssmpPath:
    """J_t = inf over s >= t of X_s on the grid (suffix minima).

    J <= X pointwise, and the construction is idempotent.
    """
    j = np.minimum.accumulate(xpath.values[::-1])[::-1]
    return PssmpPath(times=xpath.times, values=j, start=float(j[0]),
                     seed=xpath.seed, model=xpath.model)


def _check_sn_positive_mean(model: LevyModel):
    if not model.spectrally_negative:
        raise ModelError("duality samplers require a spectrally negative model")
    if not (model.m > 0):
        raise ModelError("duality samplers require m > 0")


def sample_S1_duality(
    model: LevyModel,
    n: int,
    tol: float = 1e-6,
    seed: int = 0,
    x0: float = 1e-3,
    step: float = 1e-3,
    c_split: Optional[float] = None,
    replica: int = 0,
):
    """n samples of I(-xi^up), the law of S_1, by rejection from x0.

    Truncation tails are certified below ``tol``.  With ``c_split`` in
    (0, 1) the integral at the last visit below log(1/c) is returned too,
    which is the independent summand of the self-decomposability identity
    I = A_c + c * I'.
    """
    _check_sn_positive_mean(model)
    rng = stream(seed, "conditioned", replica)
    theta = engine.truncation_theta(tol, model.m)
    split = None if c_split is None else math.log(1.0 / c_split)
    res = engine.conditioned_functional(
        model, x0, theta, step, n, rng, split_level=split
    )
    if c_split is None:
        return res.integrals
    return res.integrals, res.split_integrals, res


def sample_U1_duality(
    model: LevyModel,
    n: int,
    tol: float = 1e-6,
    seed: int = 0,
    step: float = 1e-3,
    c_split: Optional[float] = None,
    replica: int = 0,
):
    """n samples of I(xi-hat) = int exp(-xi), the law of U_1 (m > 0).

    With ``c_split`` the integral up to the first passage of log(1/c) is
    returned as well (the independent summand of the Markov-splitting
    decomposition I = A_c + c * I').
    """
    if not (model.m > 0):
        raise ModelError("U_1 requires m > 0")
    rng = stream(seed, "passage", replica)
    theta = engine.truncation_theta(tol, model.m)
    split = None if c_split is None else math.log(1.0 / c_split)
    res = engine.threshold_functional(
        model, theta, step, n, rng, integrand="exp_neg",
        split_level=split, split_mode="first",
    )
    if c_split is None:
        return res.integrals
    return res.integrals, res.split_integrals


def sample_S1_direct(
    model: LevyModel,
    n: int,
    seed: int = 0,
    step: float = 1e-3,
    depth: int = DEFAULT_DEPTH,
    replica: int = 0,
) -> np.ndarray:
    """n direct samples of S_1 from the construction of the process from 0.

    The concatenated blocks between levels 2^-depth, ..., 1 reduce to a
    single driver path xi run to its first passage of b = depth*log(2):
    S_1 = int_0^{T_b} exp(xi - b).  The truncation below the deepest
    level contributes less than 2^-depth in expectation.
    """
    _check_sn_positive_mean(model)
    rng = stream(seed, "passage", replica)
    b = depth * math.log(2.0)
    res = engine.passage_up_functional(
        model, b, step, n, rng, integrand="exp_shift", shift=b
    )
    return res.integrals


def sample_U1_direct(
    model: LevyModel,
    n: int,
    seed: int = 0,
    step: float = 1e-3,
    depth: int = DEFAULT_DEPTH,
    guard_log: float = 20.0,
    replica: int = 0,
    s1_samples: Optional[np.ndarray] = None,
) -> np.ndarray:
    """n direct samples of U_1: first passage of 1 plus the last exit after it.

    After the process reaches 1 (continuously), the post-passage part is a
    fresh Lamperti block from 1; its last time at or below 1 is the
    exponential time change evaluated at the driver's last visit below 0,
    tracked until the driver has escaped above ``guard_log`` (the chance
    of a later return is 1 - W(guard_log)/W(inf)).  The two summands are
    independent by the Markov property, so precomputed direct S_1 samples
    can be passed in.
    """
    _check_sn_positive_mean(model)
    if s1_samples is None:
        s1 = sample_S1_direct(model, n, seed=seed, step=step, depth=depth, replica=replica)
    else:
        s1 = np.asarray(s1_samples, dtype=float)
        if s1.size != n:
            raise DomainError("s1_samples must have length n")
    rng = stream(seed, "passage", replica + 500_009)
    res = engine.threshold_functional(
        model, guard_log, step, n, rng, integrand="exp",
        split_level=0.0, split_mode="last",
    )
    return s1 + res.split_integrals

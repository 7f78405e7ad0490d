"""Gauge functions, closed-form LIL constants, and empirical envelope statistics.

Gauges are the deterministic functions appearing under the almost-sure
limits: the log-regular pair phi / theta = t^2/phi built from a tail
function, the log-log-regular pair built from (K, gamma), the regularly
varying pairs built from a Laplace exponent, the additive-process gauge
built from an inverted Laplace exponent, and the Bessel log-log gauges.
The empirical statistics estimate limsup/liminf ratios by running
extrema over geometric windows; they are diagnostics with deliberately
coarse acceptance bands, since the underlying limits converge at
log log speed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .envelope import TailFunction
from .errors import DomainError, ModelError
from .paths import PssmpPath

__all__ = [
    "GaugeSpec",
    "gauge_eval",
    "lil_constant",
    "EnvelopeStat",
    "empirical_limsup",
    "empirical_liminf",
    "transfer_check",
]

_GUARD = math.e  # windows exclude |log t| <= e so log|log t| stays > 1


def _loglog(t: float) -> float:
    u = abs(math.log(t))
    if u <= 1.0:
        raise DomainError(f"|log t| <= 1 at t={t}: log|log t| is not positive")
    return math.log(u)


@dataclass(frozen=True)
class GaugeSpec:
    """A named gauge family with its parameters.

    Families: ``logreg_phi``, ``logreg_theta`` (params: tail function or
    (lam, delta) for exp(-lam u^-delta)); ``loglog_phi``, ``loglog_Phi``
    (params: K, gamma); ``regvar_f``, ``regvar_g`` (params: psi, a
    Laplace exponent callable); ``sato_rho`` (params: kappa callable);
    ``poisson_m`` (no params); ``bessel_sqrt`` (params: c, squared).
    """

    family: str
    params: dict = field(default_factory=dict)

    def describe(self) -> str:
        keys = ", ".join(
            f"{k}={v if not callable(v) else v.__name__}" for k, v in sorted(self.params.items())
        )
        return f"{self.family}({keys})"


def _logreg_tail(spec: GaugeSpec) -> TailFunction:
    if "tail" in spec.params:
        return spec.params["tail"]
    return TailFunction.exp_inv(spec.params["lam"], spec.params["delta"])


def _logreg_phi(spec: GaugeSpec, t: float) -> float:
    """phi(t) = t / inf{s : 1/F(1/s) > |log t|}, by geometric bisection."""
    y = abs(math.log(t))
    if y <= 1.0:
        raise DomainError("logreg gauges need |log t| > 1")
    tail = _logreg_tail(spec)

    def exceeds(s: float) -> bool:
        val, _ = tail.eval_log(-math.log(s))
        return val * y < 1.0  # 1/F(1/s) > y

    lo, hi = 1.0, 1.0
    for _ in range(2000):
        if exceeds(hi):
            break
        hi *= 2.0
    else:
        raise DomainError("tail too heavy: the infimum never exceeds |log t|")
    for _ in range(2000):
        if not exceeds(lo):
            break
        lo *= 0.5
    for _ in range(300):
        mid = math.sqrt(lo * hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
        if hi / lo < 1.0 + 1e-13:
            break
    return t / hi


def gauge_eval(spec: GaugeSpec, t: float) -> float:
    """Evaluate the gauge at t; domain requires |log t| > 1."""
    if t <= 0:
        raise DomainError("gauges live on t > 0")
    fam = spec.family
    if fam == "logreg_phi":
        return _logreg_phi(spec, t)
    if fam == "logreg_theta":
        return t * t / _logreg_phi(spec, t)
    if fam == "loglog_phi":
        K, gamma = spec.params["K"], spec.params["gamma"]
        return t * math.exp(-((_loglog(t) / K) ** (1.0 / gamma)))
    if fam == "loglog_Phi":
        K, gamma = spec.params["K"], spec.params["gamma"]
        return t * math.exp(((_loglog(t) / K) ** (1.0 / gamma)))
    if fam == "regvar_f":
        psi = spec.params["psi"]
        ll = _loglog(t)
        return t * ll / psi(ll)
    if fam == "regvar_g":
        psi = spec.params["psi"]
        ll = _loglog(t)
        return t * psi(ll) / ll
    if fam == "sato_rho":
        kappa_inv = spec.params["kappa_inverse"]
        ll = _loglog(t)
        return t * ll / kappa_inv(ll)
    if fam == "poisson_m":
        return t * math.exp(-math.sqrt(2.0 * _loglog(t)))
    if fam == "bessel_sqrt":
        c = spec.params.get("c", 1.0)
        base = 2.0 * c * t * _loglog(t)
        return base if spec.params.get("squared", False) else math.sqrt(base)
    raise DomainError(f"unknown gauge family {fam!r}")


# ---------------------------------------------------------------------------
# Closed-form LIL constants
# ---------------------------------------------------------------------------

def lil_constant(case: str, **p) -> float:
    """Closed-form constants of the laws of the iterated logarithm.

    ``stable_csp_*``: stable process conditioned to stay positive, no
    positive jumps, index alpha in (1, 2].  ``regvar_*``: Laplace
    exponent regularly varying with index beta in (1, 2).  ``sato_*``:
    increasing additive self-similar process, exponent index alpha in
    (0, 1).  ``bessel_*``: the transient-Bessel pair (1/4, 4).
    """
    if case == "stable_csp_process":
        alpha = p["alpha"]
        if not (1.0 < alpha <= 2.0):
            raise DomainError("alpha must lie in (1, 2]")
        return alpha * (alpha - 1.0) ** (-(alpha - 1.0) / alpha)
    if case == "stable_csp_passage":
        alpha = p["alpha"]
        if not (1.0 < alpha <= 2.0):
            raise DomainError("alpha must lie in (1, 2]")
        return (1.0 / alpha) * (1.0 - 1.0 / alpha) ** (alpha - 1.0)
    if case == "regvar_passage":
        beta = p["beta"]
        if not (1.0 < beta < 2.0):
            raise DomainError("beta must lie in (1, 2)")
        return (beta - 1.0) ** (beta - 1.0)
    if case == "regvar_process":
        beta = p["beta"]
        if not (1.0 < beta < 2.0):
            raise DomainError("beta must lie in (1, 2)")
        return (beta - 1.0) ** (-(beta - 1.0))
    if case == "sato_passage":
        alpha = p["alpha"]
        if not (0.0 < alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        return alpha * (1.0 - alpha) ** ((1.0 - alpha) / alpha)
    if case == "sato_process":
        alpha = p["alpha"]
        if not (0.0 < alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        return (1.0 / alpha) * (1.0 - alpha) ** (-(1.0 - alpha) / alpha)
    if case == "bessel_passage":
        return 0.25
    if case == "bessel_process":
        return 4.0
    raise DomainError(f"unknown constant case {case!r}")


# ---------------------------------------------------------------------------
# Empirical envelope statistics
# ---------------------------------------------------------------------------

PathsLike = Union[Sequence[PssmpPath], tuple]


def _as_grids(paths: PathsLike) -> list[tuple[np.ndarray, np.ndarray]]:
    if isinstance(paths, tuple) and len(paths) == 2 and isinstance(paths[0], np.ndarray):
        times, mat = paths
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        return [(np.asarray(times, dtype=float), mat[i]) for i in range(mat.shape[0])]
    return [(p.times, p.values) for p in paths]


@dataclass
class EnvelopeStat:
    """Windowed running-extremum statistic of value/gauge ratios."""

    gauge: str
    end: str
    kind: str                      # "limsup" or "liminf"
    window_bounds: list            # [(lo, hi)] in the traversal order
    running: np.ndarray            # (n_paths, n_windows) running extrema
    per_path_terminal: np.ndarray
    median: float
    iqr: float

    def to_json(self) -> str:
        rec = {
            "gauge": self.gauge,
            "end": self.end,
            "kind": self.kind,
            "windows": self.window_bounds,
            "per_path_terminal": self.per_path_terminal.tolist(),
            "median": self.median,
            "iqr": self.iqr,
        }
        return json.dumps(rec, sort_keys=True)

    def window_csv(self) -> str:
        lines = ["window_lo,window_hi," + ",".join(
            f"path{i}" for i in range(self.running.shape[0]))]
        for k, (lo, hi) in enumerate(self.window_bounds):
            vals = ",".join(repr(float(v)) for v in self.running[:, k])
            lines.append(f"{lo!r},{hi!r},{vals}")
        return "\n".join(lines) + "\n"


def _window_bounds(t_lo: float, t_hi: float, end: str, q: float) -> list[tuple[float, float]]:
    if t_hi <= t_lo * (1.0 + 1e-12):
        return [(t_lo, t_hi)]
    if end == "infinity":
        bounds = []
        lo = t_lo
        while lo < t_hi * (1.0 - 1e-12):
            hi = min(lo * q, t_hi)
            bounds.append((lo, hi))
            lo = hi
        return bounds
    if end == "zero":
        bounds = []
        hi = t_hi
        while hi > t_lo * (1.0 + 1e-12):
            lo = max(hi / q, t_lo)
            bounds.append((lo, hi))
            hi = lo
        return bounds
    raise DomainError("end must be 'zero' or 'infinity'")


def _windowed_extrema(
    grids: list[tuple[np.ndarray, np.ndarray]],
    gauge: GaugeSpec,
    end: str,
    t0: Optional[float],
    q: float,
    mode: str,
) -> EnvelopeStat:
    guard_lo, guard_hi = math.exp(-_GUARD), math.exp(_GUARD)
    lows, highs = [], []
    for times, _ in grids:
        ok = (times > guard_hi) if end == "infinity" else ((times < guard_lo) & (times > 0))
        if not np.any(ok):
            raise DomainError("no grid points beyond the log-log domain guard")
        lows.append(times[ok].min())
        highs.append(times[ok].max())
    if end == "infinity":
        t_lo = t0 if t0 is not None else max(lows)
        t_hi = min(highs)
    else:
        t_lo = max(lows)
        t_hi = t0 if t0 is not None else min(highs)
    if not (t_lo <= t_hi):
        raise DomainError("window range is empty")
    bounds = _window_bounds(t_lo, t_hi, end, q)
    n_paths, n_win = len(grids), len(bounds)
    running = np.empty((n_paths, n_win))
    pick = np.max if mode == "limsup" else np.min
    shared = all(g[0] is grids[0][0] for g in grids)
    gauge_cache: dict[int, np.ndarray] = {}
    for i, (times, values) in enumerate(grids):
        key = 0 if shared else i
        if key not in gauge_cache:
            gauge_cache.clear()
            gauge_cache[key] = np.array(
                [gauge_eval(gauge, float(t)) if abs(math.log(t)) > 1.0 else np.nan
                 for t in times]
            )
        gs_all = gauge_cache[key]
        run = None
        eps = 1e-12
        for k, (lo, hi) in enumerate(bounds):
            sel = (times >= lo * (1 - eps)) & (times <= hi * (1 + eps))
            if k < n_win - 1:
                # half-open toward the traversal direction to avoid double counting
                sel &= (times < hi * (1 - eps)) if end == "infinity" else (times > lo * (1 + eps))
            if not np.any(sel):
                raise DomainError(f"empty window [{lo:.4g}, {hi:.4g}]")
            m_k = float(pick(values[sel] / gs_all[sel]))
            if run is None:
                run = m_k
            else:
                run = max(run, m_k) if mode == "limsup" else min(run, m_k)
            running[i, k] = run
    terminal = running[:, -1]
    med = float(np.median(terminal))
    q75, q25 = np.percentile(terminal, [75, 25])
    return EnvelopeStat(
        gauge=gauge.describe(),
        end=end,
        kind=mode,
        window_bounds=[(float(a), float(b)) for a, b in bounds],
        running=running,
        per_path_terminal=terminal,
        median=med,
        iqr=float(q75 - q25),
    )


def empirical_limsup(
    paths: PathsLike,
    gauge: GaugeSpec,
    end: str,
    t0: Optional[float] = None,
    q: float = 2.0,
) -> EnvelopeStat:
    """Running maxima of X_t/gauge(t) over geometric windows.

    ``t0`` anchors the first window (at infinity) or the last one (at
    zero); windows have ratio ``q`` (default 2) and never cross the
    log-log domain guard.  Reported statistic: the median across paths
    of the per-path terminal running maximum, with IQR.
    """
    return _windowed_extrema(_as_grids(paths), gauge, end, t0, q, "limsup")


def empirical_liminf(
    levels: np.ndarray,
    passage_values,
    gauge: GaugeSpec,
    end: str,
    t0: Optional[float] = None,
    q: float = 2.0,
) -> EnvelopeStat:
    """Running minima of S_x/gauge(x) over geometric level windows.

    ``passage_values`` is an (n_paths, n_levels) array of an increasing
    passage process sampled at ``levels`` (shared across paths).
    """
    levels = np.asarray(levels, dtype=float)
    mat = np.atleast_2d(np.asarray(passage_values, dtype=float))
    grids = [(levels, mat[i]) for i in range(mat.shape[0])]
    return _windowed_extrema(grids, gauge, end, t0, q, "liminf")


def transfer_check(
    paths: PathsLike,
    gauge: GaugeSpec,
    end: str,
    t0: Optional[float] = None,
    q: float = 2.0,
    infima: Optional[PathsLike] = None,
) -> dict:
    """Envelope statistics of X, of its future infimum J, and of X - J.

    The transfer property (no positive jumps) says one gauge rules all
    three; the check reports the three statistics side by side.  ``infima``
    may carry exact future infima (e.g. from a horizon-free sampler);
    otherwise J is the grid suffix minimum.
    """
    grids = _as_grids(paths)
    if not isinstance(paths, tuple):
        for p in paths:
            if getattr(p, "model", None) is not None and p.model.has_positive_jumps:
                raise ModelError("the transfer property needs a model without positive jumps")
    if infima is None:
        j_grids = [(t, np.minimum.accumulate(v[::-1])[::-1]) for t, v in grids]
    else:
        j_grids = _as_grids(infima)
    d_grids = [(t, v - jv) for (t, v), (_, jv) in zip(grids, j_grids)]
    stat_x = _windowed_extrema(grids, gauge, end, t0, q, "limsup")
    stat_j = _windowed_extrema(j_grids, gauge, end, t0, q, "limsup")
    stat_d = _windowed_extrema(d_grids, gauge, end, t0, q, "limsup")
    return {"process": stat_x, "future_infimum": stat_j, "reflected": stat_d}

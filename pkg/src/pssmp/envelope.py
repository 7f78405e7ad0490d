"""Integral-test machinery: tail functions, envelope functions, verdicts.

The upper/lower envelope dichotomies all reduce to the finiteness of an
integral of a lower-tail probability composed with the ratio of a test
function to the identity, against dt/t.  Substituting u = |log t| turns
dt/t into du and the question into the integrability at +infinity of
``phi(u) = F(ratio(u))``.  The classifier integrates phi over doubling
windows, fits its polynomial log-decay exponent, and returns one of
Converges / Diverges / Inconclusive; asymptotic dichotomies cannot be
settled with certainty by a finite computation, so the three-valued
outcome is part of the contract.

Empirical tails evaluate below their smallest sample as the pessimistic
floor 1/(n+1) and are flagged; flagged evaluations count as zero mass
for the verdict (resolution limit, not evidence) and the flagged windows
are reported in the diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

__all__ = ["TailFunction", "TestFunction", "Verdict", "integrand_eval",
           "classify_integral", "tail_compare"]


# ---------------------------------------------------------------------------
# Tail functions t -> P(V < t)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailFunction:
    """Lower-tail probability, analytic or empirical (ECDF).

    Analytic kinds:
      ``power``      F(s) = min(1, s^beta)
      ``exp_inv``    F(s) = exp(-lam * s^-delta)
      ``chi_shape``  F(s) = min(1, s^p * exp(-1/(2s)))  (squared-Bessel shape)
      ``const``      F(s) = c
    """

    kind: str
    params: tuple = ()
    samples: Optional[np.ndarray] = field(default=None, compare=False)

    @classmethod
    def power(cls, beta: float) -> "TailFunction":
        return cls("power", (float(beta),))

    @classmethod
    def exp_inv(cls, lam: float, delta: float) -> "TailFunction":
        return cls("exp_inv", (float(lam), float(delta)))

    @classmethod
    def chi_shape(cls, p: float) -> "TailFunction":
        return cls("chi_shape", (float(p),))

    @classmethod
    def const(cls, c: float) -> "TailFunction":
        if not (0.0 <= c <= 1.0):
            raise DomainError("const tail must lie in [0, 1]")
        return cls("const", (float(c),))

    @classmethod
    def empirical(cls, samples) -> "TailFunction":
        s = np.sort(np.asarray(samples, dtype=float))
        if s.size == 0:
            raise DomainError("empirical tail needs samples")
        return cls("empirical", (), samples=s)

    @property
    def is_empirical(self) -> bool:
        return self.kind == "empirical"

    @property
    def n_samples(self) -> int:
        return 0 if self.samples is None else int(self.samples.size)

    def eval_log(self, log_s: float) -> tuple[float, bool]:
        """F at s = exp(log_s); returns (value, below_resolution_flag)."""
        if self.kind == "power":
            (beta,) = self.params
            return math.exp(min(0.0, beta * log_s)), False
        if self.kind == "exp_inv":
            lam, delta = self.params
            expo = -lam * math.exp(-delta * log_s) if -delta * log_s < 700 else -math.inf
            return math.exp(expo) if expo > -745 else 0.0, False
        if self.kind == "chi_shape":
            (p,) = self.params
            inv_2s = 0.5 * math.exp(-log_s) if -log_s < 700 else math.inf
            lf = p * log_s - inv_2s
            return math.exp(min(0.0, lf)) if lf > -745 else 0.0, False
        if self.kind == "const":
            return self.params[0], False
        if self.kind == "empirical":
            s = math.exp(log_s) if log_s < 700 else math.inf
            if s < self.samples[0]:
                return 1.0 / (self.samples.size + 1), True
            k = int(np.searchsorted(self.samples, s, side="left"))
            return k / self.samples.size, False
        raise DomainError(f"unknown tail kind {self.kind!r}")

    def __call__(self, s: float) -> float:
        if s <= 0:
            raise DomainError("tail argument must be positive")
        return self.eval_log(math.log(s))[0]


# ---------------------------------------------------------------------------
# Test (envelope) functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Parameterized envelope function h with log-domain evaluation.

    Families:
      ``power``         h(t) = k * t^gamma
      ``linear``        h(t) = k * t
      ``loglog_linear`` h(t) = 2c * t * log|log t|
      ``sqrt_loglog``   h(t) = sqrt(2c * t * log|log t|)

    ``log_ratio(u, end)`` returns log(h(t)/t) at |log t| = u, the only
    form the classifier needs; it stays finite where t itself would
    over- or underflow.
    """

    family: str
    params: dict

    @classmethod
    def power(cls, gamma: float, k: float = 1.0) -> "TestFunction":
        return cls("power", {"gamma": float(gamma), "k": float(k)})

    @classmethod
    def linear(cls, k: float = 1.0) -> "TestFunction":
        return cls("power", {"gamma": 1.0, "k": float(k)})

    @classmethod
    def loglog_linear(cls, c: float, squared_time: bool = False) -> "TestFunction":
        return cls("loglog_linear", {"c": float(c), "squared_time": bool(squared_time)})

    @classmethod
    def sqrt_loglog(cls, c: float) -> "TestFunction":
        return cls("sqrt_loglog", {"c": float(c)})

    def _sign(self, end: str) -> float:
        if end == "zero":
            return -1.0
        if end == "infinity":
            return 1.0
        raise DomainError("end must be 'zero' or 'infinity'")

    def log_ratio(self, u: float, end: str) -> float:
        """log(h(t)/t) at u = |log t| (t = e^-u at zero, e^u at infinity)."""
        log_t = self._sign(end) * u
        if self.family == "power":
            g, k = self.params["gamma"], self.params["k"]
            return math.log(k) + (g - 1.0) * log_t
        if u <= 1.0:
            raise DomainError("loglog families need |log t| > 1")
        if self.family == "loglog_linear":
            return math.log(2.0 * self.params["c"] * math.log(u))
        if self.family == "sqrt_loglog":
            return 0.5 * (math.log(2.0 * self.params["c"] * math.log(u)) - log_t)
        raise DomainError(f"unknown family {self.family!r}")

    def eval(self, t: float) -> float:
        if t <= 0:
            raise DomainError("test functions live on t > 0")
        u = abs(math.log(t))
        end = "zero" if t < 1.0 else "infinity"
        return t * math.exp(self.log_ratio(max(u, 1.0 + 1e-12), end))

    def admissible(self, end: str, mode: str = "upper", n_grid: int = 64,
                   u_min: float = 3.0) -> bool:
        """Numeric check of the class bound on a log grid near the end.

        Upper-envelope classes bound t/h(t); lower (passage) classes
        bound h(t)/t.  Positivity and the relevant monotonicity are
        checked on the grid |log t| in [u_min, 40]; the class conditions
        are asymptotic, so the check starts where the classifier's
        windows do.
        """
        us = np.linspace(u_min, 40.0, n_grid)
        try:
            lr = np.array([self.log_ratio(float(u), end) for u in us])
        except DomainError:
            return False
        bound = -lr if mode == "upper" else lr
        if np.any(~np.isfinite(bound)) or np.max(bound) > math.log(1e8):
            return False
        ts = np.exp(self._sign(end) * us)
        h = ts * np.exp(lr)
        order = np.argsort(ts)
        return bool(np.all(np.diff(h[order]) > -1e-12 * np.abs(h[order][:-1])))


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    outcome: str                     # "Converges" | "Diverges" | "Inconclusive"
    fitted_exponent: Optional[float]
    windows: list
    notes: list

    def to_json(self) -> str:
        return json.dumps(
            {
                "outcome": self.outcome,
                "fitted_exponent": self.fitted_exponent,
                "windows": self.windows,
                "notes": self.notes,
            },
            sort_keys=True,
        )


def integrand_eval(F: TailFunction, h: TestFunction, t: float, mode: str = "upper") -> float:
    """F(t/h(t))/t (upper) or F(h(t)/t)/t (lower) at an ordinary t."""
    if t <= 0:
        raise DomainError("t must be positive")
    end = "zero" if t < 1.0 else "infinity"
    u = abs(math.log(t))
    lr = h.log_ratio(u, end)
    log_s = -lr if mode == "upper" else lr
    if mode == "upper" and not math.isfinite(lr):
        raise DomainError("h(t) = 0 in upper mode")
    val, _ = F.eval_log(log_s)
    return val / t


def classify_integral(
    F: TailFunction,
    h: TestFunction,
    end: str,
    mode: str = "upper",
    budget: int = 20,
    u0: float = 3.0,
    nodes: int = 48,
    rel_tol: float = 1e-4,
    tail_frac: float = 0.3,
    fit_support: int = 20,
) -> Verdict:
    """Classify the envelope integral at the given end.

    In u = |log t| coordinates the integral is ``int phi(u) du`` with
    ``phi(u) = F(ratio(u))``.  Doubling windows [u0*2^k, u0*2^(k+1)] up
    to ``budget`` are integrated by trapezoid in log u; the polynomial
    decay exponent p of phi is fitted by least squares over the last
    windows that are genuinely resolved (for empirical tails: carried by
    at least ``fit_support`` samples, so the fit never leans on a
    handful of extreme order statistics).

    Converges: fitted p > 1, resolved window sums decreasing, and the
    power-law extrapolation of the mass beyond the fit anchor below
    ``tail_frac`` of the extrapolated total (or the last window below
    ``rel_tol`` of the total outright).
    Diverges: fitted p <= 1 and a positive minorant c*u^-p on every
    window whose level does not decay across windows.
    Anything else: Inconclusive.
    """
    if not h.admissible(end, mode, u_min=u0):
        raise DomainError("test function is not admissible for this end/mode")
    if budget < 4:
        raise DomainError("budget must allow at least 4 windows")
    win_sums, win_floor_sums, flag_frac = [], [], []
    node_u, node_phi, node_flagged = [], [], []
    for k in range(budget):
        lo, hi = u0 * 2.0**k, u0 * 2.0 ** (k + 1)
        v = np.linspace(math.log(lo), math.log(hi), nodes + 1)
        us = np.exp(v)
        phi = np.empty(us.size)
        flags = np.zeros(us.size, dtype=bool)
        for i, u in enumerate(us):
            lr = h.log_ratio(float(u), end)
            log_s = -lr if mode == "upper" else lr
            phi[i], flags[i] = F.eval_log(log_s)
        w = phi * us  # du = u dv
        genuine = np.where(flags, 0.0, w)
        win_sums.append(float(np.trapezoid(genuine, v)))
        win_floor_sums.append(float(np.trapezoid(w, v)))
        flag_frac.append(float(np.mean(flags)))
        node_u.append(us)
        node_phi.append(phi)
        node_flagged.append(flags)

    windows = [
        {
            "u_lo": u0 * 2.0**k,
            "u_hi": u0 * 2.0 ** (k + 1),
            "integral": win_sums[k],
            "integral_with_floor": win_floor_sums[k],
            "flagged_fraction": flag_frac[k],
        }
        for k in range(budget)
    ]
    notes: list[str] = []
    total = float(np.sum(win_sums))
    if total <= 0.0:
        notes.append("integrand vanishes at working precision on every window")
        return Verdict("Converges", None, windows, notes)

    # nodes usable for the exponent fit: resolved, positive, and (for
    # empirical tails) carried by enough samples
    support_floor = fit_support / F.n_samples if F.is_empirical else 0.0
    fit_ok = [
        (~node_flagged[k]) & (node_phi[k] > support_floor) for k in range(budget)
    ]
    k_last = None
    for k in range(budget - 1, -1, -1):
        if np.mean(fit_ok[k]) > 0.5 and win_sums[k] > 0.0:
            k_last = k
            break
    if k_last is None or k_last < 2:
        notes.append("no resolved windows to fit")
        return Verdict("Inconclusive", None, windows, notes)
    if k_last < budget - 1:
        notes.append(f"windows beyond {k_last} below empirical resolution")

    fu = np.concatenate([node_u[k][fit_ok[k]] for k in range(k_last - 2, k_last + 1)])
    fp = np.concatenate([node_phi[k][fit_ok[k]] for k in range(k_last - 2, k_last + 1)])
    if fu.size < 8:
        notes.append("too few resolved nodes for an exponent fit")
        return Verdict("Inconclusive", None, windows, notes)
    slope, intercept = np.polyfit(np.log(fu), np.log(fp), 1)
    p_fit = float(-slope)

    last3 = win_sums[k_last - 2 : k_last + 1]
    decreasing = last3[0] > last3[1] > last3[2] > 0.0
    if p_fit > 1.0:
        # mass beyond the fitted anchor, from the power-law extrapolation
        u_star = float(fu.max())
        phi_star = math.exp(intercept + slope * math.log(u_star))
        remainder = phi_star * u_star / (p_fit - 1.0)
        counted = float(np.sum(win_sums[: k_last + 1]))
        frac = remainder / (counted + remainder)
        if (win_sums[-1] / total < rel_tol and flag_frac[-1] == 0.0) or (
            decreasing and frac < tail_frac
        ):
            notes.append(f"extrapolated remaining mass fraction {frac:.3g}")
            return Verdict("Converges", p_fit, windows, notes)
        notes.append("fitted exponent above 1 but the budget left too much tail")
        return Verdict("Inconclusive", p_fit, windows, notes)

    # divergence: certify a positive minorant c*u^-p with p <= 1 whose
    # window-wise level does not decay (a decaying level would signal a
    # genuinely faster-than-fitted fall-off)
    p_cert = min(max(p_fit, 0.0), 1.0)
    c_k = []
    for k in range(budget):
        ok = (~node_flagged[k]) & (node_phi[k] > 0.0)
        if not np.any(ok):
            c_k = []
            break
        c_k.append(float(np.min(node_phi[k][ok] * node_u[k][ok] ** p_cert)))
    if c_k:
        c_arr = np.asarray(c_k)
        head = float(np.min(c_arr[:3]))
        tail = float(np.min(c_arr[-3:]))
        if c_arr.min() > 0.0 and tail >= 0.3 * head:
            notes.append(f"minorant {c_arr.min():.3g} * u^-{p_cert:.3g} on all windows")
            return Verdict("Diverges", p_fit, windows, notes)
    notes.append("no stable divergence minorant; budget exhausted")
    return Verdict("Inconclusive", p_fit, windows, notes)


def tail_compare(
    F: TailFunction, G: TailFunction, grid
) -> tuple[np.ndarray, np.ndarray]:
    """log G(t) - log F(t) over the grid; zero tails are dropped and flagged.

    Used to check boundedness of the ratio (the regular-variation

    comparison of the first/last passage tails) without asserting any
    particular constant.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise DomainError("grid must be positive")
    ratios = np.full(grid.size, np.nan)
    dropped = np.zeros(grid.size, dtype=bool)
    for i, t in enumerate(grid):
        fv, _ = F.eval_log(math.log(t))
        gv, _ = G.eval_log(math.log(t))
        if fv <= 0.0 or gv <= 0.0:
            dropped[i] = True
        else:
            ratios[i] = math.log(gv) - math.log(fv)
    return ratios, dropped

"""Experiment runner: dispatch, artifacts, manifest.

Every operation writes delimited/JSON artifacts into the output
directory plus a manifest recording the spec hash, seed, code version
and wall time.  Identical (spec, seed, code version) produce
byte-identical data artifacts; the wall-time field lives only in the
manifest and is excluded from that contract.
"""

from __future__ import annotations

import hashlib
import time
from pathlib import Path

import numpy as np

from . import __version__, bessel, conditioned, envelope, lamperti, levy, lil, passage
from .config import ExperimentSpec, build_model
from .errors import PssmpError
from .io import dumps_stable, samples_csv, summary_record, table_csv, write_text


class RunError(PssmpError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _need_model(spec: ExperimentSpec):
    model = build_model(spec.model)
    if model is None:
        raise RunError("bad_params", "this operation needs a [model] section")
    return model


def _op_levy_path(spec: ExperimentSpec, out: Path) -> list[str]:
    model = _need_model(spec)
    horizon = float(spec.params.get("horizon", spec.model.get("horizon", 1.0)))
    step = float(spec.params.get("step", spec.model.get("step", 1e-3)))
    path = levy.sample_path(model, horizon, step, spec.seed,
                            jump_refinement=bool(spec.params.get("jump_refinement", False)))
    write_text(out / "path.csv", path.to_csv())
    write_text(out / "path.json", path.to_json())
    return ["path.csv", "path.json"]


def _op_lamperti_path(spec: ExperimentSpec, out: Path) -> list[str]:
    model = _need_model(spec)
    horizon = float(spec.params.get("horizon", spec.model.get("horizon", 1.0)))
    step = float(spec.params.get("step", spec.model.get("step", 1e-3)))
    x = float(spec.params.get("x", 1.0))
    xi = levy.sample_path(model, horizon, step, spec.seed)
    xp = lamperti.lamperti_forward(x, xi, model)
    write_text(out / "pssmp_path.csv", xp.to_csv())
    write_text(out / "pssmp_path.json", xp.to_json())
    return ["pssmp_path.csv", "pssmp_path.json"]


def _op_construct_zero(spec: ExperimentSpec, out: Path) -> list[str]:
    model = _need_model(spec)
    horizon = float(spec.params.get("horizon", spec.model.get("horizon", 1.0)))
    step = float(spec.params.get("step", spec.model.get("step", 1e-3)))
    xp = lamperti.construct_from_zero(model, horizon=horizon, seed=spec.seed, step=step)
    write_text(out / "pssmp_from_zero.csv", xp.to_csv())
    return ["pssmp_from_zero.csv"]


def _passage_common(spec: ExperimentSpec, out: Path, sampler: str) -> list[str]:
    model = _need_model(spec)
    n = spec.replicas
    step = float(spec.params.get("step", spec.model.get("step", 1e-3)))
    tol = float(spec.params.get("tol", 1e-6))
    extra = {"method": sampler, "level": 1.0}
    if sampler == "s1_direct":
        vals = passage.sample_S1_direct(model, n, seed=spec.seed, step=step)
    elif sampler == "u1_direct":
        vals = passage.sample_U1_direct(model, n, seed=spec.seed, step=step)
    elif sampler == "s1_duality":
        x0 = float(spec.params.get("x0", 1e-3))
        vals = passage.sample_S1_duality(model, n, tol=tol, seed=spec.seed, x0=x0, step=step)
        extra["truncation_tol"] = tol
    elif sampler == "u1_duality":
        vals = passage.sample_U1_duality(model, n, tol=tol, seed=spec.seed, step=step)
        extra["truncation_tol"] = tol
    else:
        raise RunError("unknown_op", f"unknown passage sampler {sampler!r}")
    write_text(out / "samples.csv", samples_csv(vals))
    write_text(out / "summary.json", dumps_stable(summary_record(vals, extra)))
    return ["samples.csv", "summary.json"]


def _op_integral_test(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    family = str(p.get("tail", "chi_shape"))
    if family == "chi_shape":
        F = envelope.TailFunction.chi_shape(float(p.get("shape_exponent", -0.5)))
    elif family == "power":
        F = envelope.TailFunction.power(float(p.get("beta", 1.0)))
    elif family == "exp_inv":
        F = envelope.TailFunction.exp_inv(float(p.get("lam", 1.0)), float(p.get("delta", 1.0)))
    elif family == "const":
        F = envelope.TailFunction.const(float(p.get("c", 1.0)))
    else:
        raise RunError("bad_params", f"unknown tail family {family!r}")
    gauge = str(p.get("gauge", "loglog_linear"))
    if gauge == "loglog_linear":
        h = envelope.TestFunction.loglog_linear(float(p.get("c_gauge", 1.0)))
    elif gauge == "power":
        h = envelope.TestFunction.power(float(p.get("gamma", 1.0)), float(p.get("k", 1.0)))
    else:
        raise RunError("bad_params", f"unknown gauge family {gauge!r}")
    verdict = envelope.classify_integral(
        F, h, end=str(p.get("end", "zero")), mode=str(p.get("mode", "upper")),
        budget=int(p.get("budget", 20)),
    )
    write_text(out / "verdict.json", verdict.to_json())
    return ["verdict.json"]


def _op_lil_gauge_table(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    fam = str(p.get("family", "poisson_m"))
    kwargs = {}
    if fam in ("loglog_phi", "loglog_Phi"):
        kwargs = {"K": float(p.get("k_const", 0.5)), "gamma": float(p.get("gamma", 2.0))}
    elif fam in ("logreg_phi", "logreg_theta"):
        kwargs = {"lam": float(p.get("lam", 1.0)), "delta": float(p.get("delta", 1.0))}
    elif fam == "bessel_sqrt":
        kwargs = {"c": float(p.get("c", 1.0)), "squared": bool(p.get("squared", False))}
    g = lil.GaugeSpec(fam, kwargs)
    lo, hi, num = float(p.get("t_lo", 20.0)), float(p.get("t_hi", 1e6)), int(p.get("points", 200))
    ts = np.geomspace(lo, hi, num)
    vals = [lil.gauge_eval(g, float(t)) for t in ts]
    write_text(out / "gauge.csv", table_csv(["t", "gauge"], [ts, vals]))
    return ["gauge.csv"]


def _op_lil_bessel_limsup(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    delta = float(p.get("delta", 3.0))
    params = bessel.BesqParams(delta)
    grid, x, j = bessel.besq_ensemble(
        params,
        t0=float(p.get("t0", 1e4)),
        t_max=float(p.get("t_max", 1e8)),
        ratio=float(p.get("ratio", 2.0)),
        n=spec.replicas,
        seed=spec.seed,
    )
    gauge = lil.GaugeSpec("bessel_sqrt", {"c": float(p.get("c", 1.0))})
    stat = lil.empirical_limsup((grid, np.sqrt(x)), gauge, end="infinity")
    write_text(out / "limsup.json", stat.to_json())
    write_text(out / "windows.csv", stat.window_csv())
    return ["limsup.json", "windows.csv"]


def _op_duality_time_reversal(spec: ExperimentSpec, out: Path) -> list[str]:
    model = _need_model(spec)
    report = conditioned.time_reversal_check(
        model,
        x=float(spec.params.get("x", 1.0)),
        n=spec.replicas,
        seed=spec.seed,
        x0=float(spec.params.get("x0", 1e-2)),
        step=float(spec.params.get("step", 1e-3)),
    )
    write_text(out / "time_reversal.json", dumps_stable(report))
    return ["time_reversal.json"]


def _op_bessel_transitions(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    params = bessel.BesqParams(float(p.get("delta", 3.0)))
    vals = bessel.besq_transition_sample(
        params, float(p.get("x", 0.0)), float(p.get("t", 1.0)),
        spec.seed, spec.replicas,
    )
    write_text(out / "samples.csv", samples_csv(vals))
    write_text(out / "summary.json", dumps_stable(summary_record(vals)))
    return ["samples.csv", "summary.json"]


def _op_bessel_laplace(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    params = bessel.BesqParams(float(p.get("delta", 3.0)))
    lams = np.geomspace(float(p.get("lam_lo", 0.1)), float(p.get("lam_hi", 10.0)),
                        int(p.get("points", 25)))
    s_vals = [bessel.laplace_S1(params, float(l)) for l in lams]
    cols = [lams, s_vals]
    header = ["lambda", "laplace_S1"]
    if params.a > 0:
        header.append("laplace_U1")
        cols.append([bessel.laplace_U1(params, float(l)) for l in lams])
    write_text(out / "laplace.csv", table_csv(header, cols))
    return ["laplace.csv"]


def _op_bessel_gruet_shi(spec: ExperimentSpec, out: Path) -> list[str]:
    p = spec.params
    params = bessel.BesqParams(float(p.get("delta", 3.0)))
    mc = bessel.besq_passage_mc(params, spec.replicas, spec.seed)
    khat = bessel.gruet_shi_fit(params, mc.s1)
    rec = {"delta": params.delta, "n": spec.replicas, "k_hat": khat}
    write_text(out / "gruet_shi.json", dumps_stable(rec))
    write_text(out / "s1_samples.csv", samples_csv(mc.s1))
    return ["gruet_shi.json", "s1_samples.csv"]


_OPS = {
    "simulate.levy_path": _op_levy_path,
    "simulate.lamperti_path": _op_lamperti_path,
    "simulate.construct_zero": _op_construct_zero,
    "passage.s1_direct": lambda s, o: _passage_common(s, o, "s1_direct"),
    "passage.u1_direct": lambda s, o: _passage_common(s, o, "u1_direct"),
    "passage.s1_duality": lambda s, o: _passage_common(s, o, "s1_duality"),
    "passage.u1_duality": lambda s, o: _passage_common(s, o, "u1_duality"),
    "integral_test.classify": _op_integral_test,
    "lil.gauge_table": _op_lil_gauge_table,
    "lil.bessel_limsup": _op_lil_bessel_limsup,
    "duality.time_reversal": _op_duality_time_reversal,
    "bessel.transition_sample": _op_bessel_transitions,
    "bessel.laplace_table": _op_bessel_laplace,
    "bessel.gruet_shi": _op_bessel_gruet_shi,
}


def known_ops() -> list[str]:
    return sorted(_OPS)


def run_experiment(spec: ExperimentSpec) -> dict:
    """Execute one spec; returns the manifest dict.  Raises RunError with a
    machine-readable code on invalid input."""
    if spec.op not in _OPS:
        raise RunError("unknown_op", f"unknown operation {spec.op!r}")
    if spec.replicas < 1:
        raise RunError("bad_params", "replicas must be >= 1")
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        artifacts = _OPS[spec.op](spec, out)
    except RunError:
        raise
    except PssmpError as exc:
        raise RunError("bad_params", str(exc)) from exc
    wall = time.time() - started
    manifest = {
        "spec_sha256": hashlib.sha256(spec.canonical().encode()).hexdigest(),
        "name": spec.name,
        "op": spec.op,
        "seed": spec.seed,
        "code_version": __version__,
        "artifacts": sorted(artifacts),
        "wall_time_s": round(wall, 3),
    }
    write_text(out / "manifest.json", dumps_stable(manifest))
    return manifest

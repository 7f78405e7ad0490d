"""Experiment configuration: INI-style sections [model], [experiment], [output].

Model fields use exactly the names kind, a, sigma, alpha, rate, drift,
horizon, step, seed; experiment fields name the operation, its
parameters, and the replica count.  Values are coerced to bool/int/float
when they parse as such.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DomainError
from .levy import (
    JumpLaw,
    LevyModel,
    brownian_drift,
    compound_poisson_drift,
    spectrally_negative_stable,
    stable_subordinator,
    unit_poisson,
)


def _coerce(s: str):
    low = s.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s.strip()


@dataclass
class ExperimentSpec:
    """Fully deterministic description of one run."""

    name: str
    op: str
    model: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    replicas: int = 1
    seed: int = 0
    out_dir: str = "out"
    fmt: str = "csv"

    def canonical(self) -> str:
        import json

        return json.dumps(
            {
                "name": self.name,
                "op": self.op,
                "model": self.model,
                "params": self.params,
                "replicas": self.replicas,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def load_config(path: str | Path) -> ExperimentSpec:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise DomainError(f"config file {path} not found or unreadable")
    model = {k: _coerce(v) for k, v in cp.items("model")} if cp.has_section("model") else {}
    exp = {k: _coerce(v) for k, v in cp.items("experiment")} if cp.has_section("experiment") else {}
    out = {k: _coerce(v) for k, v in cp.items("output")} if cp.has_section("output") else {}
    if "op" not in exp:
        raise DomainError("config needs [experiment] op = <operation id>")
    op = str(exp.pop("op"))
    name = str(exp.pop("name", Path(path).stem))
    replicas = int(exp.pop("replicas", 1))
    seed = int(exp.pop("seed", model.get("seed", 0)))
    model.pop("seed", None)
    return ExperimentSpec(
        name=name,
        op=op,
        model=model,
        params=exp,
        replicas=replicas,
        seed=seed,
        out_dir=str(out.get("dir", "out")),
        fmt=str(out.get("format", "csv")),
    )


def build_model(model_cfg: dict) -> Optional[LevyModel]:
    """Instantiate the Lévy model named by a [model] section (None if empty)."""
    if not model_cfg:
        return None
    cfg = dict(model_cfg)
    kind = cfg.pop("kind", None)
    if kind is None:
        raise DomainError("[model] section needs a 'kind'")
    cfg.pop("horizon", None)
    cfg.pop("step", None)
    if kind == "brownian_drift":
        return brownian_drift(a=float(cfg.get("a", 0.0)), sigma=float(cfg.get("sigma", 1.0)))
    if kind == "spectrally_negative_stable":
        return spectrally_negative_stable(alpha=float(cfg["alpha"]))
    if kind == "stable_subordinator":
        return stable_subordinator(alpha=float(cfg["alpha"]))
    if kind == "unit_poisson":
        return unit_poisson()
    if kind == "compound_poisson_drift":
        law = JumpLaw(str(cfg.get("jump_law", "exponential")),
                      tuple(float(x) for x in str(cfg.get("jump_params", "1.0")).split()))
        return compound_poisson_drift(rate=float(cfg["rate"]), jump_law=law,
                                      drift=float(cfg.get("drift", 0.0)))
    raise DomainError(f"unknown model kind {kind!r}")

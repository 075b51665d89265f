"""Experiment configuration: TOML schema, ``--set`` overrides, validation.

A config file looks like::

    name = "synth_se"
    T = 100
    trials = 10
    seed = 0                       # trial seeds are seed, seed+1, ...

    [grid]
    kind = "synthetic"             # or "dataset"
    dim = 2
    levels = 11
    lower = -1.0
    upper = 1.0

    [kernel]
    kind = "se"                    # se | matern | linear
    lengthscale = 0.5
    nu = 2.5
    output_scale = 1.0

    [model]
    noise_variance = 1e-4
    refit_every = 0                # 0 = keep hyperparameters fixed

    [ambiguity]
    eta = 0.01
    p_ref = { gaussian = { variance_scale = 0.2 } }   # or "uniform" or { file = "w.csv" }

    [strategy]
    kind = "cdr_variance_reduction"

    [metrics]
    every = 1
    delta = 0.05

    [sweep]
    eta = [0.0, 0.001, 0.01, 0.1]

Dataset grids use ``path``, ``target``, optional ``features``, ``subsample``,
``seed`` and ``delimiter`` under ``[grid]``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .acquisition import StrategyKind
from .errors import ConfigError
from .kernel import KernelKind, KernelSpec

__all__ = ["ExperimentConfig", "GridConfig", "load_config", "apply_overrides", "parse_config", "config_hash"]

DEFAULTS = {
    "name": "experiment",
    "T": 100,
    "trials": 10,
    "seed": 0,
    "grid": {"kind": "synthetic", "dim": 2, "levels": 11, "lower": -1.0, "upper": 1.0},
    "kernel": {"kind": "se", "lengthscale": 0.5, "nu": 2.5, "output_scale": 1.0},
    "model": {"noise_variance": 1e-4, "refit_every": 0},
    "ambiguity": {"eta": 0.0, "p_ref": {"gaussian": {"variance_scale": 0.2}}},
    "strategy": {"kind": "cdr_variance_reduction", "rs_distribution": "uniform"},
    "epig": {"literal_formula": False},
    "metrics": {"delta": 0.05},
    "sweep": {},
}


@dataclass(frozen=True)
class GridConfig:
    kind: str = "synthetic"
    dim: int = 2
    levels: int = 11
    lower: float = -1.0
    upper: float = 1.0
    path: str | None = None
    target: str | None = None
    features: tuple | None = None
    subsample: int | None = None
    seed: int = 0
    delimiter: str = ","


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    T: int
    trials: int
    seed: int
    grid: GridConfig
    kernel: KernelSpec
    noise_variance: float
    refit_every: int
    eta: float
    p_ref: dict
    strategy: StrategyKind
    rs_distribution: str
    epig_literal: bool
    metric_every: int
    delta: float
    sweep: dict = field(default_factory=dict)

    @property
    def is_synthetic(self) -> bool:
        return self.grid.kind == "synthetic"

    def seeds(self) -> list:
        """Trial seeds; ``DRAL_SEED_LIST`` (comma separated) overrides the config."""
        env = os.environ.get("DRAL_SEED_LIST", "").strip()
        if env:
            try:
                return [int(s) for s in env.split(",") if s.strip()]
            except ValueError:
                raise ConfigError("DRAL_SEED_LIST", f"not a comma-separated integer list: {env!r}") from None
        return list(range(self.seed, self.seed + self.trials))

    def to_dict(self) -> dict:
        g = self.grid
        if g.kind == "synthetic":
            grid = {"kind": g.kind, "dim": g.dim, "levels": g.levels, "lower": g.lower, "upper": g.upper}
        else:
            grid = {
                "kind": g.kind, "path": g.path, "target": g.target,
                "features": list(g.features) if g.features is not None else None,
                "subsample": g.subsample, "seed": g.seed, "delimiter": g.delimiter,
            }
        return {
            "name": self.name,
            "T": self.T,
            "trials": self.trials,
            "seed": self.seed,
            "grid": grid,
            "kernel": self.kernel.to_dict(),
            "model": {"noise_variance": self.noise_variance, "refit_every": self.refit_every},
            "ambiguity": {"eta": self.eta, "p_ref": copy.deepcopy(self.p_ref)},
            "strategy": {"kind": self.strategy.value, "rs_distribution": self.rs_distribution},
            "epig": {"literal_formula": self.epig_literal},
            "metrics": {"every": self.metric_every, "delta": self.delta},
            "sweep": copy.deepcopy(self.sweep),
        }

    def replace(self, **changes) -> "ExperimentConfig":
        """Return a re-validated copy with dotted-key overrides applied."""
        raw = self.to_dict()
        for key, value in changes.items():
            _set_dotted(raw, key.replace("__", "."), value)
        return parse_config(raw)


def config_hash(cfg: ExperimentConfig) -> str:
    body = cfg.to_dict()
    body.pop("sweep", None)
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "p_ref":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_dotted(raw: dict, key: str, value):
    parts = key.split(".")
    node = raw
    for p in parts[:-1]:
        nxt = node.get(p)
        if p == "strategy" and isinstance(nxt, str):
            nxt = {"kind": nxt}
            node[p] = nxt
        if not isinstance(nxt, dict):
            nxt = {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = value


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` strings; values are read as TOML literals when possible."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, text = item.split("=", 1)
        _set_dotted(raw, key.strip(), _parse_value(text.strip()))
    return raw


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    raw = apply_overrides(raw, overrides)
    return parse_config(raw, base_dir=path.parent)


def _require(cond, field_name, message):
    if not cond:
        raise ConfigError(field_name, message)


def _number(raw, key, field_name, kind=float):
    value = raw.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field_name, f"expected a number, got {value!r}")
    if kind is int:
        _require(float(value).is_integer(), field_name, f"expected an integer, got {value!r}")
        return int(value)
    _require(math.isfinite(value), field_name, f"expected a finite number, got {value!r}")
    return float(value)


def _resolve_path(p, base_dir):
    if p is None or base_dir is None or os.path.isabs(p):
        return p
    return str((Path(base_dir) / p).resolve())


def parse_config(raw: dict, base_dir=None) -> ExperimentConfig:
    """Validate a raw mapping (defaults filled in). Raises :class:`ConfigError`."""
    raw = dict(raw)
    if isinstance(raw.get("strategy"), str):
        raw["strategy"] = {"kind": raw["strategy"]}
    raw = _merge(DEFAULTS, raw)

    T = _number(raw, "T", "T", int)
    _require(T >= 1, "T", "iteration budget must be at least 1")
    trials = _number(raw, "trials", "trials", int)
    _require(trials >= 1, "trials", "need at least one trial")
    seed = _number(raw, "seed", "seed", int)

    g = raw["grid"]
    kind = str(g.get("kind", "synthetic"))
    _require(kind in ("synthetic", "dataset"), "grid.kind", f"expected 'synthetic' or 'dataset', got {kind!r}")
    if kind == "synthetic":
        dim = _number(g, "dim", "grid.dim", int)
        levels = _number(g, "levels", "grid.levels", int)
        _require(dim >= 1, "grid.dim", "must be >= 1")
        _require(levels >= 1, "grid.levels", "must be >= 1")
        lower = _number(g, "lower", "grid.lower")
        upper = _number(g, "upper", "grid.upper")
        _require(upper >= lower, "grid.upper", "must be >= grid.lower")
        grid = GridConfig(kind=kind, dim=dim, levels=levels, lower=lower, upper=upper)
    else:
        _require(g.get("path"), "grid.path", "dataset grids need a path")
        _require(g.get("target"), "grid.target", "dataset grids need a target column")
        sub = g.get("subsample")
        if sub is not None:
            sub = _number(g, "subsample", "grid.subsample", int)
            _require(sub >= 1, "grid.subsample", "must be >= 1")
        _require(len(str(g.get("delimiter", ","))) == 1, "grid.delimiter", "must be a single character")
        feats = g.get("features")
        _require(feats is None or isinstance(feats, list), "grid.features", "expected a list of column names")
        grid = GridConfig(
            kind=kind,
            path=_resolve_path(str(g["path"]), base_dir),
            target=str(g["target"]),
            features=tuple(str(f) for f in feats) if feats is not None else None,
            subsample=sub,
            seed=_number(g, "seed", "grid.seed", int) if "seed" in g else 0,
            delimiter=str(g.get("delimiter", ",")),
            dim=0, levels=0,
        )

    k = raw["kernel"]
    try:
        kernel = KernelSpec(
            kind=KernelKind.parse(k.get("kind", "se")),
            lengthscale=_number(k, "lengthscale", "kernel.lengthscale"),
            nu=_number(k, "nu", "kernel.nu"),
            output_scale=_number(k, "output_scale", "kernel.output_scale"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        msg = str(exc)
        fld = "kernel.nu" if "smoothness" in msg else "kernel.lengthscale" if "lengthscale" in msg else \
            "kernel.output_scale" if "output_scale" in msg else "kernel.kind"
        raise ConfigError(fld, msg) from None

    m = raw["model"]
    s2 = _number(m, "noise_variance", "model.noise_variance")
    _require(s2 > 0, "model.noise_variance", "must be positive")
    refit = _number(m, "refit_every", "model.refit_every", int)
    _require(refit >= 0, "model.refit_every", "must be >= 0")

    a = raw["ambiguity"]
    eta = _number(a, "eta", "ambiguity.eta")
    _require(eta >= 0, "ambiguity.eta", f"must be >= 0, got {eta}")
    p_ref = _parse_p_ref(a.get("p_ref"), base_dir)

    s = raw["strategy"]
    try:
        strategy = StrategyKind.parse(s.get("kind"))
    except ValueError as exc:
        raise ConfigError("strategy", str(exc)) from None
    rs_dist = str(s.get("rs_distribution", "uniform"))
    _require(rs_dist in ("uniform", "reference"), "strategy.rs_distribution", "expected 'uniform' or 'reference'")

    epig_literal = raw["epig"].get("literal_formula", False)
    _require(isinstance(epig_literal, bool), "epig.literal_formula", "expected true or false")

    mt = raw["metrics"]
    every = mt.get("every", 1 if kind == "synthetic" else 5)
    _require(isinstance(every, int) and not isinstance(every, bool) and every >= 1, "metrics.every", "must be a positive integer")
    delta = _number(mt, "delta", "metrics.delta")
    _require(0 < delta < 1, "metrics.delta", "must lie in (0, 1)")

    sweep = raw.get("sweep") or {}
    _require(isinstance(sweep, dict), "sweep", "expected a table")
    for axis, values in sweep.items():
        _require(axis in ("eta", "strategy", "kernel"), f"sweep.{axis}", "unknown sweep axis")
        _require(isinstance(values, list) and values, f"sweep.{axis}", "expected a nonempty list")

    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        T=T, trials=trials, seed=seed, grid=grid, kernel=kernel,
        noise_variance=s2, refit_every=refit, eta=eta, p_ref=p_ref,
        strategy=strategy, rs_distribution=rs_dist, epig_literal=epig_literal,
        metric_every=every, delta=delta, sweep=copy.deepcopy(sweep),
    )


def _parse_p_ref(spec, base_dir):
    if spec == "uniform" or spec == {"uniform": {}}:
        return {"uniform": {}}
    _require(isinstance(spec, dict) and len(spec) == 1, "ambiguity.p_ref",
             "expected 'uniform', {gaussian = {variance_scale = ...}} or {file = ...}")
    (key, val), = spec.items()
    if key == "gaussian":
        _require(isinstance(val, dict), "ambiguity.p_ref.gaussian", "expected a table")
        vs = _number(val, "variance_scale", "ambiguity.p_ref.gaussian.variance_scale")
        _require(vs > 0, "ambiguity.p_ref.gaussian.variance_scale", "must be positive")
        return {"gaussian": {"variance_scale": vs}}
    if key == "uniform":
        return {"uniform": {}}
    if key == "file":
        _require(isinstance(val, str), "ambiguity.p_ref.file", "expected a path")
        return {"file": _resolve_path(val, base_dir)}
    raise ConfigError("ambiguity.p_ref", f"unknown reference kind {key!r}")

"""Seeded active-learning trials, error metrics and result files."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import select
from .ambiguity import (
    AmbiguitySet,
    DiscreteDistribution,
    gaussian_reference,
    reference_from_csv,
    uniform_reference,
    worst_case_expectation,
)
from .config import ExperimentConfig
from .errors import DatasetError, DralError, StateError
from .gp import GpState, beta_confidence, fit_hyperparameters, sample_prior
from .kernel import gram

log = logging.getLogger(__name__)

__all__ = [
    "Problem",
    "Dataset",
    "TrialRecord",
    "TrialError",
    "TRIAL_COLUMNS",
    "DIAGNOSTIC_COLUMNS",
    "SUMMARY_COLUMNS",
    "synthetic_grid",
    "load_dataset",
    "build_problem",
    "compute_error",
    "compute_diagnostics",
    "c1_constant",
    "run_trial",
    "run_trials",
    "aggregate",
    "write_results",
    "coverage_experiment",
]

TRIAL_COLUMNS = ("trial_seed", "t", "chosen_index", "E_t", "worst_var", "sum_sigma2", "info_gain", "bound_slack_thm2")
DIAGNOSTIC_COLUMNS = (
    "trial_seed", "t", "max_var", "xt_slack", "abs_err_wc", "abs_err_bound",
    "entropy_wc", "entropy_bound", "confidence_bound", "lengthscale", "noise_variance",
)
SUMMARY_COLUMNS = ("t", "mean_E", "stderr_E", "mean_worst_var", "stderr_worst_var")

_VAR_FLOOR = 1e-300


class TrialError(DralError, RuntimeError):
    """A trial failed; carries the seed and iteration where it happened."""

    def __init__(self, seed, t, cause):
        self.seed = seed
        self.t = t
        super().__init__(f"trial seed={seed}, iteration t={t}: {type(cause).__name__}: {cause}")


# -- inputs -----------------------------------------------------------------


def synthetic_grid(dim: int, levels: int, lower: float = -1.0, upper: float = 1.0) -> np.ndarray:
    """Full tensor grid ``{lower, ..., upper}^dim`` with the last coordinate varying fastest."""
    axis = np.linspace(lower, upper, levels)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    features: tuple
    target: str
    rows: np.ndarray  # indices of the selected data rows in the file


def load_dataset(path, subsample=None, seed=0, target_column=None, features=None, delimiter=",") -> Dataset:
    """Read a header-first delimited file and z-score every used column.

    ``features`` defaults to every column except the target. A ``subsample``
    is a seeded draw without replacement; statistics are taken over the
    subsample. Zero-variance columns are only centred.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"cannot open dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if target_column is None:
            target_column = header[-1]
        if target_column not in header:
            raise DatasetError(f"{path}: target column {target_column!r} not in header {header}")
        feats = [h for h in header if h != target_column] if features is None else list(features)
        missing = [f for f in feats if f not in header]
        if missing:
            raise DatasetError(f"{path}: feature columns {missing} not in header")
        cols = [header.index(f) for f in feats] + [header.index(target_column)]
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            values = []
            for c in cols:
                cell = row[c].strip() if c < len(row) else ""
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DatasetError(f"{path}: row {lineno}, column {header[c]!r}: non-numeric or missing value {cell!r}")
                values.append(v)
            data.append(values)
    if not data:
        raise DatasetError(f"{path}: no data rows")
    arr = np.asarray(data, dtype=float)
    rows = np.arange(len(arr))
    if subsample is not None:
        if subsample > len(arr):
            raise ValueError(f"subsample {subsample} exceeds the {len(arr)} rows in {path}")
        rows = np.sort(np.random.default_rng(seed).choice(len(arr), size=subsample, replace=False))
        arr = arr[rows]
    mu = arr.mean(axis=0)
    sd = arr.std(axis=0)
    sd[sd == 0] = 1.0
    arr = (arr - mu) / sd
    return Dataset(X=arr[:, :-1], y=arr[:, -1], features=tuple(feats), target=target_column, rows=rows)


@dataclass
class Problem:
    """Grid, reference distribution and (for datasets) fixed labels shared by all trials."""

    grid: np.ndarray
    p_ref: DiscreteDistribution
    K_grid: np.ndarray
    dataset: Dataset | None = None

    @property
    def n(self) -> int:
        return len(self.grid)


def _reference(cfg: ExperimentConfig, grid) -> DiscreteDistribution:
    spec = cfg.p_ref
    if "gaussian" in spec:
        return gaussian_reference(grid, spec["gaussian"]["variance_scale"])
    if "file" in spec:
        return reference_from_csv(spec["file"], len(grid))
    return uniform_reference(len(grid))


def build_problem(cfg: ExperimentConfig) -> Problem:
    if cfg.is_synthetic:
        g = cfg.grid
        grid = synthetic_grid(g.dim, g.levels, g.lower, g.upper)
        dataset = None
    else:
        g = cfg.grid
        dataset = load_dataset(g.path, g.subsample, g.seed, g.target, g.features, g.delimiter)
        grid = dataset.X
    return Problem(grid=grid, p_ref=_reference(cfg, grid), K_grid=gram(cfg.kernel, grid), dataset=dataset)


# -- metrics ----------------------------------------------------------------


def c1_constant(noise_variance: float) -> float:
    return 2.0 / math.log1p(1.0 / noise_variance)


def compute_error(state: GpState, truth, amb: AmbiguitySet) -> float:
    """Worst-case expected squared error of the posterior mean against ``truth``."""
    if not state.finalized:
        raise StateError("labels not finalized")
    err = (np.asarray(truth, dtype=float) - state.mean_vector()) ** 2
    return worst_case_expectation(amb, err)[0]


def compute_diagnostics(state: GpState, amb: AmbiguitySet, delta: float, truth=None) -> dict:
    """Reported bound quantities for the current posterior.

    Keys: ``worst_var``, ``entropy_bound``, ``confidence_bound``, ``max_var`` and
    ``entropy_wc``; with ``truth`` also ``E``, ``abs_err_bound`` and
    ``abs_err_wc``.
    """
    var = state.var_vector()
    worst_var = worst_case_expectation(amb, var)[0]
    entropy = 0.5 * np.log(2 * math.pi * math.e * np.maximum(var, _VAR_FLOOR))
    out = {
        "worst_var": worst_var,
        "entropy_bound": 0.5 * math.log(2 * math.pi * math.e * max(worst_var, _VAR_FLOOR)),
        "confidence_bound": beta_confidence(state.n, delta) * worst_var,
        "max_var": float(var.max()),
        "entropy_wc": worst_case_expectation(amb, entropy)[0],
    }
    if truth is not None:
        resid = np.asarray(truth, dtype=float) - state.mean_vector()
        E = worst_case_expectation(amb, resid**2)[0]
        out["E"] = E
        out["abs_err_bound"] = math.sqrt(E)
        out["abs_err_wc"] = worst_case_expectation(amb, np.abs(resid))[0]
    return out


# -- trials -----------------------------------------------------------------


@dataclass
class TrialRecord:
    seed: int
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    chosen: list = field(default_factory=list)
    kernel: dict | None = None
    noise_variance: float | None = None


def _streams(seed: int):
    noise, selection = np.random.SeedSequence([int(seed), 0x5EED]).spawn(2)
    return np.random.default_rng(noise), np.random.default_rng(selection)


def run_trial(cfg: ExperimentConfig, seed: int, problem: Problem | None = None) -> TrialRecord:
    """One pass of the selection loop with per-iteration label reveal and metrics.

    Synthetic truth is a prior draw seeded by ``seed``; the first input is
    uniform over the grid, later ones come from the configured strategy.
    """
    problem = problem or build_problem(cfg)
    rng_noise, rng_sel = _streams(seed)
    if cfg.is_synthetic:
        truth = sample_prior(cfg.kernel, problem.grid, seed, K_grid=problem.K_grid).values
    else:
        truth = problem.dataset.y
    amb = AmbiguitySet(problem.p_ref, cfg.eta)
    rs_dist = problem.p_ref if cfg.rs_distribution == "reference" else None
    kernel, s2 = cfg.kernel, cfg.noise_variance
    state = GpState.prior(kernel, s2, problem.grid, problem.K_grid)
    record = TrialRecord(seed=int(seed))
    sum_s2 = 0.0
    t = 0
    try:
        for t in range(1, cfg.T + 1):
            if t == 1:
                j = int(rng_sel.integers(problem.n))
            else:
                j = select(cfg.strategy, state, amb, rng_sel,
                           rs_distribution=rs_dist, epig_literal=cfg.epig_literal)
            threshold = worst_case_expectation(amb, state.var_vector())[0]
            var_j = state.posterior_var(j)
            sum_s2 += var_j
            y = truth[j] + math.sqrt(cfg.noise_variance) * rng_noise.standard_normal() if cfg.is_synthetic else truth[j]
            state = state.extend(j, y)
            record.chosen.append(j)
            if cfg.refit_every and t % cfg.refit_every == 0 and t >= 2:
                X = problem.grid[list(state.observed_indices)]
                kernel, s2, _ = fit_hyperparameters(X, state.labels, kernel)
                state = state.with_hyperparameters(kernel, s2)
            if t % cfg.metric_every and t != cfg.T:
                continue
            d = compute_diagnostics(state, amb, cfg.delta, truth)
            ig = state.information_gain()
            avg = sum_s2 / t
            slack = min(avg - d["worst_var"], c1_constant(state.noise_variance) * ig / t - avg)
            record.rows.append((int(seed), t, j, d["E"], d["worst_var"], sum_s2, ig, slack))
            record.diagnostics.append((
                int(seed), t, d["max_var"], var_j - threshold, d["abs_err_wc"], d["abs_err_bound"],
                d["entropy_wc"], d["entropy_bound"], d["confidence_bound"], kernel.lengthscale, s2,
            ))
    except DralError as exc:
        if isinstance(exc, TrialError):
            raise
        raise TrialError(seed, t, exc) from exc
    except (ArithmeticError, np.linalg.LinAlgError, AssertionError) as exc:
        raise TrialError(seed, t, exc) from exc
    record.kernel = kernel.to_dict()
    record.noise_variance = s2
    return record


def _run_one(args):
    cfg, seed = args
    return run_trial(cfg, seed)


def run_trials(cfg: ExperimentConfig, seeds=None, jobs: int = 1) -> list:
    """Run every seed; ``jobs > 1`` uses a process pool. Output order follows ``seeds``."""
    seeds = cfg.seeds() if seeds is None else list(seeds)
    if jobs and jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    problem = build_problem(cfg)
    return [run_trial(cfg, s, problem) for s in seeds]


def aggregate(records) -> list:
    """Per-iteration mean and standard error (sample std / sqrt(n)) of E_t and the worst-case variance."""
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    ts = [tuple(r[1] for r in rec.rows) for rec in records]
    if any(t != ts[0] for t in ts):
        raise ValueError("records do not share the same iterations")
    E = np.array([[r[3] for r in rec.rows] for rec in records])
    W = np.array([[r[4] for r in rec.rows] for rec in records])
    n = len(records)

    def stderr(a):
        if n == 1:
            return np.zeros(a.shape[1])
        return a.std(axis=0, ddof=1) / math.sqrt(n)

    mE, sE, mW, sW = E.mean(axis=0), stderr(E), W.mean(axis=0), stderr(W)
    return [(t, float(mE[k]), float(sE[k]), float(mW[k]), float(sW[k])) for k, t in enumerate(ts[0])]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_results(out_dir, cfg: ExperimentConfig, records, extra: dict | None = None) -> Path:
    """Write trials.csv, diagnostics.csv, summary.csv and run.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "trials.csv", TRIAL_COLUMNS, [row for rec in records for row in rec.rows])
    _write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS, [row for rec in records for row in rec.diagnostics])
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, aggregate(records))
    meta = {
        "config": cfg.to_dict(),
        "seeds": [rec.seed for rec in records],
        "final_hyperparameters": [
            {"seed": rec.seed, "kernel": rec.kernel, "noise_variance": rec.noise_variance} for rec in records
        ],
    }
    if extra:
        meta.update(extra)
    with open(out / "run.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def coverage_experiment(kernel, noise_variance, grid, delta=0.05, T=50, trials=50, seed=0) -> float:
    """Fraction of trials in which |f - mu_T| <= sqrt(beta) sigma_T holds on the whole grid.

    Designs are uniform draws independent of the noise and of f.
    """
    grid = np.asarray(grid, dtype=float)
    K = gram(kernel, grid)
    beta = beta_confidence(len(grid), delta)
    hits = 0
    for k in range(trials):
        f = sample_prior(kernel, grid, seed + k, K_grid=K).values
        rng = np.random.default_rng([seed + k, 0xC0FE])
        idx = rng.integers(len(grid), size=T)
        y = f[idx] + math.sqrt(noise_variance) * rng.standard_normal(T)
        state = GpState.build(kernel, noise_variance, grid, idx, y, K_grid=K)
        ok = np.abs(f - state.mean_vector()) <= math.sqrt(beta) * np.sqrt(state.var_vector())
        hits += bool(ok.all())
    return hits / trials

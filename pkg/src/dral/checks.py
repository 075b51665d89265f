"""Replay bound inequalities against written results.

Each check returns a :class:`CheckResult`. ``status`` is ``"pass"``,
``"fail"``, ``"info"`` (reported, never fails) or ``"skip"``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .acquisition import StrategyKind
from .config import parse_config
from .harness import build_problem, c1_constant, coverage_experiment

__all__ = ["CheckResult", "check_results_dir", "read_csv"]

# float slack for inequalities that can hold with equality (e.g. t = 1)
REL_TOL = 1e-9
ABS_TOL = 1e-12
XT_TOL = 1e-12
ABS_ERR_TOL = 1e-10
ENTROPY_TOL = 1e-8
COVERAGE_MIN = 0.90


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def line(self) -> str:
        return f"[{self.status.upper():4}] {self.name}: {self.detail}"


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for lineno, row in enumerate(rows, start=2):
        parsed = {}
        for k, v in row.items():
            try:
                parsed[k] = float(v)
            except (TypeError, ValueError):
                raise ValueError(f"{path}: row {lineno}, column {k!r}: not a number: {v!r}") from None
        parsed["_line"] = lineno
        out.append(parsed)
    return out


def _le(a, b, rel=REL_TOL, abs_=ABS_TOL):
    """Slack of a <= b with tolerance; negative means violated."""
    return b - a + abs_ + rel * max(abs(a), abs(b))


def _first_violation(name, rows, slack_fn, what):
    worst = math.inf
    for r in rows:
        s = slack_fn(r)
        worst = min(worst, s)
        if not s >= 0:
            return CheckResult(
                name, "fail",
                f"{what} violated at trial={int(r['trial_seed'])}, t={int(r['t'])} (line {r['_line']}), slack={s:.3e}",
            )
    return CheckResult(name, "pass", f"{len(rows)} rows, min slack {worst:.3e}")


def check_results_dir(path, coverage_trials: int = 50) -> list:
    """Run every applicable check on one run directory."""
    path = Path(path)
    with open(path / "run.json") as fh:
        meta = json.load(fh)
    cfg = parse_config(meta["config"])
    trials = read_csv(path / "trials.csv")
    diags = read_csv(path / "diagnostics.csv")
    if not trials:
        return [CheckResult("trials.csv", "fail", "no rows")]
    results = []
    fixed = cfg.refit_every == 0
    C1 = c1_constant(cfg.noise_variance)
    kind = cfg.strategy

    results.append(_first_violation(
        "nonnegative metrics", trials,
        lambda r: min(r["E_t"], r["worst_var"], r["sum_sigma2"], r["info_gain"]), "E_t, worst_var >= 0",
    ))

    if not fixed:
        results.append(CheckResult("info-gain identity", "skip", "hyperparameters refit during the run"))
    else:
        results.append(_first_violation(
            "info-gain identity", trials,
            lambda r: _le(r["sum_sigma2"], C1 * r["info_gain"]), "sum sigma2_{t-1}(x_t) <= C1 * info_gain",
        ))

    if kind is StrategyKind.CDR_VARIANCE_REDUCTION and fixed:
        results.append(_first_violation(
            "variance chain", trials,
            lambda r: min(_le(r["worst_var"], r["sum_sigma2"] / r["t"]),
                          _le(r["sum_sigma2"] / r["t"], C1 * r["info_gain"] / r["t"])),
            "worst_var <= sum/t <= C1*gain/t",
        ))
        results.append(_first_violation(
            # x_1 is drawn uniformly at random, so the constraint starts at t = 2
            "X_t feasibility", [r for r in diags if r["t"] >= 2], lambda r: r["xt_slack"] + XT_TOL, "sigma2_{t-1}(x_t) >= E_{p_t}[sigma2_{t-1}]",
        ))
    else:
        results.append(CheckResult("variance chain", "skip", f"strategy {kind.value}"))

    if kind is StrategyKind.US and fixed:
        gains = {(r["trial_seed"], r["t"]): r["info_gain"] for r in trials}
        results.append(_first_violation(
            "US max-variance bound", diags,
            lambda r: _le(r["max_var"], C1 * gains[(r["trial_seed"], r["t"])] / r["t"]),
            "max sigma2_T <= C1*gain/T",
        ))

    if kind in (StrategyKind.DR_RANDOM, StrategyKind.RS) and fixed:
        extra = 4 * math.log(1 / cfg.delta) + 8 * math.log(4) + 1
        bad = [r for r in trials if r["worst_var"] > (2 * C1 * r["info_gain"] + extra) / r["t"]]
        results.append(CheckResult(
            "random-design bound (informational)", "info",
            f"{len(bad)} of {len(trials)} rows exceed (2*C1*gain + 4log(1/delta) + 8log4 + 1)/T "
            "using the chosen-set gain in place of the maximum information gain",
        ))

    results.append(_first_violation(
        "absolute-error bound", diags,
        lambda r: r["abs_err_bound"] - r["abs_err_wc"] + ABS_ERR_TOL, "wc E|f-mu| <= sqrt(E_t)",
    ))
    results.append(_first_violation(
        "entropy bound", diags,
        lambda r: r["entropy_bound"] - r["entropy_wc"] + ENTROPY_TOL, "wc entropy <= 0.5 log(2 pi e worst_var)",
    ))

    if cfg.is_synthetic and coverage_trials > 0:
        problem = build_problem(cfg)
        frac = coverage_experiment(cfg.kernel, cfg.noise_variance, problem.grid, delta=0.05,
                                   T=50, trials=coverage_trials, seed=cfg.seed)
        status = "pass" if frac >= COVERAGE_MIN else "fail"
        results.append(CheckResult(
            "confidence coverage", status,
            f"{frac:.2%} of {coverage_trials} trials inside the delta=0.05 band (need >= {COVERAGE_MIN:.0%})",
        ))
    else:
        results.append(CheckResult("confidence coverage", "skip", "needs a synthetic grid with a known prior"))
    return results


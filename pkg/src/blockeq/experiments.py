"""Monte Carlo campaigns: sample, diagonalise, evolve, aggregate, compare."""
from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from blockeq.config import ExperimentConfig
from blockeq.dynamics import (
    Accumulator,
    CurveSeries,
    check_grid,
    eigendecompose,
    haar_state,
    overlap_matrices,
    series_from_accumulator,
    state_curves,
    time_average_table,
    trace_curves,
)
from blockeq.ensemble import Model, sample_hamiltonian
from blockeq.errors import BlockEqError, CampaignFailed, ConfigError, GridMismatch
from blockeq.theory.asymptotics import approach_direction, asymptotic_prediction
from blockeq.theory.series import theory_w_table

log = logging.getLogger(__name__)


@dataclass
class TrialResult:
    trial: int
    seed: int
    curves: dict = field(default_factory=dict)
    M: np.ndarray | None = None
    spectrum: tuple[float, float] = (math.nan, math.nan)
    error: str | None = None


@dataclass
class CampaignResult:
    config: ExperimentConfig
    times: np.ndarray
    curves: dict  # (mu, nu) -> CurveSeries
    M_tables: list
    spectra: list  # (seed, min eigenvalue, max eigenvalue)
    failures: list
    seeds: list
    wall_clock: float

    @property
    def completed(self) -> int:
        return len(self.seeds) - len(self.failures)


def _worker_count(requested: int) -> int:
    return requested if requested > 0 else (os.cpu_count() or 1)


def _run_trial(cfg: ExperimentConfig, profile, trial: int, times, sampler) -> TrialResult:
    seed = cfg.seed_base + trial
    out = TrialResult(trial, seed)
    try:
        sample = sampler(profile, seed, cfg.entry_law)
        eig = eigendecompose(sample)
        out.spectrum = (float(eig.values[0]), float(eig.values[-1]))
        if cfg.mode == "trace":
            out.curves = trace_curves(eig, cfg.pairs, times, overlap_matrices(eig))
        elif cfg.mode == "state":
            for mu in sorted({p[0] for p in cfg.pairs}):
                nus = [nu for m, nu in cfg.pairs if m == mu]
                values = state_curves(eig, haar_state(profile.decomp, mu, seed), nus, times)
                out.curves.update({(mu, nu): v for nu, v in values.items()})
        else:
            out.M = time_average_table(eig, cfg.tol("degeneracy_tol"))
    except (BlockEqError, np.linalg.LinAlgError, FloatingPointError) as exc:
        out.error = f"trial {trial} (seed {seed}): {type(exc).__name__}: {exc}"
    return out


def run_campaign(cfg: ExperimentConfig, threads: int | None = None, sampler=sample_hamiltonian) -> CampaignResult:
    """Run every trial of a campaign and reduce the results.

    Trials are independent (seed ``seed_base + trial``) and run on a thread
    pool; the reduction walks trials in index order so the output does not
    depend on scheduling.
    """
    profile = cfg.profile()
    times = check_grid(cfg.times()) if cfg.mode != "typicality" else np.array([])
    workers = _worker_count(cfg.threads if threads is None else threads)
    start = time.perf_counter()
    if workers == 1:
        results = [_run_trial(cfg, profile, k, times, sampler) for k in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda k: _run_trial(cfg, profile, k, times, sampler), range(cfg.trials)))

    failures = [r.error for r in results if r.error]
    for msg in failures:
        log.warning("excluded %s", msg)
    if len(failures) > cfg.tol("failure_rate") * cfg.trials:
        raise CampaignFailed(f"{len(failures)} of {cfg.trials} trials failed: {failures[0]}")

    good = [r for r in results if r.error is None]
    curves = {}
    if cfg.mode != "typicality":
        for pair in cfg.pairs:
            acc = Accumulator(times.size)
            for r in good:
                acc.add(r.curves[pair])
            curves[pair] = series_from_accumulator(acc, times, pair, cfg.mode)
    return CampaignResult(
        cfg,
        times,
        curves,
        [r.M for r in good if r.M is not None],
        [(r.seed, *r.spectrum) for r in good],
        failures,
        [r.seed for r in results],
        time.perf_counter() - start,
    )


def run_curves(cfg: ExperimentConfig, threads: int | None = None, sampler=sample_hamiltonian) -> dict:
    if cfg.mode == "typicality":
        raise ConfigError("run_curves needs mode state or trace")
    return run_campaign(cfg, threads, sampler).curves


# --- reports -------------------------------------------------------------------


@dataclass
class Criterion:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)
        if self.threshold is not None:
            self.threshold = float(self.threshold)


@dataclass
class ComparisonReport:
    criteria: list = field(default_factory=list)
    gaps: dict = field(default_factory=dict)
    signs: dict = field(default_factory=dict)
    typicality: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def add(self, *args, **kwargs) -> Criterion:
        c = Criterion(*args, **kwargs)
        self.criteria.append(c)
        return c

    def merge(self, other: "ComparisonReport") -> "ComparisonReport":
        self.criteria += other.criteria
        self.gaps.update(other.gaps)
        self.signs.update(other.signs)
        self.typicality.update(other.typicality)
        self.metadata.update(other.metadata)
        return self

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "criteria": [c.__dict__ for c in self.criteria],
            "gaps": self.gaps,
            "signs": self.signs,
            "typicality": self.typicality,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj)}")


def _pair_key(pair) -> str:
    return f"{pair[0]},{pair[1]}"


def spectrum_check(result: CampaignResult, report: ComparisonReport) -> None:
    cfg = result.config
    bound = cfg.tol("spectrum_bound")
    if cfg.profile().N < cfg.tol("spectrum_min_N"):
        return
    bad = [seed for seed, lo, hi in result.spectra if lo < -bound or hi > bound]
    worst = max((max(-lo, hi) for _, lo, hi in result.spectra), default=0.0)
    report.add("spectrum_containment", not bad, worst, bound, f"violations at seeds {bad}" if bad else "")


def run_typicality(cfg: ExperimentConfig, threads: int | None = None, sampler=sample_hamiltonian) -> ComparisonReport:
    """Normal typicality: ``sqrt(N) |M_{mu nu} - d_nu/N|`` over all pairs and trials."""
    if cfg.mode != "typicality":
        cfg = cfg.with_overrides(["experiment.mode=typicality"])
    result = run_campaign(cfg, threads, sampler)
    profile = cfg.profile()
    N = profile.N
    eq = np.asarray(profile.dims, dtype=float) / N
    report = ComparisonReport(metadata=_metadata(result))
    tables = np.array(result.M_tables)
    scaled = math.sqrt(N) * np.abs(tables - eq[None, None, :])
    row_err = float(np.max(np.abs(tables.sum(axis=2) - 1.0)))
    report.typicality = {
        "N": N,
        "equilibrium": eq.tolist(),
        "mean_M": tables.mean(axis=0).tolist(),
        "max_scaled_deviation": float(scaled.max()),
        "max_scaled_by_pair": scaled.max(axis=0).tolist(),
        "row_sum_error": row_err,
        "trials": int(tables.shape[0]),
    }
    limit = cfg.tol("typicality_max")
    report.add("normal_typicality", float(scaled.max()) <= limit, float(scaled.max()), limit)
    report.add("M_row_sums", row_err <= 1e-12, row_err, 1e-12)
    spectrum_check(result, report)
    return report


def theory_curves(model, lam: float, times, pairs, tol: float = 1e-14) -> dict:
    """Deterministic ``w_{mu nu}`` on a grid, one table evaluation per time point."""
    times = np.asarray(times, dtype=float)
    tables = np.array([theory_w_table(Model(model).value, lam, t, tol) for t in times])
    return {pair: tables[:, pair[0] - 1, pair[1] - 1] for pair in pairs}


def compare_to_theory(curves: dict, cfg: ExperimentConfig, theory: dict | None = None, times=None) -> ComparisonReport:
    """Sup-norm gaps to the theory series and late-window approach directions.

    ``curves`` maps pairs to ``CurveSeries``; ``theory`` (optional) maps pairs
    to arrays on ``times``. Missing theory is computed on the curve grid.
    """
    if cfg.model is Model.THREE and cfg.delta is not None and cfg.delta != cfg.lam:
        raise ConfigError("three-block theory needs delta = lambda")
    grids = [c.times for c in curves.values()]
    grid = grids[0]
    for g in grids[1:]:
        if g.shape != grid.shape or np.any(g != grid):
            raise GridMismatch("curves do not share one time grid")
    if theory is None:
        theory = theory_curves(cfg.model, cfg.lam, grid, list(curves), cfg.tol("series_tol"))
    elif times is not None and (np.shape(times) != grid.shape or np.any(np.asarray(times) != grid)):
        raise GridMismatch("theory and curves use different time grids")

    rel = np.array([cfg.lam, 1.0]) if cfg.model is Model.TWO else np.array([cfg.lam**2, cfg.lam, 1.0])
    eq = rel / rel.sum()
    report = ComparisonReport()
    late = grid >= grid[-1] * (1.0 - cfg.tol("late_fraction"))
    sup_limit = cfg.tol("sup_gap")
    for pair, series in curves.items():
        mu, nu = pair
        gap = float(np.max(np.abs(series.mean - theory[pair])))
        report.gaps[_pair_key(pair)] = gap
        if series.mode == "trace":
            report.add(f"sup_gap_{mu}{nu}", gap <= sup_limit, gap, sup_limit)
        if mu == nu:
            continue
        offset = float(np.mean(series.mean[late] - eq[nu - 1]))
        predicted = approach_direction(cfg.model.value, mu, nu)
        observed = 1 if offset > 0 else -1
        report.signs[_pair_key(pair)] = {"late_mean_offset": offset, "observed": observed, "predicted": predicted}
        if series.mode == "state":
            report.add(f"approach_sign_{mu}{nu}", observed == predicted, offset, 0.0, "above" if predicted > 0 else "below")

    peak_pair = (1, 2)
    if cfg.model is Model.THREE and peak_pair in curves and curves[peak_pair].mode == "state":
        lo, hi = cfg.peak_window()
        series = curves[peak_pair]
        i = int(np.argmax(series.mean))
        t_peak, v_peak = float(grid[i]), float(series.mean[i])
        in_window = lo / cfg.lam <= t_peak <= hi / cfg.lam
        high = v_peak >= cfg.tol("peak_factor") * eq[1]
        report.add(
            "transient_peak_12",
            bool(in_window and high),
            v_peak,
            cfg.tol("peak_factor") * eq[1],
            f"peak at t={t_peak:.3f}, window [{lo / cfg.lam:.3g}, {hi / cfg.lam:.3g}]",
        )
    return report


def _metadata(result: CampaignResult) -> dict:
    cfg = result.config
    return {
        "name": cfg.name,
        "model": cfg.model.value,
        "lambda": cfg.lam,
        "N": cfg.profile().N,
        "entry_law": cfg.entry_law.value,
        "mode": cfg.mode,
        "trials": cfg.trials,
        "completed": result.completed,
        "failures": result.failures,
        "seeds": result.seeds,
        "wall_clock_s": result.wall_clock,
    }


def campaign_report(result: CampaignResult) -> ComparisonReport:
    report = compare_to_theory(result.curves, result.config)
    report.metadata = _metadata(result)
    spectrum_check(result, report)
    return report


# --- output bundles ------------------------------------------------------------


def asymptotic_columns(cfg: ExperimentConfig, pair, times) -> tuple[np.ndarray, np.ndarray]:
    preds = [asymptotic_prediction(cfg.model.value, "w", pair[0], pair[1], cfg.lam, t) for t in times]
    values = np.array([p.value if t > 0 else np.nan for p, t in zip(preds, times)])
    return values, np.array([p.valid for p in preds])


def bundle_files(result: CampaignResult, report: ComparisonReport | None = None) -> dict:
    """File name -> text for every output of one campaign."""
    cfg = result.config
    name = cfg.name
    files = {}
    for (mu, nu), series in result.curves.items():
        files[f"{name}_{series.mode}_{mu}{nu}.csv"] = series.to_csv()
    if result.curves:
        theory = theory_curves(cfg.model, cfg.lam, result.times, list(result.curves), cfg.tol("series_tol"))
        header = ["t"]
        columns = [result.times]
        for pair, series in result.curves.items():
            tag = f"{pair[0]}{pair[1]}"
            asym, _ = asymptotic_columns(cfg, pair, result.times)
            header += [f"mean_{tag}", f"stderr_{tag}", f"theory_{tag}", f"asymptotic_{tag}", f"equilibrium_{tag}"]
            eq = asymptotic_prediction(cfg.model.value, "w", pair[0], pair[1], cfg.lam, 1.0).equilibrium
            columns += [series.mean, series.stderr, theory[pair], asym, np.full(result.times.size, eq)]
        lines = [",".join(header)]
        for row in zip(*columns):
            lines.append(",".join(repr(float(v)) for v in row))
        files[f"{name}_figure.csv"] = "\n".join(lines) + "\n"
    files[f"{name}_config.ini"] = cfg.to_ini()
    if report is not None:
        files[f"{name}_report.json"] = report.to_json() + "\n"
    return files


def write_files(out_dir, files: dict, force: bool = False) -> list[Path]:
    """Write outputs, refusing to replace existing files unless ``force``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    targets = [out / name for name in files]
    clash = [p for p in targets if p.exists()]
    if clash and not force:
        raise FileExistsError(f"refusing to overwrite {clash[0]} (use --force)")
    for path, text in zip(targets, files.values()):
        path.write_text(text)
    return targets


def load_curves(directory, name: str) -> dict:
    """Read back the per-pair CSVs written for campaign ``name``."""
    curves = {}
    for path in sorted(Path(directory).glob(f"{name}_*_*.csv")):
        if path.stem.endswith("_figure"):
            continue
        series = CurveSeries.from_csv(path.read_text())
        curves[series.pair] = series
    return curves

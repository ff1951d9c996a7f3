"""Sweeps over (kappa, |alpha|^2): series -> embedding -> network -> metrics."""

from __future__ import annotations

import json
import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .dynamics import (
    InitialState,
    MeanPhotonSeries,
    ModelParams,
    TimeGrid,
    mean_photon_series,
    truncation_bound,
)
from .embedding import (
    EmbeddingParams,
    attractor_spread,
    embed,
    first_minimum_lag,
    fnn_embedding_dimension,
    rescale,
    uniform_deviate,
)
from .metrics import compute_metrics
from .recnet import build_network, critical_epsilon

log = logging.getLogger(__name__)

REFERENCE_KAPPAS = (0.0, 0.0012, 0.0032, 0.0033, 0.0034, 0.07, 0.1)
SPECIAL_KAPPA = {20.0: 0.0066, 25.0: 0.0033, 30.0: 0.0024}
KAPPA_STEP = 0.0001

LONG_GRID = TimeGrid(10000.0, 1.0, 25000)
SHORT_GRID = TimeGrid(0.0, 0.5, 20000)
COLLAPSE_WINDOW = (3000.0, 9000.0)
REFERENCE_WINDOW = (0.0, 1000.0)

# Frozen from the calibration runs at |alpha|^2 = 25, chi = 5 (kappa = 0, 0.002,
# 0.0033): boundaries are geometric means of neighbouring class ratios.
COLLAPSE_THRESHOLD = 0.064
SPREAD_THRESHOLD = 0.45


def default_kappa_grid() -> list[float]:
    """Reference-table values, 20 log-spaced points per decade on [1e-3, 1e-1], and kappa* +- one step."""
    grid = {float(k) for k in REFERENCE_KAPPAS}
    grid.update(float(f"{v:.4g}") for v in np.logspace(-3, -1, 41))
    for k in SPECIAL_KAPPA.values():
        grid.update(round(k + s * KAPPA_STEP, 6) for s in (-1, 0, 1))
    return sorted(grid)


@dataclass
class SweepConfig:
    alpha_sq: list[float] = field(default_factory=lambda: [25.0])
    kappa: list[float] = field(default_factory=default_kappa_grid)
    chi: float = 5.0
    short_grid: TimeGrid = SHORT_GRID
    long_grid: TimeGrid = LONG_GRID
    tail_eps: float = 1e-12
    eps_resolution: float = 0.005
    eps_multipliers: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])
    mi_bins: int = 32
    max_lag: int = 200
    d_max: int = 10
    apl_exact_limit: int = 5000
    apl_sources: int = 1000
    seed: int = 0
    output_dir: str = "recnetq-out"
    cache_dir: str | None = None
    workers: int = 1
    dump_edges: bool = False
    collapse_threshold: float = COLLAPSE_THRESHOLD
    spread_threshold: float = SPREAD_THRESHOLD

    def __post_init__(self):
        if isinstance(self.short_grid, dict):
            self.short_grid = TimeGrid(**self.short_grid)
        if isinstance(self.long_grid, dict):
            self.long_grid = TimeGrid(**self.long_grid)
        self.alpha_sq = [float(a) for a in self.alpha_sq]
        self.kappa = [float(k) for k in self.kappa]
        if any(not 0.0 <= k <= 1.0 for k in self.kappa):
            raise ValueError("kappa values must lie in [0, 1]")
        if any(m < 1.0 for m in self.eps_multipliers):
            raise ValueError("epsilon multipliers must be >= 1 (scans start at eps_c)")

    @property
    def long_grid_overridden(self) -> bool:
        return self.long_grid != LONG_GRID

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        data = json.loads(Path(path).read_text())
        data.pop("long_grid_overridden", None)  # derived, written for the record only
        return cls(**data)

    def to_dict(self) -> dict:
        d = io._plain(self)
        d["long_grid_overridden"] = self.long_grid_overridden
        return d

    def result_dict(self) -> dict:
        """Settings that can change results; paths and worker count are left out."""
        d = self.to_dict()
        for k in ("output_dir", "cache_dir", "workers"):
            d.pop(k, None)
        return d


@dataclass
class ShortTimeStats:
    window: tuple[float, float]
    window_mean: float
    window_std: float
    reference_std: float
    ratio: float
    classification: str


@dataclass
class CellResult:
    kappa: float
    alpha_sq: float
    status: str = "ok"
    error: str | None = None
    series_key: str | None = None
    cache_hit: bool = False
    t_d: int | None = None
    t_d_clear_minimum: bool | None = None
    d_emb: int | None = None
    d_emb_converged: bool | None = None
    fnn_fractions: list[float] | None = None
    n_vectors: int | None = None
    epsilon_c: float | None = None
    l2_at_c: float | None = None
    l2_converged: bool | None = None
    eps_probes: list | None = None
    attractor_spread: float | None = None
    scans: list[dict] = field(default_factory=list)
    short: ShortTimeStats | None = None
    timing: dict = field(default_factory=dict, repr=False)

    def at_critical(self) -> dict | None:
        return self.scans[0] if self.scans else None


def window_stats(series: MeanPhotonSeries, window: tuple[float, float]) -> tuple[float, float]:
    t = series.times
    sel = series.values[(t >= window[0]) & (t <= window[1])]
    if sel.size == 0:
        raise ValueError(f"window {window} has no samples")
    return float(sel.mean()), float(sel.std())


def classify_short_time(ratio: float, collapse_threshold: float, spread_threshold: float) -> str:
    if ratio < collapse_threshold:
        return "collapsed"
    if ratio > spread_threshold:
        return "spread"
    return "pinched"


def _series(cfg: SweepConfig, kappa: float, alpha_sq: float, grid: TimeGrid):
    params = ModelParams(chi=cfg.chi, kappa=kappa)
    init = InitialState(alpha_sq)
    trunc = truncation_bound(alpha_sq, cfg.tail_eps)
    directory = io.cache_dir(cfg.cache_dir)
    return io.cached_series(lambda: mean_photon_series(params, init, trunc, grid), params, init, trunc, grid, directory)


def short_time_stats(cfg: SweepConfig, series: MeanPhotonSeries) -> ShortTimeStats:
    mean, std = window_stats(series, COLLAPSE_WINDOW)
    _, ref = window_stats(series, REFERENCE_WINDOW)
    ratio = std / ref if ref > 0 else 0.0
    return ShortTimeStats(
        COLLAPSE_WINDOW, mean, std, ref, ratio, classify_short_time(ratio, cfg.collapse_threshold, cfg.spread_threshold)
    )


def short_time_report(cfg: SweepConfig, kappa: float, alpha_sq: float, out_dir=None):
    """Windowed statistics of the short-time series plus the series itself."""
    series, _, _ = _series(cfg, kappa, alpha_sq, cfg.short_grid)
    stats = short_time_stats(cfg, series)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_csv(out_dir / "series_short.csv", ["tau", "n1"], [series.times, series.values])
        io.write_json(out_dir / "short_time.json", stats)
    return stats, series


def cell_dir(cfg: SweepConfig, kappa: float, alpha_sq: float) -> Path:
    return Path(cfg.output_dir) / f"alpha_sq_{alpha_sq:g}" / f"kappa_{kappa:.6g}"


def run_cell(cfg: SweepConfig, kappa: float, alpha_sq: float, write: bool = True) -> CellResult:
    """Run one (kappa, |alpha|^2) cell end to end; failures are recorded, not raised."""
    res = CellResult(kappa=kappa, alpha_sq=alpha_sq)
    out = cell_dir(cfg, kappa, alpha_sq)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    clock = time.perf_counter
    try:
        t = clock()
        short, _ = short_time_report(cfg, kappa, alpha_sq, out if write else None)
        res.short = short
        series, hit, key = _series(cfg, kappa, alpha_sq, cfg.long_grid)
        res.series_key, res.cache_hit = key, hit
        res.timing["series"] = clock() - t

        t = clock()
        y = rescale(series.values)
        u = uniform_deviate(y)
        lag = first_minimum_lag(u, cfg.max_lag, cfg.mi_bins)
        dim = fnn_embedding_dimension(u, lag.t_d, cfg.d_max)
        res.t_d, res.t_d_clear_minimum = lag.t_d, lag.clear_minimum
        res.d_emb, res.d_emb_converged = dim.d_emb, dim.converged
        res.fnn_fractions = list(dim.fractions)
        vs = embed(u, EmbeddingParams(lag.t_d, dim.d_emb))
        res.n_vectors = len(vs)
        res.attractor_spread = attractor_spread(u, lag.t_d)
        res.timing["embedding"] = clock() - t

        t = clock()
        search = critical_epsilon(vs, cfg.eps_resolution)
        res.epsilon_c, res.l2_at_c, res.l2_converged = search.epsilon_c, search.l2_at_c, search.l2_converged
        res.eps_probes = [list(p) for p in search.probes]
        res.timing["epsilon_c"] = clock() - t

        t = clock()
        for mult in cfg.eps_multipliers:
            eps = round(search.epsilon_c * mult, 12)
            net = build_network(vs, eps)
            rep = compute_metrics(net, cfg.apl_exact_limit, cfg.apl_sources, cfg.seed)
            summary = rep.summary()
            summary["multiplier"] = mult
            res.scans.append(summary)
            if write and mult == cfg.eps_multipliers[0]:
                io.write_degree_hist(out / "degree_hist.csv", rep.degree_histogram)
                if cfg.dump_edges:
                    io.write_edge_list(out / "edges.txt", net, key)
        res.timing["metrics"] = clock() - t

        if write:
            io.write_json(
                out / "embedding.json",
                {
                    "t_d": lag.t_d,
                    "d_emb": dim.d_emb,
                    "bins": cfg.mi_bins,
                    "flags": {"no_clear_mi_minimum": not lag.clear_minimum, "fnn_not_converged": not dim.converged},
                    "mutual_information": lag.mi,
                    "fnn_fractions": dim.fractions,
                    "n_vectors": len(vs),
                },
            )
            np.save(out / "vectors.npy", vs)
            io.write_csv(
                out / "delay_plot.csv",
                ["y", "y_lag", "u", "u_lag"],
                [y[: -lag.t_d], y[lag.t_d :], u[: -lag.t_d], u[lag.t_d :]],
            )
    except Exception as err:  # a failed cell must not abort the sweep
        res.status = "failed"
        res.error = f"{type(err).__name__}: {err}"
        log.warning("cell kappa=%g alpha_sq=%g failed: %s", kappa, alpha_sq, res.error)
        log.debug("%s", traceback.format_exc())
    if write:
        io.write_json(out / "metrics.json", cell_record(res))
        io.write_json(out / "timing.json", {**res.timing, "cache_hit": res.cache_hit})
    return res


def cell_record(res: CellResult) -> dict:
    d = io._plain(res)
    # run-dependent fields live in timing.json so metrics.json is reproducible byte for byte
    d.pop("timing")
    d.pop("cache_hit")
    return d


def _run_cell_args(args):
    return run_cell(*args)


def _argmax(rows: list[CellResult], key: str) -> float | None:
    best = None
    for r in rows:
        if r.status != "ok":
            continue
        v = r.at_critical()[key]
        if best is None or v > best[1]:
            best = (r.kappa, v)
    return None if best is None else best[0]


def run_sweep(cfg: SweepConfig) -> dict:
    """All cells of ``cfg``; writes per-|alpha|^2 summaries and ``MANIFEST.json``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, k, a) for a in cfg.alpha_sq for k in cfg.kappa]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_cell_args, jobs))
    else:
        results = [run_cell(*j) for j in jobs]

    summary = {"config": cfg.result_dict(), "alpha_sq": {}, "failed": []}
    for a in cfg.alpha_sq:
        rows = sorted((r for r in results if r.alpha_sq == a), key=lambda r: r.kappa)
        crit = [r.at_critical() if r.status == "ok" else None for r in rows]
        io.write_csv(
            out / f"summary_alpha_sq_{a:g}.csv",
            ["kappa", "status", "cc", "transitivity", "epsilon_c", "t_d", "d_emb", "short_class"],
            [
                [r.kappa for r in rows],
                [r.status for r in rows],
                [c["global_cc"] if c else math.nan for c in crit],
                [c["transitivity"] if c else math.nan for c in crit],
                [r.epsilon_c if r.epsilon_c is not None else math.nan for r in rows],
                [r.t_d if r.t_d is not None else "" for r in rows],
                [r.d_emb if r.d_emb is not None else "" for r in rows],
                [r.short.classification if r.short else "" for r in rows],
            ],
        )
        summary["alpha_sq"][f"{a:g}"] = {
            "argmax_kappa_cc": _argmax(rows, "global_cc"),
            "argmax_kappa_transitivity": _argmax(rows, "transitivity"),
            "n_cells": len(rows),
        }
        summary["failed"] += [{"kappa": r.kappa, "alpha_sq": r.alpha_sq, "error": r.error} for r in rows if r.status != "ok"]
    io.write_json(out / "summary.json", summary)
    write_manifest(cfg, results)
    return {"results": results, "summary": summary}


def write_manifest(cfg: SweepConfig, results: list[CellResult]) -> Path:
    out = Path(cfg.output_dir)
    entries = []
    cfg_hash = io.input_hash(cfg.result_dict())
    by_dir = {cell_dir(cfg, r.kappa, r.alpha_sq).resolve(): r for r in results}
    for path in sorted(p for p in out.rglob("*") if p.is_file() and p.name not in ("MANIFEST.json", "timing.json")):
        cell = by_dir.get(path.parent.resolve())
        entries.append(
            {
                "path": str(path.relative_to(out)),
                "sha256": io.file_sha256(path),
                "input_hash": cell.series_key if cell is not None and cell.series_key else cfg_hash,
            }
        )
    return io.write_json(out / "MANIFEST.json", {"config_hash": cfg_hash, "artifacts": entries})


def with_overrides(cfg: SweepConfig, **kw) -> SweepConfig:
    return replace(cfg, **kw)

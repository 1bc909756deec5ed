"""Batch execution: one engine run per (policy, routing, alpha, deadline, seed)."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from rtsim.config import ScenarioConfig
from rtsim.metrics import CSV_FIELDS, Summary, csv_row, summary_warning
from rtsim.network import RunKey, run_once

log = logging.getLogger(__name__)


class RunError(RuntimeError):
    def __init__(self, key: RunKey, cause: BaseException):
        self.key = key
        super().__init__(f"run failed at deadline={key.deadline:g} seed={key.seed} "
                         f"({key.policy.value}/{key.protocol}/alpha={key.alpha:g}): {cause}")


@dataclass(frozen=True)
class RunResult:
    key: RunKey
    summary: Summary


def run_keys(cfg: ScenarioConfig) -> list[RunKey]:
    """Runs in output order: policy, routing, alpha, deadline, then seed."""
    return [RunKey(p, r, a, d, s) for p, r, a, d, s in itertools.product(
        cfg.policies, cfg.protocols, cfg.alphas, cfg.deadlines, cfg.seeds)]


def _run_one(args: tuple[ScenarioConfig, RunKey]) -> RunResult:
    cfg, key = args
    try:
        summary, _ = run_once(cfg, key)
    except Exception as exc:  # surfaced with the offending sweep point
        raise RunError(key, exc) from exc
    return RunResult(key, summary)


def run_batch(cfg: ScenarioConfig, jobs: int = 1,
              keys: Optional[Sequence[RunKey]] = None) -> list[RunResult]:
    keys = run_keys(cfg) if keys is None else list(keys)
    if jobs <= 1 or len(keys) <= 1:
        results = []
        for key in keys:
            res = _run_one((cfg, key))
            log.info("%s %s a=%g d=%g seed=%d miss=%.4f drop=%.4f", key.policy.value,
                     key.protocol, key.alpha, key.deadline, key.seed,
                     res.summary.miss_ratio, res.summary.drop_ratio)
            results.append(res)
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so output stays deterministic
        return list(pool.map(_run_one, [(cfg, k) for k in keys]))


def format_csv(cfg: ScenarioConfig, results: Iterable[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for res in results:
        k = res.key
        writer.writerow(csv_row(res.summary, cfg.name, k.policy.value, k.protocol,
                                k.deadline, k.alpha, k.seed))
    return buf.getvalue()


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def plot_data(results: Sequence[RunResult]) -> dict[str, str]:
    """Per (policy, routing, alpha) series: ``deadline mean_miss std_miss mean_drop std_drop``."""
    groups: dict[tuple, dict[float, list[Summary]]] = {}
    for res in results:
        k = res.key
        groups.setdefault((k.policy.value, k.protocol, k.alpha), {}) \
              .setdefault(k.deadline, []).append(res.summary)
    files = {}
    for (policy, protocol, alpha), by_deadline in groups.items():
        lines = []
        for deadline, sums in by_deadline.items():
            mm, sm = _mean_std([s.miss_ratio for s in sums])
            md, sd = _mean_std([s.drop_ratio for s in sums])
            lines.append(f"{deadline:g} {mm:.6f} {sm:.6f} {md:.6f} {sd:.6f}")
        files[f"{policy}_{protocol}_a{alpha:g}.dat"] = "\n".join(lines) + "\n"
    return files


def run_experiment(cfg: ScenarioConfig, out_dir: Optional[str | Path] = None,
                   jobs: int = 1) -> tuple[str, dict[str, str]]:
    """Run the whole sweep; returns the CSV text and plot-data files (name -> text).

    With ``out_dir`` both are also written there as ``<scenario>.csv`` and
    ``<scenario>_<policy>_<routing>_a<alpha>.dat``.
    """
    results = run_batch(cfg, jobs)
    for res in results:
        warning = summary_warning(res.summary)
        if warning:
            log.warning("%s seed %d: %s", cfg.name, res.key.seed, warning)
    text = format_csv(cfg, results)
    plots = plot_data(results)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.name}.csv").write_text(text)
        for name, body in plots.items():
            (out / f"{cfg.name}_{name}").write_text(body)
    return text, plots

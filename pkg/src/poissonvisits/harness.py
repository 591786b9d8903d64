"""Experiment orchestration: config parsing, scan runs, result persistence.

A scan walks centers x radii for one system: estimates the ball measure,
samples visit counts, measures the TV distance to Poisson(t), runs
bad-center detection, and evaluates the error-bound grid with Monte-Carlo
R1/R2.  Rows are independent jobs; output order is fixed by row key so files
are byte-identical for a given (config, seed) regardless of worker count.
"""
from __future__ import annotations

import concurrent.futures
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import bound as bound_mod
from .bound import BoundInputs, assemble_total, estimate_r1_mc, estimate_r2_mc
from .dynamics import (
    detect_bad_center,
    harvest_series,
    sample_centers,
    sample_visit_counts,
)
from .errors import EmptyBallError, ValidationError
from .pmf import PMF, poisson_pmf, tv_distance
from .systems import BallTarget, BinaryAdapter, get_system

log = logging.getLogger("poissonvisits")

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "row", "system", "center", "r", "eps_hat", "eps_se", "N_used",
    "n_samples", "tv_to_poisson", "bad_flag", "first_bad_k", "bad_margin",
    "best_p", "best_M", "bound_r1", "bound_r1_se", "bound_r2", "bound_r2_se",
    "bound_r3", "bound_total", "escapes", "seed", "config_hash", "pmf_file",
]


@dataclass(frozen=True)
class ExperimentConfig:
    system: str
    radii: tuple
    t: float
    n_samples: int
    seed: int
    gap: int = 128
    measure_iterations: int = 10**6
    system_overrides: dict = field(default_factory=dict)
    explicit_centers: tuple = ()
    sampled_centers: int = 0
    bound_p: tuple = (2, 3, 4)
    bound_M: tuple = (1, 2, 3)
    bound_series: int = 32
    bound_series_length: int = 0  # 0 -> 4 * window
    output: Optional[str] = None

    def __post_init__(self):
        if not self.radii:
            raise ValidationError("radii list must be nonempty")
        for r in self.radii:
            if not (0.0 < r < 1.0):
                raise ValidationError(f"radius out of (0,1): {r}")
        if len(self.radii) > 1 and any(
            b >= a for a, b in zip(self.radii, self.radii[1:])
        ):
            raise ValidationError("radii must be strictly decreasing")
        if self.seed is None:
            raise ValidationError("seed is mandatory")
        if not self.explicit_centers and self.sampled_centers <= 0:
            raise ValidationError("need explicit centers or sampled_centers > 0")
        if self.t <= 0 or self.n_samples < 1:
            raise ValidationError("t must be > 0 and n_samples >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ValidationError("config must be a mapping")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}"
            )
        centers = d.get("centers", {})
        if not isinstance(centers, dict):
            raise ValidationError("centers must be a mapping")
        bound = d.get("bound", {})
        try:
            return cls(
                system=str(d["system"]),
                radii=tuple(float(r) for r in d["radii"]),
                t=float(d["t"]),
                n_samples=int(d["n_samples"]),
                seed=int(d["seed"]),
                gap=int(d.get("gap", 128)),
                measure_iterations=int(d.get("measure_iterations", 10**6)),
                system_overrides=dict(d.get("system_overrides", {})),
                explicit_centers=tuple(
                    tuple(float(c) for c in pt)
                    for pt in centers.get("explicit", [])
                ),
                sampled_centers=int(centers.get("sampled", 0)),
                bound_p=tuple(int(p) for p in bound.get("p", (2, 3, 4))),
                bound_M=tuple(int(m) for m in bound.get("M", (1, 2, 3))),
                bound_series=int(bound.get("series", 32)),
                bound_series_length=int(bound.get("series_length", 0)),
                output=d.get("output"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad config: {e}") from e

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(yaml.safe_load(text))
        except yaml.YAMLError as e:
            raise ValidationError(f"config is not valid YAML: {e}") from e

    def canonical_json(self) -> str:
        d = {
            "schema_version": SCHEMA_VERSION,
            "system": self.system,
            "system_overrides": self.system_overrides,
            "centers": {
                "explicit": [list(c) for c in self.explicit_centers],
                "sampled": self.sampled_centers,
            },
            "radii": list(self.radii),
            "t": self.t,
            "n_samples": self.n_samples,
            "gap": self.gap,
            "measure_iterations": self.measure_iterations,
            "seed": self.seed,
            "bound": {
                "p": list(self.bound_p),
                "M": list(self.bound_M),
                "series": self.bound_series,
                "series_length": self.bound_series_length,
            },
        }
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return str(x)


def _point_str(pt) -> str:
    return ";".join(format(float(c), ".17g") for c in pt)


def scan_row(
    config: ExperimentConfig, system, row_index: int, center, r: float
) -> dict:
    """Compute one (center, radius) result row."""
    t0 = time.monotonic()
    seed_path = (config.seed, row_index)
    target = BallTarget(center=tuple(center), r=r) if center is not None else None
    row = {
        "row": row_index,
        "system": system.name,
        "center": _point_str(center) if center is not None else "",
        "r": r,
        "seed": config.seed,
        "config_hash": config.config_hash(),
    }

    sample = sample_visit_counts(
        system, target, config.t, config.n_samples, config.gap, seed_path,
        measure_iterations=config.measure_iterations,
        eps_known=getattr(system, "eps", None)
        if isinstance(system, BinaryAdapter) else None,
    )
    poisson = poisson_pmf(config.t)
    row.update(
        eps_hat=sample.eps_hat,
        eps_se=sample.eps_se,
        N_used=sample.N_used,
        n_samples=int(sample.counts.size),
        tv_to_poisson=tv_distance(sample.pmf, poisson),
        escapes=sample.escapes,
    )

    if getattr(system, "is_map", False):
        report = detect_bad_center(system, target)
        row.update(
            bad_flag=report.flag,
            first_bad_k=report.first_bad_k,
            bad_margin=report.margin if np.isfinite(report.margin) else None,
        )
    else:
        row.update(bad_flag=None, first_bad_k=None, bad_margin=None)

    # bound grid with Monte-Carlo R1/R2 over gap-separated series
    N = sample.N_used + 1
    length = config.bound_series_length or 4 * N
    series = harvest_series(system, target, config.bound_series,
                            max(length, N), config.gap, seed_path)
    best = None
    for p in config.bound_p:
        if not (2 <= p < N):
            continue
        r2, r2_se = estimate_r2_mc(series, p)
        for M in config.bound_M:
            if not (1 <= M <= N - 1):
                continue
            inputs = BoundInputs(eps=sample.eps_hat, N=N, p=p, M=M)
            r1, r1_se = estimate_r1_mc(series, inputs)
            bk = assemble_total(
                r1, r2, inputs,
                r1_provenance=bound_mod.PROV_MC,
                r2_provenance=bound_mod.PROV_MC,
                r1_se=r1_se, r2_se=r2_se,
            )
            if best is None or bk.total < best[2].total:
                best = (p, M, bk)
    if best is None:
        row.update(best_p=None, best_M=None, bound_r1=None, bound_r1_se=None,
                   bound_r2=None, bound_r2_se=None, bound_r3=None,
                   bound_total=None)
    else:
        p, M, bk = best
        row.update(best_p=p, best_M=M, bound_r1=bk.r1, bound_r1_se=bk.r1_se,
                   bound_r2=bk.r2, bound_r2_se=bk.r2_se, bound_r3=bk.r3,
                   bound_total=bk.total)

    row["_pmf"] = sample.pmf
    row["_wall_time"] = time.monotonic() - t0
    return row


def run_scan(config: ExperimentConfig, workers: Optional[int] = None) -> list[dict]:
    """Run the full scan; returns rows in deterministic (center, radius)
    order.  Writes CSV/JSON output when config.output is set."""
    system = get_system(config.system, config.system_overrides)

    centers = list(config.explicit_centers)
    if config.sampled_centers > 0:
        if isinstance(system, BinaryAdapter):
            centers.extend([None] * config.sampled_centers)
        else:
            centers.extend(
                sample_centers(system, config.sampled_centers, config.seed)
            )
    if not centers and isinstance(system, BinaryAdapter):
        centers = [None]

    jobs = []
    idx = 0
    for center in centers:
        for r in config.radii:
            jobs.append((idx, center, r))
            idx += 1

    if workers is None:
        workers = int(os.environ.get("POISSONVISITS_WORKERS", "1"))

    rows: dict[int, dict] = {}
    skipped: list[tuple[int, str]] = []

    def _run(job):
        i, center, r = job
        try:
            return i, scan_row(config, system, i, center, r), None
        except EmptyBallError as e:
            return i, None, str(e)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            for i, row, err in pool.map(_run, jobs):
                if err is not None:
                    skipped.append((i, err))
                else:
                    rows[i] = row
    else:
        for job in jobs:
            i, row, err = _run(job)
            if err is not None:
                skipped.append((i, err))
            else:
                rows[i] = row

    for i, reason in skipped:
        log.warning("row %d skipped: %s", i, reason)
    ordered = [rows[i] for i in sorted(rows)]
    for row in ordered:
        log.info("row %d done in %.2fs", row["row"], row.pop("_wall_time"))

    if config.output:
        write_results(config, ordered)
    return ordered


def write_results(config: ExperimentConfig, rows: list[dict]) -> Path:
    """Persist rows as CSV plus one PMF JSON file per row."""
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    for row in rows:
        pmf = row.get("_pmf")
        if pmf is not None:
            name = f"pmf_row{row['row']:04d}.json"
            (out / name).write_text(pmf.to_json() + "\n")
            row["pmf_file"] = name
    csv_path = out / "rows.csv"
    with io.StringIO() as buf:
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(row.get(c)) for c in CSV_COLUMNS) + "\n")
        csv_path.write_text(buf.getvalue())
    (out / "config.json").write_text(config.canonical_json() + "\n")
    return csv_path

"""Experiment harness: sparsity-sweep runtimes, single-split quality, Starlink clustering.

Every study returns plain records; :func:`write_report` turns them into
``records.csv`` / ``records.json`` plus an ``aggregate.csv`` with
mean/min/max/stddev per cell. Only the sampler call is timed.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .gcsq import GcsqOptions, run_gcsq, select_split
from .graph import WeightedGraph, canonical_structure, structure_value
from .netgraph import (
    WeightModel,
    build_geometric_graph,
    generate_synthetic_graph,
    link_stats,
    radius_for_mean_degree,
)
from .qubo import build_split_qubo
from .solvers import (
    EXHAUSTIVE_MAX_VARS,
    RNG_ALGORITHM,
    AnnealParams,
    SampleSet,
    anneal_sampler,
    exhaustive_sampler,
    most_frequent_sample,
)
from .tle import load_3le, parse_timestamp, propagate

log = logging.getLogger(__name__)

STUDIES = ("sparsitySweep", "splitQuality", "starlink")
FIXTURE_3LE = "starlink_fixture.3le"
FIXTURE_META = "starlink_fixture.json"


def fixture_path(name: str = FIXTURE_3LE) -> Path:
    return Path(str(resources.files("coalition_forge") / "data" / name))


def fixture_timestamp():
    with open(fixture_path(FIXTURE_META)) as fh:
        return parse_timestamp(json.load(fh)["timestamp"])


@dataclass
class ExperimentConfig:
    study: str
    sizes: list[int] = field(default_factory=lambda: [6, 8, 10, 12])
    sparsities: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    solvers: list[str] = field(default_factory=lambda: ["anneal", "exhaustive"])
    anneal: AnnealParams = field(default_factory=AnnealParams)
    kmax: int | None = None
    timestamp: str | None = None
    radius: float | None = None
    mean_degree: float = 4.0
    noise: float = 1.5
    tle: str | None = None
    max_satellites: int | None = None
    warmup: bool = True

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"study must be one of {STUDIES}, got {self.study!r}")
        if isinstance(self.anneal, dict):
            self.anneal = AnnealParams.from_dict(self.anneal)
        for name in ("sizes", "sparsities", "seeds", "solvers"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for s in self.solvers:
            if s not in ("anneal", "exhaustive"):
                raise ValueError(f"unknown solver {s!r}")
        if self.study == "starlink" and self.kmax is None:
            self.kmax = 5

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["anneal"] = self.anneal.to_dict()
        return d


@dataclass
class RunRecord:
    study: str
    n: int
    sparsity: float
    seed: int
    solver: str
    num_vars: int
    wall_time_seconds: float
    best_cost: float | None
    most_frequent_cost: float | None
    exact_cost: float | None
    structure_value: float | None
    links_before: int | None
    links_after: int | None
    skipped: bool = False
    note: str = ""

    def sort_key(self):
        return (self.study, self.n, self.sparsity, self.seed, self.solver)


RECORD_FIELDS = [f.name for f in fields(RunRecord)]


def _cell_params(base: AnnealParams, n: int, sparsity: float, seed: int) -> AnnealParams:
    key = [base.seed, n, int(round(sparsity * 1000)), seed]
    return replace(base, seed=int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0]))


def solve_split(q, solver: str, params: AnnealParams | None = None) -> tuple[SampleSet, float]:
    """Run one sampler on a split Qubo; returns the sample set and its wall time."""
    start = time.perf_counter()
    if solver == "exhaustive":
        s = exhaustive_sampler(q)
    else:
        s = anneal_sampler(q, params or AnnealParams())
    return s, time.perf_counter() - start


def split_record(study, g: WeightedGraph, sparsity, seed, solver, s: SampleSet, seconds, vm, exact=None):
    """Record for one bipartition solve of the grand coalition of ``g``."""
    everyone = frozenset(range(g.n))
    decision = select_split(s, vm, everyone, GcsqOptions(sampler=solver))
    parts = [decision.side_a, decision.side_b] if decision.accepted else [everyone]
    stats = link_stats(g, parts)
    note = "" if decision.accepted else "no-improving-split"
    return RunRecord(
        study=study,
        n=g.n,
        sparsity=sparsity,
        seed=seed,
        solver=solver,
        num_vars=s.num_vars,
        wall_time_seconds=seconds,
        best_cost=float(s.energies[0]),
        most_frequent_cost=most_frequent_sample(s).energy,
        exact_cost=exact,
        structure_value=structure_value(g, parts),
        links_before=stats.links_before,
        links_after=stats.links_after,
        note=note,
    )


def _skipped(study, n, sparsity, seed, solver, num_vars, why):
    return RunRecord(study, n, sparsity, seed, solver, num_vars, 0.0, None, None, None, None, None, None, True, why)


def run_sparsity_sweep(cfg: ExperimentConfig) -> list[RunRecord]:
    """Time one optimal-split solve per (n, sparsity, seed, solver)."""
    records = []
    for n in cfg.sizes:
        for sparsity in cfg.sparsities:
            for solver in cfg.solvers:
                warmed = not cfg.warmup
                for seed in cfg.seeds:
                    g = generate_synthetic_graph(n, sparsity, seed)
                    q, vm = build_split_qubo(g, range(n))
                    if solver == "exhaustive" and q.num_vars > EXHAUSTIVE_MAX_VARS:
                        records.append(
                            _skipped("sparsitySweep", n, sparsity, seed, solver, q.num_vars, "exceeds exhaustive cap")
                        )
                        continue
                    params = _cell_params(cfg.anneal, n, sparsity, seed)
                    if not warmed:
                        solve_split(q, solver, params)
                        warmed = True
                    s, seconds = solve_split(q, solver, params)
                    exact = float(s.energies[0]) if solver == "exhaustive" else None
                    records.append(split_record("sparsitySweep", g, sparsity, seed, solver, s, seconds, vm, exact))
                    log.info("sweep n=%d sparsity=%s seed=%d %s: %.4fs", n, sparsity, seed, solver, seconds)
    return sorted(records, key=RunRecord.sort_key)


def run_split_quality(cfg: ExperimentConfig) -> list[RunRecord]:
    """Lowest and most frequent anneal cost per cell, next to the exact cost."""
    records = []
    warmed = not cfg.warmup
    for n in cfg.sizes:
        for sparsity in cfg.sparsities:
            for seed in cfg.seeds:
                g = generate_synthetic_graph(n, sparsity, seed)
                q, vm = build_split_qubo(g, range(n))
                if q.num_vars > EXHAUSTIVE_MAX_VARS:
                    records.append(
                        _skipped("splitQuality", n, sparsity, seed, "anneal", q.num_vars, "no exact column")
                    )
                    continue
                params = _cell_params(cfg.anneal, n, sparsity, seed)
                if not warmed:
                    solve_split(q, "anneal", params)
                    warmed = True
                exact = float(exhaustive_sampler(q).energies[0])
                s, seconds = solve_split(q, "anneal", params)
                records.append(split_record("splitQuality", g, sparsity, seed, "anneal", s, seconds, vm, exact))
    return sorted(records, key=RunRecord.sort_key)


def run_starlink(cfg: ExperimentConfig) -> dict:
    """3LE -> positions -> geometric graph -> constrained GCS-Q -> link counts."""
    path = Path(cfg.tle) if cfg.tle else fixture_path()
    records = load_3le(path)
    if cfg.max_satellites is not None:
        records = records[: cfg.max_satellites]
    if not records:
        raise ValueError(f"no usable TLE records in {path}")
    when = parse_timestamp(cfg.timestamp) if cfg.timestamp else fixture_timestamp()
    states = [propagate(r, when) for r in records]
    positions = np.array([s.position for s in states])
    radius = cfg.radius if cfg.radius is not None else radius_for_mean_degree(positions, cfg.mean_degree)
    model = WeightModel(mode="starlink", noise_amplitude=cfg.noise, seed=cfg.seeds[0])
    g = build_geometric_graph(positions, radius, model)
    diagnostic = ""
    if g.num_edges == 0:
        diagnostic = f"no satellite pair within {radius} km: graph is edgeless, every satellite is its own coalition"
        log.warning(diagnostic)
    opts = GcsqOptions(kmax=cfg.kmax, sampler="anneal", anneal=replace(cfg.anneal, seed=cfg.seeds[0]))
    start = time.perf_counter()
    result = run_gcsq(g, opts)
    seconds = time.perf_counter() - start
    stats = link_stats(g, result.structure)
    sizes = Counter(len(c) for c in result.structure)
    return {
        "study": "starlink",
        "tle": str(path),
        "timestamp": when.isoformat(),
        "satellites": g.n,
        "radius_km": radius,
        "mean_degree": 2.0 * g.num_edges / g.n,
        "kmax": cfg.kmax,
        "structure_value": result.value,
        "coalition_count": len(result.structure),
        "size_histogram": {str(k): sizes[k] for k in sorted(sizes)},
        "links_before": stats.links_before,
        "links_after": stats.links_after,
        "intra_links": stats.intra_links,
        "head_links": stats.head_links,
        "link_rule": "intra-coalition links + one cluster-head link per adjacent coalition pair",
        "wall_time_seconds": seconds,
        "sampler_calls": len(result.trace),
        "coalitions": canonical_structure(result.structure),
        "names": [r.name for r in records],
        "diagnostic": diagnostic,
        "weights": model.to_dict(),
    }


def aggregate(records: list[RunRecord]) -> list[dict]:
    """Mean/min/max/stddev (n-1 denominator) of wall time and costs per cell."""
    cells = defaultdict(list)
    for r in records:
        if not r.skipped:
            cells[(r.study, r.n, r.sparsity, r.solver)].append(r)
    rows = []
    for (study, n, sparsity, solver), rs in sorted(cells.items()):
        row = {"study": study, "n": n, "sparsity": sparsity, "solver": solver, "count": len(rs)}
        for name in ("wall_time_seconds", "best_cost", "most_frequent_cost", "exact_cost"):
            vals = [getattr(r, name) for r in rs if getattr(r, name) is not None]
            if not vals:
                continue
            row[f"{name}_mean"] = statistics.fmean(vals)
            row[f"{name}_min"] = min(vals)
            row[f"{name}_max"] = max(vals)
            row[f"{name}_std"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        rows.append(row)
    return rows


def runtime_trend(records: list[RunRecord], sparsity: float = 0.0) -> dict:
    """Growth fits for the sweep: power law for anneal, doubling rate for exhaustive.

    ``anneal_power`` is the slope of log(time) against log(n);
    ``exhaustive_log2_per_var`` is the slope of log2(time) against the number
    of QUBO variables (1.0 = time doubles per added variable).
    """
    out = {}
    by = defaultdict(list)
    for r in records:
        if not r.skipped and r.sparsity == sparsity:
            by[(r.solver, r.n, r.num_vars)].append(r.wall_time_seconds)
    ann = sorted((n, statistics.median(t)) for (s, n, _), t in by.items() if s == "anneal")
    if len(ann) >= 2:
        x, y = np.log([a for a, _ in ann]), np.log([b for _, b in ann])
        out["anneal_power"] = float(np.polyfit(x, y, 1)[0])
        out["anneal_points"] = ann
    ex = sorted((k, statistics.median(t)) for (s, _, k), t in by.items() if s == "exhaustive")
    if len(ex) >= 2:
        x, y = np.array([a for a, _ in ex], float), np.log2([b for _, b in ex])
        out["exhaustive_log2_per_var"] = float(np.polyfit(x, y, 1)[0])
        out["exhaustive_points"] = ex
    return out


def _meta_lines(meta: dict) -> list[str]:
    return [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(meta.items())]


def write_report(records: list[RunRecord], out_dir: str | Path, fmt: str = "csv", meta: dict | None = None) -> list[Path]:
    """Write records plus ``aggregate.csv`` into ``out_dir``; returns the paths written."""
    if not records:
        raise ValueError("no records to write")
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    out_dir = Path(out_dir)
    meta = dict(meta or {})
    meta.setdefault("rng", RNG_ALGORITHM)
    records = sorted(records, key=RunRecord.sort_key)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out_dir / "records.csv"
            with open(path, "w", newline="") as fh:
                for line in _meta_lines(meta):
                    fh.write(line + "\n")
                writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
                writer.writeheader()
                for r in records:
                    writer.writerow(asdict(r))
        else:
            path = out_dir / "records.json"
            with open(path, "w") as fh:
                json.dump({"meta": meta, "records": [asdict(r) for r in records]}, fh, indent=1)
                fh.write("\n")
        written.append(path)
        agg_rows = aggregate(records)
        path = out_dir / "aggregate.csv"
        columns = []
        for row in agg_rows:
            columns += [k for k in row if k not in columns]
        with open(path, "w", newline="") as fh:
            for line in _meta_lines(meta):
                fh.write(line + "\n")
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(agg_rows)
        written.append(path)
    except OSError as exc:
        raise OSError(f"could not write report to {exc.filename or out_dir}: {exc.strerror}") from exc
    return written


def _cast(name: str, text: str):
    if text == "":
        return None
    if name in ("study", "solver", "note"):
        return text
    if name == "skipped":
        return text == "True"
    if name in ("n", "seed", "num_vars", "links_before", "links_after"):
        return int(text)
    return float(text)


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if path.suffix == ".json":
        with open(path) as fh:
            return [RunRecord(**r) for r in json.load(fh)["records"]]
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        out = []
        for row in rows:
            kw = {k: _cast(k, v) for k, v in row.items()}
            kw["note"] = kw["note"] or ""
            out.append(RunRecord(**kw))
        return out


def run_config(cfg: ExperimentConfig, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Run the configured study and write its report files."""
    meta = {"config": cfg.to_dict()}
    out_dir = Path(out_dir)
    if cfg.study == "starlink":
        report = run_starlink(cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "starlink.json"
        with open(path, "w") as fh:
            json.dump({"meta": meta, **report}, fh, indent=1)
            fh.write("\n")
        return [path]
    records = run_sparsity_sweep(cfg) if cfg.study == "sparsitySweep" else run_split_quality(cfg)
    paths = write_report(records, out_dir, fmt, meta)
    if cfg.study == "sparsitySweep":
        trend = {str(s): runtime_trend(records, s) for s in cfg.sparsities}
        path = out_dir / "trend.json"
        with open(path, "w") as fh:
            json.dump(trend, fh, indent=1)
            fh.write("\n")
        paths.append(path)
    return paths

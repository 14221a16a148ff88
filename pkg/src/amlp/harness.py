"""Experiment grid: reducers x component counts x segment counts.

Each (method, components) pair is fitted and clustered once; the tree is
then cut at every segment count.  Pairs are independent and may run on a
thread pool; results always come back in canonical order.
"""

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .cluster import LINKAGES, ahc_fit, cut
from .config import format_key_values, read_key_values, split_list
from .drt import DISPLAY_NAMES, ReducerConfig, config_from_mapping, reduce
from .exceptions import AmlpError, GridConfigError
from .profiling import ProfileMatrix, standardize
from .validate import DB_ZERO_SCATTER, ValidationReport, validate_all

log = logging.getLogger(__name__)

GRID_METHODS = ("ica", "kpca", "svd", "lpp")
BASELINE = "none"
REPORT_COLUMNS = ("DRT", "# of components", "Sil. score", "CH. score", "DB. Score")
DB_FLAG_MARKER = "*"


def _sorted_unique(values, name):
    values = tuple(values)
    if not values:
        raise GridConfigError(f"{name} must not be empty")
    if len(set(values)) != len(values) or list(values) != sorted(values):
        raise GridConfigError(f"{name} must be unique and sorted ascending, got {list(values)}")
    if any(isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1 for v in values):
        raise GridConfigError(f"{name} must hold positive integers, got {list(values)}")
    return values


@dataclass(frozen=True)
class GridConfig:
    component_counts: tuple = (2, 10, 20, 40)
    segment_counts: tuple = (3, 5, 7, 9)
    methods: tuple = GRID_METHODS
    include_baseline: bool = True
    linkage: str = "ward"
    master_seed: int = 0
    reducer: ReducerConfig = field(default_factory=ReducerConfig)

    def __post_init__(self):
        object.__setattr__(self, "component_counts", _sorted_unique(self.component_counts, "component_counts"))
        object.__setattr__(self, "segment_counts", _sorted_unique(self.segment_counts, "segment_counts"))
        methods = tuple(self.methods)
        if not methods or len(set(methods)) != len(methods):
            raise GridConfigError("methods must be a non-empty list without repeats")
        unknown = [m for m in methods if m not in GRID_METHODS]
        if unknown:
            raise GridConfigError(f"unknown method(s) {unknown}; expected a subset of {GRID_METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.linkage not in LINKAGES:
            raise GridConfigError(f"unknown linkage {self.linkage!r}")
        if self.master_seed < 0:
            raise GridConfigError("master_seed must be non-negative")

    def check_shape(self, n_samples, n_features):
        too_wide = [c for c in self.component_counts if c > n_features]
        if too_wide:
            raise GridConfigError(f"component counts {too_wide} exceed the {n_features} input features")
        if "kpca" in self.methods and self.component_counts[-1] > n_samples:
            raise GridConfigError(f"KPCA needs components <= n_samples ({n_samples})")
        if self.segment_counts[-1] > n_samples:
            raise GridConfigError(f"segment counts exceed the {n_samples} samples")

    @classmethod
    def from_mapping(cls, kv):
        kwargs = {}
        try:
            for key in ("component_counts", "segment_counts"):
                if key in kv:
                    kwargs[key] = tuple(int(v) for v in split_list(kv[key]))
            if "methods" in kv:
                kwargs["methods"] = tuple(split_list(kv["methods"]))
            if "include_baseline" in kv:
                flag = str(kv["include_baseline"]).lower()
                if flag not in ("true", "false", "1", "0", "yes", "no"):
                    raise GridConfigError(f"include_baseline must be a boolean, got {flag!r}")
                kwargs["include_baseline"] = flag in ("true", "1", "yes")
            if "linkage" in kv:
                kwargs["linkage"] = str(kv["linkage"])
            if "master_seed" in kv:
                kwargs["master_seed"] = int(kv["master_seed"])
            kwargs["reducer"] = config_from_mapping(kv)
        except ValueError as exc:
            raise GridConfigError(f"invalid grid configuration value: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        if str(path) == "default":
            return cls()
        return cls.from_mapping(read_key_values(path))

    def to_mapping(self):
        out = {
            "component_counts": list(self.component_counts),
            "segment_counts": list(self.segment_counts),
            "methods": list(self.methods),
            "include_baseline": str(self.include_baseline).lower(),
            "linkage": self.linkage,
            "master_seed": self.master_seed,
        }
        for f in fields(ReducerConfig):
            if f.name not in ("method", "k", "seed"):
                out[f.name] = getattr(self.reducer, f.name)
        return out

    def to_file(self, path):
        Path(path).write_text(format_key_values(self.to_mapping()), encoding="utf-8")


@dataclass(frozen=True)
class GridCellResult:
    method: str
    components: int
    segments: int
    report: ValidationReport = None
    error: str = None
    wall_time: float = 0.0
    seed: int = 0
    # segment labels of the cut; kept out of equality so results compare by scores
    labels: np.ndarray = field(default=None, compare=False, repr=False)


def cell_seed(master_seed, method, components):
    """Seed of one reducer fit, decorrelated across cells via ``SeedSequence``."""
    method_id = (*GRID_METHODS, BASELINE).index(method)
    seq = np.random.SeedSequence([int(master_seed), method_id, int(components)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def worker_count(threads=None):
    """Worker cap from the argument or ``AMLP_THREADS`` (0 or unset means auto)."""
    if threads is None:
        raw = os.environ.get("AMLP_THREADS", "0")
        try:
            threads = int(raw)
        except ValueError:
            raise GridConfigError(f"AMLP_THREADS must be an integer, got {raw!r}") from None
    if threads < 0:
        raise GridConfigError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


def _run_pair(Z, method, components, cfg):
    seed = cell_seed(cfg.master_seed, method, components)
    started = time.perf_counter()
    try:
        emb = reduce(Z, cfg.reducer.with_(method=method, k=components, seed=seed))
        tree = ahc_fit(emb.values, linkage=cfg.linkage)
    except (AmlpError, np.linalg.LinAlgError, ArithmeticError) as exc:
        log.warning("%s with %d components failed: %s", method, components, exc)
        spent = time.perf_counter() - started
        return [GridCellResult(method, components, k, error=str(exc), wall_time=spent, seed=seed)
                for k in cfg.segment_counts]
    shared = time.perf_counter() - started

    cells = []
    for k in cfg.segment_counts:
        t0 = time.perf_counter()
        labels = None
        try:
            assignment = cut(tree, k)
            labels = assignment.labels
            report = validate_all(emb.values, assignment)
            error = None
        except AmlpError as exc:
            report, error = None, str(exc)
        cells.append(GridCellResult(method, components, k, report, error,
                                    shared + time.perf_counter() - t0, seed, labels))
    return cells


def _canonical_key(cell):
    order = (*GRID_METHODS, BASELINE)
    return (cell.segments, order.index(cell.method), cell.components)


def run_grid(x, cfg=None, threads=None):
    """Standardize, reduce, cluster and validate every grid cell.

    Returns results ordered by (segments, method, components) with the
    no-reduction baseline last in each segment block.
    """
    cfg = cfg or GridConfig()
    values = x.values if isinstance(x, ProfileMatrix) else np.asarray(x, dtype=np.float64)
    if values.ndim != 2:
        raise GridConfigError("grid input must be a 2-D matrix")
    n, d = values.shape
    cfg.check_shape(n, d)
    Z, _, _ = standardize(values)

    jobs = [(m, c) for m in cfg.methods for c in cfg.component_counts]
    if cfg.include_baseline:
        jobs.append((BASELINE, d))
    workers = min(worker_count(threads), len(jobs))
    if workers == 1:
        batches = [_run_pair(Z, m, c, cfg) for m, c in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda job: _run_pair(Z, job[0], job[1], cfg), jobs))
    return sorted((cell for batch in batches for cell in batch), key=_canonical_key)


def _error_text(reason):
    return f"ERR({' '.join(str(reason).split())})"


def _human(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v != 0 and abs(v) >= 1e6:
        return f"{v:.4e}"
    return f"{v:.4f}"


def _machine(v):
    return "inf" if math.isinf(v) else repr(float(v))


def _score_cells(cell, render):
    if cell.report is None:
        err = _error_text(cell.error)
        return [err, err, err]
    rep = cell.report
    out = []
    for key, value in (("silhouette", rep.silhouette),
                       ("calinski_harabasz", rep.calinski_harabasz),
                       ("davies_bouldin", rep.davies_bouldin)):
        out.append(_error_text(rep.errors.get(key, "unavailable")) if value is None else render(value))
    if rep.davies_bouldin is not None and DB_ZERO_SCATTER in rep.flags:
        out[2] += DB_FLAG_MARKER
    return out


def table_rows(results, segments):
    """Rows of one segment table in display order: components, then method; baseline last."""
    order = (*GRID_METHODS, BASELINE)
    cells = [c for c in results if c.segments == segments]
    return sorted(cells, key=lambda c: (c.method == BASELINE, c.components, order.index(c.method)))


def _row_labels(cell):
    return [DISPLAY_NAMES[cell.method], f"{cell.components} components"]


def emit_report(results, fmt, destination):
    """Write grid tables into the ``destination`` directory.

    ``csv`` writes ``report_<segments>.csv`` (full precision, plus a
    ``flags`` column) and ``results.jsonl``; ``markdown`` writes ``report.md``.
    Returns the list of written paths.
    """
    results = list(results)
    if not results:
        raise GridConfigError("no grid results to report")
    if fmt not in ("csv", "markdown"):
        raise GridConfigError(f"unknown report format {fmt!r}")
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
        segment_counts = sorted({c.segments for c in results})
        written = []
        if fmt == "csv":
            for k in segment_counts:
                path = dest / f"report_{k}.csv"
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow([*REPORT_COLUMNS, "flags"])
                    for cell in table_rows(results, k):
                        flags = ";".join(sorted(cell.report.flags)) if cell.report else ""
                        writer.writerow([*_row_labels(cell), *_score_cells(cell, _machine), flags])
                written.append(path)
            path = dest / "results.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                for cell in results:
                    rec = {"method": cell.method, "components": cell.components,
                           "segments": cell.segments, "seed": cell.seed, "error": cell.error}
                    rec.update(cell.report.to_record() if cell.report else {})
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            written.append(path)
        else:
            path = dest / "report.md"
            path.write_text(render_markdown(results), encoding="utf-8")
            written.append(path)
    except OSError as exc:
        raise GridConfigError(f"cannot write report to {dest}: {exc.strerror}") from None
    return written


def render_markdown(results):
    lines = []
    flagged = False
    for k in sorted({c.segments for c in results}):
        lines.append(f"## Configuration {k}-segments")
        lines.append("")
        lines.append("| " + " | ".join(REPORT_COLUMNS) + " |")
        lines.append("|" + "|".join("---" for _ in REPORT_COLUMNS) + "|")
        for cell in table_rows(results, k):
            scores = _score_cells(cell, _human)
            flagged |= scores[2].endswith(DB_FLAG_MARKER)
            lines.append("| " + " | ".join([*_row_labels(cell), *scores]) + " |")
        lines.append("")
    if flagged:
        lines.append(f"{DB_FLAG_MARKER} Davies-Bouldin is 0 because every cluster has zero "
                     f"within-cluster scatter ({DB_ZERO_SCATTER}).")
        lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    segments: int
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float
    error: str = None


def summarize(results, components_filter):
    """Method x segment cross-tab of the three scores at one component count."""
    results = list(results)
    available = sorted({c.components for c in results if c.method != BASELINE})
    if components_filter not in available:
        raise GridConfigError(f"component count {components_filter} not in grid {available}")
    order = (*GRID_METHODS, BASELINE)
    picked = sorted((c for c in results if c.method != BASELINE and c.components == components_filter),
                    key=lambda c: (order.index(c.method), c.segments))
    rows = []
    for c in picked:
        rep = c.report or ValidationReport()
        rows.append(SummaryRow(c.method, c.segments, rep.silhouette, rep.calinski_harabasz,
                               rep.davies_bouldin, c.error))
    return rows


def write_summary(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["DRT", "segments", "Sil. score", "CH. score", "DB. Score"])
        for r in rows:
            scores = [_error_text(r.error or "unavailable") if v is None else _machine(v)
                      for v in (r.silhouette, r.calinski_harabasz, r.davies_bouldin)]
            writer.writerow([DISPLAY_NAMES[r.method], r.segments, *scores])

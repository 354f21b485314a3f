"""Command-line entry point, file formats and pipeline orchestration.

Inputs are UTF-8 CSV files with a header row:

* citations: ``group,citations`` - one row per paper; the reserved group
  ``WORLD`` is the explicit world set, otherwise the world is the union of
  all groups.
* shares: ``group,percentile,share`` - published percent of a group's
  papers inside each world top percentile.

Every run writes into ``--out``: ``results.json`` (machine-readable, full
precision, no timestamps), ``tables.txt`` (aligned columns, 4 significant
digits), ``plots/<group>.<view>.dat`` (two whitespace-delimited columns) and
``run.log``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import distkit, doublerank, fitkit, indicators, synthgen
from .core import (
    CitationSet,
    DoubleRankError,
    EmptySet,
    IndicatorSet,
    LognormalSpec,
    NonMonotone,
    ParseError,
    PercentileSeries,
    PowerLawFit,
)

log = logging.getLogger("dblrank")

MODES = ("synth", "analyze", "doublerank", "fit", "indicators", "report")
WORLD = synthgen.WORLD_LABEL


class UsageError(DoubleRankError):
    pass


# --------------------------------------------------------------------- ingestion


@dataclass(frozen=True)
class CitationData:
    groups: list
    world: CitationSet
    explicit_world: bool


def _open_csv(path: Path, header: tuple[str, ...]):
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{path}: no such file")
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or tuple(c.strip().lower() for c in first) != header:
        fh.close()
        raise ParseError(f"{path}:1: expected header {','.join(header)!r}, got {first!r}")
    return fh, reader


def load_citations(paths) -> CitationData:
    """Read one or more ``group,citations`` files into citation sets."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    rows: dict[str, list[int]] = {}
    for path in paths:
        fh, reader = _open_csv(path, ("group", "citations"))
        with fh:
            for row in reader:
                line = reader.line_num
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise ParseError(f"{path}:{line}: expected 2 columns, got {len(row)}")
                group, raw = row[0].strip(), row[1].strip()
                if not group:
                    raise ParseError(f"{path}:{line}: empty group name")
                try:
                    value = int(raw)
                except ValueError:
                    raise ParseError(f"{path}:{line}: citations {raw!r} is not an integer") from None
                if value < 0:
                    raise ParseError(f"{path}:{line}: negative citation count {value}")
                rows.setdefault(group, []).append(value)
    if not rows:
        raise EmptySet("no papers in input")
    sets = {g: CitationSet(g, np.array(v, dtype=np.int64)) for g, v in rows.items()}
    world = sets.pop(WORLD, None)
    groups = list(sets.values())
    if world is not None:
        return CitationData(groups, world, True)
    return CitationData(groups, synthgen.compose_world(groups), False)


def write_citations(path: Path, sets: Sequence[CitationSet]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "citations"])
        for s in sets:
            w.writerows((s.label, int(c)) for c in s.counts)


def load_shares(path) -> list[tuple[str, PercentileSeries]]:
    """Read a ``group,percentile,share`` file; rows may come in any order."""
    fh, reader = _open_csv(path, ("group", "percentile", "share"))
    data: dict[str, dict[float, float]] = {}
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{line}: expected 3 columns, got {len(row)}")
            group = row[0].strip()
            try:
                x, share = float(row[1]), float(row[2])
            except ValueError:
                raise ParseError(f"{path}:{line}: non-numeric percentile or share") from None
            if not group:
                raise ParseError(f"{path}:{line}: empty group name")
            if not (0 < x <= 100) or not (0 <= share <= 100):
                raise ParseError(f"{path}:{line}: percentile or share outside (0, 100]")
            if x in data.setdefault(group, {}):
                raise ParseError(f"{path}:{line}: duplicate percentile {x:g} for {group!r}")
            data[group][x] = share
    if not data:
        raise EmptySet(f"{path}: no share rows")
    out = []
    for group, shares in data.items():
        try:
            series = doublerank.series_from_shares(sorted(shares.items()), local_label=group)
        except NonMonotone as exc:
            raise NonMonotone(f"{path}: group {group!r}: {exc}") from None
        out.append((group, series))
    return out


# ------------------------------------------------------------------ configuration


@dataclass
class RunConfig:
    mode: str
    inputs: list = field(default_factory=list)
    shares: Optional[str] = None
    results: Optional[str] = None
    groups: list = field(default_factory=list)  # restrict analysis to these labels
    grid: tuple = doublerank.DEFAULT_GRID
    exclude: tuple = fitkit.DEFAULT_EXCLUDE
    min_count: float = fitkit.DEFAULT_MIN_COUNT
    methods: tuple = ("LR",)
    percentile: float = indicators.DEFAULT_PERCENTILE
    seed: int = 0
    out: str = "dblrank-out"
    n_total: Optional[float] = None
    divisor: Optional[float] = None
    ptops: Optional[tuple] = None
    css_depth: int = 3
    max_citations: tuple = (20, 50)
    tail_window: tuple = (50.0, 400.0)
    synth_groups: list = field(default_factory=list)  # "label:mu:sigma:n"
    background: Optional[str] = None  # "mu:sigma:n"
    preset: Optional[str] = None
    plots: bool = True

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        for p in list(self.inputs) + [self.shares, self.results]:
            if p is not None and not Path(p).is_file():
                raise UsageError(f"input file {p} does not exist")
        needs_input = self.mode in ("analyze", "doublerank", "report")
        if needs_input and not (self.inputs or (self.mode == "report" and self.shares)):
            raise UsageError(f"{self.mode} needs --input" + (" or --shares" if self.mode == "report" else ""))
        if self.mode == "fit" and not (self.inputs or self.shares):
            raise UsageError("fit needs --input or --shares")
        if self.mode == "indicators" and not (self.inputs or self.shares or self.results or self.ptops):
            raise UsageError("indicators needs --input, --shares, --results or --ptops")
        if self.mode == "synth" and not (self.synth_groups or self.preset):
            raise UsageError("synth needs --group specs or --preset")
        doublerank._check_grid(self.grid)
        bad = [m for m in self.methods if m not in fitkit.FITTERS]
        if bad:
            raise UsageError(f"unknown fit methods {bad}; choose from lr, lm, ml")
        if not 0 < self.percentile <= 100:
            raise UsageError("--percentile must lie in (0, 100]")


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in str(text).replace(",", " ").split() if t)


def _methods(text) -> tuple:
    items = text if isinstance(text, (list, tuple)) else str(text).replace(",", " ").split()
    return tuple(m.strip().upper() for m in items if m.strip())


def _none_or(conv):
    return lambda v: None if v in (None, "", "none") else conv(v)


_CONVERTERS = {
    "inputs": lambda v: [p for p in str(v).replace(",", " ").split() if p],
    "groups": lambda v: [p for p in str(v).replace(",", " ").split() if p],
    "grid": _floats,
    "exclude": lambda v: () if str(v).strip().lower() == "none" else _floats(v),
    "min_count": float,
    "methods": _methods,
    "percentile": float,
    "seed": int,
    "n_total": _none_or(float),
    "divisor": _none_or(float),
    "ptops": _none_or(_floats),
    "css_depth": int,
    "max_citations": lambda v: tuple(int(x) for x in _floats(v)),
    "tail_window": _floats,
    "synth_groups": lambda v: [p for p in str(v).split() if p],
    "plots": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    aliases = {"input": "inputs", "group": "synth_groups", "min-count": "min_count"}
    out = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{i}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = aliases.get(key, key.replace("-", "_"))
        if key not in known:
            raise ParseError(f"{path}:{i}: unknown key {key!r}")
        out[key] = _CONVERTERS.get(key, str)(value)
    return out


# ---------------------------------------------------------------- serialization


def _fit_dict(fit: PowerLawFit) -> dict:
    return {
        "a": fit.a,
        "alpha": fit.alpha,
        "method": fit.method,
        "chi2": fit.chi2,
        "dof": fit.dof,
        "p_value": fit.p_value,
        "points_used": [list(p) for p in fit.points_used],
        "decreasing": fit.decreasing,
    }


def fit_from_dict(d: dict) -> PowerLawFit:
    return PowerLawFit(
        d["a"], d["alpha"], d["method"], d["chi2"], d["dof"], d["p_value"],
        tuple(tuple(p) for p in d["points_used"]), d.get("decreasing", False),
    )


def indicators_from_dict(d: dict) -> IndicatorSet:
    names = {f.name for f in fields(IndicatorSet)}
    return IndicatorSet(**{k: v for k, v in d.items() if k in names})


def _series_dict(s: PercentileSeries) -> dict:
    return {
        "world_label": s.world_label,
        "local_label": s.local_label,
        "world_size": s.world_size,
        "local_size": s.local_size,
        "synthetic_counts": s.synthetic_counts,
        "points": [[p.x, p.n_local, p.share] for p in s.points],
    }


def series_from_dict(d: dict) -> PercentileSeries:
    return PercentileSeries(
        d["world_label"], d["local_label"], d["world_size"], d["local_size"],
        tuple(tuple(p) for p in d["points"]), d["synthetic_counts"],
    )


def load_results(path) -> dict:
    """Parse a results file back into fits, indicator sets and series."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    out = {}
    for label, g in doc.get("groups", {}).items():
        out[label] = {
            "fits": {m: fit_from_dict(f) for m, f in g.get("fits", {}).items()},
            "indicators": {m: indicators_from_dict(i) for m, i in g.get("indicators", {}).items()},
            "series": series_from_dict(g["series"]) if "series" in g else None,
            "n_total": g.get("n_total"),
        }
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _fmt(v, digits: int = 4) -> str:
    if v is None:
        return "-"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if not math.isfinite(v):
        return "nan"
    return f"{v:.{digits}g}"


def format_table(title: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(header)] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [title, "  ".join(h.rjust(w) for h, w in zip(cells[0], widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells[1:]]
    return "\n".join(lines) + "\n"


def write_plot(path: Path, xs, ys) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{float(x)!r} {float(y)!r}\n")


# ---------------------------------------------------------------------- pipeline


class _Run:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.plots = self.out / "plots"
        self.results: dict = {"mode": cfg.mode, "config": self._config_echo(), "groups": {}}
        self.tables: list[str] = []

    def _config_echo(self) -> dict:
        d = asdict(self.cfg)
        d.pop("out")
        return d

    def group(self, label: str) -> dict:
        return self.results["groups"].setdefault(label, {})

    def plot(self, label: str, view: str, xs, ys) -> None:
        if self.cfg.plots:
            self.plots.mkdir(parents=True, exist_ok=True)
            write_plot(self.plots / f"{label}.{view}.dat", xs, ys)

    def finish(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        text = json.dumps(_jsonable(self.results), indent=2, sort_keys=True, allow_nan=False)
        (self.out / "results.json").write_text(text + "\n", encoding="utf-8")
        (self.out / "tables.txt").write_text("\n".join(self.tables), encoding="utf-8")


def _selected(cfg: RunConfig, data: CitationData) -> list[CitationSet]:
    if not cfg.groups:
        return data.groups
    by_label = {g.label: g for g in data.groups}
    missing = [g for g in cfg.groups if g not in by_label and g != WORLD]
    if missing:
        raise UsageError(f"groups not in input: {missing}")
    return [data.world if g == WORLD else by_label[g] for g in cfg.groups]


def _parse_spec(text: str, n_fields: int) -> list[str]:
    parts = text.split(":")
    if len(parts) != n_fields:
        raise UsageError(f"bad lognormal spec {text!r}")
    return parts


def stage_synth(run: _Run) -> None:
    cfg = run.cfg
    run.out.mkdir(parents=True, exist_ok=True)
    if cfg.preset == "fig3":
        sets = list(synthgen.fig3_setup(cfg.seed))
        specs = {"s1": (2.4, 1.1, 500), "s7": (1.5, 0.9, 500), WORLD: (1.7, 1.1, 151_000)}
    elif cfg.preset == "fig1":
        spec = LognormalSpec(1.7, 1.0, 150_000, synthgen.derive_seeds(cfg.seed, 1)[0])
        sets = [synthgen.sample_lognormal(spec, "world")]
        specs = {"world": (1.7, 1.0, 150_000)}
    elif cfg.preset:
        raise UsageError(f"unknown preset {cfg.preset!r}; choose fig1 or fig3")
    else:
        seeds = synthgen.derive_seeds(cfg.seed, len(cfg.synth_groups) + 1)
        sets, specs = [], {}
        for text, seed in zip(cfg.synth_groups, seeds):
            label, mu, sigma, n = _parse_spec(text, 4)
            spec = LognormalSpec(float(mu), float(sigma), int(n), seed)
            sets.append(synthgen.sample_lognormal(spec, label))
            specs[label] = (spec.mu, spec.sigma, spec.n_papers)
        if cfg.background:
            mu, sigma, n = _parse_spec(cfg.background, 3)
            extra = LognormalSpec(float(mu), float(sigma), int(n), seeds[-1])
            sets.append(synthgen.compose_world(sets, extra))
            specs[WORLD] = (extra.mu, extra.sigma, len(sets[-1]))
    for s in sets:
        path = run.out / f"{s.label}.csv"
        write_citations(path, [s])
        g = run.group(s.label)
        g.update(file=path.name, n_total=s.size, mean=float(s.counts.mean()), spec=specs.get(s.label))
        log.info("wrote %s (%d papers)", path, s.size)
    run.tables.append(
        format_table(
            "Synthetic citation sets",
            ["group", "mu", "sigma", "N", "mean"],
            [[s.label, *specs[s.label][:2], s.size, float(s.counts.mean())] for s in sets],
        )
    )


def stage_analyze(run: _Run, data: CitationData) -> None:
    cfg = run.cfg
    targets = _selected(cfg, data)
    if not any(t is data.world for t in targets):
        targets = targets + [data.world]
    rows, css_rows = [], []
    for cs in targets:
        g = run.group(cs.label)
        info: dict = {"n_total": cs.size, "mean": float(cs.counts.mean())}
        hists = {}
        for m in cfg.max_citations:
            pairs, omitted = distkit.histogram(cs, m)
            hists[str(m)] = {"omitted": omitted, "omitted_share": 100.0 * omitted / cs.size}
            run.plot(cs.label, f"hist{m}", [p[0] for p in pairs], [p[1] for p in pairs])
        info["histograms"] = hists
        bins = distkit.log_bins(cs)
        info["log_bins"] = [list(b) for b in bins]
        run.plot(cs.label, "logbins", [(lo + hi) / 2 for lo, hi, _ in bins], [b[2] for b in bins])
        rf = distkit.rank_frequency(cs)
        run.plot(cs.label, "rankfreq", rf.citations, rf.ranks)
        cvals, cranks = rf.distinct()
        run.plot(cs.label, "cumprob", cvals, cranks / rf.size)
        top1 = next((int(c) for c, r in zip(cvals[::-1], cranks[::-1]) if r / rf.size <= 0.01), None)
        info["top1_threshold"] = top1
        try:
            css = distkit.css_classify(cs, cfg.css_depth)
            info["css"] = {"thresholds": list(css.thresholds), "shares": list(css.class_shares)}
            css_rows.append([cs.label, *css.class_shares])
        except DoubleRankError as exc:
            info["css"] = {"error": str(exc)}
        try:
            tail = distkit.tail_power_fit(rf, *cfg.tail_window)
            info["tail_fit"] = _fit_dict(tail)
            dev = distkit.tail_deviation(rf, tail)
            run.plot(cs.label, "tailfit", [d[0] for d in dev], [d[2] for d in dev])
        except DoubleRankError as exc:
            info["tail_fit"] = {"error": str(exc)}
        g["analysis"] = info
        rows.append([cs.label, cs.size, info["mean"], top1, *(hists[str(m)]["omitted_share"] for m in cfg.max_citations)])
    run.tables.append(
        format_table(
            "Citation distributions",
            ["group", "N", "mean", "top1% thr", *(f"% >{m}" for m in cfg.max_citations)],
            rows,
        )
    )
    if css_rows:
        run.tables.append(
            format_table(
                f"CSS class shares (%), depth {cfg.css_depth}",
                ["group", *(f"class {i}" for i in range(1, cfg.css_depth + 2))],
                css_rows,
            )
        )


def _series_from_citations(run: _Run, data: CitationData) -> list[tuple[str, PercentileSeries]]:
    world = doublerank.PreparedWorld.from_set(data.world)
    out = []
    for cs in _selected(run.cfg, data):
        ranks = doublerank.global_ranks(cs, world)
        run.plot(cs.label, "doublerank", [r[1] for r in ranks], [r[0] for r in ranks])
        series = doublerank.percentile_series(cs, world, run.cfg.grid)
        run.plot(cs.label, "percentile", series.x, series.n_local)
        g = run.group(cs.label)
        g["n_total"] = cs.size
        g["top_global_rank"] = ranks[0][1]
        out.append((cs.label, series))
    return out


def stage_doublerank(run: _Run, data: CitationData) -> list[tuple[str, PercentileSeries]]:
    series_list = _series_from_citations(run, data)
    for label, s in series_list:
        run.group(label)["series"] = _series_dict(s)
    rows = [[label, *s.n_local] for label, s in series_list]
    run.tables.append(
        format_table(
            f"Local papers in world top-x percentiles (world {data.world.label}, N={data.world.size})",
            ["group", *(f"{x:g}" for x in run.cfg.grid)],
            rows,
        )
    )
    return series_list


def _gather_series(run: _Run) -> list[tuple[str, PercentileSeries]]:
    cfg = run.cfg
    if cfg.shares:
        series = load_shares(cfg.shares)
        if cfg.groups:
            series = [(l, s) for l, s in series if l in cfg.groups]
        return series
    data = load_citations(cfg.inputs)
    return _series_from_citations(run, data)


def stage_fit(run: _Run, series_list) -> dict:
    """Fit every series by every requested method; returns {label: {method: fit}}."""
    cfg = run.cfg
    fitted: dict = {}
    t1_rows, t3_rows = [], []
    for label, raw in series_list:
        g = run.group(label)
        series = raw
        if raw.synthetic_counts:
            log.info("%s: share-derived counts, low-count cleaning skipped", label)
        else:
            series = fitkit.clean_series(raw, cfg.min_count)
            dropped = [p.x for p in raw.points if p not in series.points]
            if dropped:
                log.info("%s: dropped low-count percentiles %s", label, dropped)
        g["series"] = _series_dict(raw)
        g["series_fitted"] = [p.x for p in series.points]
        g.setdefault("n_total", raw.local_size)
        fits, errors = {}, {}
        for m in cfg.methods:
            try:
                fits[m] = fitkit.FITTERS[m](series, cfg.exclude)
            except DoubleRankError as exc:
                errors[m] = f"{type(exc).__name__}: {exc}"
                log.warning("%s: %s fit failed: %s", label, m, exc)
        g["fits"] = {m: _fit_dict(f) for m, f in fits.items()}
        if errors:
            g["fit_errors"] = errors
        g["residuals"] = {
            m: [list(r) for r in fitkit.residuals(raw, f)] for m, f in fits.items()
        }
        for m, f in fits.items():
            p001 = indicators.freq_at(f, 0.01, raw.local_size)
            t1_rows.append([label, m, f.a, f.alpha, f.p_value, p001])
            for x, obs, pred, diff in fitkit.residuals(raw, f):
                t3_rows.append([label, m, x, obs, pred, diff])
        fitted[label] = fits
    excl = ", ".join(f"{x:g}" for x in cfg.exclude) or "none"
    run.tables.append(
        format_table(f"Power-law fits N(x) = A x^alpha (excluded: {excl})",
                     ["group", "method", "A", "alpha", "p", "P_top0.01%"], t1_rows)
    )
    run.tables.append(
        format_table("Empirical vs calculated shares (%)",
                     ["group", "method", "percentile", "empirical", "calculated", "difference"], t3_rows)
    )
    return fitted


def stage_indicators(run: _Run, fitted: dict, sizes: dict) -> None:
    cfg = run.cfg
    rows = []
    for label, fits in fitted.items():
        g = run.group(label)
        n_total = cfg.n_total if cfg.n_total is not None else sizes.get(label)
        if n_total is None:
            raise UsageError(f"{label}: unknown paper count; pass --n-total")
        inds = {}
        for m, f in fits.items():
            ind = indicators.indicator_set(f, n_total, cfg.percentile)
            d = asdict(ind)
            if cfg.divisor:
                d["per_divisor"] = {
                    "p_top_1": ind.p_top_1 / cfg.divisor,
                    "p_top_10": ind.p_top_10 / cfg.divisor,
                    "p_top_001": ind.p_top_001 / cfg.divisor,
                    "freq": ind.freq / cfg.divisor,
                }
            inds[m] = d
            rows.append([label, m, ind.n_total, ind.e_p, ind.p_top_1, ind.p_top_10,
                         ind.p_top_001, ind.prob, ind.freq, ind.quality])
        g["indicators"] = inds
    run.tables.append(
        format_table(
            f"Indicators (P and N at top {cfg.percentile:g}%)",
            ["group", "method", "N", "e_p", "P_top1%", "P_top10%", "P_top0.01%", "P(x)", "N(x)", "quality"],
            rows,
        )
    )


def run(cfg: RunConfig) -> int:
    """Execute one configured pipeline; returns a process exit status."""
    stage = "config"
    try:
        cfg.validate()
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        log.addHandler(handler)
        try:
            r = _Run(cfg)
            log.info("mode %s, out %s", cfg.mode, out)
            if cfg.mode == "synth":
                stage = "synth"
                stage_synth(r)
            elif cfg.mode in ("analyze", "doublerank") or (cfg.mode == "report" and cfg.inputs):
                stage = "load"
                data = load_citations(cfg.inputs)
                if cfg.mode in ("analyze", "report"):
                    stage = "analyze"
                    stage_analyze(r, data)
                if cfg.mode in ("doublerank", "report"):
                    stage = "doublerank"
                    series = stage_doublerank(r, data)
                if cfg.mode == "report":
                    stage = "fit"
                    fitted = stage_fit(r, series)
                    stage = "indicators"
                    stage_indicators(r, fitted, {l: s.local_size for l, s in series})
            elif cfg.mode in ("fit", "indicators", "report"):
                if cfg.mode == "indicators" and (cfg.results or cfg.ptops):
                    stage = "indicators"
                    fitted, sizes = _prior_fits(cfg)
                else:
                    stage = "load"
                    series = _gather_series(r)
                    stage = "fit"
                    fitted = stage_fit(r, series)
                    sizes = {l: s.local_size for l, s in series}
                if cfg.mode != "fit":
                    stage = "indicators"
                    stage_indicators(r, fitted, sizes)
            stage = "write"
            r.finish()
            log.info("done")
        finally:
            log.removeHandler(handler)
            handler.close()
    except (DoubleRankError, OSError) as exc:
        print(f"dblrank: {stage} stage failed: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, UsageError) else 1
    return 0


def _prior_fits(cfg: RunConfig) -> tuple[dict, dict]:
    if cfg.ptops:
        if len(cfg.ptops) != 2:
            raise UsageError("--ptops takes two values: P_top1% P_top10%")
        if cfg.n_total is None:
            raise UsageError("--ptops needs --n-total")
        return {"ptops": {"CLOSED_FORM": indicators.closed_form_fit(*cfg.ptops)}}, {"ptops": cfg.n_total}
    prior = load_results(cfg.results)
    fitted = {label: g["fits"] for label, g in prior.items() if g["fits"]}
    if not fitted:
        raise UsageError(f"{cfg.results}: no fits to compute indicators from")
    return fitted, {label: prior[label]["n_total"] for label in fitted}


# ---------------------------------------------------------------------------- CLI


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dblrank",
        description="Percentile-based double-rank analysis of citation distributions.",
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="key = value configuration file (flags win)")
    shared.add_argument("--input", dest="inputs", nargs="+", help="group,citations CSV file(s)")
    shared.add_argument("--shares", help="group,percentile,share CSV file")
    shared.add_argument("--groups", nargs="+", help="only these groups (WORLD allowed)")
    shared.add_argument("--grid", help="percentile grid, e.g. 1,2,4,7,12,20,35,60,100")
    shared.add_argument("--exclude", help="percentiles left out of fitting (default 100; 'none' for all)")
    shared.add_argument("--min-count", dest="min_count", type=float, help="drop points below this count (default 10)")
    shared.add_argument("--methods", help="fit methods: lr, lm, ml (default lr)")
    shared.add_argument("--percentile", type=float, help="reporting percentile (default 0.01)")
    shared.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--n-total", dest="n_total", type=float, help="local paper count override")
    shared.add_argument("--divisor", type=float, help="also report size-dependent indicators divided by this")
    shared.add_argument("--no-plots", dest="plots", action="store_false", default=None)

    sub = parser.add_subparsers(dest="mode", metavar="{" + ",".join(MODES) + "}")
    p = sub.add_parser("synth", parents=[shared], help="generate lognormal citation sets")
    p.add_argument("--group", dest="synth_groups", action="append", help="label:mu:sigma:n (repeatable)")
    p.add_argument("--background", help="mu:sigma:n world background; writes WORLD.csv")
    p.add_argument("--preset", choices=["fig1", "fig3"], help="built-in parameter sets")
    p = sub.add_parser("analyze", parents=[shared], help="histograms, log bins, rank-frequency, CSS, tail fit")
    p.add_argument("--css-depth", dest="css_depth", type=int)
    p.add_argument("--max-citations", dest="max_citations", help="histogram cut-offs, e.g. 20,50")
    p.add_argument("--tail-window", dest="tail_window", help="citation window lo,hi (default 50,400)")
    sub.add_parser("doublerank", parents=[shared], help="global ranks and percentile series")
    sub.add_parser("fit", parents=[shared], help="fit N(x) = A x^alpha")
    p = sub.add_parser("indicators", parents=[shared], help="e_p, P(x), N(x), P_top0.01%")
    p.add_argument("--results", help="reuse fits from a results.json")
    p.add_argument("--ptops", help="P_top1%,P_top10% for the two-point closed form")
    p = sub.add_parser("report", parents=[shared], help="full pipeline")
    p.add_argument("--css-depth", dest="css_depth", type=int)
    p.add_argument("--max-citations", dest="max_citations")
    p.add_argument("--tail-window", dest="tail_window")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is None or f.name == "mode":
            continue
        conv = _CONVERTERS.get(f.name)
        if f.name in ("inputs", "groups", "synth_groups"):
            v = list(v)
        elif conv is not None and isinstance(v, str):
            v = conv(v)
        values[f.name] = v
    values["mode"] = ns.mode
    return RunConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.mode is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = config_from_args(ns)
    except (DoubleRankError, ValueError) as exc:
        print(f"dblrank: config stage failed: {exc}", file=sys.stderr)
        return 2
    status = run(cfg)
    if status == 2:
        parser.print_usage(sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

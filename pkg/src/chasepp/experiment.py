"""Trace files, synthetic inputs, experiment configuration, batch runs and reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .model import SystemParams, Trace, external_cost, validate_params
from .multigen import FLEET_MODES, GeneratorFleet, schedule_fleet
from .online import NoiseModel
from .ratio import adversary_chase, ratio_report

TRACE_COLUMNS = ("t", "a_kw", "h_kw", "p_usd_per_kwh")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class ValidationError(ValueError):
    def __init__(self, field: str, line: int, message: str = ""):
        self.field = field
        self.line = line
        super().__init__(f"line {line}: invalid {field}" + (f" ({message})" if message else ""))


def load_trace(path, params: SystemParams | None = None) -> Trace:
    """Read a CSV trace.  ``line`` in errors counts data rows from 1 (header excluded)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 0) from None
        header = [c.strip() for c in header]
        missing = [c for c in TRACE_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing column(s) {', '.join(missing)}", 0)
        idx = {c: header.index(c) for c in TRACE_COLUMNS}
        a, h, p = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", row_no)
            try:
                t = int(row[idx["t"]])
                vals = [float(row[idx[c]]) for c in TRACE_COLUMNS[1:]]
            except ValueError as e:
                raise ParseError(str(e), row_no) from None
            if t != row_no:
                raise ValidationError("t", row_no, f"expected {row_no}, got {t}")
            for name, v in zip(("a", "h", "p"), vals):
                if not math.isfinite(v):
                    raise ValidationError(name, row_no, "not finite")
            if vals[0] < 0:
                raise ValidationError("a", row_no, "negative")
            if vals[1] < 0:
                raise ValidationError("h", row_no, "negative")
            if params is not None and not params.p_min <= vals[2] <= params.p_max:
                raise ValidationError("p", row_no, f"outside [{params.p_min}, {params.p_max}]")
            a.append(vals[0])
            h.append(vals[1])
            p.append(vals[2])
    if not a:
        raise ParseError("no data rows", 1)
    return Trace.from_arrays(a, h, p)


def write_trace(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for t, s in enumerate(trace.slots, start=1):
            wr.writerow([t, repr(s.a), repr(s.h), repr(s.p)])


# Default economics (per hour-long slot, dollars and kW)
DEFAULT_ECONOMICS = dict(beta=1400.0, c_m=110.0, c_o=0.051, c_g=0.0179, eta=1.8, p_min=0.0, p_max=0.2)
DEFAULT_CAPACITIES = (1000.0,) * 3 + (3000.0,) * 4 + (5000.0,) * 3


def default_params(L: float = 5000.0, **overrides) -> SystemParams:
    kw = dict(DEFAULT_ECONOMICS)
    kw.update(overrides)
    return SystemParams(L=L, **kw)


SYNTHETIC_KINDS = ("fig11a", "fig11b", "adversary", "random", "diurnal")


def _episodes(rng: np.random.Generator, parts, T: int) -> np.ndarray:
    """Repeat episodes made of (level, min_len, max_len) runs until T slots are filled."""
    out: list[float] = []
    while len(out) < T:
        for level, lo, hi in parts:
            out.extend([level] * int(rng.integers(lo, hi + 1)))
    return np.array(out[:T], dtype=float)


def synthesize_trace(kind: str, params: SystemParams, T: int, seed: int = 0, n_units: int = 1) -> Trace:
    """Synthetic inputs at the scale of ``params.L`` (times ``n_units`` for random/diurnal).

    fig11a: long bursts of full demand L separated by idle stretches, at the maximum price.
    fig11b: a single full-demand slot, then a plateau at L/4 that just lifts the
        capped process to its upper boundary, then an idle stretch.
    adversary: the adaptive input that punishes the threshold policy without lookahead.
    random: independent uniform demand, heat and price.
    diurnal: daily demand and price cycles with noise, heat following demand.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    L, eta = params.L, params.eta
    if kind == "fig11a":
        a = _episodes(rng, ((L, 16, 30), (0.0, 14, 30)), T)
        return Trace.from_arrays(a, eta * a, params.p_max)
    if kind == "fig11b":
        a = _episodes(rng, ((L, 1, 1), (L / 4, 6, 9), (0.0, 14, 30)), T)
        return Trace.from_arrays(a, eta * a, params.p_max)
    if kind == "adversary":
        return adversary_chase("chase", params, T)
    if kind == "random":
        top = L * n_units
        return Trace.from_arrays(
            rng.uniform(0, top, T), rng.uniform(0, eta * top, T), rng.uniform(params.p_min, params.p_max, T)
        )
    if kind == "diurnal":
        top = L * n_units
        hours = np.arange(T) % 24
        day = 0.5 - 0.5 * np.cos(2 * np.pi * (hours - 3) / 24)
        a = np.clip(top * (0.15 + 0.7 * day + 0.1 * rng.standard_normal(T)), 0, None)
        h = np.clip(eta * top * (0.5 - 0.3 * day + 0.05 * rng.standard_normal(T)), 0, None)
        span = params.p_max - params.p_min
        p = np.clip(params.p_min + span * (0.25 + 0.6 * day + 0.1 * rng.standard_normal(T)), params.p_min, params.p_max)
        return Trace.from_arrays(a, h, p)
    raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")


@dataclass
class ExperimentConfig:
    """Flat experiment description; see README for the file schema."""

    algorithms: list[str] = field(default_factory=lambda: ["chase", "chaselk_plus", "chasepp_plus", "rhc"])
    windows: list[int] = field(default_factory=lambda: [0, 1, 2, 3])
    seeds: list[int] = field(default_factory=lambda: [0])
    noise_kind: str = "none"
    noise_std: list[float] = field(default_factory=lambda: [0.0])
    trace: str | None = None
    synthetic: str = "diurnal"
    horizon: int = 168
    capacities: list[float] = field(default_factory=lambda: list(DEFAULT_CAPACITIES))
    beta: float = DEFAULT_ECONOMICS["beta"]
    c_m: float = DEFAULT_ECONOMICS["c_m"]
    c_o: float = DEFAULT_ECONOMICS["c_o"]
    c_g: float = DEFAULT_ECONOMICS["c_g"]
    eta: float = DEFAULT_ECONOMICS["eta"]
    p_min: float = DEFAULT_ECONOMICS["p_min"]
    p_max: float = DEFAULT_ECONOMICS["p_max"]
    lower_bound: bool = False
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in FLEET_MODES or a == "offline":
                raise ValueError(f"unknown algorithm {a!r}")
        if not self.windows or any(int(w) != w or w < 0 for w in self.windows):
            raise ValueError("windows must be non-negative integers")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.trace is None and self.synthetic not in SYNTHETIC_KINDS:
            raise ValueError(f"unknown synthetic kind {self.synthetic!r}")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if not self.capacities:
            raise ValueError("at least one generator capacity is required")
        NoiseModel(self.noise_kind)
        for s in self.noise_std:
            NoiseModel(self.noise_kind, s, s)
        for L in self.capacities:
            validate_params(self.unit(L))

    def unit(self, L: float) -> SystemParams:
        return SystemParams(self.beta, self.c_m, self.c_o, float(L), self.eta, self.c_g, self.p_min, self.p_max)

    def fleet(self) -> GeneratorFleet:
        return GeneratorFleet.from_capacities(self.unit(1.0), self.capacities)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(extra))}")
        d = dict(d)
        for key in ("algorithms", "windows", "seeds", "noise_std", "capacities"):
            if key in d and not isinstance(d[key], list):
                d[key] = [d[key]]
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError("config must be a mapping of keys to values")
        return cls.from_dict(data)


RUN_FIELDS = (
    "algorithm", "w", "seed", "noise_frac", "total_cost", "benchmark_cost", "optimal_cost",
    "cost_reduction", "empirical_ratio", "switch_count",
)
BOUND_FIELDS = (
    "p_max", "w", "alpha", "lambda_star", "cr_chase", "cr_chaselk", "cr_chasepp", "cr_chasepp_plus",
    "r_off_limit", "cr_lower", "delta1_star", "delta2_star",
)


@dataclass
class Report:
    runs: list[dict[str, Any]]
    bounds: list[dict[str, Any]]


def _trace_for(cfg: ExperimentConfig, seed: int) -> Trace:
    if cfg.trace is not None:
        tr = load_trace(cfg.trace, cfg.unit(max(cfg.capacities)))
        if cfg.horizon > len(tr):
            raise ValueError(f"horizon {cfg.horizon} exceeds trace length {len(tr)}")
        return Trace(tr.slots[: cfg.horizon])
    largest = cfg.unit(max(cfg.capacities))
    if cfg.synthetic in ("random", "diurnal"):
        # scale to the whole fleet: n_units times the largest capacity covers its total
        n = sum(cfg.capacities) / largest.L
        return synthesize_trace(cfg.synthetic, largest, cfg.horizon, seed, n_units=n)
    return synthesize_trace(cfg.synthetic, largest, cfg.horizon, seed)


def run_experiment(cfg: ExperimentConfig) -> Report:
    fleet = cfg.fleet()
    runs = []
    for seed in cfg.seeds:
        trace = _trace_for(cfg, seed)
        bench = external_cost(trace, fleet.units[0])
        opt = schedule_fleet(trace, fleet, "offline").total_cost
        runs.append(_row("offline", 0, seed, 0.0, opt, bench, opt, 0))
        for frac in cfg.noise_std:
            noise = NoiseModel(cfg.noise_kind, frac, frac, seed=seed)
            for algo in cfg.algorithms:
                for w in cfg.windows:
                    s = schedule_fleet(trace, fleet, algo, int(w), noise)
                    runs.append(_row(algo, int(w), seed, frac, s.total_cost, bench, opt, s.startup_count))
    bounds = []
    head = fleet.units[0]
    for w in sorted(set(int(w) for w in cfg.windows)):
        lb = None
        if cfg.lower_bound:
            from .lower_bound import lower_bound

            lb = lower_bound(w, head)
        bounds.append(asdict(ratio_report(w, head, lb)))
    return Report(runs, bounds)


def _row(algo, w, seed, frac, cost, bench, opt, switches) -> dict[str, Any]:
    return dict(
        algorithm=algo,
        w=w,
        seed=seed,
        noise_frac=float(frac),
        total_cost=float(cost),
        benchmark_cost=float(bench),
        optimal_cost=float(opt),
        cost_reduction=(bench - cost) / bench if bench > 0 else 0.0,
        empirical_ratio=cost / opt if opt > 0 else 1.0,
        switch_count=int(switches),
    )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_to_csv(report: Report) -> str:
    """Two sections separated by a blank line, each with its own header line."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    buf.write("# runs\n")
    wr.writerow(RUN_FIELDS)
    for r in report.runs:
        wr.writerow([_cell(r[k]) for k in RUN_FIELDS])
    buf.write("\n# bounds\n")
    wr.writerow(BOUND_FIELDS)
    for b in report.bounds:
        wr.writerow([_cell(b[k]) for k in BOUND_FIELDS])
    return buf.getvalue()


def report_to_json(report: Report) -> str:
    by_algo: dict[str, list] = {}
    for r in report.runs:
        by_algo.setdefault(r["algorithm"], []).append({k: v for k, v in r.items() if k != "algorithm"})
    return json.dumps({"runs": by_algo, "bounds": report.bounds}, indent=2, sort_keys=True) + "\n"


def _parse_cell(key: str, text: str):
    if text == "":
        return None
    if key == "algorithm":
        return text
    if key in ("w", "seed", "switch_count"):
        return int(text)
    return float(text)


def read_report_csv(text: str) -> Report:
    sections: dict[str, list[dict[str, Any]]] = {}
    current = None
    header = None
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        if row[0].startswith("# "):
            current = row[0][2:]
            sections[current] = []
            header = None
            continue
        if header is None:
            header = row
            continue
        sections[current].append({k: _parse_cell(k, v) for k, v in zip(header, row)})
    return Report(sections.get("runs", []), sections.get("bounds", []))


def emit_report(report: Report, fmt: str = "csv", out=None) -> str:
    """Render the report; write it to ``out`` when given.  Returns the text."""
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report)
    else:
        raise ValueError("format must be csv or json")
    if out is not None:
        Path(out).write_text(text)
    return text

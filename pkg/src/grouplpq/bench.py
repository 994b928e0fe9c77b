"""Experiment sweeps over synthetic instances and their result tables.

A plan fixes a generator template, model parameters and a solver config,
then lists sweep points. Each point overrides any of those fields. Every
trial's seed is derived from ``(plan.seed, trial)`` before dispatch, so a
point's trials see the same instances as the other points' trials and the
output does not depend on the worker count.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .datagen import GenSpec, gen_problem
from .issapl import SolverConfig, solve
from .model import INF, format_r, parse_r

CSV_COLUMNS = ("sweep", "rel_err_mean", "success_rate", "time_mean_s", "outer_iters_mean", "support_mean")
GEN_KEYS = tuple(f.name for f in dataclasses.fields(GenSpec) if f.name != "seed")
MODEL_KEYS = ("alpha", "p", "q", "r")
SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(SolverConfig) if f.name not in MODEL_KEYS)


def relative_error(x, x_or) -> float:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    x_or = np.asarray(getattr(x_or, "values", x_or), dtype=float)
    ref = np.linalg.norm(x_or)
    if ref == 0:
        raise ValueError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(x - x_or) / ref)


@dataclass(frozen=True)
class SweepPoint:
    label: str
    overrides: dict

    def split(self):
        """Route overrides to (generator, model, solver) keyword sets."""
        gen, model, solver = {}, {}, {}
        for k, v in self.overrides.items():
            if k in GEN_KEYS:
                gen[k] = v
            elif k in MODEL_KEYS:
                model[k] = v
            elif k in SOLVER_KEYS:
                solver[k] = v
            else:
                raise ValueError(f"sweep key {k!r} is not a generator, model or solver field")
        return gen, model, solver


def _fmt_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, int) or (isinstance(v, float) and v.is_integer()):
        return str(int(v))
    return str(format_r(v)) if v is INF else repr(float(v))


def expand_sweep(sweep) -> list[SweepPoint]:
    """Accepts ``{"axis": k, "values": [...]}``, ``{"axis": k, "start", "stop", "step"}``
    (inclusive stop) or ``{"points": [{"label": ..., "set": {...}}, ...]}``."""
    if "points" in sweep:
        pts = []
        for i, pt in enumerate(sweep["points"]):
            overrides = dict(pt.get("set", {}))
            label = pt.get("label") or ";".join(f"{k}={_fmt_value(v)}" for k, v in overrides.items()) or str(i)
            pts.append(SweepPoint(label, overrides))
        if not pts:
            raise ValueError("sweep has no points")
        return pts
    axis = sweep["axis"]
    if "values" in sweep:
        values = list(sweep["values"])
    else:
        start, stop, step = sweep["start"], sweep["stop"], sweep.get("step", 1)
        if step <= 0:
            raise ValueError("sweep step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(n)]
    if not values:
        raise ValueError("sweep has no values")
    return [SweepPoint(f"{axis}={_fmt_value(v)}", {axis: v}) for v in values]


@dataclass
class ExperimentPlan:
    gen: GenSpec
    solver: SolverConfig
    sweep: list
    alpha: float
    p: float = 2.0
    q: float = 0.5
    r: object = 2.0
    trials: int = 50
    success_threshold: float = 0.01
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        self.r = parse_r(self.r)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sweep:
            raise ValueError("sweep must be nonempty")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def from_dict(cls, d) -> "ExperimentPlan":
        d = dict(d)
        known = {"gen", "solver", "sweep", "alpha", "p", "q", "r", "trials", "success_threshold", "seed", "name"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        gen = GenSpec(**d.pop("gen", {}))
        solver = SolverConfig.from_dict(d.pop("solver", {}))
        sweep = expand_sweep(d.pop("sweep"))
        return cls(gen=gen, solver=solver, sweep=sweep, **d)

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def trial_seed(self, trial: int) -> int:
        return int(np.random.SeedSequence([self.seed, trial]).generate_state(1)[0])


def load_preset(name: str) -> dict:
    """Raw dict of a preset plan shipped with the package."""
    ref = resources.files(__package__).joinpath("presets", f"{name}.json")
    if not ref.is_file():
        raise ValueError(f"no preset named {name!r}")
    return json.loads(ref.read_text())


def preset_names() -> list[str]:
    folder = resources.files(__package__).joinpath("presets")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


@dataclass
class TrialOutcome:
    rel_err: float
    wall_time: float
    outer_iters: int
    support: int
    error: str | None = None


@dataclass
class ResultRow:
    sweep: str
    rel_err_mean: float
    success_rate: float
    time_mean_s: float | None
    outer_iters_mean: float
    support_mean: float
    trials: int = 0
    failures: int = 0
    outcomes: list = field(default_factory=list, repr=False, compare=False)


def build_trial(plan: ExperimentPlan, point: SweepPoint, trial: int):
    """``(problem, x_or, config)`` for one trial of one sweep point."""
    gen_o, model_o, solver_o = point.split()
    spec = dataclasses.replace(plan.gen, seed=plan.trial_seed(trial), **gen_o)
    model = {k: getattr(plan, k) for k in MODEL_KEYS}
    model.update(model_o)
    config = dataclasses.replace(plan.solver, **solver_o)
    problem, x_or = gen_problem(spec, model["alpha"], model["p"], model["q"], parse_r(model["r"]))
    return problem, x_or, config


def run_trial(plan: ExperimentPlan, point: SweepPoint, trial: int) -> TrialOutcome:
    try:
        problem, x_or, config = build_trial(plan, point, trial)
        t0 = time.perf_counter()
        x, record = solve(problem, config)
        elapsed = time.perf_counter() - t0
        support = record.entries[-1].support_size if record.entries else 0
        return TrialOutcome(relative_error(x, x_or), elapsed, record.outer_iterations, support)
    except Exception as exc:  # recorded per trial, never fatal for the sweep
        return TrialOutcome(math.nan, math.nan, 0, 0, f"{type(exc).__name__}: {exc}")


def _run_task(args):
    return run_trial(*args)


def aggregate(point: SweepPoint, outcomes, threshold) -> ResultRow:
    ok = [o for o in outcomes if o.error is None]
    n = len(outcomes)

    def mean(vals):
        return float(np.mean(vals)) if vals else math.nan

    return ResultRow(
        sweep=point.label,
        rel_err_mean=mean([o.rel_err for o in ok]),
        success_rate=sum(o.rel_err < threshold for o in ok) / n,
        time_mean_s=mean([o.wall_time for o in ok]),
        outer_iters_mean=mean([o.outer_iters for o in ok]),
        support_mean=mean([o.support for o in ok]),
        trials=n,
        failures=n - len(ok),
        outcomes=list(outcomes),
    )


def run_experiment(plan: ExperimentPlan, threads: int = 1, progress=None) -> list[ResultRow]:
    """Solve every (point, trial) pair and aggregate per point in sweep order."""
    tasks = [(plan, pt, t) for pt in plan.sweep for t in range(plan.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        outcomes = []
        for task in tasks:
            outcomes.append(_run_task(task))
            if progress:
                progress(len(outcomes), len(tasks))
    rows = []
    for i, pt in enumerate(plan.sweep):
        chunk = outcomes[i * plan.trials:(i + 1) * plan.trials]
        rows.append(aggregate(pt, chunk, plan.success_threshold))
    return rows


def _num(v):
    if v is None:
        return ""
    return repr(float(v))


def _row_dict(row: ResultRow, timing: bool):
    d = {k: getattr(row, k) for k in CSV_COLUMNS}
    if not timing:
        d["time_mean_s"] = None
    for k in CSV_COLUMNS[1:]:
        if d[k] is not None and math.isnan(d[k]):
            d[k] = None
    d["trials"] = row.trials
    d["failures"] = row.failures
    return d


def format_results(rows, fmt: str = "csv", timing: bool = True) -> str:
    """Render rows as CSV (six fixed columns) or JSON.

    Without ``timing`` the wall-time column is left empty (``null``), which
    makes the output a pure function of the plan and seed.
    """
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            d = _row_dict(row, timing)
            w.writerow([d["sweep"]] + [_num(d[k]) for k in CSV_COLUMNS[1:]])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"columns": list(CSV_COLUMNS), "rows": [_row_dict(r, timing) for r in rows]},
                          indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_results(rows, path, fmt: str | None = None, timing: bool = True) -> Path:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_results(rows, fmt, timing))
    return path


def parse_results(text: str, fmt: str = "csv") -> list[ResultRow]:
    """Inverse of :func:`format_results` (per-trial outcomes are not stored)."""
    def num(v):
        return None if v in ("", None) else float(v)

    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        return [ResultRow(rec[0], *[num(v) for v in rec[1:]]) for rec in reader]
    data = json.loads(text)
    return [ResultRow(d["sweep"], *[num(d[k]) for k in CSV_COLUMNS[1:]],
                      trials=d.get("trials", 0), failures=d.get("failures", 0)) for d in data["rows"]]


def results_schema() -> dict:
    ref = resources.files(__package__).joinpath("schemas", "results.schema.json")
    return json.loads(ref.read_text())


def single_solve(plan: ExperimentPlan, point_index: int = 0, trial: int = 0):
    """Run one trial directly; returns ``(x, x_or, record)``."""
    problem, x_or, config = build_trial(plan, plan.sweep[point_index], trial)
    x, record = solve(problem, config)
    return x, x_or, record


MATCHED_R = {"laplace": "1", "gaussian": "2", "uniform": "inf"}


@dataclass
class RCell:
    noise: str
    s: int
    errors: dict
    """Mean relative error per r label ("1", "2", "inf")."""

    @property
    def winner(self) -> str:
        return min(self.errors, key=self.errors.get)

    @property
    def matched(self) -> bool:
        """True when the noise's matched r is strictly best."""
        want = MATCHED_R[self.noise]
        best = self.errors[want]
        return all(best < e for r, e in self.errors.items() if r != want)


def r_cells(plan: ExperimentPlan, rows) -> list[RCell]:
    """Group a noise x s x r sweep into per-(noise, s) cells."""
    cells: dict = {}
    for pt, row in zip(plan.sweep, rows):
        gen_o, model_o, _ = pt.split()
        noise = gen_o.get("noise_kind", plan.gen.noise_kind)
        s = int(gen_o.get("s", plan.gen.s))
        r = format_r(parse_r(model_o.get("r", plan.r)))
        key = str(int(r)) if r != "inf" else "inf"
        cells.setdefault((noise, s), {})[key] = row.rel_err_mean
    return [RCell(noise, s, errs) for (noise, s), errs in cells.items()]

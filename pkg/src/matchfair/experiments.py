"""Monte-Carlo harness: cell grids of (n, phi_m, phi_w), per-instance records,
bootstrap confidence intervals, and CSV emission.

Determinism contract: every instance derives its RNG stream from
(master_seed, cell_index, instance_index), so the record stream is identical
for any worker count. Wall-time columns are exempt: they are populated only
when the ``runtime`` measurement is requested and are inherently
non-reproducible.
"""

from __future__ import annotations

import csv
import enum
import time
from dataclasses import dataclass, fields, replace
from multiprocessing import get_context
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import sex_equality_cost
from .deferred_acceptance import ProposingSide, choose_proposing_side, da_star, deferred_acceptance
from .errors import BudgetExceededError, InvalidInputError
from .fairness import classify_instance, ibils_search, sex_equal_exhaustive
from .lattice import (
    DEFAULT_MAX_MATCHINGS,
    DEFAULT_MAX_SECONDS,
    build_rotation_poset,
    enumerate_lattice,
)
from .mallows import MallowsParams, generate_profile, substream_rng


class Measurement(enum.Enum):
    LATTICE_SIZE = "lattice_size"
    ROTATION_STATS = "rotation_stats"
    SEXEQUAL_LOCATION = "sexequal_location"
    DA_COSTS = "da_costs"
    ALGO_COMPARISON = "algo_comparison"
    EGALITARIAN_COST = "egalitarian_cost"
    WELFARE_SCATTER = "welfare_scatter"
    RUNTIME = "runtime"


class Statistic(enum.Enum):
    MEDIAN = "median"
    MEAN = "mean"
    Q1 = "q1"
    Q3 = "q3"
    MAX = "max"


_STAT_FN = {
    Statistic.MEDIAN: np.median,
    Statistic.MEAN: np.mean,
    Statistic.Q1: lambda a: np.percentile(a, 25),
    Statistic.Q3: lambda a: np.percentile(a, 75),
    Statistic.MAX: np.max,
}


@dataclass(frozen=True)
class Budgets:
    max_matchings: int = DEFAULT_MAX_MATCHINGS
    max_seconds: float = DEFAULT_MAX_SECONDS


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple[int, ...]
    phi_grid: tuple[tuple[float, float], ...]
    instances_per_cell: int
    master_seed: int
    measurements: frozenset[Measurement]
    budgets: Budgets = Budgets()
    bootstrap_repeats: int = 100

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(
            self, "phi_grid", tuple((float(a), float(b)) for a, b in self.phi_grid)
        )
        object.__setattr__(self, "measurements", frozenset(self.measurements))
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise InvalidInputError("n_values must be a non-empty list of positive integers")
        if not self.phi_grid:
            raise InvalidInputError("phi_grid must not be empty")
        for pm, pw in self.phi_grid:
            if not (0.0 <= pm <= 1.0 and 0.0 <= pw <= 1.0):
                raise InvalidInputError(f"phi values must lie in [0,1]: ({pm}, {pw})")
        if self.instances_per_cell < 1:
            raise InvalidInputError("instances_per_cell must be >= 1")
        if self.bootstrap_repeats < 1:
            raise InvalidInputError("bootstrap_repeats must be >= 1")
        if not self.measurements:
            raise InvalidInputError("at least one measurement is required")

    def cells(self) -> list[tuple[int, int, float, float]]:
        """(cell_index, n, phi_m, phi_w) in declaration order."""
        out = []
        for n in self.n_values:
            for phi_m, phi_w in self.phi_grid:
                out.append((len(out), n, phi_m, phi_w))
        return out

    def to_json_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "phi_grid": [list(p) for p in self.phi_grid],
            "instances_per_cell": self.instances_per_cell,
            "master_seed": self.master_seed,
            "measurements": sorted(m.value for m in self.measurements),
            "budgets": {
                "max_matchings": self.budgets.max_matchings,
                "max_seconds": self.budgets.max_seconds,
            },
            "bootstrap_repeats": self.bootstrap_repeats,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise InvalidInputError("config must be a JSON object")
        required = {"n_values", "phi_grid", "instances_per_cell", "master_seed", "measurements"}
        missing = required - doc.keys()
        if missing:
            raise InvalidInputError(f"config is missing keys: {sorted(missing)}")
        unknown = doc.keys() - required - {"budgets", "bootstrap_repeats"}
        if unknown:
            raise InvalidInputError(f"config has unknown keys: {sorted(unknown)}")
        try:
            measurements = frozenset(Measurement(m) for m in doc["measurements"])
        except ValueError as exc:
            raise InvalidInputError(f"unknown measurement: {exc}") from None
        budgets_doc = doc.get("budgets", {})
        budgets = Budgets(
            max_matchings=int(budgets_doc.get("max_matchings", DEFAULT_MAX_MATCHINGS)),
            max_seconds=float(budgets_doc.get("max_seconds", DEFAULT_MAX_SECONDS)),
        )
        return cls(
            n_values=tuple(doc["n_values"]),
            phi_grid=tuple(tuple(p) for p in doc["phi_grid"]),
            instances_per_cell=int(doc["instances_per_cell"]),
            master_seed=int(doc["master_seed"]),
            measurements=measurements,
            budgets=budgets,
            bootstrap_repeats=int(doc.get("bootstrap_repeats", 100)),
        )


@dataclass
class ResultRecord:
    """One simulated instance; unset metrics stay None (empty CSV cells)."""

    n: int
    phi_m: float
    phi_w: float
    seed: int
    lattice_size: int | None = None
    rotation_count: int | None = None
    poset_height: int | None = None
    poset_width: int | None = None
    s_m_opt: int | None = None
    s_w_opt: int | None = None
    s_m_pess: int | None = None
    s_w_pess: int | None = None
    c_da_men: int | None = None
    c_da_women: int | None = None
    c_da_star: int | None = None
    c_sexequal: int | None = None
    c_ibils: int | None = None
    egalitarian_men_opt: int | None = None
    sexequal_is_extreme: bool | None = None
    t_da_men: float | None = None
    t_da_women: float | None = None
    t_da_star: float | None = None
    t_sexequal: float | None = None
    t_ibils: float | None = None
    censored: bool = False


RECORD_COLUMNS = [f.name for f in fields(ResultRecord)]

# metric columns summarize() knows how to aggregate
NUMERIC_COLUMNS = [
    "lattice_size", "rotation_count", "poset_height", "poset_width",
    "s_m_opt", "s_w_opt", "s_m_pess", "s_w_pess",
    "c_da_men", "c_da_women", "c_da_star", "c_sexequal", "c_ibils",
    "egalitarian_men_opt",
    "t_da_men", "t_da_women", "t_da_star", "t_sexequal", "t_ibils",
]
BINARY_COLUMNS = ["sexequal_is_extreme"]


def _run_instance(config: ExperimentConfig, cell_index: int, n: int,
                  phi_m: float, phi_w: float, instance_index: int) -> ResultRecord:
    rng = substream_rng(config.master_seed, cell_index, instance_index)
    profile = generate_profile(n, MallowsParams(phi_m, phi_w), rng)
    meas = config.measurements
    rec = ResultRecord(n=n, phi_m=phi_m, phi_w=phi_w, seed=instance_index)
    timing = Measurement.RUNTIME in meas

    need_lattice = meas & {Measurement.LATTICE_SIZE, Measurement.ROTATION_STATS}
    if need_lattice:
        try:
            lattice = enumerate_lattice(profile, config.budgets.max_matchings,
                                        config.budgets.max_seconds)
            rec.lattice_size = lattice.size
        except BudgetExceededError as exc:
            rec.lattice_size = len(exc.partial_matchings)
            rec.censored = True
            lattice = None
        if lattice is not None and Measurement.ROTATION_STATS in meas:
            poset = build_rotation_poset(profile, lattice)
            rec.rotation_count = poset.r
            rec.poset_height = poset.height
            rec.poset_width = poset.width

    need_extremes = meas & {
        Measurement.SEXEQUAL_LOCATION, Measurement.DA_COSTS,
        Measurement.ALGO_COMPARISON, Measurement.EGALITARIAN_COST,
        Measurement.WELFARE_SCATTER, Measurement.RUNTIME,
    }
    if need_extremes:
        cls = classify_instance(profile)
        s_opt, s_pess = cls.scores_m, cls.scores_w
        if meas & {Measurement.WELFARE_SCATTER, Measurement.DA_COSTS,
                   Measurement.ALGO_COMPARISON, Measurement.SEXEQUAL_LOCATION}:
            rec.s_m_opt = s_opt.s_m
            rec.s_w_pess = s_opt.s_w
            rec.s_m_pess = s_pess.s_m
            rec.s_w_opt = s_pess.s_w
        c_men = sex_equality_cost(s_opt)
        c_women = sex_equality_cost(s_pess)
        star_side = choose_proposing_side(phi_m, phi_w)
        c_star = c_men if star_side is ProposingSide.MEN else c_women
        if Measurement.DA_COSTS in meas:
            rec.c_da_men = c_men
            rec.c_da_women = c_women
            rec.c_da_star = c_star
        if Measurement.EGALITARIAN_COST in meas:
            rec.egalitarian_men_opt = s_opt.s_m + s_opt.s_w

        if meas & {Measurement.SEXEQUAL_LOCATION, Measurement.ALGO_COMPARISON}:
            t0 = time.perf_counter()
            result = sex_equal_exhaustive(profile, config.budgets.max_matchings,
                                          config.budgets.max_seconds)
            if timing:
                rec.t_sexequal = time.perf_counter() - t0
            rec.c_sexequal = result.cost
            if not result.optimal:
                rec.censored = True
            if Measurement.SEXEQUAL_LOCATION in meas:
                rec.sexequal_is_extreme = (c_star == result.cost) if result.optimal else None
        if Measurement.ALGO_COMPARISON in meas:
            t0 = time.perf_counter()
            rec.c_ibils = ibils_search(profile).cost
            if timing:
                rec.t_ibils = time.perf_counter() - t0

        if timing:
            t0 = time.perf_counter()
            deferred_acceptance(profile, ProposingSide.MEN)
            rec.t_da_men = time.perf_counter() - t0
            t0 = time.perf_counter()
            deferred_acceptance(profile, ProposingSide.WOMEN)
            rec.t_da_women = time.perf_counter() - t0
            t0 = time.perf_counter()
            da_star(profile, phi_m, phi_w)
            rec.t_da_star = time.perf_counter() - t0
    return rec


def _worker(task) -> ResultRecord:
    config_doc, cell_index, n, phi_m, phi_w, instance_index = task
    config = ExperimentConfig.from_json_dict(config_doc)
    return _run_instance(config, cell_index, n, phi_m, phi_w, instance_index)


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   progress=None) -> Iterator[ResultRecord]:
    """Yield one record per (cell, instance), ordered, censoring flagged.

    ``workers`` > 1 fans instances out to a process pool; ordering and content
    are unchanged because every instance is seeded independently.
    """
    tasks = [
        (config.to_json_dict(), cell_index, n, phi_m, phi_w, instance_index)
        for cell_index, n, phi_m, phi_w in config.cells()
        for instance_index in range(config.instances_per_cell)
    ]
    done = 0
    if workers <= 1:
        for task in tasks:
            rec = _worker(task)
            done += 1
            if progress:
                progress(done, len(tasks))
            yield rec
    else:
        ctx = get_context()
        chunk = max(1, len(tasks) // (workers * 8))
        with ctx.Pool(processes=workers) as pool:
            for rec in pool.imap(_worker, tasks, chunksize=chunk):
                done += 1
                if progress:
                    progress(done, len(tasks))
                yield rec


@dataclass(frozen=True)
class SummaryStat:
    """One aggregated statistic with its 95% percentile-bootstrap interval."""

    statistic: Statistic
    value: float
    ci_low: float
    ci_high: float
    cell: tuple[int, float, float] | None = None
    column: str | None = None
    sample_count: int = 0
    censored_fraction: float = 0.0
    flagged: bool = False


def bootstrap_ci(samples: Sequence[float], statistic: Statistic,
                 repeats: int = 100, rng: np.random.Generator | None = None) -> SummaryStat:
    """Percentile bootstrap: resample with replacement at the sample size,
    take the statistic each time, report the (2.5, 97.5) percentiles."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise InvalidInputError("bootstrap needs at least one sample")
    if repeats < 1:
        raise InvalidInputError("repeats must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    fn = _STAT_FN[statistic]
    value = float(fn(arr))
    idx = rng.integers(0, arr.size, size=(repeats, arr.size))
    stats = np.asarray([fn(arr[row]) for row in idx], dtype=np.float64)
    ci_low, ci_high = np.percentile(stats, [2.5, 97.5])
    return SummaryStat(statistic=statistic, value=value,
                       ci_low=float(ci_low), ci_high=float(ci_high),
                       sample_count=int(arr.size))


_SUMMARY_STATS = (Statistic.Q1, Statistic.MEDIAN, Statistic.Q3, Statistic.MAX)
CENSOR_FLAG_THRESHOLD = 0.01


def _group_by_cell(records: Iterable[ResultRecord]):
    groups: dict[tuple[int, float, float], list[ResultRecord]] = {}
    for rec in records:
        groups.setdefault((rec.n, rec.phi_m, rec.phi_w), []).append(rec)
    return groups


def summarize(records: Iterable[ResultRecord], column: str,
              bootstrap_repeats: int = 100, seed: int = 0) -> list[SummaryStat]:
    """Q1/median/Q3/max (or the mean, for booleans) per cell, with CIs.

    Cells whose censored fraction exceeds 1% are flagged. Cells with no data
    for the column are omitted rather than fabricated.
    """
    if column not in NUMERIC_COLUMNS and column not in BINARY_COLUMNS:
        raise InvalidInputError(f"unknown summarizable column: {column}")
    out: list[SummaryStat] = []
    for cell_idx, (cell, recs) in enumerate(sorted(_group_by_cell(records).items())):
        values = [getattr(r, column) for r in recs]
        values = [float(v) for v in values if v is not None]
        if not values:
            continue
        censored = sum(1 for r in recs if r.censored) / len(recs)
        flagged = censored > CENSOR_FLAG_THRESHOLD
        stats = (Statistic.MEAN,) if column in BINARY_COLUMNS else _SUMMARY_STATS
        for stat_idx, stat in enumerate(stats):
            rng = substream_rng(seed, cell_idx, stat_idx)
            base = bootstrap_ci(values, stat, repeats=bootstrap_repeats, rng=rng)
            out.append(replace(base, cell=cell, column=column,
                               censored_fraction=censored, flagged=flagged))
    return out


def sexequal_location_rate(records: Iterable[ResultRecord],
                           bootstrap_repeats: int = 100, seed: int = 0) -> list[SummaryStat]:
    """Per-cell fraction of instances whose sex-equal matching is the
    deferred-acceptance extreme picked by the lower-dispersion-proposes rule."""
    return summarize(records, "sexequal_is_extreme",
                     bootstrap_repeats=bootstrap_repeats, seed=seed)


# ---------------------------------------------------------------------------
# CSV I/O


def _format_cell_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records_csv(records: Iterable[ResultRecord], path) -> int:
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow([_format_cell_value(getattr(rec, c)) for c in RECORD_COLUMNS])
            count += 1
    return count


def _parse_cell_value(name: str, text: str):
    if text == "":
        return None
    if name in ("censored", "sexequal_is_extreme"):
        return text == "true"
    if name in ("phi_m", "phi_w") or name.startswith("t_"):
        return float(text)
    return int(text)


def read_records_csv(path) -> list[ResultRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_COLUMNS:
            raise InvalidInputError(f"unexpected record columns in {path}")
        for row in reader:
            kwargs = {name: _parse_cell_value(name, row[name]) for name in RECORD_COLUMNS}
            kwargs["censored"] = bool(kwargs["censored"])
            out.append(ResultRecord(**kwargs))
    return out


SUMMARY_COLUMNS = ["n", "phi_m", "phi_w", "column", "statistic", "value",
                   "ci_low", "ci_high", "sample_count", "censored_fraction", "flagged"]


def write_summaries_csv(summaries: Iterable[SummaryStat], path) -> int:
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            n, phi_m, phi_w = s.cell if s.cell else (None, None, None)
            row = [n, phi_m, phi_w, s.column, s.statistic.value, s.value,
                   s.ci_low, s.ci_high, s.sample_count, s.censored_fraction, s.flagged]
            writer.writerow([_format_cell_value(v) for v in row])
            count += 1
    return count

"""Run orchestration: configuration, CSV ingestion and persistence, the
RMSE replication study over (n, M) grids, and the partition-size
heuristic."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import (BayesPartitionSensitivity,
                         ConditionalMixtureSensitivity, EmpiricalMarginal,
                         JointMixtureSensitivity, PartitionSensitivity)
from .measures import MEASURES, check_measures
from .sample import Sample, empirical_quantiles
from .simulators import (GAMMA_RATIO_2, LINEAR_21, correlated_linear_21,
                         gamma_ratio_2, generate_sample, oracle_values)

ESTIMATOR_TOKENS = ("FreqPdf", "FreqCdf", "Bb", "Pu", "BNJ", "BNC")
PARTITION_ESTIMATORS = ("FreqPdf", "FreqCdf", "Bb", "Pu")
RESULT_COLUMNS = ("estimator", "measure", "input", "n", "M", "point",
                  "lo95", "hi95", "rmse_pct", "replicates", "wall_ms")

_SIMULATORS = {GAMMA_RATIO_2: gamma_ratio_2, LINEAR_21: correlated_linear_21}


class CsvFormatError(ValueError):
    """Input CSV violates the expected sample layout."""


def check_estimators(names):
    if isinstance(names, str):
        names = names.split(",")
    canonical = {t.lower(): t for t in ESTIMATOR_TOKENS}
    out = []
    for name in names:
        token = canonical.get(str(name).strip().lower())
        if token is None:
            raise ValueError("unknown estimator %r; choose from %s"
                             % (name, ", ".join(ESTIMATOR_TOKENS)))
        out.append(token)
    if not out:
        raise ValueError("at least one estimator is required")
    return tuple(out)


@dataclass
class RunConfig:
    """Everything one estimation or study run needs.

    ``n`` may be a tuple for study grids; ``m_list`` is required whenever a
    partition estimator is selected. ``inputs`` holds 0-based column
    indices (None analyzes all inputs).
    """

    simulator: str = None
    input_csv: str = None
    inputs: tuple = None
    estimators: tuple = ("FreqPdf",)
    measures: tuple = MEASURES
    n: object = 300
    m_list: tuple = ()
    n_draws: int = 100
    burn_in: int = None
    seed: int = 0
    out_dir: str = None
    resample: str = "bootstrap"
    sequence: str = "quasi_random"

    def __post_init__(self):
        self.estimators = check_estimators(self.estimators)
        self.measures = check_measures(self.measures)
        self.m_list = tuple(int(m) for m in self.m_list)
        if self.inputs is not None:
            self.inputs = tuple(int(i) for i in self.inputs)
        if (self.simulator is None) == (self.input_csv is None):
            raise ValueError(
                "exactly one of simulator and input_csv must be given")
        if self.simulator is not None and self.simulator not in _SIMULATORS:
            raise ValueError("unknown simulator %r; choose from %s"
                             % (self.simulator,
                                ", ".join(sorted(_SIMULATORS))))
        needs_m = any(e in PARTITION_ESTIMATORS for e in self.estimators)
        if needs_m and not self.m_list:
            raise ValueError("partition estimators need at least one M "
                             "(use m_list)")
        if self.resample not in ("bootstrap", "fresh"):
            raise ValueError("resample must be 'bootstrap' or 'fresh'")

    def n_values(self):
        return tuple(int(v) for v in np.atleast_1d(self.n))


@dataclass(frozen=True)
class ResultRow:
    estimator: str
    measure: str
    input: str
    n: int
    M: object = None
    point: float = None
    lo95: float = None
    hi95: float = None
    rmse_pct: float = None
    replicates: int = None
    wall_ms: float = None

    def as_csv_fields(self):
        def fmt(v):
            if v is None or (isinstance(v, float) and not np.isfinite(v)):
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)
        return [fmt(getattr(self, c)) for c in RESULT_COLUMNS]


@dataclass
class StudyResult:
    """Long-format result table plus per-measure draw vectors."""

    rows: list = field(default_factory=list)
    draws: dict = field(default_factory=dict)  # (estimator, measure) -> {input: array}

    def to_csv(self, path, include_wall_time=True):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for row in self.rows:
                fields = row.as_csv_fields()
                if not include_wall_time:
                    fields[-1] = ""
                writer.writerow(fields)

    def subset(self, **criteria):
        out = [r for r in self.rows
               if all(getattr(r, k) == v for k, v in criteria.items())]
        return out


def ingest_csv(path):
    """Read a sample CSV: header of k input names followed by one output
    name, then one numeric row per simulator run.

    Raises
    ------
    CsvFormatError
        With the offending line number for ragged rows, non-numeric cells
        or non-finite values.
    """
    path = Path(path)
    if not path.exists():
        raise CsvFormatError("no such file: %s" % path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("%s: file is empty" % path) from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise CsvFormatError(
                "%s: header must name at least one input and the output"
                % path)
        width = len(header)
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CsvFormatError(
                    "%s: line %d has %d fields, expected %d"
                    % (path, lineno, len(row), width))
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise CsvFormatError(
                    "%s: line %d contains a non-numeric cell" % (path, lineno)
                ) from None
            if not all(np.isfinite(values)):
                raise CsvFormatError(
                    "%s: line %d contains a non-finite value" % (path, lineno))
            data.append(values)
    if len(data) < 2:
        raise CsvFormatError("%s: need at least two data rows" % path)
    arr = np.asarray(data)
    return Sample(x=arr[:, :-1], y=arr[:, -1], input_names=header[:-1])


def write_sample_csv(sample, path):
    """Write a sample in the ingestible layout (x1,..,xk,y header)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(sample.input_names) + ["y"])
        for i in range(sample.n):
            writer.writerow([repr(v) for v in sample.x[i]]
                            + [repr(float(sample.y[i]))])


def heuristic_partition_size(n):
    """Partition-size rule of thumb M = round(2.5 n^(1/3)).

    For n of at least 100 the result is capped at n/10 so bins keep at
    least ten observations.
    """
    if n < 8:
        raise ValueError("heuristic needs n >= 8")
    m = int(round(2.5 * n ** (1.0 / 3.0)))
    if n >= 100:
        m = min(m, n // 10)
    return max(m, 2)


def _resolve_sample(config, n, seed):
    if config.simulator is not None:
        spec = _SIMULATORS[config.simulator]()
        return spec, generate_sample(spec, n, seed=seed,
                                     sequence=config.sequence)
    sample = ingest_csv(config.input_csv)
    return None, sample


def _input_marginals(spec, sample):
    if spec is not None:
        return spec.input_distributions
    return [EmpiricalMarginal(sample.x[:, i]) for i in range(sample.k)]


def _build_estimator(token, config, n_bins, marginals, inputs=None,
                     random_state=None):
    common = dict(measures=config.measures,
                  inputs=config.inputs if inputs is None else inputs)
    seed = config.seed if random_state is None else random_state
    if token == "FreqPdf":
        return PartitionSensitivity(n_bins=n_bins, route="pdf", **common)
    if token == "FreqCdf":
        return PartitionSensitivity(n_bins=n_bins, route="cdf", **common)
    if token in ("Bb", "Pu"):
        return BayesPartitionSensitivity(
            scheme=token.lower(), n_bins=n_bins, n_draws=config.n_draws,
            random_state=seed, **common)
    cls = (JointMixtureSensitivity if token == "BNJ"
           else ConditionalMixtureSensitivity)
    return cls(input_distributions=marginals, n_draws=config.n_draws,
               burn_in=config.burn_in, random_state=seed, **common)


def run(config):
    """Run the selected estimators once and persist results.

    Persists ``results.csv`` (fixed column set), one draws CSV per
    (estimator, measure) with posterior draws, and ``manifest.json``
    recording the configuration, seed and package version.

    Returns
    -------
    StudyResult
    """
    n = config.n_values()[0]
    spec, sample = _resolve_sample(config, n, config.seed)
    marginals = _input_marginals(spec, sample)
    result = StudyResult()
    for token in config.estimators:
        m_values = (config.m_list if token in PARTITION_ESTIMATORS
                    else (None,))
        for n_bins in m_values:
            started = time.perf_counter()
            est = _build_estimator(token, config, n_bins, marginals)
            est.fit(sample.x, sample.y)
            wall_ms = 1000.0 * (time.perf_counter() - started)
            for row in est.results_rows():
                result.rows.append(ResultRow(
                    estimator=token, n=sample.n, M=n_bins,
                    wall_ms=round(wall_ms, 3), **row))
            for (i, measure), draws in est.draws_.items():
                key = (token, measure)
                result.draws.setdefault(key, {})
                result.draws[key][sample.input_names[i]] = np.asarray(draws)
    if config.out_dir is not None:
        persist(config, result)
    return result


def persist(config, result, status="ok", error=None):
    """Write results.csv, posterior-draw files and the manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.to_csv(out / "results.csv")
    for (token, measure), per_input in sorted(result.draws.items()):
        names = sorted(per_input)
        columns = [per_input[name] for name in names]
        with open(out / ("draws_%s_%s.csv" % (token, measure)), "w",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for values in zip(*columns):
                writer.writerow([repr(float(v)) for v in values])
    manifest = {
        "config": _jsonable(asdict(config)),
        "package_version": __version__,
        "status": status,
    }
    if error is not None:
        manifest["error"] = str(error)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _bootstrap_indices(rng, n):
    return rng.integers(0, n, size=n)


def rmse_study(config, replicates=100):
    """Replication study of estimator error over the (n, M) grid.

    Per cell, ``replicates`` re-estimates are produced (bootstrap row
    resampling of one base sample by default, or fresh simulator samples
    with ``resample='fresh'``) and summarized as the root-mean-square
    error relative to the analytical measure value, in percent.

    Returns
    -------
    StudyResult
        Rows carry rmse_pct plus the replicate mean and 2.5/97.5%
        quantiles; draw vectors hold the replicate estimates.
    """
    if replicates < 2:
        raise ValueError("need at least two replicates")
    if config.simulator is None:
        raise ValueError("the RMSE study needs a built-in simulator "
                         "(no analytical values exist for CSV input)")
    spec = _SIMULATORS[config.simulator]()
    oracle = oracle_values(spec)
    inputs = (config.inputs if config.inputs is not None
              else tuple(range(spec.k)))
    result = StudyResult()
    for n in config.n_values():
        base_seed = np.random.SeedSequence(config.seed, spawn_key=(n,))
        base = generate_sample(spec, n, seed=base_seed,
                               sequence=config.sequence)
        for token in config.estimators:
            m_values = (config.m_list if token in PARTITION_ESTIMATORS
                        else (None,))
            for n_bins in m_values:
                started = time.perf_counter()
                estimates = np.full(
                    (replicates, len(inputs), len(config.measures)), np.nan)
                token_id = ESTIMATOR_TOKENS.index(token)
                for rep in range(replicates):
                    rep_seed = np.random.SeedSequence(
                        config.seed,
                        spawn_key=(n, token_id, n_bins or 0, rep))
                    rng = np.random.default_rng(rep_seed)
                    if config.resample == "bootstrap":
                        idx = _bootstrap_indices(rng, n)
                        sample = Sample(x=base.x[idx], y=base.y[idx],
                                        input_names=base.input_names)
                    else:
                        sample = generate_sample(spec, n, seed=rep_seed,
                                                 sequence=config.sequence)
                    est = _build_estimator(
                        token, config, n_bins, spec.input_distributions,
                        inputs=inputs, random_state=rep_seed.spawn(1)[0])
                    est.fit(sample.x, sample.y)
                    for a, i in enumerate(inputs):
                        for b, measure in enumerate(config.measures):
                            col = est.measures_.index(measure)
                            estimates[rep, a, b] = est.point_[i, col]
                wall_ms = 1000.0 * (time.perf_counter() - started)
                for a, i in enumerate(inputs):
                    for b, measure in enumerate(config.measures):
                        draws = estimates[:, a, b]
                        truth = oracle.value(measure, i)
                        rmse = float(np.sqrt(np.mean((draws - truth) ** 2)))
                        lo, hi = empirical_quantiles(draws, [0.025, 0.975])
                        name = base.input_names[i]
                        result.rows.append(ResultRow(
                            estimator=token, measure=measure, input=name,
                            n=n, M=n_bins, point=float(draws.mean()),
                            lo95=float(lo), hi95=float(hi),
                            rmse_pct=100.0 * rmse / truth,
                            replicates=replicates,
                            wall_ms=round(wall_ms, 3)))
                        key = (token, measure)
                        result.draws.setdefault(key, {})
                        result.draws[key]["%s_n%d_M%s" % (name, n, n_bins)] \
                            = draws
    if config.out_dir is not None:
        persist(config, result)
    return result

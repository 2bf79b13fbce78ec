"""
Benchmark Harness
Replicated train/fit/score experiments over the benchmark problems, with
deterministic seeding, CSV results and RRMSE summaries.
"""

import itertools
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .benchmark_problems import BenchmarkProblem, get_problem
from .covariance import MODEL_FAMILIES, KernelConfig
from .doe import training_design, uniform_test_set
from .errors import DegenerateDataError, SummaryError
from .gp_fit import FittedModel, fit
from .gp_predict import latent_map, predict
from .mixed_input import Dataset, denormalize_array

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    'problem', 'model', 'replicate', 'n', 'N', 'rrmse', 'nll', 'fit_seconds', 'jitter',
    'design_seed', 'level_seed', 'test_seed', 'start_seed', 'error'
]

DEFAULT_MODELS = ('LV2', 'UC', 'MC', 'AddUC')

# seed stream index per purpose
SEED_STREAMS = {'design': 0, 'level': 1, 'test': 2, 'start': 3, 'problem': 4}


def rrmse(pred: Sequence[float], truth: Sequence[float]) -> float:
    """
    Relative root mean squared error against the spread of the truth.

    Args:
        pred: Predictions
        truth: True responses

    Returns:
        sqrt(sum (pred - truth)^2 / sum (truth - mean(truth))^2)
    """
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} truths")
    if truth.size < 2:
        raise ValueError("rrmse needs at least 2 points")
    denominator = np.sum((truth - truth.mean()) ** 2)
    if denominator == 0:
        raise DegenerateDataError("truth is constant; RRMSE undefined")
    return float(np.sqrt(np.sum((pred - truth) ** 2) / denominator))


@dataclass(frozen=True)
class ReplicateSeeds:
    design: int
    level: int
    test: int
    start: int
    problem: int


def derive_seeds(master_seed: int, replicate: int) -> ReplicateSeeds:
    """
    Per-replicate seeds: the first 32-bit word of
    SeedSequence([master_seed, replicate, stream]) for each stream.
    """
    if master_seed < 0 or replicate < 0:
        raise ValueError("master seed and replicate index must be non-negative")

    def stream(index: int) -> int:
        return int(np.random.SeedSequence([master_seed, replicate, index]).generate_state(1)[0])

    return ReplicateSeeds(**{name: stream(index) for name, index in SEED_STREAMS.items()})


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    models: Tuple[str, ...] = DEFAULT_MODELS
    n: Optional[int] = None
    N: int = 10000
    replicates: int = 30
    n_starts: int = 200
    master_seed: int = 0
    lhd_budget: int = 10000
    n_jobs: int = 1
    record_timing: bool = False
    results_path: Optional[str] = None
    summary_path: Optional[str] = None
    latent_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'models', tuple(self.models))
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.n is not None and self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.n_starts < 1:
            raise ValueError(f"n_starts must be >= 1, got {self.n_starts}")
        if not self.models:
            raise ValueError("models must not be empty")
        unknown = [m for m in self.models if m not in MODEL_FAMILIES]
        if unknown:
            raise ValueError(f"unknown models {unknown}, expected a subset of {list(MODEL_FAMILIES)}")
        problem = get_problem(self.problem)
        if 'BNGP' in self.models and not problem.underlying_names:
            raise ValueError(f"problem '{self.problem}' exposes no underlying variables for BNGP")

    @property
    def train_size(self) -> int:
        return self.n if self.n is not None else get_problem(self.problem).n_train

    def resolve_path(self, template: Optional[str]) -> Optional[str]:
        """Fill {problem}, {n}, {n_starts} and other field placeholders in an output path."""
        if template is None:
            return None
        values = asdict(self)
        values.update(problem=self.problem.replace(':', '_'), n=self.train_size)
        return template.format(**values)


def load_experiment_configs(path: Union[str, Path]) -> List[ExperimentConfig]:
    """
    Read a TOML experiment file, expanding an optional [grid] table.

    Top-level keys (or an [experiment] table) give the base config; each
    list in [grid] contributes one axis of the cartesian product.
    """
    with open(Path(path), 'rb') as f:
        document = tomllib.load(f)
    base = dict(document.get('experiment', {}))
    base.update({k: v for k, v in document.items() if k not in ('experiment', 'grid')})
    grid = document.get('grid', {})

    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted((set(base) | set(grid)) - known)
    if unknown:
        raise ValueError(f"unknown experiment keys: {unknown}")

    keys = list(grid)
    configs = []
    for values in itertools.product(*[grid[k] for k in keys]):
        settings = dict(base)
        settings.update(zip(keys, values))
        configs.append(ExperimentConfig(**settings))
    return configs


@dataclass
class ResultRecord:
    problem: str
    model: str
    replicate: int
    n: int
    N: int
    rrmse: Optional[float] = None
    nll: Optional[float] = None
    fit_seconds: Optional[float] = None
    jitter: Optional[float] = None
    design_seed: Optional[int] = None
    level_seed: Optional[int] = None
    test_seed: Optional[int] = None
    start_seed: Optional[int] = None
    error: str = ''


@dataclass(frozen=True)
class ReplicateData:
    """Training and hold-out data shared by every model in a replicate."""
    problem: BenchmarkProblem
    train: Dataset
    test_X: np.ndarray
    test_T: np.ndarray
    test_y: np.ndarray
    seeds: ReplicateSeeds


def build_replicate(problem_name: str, n: int, N: int, seeds: ReplicateSeeds,
                    lhd_budget: int = 10000) -> ReplicateData:
    problem = get_problem(problem_name, seeds.problem)
    schema = problem.schema
    design = training_design(n, schema, seeds.design, seeds.level, lhd_budget)
    X = denormalize_array(design.X, schema)
    train = Dataset(schema, X, design.T, problem.evaluate(X, design.T))

    test = uniform_test_set(N, schema, seeds.test)
    test_X = denormalize_array(test.X, schema)
    return ReplicateData(problem, train, test_X, test.T, problem.evaluate(test_X, test.T), seeds)


def numeric_dataset(problem: BenchmarkProblem, data: Dataset) -> Dataset:
    """Training data for the numeric-only baseline: x plus the underlying variables."""
    return Dataset(problem.numeric_schema(), problem.numeric_inputs(data.X, data.T),
                   np.zeros((data.n, 0), dtype=int), data.y)


def fit_model(replicate: ReplicateData, model_name: str, n_starts: int) -> FittedModel:
    config = KernelConfig.for_model(model_name)
    data = replicate.train
    if model_name == 'BNGP':
        data = numeric_dataset(replicate.problem, data)
    return fit(data, config, n_starts=n_starts, seed=replicate.seeds.start)


def predict_test(model: FittedModel, replicate: ReplicateData, model_name: str) -> np.ndarray:
    if model_name == 'BNGP':
        X = replicate.problem.numeric_inputs(replicate.test_X, replicate.test_T)
        mean, _ = predict(model, X, np.zeros((X.shape[0], 0), dtype=int), return_variance=False)
    else:
        mean, _ = predict(model, replicate.test_X, replicate.test_T, return_variance=False)
    return mean


def export_latent(model: FittedModel, path: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """
    Latent coordinates as a table with columns factor, level, label, z1, z2.

    Args:
        model: Model fitted with a latent-variable kernel
        path: CSV destination; nothing is written when None

    Returns:
        The table, one row per level of each factor
    """
    latent = latent_map(model)
    rows = []
    for j, (factor, coords) in enumerate(zip(model.schema.qualitative, latent.coords), 1):
        for level, z in enumerate(coords, 1):
            rows.append({
                'factor': j,
                'level': level,
                'label': factor.levels[level - 1],
                'z1': float(z[0]),
                'z2': float(z[1]) if latent.dim == 2 else 0.0,
            })
    frame = pd.DataFrame(rows, columns=['factor', 'level', 'label', 'z1', 'z2'])
    if path is not None:
        frame.to_csv(path, index=False)
    return frame


def _run_replicate(config: ExperimentConfig, replicate: int) -> List[ResultRecord]:
    seeds = derive_seeds(config.master_seed, replicate)
    n = config.train_size
    base = dict(problem=config.problem, replicate=replicate, n=n, N=config.N,
                design_seed=seeds.design, level_seed=seeds.level,
                test_seed=seeds.test, start_seed=seeds.start)
    try:
        data = build_replicate(config.problem, n, config.N, seeds, config.lhd_budget)
    except Exception as e:
        logger.warning(f"{config.problem} replicate {replicate}: data generation failed: {e}")
        return [ResultRecord(model=name, error=f"{type(e).__name__}: {e}", **base) for name in config.models]

    records = []
    for name in config.models:
        record = ResultRecord(model=name, **base)
        try:
            started = time.perf_counter()
            model = fit_model(data, name, config.n_starts)
            elapsed = time.perf_counter() - started
            record.rrmse = rrmse(predict_test(model, data, name), data.test_y)
            record.nll = model.nll
            record.jitter = model.jitter
            if config.record_timing:
                record.fit_seconds = elapsed
            if config.latent_dir and model.config.family == 'lv':
                directory = Path(config.latent_dir)
                directory.mkdir(parents=True, exist_ok=True)
                export_latent(model, directory / f"{config.problem.replace(':', '_')}_{name}_rep{replicate}.csv")
            logger.info(f"{config.problem} replicate {replicate} {name}: rrmse={record.rrmse:.4g}")
        except Exception as e:
            record.error = f"{type(e).__name__}: {e}"
            logger.warning(f"{config.problem} replicate {replicate} {name} failed: {record.error}")
        records.append(record)
    return records


def run_experiment(config: ExperimentConfig) -> List[ResultRecord]:
    """
    Run every replicate of one configuration.

    Returns:
        One record per (replicate, model), sorted by (problem, model, replicate)
    """
    logger.info(f"Running {config.problem}: models={list(config.models)}, n={config.train_size}, "
                f"N={config.N}, replicates={config.replicates}, starts={config.n_starts}")
    replicates = range(config.replicates)
    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as executor:
            batches = list(executor.map(lambda r: _run_replicate(config, r), replicates))
    else:
        batches = [_run_replicate(config, r) for r in replicates]
    records = [record for batch in batches for record in batch]
    return sort_records(records)


def sort_records(records: Sequence[ResultRecord]) -> List[ResultRecord]:
    return sorted(records, key=lambda r: (r.problem, r.model, r.n, r.replicate))


def records_frame(records: Sequence[ResultRecord]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in records], columns=RESULT_COLUMNS)


def write_results_csv(records: Sequence[ResultRecord], path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(path, index=False)


def read_results_csv(path: Union[str, Path]) -> List[ResultRecord]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"results file lacks columns: {missing}")

    def number(text, kind):
        return kind(float(text)) if text != '' else None

    records = []
    for row in frame.to_dict(orient='records'):
        records.append(ResultRecord(
            problem=row['problem'],
            model=row['model'],
            replicate=int(row['replicate']),
            n=int(row['n']),
            N=int(row['N']),
            rrmse=number(row['rrmse'], float),
            nll=number(row['nll'], float),
            fit_seconds=number(row['fit_seconds'], float),
            jitter=number(row['jitter'], float),
            design_seed=number(row['design_seed'], int),
            level_seed=number(row['level_seed'], int),
            test_seed=number(row['test_seed'], int),
            start_seed=number(row['start_seed'], int),
            error=row['error'],
        ))
    return records


def summarize(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """
    Median and quartiles of RRMSE per (problem, model, n).

    Quartiles use linear interpolation between order statistics. Failed fits
    are excluded and counted.
    """
    if not records:
        raise SummaryError("no records to summarize")
    frame = records_frame(records)
    frame['failed'] = frame['rrmse'].isna()

    rows = []
    for (problem, model, n), group in frame.groupby(['problem', 'model', 'n'], sort=True):
        values = group.loc[~group['failed'], 'rrmse'].astype(float).to_numpy()
        if values.size == 0:
            raise SummaryError(f"no successful fits for {problem}/{model} at n={n}")
        rows.append({
            'problem': problem,
            'model': model,
            'n': int(n),
            'count': int(values.size),
            'failed': int(group['failed'].sum()),
            'median': float(np.median(values)),
            'q25': float(np.percentile(values, 25)),
            'q75': float(np.percentile(values, 75)),
        })
    return pd.DataFrame(rows)


def write_summary_json(summary: pd.DataFrame, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(Path(path), 'w', encoding='utf-8') as f:
        json.dump(summary.to_dict(orient='records'), f, indent=2)

"""
Mixed Input Domain
Input schema, mixed quantitative/qualitative points, datasets and unit-cube normalization.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import SchemaError, ValidationError


@dataclass(frozen=True)
class QuantitativeInput:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class QualitativeFactor:
    """A nominal factor; levels are addressed 1..m externally."""
    name: str
    levels: Tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.levels)

    def level_index(self, value: Any) -> int:
        """
        Resolve a CSV cell to a 1-based level index.

        Args:
            value: A level label or a 1-based index

        Returns:
            The 1-based level index
        """
        text = str(value).strip()
        if text in self.levels:
            return self.levels.index(text) + 1
        if isinstance(value, (float, np.floating)) and float(value).is_integer():
            text = str(int(value))
            if text in self.levels:
                return self.levels.index(text) + 1
        try:
            index = int(float(text))
        except ValueError:
            raise ValidationError([f"factor '{self.name}': unknown level '{value}'"])
        if not 1 <= index <= self.m:
            raise ValidationError([f"factor '{self.name}': level {index} out of range 1..{self.m}"])
        return index


@dataclass(frozen=True)
class InputSchema:
    quantitative: Tuple[QuantitativeInput, ...] = ()
    qualitative: Tuple[QualitativeFactor, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'quantitative', tuple(self.quantitative))
        object.__setattr__(self, 'qualitative', tuple(self.qualitative))
        for i, quant in enumerate(self.quantitative, 1):
            if not float(quant.lower) < float(quant.upper):
                raise SchemaError(f"input {i} ('{quant.name}'): lower {quant.lower} must be < upper {quant.upper}")
        for j, factor in enumerate(self.qualitative, 1):
            if factor.m < 2:
                raise SchemaError(f"factor {j} ('{factor.name}') needs at least 2 levels, got {factor.m}")
            if len(set(factor.levels)) != factor.m:
                raise SchemaError(f"factor {j} ('{factor.name}') has duplicate level labels")

    @classmethod
    def build(cls, ranges: Sequence[Tuple[float, float]] = (),
              level_counts: Sequence[int] = (),
              names: Optional[Sequence[str]] = None,
              factor_names: Optional[Sequence[str]] = None,
              labels: Optional[Sequence[Sequence[Any]]] = None) -> 'InputSchema':
        names = names or [f"x{i}" for i in range(1, len(ranges) + 1)]
        factor_names = factor_names or [f"t{j}" for j in range(1, len(level_counts) + 1)]
        quantitative = tuple(
            QuantitativeInput(name, float(lo), float(hi)) for name, (lo, hi) in zip(names, ranges)
        )
        qualitative = []
        for j, (name, m) in enumerate(zip(factor_names, level_counts)):
            level_labels = labels[j] if labels else range(1, m + 1)
            qualitative.append(QualitativeFactor(name, tuple(str(label) for label in level_labels)))
        return cls(quantitative, tuple(qualitative))

    @property
    def p(self) -> int:
        return len(self.quantitative)

    @property
    def q(self) -> int:
        return len(self.qualitative)

    @property
    def lower(self) -> np.ndarray:
        return np.array([quant.lower for quant in self.quantitative], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([quant.upper for quant in self.quantitative], dtype=float)

    @property
    def level_counts(self) -> Tuple[int, ...]:
        return tuple(factor.m for factor in self.qualitative)

    @property
    def input_names(self) -> List[str]:
        return [quant.name for quant in self.quantitative]

    @property
    def factor_names(self) -> List[str]:
        return [factor.name for factor in self.qualitative]

    def unit_cube(self) -> 'InputSchema':
        quantitative = tuple(QuantitativeInput(quant.name, 0.0, 1.0) for quant in self.quantitative)
        return InputSchema(quantitative, self.qualitative)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'quantitative': [
                {'name': quant.name, 'lower': quant.lower, 'upper': quant.upper}
                for quant in self.quantitative
            ],
            'qualitative': [
                {'name': factor.name, 'levels': list(factor.levels)}
                for factor in self.qualitative
            ]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'InputSchema':
        quantitative = tuple(
            QuantitativeInput(str(item['name']), float(item['lower']), float(item['upper']))
            for item in data.get('quantitative', [])
        )
        qualitative = []
        for item in data.get('qualitative', []):
            levels = item['levels']
            if isinstance(levels, int):
                levels = range(1, levels + 1)
            qualitative.append(QualitativeFactor(str(item['name']), tuple(str(level) for level in levels)))
        return cls(quantitative, tuple(qualitative))


@dataclass(frozen=True)
class MixedPoint:
    x: Tuple[float, ...] = ()
    t: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'x', tuple(float(v) for v in np.ravel(self.x)))
        object.__setattr__(self, 't', tuple(int(v) for v in np.ravel(self.t)))


def validate(point: MixedPoint, schema: InputSchema) -> List[str]:
    """Every violated bound or level constraint; an empty list means the point is valid."""
    violations = []
    if len(point.x) != schema.p:
        violations.append(f"expected {schema.p} quantitative values, got {len(point.x)}")
    if len(point.t) != schema.q:
        violations.append(f"expected {schema.q} factor levels, got {len(point.t)}")

    for i, (value, quant) in enumerate(zip(point.x, schema.quantitative), 1):
        if not np.isfinite(value):
            violations.append(f"input {i} ('{quant.name}') is not finite")
        elif value < quant.lower:
            violations.append(f"input {i} ('{quant.name}') below lower bound: {value} < {quant.lower}")
        elif value > quant.upper:
            violations.append(f"input {i} ('{quant.name}') above upper bound: {value} > {quant.upper}")

    for j, (level, factor) in enumerate(zip(point.t, schema.qualitative), 1):
        if not 1 <= level <= factor.m:
            violations.append(f"factor {j} level out of range: {level} not in 1..{factor.m}")
    return violations


def array_violations(X: np.ndarray, T: np.ndarray, schema: InputSchema) -> List[str]:
    X = np.asarray(X, dtype=float)
    T = np.asarray(T)
    violations = []
    if X.ndim != 2 or X.shape[1] != schema.p:
        return [f"expected X with {schema.p} columns, got shape {X.shape}"]
    if T.ndim != 2 or T.shape[1] != schema.q or T.shape[0] != X.shape[0]:
        return [f"expected T with shape ({X.shape[0]}, {schema.q}), got {T.shape}"]

    if not np.all(np.isfinite(X)):
        violations.append("non-finite quantitative values")
    for i, quant in enumerate(schema.quantitative):
        column = X[:, i]
        bad = np.flatnonzero((column < quant.lower) | (column > quant.upper))
        if bad.size:
            violations.append(f"input {i + 1} ('{quant.name}') out of [{quant.lower}, {quant.upper}] in rows {bad[:5].tolist()}")
    for j, factor in enumerate(schema.qualitative):
        column = T[:, j]
        bad = np.flatnonzero((column < 1) | (column > factor.m))
        if bad.size:
            violations.append(f"factor {j + 1} level out of range 1..{factor.m} in rows {bad[:5].tolist()}")
    return violations


def normalize_array(X: np.ndarray, schema: InputSchema) -> np.ndarray:
    X = np.asarray(X, dtype=float).reshape(-1, schema.p)
    return (X - schema.lower) / (schema.upper - schema.lower)


def denormalize_array(U: np.ndarray, schema: InputSchema) -> np.ndarray:
    U = np.asarray(U, dtype=float).reshape(-1, schema.p)
    return np.clip(schema.lower + U * (schema.upper - schema.lower), schema.lower, schema.upper)


def normalize(point: MixedPoint, schema: InputSchema) -> MixedPoint:
    """
    Map a native-unit point onto the unit cube.

    Args:
        point: Point valid under schema
        schema: Native-unit schema

    Returns:
        Point with x in [0, 1]^p and t unchanged
    """
    violations = validate(point, schema)
    if violations:
        raise ValidationError(violations)
    return MixedPoint(normalize_array(point.x, schema)[0], point.t)


def denormalize(point: MixedPoint, schema: InputSchema) -> MixedPoint:
    violations = validate(point, schema.unit_cube())
    if violations:
        raise ValidationError(violations)
    return MixedPoint(denormalize_array(point.x, schema)[0], point.t)


@dataclass(frozen=True)
class Dataset:
    """n observed (w, y) pairs held as read-only arrays; T carries 1-based levels."""
    schema: InputSchema
    X: np.ndarray
    T: np.ndarray
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        X = np.array(self.X, dtype=float).reshape(y.shape[0] if self.schema.p == 0 else -1, self.schema.p)
        T = np.array(self.T, dtype=int).reshape(X.shape[0], self.schema.q) if self.schema.q else np.zeros((X.shape[0], 0), dtype=int)
        if X.shape[0] < 1:
            raise ValidationError(["dataset needs at least one point"])
        if y.shape[0] != X.shape[0]:
            raise ValidationError([f"{X.shape[0]} points but {y.shape[0]} responses"])
        violations = array_violations(X, T, self.schema)
        if violations:
            raise ValidationError(violations)
        for array in (X, T, y):
            array.setflags(write=False)
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'T', T)
        object.__setattr__(self, 'y', y)

    @classmethod
    def from_points(cls, schema: InputSchema, points: Sequence[MixedPoint],
                    y: Sequence[float]) -> 'Dataset':
        X = np.array([point.x for point in points], dtype=float).reshape(len(points), schema.p)
        T = np.array([point.t for point in points], dtype=int).reshape(len(points), schema.q)
        return cls(schema, X, T, y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def points(self) -> List[MixedPoint]:
        return [MixedPoint(x, t) for x, t in zip(self.X, self.T)]

    def normalized(self) -> 'Dataset':
        return Dataset(self.schema.unit_cube(), normalize_array(self.X, self.schema), self.T, self.y)


def load_schema(path: Union[str, Path]) -> InputSchema:
    with open(Path(path), 'r', encoding='utf-8') as f:
        return InputSchema.from_dict(json.load(f))


def save_schema(schema: InputSchema, path: Union[str, Path]) -> None:
    with open(Path(path), 'w', encoding='utf-8') as f:
        json.dump(schema.to_dict(), f, indent=2)


def read_points_csv(path: Union[str, Path], schema: InputSchema) -> Tuple[np.ndarray, np.ndarray, pd.DataFrame]:
    frame = pd.read_csv(path, comment='#')
    missing = [name for name in schema.input_names + schema.factor_names if name not in frame.columns]
    if missing:
        raise ValidationError([f"missing columns: {', '.join(missing)}"])

    X = frame[schema.input_names].to_numpy(dtype=float) if schema.p else np.zeros((len(frame), 0))
    T = np.zeros((len(frame), schema.q), dtype=int)
    for j, factor in enumerate(schema.qualitative):
        T[:, j] = [factor.level_index(value) for value in frame[factor.name]]
    return X, T, frame


def read_dataset_csv(path: Union[str, Path], schema: InputSchema) -> Dataset:
    X, T, frame = read_points_csv(path, schema)
    if 'y' not in frame.columns:
        raise ValidationError(["dataset CSV needs a final 'y' column"])
    return Dataset(schema, X, T, frame['y'].to_numpy(dtype=float))


def points_frame(X: np.ndarray, T: np.ndarray, schema: InputSchema, use_labels: bool = True) -> pd.DataFrame:
    columns = {}
    for i, name in enumerate(schema.input_names):
        columns[name] = np.asarray(X)[:, i]
    for j, factor in enumerate(schema.qualitative):
        levels = np.asarray(T)[:, j]
        columns[factor.name] = [factor.levels[level - 1] for level in levels] if use_labels else levels
    return pd.DataFrame(columns)


def write_dataset_csv(dataset: Dataset, path: Union[str, Path], use_labels: bool = True) -> None:
    frame = points_frame(dataset.X, dataset.T, dataset.schema, use_labels)
    frame['y'] = dataset.y
    frame.to_csv(path, index=False)

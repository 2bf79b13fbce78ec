"""
Benchmark Problems
Mixed-input response surfaces with their qualitative level tables and the
underlying numerical variables behind each qualitative factor.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .mixed_input import InputSchema, MixedPoint, array_violations

MATH_FN1_COEFFS = np.array([1.0, 13.0, 1.5, 9.0, 4.5])

# Level labels follow the cross-section inertias (outer size h, wall 0.15h):
# level 4 hollow square (1 - 0.7**4) / 12 = 0.0633, level 5 hollow circular
# pi / 64 (1 - 0.7**4) = 0.0373. Level tables that list level 4 as hollow
# circular pair each label with the other shape's inertia.
BEAM_SHAPES = ('circular', 'square', 'I-shape', 'hollow-square', 'hollow-circular', 'H-shape')
BEAM_INERTIA = np.array([np.pi / 64, 1.0 / 12, 0.0449, 0.0633, 0.0373, 0.0167])

BOREHOLE_INPUTS = ('T_u', 'H_u', 'T_l', 'L', 'K_w', 'r')
BOREHOLE_RANGES = ((63070.0, 115600.0), (990.0, 1110.0), (63.1, 116.0),
                   (1120.0, 1680.0), (9855.0, 12045.0), (100.0, 50000.0))
BOREHOLE_RW = np.array([0.05, 0.10, 0.15])
BOREHOLE_HL = np.array([700.0, 740.0, 780.0, 820.0])

OTL_INPUTS = ('R_b1', 'R_b2', 'R_c1', 'R_c2')
OTL_RANGES = ((50.0, 150.0), (25.0, 70.0), (1.2, 2.5), (0.25, 1.2))
OTL_RF = np.array([0.5, 1.2, 2.1, 2.9])
OTL_BETA = np.array([50.0, 100.0, 150.0, 200.0, 250.0, 300.0])

PISTON_INPUTS = ('M', 'S', 'V_0', 'T_a', 'T_0')
PISTON_RANGES = ((30.0, 60.0), (0.005, 0.020), (0.002, 0.010), (290.0, 296.0), (340.0, 360.0))
PISTON_P0 = np.array([9000.0, 10000.0, 11000.0])
PISTON_K = np.array([1000.0, 2000.0, 3000.0, 4000.0, 5000.0])

# level t of the 12-level factor -> (r_w index, H_l index)
BOREHOLE12_TABLE = tuple((i, k) for i in range(3) for k in range(4))

DEFAULT_N = {
    'mathfn1': 70,
    'mathfn2': 100,
    'bending': 60,
    'borehole': 80,
    'otl': 60,
    'piston': 100,
    'borehole12': 100,
    'fn17': 70,
    'fn18': 100,
}

PROBLEM_NAMES = ('mathfn1', 'mathfn2', 'bending', 'borehole', 'otl', 'piston', 'borehole12', 'fn17:<J>', 'fn18')


def _check_box(values: np.ndarray, lower: float, upper: float, name: str) -> None:
    values = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < lower) or np.any(values > upper):
        raise DomainError(f"{name} outside [{lower}, {upper}]")


def _check_levels(t: np.ndarray, m: int, name: str) -> np.ndarray:
    t = np.asarray(t)
    if np.any(t != np.round(t)) or np.any(t < 1) or np.any(t > m):
        raise DomainError(f"{name} level outside 1..{m}")
    return t.astype(int)


def _columns(X: np.ndarray, p: int) -> np.ndarray:
    return np.asarray(X, dtype=float).reshape(-1, p)


def math_fn1(x1, x2, t):
    """7 sin(2 pi x1 - pi) + c_t sin(2 pi x2 - pi), true level ordering 1-3-5-4-2."""
    _check_box(x1, 0.0, 1.0, 'x1')
    _check_box(x2, 0.0, 1.0, 'x2')
    t = _check_levels(t, 5, 't')
    return _math_fn1_numeric(x1, x2, MATH_FN1_COEFFS[t - 1])


def _math_fn1_numeric(x1, x2, coeff):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return 7.0 * np.sin(2 * np.pi * x1 - np.pi) + coeff * np.sin(2 * np.pi * x2 - np.pi)


def math_fn2(X, T):
    """Five inputs on [-100, 100] with five 3-level factors; factor 6-i pairs with input i."""
    X = _columns(X, 5)
    T = np.asarray(T).reshape(-1, 5)
    _check_box(X, -100.0, 100.0, 'x')
    T = _check_levels(T, 3, 't')
    return _math_fn2_numeric(X, T - 2.0)


def _math_fn2_numeric(X, V):
    X = _columns(X, 5)
    V = np.asarray(V, dtype=float).reshape(-1, 5)
    shift = V[:, ::-1]
    roots = np.sqrt(np.arange(1, 6))
    linear = np.sum(X * shift, axis=1) / 80.0
    product = np.prod(np.cos(X / roots) * np.sin(50.0 * shift / roots), axis=1)
    return linear + product


def beam_deflection(L, h, shape):
    """
    Tip deflection P L^3 / (3 E h^4 I(shape)) = L^3 / (3e9 h^4 I) for a
    600 N load on a 600 GPa cantilever, I normalized by h^4.

    Shapes 1..6: circular, square, I-shape, hollow square, hollow circular,
    H-shape (labels in BEAM_SHAPES, inertias in BEAM_INERTIA).
    """
    _check_box(L, 10.0, 20.0, 'L')
    _check_box(h, 1.0, 2.0, 'h')
    shape = _check_levels(shape, 6, 'shape')
    return _beam_numeric(L, h, BEAM_INERTIA[shape - 1])


def _beam_numeric(L, h, inertia):
    L = np.asarray(L, dtype=float)
    h = np.asarray(h, dtype=float)
    return L ** 3 / (3e9 * h ** 4 * np.asarray(inertia, dtype=float))


def borehole_formula(r_w, r, T_u, H_u, T_l, H_l, L, K_w):
    r_w = np.asarray(r_w, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r_w <= 0):
        raise DomainError("borehole radii must be positive")
    log_ratio = np.log(r / r_w)
    return (2 * np.pi * T_u * (H_u - H_l)) / (
        log_ratio * (1 + 2 * L * T_u / (log_ratio * r_w ** 2 * K_w) + T_u / T_l)
    )


def _borehole_numeric(X, V):
    X = _columns(X, 6)
    V = np.asarray(V, dtype=float).reshape(-1, 2)
    T_u, H_u, T_l, L, K_w, r = X.T
    return borehole_formula(V[:, 0], r, T_u, H_u, T_l, V[:, 1], L, K_w)


def _check_ranges(X: np.ndarray, names: Sequence[str], ranges) -> np.ndarray:
    X = _columns(X, len(names))
    for i, (name, (lo, hi)) in enumerate(zip(names, ranges)):
        _check_box(X[:, i], lo, hi, name)
    return X


def borehole(X, T):
    """Borehole flow rate with r_w (3 levels) and H_l (4 levels) as qualitative factors."""
    X = _check_ranges(X, BOREHOLE_INPUTS, BOREHOLE_RANGES)
    T = np.asarray(T).reshape(-1, 2)
    rw_level = _check_levels(T[:, 0], 3, 'r_w')
    hl_level = _check_levels(T[:, 1], 4, 'H_l')
    V = np.column_stack([BOREHOLE_RW[rw_level - 1], BOREHOLE_HL[hl_level - 1]])
    return _borehole_numeric(X, V)


def _borehole12_underlying(T):
    t = _check_levels(np.asarray(T).reshape(-1), 12, 't')
    rw_index = (t - 1) // 4
    hl_index = (t - 1) % 4
    return np.column_stack([BOREHOLE_RW[rw_index], BOREHOLE_HL[hl_index]])


def borehole12(X, t):
    """Borehole with one 12-level factor covering every (r_w, H_l) combination."""
    X = _check_ranges(X, BOREHOLE_INPUTS, BOREHOLE_RANGES)
    return _borehole_numeric(X, _borehole12_underlying(t))


def _otl_numeric(X, V):
    X = _columns(X, 4)
    V = np.asarray(V, dtype=float).reshape(-1, 2)
    R_b1, R_b2, R_c1, R_c2 = X.T
    R_f, beta = V[:, 0], V[:, 1]
    V_b1 = 12 * R_b2 / (R_b1 + R_b2)
    denom = beta * (R_c2 + 9) + R_f
    term1 = (V_b1 + 0.74) * beta * (R_c2 + 9) / denom
    term2 = 11.35 * R_f / denom
    term3 = 0.74 * R_f * beta * (R_c2 + 9) / (denom * R_c1)
    return term1 + term2 + term3


def otl(X, T):
    """Output-transformerless push-pull circuit midpoint voltage."""
    X = _check_ranges(X, OTL_INPUTS, OTL_RANGES)
    T = np.asarray(T).reshape(-1, 2)
    rf_level = _check_levels(T[:, 0], 4, 'R_f')
    beta_level = _check_levels(T[:, 1], 6, 'B')
    return _otl_numeric(X, np.column_stack([OTL_RF[rf_level - 1], OTL_BETA[beta_level - 1]]))


def _piston_numeric(X, V):
    X = _columns(X, 5)
    V = np.asarray(V, dtype=float).reshape(-1, 2)
    M, S, V_0, T_a, T_0 = X.T
    P_0, k = V[:, 0], V[:, 1]
    A = P_0 * S + 19.62 * M - k * V_0 / S
    volume = S / (2 * k) * (np.sqrt(A ** 2 + 4 * k * P_0 * V_0 * T_a / T_0) - A)
    if np.any(volume <= 0):
        raise DomainError("piston volume is not positive")
    return 2 * np.pi * np.sqrt(M / (k + S ** 2 * P_0 * V_0 * T_a / (T_0 * volume ** 2)))


def piston(X, T):
    """Piston cycle time with P_0 (3 levels) and spring constant k (5 levels) as factors."""
    X = _check_ranges(X, PISTON_INPUTS, PISTON_RANGES)
    T = np.asarray(T).reshape(-1, 2)
    p0_level = _check_levels(T[:, 0], 3, 'P_0')
    k_level = _check_levels(T[:, 1], 5, 'k')
    return _piston_numeric(X, np.column_stack([PISTON_P0[p0_level - 1], PISTON_K[k_level - 1]]))


@dataclass(frozen=True)
class UnderlyingVars:
    """Per-level values of the numerical variables behind one 5-level factor, shape (5, J)."""
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != 5:
            raise ValueError(f"expected a (5, J) value table, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def J(self) -> int:
        return self.values.shape[1]

    def at(self, t) -> np.ndarray:
        t = _check_levels(np.asarray(t).reshape(-1), 5, 't')
        return self.values[t - 1]


def fn17_basis(J: int) -> np.ndarray:
    """
    Orthogonal basis whose first column sums to sqrt(J) and the rest to zero.

    Args:
        J: Number of underlying variables

    Returns:
        (J, J) matrix A
    """
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    A = np.zeros((J, J))
    A[:, 0] = 1.0 / np.sqrt(J)
    for j in range(1, J):
        e = np.zeros(J)
        e[j] = 1.0
        A[:, j] = (J * e - 1.0) / (np.sqrt(J) * np.sqrt(J - 1))
    return A


def make_fn17(J: int, seed: int) -> Tuple[UnderlyingVars, Callable]:
    """
    J underlying variables per level whose scaled sum reproduces the math_fn1 coefficients.

    Args:
        J: Number of underlying variables
        seed: Seed for the nuisance draws

    Returns:
        (underlying variables, evaluator over (X, T))
    """
    A = fn17_basis(J)
    rng = np.random.default_rng(seed)
    nuisance = rng.uniform(0.0, 10.0, size=(5, J - 1))
    coords = np.column_stack([MATH_FN1_COEFFS, nuisance])
    variables = UnderlyingVars(coords @ A.T, seed)

    def evaluate(X, T):
        X = _columns(X, 2)
        _check_box(X, 0.0, 1.0, 'x')
        return _fn17_numeric(X, variables.at(T))

    return variables, evaluate


def _fn17_numeric(X, V):
    X = _columns(X, 2)
    V = np.asarray(V, dtype=float).reshape(X.shape[0], -1)
    coeff = np.sum(V, axis=1) / np.sqrt(V.shape[1])
    return _math_fn1_numeric(X[:, 0], X[:, 1], coeff)


def make_fn18(seed: int, values: Optional[np.ndarray] = None) -> Tuple[UnderlyingVars, Callable]:
    """Ten underlying variables per level drawn on [-50, 50]; values overrides the draw."""
    if values is None:
        values = np.random.default_rng(seed).uniform(-50.0, 50.0, size=(5, 10))
    variables = UnderlyingVars(values, seed)
    if variables.J != 10:
        raise ValueError(f"fn18 needs 10 underlying variables, got {variables.J}")

    def evaluate(X, T):
        X = _columns(X, 10)
        _check_box(X, -100.0, 100.0, 'x')
        return _fn18_numeric(X, variables.at(T))

    return variables, evaluate


def _fn18_numeric(X, V):
    X = _columns(X, 10)
    V = np.asarray(V, dtype=float).reshape(-1, 10)
    reversed_v = V[:, ::-1]
    roots = np.sqrt(np.arange(1, 11))
    linear = np.sum(X * reversed_v, axis=1) / 4000.0
    product = np.prod(np.cos(X / roots) * np.sin(reversed_v / roots), axis=1)
    return linear + product


@dataclass(frozen=True)
class BenchmarkProblem:
    """A named response surface over a mixed schema, with its numeric-only view."""
    name: str
    schema: InputSchema
    response: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n_train: int
    underlying: Callable[[np.ndarray], np.ndarray]
    underlying_names: Tuple[str, ...]
    numeric_response: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n_test: int = 10000
    variables: Optional[UnderlyingVars] = None

    def evaluate(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.schema.p)
        T = np.asarray(T).reshape(X.shape[0], self.schema.q)
        violations = array_violations(X, T, self.schema)
        if violations:
            raise DomainError("; ".join(violations))
        return np.asarray(self.response(X, T), dtype=float).reshape(-1)

    def evaluate_point(self, point: MixedPoint) -> float:
        return float(self.evaluate(np.array([point.x]), np.array([point.t]))[0])

    def underlying_values(self, T: np.ndarray) -> np.ndarray:
        T = np.asarray(T).reshape(-1, self.schema.q)
        return np.asarray(self.underlying(T), dtype=float).reshape(T.shape[0], -1)

    def evaluate_numeric(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.asarray(self.numeric_response(X, V), dtype=float).reshape(-1)

    def numeric_inputs(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        """Quantitative inputs augmented with the underlying variables of each point."""
        X = np.asarray(X, dtype=float).reshape(-1, self.schema.p)
        return np.hstack([X, self.underlying_values(T)])

    def numeric_schema(self) -> InputSchema:
        """Numeric-only schema: quantitative ranges plus the span of each underlying variable."""
        combos = np.array(list(itertools.product(*[range(1, m + 1) for m in self.schema.level_counts])))
        V = self.underlying_values(combos)
        ranges = [(quant.lower, quant.upper) for quant in self.schema.quantitative]
        for lo, hi in zip(V.min(axis=0), V.max(axis=0)):
            ranges.append((lo - 0.5, hi + 0.5) if lo == hi else (lo, hi))
        names = self.schema.input_names + list(self.underlying_names)
        return InputSchema.build(ranges, (), names=names)


def _labels(values) -> List[str]:
    return [f"{v:g}" for v in values]


def _mathfn1_problem() -> BenchmarkProblem:
    schema = InputSchema.build([(0.0, 1.0), (0.0, 1.0)], [5])
    return BenchmarkProblem(
        name='mathfn1',
        schema=schema,
        response=lambda X, T: math_fn1(X[:, 0], X[:, 1], T[:, 0]),
        n_train=DEFAULT_N['mathfn1'],
        underlying=lambda T: MATH_FN1_COEFFS[T[:, 0] - 1][:, None],
        underlying_names=('c',),
        numeric_response=lambda X, V: _math_fn1_numeric(_columns(X, 2)[:, 0], _columns(X, 2)[:, 1],
                                                        np.asarray(V, dtype=float).reshape(-1)),
    )


def _mathfn2_problem() -> BenchmarkProblem:
    schema = InputSchema.build([(-100.0, 100.0)] * 5, [3] * 5)
    return BenchmarkProblem(
        name='mathfn2',
        schema=schema,
        response=math_fn2,
        n_train=DEFAULT_N['mathfn2'],
        underlying=lambda T: np.asarray(T, dtype=float) - 2.0,
        underlying_names=tuple(f"v{j}" for j in range(1, 6)),
        numeric_response=_math_fn2_numeric,
    )


def _bending_problem() -> BenchmarkProblem:
    schema = InputSchema.build([(10.0, 20.0), (1.0, 2.0)], [6], names=['L', 'h'],
                               factor_names=['shape'], labels=[BEAM_SHAPES])
    return BenchmarkProblem(
        name='bending',
        schema=schema,
        response=lambda X, T: beam_deflection(X[:, 0], X[:, 1], T[:, 0]),
        n_train=DEFAULT_N['bending'],
        underlying=lambda T: BEAM_INERTIA[T[:, 0] - 1][:, None],
        underlying_names=('I',),
        numeric_response=lambda X, V: _beam_numeric(_columns(X, 2)[:, 0], _columns(X, 2)[:, 1],
                                                    np.asarray(V, dtype=float).reshape(-1)),
    )


def _borehole_problem() -> BenchmarkProblem:
    schema = InputSchema.build(BOREHOLE_RANGES, [3, 4], names=BOREHOLE_INPUTS,
                               factor_names=['r_w', 'H_l'],
                               labels=[_labels(BOREHOLE_RW), _labels(BOREHOLE_HL)])
    return BenchmarkProblem(
        name='borehole',
        schema=schema,
        response=borehole,
        n_train=DEFAULT_N['borehole'],
        underlying=lambda T: np.column_stack([BOREHOLE_RW[T[:, 0] - 1], BOREHOLE_HL[T[:, 1] - 1]]),
        underlying_names=('r_w', 'H_l'),
        numeric_response=_borehole_numeric,
    )


def _otl_problem() -> BenchmarkProblem:
    schema = InputSchema.build(OTL_RANGES, [4, 6], names=OTL_INPUTS, factor_names=['R_f', 'B'],
                               labels=[_labels(OTL_RF), _labels(OTL_BETA)])
    return BenchmarkProblem(
        name='otl',
        schema=schema,
        response=otl,
        n_train=DEFAULT_N['otl'],
        underlying=lambda T: np.column_stack([OTL_RF[T[:, 0] - 1], OTL_BETA[T[:, 1] - 1]]),
        underlying_names=('R_f', 'B'),
        numeric_response=_otl_numeric,
    )


def _piston_problem() -> BenchmarkProblem:
    schema = InputSchema.build(PISTON_RANGES, [3, 5], names=PISTON_INPUTS, factor_names=['P_0', 'k'],
                               labels=[_labels(PISTON_P0), _labels(PISTON_K)])
    return BenchmarkProblem(
        name='piston',
        schema=schema,
        response=piston,
        n_train=DEFAULT_N['piston'],
        underlying=lambda T: np.column_stack([PISTON_P0[T[:, 0] - 1], PISTON_K[T[:, 1] - 1]]),
        underlying_names=('P_0', 'k'),
        numeric_response=_piston_numeric,
    )


def _borehole12_problem() -> BenchmarkProblem:
    labels = [f"{BOREHOLE_RW[i]:g}/{BOREHOLE_HL[k]:g}" for i, k in BOREHOLE12_TABLE]
    schema = InputSchema.build(BOREHOLE_RANGES, [12], names=BOREHOLE_INPUTS, factor_names=['t'],
                               labels=[labels])
    return BenchmarkProblem(
        name='borehole12',
        schema=schema,
        response=lambda X, T: borehole12(X, T[:, 0]),
        n_train=DEFAULT_N['borehole12'],
        underlying=_borehole12_underlying,
        underlying_names=('r_w', 'H_l'),
        numeric_response=_borehole_numeric,
    )


def _fn17_problem(J: int, seed: int) -> BenchmarkProblem:
    variables, evaluate = make_fn17(J, seed)
    schema = InputSchema.build([(0.0, 1.0), (0.0, 1.0)], [5])
    return BenchmarkProblem(
        name=f"fn17:{J}",
        schema=schema,
        response=evaluate,
        n_train=DEFAULT_N['fn17'],
        underlying=lambda T: variables.at(np.asarray(T)[:, 0]),
        underlying_names=tuple(f"v{j}" for j in range(1, J + 1)),
        numeric_response=_fn17_numeric,
        variables=variables,
    )


def _fn18_problem(seed: int) -> BenchmarkProblem:
    variables, evaluate = make_fn18(seed)
    schema = InputSchema.build([(-100.0, 100.0)] * 10, [5])
    return BenchmarkProblem(
        name='fn18',
        schema=schema,
        response=evaluate,
        n_train=DEFAULT_N['fn18'],
        underlying=lambda T: variables.at(np.asarray(T)[:, 0]),
        underlying_names=tuple(f"v{j}" for j in range(1, 11)),
        numeric_response=_fn18_numeric,
        variables=variables,
    )


_FIXED_PROBLEMS: Dict[str, Callable[[], BenchmarkProblem]] = {
    'mathfn1': _mathfn1_problem,
    'mathfn2': _mathfn2_problem,
    'bending': _bending_problem,
    'borehole': _borehole_problem,
    'otl': _otl_problem,
    'piston': _piston_problem,
    'borehole12': _borehole12_problem,
}


def get_problem(name: str, seed: int = 0) -> BenchmarkProblem:
    """
    Look up a benchmark problem by name.

    Args:
        name: One of mathfn1, mathfn2, bending, borehole, otl, piston, borehole12, fn17:<J>, fn18
        seed: Seed for the randomly drawn underlying variables of fn17 and fn18

    Returns:
        The problem
    """
    if name in _FIXED_PROBLEMS:
        return _FIXED_PROBLEMS[name]()
    if name == 'fn18':
        return _fn18_problem(seed)
    if name.startswith('fn17:'):
        try:
            J = int(name.split(':', 1)[1])
        except ValueError:
            raise ValueError(f"fn17 needs an integer J, got '{name}'")
        return _fn17_problem(J, seed)
    raise ValueError(f"unknown problem '{name}', expected one of {', '.join(PROBLEM_NAMES)}")


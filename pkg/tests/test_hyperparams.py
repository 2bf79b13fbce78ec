import os
import sys
import unittest

import numpy as np
import numpy.testing as npt

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.bench_harness import build_replicate, derive_seeds, numeric_dataset
from src.benchmark_problems import get_problem
from src.covariance import KernelConfig, build_corr_matrix
from src.errors import KernelError, SingularMatrixError
from src.gp_fit import ProfileLikelihood, nll_gradient
from src.hyperparams import HyperParams, ParamLayout
from src.mixed_input import Dataset, InputSchema


def moderate_point(layout: ParamLayout, rng: np.random.Generator) -> np.ndarray:
    """Random vector in a sub-box where R stays well conditioned."""
    values = []
    for name in layout.names:
        if name.startswith('theta'):
            values.append(rng.uniform(1.0, 1.6))
        elif name.startswith('z'):
            values.append(rng.uniform(-1.5, 1.5))
        elif name.startswith('s['):
            values.append(rng.uniform(-2.0, 2.0))
        else:
            values.append(rng.uniform(0.2, 3.0))
    return np.array(values)


def central_difference(objective: ProfileLikelihood, v: np.ndarray, step: float = 1e-5) -> np.ndarray:
    gradient = np.zeros_like(v)
    for k in range(v.size):
        up = v.copy()
        down = v.copy()
        up[k] += step
        down[k] -= step
        gradient[k] = (objective.value(up) - objective.value(down)) / (2 * step)
    return gradient


class TestParamLayout(unittest.TestCase):

    def setUp(self):
        self.schema = InputSchema.build([(0.0, 1.0), (0.0, 1.0)], [3, 4])

    def test_lv2_slot_count(self):
        layout = ParamLayout(self.schema, KernelConfig.for_model('LV2'))
        self.assertEqual(layout.size, 2 + 3 + 5)

    def test_three_level_latent_slots(self):
        schema = InputSchema.build([(0.0, 1.0)], [3])
        layout = ParamLayout(schema, KernelConfig.for_model('LV2'))
        self.assertEqual([n for n in layout.names if n.startswith('z')],
                         ['z[t1][2][1]', 'z[t1][3][1]', 'z[t1][3][2]'])

    def test_other_family_counts(self):
        counts = {'LV1': 2 + 2 + 3, 'UC': 2 + 3 + 6, 'MC': 2 + 3 + 4, 'AddUC': (1 + 2 + 3) + (1 + 2 + 6)}
        for model, expected in counts.items():
            self.assertEqual(ParamLayout(self.schema, KernelConfig.for_model(model)).size, expected, model)

    def test_bounds(self):
        layout = ParamLayout(self.schema, KernelConfig.for_model('LV2'))
        npt.assert_array_equal(layout.lower[:2], [-3.0, -3.0])
        npt.assert_array_equal(layout.upper[2:], 2.0)
        uc = ParamLayout(self.schema, KernelConfig.for_model('UC'))
        npt.assert_array_equal(uc.lower[2:], 0.0)

    def test_pack_unpack(self):
        rng = np.random.default_rng(2)
        for model in ('LV2', 'LV1', 'UC', 'MC', 'AddUC'):
            layout = ParamLayout(self.schema, KernelConfig.for_model(model))
            v = rng.uniform(layout.lower, layout.upper)
            npt.assert_array_equal(layout.pack(layout.unpack(v)), v)
            self.assertTrue(HyperParams(v, layout).in_bounds())

    def test_unpacked_latent_is_pinned(self):
        layout = ParamLayout(self.schema, KernelConfig.for_model('LV2'))
        v = np.random.default_rng(4).uniform(layout.lower, layout.upper)
        self.assertTrue(layout.unpack(v).latent.is_pinned())

    def test_wrong_length(self):
        layout = ParamLayout(self.schema, KernelConfig.for_model('LV2'))
        with self.assertRaises(KernelError):
            layout.unpack(np.zeros(3))

    def test_numeric_kernel_rejects_factors(self):
        with self.assertRaises(KernelError):
            ParamLayout(self.schema, KernelConfig.for_model('BNGP'))


class TestGradient(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(8)
        self.schema = InputSchema.build([(0.0, 1.0), (0.0, 1.0)], [3, 4])
        X = rng.uniform(size=(14, 2))
        T = np.column_stack([rng.integers(1, 4, size=14), rng.integers(1, 5, size=14)])
        y = np.sin(4 * X[:, 0]) + T[:, 0] * X[:, 1] - 0.3 * T[:, 1]
        self.data = Dataset(self.schema, X, T, y)
        self.rng = rng

    def check_family(self, model: str):
        layout = ParamLayout(self.schema, KernelConfig.for_model(model))
        objective = ProfileLikelihood(self.data.normalized(), layout)
        for _ in range(3):
            v = moderate_point(layout, self.rng)
            _, analytic = objective.value_and_gradient(v)
            numeric = central_difference(objective, v)
            self.assertTrue(np.all(np.isfinite(analytic)))
            npt.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6, err_msg=model)

    def test_lv2(self):
        self.check_family('LV2')

    def test_lv1(self):
        self.check_family('LV1')

    def test_uc(self):
        self.check_family('UC')

    def test_mc(self):
        self.check_family('MC')

    def test_add_uc(self):
        self.check_family('AddUC')

    def test_public_gradient_matches_objective(self):
        layout = ParamLayout(self.schema, KernelConfig.for_model('LV2'))
        v = moderate_point(layout, self.rng)
        objective = ProfileLikelihood(self.data.normalized(), layout)
        npt.assert_array_equal(nll_gradient(HyperParams(v, layout), self.data),
                               objective.value_and_gradient(v)[1])

    def test_numeric_only(self):
        schema = InputSchema.build([(0.0, 1.0)] * 3, [])
        X = self.rng.uniform(size=(12, 3))
        data = Dataset(schema, X, np.zeros((12, 0), dtype=int), np.cos(3 * X[:, 0]) + X[:, 1] * X[:, 2])
        layout = ParamLayout(schema, KernelConfig.for_model('BNGP'))
        objective = ProfileLikelihood(data.normalized(), layout)
        v = moderate_point(layout, self.rng)
        npt.assert_allclose(objective.value_and_gradient(v)[1], central_difference(objective, v),
                            rtol=1e-4, atol=1e-6)


class TestBenchmarkGradient(unittest.TestCase):
    """
    Analytic gradient against central differences at random points over the
    full search box, on each benchmark's replicate-0 training data.

    Central differences lose accuracy once R is near singular: the rounding
    error of the objective grows with cond(R) and is divided by the step.
    Points with cond(R) above COND_LIMIT, or where R cannot be factored, are
    counted but not compared; every data set must still yield compared points.
    """

    COND_LIMIT = 1e7
    N_POINTS = 20

    def check_gradient(self, problem_name: str, model_name: str, seed: int):
        replicate = build_replicate(problem_name, get_problem(problem_name).n_train, 10, derive_seeds(0, 0),
                                    lhd_budget=200)
        data = replicate.train
        if model_name == 'BNGP':
            data = numeric_dataset(replicate.problem, data)
        layout = ParamLayout(data.schema, KernelConfig.for_model(model_name))
        objective = ProfileLikelihood(data.normalized(), layout)
        rng = np.random.default_rng(seed)
        compared = 0
        skipped = 0
        for _ in range(self.N_POINTS):
            v = rng.uniform(layout.lower, layout.upper)
            try:
                corr = build_corr_matrix(objective.data, layout.config, layout.unpack(v))
                if corr.jitter > layout.config.jitter.initial or np.linalg.cond(corr.R) > self.COND_LIMIT:
                    skipped += 1
                    continue
                _, analytic = objective.value_and_gradient(v)
                numeric = central_difference(objective, v)
            except SingularMatrixError:
                skipped += 1
                continue
            npt.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-4,
                                err_msg=f"{problem_name} {model_name} at {v.tolist()}")
            compared += 1
        self.assertEqual(compared + skipped, self.N_POINTS)
        self.assertGreater(compared, 0, f"{problem_name} {model_name}: every point above the condition limit")

    def test_latent_model_on_every_problem(self):
        for index, name in enumerate(('mathfn1', 'mathfn2', 'bending', 'borehole', 'otl', 'piston',
                                      'borehole12', 'fn17:3', 'fn18')):
            with self.subTest(problem=name):
                self.check_gradient(name, 'LV2', index)

    def test_every_family_on_mathfn1(self):
        for index, model_name in enumerate(('LV1', 'UC', 'MC', 'AddUC', 'BNGP')):
            with self.subTest(model=model_name):
                self.check_gradient('mathfn1', model_name, 100 + index)

    def test_every_family_on_bending(self):
        for index, model_name in enumerate(('UC', 'MC', 'AddUC')):
            with self.subTest(model=model_name):
                self.check_gradient('bending', model_name, 200 + index)


if __name__ == '__main__':
    unittest.main()

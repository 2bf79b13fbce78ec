import os
import sys
import tempfile
import unittest

import numpy as np
import numpy.testing as npt
from scipy.stats import chisquare

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.doe import (
    assign_levels, maximin_lhd, min_pairwise_distance, random_lhd, training_design, uniform_test_set,
    write_design_csv
)
from src.mixed_input import InputSchema, read_points_csv


def assert_latin(test: unittest.TestCase, X: np.ndarray):
    n = X.shape[0]
    for column in X.T:
        test.assertEqual(sorted(np.floor(column * n).astype(int)), list(range(n)))


class TestLatinHypercube(unittest.TestCase):

    def test_random_lhd_midpoints(self):
        X = random_lhd(4, 2, np.random.default_rng(0))
        for column in X.T:
            npt.assert_allclose(sorted(column), [0.125, 0.375, 0.625, 0.875])

    def test_jittered_lhd_is_latin(self):
        assert_latin(self, random_lhd(30, 4, np.random.default_rng(1), jitter=True))

    def test_maximin_keeps_stratification(self):
        for n, p, budget in ((10, 2, 0), (25, 3, 500), (40, 6, 2000)):
            assert_latin(self, maximin_lhd(n, p, seed=n, budget=budget).X)

    def test_score_never_decreases(self):
        design = maximin_lhd(30, 3, seed=4, budget=2000)
        self.assertGreaterEqual(design.score, design.initial_score)
        self.assertAlmostEqual(design.score, min_pairwise_distance(design.X), places=12)
        self.assertGreater(design.accepted, 0)

    def test_longer_search_not_worse_than_start(self):
        quick = maximin_lhd(20, 2, seed=8, budget=0)
        longer = maximin_lhd(20, 2, seed=8, budget=3000)
        self.assertEqual(quick.score, longer.initial_score)
        self.assertGreaterEqual(longer.score, quick.score)

    def test_single_point(self):
        design = maximin_lhd(1, 3, seed=0)
        self.assertEqual(design.X.shape, (1, 3))
        npt.assert_array_equal(design.X, [[0.5, 0.5, 0.5]])
        self.assertEqual(design.score, float('inf'))

    def test_deterministic(self):
        a = maximin_lhd(15, 3, seed=12, budget=300)
        b = maximin_lhd(15, 3, seed=12, budget=300)
        c = maximin_lhd(15, 3, seed=13, budget=300)
        npt.assert_array_equal(a.X, b.X)
        self.assertFalse(np.array_equal(a.X, c.X))

    def test_invalid_size(self):
        with self.assertRaises(ValueError):
            maximin_lhd(0, 2, seed=0)


class TestLevelAssignment(unittest.TestCase):

    def setUp(self):
        self.schema = InputSchema.build([(0.0, 1.0)], [3, 5])

    def test_levels_in_range(self):
        T = assign_levels(200, self.schema, seed=1)
        self.assertEqual(T.shape, (200, 2))
        self.assertTrue(np.all((T >= 1) & (T <= np.array([3, 5]))))

    def test_uniform_frequencies(self):
        T = assign_levels(100000, self.schema, seed=2)
        for j, m in enumerate(self.schema.level_counts):
            counts = np.bincount(T[:, j], minlength=m + 1)[1:]
            self.assertGreater(chisquare(counts).pvalue, 1e-4)

    def test_stratified_balance(self):
        T = assign_levels(10, self.schema, seed=3, stratified=True)
        npt.assert_array_equal(np.bincount(T[:, 1], minlength=6)[1:], [2, 2, 2, 2, 2])

    def test_seeded(self):
        npt.assert_array_equal(assign_levels(50, self.schema, 4), assign_levels(50, self.schema, 4))


class TestDesigns(unittest.TestCase):

    def setUp(self):
        self.schema = InputSchema.build([(0.0, 10.0), (-1.0, 1.0)], [4])

    def test_training_design(self):
        design = training_design(12, self.schema, design_seed=5, level_seed=6, budget=200)
        self.assertEqual(design.X.shape, (12, 2))
        self.assertEqual(design.T.shape, (12, 1))
        self.assertEqual((design.seed, design.level_seed), (5, 6))
        assert_latin(self, design.X)

    def test_uniform_test_set(self):
        test = uniform_test_set(1000, self.schema, seed=7)
        self.assertEqual(test.n, 1000)
        self.assertTrue(np.all((test.X >= 0.0) & (test.X < 1.0)))
        self.assertTrue(np.all((test.T >= 1) & (test.T <= 4)))
        npt.assert_array_equal(test.X, uniform_test_set(1000, self.schema, seed=7).X)

    def test_train_and_test_disjoint(self):
        train = training_design(30, self.schema, 1, 2, budget=100, jitter=True)
        test = uniform_test_set(2000, self.schema, seed=3)
        train_rows = {tuple(row) for row in train.X}
        self.assertFalse(any(tuple(row) in train_rows for row in test.X))

    def test_design_csv(self):
        design = training_design(6, self.schema, 9, 10, budget=50)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'design.csv')
            write_design_csv(design, self.schema, path)
            with open(path) as f:
                header = f.readline()
            X, T, _ = read_points_csv(path, self.schema.unit_cube())
        self.assertTrue(header.startswith('# seed=9 level_seed=10 score='))
        npt.assert_allclose(X, design.X)
        npt.assert_array_equal(T, design.T)


if __name__ == '__main__':
    unittest.main()

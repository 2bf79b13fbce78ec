import os
import sys
import tempfile
import unittest
from unittest.mock import patch

import numpy as np
import numpy.testing as npt
import pandas as pd

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src import bench_harness
from src.bench_harness import (
    RESULT_COLUMNS, ExperimentConfig, ResultRecord, build_replicate, derive_seeds, export_latent,
    load_experiment_configs, read_results_csv, rrmse, run_experiment, summarize, write_results_csv
)
from src.benchmark_problems import BEAM_SHAPES
from src.covariance import KernelConfig
from src.errors import DegenerateDataError, KernelError, SummaryError
from src.gp_fit import FitDiagnostics, assemble_model

DIAGNOSTICS = FitDiagnostics(start_index=0, iterations=0, gradient_norm=0.0, n_starts=1, n_failed=0,
                             initial_nll=0.0)


def small_config(**overrides) -> ExperimentConfig:
    settings = dict(problem='mathfn1', models=('LV2', 'MC'), n=10, N=50, replicates=2, n_starts=2,
                    master_seed=3, lhd_budget=50)
    settings.update(overrides)
    return ExperimentConfig(**settings)


class TestRRMSE(unittest.TestCase):

    def setUp(self):
        self.truth = np.array([1.0, 4.0, 2.5, -3.0, 0.5])

    def test_perfect_prediction(self):
        self.assertEqual(rrmse(self.truth, self.truth), 0.0)

    def test_mean_predictor(self):
        self.assertEqual(rrmse(np.full(5, self.truth.mean()), self.truth), 1.0)

    def test_affine_invariance(self):
        pred = self.truth + np.array([0.1, -0.2, 0.3, 0.0, 0.05])
        base = rrmse(pred, self.truth)
        for a, b in ((2.0, 5.0), (-0.5, 100.0)):
            self.assertAlmostEqual(rrmse(a * pred + b, a * self.truth + b), base, places=12)

    def test_constant_truth(self):
        with self.assertRaises(DegenerateDataError):
            rrmse([1.0, 2.0], [3.0, 3.0])

    def test_length_mismatch(self):
        with self.assertRaises(ValueError):
            rrmse([1.0, 2.0, 3.0], [1.0, 2.0])


class TestSeeds(unittest.TestCase):

    def test_documented_derivation(self):
        seeds = derive_seeds(7, 2)
        expected = int(np.random.SeedSequence([7, 2, 2]).generate_state(1)[0])
        self.assertEqual(seeds.test, expected)

    def test_streams_and_replicates_differ(self):
        first = derive_seeds(0, 0)
        second = derive_seeds(0, 1)
        self.assertEqual(derive_seeds(0, 0), first)
        self.assertNotEqual(first, second)
        self.assertEqual(len({first.design, first.level, first.test, first.start, first.problem}), 5)

    def test_negative_seed(self):
        with self.assertRaises(ValueError):
            derive_seeds(-1, 0)


class TestExperimentConfig(unittest.TestCase):

    def test_defaults(self):
        config = ExperimentConfig(problem='bending')
        self.assertEqual(config.models, ('LV2', 'UC', 'MC', 'AddUC'))
        self.assertEqual((config.N, config.replicates, config.n_starts), (10000, 30, 200))
        self.assertEqual(config.train_size, 60)

    def test_validation(self):
        for overrides in ({'replicates': 0}, {'n': 1}, {'models': ()}, {'models': ('EC',)}, {'n_starts': 0}):
            with self.assertRaises(ValueError, msg=str(overrides)):
                small_config(**overrides)
        with self.assertRaises(ValueError):
            ExperimentConfig(problem='nonexistent')

    def test_resolve_path(self):
        config = ExperimentConfig(problem='fn17:10', models=('LV2', 'BNGP'))
        self.assertEqual(config.resolve_path('out/{problem}_n{n}_s{n_starts}.csv'), 'out/fn17_10_n70_s200.csv')
        self.assertIsNone(config.resolve_path(None))

    def test_toml_grid(self):
        text = (
            '[experiment]\n'
            'problem = "fn18"\n'
            'models = ["LV2", "BNGP"]\n'
            'replicates = 2\n'
            '\n'
            '[grid]\n'
            'n_starts = [24, 120]\n'
            'n = [80, 100]\n'
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'exp.toml')
            with open(path, 'w') as f:
                f.write(text)
            configs = load_experiment_configs(path)
        self.assertEqual(len(configs), 4)
        self.assertEqual({(c.n_starts, c.n) for c in configs}, {(24, 80), (24, 100), (120, 80), (120, 100)})
        self.assertTrue(all(c.models == ('LV2', 'BNGP') and c.replicates == 2 for c in configs))

    def test_shipped_configs(self):
        directory = os.path.join(os.path.dirname(__file__), '..', 'data', 'experiments')
        counts = {'mathfn1.toml': 1, 'engineering.toml': 5, 'fn17_sweep.toml': 20, 'fn18_sweep.toml': 4}
        for name, expected in counts.items():
            self.assertEqual(len(load_experiment_configs(os.path.join(directory, name))), expected, name)
        fn18 = load_experiment_configs(os.path.join(directory, 'fn18_sweep.toml'))
        self.assertEqual({c.resolve_path(c.results_path) for c in fn18},
                         {'results/fn18_starts24.csv', 'results/fn18_starts120.csv'})

    def test_toml_unknown_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'exp.toml')
            with open(path, 'w') as f:
                f.write('problem = "mathfn1"\nstarts = 5\n')
            with self.assertRaises(ValueError):
                load_experiment_configs(path)


class TestRunExperiment(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.config = small_config()
        cls.records = run_experiment(cls.config)

    def test_one_record_per_replicate_and_model(self):
        self.assertEqual(len(self.records), 4)
        self.assertEqual([(r.model, r.replicate) for r in self.records],
                         [('LV2', 0), ('LV2', 1), ('MC', 0), ('MC', 1)])
        for record in self.records:
            self.assertEqual(record.error, '')
            self.assertGreaterEqual(record.rrmse, 0.0)
            self.assertIsNone(record.fit_seconds)

    def test_models_share_data(self):
        for replicate in range(2):
            rows = [r for r in self.records if r.replicate == replicate]
            seeds = {(r.design_seed, r.level_seed, r.test_seed, r.start_seed) for r in rows}
            self.assertEqual(len(seeds), 1)
            expected = derive_seeds(3, replicate)
            self.assertEqual(rows[0].design_seed, expected.design)

    def test_byte_identical_results(self):
        again = run_experiment(small_config(n_jobs=2))
        with tempfile.TemporaryDirectory() as tmp:
            first = os.path.join(tmp, 'a.csv')
            second = os.path.join(tmp, 'b.csv')
            write_results_csv(self.records, first)
            write_results_csv(again, second)
            with open(first, 'rb') as f, open(second, 'rb') as g:
                self.assertEqual(f.read(), g.read())
            with open(first) as f:
                self.assertEqual(f.readline().strip(), ','.join(RESULT_COLUMNS))

    def test_results_csv_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'results.csv')
            write_results_csv(self.records, path)
            loaded = read_results_csv(path)
        self.assertEqual(loaded, self.records)

    def test_crash_isolation(self):
        real_fit = bench_harness.fit_model

        def failing_fit(replicate, model_name, n_starts):
            if model_name == 'MC':
                raise RuntimeError('optimizer exploded')
            return real_fit(replicate, model_name, n_starts)

        with patch('src.bench_harness.fit_model', side_effect=failing_fit):
            records = run_experiment(small_config(replicates=1))
        by_model = {r.model: r for r in records}
        self.assertIn('optimizer exploded', by_model['MC'].error)
        self.assertIsNone(by_model['MC'].rrmse)
        self.assertEqual(by_model['LV2'].error, '')
        self.assertIsNotNone(by_model['LV2'].rrmse)

    def test_timing_recorded_when_requested(self):
        records = run_experiment(small_config(models=('LV2',), replicates=1, record_timing=True))
        self.assertGreater(records[0].fit_seconds, 0.0)

    def test_latent_export_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            run_experiment(small_config(models=('LV2', 'MC'), replicates=1, latent_dir=tmp))
            self.assertEqual(sorted(os.listdir(tmp)), ['mathfn1_LV2_rep0.csv'])


class TestSummarize(unittest.TestCase):

    def record(self, value, model='LV2', replicate=0):
        return ResultRecord(problem='mathfn1', model=model, replicate=replicate, n=70, N=100, rrmse=value,
                            error='' if value is not None else 'FitError: failed')

    def test_single_record(self):
        summary = summarize([self.record(0.25)])
        self.assertEqual(summary.loc[0, 'median'], 0.25)

    def test_median_of_three(self):
        summary = summarize([self.record(v, replicate=i) for i, v in enumerate((0.3, 0.1, 0.2))])
        self.assertAlmostEqual(summary.loc[0, 'median'], 0.2, places=12)

    def test_linear_quartiles(self):
        summary = summarize([self.record(v, replicate=i) for i, v in enumerate((1.0, 2.0, 3.0, 4.0))])
        self.assertAlmostEqual(summary.loc[0, 'q25'], 1.75, places=12)
        self.assertAlmostEqual(summary.loc[0, 'q75'], 3.25, places=12)
        self.assertAlmostEqual(summary.loc[0, 'median'], 2.5, places=12)

    def test_failures_excluded_and_counted(self):
        records = [self.record(0.1), self.record(None, replicate=1), self.record(0.3, replicate=2),
                   self.record(0.5, model='UC')]
        summary = summarize(records).set_index('model')
        self.assertEqual(summary.loc['LV2', 'count'], 2)
        self.assertEqual(summary.loc['LV2', 'failed'], 1)
        self.assertAlmostEqual(summary.loc['LV2', 'median'], 0.2, places=12)
        self.assertEqual(summary.loc['UC', 'count'], 1)

    def test_empty_group(self):
        with self.assertRaises(SummaryError):
            summarize([])
        with self.assertRaises(SummaryError):
            summarize([self.record(0.1), self.record(None, model='UC')])


class TestExportLatent(unittest.TestCase):

    def setUp(self):
        replicate = build_replicate('bending', 12, 10, derive_seeds(0, 0), lhd_budget=20)
        self.train = replicate.train
        values = np.concatenate([[1.0, 1.0], np.linspace(-1.0, 1.0, 9)])
        self.model = assemble_model(self.train, KernelConfig.for_model('LV2'), values, DIAGNOSTICS)

    def test_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'latent.csv')
            frame = export_latent(self.model, path)
            loaded = pd.read_csv(path)
        self.assertEqual(list(loaded.columns), ['factor', 'level', 'label', 'z1', 'z2'])
        self.assertEqual(len(loaded), 6)
        self.assertEqual(list(loaded['label']), list(BEAM_SHAPES))
        npt.assert_array_equal(loaded.loc[0, ['z1', 'z2']].to_numpy(dtype=float), [0.0, 0.0])
        self.assertEqual(loaded.loc[1, 'z2'], 0.0)
        npt.assert_allclose(loaded[['z1', 'z2']].to_numpy(), frame[['z1', 'z2']].to_numpy())

    def test_non_latent_model(self):
        model = assemble_model(self.train, KernelConfig.for_model('MC'), np.array([1.0, 1.0] + [0.5] * 6),
                               DIAGNOSTICS)
        with self.assertRaises(KernelError):
            export_latent(model)


if __name__ == '__main__':
    unittest.main()

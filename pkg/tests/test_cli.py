import os
import sys
import tempfile
import unittest

import pandas as pd

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

import cli
from src.mixed_input import load_schema


class TestCommandLine(unittest.TestCase):

    def test_schema_listing(self):
        self.assertEqual(cli.main(['doe', '--problem', 'bending']), 0)

    def test_design_and_schema_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            design = os.path.join(tmp, 'design.csv')
            schema = os.path.join(tmp, 'schema.json')
            code = cli.main(['doe', '--problem', 'borehole', '--n', '8', '--budget', '50', '--out', design,
                             '--schema-out', schema])
            self.assertEqual(code, 0)
            frame = pd.read_csv(design, comment='#')
            self.assertEqual(len(frame), 8)
            self.assertEqual(load_schema(schema).level_counts, (3, 4))

    def test_fit_predict_and_latent(self):
        with tempfile.TemporaryDirectory() as tmp:
            model = os.path.join(tmp, 'model.json')
            self.assertEqual(cli.main(['fit', '--problem', 'mathfn1', '--n', '12', '--starts', '2',
                                       '--out', model]), 0)
            queries = os.path.join(tmp, 'queries.csv')
            pd.DataFrame({'x1': [0.1, 0.9], 'x2': [0.5, 0.2], 't1': [1, 5]}).to_csv(queries, index=False)
            predictions = os.path.join(tmp, 'pred.csv')
            self.assertEqual(cli.main(['predict', '--model', model, '--in', queries, '--out', predictions]), 0)
            self.assertEqual(list(pd.read_csv(predictions).columns), ['mean', 'variance'])
            latent = os.path.join(tmp, 'latent.csv')
            self.assertEqual(cli.main(['latent', '--model', model, '--out', latent]), 0)
            self.assertEqual(len(pd.read_csv(latent)), 5)

    def test_fit_user_dataset(self):
        data_dir = os.path.join(os.path.dirname(__file__), '..', 'data')
        with tempfile.TemporaryDirectory() as tmp:
            model = os.path.join(tmp, 'beam.json')
            code = cli.main(['fit', '--data', os.path.join(data_dir, 'beam_training.csv'),
                             '--schema', os.path.join(data_dir, 'beam_schema.json'), '--starts', '2',
                             '--out', model])
            self.assertEqual(code, 0)
            self.assertTrue(os.path.exists(model))
        self.assertEqual(cli.main(['fit', '--data', 'unused.csv', '--out', 'unused.json']), 2)

    def test_bench_and_summarize(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = os.path.join(tmp, 'exp.toml')
            results = os.path.join(tmp, 'results.csv')
            with open(config, 'w') as f:
                f.write('problem = "mathfn1"\nmodels = ["LV2"]\nn = 10\nN = 40\nreplicates = 2\n'
                        'n_starts = 2\nlhd_budget = 20\n')
            self.assertEqual(cli.main(['bench', '--config', config, '--out', results]), 0)
            self.assertEqual(len(pd.read_csv(results)), 2)
            self.assertEqual(cli.main(['summarize', '--results', results]), 0)

    def test_failure_returns_nonzero(self):
        self.assertEqual(cli.main(['latent', '--model', 'missing-model.json', '--out', 'unused.csv']), 1)


if __name__ == '__main__':
    unittest.main()

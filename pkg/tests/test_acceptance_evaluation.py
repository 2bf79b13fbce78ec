import os
import sys
import unittest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from evaluation.acceptance_evaluation import engineering_verdict


class TestEngineeringVerdict(unittest.TestCase):

    def test_all_below_threshold(self):
        verdict = engineering_verdict({'bending': {'LV2': 0.02, 'BNGP': 0.01},
                                       'otl': {'LV2': 0.05, 'BNGP': 0.04}})
        self.assertTrue(verdict['passed'])
        self.assertEqual(verdict['surface_limited'], [])
        self.assertEqual(verdict['medians'], {'bending': 0.02, 'otl': 0.05})

    def test_reference_model_also_misses(self):
        # piston medians at n=100 on replicate 1
        verdict = engineering_verdict({'borehole': {'LV2': 0.03, 'BNGP': 0.02},
                                       'piston': {'LV2': 0.1390, 'BNGP': 0.1588}})
        self.assertFalse(verdict['passed'])
        self.assertEqual(verdict['surface_limited'], ['piston'])
        self.assertFalse(verdict['problems']['piston']['passed'])

    def test_latent_model_alone_misses(self):
        verdict = engineering_verdict({'piston': {'LV2': 0.15, 'BNGP': 0.05}})
        self.assertFalse(verdict['passed'])
        self.assertEqual(verdict['surface_limited'], [])

    def test_without_reference_model(self):
        verdict = engineering_verdict({'otl': {'LV2': 0.2}})
        self.assertFalse(verdict['passed'])
        self.assertIsNone(verdict['problems']['otl']['BNGP'])
        self.assertEqual(verdict['surface_limited'], [])


if __name__ == '__main__':
    unittest.main()

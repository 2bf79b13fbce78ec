import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).parent.parent))

from src.bench_harness import (
    ExperimentConfig, build_replicate, derive_seeds, fit_model, run_experiment, summarize
)
from src.benchmark_problems import BEAM_INERTIA
from src.gp_predict import latent_coordinates
from src.latent_analysis import cluster_separation, principal_axis, rank_agreement

BOREHOLE12_GROUPS = [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]]

ENGINEERING_THRESHOLD = 0.10


def engineering_verdict(medians: Dict[str, Dict[str, float]],
                        threshold: float = ENGINEERING_THRESHOLD) -> Dict[str, Any]:
    """
    Pass/fail for the engineering problems from LV2 and BNGP medians.

    A problem whose BNGP median (true underlying variables given) also misses
    the threshold is marked surface-limited: the training size, not the
    qualitative-factor kernel, bounds the accuracy there.
    """
    rows = {}
    for name, by_model in medians.items():
        lv = by_model['LV2']
        bngp = by_model.get('BNGP')
        rows[name] = {
            'LV2': lv,
            'BNGP': bngp,
            'passed': lv < threshold,
            'surface_limited': bngp is not None and bngp >= threshold,
        }
    return {
        'medians': {name: row['LV2'] for name, row in rows.items()},
        'problems': rows,
        'surface_limited': [name for name, row in rows.items() if not row['passed'] and row['surface_limited']],
        'passed': all(row['passed'] for row in rows.values()),
    }


class AcceptanceEvaluator:

    def __init__(self, replicates: int = 10, N: int = 2000, n_starts: int = 50, master_seed: int = 0,
                 n_jobs: int = 1):
        self.replicates = replicates
        self.N = N
        self.n_starts = n_starts
        self.master_seed = master_seed
        self.n_jobs = n_jobs

    def _medians(self, problem: str, models: Sequence[str], n: int) -> Dict[str, float]:
        config = ExperimentConfig(
            problem=problem, models=tuple(models), n=n, N=self.N, replicates=self.replicates,
            n_starts=self.n_starts, master_seed=self.master_seed, n_jobs=self.n_jobs
        )
        summary = summarize(run_experiment(config))
        return {row.model: float(row.median) for row in summary.itertuples()}

    def evaluate_mathfn1(self) -> Dict[str, Any]:
        medians = self._medians('mathfn1', ['LV2', 'UC', 'MC', 'AddUC'], 70)
        lv = medians['LV2']
        others = {m: v for m, v in medians.items() if m != 'LV2'}
        passed = lv < 0.10 and lv <= 5 * 0.015 and all(lv < v for v in others.values())
        return {'medians': medians, 'reference': {'LV2': 0.015, 'UC': 0.103, 'MC': 0.134, 'AddUC': 0.181},
                'passed': passed}

    def evaluate_mathfn2(self) -> Dict[str, Any]:
        medians = self._medians('mathfn2', ['LV2', 'AddUC'], 100)
        passed = medians['LV2'] < 0.15 and medians['LV2'] < medians['AddUC']
        return {'medians': medians, 'reference': {'LV2': 0.045, 'AddUC': 0.185}, 'passed': passed}

    def evaluate_engineering(self) -> Dict[str, Any]:
        sizes = {'bending': 60, 'borehole': 80, 'otl': 60, 'piston': 100}
        medians = {name: self._medians(name, ['LV2', 'BNGP'], n) for name, n in sizes.items()}
        return engineering_verdict(medians)

    def _latent_fits(self, problem: str, n: int) -> List[np.ndarray]:
        coords = []
        for r in range(self.replicates):
            replicate = build_replicate(problem, n, 2, derive_seeds(self.master_seed, r))
            try:
                model = fit_model(replicate, 'LV2', self.n_starts)
            except Exception as e:
                print(f"   ❌ {problem} replicate {r}: fit failed - {e}")
                coords.append(None)
                continue
            coords.append(latent_coordinates(model, 1))
        return coords

    def evaluate_bending_latent(self) -> Dict[str, Any]:
        rows = []
        for r, z in enumerate(self._latent_fits('bending', 60)):
            if z is None:
                rows.append({'replicate': r, 'ratio': None, 'rho': None, 'passed': False})
                continue
            projection, ratio = principal_axis(z)
            rho = rank_agreement(projection, 1.0 / BEAM_INERTIA)
            rows.append({'replicate': r, 'ratio': ratio, 'rho': rho,
                         'passed': ratio < 0.05 and abs(rho) > 1 - 1e-9})
        hits = sum(row['passed'] for row in rows)
        return {'replicates': rows, 'hits': hits, 'passed': hits >= int(np.ceil(0.7 * self.replicates))}

    def evaluate_borehole12_clusters(self) -> Dict[str, Any]:
        rows = []
        for r, z in enumerate(self._latent_fits('borehole12', 100)):
            if z is None:
                rows.append({'replicate': r, 'inter': None, 'intra': None, 'passed': False})
                continue
            inter, intra = cluster_separation(z, BOREHOLE12_GROUPS)
            rows.append({'replicate': r, 'inter': inter, 'intra': intra, 'passed': inter > intra})
        hits = sum(row['passed'] for row in rows)
        return {'replicates': rows, 'hits': hits, 'passed': hits >= int(np.ceil(0.7 * self.replicates))}

    def evaluate_fn17(self) -> Dict[str, Any]:
        high = self._medians('fn17:10', ['LV2', 'BNGP'], 70)
        low = self._medians('fn17:1', ['LV2', 'BNGP'], 70)
        passed = high['LV2'] < high['BNGP'] and low['BNGP'] <= low['LV2'] + 0.05
        return {'J=10': high, 'J=1': low, 'passed': passed}

    def generate_evaluation_report(self, criteria: Sequence[int] = (1, 2, 3, 4, 5, 6)) -> Dict[str, Any]:
        runners = {
            1: ('Math Function 1', self.evaluate_mathfn1),
            2: ('Math Function 2', self.evaluate_mathfn2),
            3: ('Engineering examples', self.evaluate_engineering),
            4: ('Beam-bending latent order', self.evaluate_bending_latent),
            5: ('Revised borehole clusters', self.evaluate_borehole12_clusters),
            6: ('fn17 dimension study', self.evaluate_fn17),
        }
        report = {
            'settings': {'replicates': self.replicates, 'N': self.N, 'n_starts': self.n_starts,
                         'master_seed': self.master_seed},
            'criteria': {}
        }
        for number in criteria:
            title, runner = runners[number]
            print(f"\n🔬 Criterion {number}: {title}...")
            try:
                result = runner()
            except Exception as e:
                result = {'passed': False, 'error': f"{type(e).__name__}: {e}"}
            print(f"{'✅' if result['passed'] else '❌'} Criterion {number}: "
                  f"{'PASS' if result['passed'] else 'FAIL'}")
            report['criteria'][str(number)] = {'title': title, **result}
        return report


def report_table(report: Dict[str, Any]) -> pd.DataFrame:
    return pd.DataFrame([
        {'criterion': number, 'title': result['title'], 'passed': result['passed']}
        for number, result in report['criteria'].items()
    ])


def main():
    parser = argparse.ArgumentParser(description="Run the desk-scale acceptance criteria")
    parser.add_argument('--replicates', type=int, default=10)
    parser.add_argument('--N', type=int, default=2000)
    parser.add_argument('--starts', type=int, default=50)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--jobs', type=int, default=1)
    parser.add_argument('--criteria', type=int, nargs='+', default=[1, 2, 3, 4, 5, 6], choices=range(1, 7))
    parser.add_argument('--out', default=None, help="JSON report destination")
    args = parser.parse_args()

    print("🚀 Starting Acceptance Evaluation")
    print("=" * 50)
    evaluator = AcceptanceEvaluator(args.replicates, args.N, args.starts, args.seed, args.jobs)
    report = evaluator.generate_evaluation_report(args.criteria)

    print("\n" + "=" * 50)
    print(report_table(report).to_string(index=False))
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            json.dump(report, f, indent=2, default=float)
        print(f"\nReport written to {args.out}")

    return 0 if all(r['passed'] for r in report['criteria'].values()) else 1


if __name__ == "__main__":
    sys.exit(main())

"""
Acceptance runs for sk-descent.
Runs desk-scale campaigns and checks them against the expected scaling trends.

Usage:
    python -m evaluation.evaluate_acceptance                 # every case
    python -m evaluation.evaluate_acceptance --case oracle_equivalence --workers 4
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config import Config
from src.dynamics import random_config, run_trajectory
from src.experiment import (
    CampaignResult,
    ExperimentConfig,
    instance_seed,
    relative_spread,
    run_campaign,
    trajectory_seed,
)
from src.oracle import brute_force_ground_state, is_one_flip_stable
from src.results_io import render_csv
from src.sk_model import generate_couplings


class ExponentEvaluator:
    """
    Checks fitted scaling exponents against target values and, optionally,
    that they strictly increase with lambda.
    """

    def __call__(self, *, result: CampaignResult, targets: dict, strictly_increasing: bool = True, **kwargs) -> dict:
        fits = {f.lam: f for f in result.fits}
        reasons = []
        passed = True

        for lam_key, (target, tolerance) in targets.items():
            fit = fits.get(float(lam_key))
            if fit is None:
                passed = False
                reasons.append(f"no fit for lambda={lam_key}")
                continue
            ok = abs(fit.exponent - target) <= tolerance
            passed &= ok
            reasons.append(f"alpha({lam_key})={fit.exponent:.3f} target {target}±{tolerance} {'ok' if ok else 'MISS'}")

        exponents = [fits[lam].exponent for lam in sorted(fits)]
        if strictly_increasing:
            increasing = all(a < b for a, b in zip(exponents, exponents[1:]))
            passed &= increasing
            reasons.append(f"exponents {'strictly increase' if increasing else 'do NOT strictly increase'} in lambda")

        return {
            "passed": passed,
            "exponents": {f"{lam:g}": fits[lam].exponent for lam in sorted(fits)},
            "reason": "; ".join(reasons),
        }


class EnergySpreadEvaluator:
    """Relative spread of H_N across lambdas at one size must stay small."""

    def __call__(self, *, result: CampaignResult, n: int, max_relative_spread: float, **kwargs) -> dict:
        spread = relative_spread(result.stats, n)
        passed = spread <= max_relative_spread
        return {
            "passed": passed,
            "relative_spread": spread,
            "reason": f"relative spread {spread:.3e} vs limit {max_relative_spread:.1e}",
        }


class EnergyOrderingEvaluator:
    """
    H_N at the `best` lambda must lie below every `worse` lambda by more
    than `sigmas` combined standard errors.
    """

    def __call__(
        self, *, result: CampaignResult, n: int, best: float, worse: list,
        sigmas: float = 2.0, min_restarts: dict = None, **kwargs
    ) -> dict:
        cells = {s.lam: s for s in result.stats if s.n == n}
        reasons = []
        passed = True

        winner = cells.get(float(best))
        if winner is None or winner.h_n is None:
            return {"passed": False, "reason": f"no H_N for lambda={best} at n={n}"}

        for lam in worse:
            other = cells.get(float(lam))
            if other is None or other.h_n is None:
                passed = False
                reasons.append(f"no H_N for lambda={lam}")
                continue
            gap = other.h_n - winner.h_n
            combined = math.hypot(winner.h_n_stderr, other.h_n_stderr)
            ok = gap > sigmas * combined
            passed &= ok
            reasons.append(
                f"H_N({lam:g})-H_N({best:g})={gap:.5f} vs {sigmas}*{combined:.5f} {'ok' if ok else 'MISS'}"
            )

        for lam_key, minimum in (min_restarts or {}).items():
            cell = cells.get(float(lam_key))
            restarts = cell.runs / cell.nreal if cell else 0.0
            ok = restarts >= minimum
            passed &= ok
            reasons.append(f"lambda={lam_key}: {restarts:.1f} completed restarts per realization (need {minimum})")

        return {"passed": passed, "reason": "; ".join(reasons)}


class OracleEquivalenceEvaluator:
    """
    Replays the fixed-starts protocol realization by realization and compares
    each best endpoint with the exhaustive ground state. Every converged
    endpoint must also be 1-spin-flip stable.
    """

    def __call__(
        self, *, result: CampaignResult, config: ExperimentConfig,
        min_hit_rate: float, tolerance: float, **kwargs
    ) -> dict:
        n, lam = config.sizes[0], config.lambdas[0]
        starts = config.starts_for(n)
        hits = unstable = 0
        minima = []

        for r in range(config.nreal):
            J = generate_couplings(n, instance_seed(config.master_seed, n, r))
            truth = brute_force_ground_state(J)
            best = math.inf
            for k in range(starts):
                seed = trajectory_seed(config.master_seed, n, 0, r, k)
                rng = np.random.default_rng(seed)
                record = run_trajectory(J, random_config(n, rng), lam, rng, start_seed=seed)
                if record.converged and not is_one_flip_stable(J, record.final_spins):
                    unstable += 1
                best = min(best, record.final_energy_per_spin)
            minima.append(best)
            hits += abs(best - truth.energy_per_spin) <= tolerance

        hit_rate = hits / config.nreal
        replayed_h_n = float(np.mean(minima))
        campaign_h_n = result.stats[0].h_n
        consistent = campaign_h_n is not None and replayed_h_n == campaign_h_n
        passed = hit_rate >= min_hit_rate and unstable == 0 and consistent

        return {
            "passed": passed,
            "hit_rate": hit_rate,
            "unstable_endpoints": unstable,
            "reason": (
                f"ground state reached on {hits}/{config.nreal} instances; "
                f"{unstable} unstable endpoints; replayed H_N {'matches' if consistent else 'DIFFERS from'} campaign"
            ),
        }


class DeterminismEvaluator:
    """The same config must produce identical CSV at every worker count."""

    def __call__(self, *, result: CampaignResult, config: ExperimentConfig, worker_counts: list, **kwargs) -> dict:
        reference = render_csv(result.stats, result.fits)
        mismatched = []
        for workers in worker_counts:
            again = run_campaign(ExperimentConfig.from_dict(config.to_dict()), workers=workers)
            if render_csv(again.stats, again.fits) != reference:
                mismatched.append(workers)
        return {
            "passed": not mismatched,
            "reason": "bit-identical CSV" if not mismatched else f"CSV differs at workers={mismatched}",
        }


EVALUATORS = {
    "exponent": ExponentEvaluator(),
    "energy_spread": EnergySpreadEvaluator(),
    "energy_ordering": EnergyOrderingEvaluator(),
    "oracle": OracleEquivalenceEvaluator(),
    "determinism": DeterminismEvaluator(),
}


def run_case(case: dict, workers: int) -> dict:
    """Run one acceptance case and score it."""
    config = ExperimentConfig.from_dict(case["config"]).validate()
    started = time.perf_counter()
    result = run_campaign(config, workers=workers)
    evaluation = EVALUATORS[case["evaluator"]](result=result, config=config, **case["expected"])
    return {
        "id": case["id"],
        "description": case["description"],
        "seconds": round(time.perf_counter() - started, 1),
        "warnings": result.warnings,
        **evaluation,
    }


def main(argv=None) -> int:
    """Run the selected acceptance cases and save a summary."""
    parser = argparse.ArgumentParser(description="sk-descent acceptance runs")
    parser.add_argument("--case", action="append", help="case id to run (repeatable; default all)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--output", default="evaluation/results.json")
    args = parser.parse_args(argv)

    cases_path = Path(__file__).parent / "acceptance_cases.json"
    with open(cases_path) as f:
        cases = json.load(f)
    if args.case:
        cases = [c for c in cases if c["id"] in set(args.case)]
        if not cases:
            print(f"❌ No case matches {args.case}")
            return 2

    workers = args.workers or Config.workers()
    print(f"📂 Loaded {len(cases)} acceptance cases (workers={workers})")

    results = []
    for i, case in enumerate(cases):
        print(f"  [{i+1}/{len(cases)}] {case['id']}: {case['description']}")
        try:
            outcome = run_case(case, workers)
        except Exception as e:
            outcome = {"id": case["id"], "passed": False, "reason": f"Error: {e}"}
        print(f"    {'✅' if outcome['passed'] else '❌'} {outcome['reason']}")
        results.append(outcome)

    passed = sum(r["passed"] for r in results)
    summary = {"total_cases": len(results), "passed": passed, "failed": len(results) - passed}

    output_file = Path(args.output)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w") as f:
        json.dump({"summary": summary, "detailed_results": results}, f, indent=2)

    print(f"\n📈 Acceptance summary: {passed}/{len(results)} passed")
    print(f"✅ Full results saved to {output_file}")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())

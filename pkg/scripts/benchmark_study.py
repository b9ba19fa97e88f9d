"""Five-algorithm benchmark study on Sphere and Summation Cancellation.

Replays the comparison of UMDA, GCEDA, CVEDA, DVEDA and the copula-chain
MIMIC at their critical population sizes, 30 independent runs each, and
writes one CSV per algorithm/function pair plus a summary table to stdout.

    python scripts/benchmark_study.py --outdir results/
    python scripts/benchmark_study.py --quick          # 5 runs, dim 5
    python scripts/benchmark_study.py --critpop        # search pop sizes
                                                       # instead of reusing
                                                       # the published ones
"""

import argparse
import csv
import pathlib
import sys
import time

import numpy as np

from copeda import EdaSpec, TerminationSpec, critical_pop_size, eda_indep_runs
from copeda.benchmarks import get_benchmark

# population sizes found by bisection in the reference study
STUDY = {
    ("umda", "sphere"): 81,
    ("gceda", "sphere"): 310,
    ("cveda", "sphere"): 104,
    ("dveda", "sphere"): 111,
    ("copula-mimic", "sphere"): 172,
    ("umda", "summation-cancellation"): 2000,
    ("gceda", "summation-cancellation"): 325,
    ("cveda", "summation-cancellation"): 294,
    ("dveda", "summation-cancellation"): 965,
    ("copula-mimic", "summation-cancellation"): 2000,
}


def make_spec(algorithm, pop_size, target, max_evals=300000):
    return EdaSpec(
        algorithm=algorithm,
        pop_size=pop_size,
        termination=TerminationSpec(target_eval=target, target_tol=1e-6,
                                    max_evals=max_evals,
                                    eval_stddev_floor=1e-8),
        sig_level=0.01,
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="study_results")
    parser.add_argument("--runs", type=int, default=30)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--quick", action="store_true",
                        help="5 runs in dimension 5 for a fast smoke study")
    parser.add_argument("--critpop", action="store_true",
                        help="bisect the critical population size in "
                             "[50, 2000] instead of using the published one")
    args = parser.parse_args(argv)
    max_evals = 300000
    if args.quick:
        args.runs, args.dim = min(args.runs, 5), min(args.dim, 5)
        max_evals = 20000

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    print(f"{'algorithm':<14}{'function':<26}{'pop':>6}{'success':>9}"
          f"{'evals':>12}{'best':>14}{'time':>8}")
    for (algorithm, function), pop in STUDY.items():
        bench = get_benchmark(function)
        lower = np.full(args.dim, bench.default_lower)
        upper = np.full(args.dim, bench.default_upper)
        if args.quick:
            pop = min(pop, 150)
        spec = make_spec(algorithm, pop, bench.target_eval, max_evals)
        if args.critpop:
            found = critical_pop_size(
                spec, bench.func, lower, upper, bench.target_eval, 1e-6,
                lower_pop=50, upper_pop=2000, total_runs=args.runs,
                success_runs=args.runs, stop_percent=10.0,
                base_seed=args.seed,
                trace=lambda s, ok, att: print(f"  pop {s}: {ok}/{att}",
                                               file=sys.stderr))
            pop = found if found is not None else 2000
            spec = make_spec(algorithm, pop, bench.target_eval, max_evals)
        start = time.perf_counter()
        results, summary = eda_indep_runs(spec, bench.func, lower, upper,
                                          args.runs, base_seed=args.seed,
                                          jobs=args.jobs)
        elapsed = time.perf_counter() - start
        successes = sum(abs(r.best_eval - bench.target_eval) <= 1e-6
                        for r in results)
        path = outdir / f"{algorithm}_{function}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "generations", "evaluations",
                             "best_evaluation", "cpu_time_seconds"])
            for i, r in enumerate(results, start=1):
                writer.writerow([i, r.num_gens, r.f_evals,
                                 f"{r.best_eval:.6e}", f"{r.cpu_time:.6e}"])
        print(f"{algorithm:<14}{function:<26}{pop:>6}"
              f"{successes:>5}/{args.runs:<3}"
              f"{summary.evaluations.mean:>12.1f}"
              f"{summary.best_evaluation.mean:>14.3e}{elapsed:>8.1f}")
    print(f"per-run CSVs written to {outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())

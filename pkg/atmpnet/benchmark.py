"""Benchmark harness comparing front methods on seeded instance suites."""

import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .evaluator import is_feasible
from .heuristic import front_heuristic
from .instance import Instance, ObjectiveVector, generate
from .pareto import ParetoFront, default_reference, front_exact, hypervolume

logger = logging.getLogger(__name__)

METHODS = ("exact", "heuristic")


@dataclass(frozen=True)
class SuiteCase:
    n_orders: int
    n_locations: int
    n_modes: int
    seed: int

    @property
    def size(self) -> str:
        return f"{self.n_orders}x{self.n_locations}x{self.n_modes}"

    def instance(self) -> Instance:
        return generate(self.n_orders, self.n_locations, self.n_modes, seed=self.seed)


@dataclass(frozen=True)
class BenchmarkSuite:
    name: str
    cases: Tuple[SuiteCase, ...] = field(default_factory=tuple)

    @classmethod
    def seeded(cls, name: str, sizes: Sequence[Tuple[int, int, int]], seeds: Sequence[int]) -> "BenchmarkSuite":
        """Every size crossed with every seed."""
        cases = tuple(SuiteCase(i, j, k, seed) for (i, j, k) in sizes for seed in seeds)
        return cls(name, cases)


TINY_SUITE = BenchmarkSuite.seeded("tiny", [(3, 2, 1), (3, 3, 2), (4, 3, 2)], range(5))


def _front_runner(method: str, paper_strict: bool) -> Callable[[Instance], ParetoFront]:
    if method == "exact":
        return lambda instance: front_exact(instance, paper_strict=paper_strict)
    if method == "heuristic":
        return lambda instance: front_heuristic(instance, paper_strict=paper_strict)
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


class FrontBenchmark:
    """Runs every method on every case and compares hypervolumes.

    Hypervolumes of one case share a reference point built from the union of
    all methods' fronts, so ratios against the exact front are comparable.
    """

    def __init__(self, methods: Sequence[str] = METHODS, paper_strict: bool = False, timings: bool = False):
        self.methods = list(methods)
        self.runners = {method: _front_runner(method, paper_strict) for method in self.methods}
        self.paper_strict = paper_strict
        self.timings = timings

    def run_case(self, case: SuiteCase) -> Dict[str, Any]:
        instance = case.instance()
        fronts: Dict[str, ParetoFront] = {}
        runtimes: Dict[str, float] = {}
        for method in self.methods:
            started = time.perf_counter()
            fronts[method] = self.runners[method](instance)
            runtimes[method] = time.perf_counter() - started

        union: List[ObjectiveVector] = [v for front in fronts.values() for v in front.vectors()]
        reference = default_reference(union)
        volumes = {method: hypervolume(front, reference) for method, front in fronts.items()}
        exact_volume = volumes.get("exact")

        method_results = {}
        for method, front in fronts.items():
            record: Dict[str, Any] = {
                "points": len(front),
                "hypervolume": volumes[method],
                "feasible": all(is_feasible(instance, point.solution) for point in front),
                "approximate": front.approximate,
            }
            if exact_volume:
                record["hypervolume_ratio"] = volumes[method] / exact_volume
            if self.timings:
                record["runtime_seconds"] = runtimes[method]
            method_results[method] = record

        logger.info(
            "[BENCHMARK] %s seed %d: %s",
            case.size,
            case.seed,
            ", ".join(f"{m} {r['points']} points" for m, r in method_results.items()),
        )
        return {
            "size": case.size,
            "seed": case.seed,
            "reference": reference.to_dict(),
            "methods": method_results,
        }

    def run_benchmark(self, suite: BenchmarkSuite) -> Dict[str, Any]:
        """Run every case of the suite.

        Returns:
            Complete benchmark results
        """
        results: Dict[str, Any] = {
            "suite": suite.name,
            "cases_count": len(suite.cases),
            "methods": self.methods,
            "paper_strict": self.paper_strict,
            "case_results": [],
            "method_results": {},
        }
        if self.timings:
            results["timestamp"] = datetime.now().isoformat()

        for case in suite.cases:
            try:
                results["case_results"].append(self.run_case(case))
            except Exception as e:
                logger.error("[BENCHMARK] %s seed %d failed: %s", case.size, case.seed, e)
                results["case_results"].append({"size": case.size, "seed": case.seed, "error": str(e)})

        for method in self.methods:
            results["method_results"][method] = {
                "aggregate_scores": self._calculate_aggregates(results["case_results"], method),
                "by_size": {
                    size: self._calculate_aggregates(
                        [r for r in results["case_results"] if r["size"] == size], method
                    )
                    for size in sorted({r["size"] for r in results["case_results"]})
                },
            }

        results["comparison"] = self._generate_comparison(results["method_results"])
        return results

    def _calculate_aggregates(self, case_results: List[Dict[str, Any]], method: str) -> Dict[str, float]:
        """Calculate aggregate scores across cases for one method."""
        records = [r["methods"][method] for r in case_results if "methods" in r and method in r["methods"]]
        if not records:
            return {}

        scores: Dict[str, List[float]] = {"points": [], "hypervolume_ratio": [], "runtime_seconds": []}
        for record in records:
            for key in scores:
                if key in record:
                    scores[key].append(float(record[key]))

        aggregates: Dict[str, float] = {
            "cases": len(records),
            "feasible_rate": sum(1 for r in records if r["feasible"]) / len(records),
        }
        for key, values in scores.items():
            if values:
                aggregates[f"{key}_mean"] = sum(values) / len(values)
                aggregates[f"{key}_min"] = min(values)
                aggregates[f"{key}_max"] = max(values)
        return aggregates

    def _generate_comparison(self, method_results: Dict[str, Any]) -> Dict[str, Any]:
        """Rank methods by mean hypervolume ratio."""
        comparison: Dict[str, Any] = {"rankings": [], "best_method": None, "insights": []}

        rankings = []
        for method, results in method_results.items():
            scores = results["aggregate_scores"]
            if scores and "hypervolume_ratio_mean" in scores:
                rankings.append(
                    {
                        "method": method,
                        "hypervolume_ratio": scores["hypervolume_ratio_mean"],
                        "feasible_rate": scores["feasible_rate"],
                    }
                )

        rankings.sort(key=lambda x: (-x["hypervolume_ratio"], x["method"]))
        comparison["rankings"] = rankings

        if rankings:
            comparison["best_method"] = rankings[0]
            best = rankings[0]
            worst = rankings[-1]
            comparison["insights"] = [
                f"Best method: {best['method']} (hypervolume ratio {best['hypervolume_ratio']:.4f})",
                f"Ratio gap between best and worst: {best['hypervolume_ratio'] - worst['hypervolume_ratio']:.4f}",
                f"Methods compared: {len(rankings)}",
            ]
        return comparison


def run_benchmark(
    suite: BenchmarkSuite = TINY_SUITE,
    methods: Sequence[str] = METHODS,
    paper_strict: bool = False,
    timings: bool = False,
) -> Dict[str, Any]:
    """Benchmark the front methods; output is deterministic unless timings is set."""
    return FrontBenchmark(methods, paper_strict, timings).run_benchmark(suite)


def save_results(results: Dict[str, Any], output_path: str) -> None:
    """Save benchmark results to a JSON file."""
    with open(output_path, "w") as f:
        json.dump(results, f, indent=2, sort_keys=True)
    logger.info("[BENCHMARK] results saved to %s", output_path)


def generate_report(results: Dict[str, Any], output_path: Optional[str] = None) -> str:
    """Human-readable benchmark report; written to output_path when given."""
    report = []
    report.append("=" * 80)
    report.append("ATMPNET FRONT BENCHMARK REPORT")
    report.append("=" * 80)
    if "timestamp" in results:
        report.append(f"\nGenerated: {results['timestamp']}")
    report.append(f"Suite: {results['suite']}")
    report.append(f"Cases: {results['cases_count']}")
    report.append(f"Methods: {', '.join(results['methods'])}")
    report.append("")

    comparison = results.get("comparison", {})
    if comparison.get("rankings"):
        report.append("OVERALL RANKINGS")
        report.append("-" * 80)
        for i, ranking in enumerate(comparison["rankings"], 1):
            report.append(
                f"{i}. {ranking['method']}: hypervolume ratio {ranking['hypervolume_ratio']:.4f}, "
                f"feasible {ranking['feasible_rate']:.0%}"
            )
        report.append("")
        report.append("KEY INSIGHTS")
        report.append("-" * 80)
        for insight in comparison["insights"]:
            report.append(f"• {insight}")
        report.append("")

    failed = [r for r in results["case_results"] if "error" in r]
    if failed:
        report.append("FAILED CASES")
        report.append("-" * 80)
        for r in failed:
            report.append(f"{r['size']} seed {r['seed']}: {r['error']}")
        report.append("")

    for method, data in results["method_results"].items():
        report.append(f"METHOD: {method}")
        report.append("=" * 80)
        for size, scores in data["by_size"].items():
            if not scores:
                continue
            line = f"  {size:<10} points {scores.get('points_mean', 0):6.2f}"
            if "hypervolume_ratio_mean" in scores:
                line += (
                    f"  hv ratio {scores['hypervolume_ratio_mean']:.4f}"
                    f" (min {scores['hypervolume_ratio_min']:.4f})"
                )
            line += f"  feasible {scores['feasible_rate']:.0%}"
            if "runtime_seconds_mean" in scores:
                line += f"  runtime {scores['runtime_seconds_mean']:.3f}s"
            report.append(line)
        report.append("")

    text = "\n".join(report)
    if output_path:
        with open(output_path, "w") as f:
            f.write(text)
        logger.info("[BENCHMARK] report saved to %s", output_path)
    return text

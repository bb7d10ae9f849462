"""
Benchmark runner - fans episodes out over scenes, seeds and modes, then
reduces the rows into per-mode and per-scene SR/SPL/DTG reports.
"""

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from simworld.scene import SceneSpec
from simworld.templates import build_suite

from .config_loader import GateConfig, Mode, PipelineConfig, SimulationConfig
from .metrics import (ROW_FIELDS, EpisodeResult, compute_spl, compute_sr, mean_dtg,
                      mean_heading_error)
from .pipeline import run_episode
from .scorer_interface import ScorerInterface
from .scoring import TaskQuery

logger = logging.getLogger(__name__)

Suite = List[Tuple[SceneSpec, TaskQuery]]


def bench_suite(name: str, seed: int = 0) -> Suite:
    """Named suite paired with each scene's own task"""
    return [(scene, TaskQuery.resolve(scene.task.text, scene)) for scene in build_suite(name, seed)]


def summarize(results: Sequence[EpisodeResult]) -> Dict[str, Any]:
    failures: Dict[str, int] = {}
    for result in results:
        if result.failure_reason:
            failures[result.failure_reason] = failures.get(result.failure_reason, 0) + 1
    return {
        "episodes": len(results),
        "sr": compute_sr(results),
        "spl": compute_spl(results),
        "mean_dtg": mean_dtg(results),
        "mean_heading_error_deg": mean_heading_error(results),
        "failures": dict(sorted(failures.items())),
    }


@dataclass
class BenchmarkReport:
    """Episode rows in job order plus the aggregates computed from them"""

    results: List[EpisodeResult]
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def modes(self) -> List[str]:
        seen = []
        for result in self.results:
            if result.mode not in seen:
                seen.append(result.mode)
        return seen

    def by_mode(self, mode: str) -> List[EpisodeResult]:
        return [r for r in self.results if r.mode == mode]

    def overall(self) -> Dict[str, Any]:
        return summarize(self.results)

    def mode_summaries(self) -> Dict[str, Dict[str, Any]]:
        return {mode: summarize(self.by_mode(mode)) for mode in self.modes}

    def scene_summaries(self) -> Dict[str, Dict[str, Dict[str, Any]]]:
        summaries: Dict[str, Dict[str, Dict[str, Any]]] = {}
        for mode in self.modes:
            rows = self.by_mode(mode)
            scenes = list(dict.fromkeys(r.scene for r in rows))
            summaries[mode] = {scene: summarize([r for r in rows if r.scene == scene]) for scene in scenes}
        return summaries

    def rows(self) -> List[Dict[str, Any]]:
        return [result.row() for result in self.results]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=ROW_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({key: repr(value) if isinstance(value, float) else value for key, value in row.items()})
        return buffer.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as file:
            file.write(self.to_csv())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "overall": self.overall(),
            "modes": self.mode_summaries(),
            "scenes": self.scene_summaries(),
        }

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_dict(), file, indent=2, sort_keys=True)

    def write_traces(self, path: str) -> int:
        """One JSON line per episode that carries a trace; returns the count"""
        written = 0
        with open(path, "w", encoding="utf-8") as file:
            for result in self.results:
                if result.trace is not None:
                    file.write(result.trace.to_json() + "\n")
                    written += 1
        return written

    def check_gates(self, gates: GateConfig) -> List[str]:
        """
        Violated gates as messages. SR and DTG gates apply to the full
        pipeline's rows (all rows when no full-mode row exists); SPL <= SR
        applies to every mode.
        """
        if not self.results:
            return ["report has no episodes"]
        violations = []
        gated = self.by_mode(Mode.FULL.value) or self.results
        summary = summarize(gated)
        if gates.min_sr is not None and summary["sr"] < gates.min_sr:
            violations.append(f"SR {summary['sr']:.3f} below {gates.min_sr:.3f}")
        if gates.max_mean_dtg is not None and summary["mean_dtg"] > gates.max_mean_dtg:
            violations.append(f"mean DTG {summary['mean_dtg']:.3f} m above {gates.max_mean_dtg:.3f} m")
        if gates.spl_le_sr:
            for mode, mode_summary in self.mode_summaries().items():
                if mode_summary["spl"] > mode_summary["sr"]:
                    violations.append(f"{mode}: SPL {mode_summary['spl']} exceeds SR {mode_summary['sr']}")
        return violations

    def format_table(self) -> str:
        lines = [f"{'mode':<8}{'episodes':>10}{'SR':>8}{'SPL':>8}{'DTG':>8}{'heading':>10}"]
        for mode, s in self.mode_summaries().items():
            lines.append(f"{mode:<8}{s['episodes']:>10}{s['sr']:>8.3f}{s['spl']:>8.3f}"
                         f"{s['mean_dtg']:>8.3f}{s['mean_heading_error_deg']:>10.1f}")
        return "\n".join(lines)


def benchmark_jobs(suite: Suite, seeds: Iterable[int], modes: Iterable[Mode]) -> List[Tuple[SceneSpec, TaskQuery, Mode, int]]:
    """Every (scene, query, mode, seed) combination, modes outermost"""
    seeds = list(seeds)
    return [(scene, query, mode, seed) for mode in modes for scene, query in suite for seed in seeds]


def run_benchmark(suite: Suite, scorer: ScorerInterface, cfg: PipelineConfig = PipelineConfig(),
                  sim: SimulationConfig = SimulationConfig(), seeds: Optional[Sequence[int]] = None,
                  modes: Optional[Sequence[Mode]] = None, jobs: int = 1) -> BenchmarkReport:
    """
    Run a suite and reduce it to a report.

    Args:
        suite: (scene, query) pairs
        scorer: Scorer shared by all episodes
        cfg: Pipeline settings; mode and seed are overridden per job
        sim: Simulation settings
        seeds: Episode seeds (default: cfg.seed only)
        modes: Modes to run (default: cfg.mode only)
        jobs: Parallel episodes; scorers that must see decisions in order run one at a time

    Returns:
        BenchmarkReport with rows in job order
    """
    if not suite:
        raise ValueError("Benchmark suite must not be empty")
    seeds = list(seeds) if seeds else [cfg.seed]
    modes = [Mode.parse(m) for m in (modes or [cfg.mode])]
    combos = benchmark_jobs(suite, seeds, modes)
    workers = 1 if scorer.serialized else max(1, jobs)
    logger.info(f"Benchmark: {len(combos)} episodes, {workers} worker(s), scorer {scorer.name}")

    def run(job):
        scene, query, mode, seed = job
        return run_episode(scene, query, scorer, cfg.model_copy(update={"mode": mode, "seed": seed}), sim)

    if workers == 1:
        results = [run(job) for job in combos]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, combos))

    config = {
        "pipeline": cfg.model_dump(mode="json"),
        "simulation": sim.model_dump(mode="json"),
        "scorer": scorer.name,
        "seeds": seeds,
        "modes": [m.value for m in modes],
        "scenes": [scene.name for scene, _ in suite],
    }
    return BenchmarkReport(results, config)

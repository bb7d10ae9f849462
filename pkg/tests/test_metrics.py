"""
Unit tests for episode metrics and benchmark reports
"""

import csv
import io
import json
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import Mock, patch

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.config_loader import GateConfig, Mode, PipelineConfig
from core.errors import EmptyResults
from core.evalbench import BenchmarkReport, bench_suite, benchmark_jobs, run_benchmark, summarize
from core.metrics import (ROW_FIELDS, EpisodeResult, compute_dtg, compute_spl, compute_sr, is_success,
                          mean_dtg, path_efficiency)
from core.scoring import TaskQuery
from simworld.templates import generate_scene


def result(success: bool = True, shortest: float = 1.0, traveled: float = 1.0, dtg: float = 0.1,
           scene: str = "s", mode: str = "full", seed: int = 0, reason=None) -> EpisodeResult:
    return EpisodeResult(scene, "open it", mode, seed, success, shortest, traveled, dtg, (0.0, 0.0, 0.0), 5.0,
                         reason)


class TestEpisodeMetrics(unittest.TestCase):

    def test_dtg(self):
        self.assertAlmostEqual(compute_dtg((1.0, 0.0), (1.0, 0.4)), 0.4)
        self.assertTrue(is_success(0.4, 0.5))
        self.assertEqual(compute_dtg((2.0, 3.0, 45.0), (2.0, 3.0, -45.0)), 0.0)
        self.assertFalse(is_success(0.5, 0.5))

    def test_spl_single_success(self):
        self.assertEqual(compute_spl([result(shortest=2.0, traveled=4.0)]), 0.5)

    def test_spl_worked_example(self):
        results = [result(shortest=3.0, traveled=3.0), result(shortest=1.0, traveled=2.0)]
        self.assertEqual(compute_spl(results), 0.75)

    def test_spl_of_failures(self):
        self.assertEqual(compute_spl([result(success=False), result(success=False)]), 0.0)

    def test_sr(self):
        results = [result(success=i < 7) for i in range(10)]
        self.assertEqual(compute_sr(results), 0.7)
        self.assertEqual(compute_sr([result()]), 1.0)

    def test_spl_never_exceeds_sr(self):
        results = [result(success=i % 3 != 0, shortest=1.0 + i, traveled=0.5 + 2 * i) for i in range(12)]
        self.assertLessEqual(compute_spl(results), compute_sr(results))

    def test_shorter_traveled_counts_as_one(self):
        self.assertEqual(path_efficiency(result(shortest=2.0, traveled=1.0)), 1.0)
        self.assertEqual(path_efficiency(result(shortest=0.0, traveled=0.0)), 1.0)

    def test_empty_results(self):
        for metric in (compute_spl, compute_sr, mean_dtg):
            with self.assertRaises(EmptyResults):
                metric([])

    def test_rejects_negative_lengths(self):
        with self.assertRaises(ValueError):
            result(traveled=-1.0)

    def test_row(self):
        row = result(success=False, reason="Stuck").row()
        self.assertEqual(list(row), ROW_FIELDS)
        self.assertEqual(row["success"], 0)
        self.assertEqual(row["failure_reason"], "Stuck")
        self.assertEqual(result().row()["failure_reason"], "")


class TestBenchmarkReport(unittest.TestCase):

    def setUp(self):
        self.results = [
            result(scene="a", mode="full", dtg=0.2),
            result(scene="b", mode="full", dtg=0.3, traveled=2.0),
            result(scene="a", mode="dnt", success=False, dtg=1.5, reason="Unreachable"),
            result(scene="b", mode="dnt", dtg=0.4),
        ]
        self.report = BenchmarkReport(self.results, {"seeds": [0]})

    def test_summaries(self):
        modes = self.report.mode_summaries()
        self.assertEqual(list(modes), ["full", "dnt"])
        self.assertEqual(modes["full"]["sr"], 1.0)
        self.assertEqual(modes["full"]["spl"], 0.75)
        self.assertEqual(modes["dnt"]["failures"], {"Unreachable": 1})
        self.assertEqual(self.report.scene_summaries()["dnt"]["a"]["sr"], 0.0)

    def test_aggregates_match_rows(self):
        rows = list(csv.DictReader(io.StringIO(self.report.to_csv())))
        self.assertEqual(len(rows), 4)
        successes = [int(row["success"]) for row in rows]
        self.assertEqual(self.report.overall()["sr"], sum(successes) / len(successes))
        self.assertEqual(float(rows[1]["traveled"]), 2.0)

    def test_csv_is_deterministic(self):
        again = BenchmarkReport(list(self.results), {"seeds": [0]})
        self.assertEqual(self.report.to_csv(), again.to_csv())
        self.assertTrue(self.report.to_csv().startswith(",".join(ROW_FIELDS) + "\n"))

    def test_gates(self):
        self.assertEqual(self.report.check_gates(GateConfig(min_sr=1.0, max_mean_dtg=0.3)), [])
        violations = self.report.check_gates(GateConfig(min_sr=1.0, max_mean_dtg=0.2))
        self.assertEqual(len(violations), 1)
        self.assertIn("mean DTG", violations[0])
        dnt_only = BenchmarkReport(self.report.by_mode("dnt"))
        self.assertIn("SR 0.500", dnt_only.check_gates(GateConfig(min_sr=0.9))[0])
        self.assertEqual(BenchmarkReport([]).check_gates(GateConfig()), ["report has no episodes"])

    def test_written_files(self):
        temp_dir = tempfile.mkdtemp()
        try:
            json_path = os.path.join(temp_dir, "report.json")
            self.report.write_json(json_path)
            with open(json_path, "r", encoding="utf-8") as file:
                data = json.load(file)
            self.assertEqual(data["config"], {"seeds": [0]})
            self.assertEqual(data["overall"]["episodes"], 4)
            self.assertEqual(self.report.write_traces(os.path.join(temp_dir, "traces.jsonl")), 0)
        finally:
            shutil.rmtree(temp_dir)

    def test_table_lists_every_mode(self):
        table = self.report.format_table().splitlines()
        self.assertEqual(len(table), 3)
        self.assertTrue(table[2].startswith("dnt"))

    def test_summarize_counts_failures(self):
        summary = summarize([result(reason="Stuck"), result(reason="Stuck"), result()])
        self.assertEqual(summary["failures"], {"Stuck": 2})


class TestRunBenchmark(unittest.TestCase):

    def setUp(self):
        self.scenes = [generate_scene("open-room", 0), generate_scene("corner-object", 1)]
        self.suite = [(scene, TaskQuery.resolve(scene.task.text, scene)) for scene in self.scenes]
        self.scorer = Mock()
        self.scorer.name = "fake"
        self.scorer.serialized = False

    @staticmethod
    def fake_episode(scene, query, scorer, cfg, sim):
        return result(scene=scene.name, mode=cfg.mode.value, seed=cfg.seed, dtg=0.1 * cfg.seed)

    def test_job_order(self):
        jobs = benchmark_jobs(self.suite, [0, 1], [Mode.FULL, Mode.DNT])
        self.assertEqual(len(jobs), 8)
        self.assertEqual([(j[0].name, j[2], j[3]) for j in jobs[:3]],
                         [(self.scenes[0].name, Mode.FULL, 0), (self.scenes[0].name, Mode.FULL, 1),
                          (self.scenes[1].name, Mode.FULL, 0)])

    def test_rows_follow_job_order_with_workers(self):
        with patch("core.evalbench.run_episode", side_effect=self.fake_episode) as episode:
            report = run_benchmark(self.suite, self.scorer, PipelineConfig(), seeds=[0, 1, 2],
                                   modes=["full", "ogd"], jobs=4)
        self.assertEqual(episode.call_count, 12)
        self.assertEqual([r.seed for r in report.results[:3]], [0, 1, 2])
        self.assertEqual(report.modes, ["full", "ogd"])
        self.assertEqual(report.config["scorer"], "fake")
        self.assertEqual(report.config["scenes"], [scene.name for scene in self.scenes])

    def test_mode_members(self):
        with patch("core.evalbench.run_episode", side_effect=self.fake_episode) as episode:
            report = run_benchmark(self.suite, self.scorer, PipelineConfig(), modes=list(Mode))
        self.assertEqual(episode.call_count, 2 * len(Mode))
        self.assertEqual(report.modes, [m.value for m in Mode])
        self.assertEqual([call[0][3].mode for call in episode.call_args_list[::2]], list(Mode))

        with patch("core.evalbench.run_episode", side_effect=self.fake_episode):
            report = run_benchmark(self.suite, self.scorer, PipelineConfig(mode=Mode.OGD), modes=[Mode.OGD])
        self.assertEqual(report.config["modes"], ["ogd"])

    def test_defaults_come_from_config(self):
        with patch("core.evalbench.run_episode", side_effect=self.fake_episode):
            report = run_benchmark(self.suite, self.scorer, PipelineConfig(seed=7, mode="norts"))
        self.assertEqual({(r.mode, r.seed) for r in report.results}, {("norts", 7)})

    def test_empty_suite(self):
        with self.assertRaises(ValueError):
            run_benchmark([], self.scorer)

    def test_named_suite(self):
        suite = bench_suite("oracle-10", 0)
        self.assertEqual(len(suite), 10)
        for scene, query in suite:
            self.assertEqual(query.label, scene.task.label)


if __name__ == "__main__":
    unittest.main()

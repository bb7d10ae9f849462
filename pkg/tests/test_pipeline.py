"""
Tests for the episode pipeline: traces, the sequential decision and whole episodes
"""

import json
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import Mock

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core import errors
from core.candidates import CandidateCircle, CandidateSet
from core.config_loader import Mode, PipelineConfig
from core.errors import MalformedTrace, Transport
from core.evalbench import run_benchmark
from core.pipeline import (EpisodeRunner, EpisodeTrace, grid_from_snapshot, grid_snapshot, replay_actions,
                           run_ablation, run_episode, scene_target_id, sequential_decision)
from core.scorer_interface import ScorerInterface
from core.scoring import TaskQuery
from core.taskgrid import CellState, TaskGrid
from scorers.oracle_scorer import OracleScorer
from simworld.robot import Action, RobotState
from simworld.scene import Pose2D, Primitive, SceneSpec, TaskSpec, optimal_operation_pose
from simworld.templates import generate_scene


def fridge_scene() -> SceneSpec:
    fridge = Primitive(10, (2.0, 0.0), (0.6, 0.6, 1.5), label="refrigerator", operation_direction=(-1.0, 0.0))
    return SceneSpec("fridge", (-3.0, -3.0, 3.0, 3.0), (fridge,), Pose2D(0.0, 0.0),
                     TaskSpec("open the refrigerator", "refrigerator"), {"target_id": 10})


def plant_scene() -> SceneSpec:
    plant = Primitive(10, (1.5, 0.5), (0.6, 0.6, 1.2), shape="cylinder", label="plant stand")
    return SceneSpec("plant", (-3.0, -3.0, 3.0, 3.0), (plant,), Pose2D(-1.0, 0.0),
                     TaskSpec("water the plant", "plant stand"), {"target_id": 10})


class TestEpisodeTrace(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.trace = EpisodeTrace("s", {"text": "open it", "label": "it"}, "full", 3)
        self.trace.record("setup", start=np.array([0.5, 1.0]), count=np.int64(4))
        self.trace.add_actions([Action.TURN_LEFT, Action.MOVE_FORWARD], collisions=1)

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_events_hold_plain_values(self):
        event = self.trace.last("setup")
        self.assertEqual(event, {"stage": "setup", "start": [0.5, 1.0], "count": 4})
        self.assertIsNone(self.trace.last("final"))

    def test_json_round_trip(self):
        restored = EpisodeTrace.from_dict(json.loads(self.trace.to_json()))
        self.assertEqual(restored.to_dict(), self.trace.to_dict())
        self.assertEqual(restored.collisions, 1)

    def test_rejects_unknown_action(self):
        data = self.trace.to_dict()
        data["actions"] = ["jump"]
        with self.assertRaises(MalformedTrace):
            EpisodeTrace.from_dict(data)

    def test_rejects_missing_fields(self):
        with self.assertRaises(MalformedTrace):
            EpisodeTrace.from_dict({"scene": "s"})

    def test_load_jsonl(self):
        path = os.path.join(self.temp_dir, "traces.jsonl")
        with open(path, "w", encoding="utf-8") as file:
            file.write(self.trace.to_json() + "\n\n" + self.trace.to_json() + "\n")
        self.assertEqual(len(EpisodeTrace.load_jsonl(path)), 2)

    def test_load_jsonl_errors(self):
        empty = os.path.join(self.temp_dir, "empty.jsonl")
        with open(empty, "w", encoding="utf-8") as file:
            file.write("\n")
        with self.assertRaises(MalformedTrace):
            EpisodeTrace.load_jsonl(empty)

        broken = os.path.join(self.temp_dir, "broken.jsonl")
        with open(broken, "w", encoding="utf-8") as file:
            file.write("{not json\n")
        with self.assertRaises(MalformedTrace):
            EpisodeTrace.load_jsonl(broken)

    def test_grid_snapshot(self):
        cells = np.zeros((4, 4), dtype=np.int8)
        cells[1, 2] = CellState.OBSTACLE
        grid = TaskGrid((0.0, 0.0), 0.02, 0.01, cells)
        restored = grid_from_snapshot(json.loads(json.dumps(grid_snapshot(grid))))
        np.testing.assert_array_equal(restored.cells, cells)
        with self.assertRaises(MalformedTrace):
            grid_from_snapshot({"cells": "???"})


class TestSceneTarget(unittest.TestCase):

    def test_metadata_wins(self):
        self.assertEqual(scene_target_id(fridge_scene()), 10)

    def test_label_fallback(self):
        scene = fridge_scene()
        unlabelled = SceneSpec(scene.name, scene.floor, scene.primitives, scene.start, scene.task)
        self.assertEqual(scene_target_id(unlabelled), 10)
        bare = SceneSpec(scene.name, scene.floor, scene.primitives, scene.start)
        with self.assertRaises(ValueError):
            scene_target_id(bare)


class TestSequentialDecision(unittest.TestCase):
    """Two candidates on the line toward the fridge, the far one hidden behind it"""

    def setUp(self):
        self.scene = fridge_scene()
        self.query = TaskQuery("open the refrigerator", "refrigerator")
        self.candidates = CandidateSet([CandidateCircle((1.4, 0.0), marker=1),
                                        CandidateCircle((2.6, 0.0), marker=2)])

    def run_decision(self, mode: Mode):
        cfg = PipelineConfig(mode=mode)
        return sequential_decision(self.scene, RobotState(0.0, 0.0, 0.0), self.candidates, OracleScorer(),
                                   self.query, (2.0, 0.0), cfg)

    def test_two_step_decision(self):
        chosen, runner = self.run_decision(Mode.FULL)
        np.testing.assert_allclose(chosen, [1.4, 0.0])
        self.assertLess(np.linalg.norm(runner.state.position - [1.4, 0.0]), 0.15)
        self.assertLess(abs(runner.state.heading_deg), 10.0)
        self.assertEqual(len(runner.trace.events_of("decision")), 2)
        self.assertEqual(runner.trace.events_of("navigate")[0]["label"], "decision-1-midpoint")

    def test_one_step_decision(self):
        chosen, runner = self.run_decision(Mode.OGD)
        np.testing.assert_allclose(chosen, [1.4, 0.0])
        self.assertEqual(len(runner.trace.events_of("decision")), 1)

    def test_second_step_revises_the_first_choice(self):
        """Facing away at the start only the side marker is in view; from the midpoint the front one is"""
        candidates = CandidateSet([CandidateCircle((1.4, 0.0), marker=1), CandidateCircle((1.0, -1.0), marker=2)])
        start = RobotState(0.0, 0.0, -75.0)
        optimal = optimal_operation_pose(self.scene, 10).position
        runs = {}
        for mode in (Mode.FULL, Mode.OGD):
            runs[mode] = sequential_decision(self.scene, start, candidates, OracleScorer(), self.query, (2.0, 0.0),
                                             PipelineConfig(mode=mode))

        ogd_choice, ogd = runs[Mode.OGD]
        full_choice, full = runs[Mode.FULL]
        np.testing.assert_allclose(ogd_choice, [1.0, -1.0])
        np.testing.assert_allclose(full_choice, [1.4, 0.0])
        self.assertEqual([event["chosen"] for event in full.trace.events_of("decision")], [2, 1])
        self.assertLess(np.linalg.norm(full.state.position - optimal), 0.5)
        self.assertGreater(np.linalg.norm(ogd.state.position - optimal), 0.5)

    def test_second_step_tilts_to_keep_the_first_choice_in_view(self):
        """At the midpoint the chosen marker sits below the image at the scoring pitch"""
        candidates = CandidateSet([CandidateCircle((1.4, 0.0), marker=1), CandidateCircle((2.0, -0.7), marker=2)])
        chosen, runner = sequential_decision(self.scene, RobotState(0.6, 0.0, 0.0), candidates, OracleScorer(),
                                             self.query, (2.0, 0.0))
        np.testing.assert_allclose(chosen, [1.4, 0.0])
        first, second = runner.trace.events_of("decision")
        self.assertEqual((first["chosen"], first["pitch"]), (1, -30.0))
        self.assertEqual((second["chosen"], second["pitch"]), (1, -60.0))
        self.assertTrue(second["overlay"]["markers"][0]["visible"])

    def test_marker_out_of_view_at_the_pitch_limit_is_kept(self):
        candidates = CandidateSet([CandidateCircle((0.5, 0.0), marker=1), CandidateCircle((1.4, 0.0), marker=2)])
        runner = EpisodeRunner(self.scene, self.query, OracleScorer(), state=RobotState(1.0, 0.0, 0.0))
        self.assertEqual(runner.decide(candidates, step=2, keep_in_view=1), 1)
        event = runner.trace.last("decision")
        self.assertTrue(event["retained"])
        self.assertEqual(event["pitch"], -60.0)
        self.assertEqual(runner.state.pitch_deg, 0.0)

    def test_empty_candidates(self):
        with self.assertRaises(ValueError):
            sequential_decision(self.scene, RobotState(0.0, 0.0, 0.0), CandidateSet([]), OracleScorer(),
                                self.query, (2.0, 0.0))


class TestEpisodes(unittest.TestCase):
    """Whole episodes on a generated open room"""

    @classmethod
    def setUpClass(cls):
        cls.scene = generate_scene("open-room", 0)
        cls.query = TaskQuery.resolve(cls.scene.task.text, cls.scene)
        cls.full = run_episode(cls.scene, cls.query, OracleScorer())

    def test_trace_starts_with_setup_and_identification(self):
        stages = [event["stage"] for event in self.full.trace.events]
        self.assertEqual(stages[:2], ["setup", "identify"])
        if self.full.failure_reason is None:
            self.assertEqual(stages[-1], "final")
            self.assertEqual(self.full.trace.actions[-1], Action.STOP.value)
            self.assertIn("candidates", stages)

    def test_replaying_actions_reaches_final_pose(self):
        trace = EpisodeTrace.from_dict(json.loads(self.full.trace.to_json()))
        state = replay_actions(self.scene, trace)
        self.assertAlmostEqual(state.x, self.full.final_pose[0], places=9)
        self.assertAlmostEqual(state.y, self.full.final_pose[1], places=9)
        self.assertAlmostEqual(state.heading_deg, self.full.final_pose[2], places=9)

    def test_row_matches_result(self):
        row = self.full.row()
        self.assertEqual(row["mode"], "full")
        self.assertEqual(row["success"], int(self.full.dtg < 0.5))
        self.assertGreaterEqual(self.full.traveled, 0.0)

    def test_direct_mode_skips_candidates(self):
        result = run_ablation(self.scene, self.query, OracleScorer(), mode="dnt")
        stages = [event["stage"] for event in result.trace.events]
        self.assertEqual(result.mode, "dnt")
        self.assertNotIn("candidates", stages)
        self.assertNotIn("sweep", stages)

    def test_scorer_failure_is_recorded(self):
        scorer = Mock(spec=ScorerInterface)
        scorer.name = "broken"
        scorer.select_image.side_effect = Transport("scorer offline")
        result = run_episode(self.scene, self.query, scorer)
        self.assertEqual(result.failure_reason, "Transport")
        self.assertEqual(result.traveled, 0.0)
        self.assertEqual(result.trace.last("failure")["message"], "scorer offline")

    def test_same_seed_same_trace(self):
        again = run_episode(self.scene, self.query, OracleScorer())
        self.assertEqual(again.trace.to_json(), self.full.trace.to_json())
        self.assertEqual(again.row(), self.full.row())

    def test_footprint_comes_from_every_view(self):
        views = self.full.trace.last("views")
        candidates = self.full.trace.last("candidates")
        if views is None or candidates is None:
            self.skipTest(f"episode stopped early: {self.full.failure_reason}")
        self.assertGreater(len(views["images"]), 1)
        target = self.scene.primitive(scene_target_id(self.scene))
        offset = np.asarray(candidates["object_center"]) - np.asarray(target.center)
        self.assertLess(float(np.linalg.norm(offset)), 0.15)

    def test_absent_object(self):
        result = run_episode(self.scene, TaskQuery("play the piano", "piano"), OracleScorer())
        optimal = optimal_operation_pose(self.scene, scene_target_id(self.scene))
        self.assertEqual(result.failure_reason, "ObjectNotFound")
        self.assertFalse(result.success)
        self.assertEqual(result.traveled, 0.0)
        self.assertAlmostEqual(result.dtg, float(np.linalg.norm(self.scene.start.position - optimal.position)))

    def test_benchmark_over_every_mode(self):
        report = run_benchmark([(self.scene, self.query)], OracleScorer(), modes=list(Mode), jobs=2)
        self.assertEqual([r.mode for r in report.results], [m.value for m in Mode])
        for result in report.results:
            if result.failure_reason is not None:
                self.assertTrue(hasattr(errors, result.failure_reason), result.failure_reason)
        self.assertEqual(report.results[0].trace.to_json(), self.full.trace.to_json())


class TestObjectWithoutDirection(unittest.TestCase):
    """A plant stand is operated from anywhere around it"""

    def setUp(self):
        self.scene = plant_scene()
        self.query = TaskQuery("water the plant", "plant stand")

    def test_scored_against_the_nearest_free_pose(self):
        result = run_ablation(self.scene, self.query, OracleScorer(), mode=Mode.DNT)
        setup = result.trace.last("setup")
        self.assertEqual(setup["reference"], "nearest-free")
        reference = np.array([setup["optimal_pose"]["x"], setup["optimal_pose"]["y"]])
        gap = float(np.linalg.norm(reference - [1.5, 0.5]))
        self.assertGreater(gap, 0.3 + 0.2)
        self.assertLess(gap, 0.3 + 0.2 + 0.2)
        self.assertAlmostEqual(result.dtg, float(np.linalg.norm(np.asarray(result.final_pose[:2]) - reference)))

    def test_benchmark_rows_instead_of_errors(self):
        scorer = Mock(spec=ScorerInterface)
        scorer.name = "broken"
        scorer.serialized = False
        scorer.select_image.side_effect = Transport("scorer offline")
        report = run_benchmark([(self.scene, self.query)], scorer, modes=list(Mode))
        self.assertEqual(len(report.results), len(Mode))
        self.assertEqual({result.failure_reason for result in report.results}, {"Transport"})
        for result in report.results:
            self.assertEqual(result.trace.last("setup")["reference"], "nearest-free")

    def test_directed_objects_keep_their_operation_pose(self):
        runner = EpisodeRunner(fridge_scene(), TaskQuery("open the refrigerator", "refrigerator"), OracleScorer())
        pose, reference = runner.reference_pose(10)
        self.assertEqual(reference, "operation-direction")
        np.testing.assert_allclose(pose.position, optimal_operation_pose(fridge_scene(), 10).position)


if __name__ == "__main__":
    unittest.main()

"""
Unit tests for scorer decisions, the scorer-driven stages and the local scorers
"""

import json
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.candidates import CandidateCircle, CandidateSet
from core.errors import Malformed, NoVisibleCandidates, ObjectNotFound, SegmentNotFound
from core.geometry import OBJECT_LABEL
from core.scorer_factory import ScorerFactory
from core.scorer_interface import ScorerInterface
from core.scoring import (MarkerOverlay, MarkerPlacement, ScorerDecision, ScoringContext, TaskQuery,
                          identify_target_scene, locate_object_in_frame, object_views, project_markers,
                          score_candidates)
from core.taskgrid import object_footprint
from scorers.oracle_scorer import OracleScorer
from scorers.recording_scorer import RecordingScorer
from scorers.remote_scorer import RemoteScorer
from scorers.scripted_scorer import ScriptedScorer, decision_record, load_decision_log
from simworld.camera import Intrinsics, scene_image_set
from simworld.scene import Pose2D, Primitive, SceneSpec, TaskSpec


def fridge_scene() -> SceneSpec:
    fridge = Primitive(10, (2.0, 0.0), (0.6, 0.6, 1.5), label="refrigerator", operation_direction=(-1.0, 0.0))
    chair = Primitive(11, (0.0, 2.0), (0.4, 0.4, 0.8), label="chair")
    return SceneSpec("fridge", (-3.0, -3.0, 3.0, 3.0), (fridge, chair), Pose2D(0.0, 0.0),
                     TaskSpec("open the refrigerator", "refrigerator"), {"target_id": 10})


def two_frames(scene: SceneSpec):
    return scene_image_set(scene, [(0.0, 0.0, 0.0, -15.0), (0.0, 0.0, 180.0, -15.0)], Intrinsics.from_fov(64, 48))


def visible_overlay(*markers) -> MarkerOverlay:
    return MarkerOverlay(1, tuple(MarkerPlacement(m, (10.0, 10.0), 1.0, True) for m in markers))


class TestTaskQuery(unittest.TestCase):

    def test_resolves_longest_scene_label(self):
        scene = SceneSpec("s", (-1, -1, 1, 1), (
            Primitive(10, (0.0, 0.0), (0.5, 0.5, 1.0), label="machine"),
            Primitive(11, (0.5, 0.5), (0.2, 0.2, 1.0), label="washing machine"),
        ), Pose2D(0.0, 0.0))
        self.assertEqual(TaskQuery.resolve("Load the washing machine", scene).label, "washing machine")

    def test_unmatched_text_becomes_label(self):
        self.assertEqual(TaskQuery.resolve("open the fridge", fridge_scene()).label, "open the fridge")

    def test_rejects_empty_text(self):
        with self.assertRaises(ValueError):
            TaskQuery(" ", "x")


class TestScorerDecision(unittest.TestCase):

    def test_ties_pick_first_option(self):
        decision = ScorerDecision((4, 5, 6), (0.5, 0.9, 0.9))
        self.assertEqual(decision.chosen, 5)
        self.assertFalse(decision.abstained)

    def test_all_zero_is_abstention(self):
        self.assertTrue(ScorerDecision((1, 2), (0.0, 0.0)).abstained)

    def test_length_mismatch(self):
        with self.assertRaises(ValueError):
            ScorerDecision((1, 2), (0.1,))
        with self.assertRaises(ValueError):
            ScorerDecision((), ())

    def test_dict_round_trip(self):
        decision = ScorerDecision((1, 2), (0.2, 0.7), "why not")
        self.assertEqual(ScorerDecision.from_dict(decision.to_dict()), decision)


class TestScoringStages(unittest.TestCase):

    def setUp(self):
        self.scene = fridge_scene()
        self.context = ScoringContext(TaskQuery("open the refrigerator", "refrigerator"), self.scene, seed=0)
        self.frames = two_frames(self.scene)
        self.oracle = OracleScorer()

    def test_identify_picks_frame_showing_object(self):
        index, goal, decision = identify_target_scene(self.frames, self.context, self.oracle)
        self.assertEqual(index, 1)
        self.assertEqual(list(goal), [0.0, 0.0])
        self.assertEqual(decision.scores[1], 0.0)

    def test_identify_abstains_for_missing_object(self):
        context = ScoringContext(TaskQuery("turn on the television", "television"), self.scene)
        with self.assertRaises(ObjectNotFound):
            identify_target_scene(self.frames, context, self.oracle)
        with self.assertRaises(ValueError):
            identify_target_scene([], context, self.oracle)

    def test_locate_object(self):
        cloud, segment, _ = locate_object_in_frame(self.frames[0], self.context, self.oracle)
        self.assertEqual(segment, 10)
        self.assertEqual(len(cloud), self.frames[0].pixel_count([10]))
        self.assertTrue(all(label == OBJECT_LABEL for label in cloud.labels))

    def test_locate_object_missing_segment(self):
        with self.assertRaises(SegmentNotFound):
            locate_object_in_frame(self.frames[1], self.context, self.oracle)

    def test_object_views_cover_the_whole_footprint(self):
        poses = [(0.8, 0.0, 0.0, -15.0), (2.0, -1.5, 90.0, -15.0), (0.0, -1.0, 180.0, -15.0)]
        frames = scene_image_set(self.scene, poses, Intrinsics.from_fov(160, 120))
        front, _ = object_views(frames[:1], 10)
        cloud, seen = object_views(frames, 10)
        self.assertEqual(seen, [1, 2])
        self.assertTrue(all(label == OBJECT_LABEL for label in cloud.labels))

        single = object_footprint(front.points[:, :2], 0.01)
        combined = object_footprint(cloud.points[:, :2], 0.01)
        self.assertGreater(np.linalg.norm(np.asarray(single.center) - [2.0, 0.0]), 0.2)
        self.assertLess(np.linalg.norm(np.asarray(combined.center) - [2.0, 0.0]), 0.05)

    def test_object_views_without_the_segment(self):
        cloud, seen = object_views(self.frames[1:], 10)
        self.assertEqual(len(cloud), 0)
        self.assertEqual(seen, [])

    def test_marker_visibility(self):
        candidates = CandidateSet([
            CandidateCircle((1.5, 0.0), marker=1),
            CandidateCircle((-1.0, 0.0), marker=2),
            CandidateCircle((3.0, 0.0), marker=3),
        ])
        overlay = project_markers(self.frames[0], candidates, self.scene)
        self.assertEqual([m.marker for m in overlay.visible], [1])
        self.assertLess(overlay.placement(2).depth, 0.0)

    def test_no_visible_markers(self):
        overlay = MarkerOverlay(1, (MarkerPlacement(1, (0.0, 0.0), -1.0, False),))
        with self.assertRaises(NoVisibleCandidates):
            score_candidates(self.frames[0], overlay, CandidateSet([CandidateCircle((0, 0), marker=1)]),
                             self.context, self.oracle)

    def test_oracle_prefers_operating_side(self):
        candidates = CandidateSet([CandidateCircle((2.5, 0.0), marker=1), CandidateCircle((1.5, 0.0), marker=2)])
        decision = score_candidates(self.frames[0], visible_overlay(1, 2), candidates, self.context, self.oracle)
        self.assertEqual(decision.chosen, 2)
        self.assertAlmostEqual(decision.scores[1], 1.0)

    def test_oracle_penalizes_blocked_line_of_sight(self):
        wall = Primitive(12, (1.5, 0.0), (0.1, 1.0, 1.0))
        scene = SceneSpec("walled", self.scene.floor, self.scene.primitives + (wall,), self.scene.start,
                          self.scene.task, self.scene.metadata)
        context = ScoringContext(self.context.query, scene)
        candidates = CandidateSet([CandidateCircle((1.0, 0.0), marker=1), CandidateCircle((2.0, 0.6), marker=2)])
        decision = score_candidates(self.frames[0], visible_overlay(1, 2), candidates, context, self.oracle)
        self.assertEqual(decision.chosen, 2)
        self.assertLess(decision.scores[0], 0.0)


class TestLocalScorers(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.scene = fridge_scene()
        self.context = ScoringContext(TaskQuery("open the refrigerator", "refrigerator"), self.scene, seed=3)
        self.frames = two_frames(self.scene)

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_scripted_replays_in_order(self):
        records = [json.loads(decision_record("select_image", ScorerDecision((1, 2), (0.0, 1.0)), 0))]
        scorer = ScriptedScorer(records)
        self.assertEqual(scorer.select_image(self.context, self.frames).chosen, 2)
        self.assertTrue(scorer.serialized)
        with self.assertRaises(Malformed):
            scorer.select_image(self.context, self.frames)

    def test_scripted_rejects_mismatched_call(self):
        records = [json.loads(decision_record("select_segment", ScorerDecision((10,), (1.0,)), 0))]
        with self.assertRaises(Malformed):
            ScriptedScorer(records).select_image(self.context, self.frames)

    def test_recorded_log_replays_identically(self):
        path = os.path.join(self.temp_dir, "logs", "decisions.jsonl")
        recorder = RecordingScorer(OracleScorer(), path)
        recorded = recorder.select_image(self.context, self.frames)
        segment = recorder.select_segment(self.context, self.frames[0], [10, 11])

        replay = ScriptedScorer.from_config({"path": path})
        self.assertEqual(replay.select_image(self.context, self.frames), recorded)
        self.assertEqual(replay.select_segment(self.context, self.frames[0], [10, 11]), segment)
        self.assertEqual(load_decision_log(path)[0]["seed"], 3)

    def test_malformed_log_line(self):
        path = os.path.join(self.temp_dir, "bad.jsonl")
        with open(path, "w", encoding="utf-8") as file:
            file.write('{"stage": "select_image", "options": [1]}\n')
        with self.assertRaises(Malformed):
            load_decision_log(path)


class TestScorerInterface(unittest.TestCase):

    def test_every_stage_must_be_implemented(self):
        class ImageOnly(ScorerInterface):
            def select_image(self, context, frames):
                return ScorerDecision((1,), (1.0,))

        with self.assertRaises(TypeError):
            ScorerInterface()
        with self.assertRaises(TypeError):
            ImageOnly()
        self.assertFalse(OracleScorer().serialized)


class TestScorerFactory(unittest.TestCase):

    def test_parse_spec(self):
        self.assertEqual(ScorerFactory.parse_spec("oracle"), {"kind": "oracle"})
        self.assertEqual(ScorerFactory.parse_spec("remote:http://host:1")["endpoint"], "http://host:1")
        recording = ScorerFactory.parse_spec("recording:out.jsonl")
        self.assertEqual(recording["inner"], {"kind": "oracle"})

    def test_create_oracle(self):
        self.assertIsInstance(ScorerFactory.create_scorer({"kind": "oracle"}), OracleScorer)

    def test_unsupported_kind(self):
        with self.assertRaises(ValueError) as context:
            ScorerFactory.create_scorer({"kind": "magic"})
        self.assertIn("Supported kinds are", str(context.exception))

    def test_scripted_needs_path(self):
        with self.assertRaises(ValueError):
            ScorerFactory.create_scorer({"kind": "scripted"})

    def test_recording_wraps_oracle(self):
        temp_dir = tempfile.mkdtemp()
        try:
            spec = ScorerFactory.parse_spec(f"recording:{os.path.join(temp_dir, 'log.jsonl')}")
            scorer = ScorerFactory.create_scorer(spec)
            self.assertIsInstance(scorer, RecordingScorer)
            self.assertIsInstance(scorer.inner, OracleScorer)
        finally:
            shutil.rmtree(temp_dir)

    @patch.dict(os.environ, {"ORIENTNAV_SCORER_URL": "http://scorer.local:9000/"})
    def test_remote_endpoint_from_environment(self):
        scorer = ScorerFactory.create_scorer({"kind": "remote"})
        self.assertIsInstance(scorer, RemoteScorer)
        self.assertEqual(scorer.client.endpoint, "http://scorer.local:9000")


if __name__ == "__main__":
    unittest.main()

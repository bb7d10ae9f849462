"""
Tests for EpisodeService
Log capture, response structure and error containment
"""

import logging
import os
import shutil
import sys
import tempfile
import threading
import unittest
from unittest.mock import Mock, patch

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.config_loader import LoggingConfig, Mode, PipelineConfig
from core.episode_service import EpisodeService, LogCapture
from core.metrics import EpisodeResult
from simworld.templates import generate_scene


def fake_episode(scene, query, scorer, cfg, sim):
    logging.getLogger("core.pipeline").info(f"running {query.label}")
    return EpisodeResult(scene.name, query.text, cfg.mode.value, cfg.seed, True, 2.0, 2.5, 0.1,
                         (0.0, 0.0, 0.0), 3.0)


class TestLogCapture(unittest.TestCase):

    def test_captures_records_and_manual_entries(self):
        with LogCapture() as capture:
            logging.getLogger("orientnav.test").info("planned a path")
            capture.add_log("manual entry")
        logs = capture.get_logs()
        self.assertEqual(len(logs), 2)
        self.assertIn("planned a path", logs[0])
        self.assertIn("manual entry", logs[1])

    def test_ignores_other_threads(self):
        with LogCapture() as capture:
            worker = threading.Thread(target=lambda: logging.getLogger("orientnav.test").info("elsewhere"))
            worker.start()
            worker.join()
        self.assertEqual(capture.get_logs(), [])

    def test_detaches_on_exit(self):
        root = logging.getLogger()
        level = root.level
        with LogCapture() as capture:
            self.assertIn(capture, root.handlers)
        self.assertNotIn(capture, root.handlers)
        self.assertEqual(root.level, level)


class TestEpisodeService(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.scorer = Mock()
        self.scorer.name = "mock"
        self.service = EpisodeService(self.scorer, PipelineConfig(seed=2),
                                      logging_config=LoggingConfig(directory=self.temp_dir))
        self.scene = generate_scene("open-room", 0)

    def tearDown(self):
        self.service.close()
        shutil.rmtree(self.temp_dir)

    @patch("core.episode_service.run_episode", side_effect=fake_episode)
    def test_successful_query(self, episode):
        response = self.service.run_query(self.scene, self.scene.task.text, mode="ogd")
        self.assertEqual(set(response), {"result", "logs", "metadata"})
        self.assertEqual(response["metadata"]["status"], "ok")
        self.assertEqual(response["metadata"]["mode"], "ogd")
        self.assertEqual(response["metadata"]["seed"], 2)
        self.assertEqual(response["metadata"]["scorer"], "mock")
        self.assertEqual(response["result"].mode, "ogd")
        self.assertTrue(any("Resolved" in log for log in response["logs"]))
        self.assertTrue(any("running" in log for log in response["logs"]))
        self.assertEqual(episode.call_args[0][3].mode, Mode.OGD)

    @patch("core.episode_service.run_episode", side_effect=fake_episode)
    def test_defaults_come_from_pipeline(self, episode):
        response = self.service.run_query(self.scene, "open it", seed=9)
        self.assertEqual(response["metadata"]["mode"], "full")
        self.assertEqual(response["result"].seed, 9)

    @patch("core.episode_service.run_episode", side_effect=RuntimeError("renderer exploded"))
    def test_errors_are_returned(self, episode):
        response = self.service.run_query(self.scene, "open it")
        self.assertIsNone(response["result"])
        self.assertEqual(response["metadata"]["status"], "error")
        self.assertEqual(response["metadata"]["error"], "renderer exploded")
        self.assertIn("ERROR: renderer exploded", response["logs"][-1])

    def test_unknown_mode_is_an_error_response(self):
        response = self.service.run_query(self.scene, "open it", mode="fast")
        self.assertEqual(response["metadata"]["status"], "error")
        self.assertIn("Supported modes are", response["metadata"]["error"])

    @patch("core.episode_service.run_episode", side_effect=fake_episode)
    def test_daily_log_file(self, episode):
        self.service.run_query(self.scene, "open it")
        for handler in self.service.file_logger.handlers:
            handler.flush()
        self.assertTrue(os.path.basename(self.service.log_filename).startswith("orientnav_"))
        with open(self.service.log_filename, "r", encoding="utf-8") as file:
            content = file.read()
        self.assertIn("Episode completed", content)


if __name__ == "__main__":
    unittest.main()

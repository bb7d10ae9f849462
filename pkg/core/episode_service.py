"""
Episode Service
Runs single episodes behind one call, with daily log files and per-episode log capture
"""

import logging
import os
import threading
import time
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

from simworld.scene import SceneSpec

from .config_loader import LoggingConfig, Mode, PipelineConfig, SimulationConfig
from .pipeline import run_episode
from .scorer_interface import ScorerInterface
from .scoring import TaskQuery

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class LogCapture(logging.Handler):
    """Collects the log records emitted by the calling thread while active"""

    def __init__(self, show_live: bool = False, level: int = logging.INFO):
        super().__init__(level)
        self.logs: List[str] = []
        self.show_live = show_live
        self.setFormatter(logging.Formatter('%(levelname)s - %(name)s - %(message)s'))
        self._thread = None
        self._root_level = None

    def __enter__(self):
        self._thread = threading.get_ident()
        root = logging.getLogger()
        self._root_level = root.level
        if root.level == logging.NOTSET or root.level > self.level:
            root.setLevel(self.level)
        root.addHandler(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        root = logging.getLogger()
        root.removeHandler(self)
        root.setLevel(self._root_level)

    def emit(self, record: logging.LogRecord) -> None:
        if record.thread != self._thread:
            return
        self.logs.append(self.format(record))

    def add_log(self, message: str):
        """Add a log message manually"""
        self.logs.append(f"{datetime.now().isoformat()}: {message}")
        if self.show_live:
            print(f"🔄 {message}")

    def get_logs(self) -> List[str]:
        return self.logs.copy()


class EpisodeService:
    """Runs episodes with a fixed scorer and settings; never raises from run_query"""

    def __init__(self, scorer: ScorerInterface, pipeline: PipelineConfig = PipelineConfig(),
                 simulation: SimulationConfig = SimulationConfig(),
                 logging_config: LoggingConfig = LoggingConfig()):
        self.scorer = scorer
        self.pipeline = pipeline
        self.simulation = simulation
        self.logging_config = logging_config
        self._setup_logging()

    def _setup_logging(self):
        """Setup daily log files"""
        today = datetime.now().strftime("%Y%m%d")
        os.makedirs(self.logging_config.directory, exist_ok=True)
        log_filename = os.path.join(self.logging_config.directory, f"orientnav_{today}.log")

        self.file_logger = logging.getLogger("episode_service")
        self.file_logger.setLevel(getattr(logging, self.logging_config.level.upper(), logging.INFO))
        self.file_logger.propagate = False

        # Remove existing handlers to avoid duplicates
        for handler in self.file_logger.handlers[:]:
            self.file_logger.removeHandler(handler)
            handler.close()

        file_handler = logging.FileHandler(log_filename, encoding='utf-8')
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        self.file_logger.addHandler(file_handler)
        self.log_filename = log_filename

    def close(self):
        for handler in self.file_logger.handlers[:]:
            self.file_logger.removeHandler(handler)
            handler.close()

    def run_query(self, scene: SceneSpec, query_text: str, mode: Union[str, Mode, None] = None,
                  seed: Optional[int] = None, show_live_output: bool = False) -> Dict[str, Any]:
        """
        Run one episode and return a structured response

        Args:
            scene: Scene to run in
            query_text: Task text, e.g. "open the refrigerator"
            mode: Pipeline mode (default: the configured one)
            seed: Episode seed (default: the configured one)
            show_live_output: Echo progress to the console (for CLI)

        Returns:
            Dict with 'result', 'logs', 'metadata'
        """
        start_time = time.time()
        log_capture = LogCapture(show_live=show_live_output)
        mode_name = str(mode.value if isinstance(mode, Mode) else mode or self.pipeline.mode.value)
        seed = self.pipeline.seed if seed is None else seed
        self.file_logger.info(f"Episode - Scene: {scene.name}, Mode: {mode_name}, Seed: {seed}, Query: {query_text[:100]}")

        try:
            with log_capture:
                cfg = self.pipeline.model_copy(update={"mode": Mode.parse(mode_name), "seed": seed})
                query = TaskQuery.resolve(query_text, scene)
                log_capture.add_log(f"Resolved '{query.text}' to label '{query.label}'")
                result = run_episode(scene, query, self.scorer, cfg, self.simulation)
                log_capture.add_log(f"Episode finished: DTG {result.dtg:.3f} m, success {result.success}")

            execution_time = time.time() - start_time
            self.file_logger.info(f"Episode completed - Scene: {scene.name}, Time: {execution_time:.2f}s, "
                                  f"DTG: {result.dtg:.3f}, Failure: {result.failure_reason or '-'}")
            return {
                "result": result,
                "logs": log_capture.get_logs(),
                "metadata": {
                    "scene": scene.name,
                    "mode": mode_name,
                    "seed": seed,
                    "scorer": self.scorer.name,
                    "execution_time": round(execution_time, 2),
                    "timestamp": datetime.now().isoformat(),
                    "status": "ok",
                },
            }

        except Exception as e:
            execution_time = time.time() - start_time
            error_msg = str(e)
            self.file_logger.error(f"Episode failed - Scene: {scene.name}, Time: {execution_time:.2f}s, Error: {error_msg}")
            log_capture.add_log(f"ERROR: {error_msg}")
            return {
                "result": None,
                "logs": log_capture.get_logs(),
                "metadata": {
                    "scene": scene.name,
                    "mode": mode_name,
                    "seed": seed,
                    "scorer": self.scorer.name,
                    "execution_time": round(execution_time, 2),
                    "timestamp": datetime.now().isoformat(),
                    "error": error_msg,
                    "status": "error",
                },
            }

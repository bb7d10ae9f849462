"""
Config Loader - module responsible for loading configuration from YAML file
and validating its sections into typed settings
"""

import os
from enum import Enum
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Mode(str, Enum):
    FULL = "full"
    DNT = "dnt"
    OGD = "ogd"
    NORTS = "norts"

    @classmethod
    def parse(cls, value) -> "Mode":
        """Mode from a member or a case-insensitive name"""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"Unsupported mode: {value}. Supported modes are: {', '.join(m.value for m in cls)}")


class PipelineConfig(BaseModel):
    """Settings of one episode"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    robot_radius: float = Field(0.2, gt=0, description="Robot radius r_r (m)")
    grid_resolution: float = Field(0.01, gt=0, description="Task grid cell size (m)")
    alpha0_deg: float = Field(30.0, gt=0, lt=90, description="Sweep yaw offset")
    alpha1_deg: float = Field(60.0, gt=0, lt=90, description="Sweep downward tilt")
    epsilon: float = Field(0.01, gt=0, description="Candidate repositioning tolerance (m)")
    seed: int = Field(0, ge=0)
    mode: Mode = Mode.FULL
    success_threshold: float = Field(0.5, gt=0, description="DTG below which an episode succeeds (m)")
    ransac_iterations: int = Field(500, gt=0)
    inlier_tol: float = Field(0.01, gt=0, description="Plane inlier distance (m)")
    max_tilt_deg: Optional[float] = Field(30.0, gt=0, le=90, description="Allowed ground normal tilt")
    obstacle_min_height: float = Field(0.05, ge=0, description="Height above ground from which points are obstacles")
    decision_pitch_deg: float = Field(-30.0, ge=-80, le=0, description="Camera pitch when scoring candidates")
    goal_search_factor: float = Field(3.0, gt=0, description="Blocked-goal fallback radius in robot radii")

    @field_validator("mode", mode="before")
    @classmethod
    def _parse_mode(cls, value):
        return Mode.parse(value)


class SimulationConfig(BaseModel):
    """Settings of the simulated robot and camera"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    map_resolution: float = Field(0.05, gt=0)
    image_width: int = Field(160, gt=0)
    image_height: int = Field(120, gt=0)
    hfov_deg: float = Field(90.0, gt=0, lt=180)
    camera_height: float = Field(1.5, gt=0)
    forward_step: float = Field(0.1, gt=0)
    turn_deg: float = Field(1.0, gt=0)
    look_deg: float = Field(30.0, gt=0)
    exploration_spacing: float = Field(1.5, gt=0)
    exploration_headings: int = Field(8, gt=0)
    exploration_pitch_deg: float = Field(-15.0, ge=-80, le=80)


class ScorerConfig(BaseModel):
    """Which scorer decides; kind-specific keys pass through"""
    model_config = ConfigDict(extra="allow")

    kind: str = "oracle"
    endpoint: Optional[str] = None
    path: Optional[str] = None
    timeout: float = Field(30.0, gt=0)
    retries: int = Field(2, ge=0)
    behavior: Optional[str] = None

    def to_factory_config(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)


class GateConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_sr: Optional[float] = Field(None, ge=0, le=1)
    max_mean_dtg: Optional[float] = Field(None, ge=0)
    spl_le_sr: bool = True


class BenchConfig(BaseModel):
    """Benchmark suite, repetitions and acceptance gates"""
    model_config = ConfigDict(extra="forbid")

    suite: str = "oracle-10"
    suite_seed: int = Field(0, ge=0)
    repeats: int = Field(1, gt=0)
    seeds: Optional[List[int]] = None
    jobs: int = Field(1, gt=0)
    output_dir: str = "runs"
    gates: GateConfig = Field(default_factory=GateConfig)

    def episode_seeds(self, base_seed: int = 0) -> List[int]:
        if self.seeds:
            return list(self.seeds)
        return [base_seed + k for k in range(self.repeats)]


class LoggingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "logs"
    level: str = "INFO"


class ConfigLoader:
    """Class for loading and validating configuration from YAML file."""

    @staticmethod
    def load_config(config_path: str = "config.yaml") -> Dict[str, Any]:
        """
        Load configuration from YAML file (JSON files load too).

        Args:
            config_path: Path to YAML configuration file

        Returns:
            Dictionary with configuration

        Raises:
            FileNotFoundError: If configuration file does not exist
            yaml.YAMLError: If YAML file has invalid format
        """
        if not os.path.exists(config_path):
            raise FileNotFoundError(f"Configuration file {config_path} does not exist")

        with open(config_path, 'r', encoding='utf-8') as file:
            try:
                config = yaml.safe_load(file)
                return config or {}
            except yaml.YAMLError as e:
                raise yaml.YAMLError(f"Error parsing YAML file: {e}")

    @staticmethod
    def _section(config: Dict[str, Any], name: str) -> Dict[str, Any]:
        if name not in config:
            raise KeyError(f"Missing '{name}' section in configuration")
        return config[name] or {}

    @staticmethod
    def get_pipeline_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Raises:
            KeyError: If 'pipeline' section does not exist in configuration
        """
        return ConfigLoader._section(config, "pipeline")

    @staticmethod
    def get_simulation_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Raises:
            KeyError: If 'simulation' section does not exist in configuration
        """
        return ConfigLoader._section(config, "simulation")

    @staticmethod
    def get_scorer_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Raises:
            KeyError: If 'scorer' section does not exist in configuration
        """
        return ConfigLoader._section(config, "scorer")

    @staticmethod
    def get_bench_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Raises:
            KeyError: If 'bench' section does not exist in configuration
        """
        return ConfigLoader._section(config, "bench")

    @staticmethod
    def get_logging_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Raises:
            KeyError: If 'logging' section does not exist in configuration
        """
        return ConfigLoader._section(config, "logging")

    @staticmethod
    def load_settings(config: Dict[str, Any]) -> Dict[str, BaseModel]:
        """
        Validate every present section; absent sections get defaults.

        Raises:
            pydantic.ValidationError: Naming the offending field
        """
        return {
            "pipeline": PipelineConfig(**config.get("pipeline", {}) or {}),
            "simulation": SimulationConfig(**config.get("simulation", {}) or {}),
            "scorer": ScorerConfig(**config.get("scorer", {}) or {}),
            "bench": BenchConfig(**config.get("bench", {}) or {}),
            "logging": LoggingConfig(**config.get("logging", {}) or {}),
        }

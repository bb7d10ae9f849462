"""
Episode metrics - distance to goal, success rate and success weighted by
path length
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .errors import EmptyResults

ROW_FIELDS = [
    "scene", "query", "mode", "seed", "success", "shortest_path", "traveled", "dtg",
    "final_x", "final_y", "final_heading_deg", "heading_error_deg", "failure_reason",
]


@dataclass
class EpisodeResult:
    scene: str
    query: str
    mode: str
    seed: int
    success: bool
    shortest_path: float
    traveled: float
    dtg: float
    final_pose: tuple
    heading_error_deg: float
    failure_reason: Optional[str] = None
    trace: Optional[Any] = None

    def __post_init__(self):
        if self.traveled < 0:
            raise ValueError("Traveled distance must be non-negative")
        if self.shortest_path < 0:
            raise ValueError("Shortest path length must be non-negative")

    def row(self) -> Dict[str, Any]:
        x, y, heading = self.final_pose
        return {
            "scene": self.scene,
            "query": self.query,
            "mode": self.mode,
            "seed": self.seed,
            "success": int(self.success),
            "shortest_path": float(self.shortest_path),
            "traveled": float(self.traveled),
            "dtg": float(self.dtg),
            "final_x": float(x),
            "final_y": float(y),
            "final_heading_deg": float(heading),
            "heading_error_deg": float(self.heading_error_deg),
            "failure_reason": self.failure_reason or "",
        }


def compute_dtg(final_position, optimal_position) -> float:
    """Euclidean distance between 2D positions; orientation is not part of it"""
    final = np.asarray(final_position, dtype=float)[:2]
    optimal = np.asarray(optimal_position, dtype=float)[:2]
    return float(np.linalg.norm(final - optimal))


def is_success(dtg: float, threshold: float = 0.5) -> bool:
    return dtg < threshold


def path_efficiency(result: EpisodeResult) -> float:
    """Shortest over the longer of shortest and traveled for a success, 0 for a failure"""
    if not result.success:
        return 0.0
    longest = max(result.shortest_path, result.traveled)
    if longest == 0.0:
        return 1.0
    return result.shortest_path / longest


def compute_spl(results: Sequence[EpisodeResult]) -> float:
    """
    Raises:
        EmptyResults: If there are no results
    """
    if not results:
        raise EmptyResults("SPL of an empty result list")
    return math.fsum(path_efficiency(r) for r in results) / len(results)


def compute_sr(results: Sequence[EpisodeResult]) -> float:
    """
    Raises:
        EmptyResults: If there are no results
    """
    if not results:
        raise EmptyResults("SR of an empty result list")
    return math.fsum(1.0 for r in results if r.success) / len(results)


def mean_dtg(results: Sequence[EpisodeResult]) -> float:
    if not results:
        raise EmptyResults("Mean DTG of an empty result list")
    return math.fsum(r.dtg for r in results) / len(results)


def mean_heading_error(results: Sequence[EpisodeResult]) -> float:
    if not results:
        raise EmptyResults("Mean heading error of an empty result list")
    return math.fsum(r.heading_error_deg for r in results) / len(results)

"""
Static renderings of scenes and episode traces: occupancy map (PGM),
task grid (PPM) and the candidate overlay (SVG).
"""

import logging
from typing import List, Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from simworld.occupancy import OccupancyMap
from simworld.scene import SceneSpec

from .candidates import CandidateSet
from .errors import MalformedTrace
from .pipeline import EpisodeTrace, grid_from_snapshot
from .taskgrid import CellState, TaskGrid

logger = logging.getLogger(__name__)

GRID_PALETTE = {
    CellState.UNSEEN: (0, 0, 0),
    CellState.GROUND: (190, 190, 190),
    CellState.OBSTACLE: (150, 40, 40),
    CellState.QUERIED_OBJECT: (40, 90, 200),
}


def write_occupancy_pgm(occupancy: OccupancyMap, path: str) -> None:
    """Free cells white, occupied black; image rows run top-down (+y up)"""
    pixels = np.where(occupancy.occupied, 0, 255).astype(np.uint8)
    Image.fromarray(np.flipud(pixels)).save(path, format="PPM")


def write_task_grid_ppm(grid: TaskGrid, path: str) -> None:
    rgb = np.zeros(grid.cells.shape + (3,), dtype=np.uint8)
    for state, color in GRID_PALETTE.items():
        rgb[grid.cells == state] = color
    Image.fromarray(np.flipud(rgb)).save(path, format="PPM")


def trace_path(trace: EpisodeTrace) -> np.ndarray:
    """Robot positions along the episode: start, then every followed path up to where it stopped"""
    setup = trace.last("setup")
    points = [setup["start"][:2]] if setup else []
    for event in trace.events_of("navigate"):
        points.extend(event["path"]["waypoints"])
        points.append(event["end"][:2])
    return np.asarray(points, dtype=float).reshape(-1, 2)


def trace_candidates(trace: EpisodeTrace) -> Optional[CandidateSet]:
    event = trace.last("candidates")
    if event is None:
        return None
    return CandidateSet.from_dict(event["candidates"])


def chosen_marker(trace: EpisodeTrace) -> Optional[int]:
    event = trace.last("decision")
    return None if event is None else int(event["chosen"])


def write_candidate_svg(trace: EpisodeTrace, path: str,
                        scene: Optional[SceneSpec] = None) -> int:
    """
    Candidate circles numbered by marker, the chosen one highlighted, and the
    traveled path as a polyline. Returns the number of circles drawn.
    """
    candidates = trace_candidates(trace)
    chosen = chosen_marker(trace)
    fig, ax = plt.subplots(figsize=(6, 6))

    if scene is not None:
        for primitive in scene.primitives:
            x, y = primitive.center
            ax.add_patch(plt.Circle((x, y), primitive.radius, color="lightgray", fill=True, alpha=0.5))

    drawn = 0
    for circle in candidates or []:
        highlight = circle.marker == chosen
        patch = plt.Circle(tuple(circle.center), circle.radius, fill=False,
                           edgecolor="red" if highlight else "tab:blue", linewidth=2.0 if highlight else 0.8)
        patch.set_gid(f"candidate-{circle.marker}")
        ax.add_patch(patch)
        ax.annotate(str(circle.marker), tuple(circle.center), ha="center", va="center", fontsize=7)
        drawn += 1

    footprint = trace.last("grid")
    candidates_event = trace.last("candidates")
    if footprint is not None and candidates_event is not None:
        center = candidates_event["object_center"]
        ax.add_patch(plt.Circle(tuple(center), footprint["footprint"]["radius"], fill=False,
                                linestyle="--", edgecolor="black", linewidth=0.8))

    points = trace_path(trace)
    if len(points):
        line, = ax.plot(points[:, 0], points[:, 1], "-", color="tab:green", linewidth=1.0)
        line.set_gid("path")
        ax.plot(points[0, 0], points[0, 1], "xg")
        ax.plot(points[-1, 0], points[-1, 1], "ok", markersize=3)

    setup = trace.last("setup")
    if setup is not None:
        optimal = setup["optimal_pose"]
        ax.plot(optimal["x"], optimal["y"], "*", color="gold", markersize=10)

    ax.set_title(f"{trace.scene} / {trace.query['text']} / {trace.mode}", fontsize=8)
    ax.axis("equal")
    ax.grid(True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return drawn


def render_trace(trace: EpisodeTrace, out_prefix: str, scene: Optional[SceneSpec] = None) -> List[str]:
    """
    All renderings of one trace; files are `<prefix>_grid.ppm` and `<prefix>_candidates.svg`.

    Raises:
        MalformedTrace: If the trace has no setup event
    """
    if trace.last("setup") is None:
        raise MalformedTrace(f"Trace of {trace.scene} has no setup event")
    written = []
    grid_event = trace.last("grid")
    if grid_event is not None:
        grid_path = f"{out_prefix}_grid.ppm"
        write_task_grid_ppm(grid_from_snapshot(grid_event["grid"]), grid_path)
        written.append(grid_path)
    svg_path = f"{out_prefix}_candidates.svg"
    write_candidate_svg(trace, svg_path, scene)
    written.append(svg_path)
    logger.debug(f"Rendered {trace.scene}: {written}")
    return written

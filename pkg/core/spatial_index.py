"""
Spatial Index - quad subdivision over 2D ground points with exact nearest-neighbour search
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import EmptyIndex


@dataclass(frozen=True)
class Rectangle:
    left: float
    right: float
    bottom: float
    top: float

    def centric_split(self) -> List["Rectangle"]:
        """Four equal quadrants, ordered SW, SE, NW, NE"""
        mid_x = (self.left + self.right) / 2.0
        mid_y = (self.bottom + self.top) / 2.0
        return [
            Rectangle(self.left, mid_x, self.bottom, mid_y),
            Rectangle(mid_x, self.right, self.bottom, mid_y),
            Rectangle(self.left, mid_x, mid_y, self.top),
            Rectangle(mid_x, self.right, mid_y, self.top),
        ]

    def distance_sq(self, x: float, y: float) -> float:
        dx = max(self.left - x, 0.0, x - self.right)
        dy = max(self.bottom - y, 0.0, y - self.top)
        return dx * dx + dy * dy


class ClosestSearchResult:
    """Best candidate so far; ties go to the lowest insertion index"""

    def __init__(self, x: float, y: float):
        self.x = x
        self.y = y
        self.distance_sq = math.inf
        self.index = -1

    def update(self, distances_sq: np.ndarray, indices: np.ndarray) -> None:
        position = int(np.argmin(distances_sq))
        best = float(distances_sq[position])
        index = int(indices[position])
        if best < self.distance_sq or (best == self.distance_sq and index < self.index):
            self.distance_sq = best
            self.index = index


class _QuadNode:
    def __init__(self, bounds: Rectangle, indices: np.ndarray, points: np.ndarray,
                 max_items: int, depth: int, max_depth: int):
        self.bounds = bounds
        self.indices: Optional[np.ndarray] = None
        self.children: List["_QuadNode"] = []

        width = bounds.right - bounds.left
        height = bounds.top - bounds.bottom
        if len(indices) <= max_items or depth >= max_depth or (width <= 0 and height <= 0):
            self.indices = indices
            return

        mid_x = (bounds.left + bounds.right) / 2.0
        mid_y = (bounds.bottom + bounds.top) / 2.0
        xs = points[indices, 0]
        ys = points[indices, 1]
        east = xs >= mid_x
        north = ys >= mid_y
        masks = [~east & ~north, east & ~north, ~east & north, east & north]
        for quadrant, mask in zip(bounds.centric_split(), masks):
            if np.any(mask):
                self.children.append(
                    _QuadNode(quadrant, indices[mask], points, max_items, depth + 1, max_depth)
                )

    def search_closest(self, result: ClosestSearchResult, points: np.ndarray) -> None:
        if self.indices is not None:
            diff = points[self.indices] - (result.x, result.y)
            result.update((diff ** 2).sum(axis=1), self.indices)
            return

        ordered = sorted(self.children, key=lambda child: child.bounds.distance_sq(result.x, result.y))
        for child in ordered:
            if child.bounds.distance_sq(result.x, result.y) > result.distance_sq:
                break
            child.search_closest(result, points)

    def depth(self) -> int:
        return 1 + max((child.depth() for child in self.children), default=0)


class SpatialIndex2D:
    """Points of one class bucketed in a quadtree; queries are exact"""

    def __init__(self, points, max_items_per_leaf: int = 16, max_depth: int = 24):
        self.points = np.array(points, dtype=float).reshape(-1, 2)
        self.points.setflags(write=False)
        self._root: Optional[_QuadNode] = None
        if len(self.points):
            low = self.points.min(axis=0)
            high = self.points.max(axis=0)
            bounds = Rectangle(low[0], high[0], low[1], high[1])
            self._root = _QuadNode(bounds, np.arange(len(self.points)), self.points,
                                   max_items_per_leaf, 0, max_depth)

    def __len__(self) -> int:
        return len(self.points)

    def max_depth(self) -> int:
        return self._root.depth() if self._root else 0

    def nearest(self, query) -> Tuple[float, np.ndarray, int]:
        """
        Exact nearest neighbour.

        Returns:
            (distance, point, insertion index)

        Raises:
            EmptyIndex: If the index holds no points
        """
        if self._root is None:
            raise EmptyIndex("Nearest-neighbour query on an empty index")
        result = ClosestSearchResult(float(query[0]), float(query[1]))
        self._root.search_closest(result, self.points)
        return math.sqrt(result.distance_sq), self.points[result.index], result.index

    def nearest_distances(self, queries) -> np.ndarray:
        queries = np.asarray(queries, dtype=float).reshape(-1, 2)
        return np.array([self.nearest(q)[0] for q in queries])


def nearest(index: SpatialIndex2D, query) -> Tuple[float, np.ndarray]:
    distance, point, _ = index.nearest(query)
    return distance, point

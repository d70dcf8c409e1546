"""
Pixel Network Model
Directed weighted network over image pixels and its per-vertex measures.

An edge i -> j joins pixels within Euclidean distance r and points toward
the higher intensity; equal intensities give edges in both directions.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np

from app.errors import ParameterError
from data.image_loader import MAX_LEVEL, GrayImage

logger = logging.getLogger(__name__)

Radius = Union[int, float]

MEASURES = ("k", "ks", "ke")


@dataclass(frozen=True)
class NeighborhoodOffsets:
    """All (dy, dx) != (0, 0) with dy^2 + dx^2 <= r^2."""

    radius: Radius
    offsets: Tuple[Tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def distances(self) -> np.ndarray:
        return np.array([math.sqrt(dy * dy + dx * dx) for dy, dx in self.offsets])


@dataclass(frozen=True)
class MeasureMaps:
    """Per-pixel out-degree (k), strength (ks), weighted in-degree (ke) and in-degree count (k_in)."""

    radius: Radius
    max_degree: int
    k: np.ndarray
    ks: np.ndarray
    ke: np.ndarray
    k_in: np.ndarray

    def __post_init__(self):
        for name in ("k", "ks", "ke", "k_in"):
            getattr(self, name).setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.k.shape

    def field(self, measure: str) -> np.ndarray:
        if measure not in MEASURES and measure != "k_in":
            raise ParameterError(f"Unknown measure '{measure}', expected one of {MEASURES}")
        return getattr(self, measure)


def _check_radius(r: Radius) -> Radius:
    if isinstance(r, bool) or not isinstance(r, (int, float, np.integer, np.floating)):
        raise ParameterError(f"radius must be a number, got {r!r}")
    if not math.isfinite(r) or r < 1:
        raise ParameterError(f"radius must be >= 1, got {r}")
    if float(r).is_integer():
        return int(r)
    return float(r)


@lru_cache(maxsize=None)
def _offsets_cached(r: Radius) -> NeighborhoodOffsets:
    reach = int(math.floor(r))
    offsets = []
    for dy in range(-reach, reach + 1):
        for dx in range(-reach, reach + 1):
            if dy == 0 and dx == 0:
                continue
            squared = dy * dy + dx * dx
            inside = squared <= r * r if isinstance(r, int) else squared <= r * r + 1e-12
            if inside:
                offsets.append((dy, dx))
    return NeighborhoodOffsets(radius=r, offsets=tuple(offsets))


def offsets_for(r: Radius) -> NeighborhoodOffsets:
    """
    Neighborhood of radius r in raster order.

    Raises:
        ParameterError: r < 1
    """
    return _offsets_cached(_check_radius(r))


def edge_weight(Ii: int, Ij: int, dist: float, r: Radius, L: int = MAX_LEVEL) -> float:
    """Edge weight in [0, 1] mixing spatial distance and intensity difference equally."""
    intensity = abs(int(Ii) - int(Ij)) / L
    if r == 1:
        return intensity
    return ((dist - 1) / (r - 1) + intensity) / 2


def directed_edges(img: GrayImage, i: int, r: Radius) -> List[Tuple[int, float, bool]]:
    """
    Out-edges of pixel i (row-major index).

    Returns (target index, weight, bidirectional) for every in-bounds
    neighbor j with I(i) <= I(j); bidirectional is True when I(i) == I(j).
    """
    neighborhood = offsets_for(r)
    r = neighborhood.radius
    h, w = img.height, img.width
    if not 0 <= i < h * w:
        raise ParameterError(f"pixel index {i} outside a {h}x{w} image")

    y, x = divmod(int(i), w)
    Ii = int(img.pixels[y, x])
    edges = []
    for (dy, dx), dist in zip(neighborhood.offsets, neighborhood.distances):
        ny, nx_ = y + dy, x + dx
        if not (0 <= ny < h and 0 <= nx_ < w):
            continue
        Ij = int(img.pixels[ny, nx_])
        if Ii <= Ij:
            edges.append((ny * w + nx_, edge_weight(Ii, Ij, dist, r, img.max_level), Ii == Ij))
    return edges


def compute_measures(img: GrayImage, r: Radius) -> MeasureMaps:
    """
    Out-degree, strength and weighted in-degree of every pixel.

    Scans the fixed offset set once per offset over the whole image;
    boundary pixels keep truncated neighborhoods.
    """
    neighborhood = offsets_for(r)
    r = neighborhood.radius
    pixels = img.pixels
    h, w = pixels.shape
    L = float(img.max_level)

    k = np.zeros((h, w), dtype=np.float64)
    k_in = np.zeros((h, w), dtype=np.float64)
    ks = np.zeros((h, w), dtype=np.float64)
    ke = np.zeros((h, w), dtype=np.float64)

    for (dy, dx), dist in zip(neighborhood.offsets, neighborhood.distances):
        if abs(dy) >= h or abs(dx) >= w:
            continue
        # pixels i whose neighbor j = i + (dy, dx) is in bounds
        src = (slice(max(0, -dy), h - max(0, dy)), slice(max(0, -dx), w - max(0, dx)))
        dst = (slice(max(0, dy), h + min(0, dy)), slice(max(0, dx), w + min(0, dx)))
        Ii = pixels[src]
        Ij = pixels[dst]

        intensity = np.abs(Ii - Ij) / L
        if r == 1:
            weight = intensity
        else:
            weight = ((dist - 1) / (r - 1) + intensity) / 2

        out_mask = Ii <= Ij
        in_mask = Ij <= Ii
        k[src] += out_mask
        k_in[src] += in_mask
        ks[src] += np.where(out_mask, weight, 0.0)
        ke[src] += np.where(in_mask, weight, 0.0)

    logger.debug(f"Measures computed for {h}x{w} image, r={r}, {len(neighborhood)} offsets")
    return MeasureMaps(radius=r, max_degree=len(neighborhood), k=k, ks=ks, ke=ke, k_in=k_in)


def render_measure(maps: MeasureMaps, measure: str = "k") -> GrayImage:
    """Scale a measure map to 8-bit by the maximum possible degree |offsets(r)|."""
    values = maps.field(measure)
    scaled = np.floor(255.0 * values / maps.max_degree + 0.5)
    return GrayImage(np.clip(scaled, 0, 255).astype(np.int64), MAX_LEVEL)


def invert(img: GrayImage) -> GrayImage:
    """I -> L - I."""
    return GrayImage(img.max_level - img.pixels, img.max_level)


def build_network(img: GrayImage, r: Radius):
    """
    Materialize the network as a networkx.DiGraph.

    Only meant for inspecting small images; edge attribute 'weight'.
    """
    import networkx as nx

    graph = nx.DiGraph()
    graph.add_nodes_from(range(img.height * img.width))
    for i in range(img.height * img.width):
        for j, weight, _ in directed_edges(img, i, r):
            graph.add_edge(i, j, weight=weight)
    return graph

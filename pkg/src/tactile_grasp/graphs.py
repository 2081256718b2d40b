"""Tactile graph construction for the BioTac SP fingertip sensor.

A grasp reading becomes a 24-node graph: one node per electrode (taxel),
node features are the per-finger pressure readings, and edges come either
from a hand-curated undirected list or from a directed k-nearest-neighbour
rule over the physical taxel positions. Graph convolutions consume the
symmetrically normalized self-looped adjacency built here.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from tactile_grasp.errors import (
    DegreeProfileError,
    EdgeFileError,
    InvalidArgumentError,
    ReadingRangeError,
)

NUM_TAXELS = 24

# Physical taxel coordinates (x, y, z) in inches, electrode order 1..24.
# Electrodes 1-10 and 11-20 are z-mirrored pairs; 21 and 24 sit on the
# mirror plane; 22 and 23 mirror each other.
TAXEL_POSITIONS: tuple[tuple[float, float, float], ...] = (
    (0.386434851, -0.108966104, 0.156871012),
    (0.318945051, -0.205042252, 0.120706090),
    (0.087372680, -0.128562247, 0.281981384),
    (0.083895199, -0.235924865, 0.201566857),
    (-0.018624877, -0.300117050, 0.094918748),
    (-0.091886816, -0.120436080, 0.284956139),
    (-0.136659500, -0.237549685, 0.187122746),
    (-0.223451775, -0.270674659, 0.071536904),
    (-0.320752549, -0.199498368, 0.127771244),
    (-0.396931929, -0.100043884, 0.151565706),
    (0.386434851, -0.108966104, -0.156871012),
    (0.318945051, -0.205042252, -0.120706090),
    (0.087372680, -0.128562247, -0.281981384),
    (0.083895199, -0.235924865, -0.201566857),
    (-0.018624877, -0.300117050, -0.094918748),
    (-0.091886816, -0.120436080, -0.284956139),
    (-0.136659500, -0.237549685, -0.187122746),
    (-0.223451775, -0.270674659, -0.071536904),
    (-0.320752549, -0.199498368, -0.127771244),
    (-0.396931929, -0.100043884, -0.151565706),
    (0.258753050, -0.252337663, 0.000000000),
    (0.170153841, -0.274427927, 0.072909607),
    (0.170153841, -0.274427927, -0.072909607),
    (0.075325086, -0.298071391, 0.000000000),
)

# z-mirror permutation: i <-> i+10 for the side pairs, 21 <-> 22,
# fixed points 20 and 23.
MIRROR_PERMUTATION: tuple[int, ...] = tuple(
    list(range(10, 20)) + list(range(0, 10)) + [20, 22, 21, 23]
)

# Default undirected edge list (base direction only; stored closed under
# reversal by EdgeSet). Reconstructed from mutual-nearest-neighbour pairs
# plus proximity chains, completed under the z-mirror map, and constrained
# to the published degree profile: electrode 24 (index 23) has degree 6,
# every other node degree 1..4.
DEFAULT_MANUAL_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (10, 11),
    (2, 3), (12, 13),
    (8, 9), (18, 19),
    (20, 21), (20, 22),
    (23, 21), (23, 22), (23, 3), (23, 13), (23, 4), (23, 14),
    (5, 6), (15, 16),
    (6, 7), (16, 17),
    (7, 8), (17, 18),
    (1, 20), (11, 20),
    (2, 5), (12, 15),
    (3, 4), (13, 14),
    (4, 6), (14, 16),
    (21, 22),
)

RAW_READING_MAX = 4095
FEATURE_SCALE = 4096.0

FINGERS = ("index", "middle", "thumb")


class Label(enum.Enum):
    """Binary grasp outcome."""

    STABLE = "stable"
    SLIPPERY = "slippery"

    @classmethod
    def from_token(cls, token: str) -> "Label":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown label token {token!r}") from None


@dataclass(frozen=True)
class TaxelLayout:
    """The 24 fixed 3D taxel positions of one BioTac SP sensor."""

    positions: tuple[tuple[float, float, float], ...] = TAXEL_POSITIONS

    def __post_init__(self):
        if len(self.positions) != NUM_TAXELS:
            raise InvalidArgumentError(
                f"layout needs exactly {NUM_TAXELS} positions, got {len(self.positions)}"
            )

    def as_array(self) -> np.ndarray:
        """Positions as a read-only (24, 3) float64 array."""
        arr = np.asarray(self.positions, dtype=np.float64)
        arr.flags.writeable = False
        return arr

    def mirrored(self) -> "TaxelLayout":
        """The layout with z negated (physical mirror of the sensor)."""
        return TaxelLayout(tuple((x, y, -z) for x, y, z in self.positions))

    def permuted(self, perm: Sequence[int]) -> "TaxelLayout":
        return TaxelLayout(tuple(self.positions[p] for p in perm))


def load_layout() -> TaxelLayout:
    """Return the hard-coded electrode-order taxel coordinates."""
    return TaxelLayout()


@dataclass(frozen=True)
class EdgeSet:
    """A validated set of graph edges over node indices [0, 24).

    Undirected sets are stored symmetrically: the edge list is closed under
    reversal. Self-loops are never stored; normalization injects them.
    """

    edges: tuple[tuple[int, int], ...]
    directed: bool

    def __post_init__(self):
        seen = set()
        for src, dst in self.edges:
            if not (0 <= src < NUM_TAXELS and 0 <= dst < NUM_TAXELS):
                raise InvalidArgumentError(f"edge ({src}, {dst}) outside [0, {NUM_TAXELS})")
            if src == dst:
                raise InvalidArgumentError(f"self-loop ({src}, {dst}) not allowed")
            if (src, dst) in seen:
                raise InvalidArgumentError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
        if not self.directed:
            for src, dst in self.edges:
                if (dst, src) not in seen:
                    raise InvalidArgumentError(
                        f"undirected edge set not closed under reversal: missing ({dst}, {src})"
                    )

    @classmethod
    def undirected(cls, pairs: Iterable[tuple[int, int]]) -> "EdgeSet":
        """Build a symmetric edge set from pairs stated in either direction."""
        closed = set()
        for a, b in pairs:
            closed.add((a, b))
            closed.add((b, a))
        return cls(edges=tuple(sorted(closed)), directed=False)

    def degree(self, node: int) -> int:
        """Number of distinct neighbours of `node` (either direction)."""
        return len({b for a, b in self.edges if a == node} | {a for a, b in self.edges if b == node})

    def permuted(self, perm: Sequence[int]) -> "EdgeSet":
        mapped = [(perm[a], perm[b]) for a, b in self.edges]
        if self.directed:
            return EdgeSet(edges=tuple(mapped), directed=True)
        return EdgeSet.undirected(mapped)

    def canonical_pairs(self) -> tuple[tuple[int, int], ...]:
        """Sorted edge list with undirected edges stated once (a < b)."""
        if self.directed:
            return tuple(sorted(self.edges))
        return tuple(sorted({(min(a, b), max(a, b)) for a, b in self.edges}))

    def fingerprint(self) -> str:
        """Stable content hash of the edge structure."""
        mode = b"directed" if self.directed else b"undirected"
        body = ";".join(f"{a},{b}" for a, b in self.canonical_pairs()).encode()
        return hashlib.sha256(mode + b":" + body).hexdigest()


def knn_edges(layout: TaxelLayout, k: int) -> EdgeSet:
    """Directed edges from each node to its k nearest neighbours.

    Distances are Euclidean over the physical positions; ties break toward
    the lower node index so the construction is deterministic. Edges are
    emitted per source node in order of increasing distance.
    """
    if not isinstance(k, int) or not 1 <= k <= NUM_TAXELS - 1:
        raise InvalidArgumentError(f"k must be an integer in [1, {NUM_TAXELS - 1}], got {k!r}")
    pos = layout.as_array()
    diffs = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diffs * diffs).sum(axis=2))
    edges = []
    for src in range(NUM_TAXELS):
        ranked = sorted(
            (float(dist[src, dst]), dst) for dst in range(NUM_TAXELS) if dst != src
        )
        edges.extend((src, dst) for _, dst in ranked[:k])
    return EdgeSet(edges=tuple(edges), directed=True)


def _parse_edge_file(path: Path) -> list[tuple[int, int]]:
    pairs = []
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeFileError(path, line_no, f"expected 'src dst', got {raw!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeFileError(path, line_no, f"non-integer node index in {raw!r}") from None
        if not (0 <= src < NUM_TAXELS and 0 <= dst < NUM_TAXELS):
            raise EdgeFileError(path, line_no, f"node index outside [0, {NUM_TAXELS})")
        if src == dst:
            raise EdgeFileError(path, line_no, "self-loops are not allowed")
        pairs.append((src, dst))
    return pairs


def validate_manual_degrees(edges: EdgeSet) -> None:
    """Enforce the published degree profile of the hand-curated graph."""
    hub = NUM_TAXELS - 1
    hub_degree = edges.degree(hub)
    if hub_degree != 6:
        raise DegreeProfileError(hub, hub_degree, "centre electrode must have degree 6")
    for node in range(NUM_TAXELS - 1):
        d = edges.degree(node)
        if not 1 <= d <= 4:
            raise DegreeProfileError(node, d, "degree must be in [1, 4]")


def manual_edges(config_path: Optional[Path] = None) -> EdgeSet:
    """The hand-curated undirected edge set, or one loaded from a file.

    Files use the plain-text edge-list format: one `src dst` pair per line,
    zero-based indices, `#` comments allowed; each undirected edge may be
    stated once. Loaded sets must satisfy the same degree profile as the
    shipped default.
    """
    if config_path is None:
        pairs: Sequence[tuple[int, int]] = DEFAULT_MANUAL_EDGES
    else:
        pairs = _parse_edge_file(Path(config_path))
    edges = EdgeSet.undirected(pairs)
    validate_manual_degrees(edges)
    return edges


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Dense self-looped, degree-normalized adjacency."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"adjacency must be square, got {m.shape}")
        if np.any(np.diagonal(m) <= 0.0):
            raise InvalidArgumentError("normalized adjacency must have positive diagonal")
        m.flags.writeable = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def normalize_adjacency(edges: EdgeSet, n: int = NUM_TAXELS) -> NormalizedAdjacency:
    """Degree-normalize the self-looped 0/1 adjacency of `edges`.

    With A the 0/1 adjacency (A[src][dst] = 1) and A_hat = A + I, returns
    D_r^{-1/2} A_hat D_c^{-1/2} where D_r and D_c are the diagonal row- and
    column-degree matrices of A_hat. For undirected sets the two coincide
    and the result is the standard symmetric normalization.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    for src, dst in edges.edges:
        if src >= n or dst >= n:
            raise InvalidArgumentError(f"edge ({src}, {dst}) does not fit in {n} nodes")
    a_hat = np.eye(n, dtype=np.float64)
    for src, dst in edges.edges:
        a_hat[src, dst] = 1.0
    row_deg = a_hat.sum(axis=1)
    col_deg = a_hat.sum(axis=0)
    norm = a_hat / np.sqrt(row_deg)[:, None] / np.sqrt(col_deg)[None, :]
    return NormalizedAdjacency(matrix=norm)


@dataclass(frozen=True)
class TactileGraph:
    """One grasp as a graph: fixed layout, edges, 24x3 features, outcome."""

    layout: TaxelLayout
    edges: EdgeSet
    features: np.ndarray = field(repr=False)
    label: Label

    def __post_init__(self):
        f = self.features
        if f.shape != (NUM_TAXELS, len(FINGERS)):
            raise InvalidArgumentError(
                f"features must be {NUM_TAXELS}x{len(FINGERS)}, got {f.shape}"
            )
        if np.any(f < 0.0) or np.any(f > 1.0):
            raise InvalidArgumentError("features must lie in [0, 1]")
        f.flags.writeable = False


def build_graph(sample, edges: EdgeSet, layout: Optional[TaxelLayout] = None) -> TactileGraph:
    """Assemble the tactile graph for one grasp sample.

    Node i carries the index/middle/thumb readings of electrode i+1, each
    scaled by 1/4096 into [0, 1). The stability label passes through.
    """
    readings = np.asarray(sample.readings)
    if readings.shape != (3 * NUM_TAXELS,):
        raise InvalidArgumentError(
            f"sample must hold {3 * NUM_TAXELS} readings, got {readings.shape}"
        )
    for finger_idx, finger in enumerate(FINGERS):
        block = readings[finger_idx * NUM_TAXELS : (finger_idx + 1) * NUM_TAXELS]
        for electrode, value in enumerate(block, start=1):
            if value < 0 or value > RAW_READING_MAX:
                raise ReadingRangeError(finger, electrode, value)
    features = readings.reshape(len(FINGERS), NUM_TAXELS).T.astype(np.float64) / FEATURE_SCALE
    return TactileGraph(
        layout=layout or load_layout(),
        edges=edges,
        features=np.ascontiguousarray(features),
        label=sample.label,
    )

"""Region geometry and pairwise distances.

A :class:`SpatialFrame` holds one coordinate pair per region plus an
optional adjacency relation.  Three distance metrics are available:
planar Euclidean, great-circle on a sphere, and shortest-path edge counts
over the adjacency graph.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import ConfigurationError, DataError

PLANAR = "planar"
SPHERICAL = "spherical"

EARTH_RADIUS_KM = 6371.0


class ModeMismatchError(ValueError):
    """Distance requested for a frame with the wrong coordinate mode."""


@dataclass(frozen=True)
class SpatialFrame:
    """Ordered regions with coordinates and optional adjacency.

    Parameters
    ----------
    region_ids : sequence of str
    coords : array of shape (S, 2)
        ``(x, y)`` when ``mode == "planar"``, ``(lat, lon)`` in degrees when
        ``mode == "spherical"``.
    mode : {"planar", "spherical"}
    adjacency : bool array of shape (S, S), optional
        Symmetric with an empty diagonal.
    """

    region_ids: tuple
    coords: np.ndarray
    mode: str = PLANAR
    adjacency: np.ndarray | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(str(r) for r in self.region_ids)
        object.__setattr__(self, "region_ids", ids)
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise DataError(f"coords must have shape (S, 2), got {coords.shape}")
        if len(ids) != coords.shape[0]:
            raise DataError("region_ids and coords disagree on region count")
        if len(ids) < 2:
            raise DataError("a SpatialFrame needs at least 2 regions")
        if len(set(ids)) != len(ids):
            raise DataError("region_ids must be unique")
        if self.mode not in (PLANAR, SPHERICAL):
            raise ConfigurationError(f"unknown coordinate mode {self.mode!r}")
        if not np.all(np.isfinite(coords)):
            raise DataError("coordinates must be finite")
        if self.mode == SPHERICAL:
            _check_latlon(coords)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.adjacency is not None:
            adj = np.asarray(self.adjacency, dtype=bool)
            if adj.shape != (len(ids), len(ids)):
                raise DataError("adjacency must be S x S")
            if not np.array_equal(adj, adj.T):
                raise DataError("adjacency must be symmetric")
            if adj.diagonal().any():
                raise DataError("adjacency diagonal must be empty")
            adj.setflags(write=False)
            object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "_index", {r: i for i, r in enumerate(ids)})

    @property
    def n_regions(self) -> int:
        return len(self.region_ids)

    def index_of(self, region_id) -> int:
        try:
            return self._index[str(region_id)]
        except KeyError:
            raise KeyError(f"unknown region {region_id!r}") from None

    def with_adjacency(self, adjacency) -> "SpatialFrame":
        return SpatialFrame(self.region_ids, self.coords, self.mode, adjacency)

    @classmethod
    def from_edges(cls, region_ids, coords, edges, mode=PLANAR):
        """Build a frame whose adjacency comes from ``(id_a, id_b)`` pairs."""
        ids = [str(r) for r in region_ids]
        index = {r: i for i, r in enumerate(ids)}
        adj = np.zeros((len(ids), len(ids)), dtype=bool)
        for a, b in edges:
            try:
                i, j = index[str(a)], index[str(b)]
            except KeyError as exc:
                raise DataError(f"edge references unknown region {exc.args[0]!r}") from None
            if i != j:
                adj[i, j] = adj[j, i] = True
        return cls(ids, coords, mode, adj)


def _check_latlon(coords):
    lat, lon = coords[:, 0], coords[:, 1]
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
        raise DataError("latitudes must lie in [-90, 90] and longitudes in [-180, 180]")


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric S x S distances tagged with the metric that produced them."""

    values: np.ndarray
    metric: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def max_finite(self) -> float:
        v = self.values[np.isfinite(self.values)]
        return float(v.max()) if v.size else 0.0

    @property
    def nearest_neighbour(self) -> float:
        """Median over regions of the distance to the closest other region."""
        v = np.where(np.eye(len(self.values), dtype=bool), np.inf, self.values)
        nn = v.min(axis=1)
        nn = nn[np.isfinite(nn)]
        return float(np.median(nn)) if nn.size else 0.0


def euclidean_distances(frame: SpatialFrame) -> DistanceMatrix:
    if frame.mode != PLANAR:
        raise ModeMismatchError("euclidean distances need a planar frame")
    diff = frame.coords[:, None, :] - frame.coords[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    # exact symmetry regardless of summation order
    d = np.triu(d, 1)
    return DistanceMatrix(d + d.T, "euclidean")


def great_circle(lat1, lon1, lat2, lon2, radius: float = EARTH_RADIUS_KM):
    """Spherical law-of-cosines distance between points given in degrees.

    Broadcasts over its arguments and performs no range checks, so
    longitudes may be given modulo 360.  The arccos argument is clipped to
    [-1, 1] to absorb rounding for coincident and antipodal points.
    """
    a1, b1, a2, b2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    # cos a1 cos a2 cos(db) + sin a1 sin a2, rewritten with cos(db) = 1 - 2 sin^2(db / 2)
    # so that coincident points give exactly 1
    cos_angle = np.cos(a1 - a2) - 2.0 * np.cos(a1) * np.cos(a2) * np.sin(0.5 * (b1 - b2)) ** 2
    return radius * np.arccos(np.clip(cos_angle, -1.0, 1.0))


def great_circle_distances(frame: SpatialFrame, radius: float = EARTH_RADIUS_KM) -> DistanceMatrix:
    if frame.mode != SPHERICAL:
        raise ModeMismatchError("great-circle distances need a spherical frame")
    if not radius > 0:
        raise ValueError("radius must be positive")
    _check_latlon(frame.coords)
    lat, lon = frame.coords[:, 0], frame.coords[:, 1]
    d = great_circle(lat[:, None], lon[:, None], lat[None, :], lon[None, :], radius)
    d = np.triu(d, 1)
    return DistanceMatrix(d + d.T, "great_circle")


def graph_distances(frame: SpatialFrame) -> DistanceMatrix:
    """Breadth-first hop counts; ``inf`` between disconnected components."""
    if frame.adjacency is None:
        raise ConfigurationError("graph distances need an adjacency relation")
    graph = csr_matrix(frame.adjacency.astype(float))
    d = shortest_path(graph, method="D", directed=False, unweighted=True)
    return DistanceMatrix(d, "graph")


METRICS = {
    "euclidean": euclidean_distances,
    "great_circle": great_circle_distances,
    "graph": graph_distances,
}


def distances(frame: SpatialFrame, metric: str) -> DistanceMatrix:
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ConfigurationError(f"unknown distance metric {metric!r}; choose from {sorted(METRICS)}") from None
    return fn(frame)


def read_frame_csv(path, mode: str = PLANAR, adjacency_path=None) -> SpatialFrame:
    """Read ``region_id,x,y`` (or ``region_id,lat,lon``) plus an optional edge list."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"frame file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if "region_id" not in cols:
            raise DataError(f"{path}: missing region_id column")
        if {"lat", "lon"} <= set(cols):
            a, b = "lat", "lon"
            mode = SPHERICAL
        elif {"x", "y"} <= set(cols):
            a, b = "x", "y"
        else:
            raise DataError(f"{path}: need x,y or lat,lon columns")
        ids, coords = [], []
        for row in reader:
            ids.append(row["region_id"])
            try:
                coords.append((float(row[a]), float(row[b])))
            except ValueError:
                raise DataError(f"{path}: non-numeric coordinate for region {row['region_id']!r}") from None
    edges = read_edges_csv(adjacency_path) if adjacency_path is not None else None
    if edges is None:
        return SpatialFrame(ids, np.array(coords), mode)
    return SpatialFrame.from_edges(ids, np.array(coords), edges, mode)


def read_edges_csv(path) -> list[tuple[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"adjacency file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"region_id_a", "region_id_b"} <= set(reader.fieldnames or []):
            raise DataError(f"{path}: need region_id_a,region_id_b columns")
        return [(row["region_id_a"], row["region_id_b"]) for row in reader]


def write_frame_csv(frame: SpatialFrame, path, adjacency_path=None) -> None:
    a, b = ("lat", "lon") if frame.mode == SPHERICAL else ("x", "y")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", a, b])
        for rid, (u, v) in zip(frame.region_ids, frame.coords):
            w.writerow([rid, repr(float(u)), repr(float(v))])
    if adjacency_path is not None and frame.adjacency is not None:
        with Path(adjacency_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["region_id_a", "region_id_b"])
            ii, jj = np.nonzero(np.triu(frame.adjacency, 1))
            for i, j in zip(ii, jj):
                w.writerow([frame.region_ids[i], frame.region_ids[j]])


def lattice_frame(n_rows: int, n_cols: int, spacing: float = 1.0, ids: Sequence[str] | None = None) -> SpatialFrame:
    """Regular planar grid with rook adjacency, numbered column-major."""
    cells = [(c, r) for c in range(n_cols) for r in range(n_rows)]
    return _grid_frame(cells, spacing, ids)


def _grid_frame(cells, spacing, ids=None):
    coords = np.array(cells, dtype=float) * spacing
    lookup = {cell: k for k, cell in enumerate(cells)}
    adj = np.zeros((len(cells), len(cells)), dtype=bool)
    for k, (c, r) in enumerate(cells):
        for nb in ((c + 1, r), (c, r + 1)):
            j = lookup.get(nb)
            if j is not None:
                adj[k, j] = adj[j, k] = True
    if ids is None:
        ids = [f"R{k + 1:03d}" for k in range(len(cells))]
    return SpatialFrame(ids, coords, PLANAR, adj)

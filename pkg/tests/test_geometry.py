import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bcgwr.errors import ConfigurationError, DataError
from bcgwr.geometry import (ModeMismatchError, SpatialFrame, distances, euclidean_distances,
                            graph_distances, great_circle, great_circle_distances, lattice_frame,
                            read_frame_csv, write_frame_csv)


def planar(points):
    return SpatialFrame([f"r{i}" for i in range(len(points))], np.asarray(points, float))


def spherical(points):
    return SpatialFrame([f"r{i}" for i in range(len(points))], np.asarray(points, float), "spherical")


def path_frame(n, edges):
    return SpatialFrame.from_edges([f"n{i}" for i in range(n)], np.zeros((n, 2)),
                                   [(f"n{a}", f"n{b}") for a, b in edges])


class TestFrame:
    def test_needs_two_regions(self):
        with pytest.raises(DataError):
            planar([(0, 0)])

    def test_adjacency_must_be_symmetric(self):
        adj = np.zeros((2, 2), bool)
        adj[0, 1] = True
        with pytest.raises(DataError):
            SpatialFrame(["a", "b"], np.zeros((2, 2)), adjacency=adj)

    def test_adjacency_diagonal_empty(self):
        with pytest.raises(DataError):
            SpatialFrame(["a", "b"], np.zeros((2, 2)), adjacency=np.eye(2, dtype=bool))

    def test_latlon_range(self):
        with pytest.raises(DataError):
            spherical([(95, 0), (0, 0)])
        with pytest.raises(DataError):
            spherical([(0, 181), (0, 0)])

    def test_unknown_mode(self):
        with pytest.raises(ConfigurationError):
            SpatialFrame(["a", "b"], np.zeros((2, 2)), "mercator")

    def test_duplicate_ids(self):
        with pytest.raises(DataError):
            SpatialFrame(["a", "a"], np.zeros((2, 2)))

    def test_csv_round_trip(self, tmp_path):
        f = lattice_frame(2, 3, 1.5)
        write_frame_csv(f, tmp_path / "f.csv", tmp_path / "adj.csv")
        g = read_frame_csv(tmp_path / "f.csv", adjacency_path=tmp_path / "adj.csv")
        assert g.region_ids == f.region_ids
        np.testing.assert_array_equal(g.coords, f.coords)
        np.testing.assert_array_equal(g.adjacency, f.adjacency)

    def test_csv_latlon_sets_spherical(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("region_id,lat,lon\na,0,0\nb,0,90\n")
        f = read_frame_csv(p)
        assert f.mode == "spherical"
        assert great_circle_distances(f, 1.0).values[0, 1] == pytest.approx(np.pi / 2)

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(DataError, match="nowhere.csv"):
            read_frame_csv(tmp_path / "nowhere.csv")


class TestEuclidean:
    def test_identical_points(self):
        assert euclidean_distances(planar([(0, 0), (0, 0)])).values[0, 1] == 0.0

    def test_345(self):
        assert euclidean_distances(planar([(0, 0), (3, 4)])).values[0, 1] == 5.0

    def test_matches_pairwise_loop(self, rng):
        pts = rng.normal(size=(5, 2)) * 10
        d = euclidean_distances(planar(pts)).values
        for i in range(5):
            for j in range(5):
                ref = np.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
                assert abs(d[i, j] - ref) < 1e-12

    def test_rejects_spherical(self):
        with pytest.raises(ModeMismatchError):
            euclidean_distances(spherical([(0, 0), (1, 1)]))

    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=8))
    def test_metric_properties(self, pts):
        d = euclidean_distances(planar(pts)).values
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)
        assert np.all(d >= 0)
        n = len(pts)
        for k in range(n):
            assert np.all(d <= d[:, [k]] + d[[k], :] + 1e-9)


class TestGreatCircle:
    def test_identical(self):
        assert great_circle_distances(spherical([(10, 20), (10, 20)])).values[0, 1] == 0.0

    def test_antipodal_equator(self):
        d = great_circle_distances(spherical([(0, 0), (0, 180)]), radius=1.0).values[0, 1]
        assert d == pytest.approx(np.pi, abs=1e-12)

    def test_high_precision_oracle(self):
        mpmath.mp.dps = 50
        a1, b1, a2, b2 = (mpmath.radians(v) for v in (10, 20, -30, 55))
        c = mpmath.cos(a1) * mpmath.cos(a2) * mpmath.cos(b1 - b2) + mpmath.sin(a1) * mpmath.sin(a2)
        ref = float(6371 * mpmath.acos(c))
        d = great_circle_distances(spherical([(10, 20), (-30, 55)]), 6371.0).values[0, 1]
        assert d == pytest.approx(ref, rel=1e-12)

    def test_rejects_planar(self):
        with pytest.raises(ModeMismatchError):
            great_circle_distances(planar([(0, 0), (1, 1)]))

    def test_radius_positive(self):
        with pytest.raises(ValueError):
            great_circle_distances(spherical([(0, 0), (1, 1)]), radius=0)

    @given(st.floats(-89, 89), st.floats(-180, 180), st.floats(-89, 89), st.floats(-180, 180))
    def test_longitude_wrap_invariance(self, a1, b1, a2, b2):
        d = great_circle(a1, b1, a2, b2)
        assert abs(great_circle(a1, b1 + 360.0, a2, b2) - d) < 1e-9 * 6371

    @given(st.lists(st.tuples(st.floats(-90, 90), st.floats(-180, 180)), min_size=3, max_size=6))
    def test_triangle_inequality(self, pts):
        d = great_circle_distances(spherical(pts)).values
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)
        for k in range(len(pts)):
            # clipped arccos loses ~sqrt(eps) near 0, hence the tolerance in km
            assert np.all(d <= d[:, [k]] + d[[k], :] + 1e-4)


def floyd_warshall(adj):
    n = len(adj)
    d = np.where(adj, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


class TestGraph:
    def test_path(self):
        d = graph_distances(path_frame(3, [(0, 1), (1, 2)])).values
        assert d[0, 2] == 2
        assert np.all(np.diag(d) == 0)

    def test_disconnected_is_inf(self):
        d = graph_distances(path_frame(4, [(0, 1), (2, 3)])).values
        assert np.isinf(d[0, 3])

    def test_missing_adjacency(self):
        with pytest.raises(ConfigurationError):
            graph_distances(planar([(0, 0), (1, 1)]))

    def test_adjacent_pairs_are_one(self):
        f = lattice_frame(4, 5)
        d = graph_distances(f).values
        assert np.all(d[f.adjacency] == 1)

    def test_random_graph_matches_floyd_warshall(self, rng):
        n = 20
        adj = np.triu(rng.random((n, n)) < 0.12, 1)
        adj = adj | adj.T
        edges = list(zip(*np.nonzero(np.triu(adj, 1))))
        d = graph_distances(path_frame(n, edges)).values
        np.testing.assert_array_equal(d, floyd_warshall(adj))

    def test_dispatch(self):
        with pytest.raises(ConfigurationError):
            distances(planar([(0, 0), (1, 1)]), "manhattan")


def test_nearest_neighbour_distance():
    from bcgwr.geometry import DistanceMatrix
    assert euclidean_distances(lattice_frame(3, 4, spacing=2.5)).nearest_neighbour == 2.5
    d = DistanceMatrix(np.array([[0, 1, 4], [1, 0, 3], [4, 3, 0.0]]), "custom")
    assert d.nearest_neighbour == 1.0   # median of (1, 1, 3)
    iso = DistanceMatrix(np.array([[0, np.inf], [np.inf, 0.0]]), "graph")
    assert iso.nearest_neighbour == 0.0

import math

import numpy as np
import pytest

from bgasim.errors import InvalidParameter, UnsupportedGraph
from bgasim.graph import Graph, complete, de_bruijn, hypercube, ring, torus_lattice
from bgasim.spectral import laplacian, rate_bound, spectral_gap


def cycle_gap(n):
    return 2 - 2 * math.cos(2 * math.pi / n)


def test_laplacian_triangle():
    np.testing.assert_array_equal(laplacian(ring(3)), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_laplacian_complete4():
    lap = laplacian(complete(4))
    assert np.all(np.diag(lap) == 3)
    assert np.all(lap[~np.eye(4, dtype=bool)] == -1)


def test_laplacian_de_bruijn_row():
    np.testing.assert_array_equal(laplacian(de_bruijn(2, 2))[0], [1, -1, 0, 0])


@pytest.mark.parametrize("g", [ring(7), hypercube(3), de_bruijn(2, 4), torus_lattice(2, 3)])
def test_laplacian_rows_sum_to_zero(g):
    assert np.all(laplacian(g).sum(axis=1) == 0)


@pytest.mark.parametrize("g", [ring(7), hypercube(3), complete(5)])
def test_laplacian_symmetric_for_symmetric_graphs(g):
    lap = laplacian(g)
    np.testing.assert_array_equal(lap, lap.T)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_gap_complete(n):
    assert spectral_gap(complete(n)).lambda1 == pytest.approx(n, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 8, 32, 101])
def test_gap_ring(n):
    s = spectral_gap(ring(n))
    assert s.lambda1 == pytest.approx(cycle_gap(n), rel=1e-9)
    assert s.multiplicity_zero == 1


def test_gap_ring4_is_two():
    assert spectral_gap(ring(4)).lambda1 == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("d", range(1, 8))
def test_gap_hypercube(d):
    s = spectral_gap(hypercube(d))
    assert s.lambda1 == pytest.approx(2.0, rel=1e-9)
    assert s.lambda_max == pytest.approx(2.0 * d, rel=1e-9)


@pytest.mark.parametrize("k,side", [(1, 5), (2, 3), (2, 5), (2, 8), (3, 4), (3, 5)])
def test_gap_torus(k, side):
    # product of cycles: spectrum is sums of per-axis cycle eigenvalues
    assert spectral_gap(torus_lattice(k, side)).lambda1 == pytest.approx(cycle_gap(side), rel=1e-9)


def test_summary_invariants():
    for g in (ring(10), hypercube(4), complete(6), torus_lattice(2, 4)):
        s = spectral_gap(g)
        assert 0 < s.lambda1 <= s.lambda_max <= 2 * g.degrees.deg_max * (1 + 1e-12)


def test_disconnected_reports_multiplicity():
    # two disjoint triangles
    edges = [(a, b) for t in (0, 3) for a in range(t, t + 3) for b in range(t, t + 3) if a != b]
    s = spectral_gap(Graph.from_edges(6, edges))
    assert s.multiplicity_zero == 2
    assert s.lambda1 == pytest.approx(3.0)


def test_gap_refuses_non_symmetric():
    with pytest.raises(UnsupportedGraph):
        spectral_gap(de_bruijn(2, 3))


def test_rate_bound_examples():
    assert rate_bound(complete(16), 0.5) == pytest.approx(0.5, abs=1e-12)
    assert rate_bound(ring(4), 0.5) == pytest.approx(0.75, abs=1e-12)
    assert rate_bound(ring(9), 1e-9) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
def test_rate_bound_rejects_q(q):
    with pytest.raises(InvalidParameter):
        rate_bound(ring(5), q)


@pytest.mark.parametrize("g", [ring(12), hypercube(5), complete(9), torus_lattice(2, 5)])
@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_rate_bound_in_unit_interval(g, q):
    assert 0 < rate_bound(g, q) < 1

import numpy as np
import pytest

from platoon_vss.errors import (
    DimensionMismatchError,
    NonBinaryEntryError,
    NonSquareError,
    NonzeroDiagonalError,
    SingularMatrixError,
)
from platoon_vss.topology import (
    Topology,
    build_h,
    build_laplacian,
    has_leader_spanning_tree,
    invert_h,
    preset_topology,
)

# 4-vehicle bidirectional chain used throughout the reference scenario
CHAIN4 = np.array(
    [
        [0, 1, 0, 0],
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [0, 0, 1, 0],
    ]
)
L_CHAIN4 = np.array(
    [
        [1, -1, 0, 0],
        [-1, 2, -1, 0],
        [0, -1, 2, -1],
        [0, 0, -1, 1],
    ],
    dtype=float,
)


class TestBuildLaplacian:
    def test_paper_chain(self):
        assert np.array_equal(build_laplacian(CHAIN4), L_CHAIN4)

    def test_empty_graph(self):
        assert np.array_equal(build_laplacian(np.zeros((2, 2))), np.zeros((2, 2)))

    def test_complete_graph_k3(self):
        a = np.ones((3, 3)) - np.eye(3)
        expected = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float)
        assert np.array_equal(build_laplacian(a), expected)

    def test_rejects_non_square(self):
        with pytest.raises(NonSquareError):
            build_laplacian(np.zeros((2, 3)))

    def test_rejects_weighted(self):
        a = np.array([[0, 0.5], [0.5, 0]])
        with pytest.raises(NonBinaryEntryError):
            build_laplacian(a)

    def test_rejects_self_loop(self):
        a = np.array([[1, 0], [0, 0]])
        with pytest.raises(NonzeroDiagonalError):
            build_laplacian(a)


class TestBuildH:
    def test_paper_h(self):
        h = build_h(L_CHAIN4, np.ones(4))
        assert np.array_equal(h, L_CHAIN4 + np.eye(4))

    def test_identity_from_pinning_only(self):
        assert np.array_equal(build_h(np.zeros((3, 3)), np.ones(3)), np.eye(3))

    def test_zero_h_is_singular_downstream(self):
        h = build_h(np.zeros((2, 2)), np.zeros(2))
        assert np.array_equal(h, np.zeros((2, 2)))
        with pytest.raises(SingularMatrixError):
            invert_h(h)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            build_h(L_CHAIN4, np.ones(3))


class TestSpanningTree:
    def test_paper_topology_all_pinned(self):
        assert has_leader_spanning_tree(CHAIN4, np.ones(4))

    def test_predecessor_following(self):
        a = np.zeros((4, 4), dtype=int)
        for i in range(1, 4):
            a[i, i - 1] = 1
        p = np.array([1, 0, 0, 0])
        assert has_leader_spanning_tree(a, p)

    def test_no_pinning_unreachable(self):
        assert not has_leader_spanning_tree(CHAIN4, np.zeros(4))

    def test_disconnected_component(self):
        a = np.zeros((3, 3), dtype=int)
        a[0, 1] = a[1, 0] = 1
        assert not has_leader_spanning_tree(a, np.array([1, 0, 0]))


class TestInvertH:
    def test_identity(self):
        assert np.allclose(invert_h(np.eye(5)), np.eye(5))

    def test_paper_h_inverse(self):
        h = L_CHAIN4 + np.eye(4)
        inv = invert_h(h)
        assert np.max(np.abs(h @ inv - np.eye(4))) <= 1e-10
        # eigenvalue oracle: H = I + L is positive definite for this chain
        assert np.min(np.linalg.eigvalsh(h)) > 0

    def test_zero_singular(self):
        with pytest.raises(SingularMatrixError):
            invert_h(np.zeros((3, 3)))

    def test_matches_numpy_inverse(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m = rng.standard_normal((5, 5)) + 5 * np.eye(5)
            assert np.allclose(invert_h(m), np.linalg.inv(m), atol=1e-9)


class TestTopologyBundle:
    def test_presets_have_spanning_tree(self):
        for name in ("bidirectional-leader", "bidirectional", "predecessor-following"):
            for n in (1, 2, 5):
                topo = preset_topology(name, n)
                assert topo.has_spanning_tree()
                assert topo.h_inverse is not None

    def test_paper_preset_matrices(self):
        topo = preset_topology("bidirectional-leader", 4)
        assert np.array_equal(topo.laplacian, L_CHAIN4)
        assert np.array_equal(topo.h, L_CHAIN4 + np.eye(4))

    def test_singular_topology_has_no_inverse(self):
        topo = Topology.from_adjacency(np.zeros((2, 2), dtype=int), np.zeros(2))
        assert topo.h_inverse is None
        with pytest.raises(SingularMatrixError):
            topo.require_h_inverse()


class TestRandomTopologyProperties:
    """200 random symmetric graphs, N <= 16."""

    def test_symmetric_spanning_tree_implies_invertible(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 200:
            n = int(rng.integers(1, 17))
            a = rng.integers(0, 2, size=(n, n))
            a = np.triu(a, 1)
            a = a + a.T
            p = rng.integers(0, 2, size=n)
            if not has_leader_spanning_tree(a, p):
                continue
            topo = Topology.from_adjacency(a, p)
            assert topo.h_inverse is not None
            assert np.max(np.abs(topo.h @ topo.h_inverse - np.eye(n))) <= 1e-10
            # symmetry of H and exact zero row sums of L
            assert np.array_equal(topo.h, topo.h.T)
            assert np.array_equal(topo.laplacian.sum(axis=1), np.zeros(n))
            checked += 1

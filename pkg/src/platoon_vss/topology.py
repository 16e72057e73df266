"""Information-flow topology algebra for the platoon.

Builds adjacency -> Laplacian -> pinning -> H = P + L, checks leader
reachability, and inverts H once at setup so the controller never solves a
linear system per step.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonBinaryEntryError,
    NonSquareError,
    NonzeroDiagonalError,
    SingularMatrixError,
)

PIVOT_TOL = 1e-12
INVERSE_RESIDUAL_TOL = 1e-10

TOPOLOGY_PRESETS = ("bidirectional-leader", "predecessor-following", "bidirectional")


def build_laplacian(adjacency) -> np.ndarray:
    """Graph Laplacian of an unweighted adjacency matrix.

    L[i][j] = -A[i][j] for i != j, L[i][i] = sum_k A[i][k].  Row sums are
    computed in integer arithmetic so they are exactly zero.
    """
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"adjacency must be square, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise NonBinaryEntryError("adjacency entries must be 0 or 1")
    if np.any(np.diag(a) != 0):
        raise NonzeroDiagonalError("adjacency must have zero diagonal (no self-loops)")
    a = a.astype(np.int64)
    lap = -a
    np.fill_diagonal(lap, a.sum(axis=1))
    return lap.astype(float)


def build_h(laplacian, pinning) -> np.ndarray:
    """Coupling matrix H = diag(pinning) + L."""
    lap = np.asarray(laplacian, dtype=float)
    p = np.asarray(pinning, dtype=float)
    if p.ndim != 1 or lap.shape != (p.size, p.size):
        raise DimensionMismatchError(
            f"laplacian {lap.shape} incompatible with pinning of length {p.size}"
        )
    return np.diag(p) + lap


def has_leader_spanning_tree(adjacency, pinning) -> bool:
    """True iff every follower is reachable from the leader.

    BFS on the augmented digraph: edge j -> i when A[i][j] = 1 and an edge
    from the (virtual) leader to i when P[i] = 1.
    """
    a = np.asarray(adjacency)
    p = np.asarray(pinning)
    n = p.size
    seen = np.zeros(n, dtype=bool)
    queue = deque(np.flatnonzero(p != 0))
    seen[list(queue)] = True
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(a[:, j] != 0):
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return bool(seen.all())


def invert_h(h) -> np.ndarray:
    """Invert H by Gauss-Jordan elimination with partial pivoting.

    Raises SingularMatrixError when a pivot magnitude drops below 1e-12,
    which signals a topology that violates the spanning-tree requirement.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonSquareError(f"H must be square, got shape {h.shape}")
    n = h.shape[0]
    work = h.copy()
    inv = np.eye(n)
    for col in range(n):
        pivot_row = col + np.argmax(np.abs(work[col:, col]))
        if abs(work[pivot_row, col]) < PIVOT_TOL:
            raise SingularMatrixError(
                f"pivot {work[pivot_row, col]:.3e} in column {col} below {PIVOT_TOL:g}"
            )
        if pivot_row != col:
            work[[col, pivot_row]] = work[[pivot_row, col]]
            inv[[col, pivot_row]] = inv[[pivot_row, col]]
        pivot = work[col, col]
        work[col] /= pivot
        inv[col] /= pivot
        for row in range(n):
            if row != col and work[row, col] != 0.0:
                factor = work[row, col]
                work[row] -= factor * work[col]
                inv[row] -= factor * inv[col]
    residual = np.max(np.abs(h @ inv - np.eye(n)))
    if residual > INVERSE_RESIDUAL_TOL:
        raise SingularMatrixError(f"inversion residual {residual:.3e} too large")
    return inv


@dataclass(frozen=True)
class Topology:
    """Immutable topology bundle; safe to share across concurrent runs."""

    n: int
    adjacency: np.ndarray
    pinning: np.ndarray
    laplacian: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    h_inverse: np.ndarray | None = field(repr=False)

    @classmethod
    def from_adjacency(cls, adjacency, pinning) -> "Topology":
        a = np.asarray(adjacency)
        p = np.asarray(pinning)
        lap = build_laplacian(a)
        if p.ndim != 1 or p.size != a.shape[0]:
            raise DimensionMismatchError("pinning length must match adjacency size")
        if not np.isin(p, (0, 1)).all():
            raise NonBinaryEntryError("pinning entries must be 0 or 1")
        h = build_h(lap, p)
        try:
            h_inv = invert_h(h)
        except SingularMatrixError:
            h_inv = None
        return cls(
            n=int(a.shape[0]),
            adjacency=a.astype(float),
            pinning=p.astype(float),
            laplacian=lap,
            h=h,
            h_inverse=h_inv,
        )

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def has_spanning_tree(self) -> bool:
        return has_leader_spanning_tree(self.adjacency, self.pinning)

    def require_h_inverse(self) -> np.ndarray:
        if self.h_inverse is None:
            raise SingularMatrixError(
                "H is singular; the topology has no spanning tree from the leader"
            )
        return self.h_inverse


def preset_topology(name: str, n: int) -> Topology:
    """Named topology presets, parameterized by the follower count."""
    if n < 1:
        raise DimensionMismatchError("platoon needs at least one follower")
    a = np.zeros((n, n), dtype=int)
    p = np.zeros(n, dtype=int)
    if name == "bidirectional-leader":
        for i in range(n - 1):
            a[i, i + 1] = a[i + 1, i] = 1
        p[:] = 1
    elif name == "bidirectional":
        for i in range(n - 1):
            a[i, i + 1] = a[i + 1, i] = 1
        p[0] = 1
    elif name == "predecessor-following":
        for i in range(1, n):
            a[i, i - 1] = 1
        p[0] = 1
    else:
        raise ValueError(f"unknown topology preset {name!r}; known: {TOPOLOGY_PRESETS}")
    return Topology.from_adjacency(a, p)

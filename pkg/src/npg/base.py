"""Result containers shared by the estimators."""

from dataclasses import dataclass, field

import numpy as np

ESTIMATOR_TAGS = ("Glasso", "NDS", "NADS", "CLIME", "ACLIME", "MB")


@dataclass
class PrecisionEstimate:
    theta: np.ndarray
    estimator: str
    lam: float
    iterations: int = 0
    converged: bool = True
    symmetrized: str = None
    meta: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.theta.shape[0]


@dataclass(frozen=True)
class GraphSelection:
    """Undirected edge set over ``p`` nodes, edges stored as ``(i, j)`` with ``i < j``."""

    p: int
    edges: frozenset = frozenset()
    signs: dict = field(default=None, compare=False)

    def __post_init__(self):
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loop (%d, %d) in graph" % (i, j))
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError("edge (%d, %d) outside 0..%d" % (i, j, self.p - 1))
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    def __len__(self):
        return len(self.edges)

    def __contains__(self, edge):
        i, j = edge
        return (min(i, j), max(i, j)) in self.edges

    def sorted_edges(self):
        return sorted(self.edges)

    def adjacency(self):
        a = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    @classmethod
    def from_matrix(cls, theta, tol=1e-8):
        """Edges at the off-diagonal entries with ``|theta_ij| > tol`` (either triangle)."""
        theta = np.asarray(theta)
        p = theta.shape[0]
        mask = np.abs(theta) > tol
        mask = mask | mask.T
        iu, ju = np.nonzero(np.triu(mask, 1))
        signs = {}
        for i, j in zip(iu, ju):
            v = theta[i, j] if abs(theta[i, j]) > tol else theta[j, i]
            signs[(int(i), int(j))] = 1 if v > 0 else -1
        return cls(p, frozenset(zip(iu.tolist(), ju.tolist())), signs)

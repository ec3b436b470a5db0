"""Planted precision matrices of a synthetic experiment."""

from ggl_solver.models.ensemble import PrecisionEnsemble


class GroundTruth:
    """True precision matrices with their per-class edge sets and the shared network."""

    def __init__(self, precisions: PrecisionEnsemble, common_edges: set[tuple[int, int]], extra_edges: list[set[tuple[int, int]]], points=None):
        """Initialize the ground truth."""
        self.precisions: PrecisionEnsemble = precisions
        self.common_edges: set[tuple[int, int]] = common_edges
        self.extra_edges: list[set[tuple[int, int]]] = extra_edges
        self.points = points

    @property
    def k_classes(self) -> int:
        """Number of classes K."""
        return self.precisions.k_classes

    @property
    def dim(self) -> int:
        """Number of variables p."""
        return self.precisions.dim

    @property
    def n_common(self) -> int:
        """Edge count N of the common network."""
        return len(self.common_edges)

    def edges(self, k: int) -> set[tuple[int, int]]:
        """Edge set (i < j) of class k."""
        return self.common_edges | self.extra_edges[k]

    def edge_counts(self) -> list[int]:
        """Edge count of every class."""
        return [len(self.edges(k)) for k in range(self.k_classes)]

    def edge_triplets(self, k: int) -> list[list]:
        """Return [i, j, value] for every edge of class k, sorted."""
        block = self.precisions.block(k)
        return [[int(i), int(j), float(block[i, j])] for i, j in sorted(self.edges(k))]

    def to_dict(self) -> dict:
        """Convert the ground truth summary and edges to a dictionary."""
        return {
            'p': self.dim,
            'K': self.k_classes,
            'n_common': self.n_common,
            'edge_counts': self.edge_counts(),
            'common_edges': [[int(i), int(j)] for i, j in sorted(self.common_edges)],
            'edges': [self.edge_triplets(k) for k in range(self.k_classes)],
        }

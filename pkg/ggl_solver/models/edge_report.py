"""Edge recovery report of an estimate against a ground truth."""

from typing import NamedTuple


class EdgeCounts(NamedTuple):
    """True positives, false positives and false negatives of one class."""

    tp: int
    fp: int
    fn: int


class DifferentialCounts(NamedTuple):
    """Differential-edge counts between classes k and k + 1."""

    tp_diff: int
    fp_diff: int


class EdgeReport:
    """Recovery metrics of one estimate."""

    def __init__(self, per_class: list[EdgeCounts], sse: float, differential: list[DifferentialCounts], nnz: int, density: float):
        """Initialize the report."""
        self.per_class: list[EdgeCounts] = per_class
        self.sse: float = sse
        self.differential: list[DifferentialCounts] = differential
        self.nnz: int = nnz
        self.density: float = density

    @property
    def tp(self) -> int:
        """True positives summed over classes."""
        return sum(counts.tp for counts in self.per_class)

    @property
    def fp(self) -> int:
        """False positives summed over classes."""
        return sum(counts.fp for counts in self.per_class)

    @property
    def fn(self) -> int:
        """False negatives summed over classes."""
        return sum(counts.fn for counts in self.per_class)

    @property
    def tp_diff(self) -> int:
        """Differential true positives summed over consecutive class pairs."""
        return sum(counts.tp_diff for counts in self.differential)

    @property
    def fp_diff(self) -> int:
        """Differential false positives summed over consecutive class pairs."""
        return sum(counts.fp_diff for counts in self.differential)

    @property
    def selected(self) -> int:
        """Selected off-diagonal edges summed over classes."""
        return self.tp + self.fp

    def to_dict(self) -> dict:
        """Convert the report to a dictionary."""
        return {
            'per_class': [counts._asdict() for counts in self.per_class],
            'tp': self.tp,
            'fp': self.fp,
            'fn': self.fn,
            'sse': float(self.sse),
            'differential': [counts._asdict() for counts in self.differential],
            'tp_diff': self.tp_diff,
            'fp_diff': self.fp_diff,
            'nnz': int(self.nnz),
            'density': float(self.density),
        }

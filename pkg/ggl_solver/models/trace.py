"""Per-iteration records of the PPDNA and ADMM solvers."""

from dataclasses import asdict, dataclass

import pandas as pd


@dataclass(frozen=True)
class OuterIterationRecord:
    """One accepted proximal point iteration."""

    iteration: int
    sigma: float
    eta_p: float
    pobj: float
    dobj: float
    relgap: float
    newton_iters: int
    cg_iters: int
    wall_ms: float
    subproblem_gap: float = float('nan')
    distance: float | None = None
    stalled: bool = False

    def to_dict(self) -> dict:
        """Convert the record to a dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class AdmmIterationRecord:
    """One ADMM iteration."""

    iteration: int
    sigma: float
    eta_a: float
    pfeas: float
    dfeas: float
    pobj: float
    wall_ms: float

    def to_dict(self) -> dict:
        """Convert the record to a dictionary."""
        return asdict(self)


class _Trace:
    """Append-only list of records with monotone timestamps."""

    COLUMNS: list[str] = []
    RENAMES: dict[str, str] = {}

    def __init__(self):
        """Initialize an empty trace."""
        self.records: list = []

    def append(self, record) -> None:
        """Append a record; timestamps and iteration numbers must not decrease."""
        if self.records:
            last = self.records[-1]
            if record.wall_ms < last.wall_ms:
                raise ValueError(f'trace timestamps must be monotone ({record.wall_ms} < {last.wall_ms})')
            if record.iteration <= last.iteration:
                raise ValueError(f'trace iterations must increase ({record.iteration} after {last.iteration})')
        self.records.append(record)

    def __len__(self) -> int:
        """Number of records."""
        return len(self.records)

    def __iter__(self):
        """Iterate over the records."""
        return iter(self.records)

    @property
    def last(self):
        """The most recent record or None."""
        return self.records[-1] if self.records else None

    def to_frame(self) -> pd.DataFrame:
        """Return the records as a DataFrame with the export columns."""
        frame = pd.DataFrame([record.to_dict() for record in self.records], columns=self._fields())
        return frame.rename(columns=self.RENAMES)[self.COLUMNS]

    def to_csv(self, path) -> None:
        """Write the export columns to a CSV file."""
        self.to_frame().to_csv(path, index=False)

    def _fields(self) -> list[str]:
        raise NotImplementedError


class SolveTrace(_Trace):
    """Trace of a PPDNA solve, optionally with the relative distance to a reference solution."""

    COLUMNS = ['iter', 'sigma', 'eta_p', 'pobj', 'dobj', 'relgap', 'newton_iters', 'cg_iters', 'wall_ms']
    RENAMES = {'iteration': 'iter'}

    def __init__(self):
        """Initialize an empty trace."""
        super().__init__()
        self.iterates: list[tuple] = []
        self.warm_start_iters: int = 0
        self.last_grad_history: list[float] = []
        self.converged: bool = False

    def _fields(self) -> list[str]:
        return list(OuterIterationRecord.__dataclass_fields__)

    @property
    def outer_iters(self) -> int:
        """Number of accepted proximal point iterations; record 0 is the starting point."""
        return self.records[-1].iteration if self.records else 0

    @property
    def total_newton_iters(self) -> int:
        """Newton iterations summed over all subproblems."""
        return sum(record.newton_iters for record in self.records)

    @property
    def total_cg_iters(self) -> int:
        """CG iterations summed over all subproblems."""
        return sum(record.cg_iters for record in self.records)

    def distances(self) -> list[float]:
        """Relative distances d_t recorded against a reference solution."""
        return [record.distance for record in self.records if record.distance is not None]

    def to_dict(self) -> dict:
        """Summarize the trace."""
        last = self.last
        return {
            'converged': bool(self.converged),
            'outer_iters': self.outer_iters,
            'newton_iters': self.total_newton_iters,
            'cg_iters': self.total_cg_iters,
            'warm_start_iters': int(self.warm_start_iters),
            'eta_p': float(last.eta_p) if last else None,
            'pobj': float(last.pobj) if last else None,
            'dobj': float(last.dobj) if last else None,
            'relgap': float(last.relgap) if last else None,
            'wall_ms': float(last.wall_ms) if last else 0.0,
        }


class AdmmTrace(_Trace):
    """Trace of an ADMM solve."""

    COLUMNS = ['iter', 'sigma', 'eta_a', 'pfeas', 'dfeas', 'pobj', 'wall_ms']
    RENAMES = {'iteration': 'iter'}

    def __init__(self):
        """Initialize an empty trace."""
        super().__init__()
        self.converged: bool = False
        self.iterations: int = 0

    def _fields(self) -> list[str]:
        return list(AdmmIterationRecord.__dataclass_fields__)

    def to_dict(self) -> dict:
        """Summarize the trace."""
        last = self.last
        return {
            'converged': bool(self.converged),
            'iterations': int(self.iterations),
            'eta_a': float(last.eta_a) if last else None,
            'pobj': float(last.pobj) if last else None,
            'sigma': float(last.sigma) if last else None,
            'wall_ms': float(last.wall_ms) if last else 0.0,
        }

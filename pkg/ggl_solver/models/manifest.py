"""Model for a problem manifest."""

MODES = ('covariance', 'observations')


class ProblemManifest:
    """Index of the per-class files of one problem."""

    def __init__(self, mode: str, dim: int, k_classes: int, files: list[str], sample_counts: list[int] | None = None):
        """Initialize the manifest."""
        if mode not in MODES:
            raise ValueError(f'manifest mode must be one of {MODES}, got {mode!r}')
        if len(files) != k_classes:
            raise ValueError(f'manifest lists {len(files)} files for K={k_classes}')
        if sample_counts is not None and len(sample_counts) != k_classes:
            raise ValueError(f'manifest lists {len(sample_counts)} sample counts for K={k_classes}')
        self.mode: str = mode
        self.dim: int = dim
        self.k_classes: int = k_classes
        self.files: list[str] = files
        self.sample_counts: list[int] | None = sample_counts

    def to_dict(self) -> dict:
        """Convert the manifest to a dictionary."""
        manifest = {
            'mode': self.mode,
            'p': int(self.dim),
            'K': int(self.k_classes),
            'files': list(self.files),
        }
        if self.sample_counts is not None:
            manifest['n'] = [int(n) for n in self.sample_counts]
        return manifest

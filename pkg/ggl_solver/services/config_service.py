"""Service to handle the solver configuration."""

import json
import os

from ggl_solver.errors import ProblemFileError
from ggl_solver.models.config import AdmmConfig, NewtonConfig, PpdnaConfig, WarmStartConfig

SECTIONS = ('newton', 'ppdna', 'warm_start', 'admm')
PPDNA_KEYS = ('epsilon', 'sigma0', 'sigma_growth', 'sigma_max', 'eps0', 'gamma0', 'schedule_ratio', 'max_outer_iters', 'record_iterates')


class ConfigService:
    """Load solver configuration from built-in defaults, an optional JSON file and cli overrides."""

    def __init__(self, config_file: str | None = None):
        """Initialize the configuration, reading the file if one is given."""
        config_data: dict = {}
        if config_file is not None:
            if not os.path.exists(config_file):
                raise ProblemFileError(f'config file not found: {config_file}', [config_file])
            try:
                with open(config_file, 'r') as file:
                    config_data = json.load(file)
            except json.JSONDecodeError as error:
                raise ProblemFileError(f'malformed config file {config_file}: {error}', [config_file]) from error
            if not isinstance(config_data, dict):
                raise ProblemFileError(f'config file {config_file} must hold a JSON object', [config_file])
        unknown = set(config_data) - set(SECTIONS)
        if unknown:
            raise ValueError(f'unknown config sections: {sorted(unknown)}')

        self.ppdna: PpdnaConfig = self._parsePpdna(config_data.get('ppdna', {}), config_data.get('newton', {}), config_data.get('warm_start', {}))
        self.admm: AdmmConfig = self._parseAdmm(config_data.get('admm', {}))
        self.validate()

    def _checkKeys(self, section: str, values: dict, allowed) -> None:
        """Reject keys a config section does not know."""
        unknown = set(values) - set(allowed)
        if unknown:
            raise ValueError(f'unknown keys in config section {section!r}: {sorted(unknown)}')

    def _parseNewton(self, newton_data: dict) -> NewtonConfig:
        """Create the Newton parameters from the config file."""
        self._checkKeys('newton', newton_data, NewtonConfig().to_dict())
        return NewtonConfig(**newton_data)

    def _parseWarmStart(self, warm_start_data: dict) -> WarmStartConfig:
        """Create the warm start parameters from the config file."""
        self._checkKeys('warm_start', warm_start_data, WarmStartConfig().to_dict())
        return WarmStartConfig(**warm_start_data)

    def _parsePpdna(self, ppdna_data: dict, newton_data: dict, warm_start_data: dict) -> PpdnaConfig:
        """Create the proximal point parameters from the config file."""
        self._checkKeys('ppdna', ppdna_data, PPDNA_KEYS)
        return PpdnaConfig(**ppdna_data, newton=self._parseNewton(newton_data), warm_start=self._parseWarmStart(warm_start_data))

    def _parseAdmm(self, admm_data: dict) -> AdmmConfig:
        """Create the ADMM parameters from the config file."""
        self._checkKeys('admm', admm_data, AdmmConfig().to_dict())
        return AdmmConfig(**admm_data)

    def validate(self) -> None:
        """Validate every section."""
        self.ppdna.validate()
        self.admm.validate()

    def apply_overrides(
        self,
        epsilon: float | None = None,
        sigma0: float | None = None,
        sigma_growth: float | None = None,
        sigma_max: float | None = None,
        max_outer_iters: int | None = None,
        warm_start: bool | None = None,
        admm_tau: float | None = None,
        admm_max_iters: int | None = None,
        record_iterates: bool | None = None,
    ) -> None:
        """Merge cli flags over the loaded values; None leaves a value unchanged."""
        if epsilon is not None:
            self.ppdna.epsilon = epsilon
            self.admm.tol = epsilon
        if sigma0 is not None:
            self.ppdna.sigma0 = sigma0
            self.ppdna.sigma_max = max(self.ppdna.sigma_max, sigma0)
        if sigma_growth is not None:
            self.ppdna.sigma_growth = sigma_growth
        if sigma_max is not None:
            self.ppdna.sigma_max = sigma_max
        if max_outer_iters is not None:
            self.ppdna.max_outer_iters = max_outer_iters
        if warm_start is not None:
            self.ppdna.warm_start.enabled = warm_start
        if admm_tau is not None:
            self.admm.tau = admm_tau
        if admm_max_iters is not None:
            self.admm.max_iters = admm_max_iters
        if record_iterates is not None:
            self.ppdna.record_iterates = record_iterates
        self.validate()

    def to_dict(self) -> dict:
        """Convert the effective configuration to a dictionary."""
        ppdna = self.ppdna.to_dict()
        return {
            'newton': ppdna.pop('newton'),
            'warm_start': ppdna.pop('warm_start'),
            'ppdna': ppdna,
            'admm': self.admm.to_dict(),
        }

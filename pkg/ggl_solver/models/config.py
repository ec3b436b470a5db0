"""Store the solver configuration for the PPDNA and ADMM solvers."""

import math


class NewtonConfig:
    """Parameters of the semismooth Newton inner solver."""

    def __init__(
        self,
        eta_bar: float = 0.1,
        tau: float = 0.2,
        mu: float = 1e-4,
        rho: float = 0.5,
        max_newton_iters: int = 200,
        max_cg_iters: int = 500,
        max_linesearch_steps: int = 50,
    ):
        """Initialize the Newton parameters."""
        self.eta_bar: float = eta_bar
        self.tau: float = tau
        self.mu: float = mu
        self.rho: float = rho
        self.max_newton_iters: int = max_newton_iters
        self.max_cg_iters: int = max_cg_iters
        self.max_linesearch_steps: int = max_linesearch_steps

    def validate(self) -> None:
        """Raise ValueError if a parameter is out of range."""
        if not 0 < self.eta_bar < 1:
            raise ValueError(f'eta_bar must lie in (0, 1), got {self.eta_bar}')
        if not 0 < self.tau <= 1:
            raise ValueError(f'tau must lie in (0, 1], got {self.tau}')
        if not 0 < self.mu < 0.5:
            raise ValueError(f'mu must lie in (0, 1/2), got {self.mu}')
        if not 0 < self.rho < 1:
            raise ValueError(f'rho must lie in (0, 1), got {self.rho}')
        _check_positive_int('max_newton_iters', self.max_newton_iters)
        _check_positive_int('max_cg_iters', self.max_cg_iters)
        _check_positive_int('max_linesearch_steps', self.max_linesearch_steps)

    def to_dict(self) -> dict:
        """Convert the Newton parameters to a dictionary."""
        return {
            'eta_bar': float(self.eta_bar),
            'tau': float(self.tau),
            'mu': float(self.mu),
            'rho': float(self.rho),
            'max_newton_iters': int(self.max_newton_iters),
            'max_cg_iters': int(self.max_cg_iters),
            'max_linesearch_steps': int(self.max_linesearch_steps),
        }


class WarmStartConfig:
    """ADMM warm start run before the first proximal point iteration."""

    def __init__(self, enabled: bool = True, max_iters: int = 3000, tol_multiplier: float = 100.0):
        """Initialize the warm start parameters."""
        self.enabled: bool = enabled
        self.max_iters: int = max_iters
        self.tol_multiplier: float = tol_multiplier

    def validate(self) -> None:
        """Raise ValueError if a parameter is out of range."""
        _check_positive_int('warm_start.max_iters', self.max_iters)
        if not self.tol_multiplier > 0:
            raise ValueError(f'warm_start.tol_multiplier must be positive, got {self.tol_multiplier}')

    def to_dict(self) -> dict:
        """Convert the warm start parameters to a dictionary."""
        return {
            'enabled': bool(self.enabled),
            'max_iters': int(self.max_iters),
            'tol_multiplier': float(self.tol_multiplier),
        }


class PpdnaConfig:
    """Parameters of the outer proximal point loop."""

    def __init__(
        self,
        epsilon: float = 1e-6,
        sigma0: float = 1.0,
        sigma_growth: float = 1.3,
        sigma_max: float = 1e8,
        eps0: float = 0.5,
        gamma0: float = 0.5,
        schedule_ratio: float = 2.0,
        max_outer_iters: int = 200,
        record_iterates: bool = False,
        newton: NewtonConfig | None = None,
        warm_start: WarmStartConfig | None = None,
    ):
        """Initialize the proximal point parameters."""
        self.epsilon: float = epsilon
        self.sigma0: float = sigma0
        self.sigma_growth: float = sigma_growth
        self.sigma_max: float = sigma_max
        self.eps0: float = eps0
        self.gamma0: float = gamma0
        self.schedule_ratio: float = schedule_ratio
        self.max_outer_iters: int = max_outer_iters
        self.record_iterates: bool = record_iterates
        self.newton: NewtonConfig = newton or NewtonConfig()
        self.warm_start: WarmStartConfig = warm_start or WarmStartConfig()

    def validate(self) -> None:
        """Raise ValueError if a parameter is out of range."""
        if not self.epsilon > 0:
            raise ValueError(f'epsilon must be positive, got {self.epsilon}')
        if not self.sigma0 > 0:
            raise ValueError(f'sigma0 must be positive, got {self.sigma0}')
        if not self.sigma_growth >= 1:
            raise ValueError(f'sigma_growth must be at least 1, got {self.sigma_growth}')
        if not self.sigma_max >= self.sigma0:
            raise ValueError(f'sigma_max ({self.sigma_max}) must not be below sigma0 ({self.sigma0})')
        if not self.eps0 > 0:
            raise ValueError(f'eps0 must be positive, got {self.eps0}')
        if not 0 < self.gamma0 < 1:
            raise ValueError(f'gamma0 must lie in (0, 1), got {self.gamma0}')
        if not self.schedule_ratio > 1:
            raise ValueError(f'schedule_ratio must exceed 1, got {self.schedule_ratio}')
        _check_positive_int('max_outer_iters', self.max_outer_iters)
        self.newton.validate()
        self.warm_start.validate()

    def to_dict(self) -> dict:
        """Convert the proximal point parameters to a dictionary."""
        return {
            'epsilon': float(self.epsilon),
            'sigma0': float(self.sigma0),
            'sigma_growth': float(self.sigma_growth),
            'sigma_max': float(self.sigma_max),
            'eps0': float(self.eps0),
            'gamma0': float(self.gamma0),
            'schedule_ratio': float(self.schedule_ratio),
            'max_outer_iters': int(self.max_outer_iters),
            'record_iterates': bool(self.record_iterates),
            'newton': self.newton.to_dict(),
            'warm_start': self.warm_start.to_dict(),
        }


class AdmmConfig:
    """Parameters of the ADMM baseline."""

    def __init__(
        self,
        sigma: float = 1.0,
        tau: float = 1.618,
        tol: float = 1e-6,
        max_iters: int = 20000,
        adapt: bool = True,
        adapt_ratio: float = 10.0,
        adapt_factor: float = 1.5,
        adapt_period: int = 50,
        sigma_min: float = 1e-6,
        sigma_max: float = 1e6,
    ):
        """Initialize the ADMM parameters."""
        self.sigma: float = sigma
        self.tau: float = tau
        self.tol: float = tol
        self.max_iters: int = max_iters
        self.adapt: bool = adapt
        self.adapt_ratio: float = adapt_ratio
        self.adapt_factor: float = adapt_factor
        self.adapt_period: int = adapt_period
        self.sigma_min: float = sigma_min
        self.sigma_max: float = sigma_max

    def validate(self) -> None:
        """Raise ValueError if a parameter is out of range."""
        if not self.sigma > 0:
            raise ValueError(f'sigma must be positive, got {self.sigma}')
        if not 0 < self.tau < (1 + math.sqrt(5)) / 2:
            raise ValueError(f'tau must lie in (0, (1 + sqrt(5)) / 2), got {self.tau}')
        if not self.tol >= 0:
            raise ValueError(f'tol must be nonnegative, got {self.tol}')
        _check_positive_int('max_iters', self.max_iters)
        _check_positive_int('adapt_period', self.adapt_period)
        if not self.adapt_ratio > 1 or not self.adapt_factor > 1:
            raise ValueError('adapt_ratio and adapt_factor must exceed 1')
        if not 0 < self.sigma_min <= self.sigma_max:
            raise ValueError(f'invalid sigma clamp [{self.sigma_min}, {self.sigma_max}]')

    def to_dict(self) -> dict:
        """Convert the ADMM parameters to a dictionary."""
        return {
            'sigma': float(self.sigma),
            'tau': float(self.tau),
            'tol': float(self.tol),
            'max_iters': int(self.max_iters),
            'adapt': bool(self.adapt),
            'adapt_ratio': float(self.adapt_ratio),
            'adapt_factor': float(self.adapt_factor),
            'adapt_period': int(self.adapt_period),
            'sigma_min': float(self.sigma_min),
            'sigma_max': float(self.sigma_max),
        }


def _check_positive_int(name: str, value: int) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f'{name} must be a positive integer, got {value}')

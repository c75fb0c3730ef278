"""Configuration management for bigcm."""

import importlib
import os
from typing import Any, Dict


class Config:
    """Runtime configuration with environment-specific loading."""

    # Default attributes (overridden by the env module)
    env: str = "dev"
    log_to_file: bool = False
    log_level: str = "INFO"
    factor_bound: int = 10**12
    disc_bound: int = 10**6
    default_precision: int = 128
    trace_bound: int = 200
    cache_dir: str = ".bigcm-cache"
    divisor_threshold: float = 1e-6
    bt_ord_mode: str = "td"
    petersson_model: str = "sl2"
    xi_height_factor: int = 10
    workers: int = 4
    tail_tolerance: float = 1e-6
    modularity_tolerance: float = 1e-8
    identity_tolerance: float = 1e-3
    service_name: str = "bigcm"
    version: str = "1.0"

    def __init__(self):
        self.env = os.getenv("BIGCM_ENV", "dev").lower()
        self._load_env_config()
        self._validate_config()

    def _load_env_config(self):
        """Load configuration from the environment-specific module."""
        try:
            env_module = importlib.import_module(f"config.{self.env}")
        except ImportError:
            raise ValueError(f"Configuration for environment '{self.env}' not found. "
                             f"Create config/{self.env}.py")

        for attr in dir(env_module):
            if not attr.startswith('_'):
                setattr(self, attr, getattr(env_module, attr))

    def _validate_config(self):
        """Validate bounds and enumerated settings."""
        positive = ['factor_bound', 'disc_bound', 'trace_bound', 'workers',
                    'xi_height_factor', 'tail_tolerance', 'modularity_tolerance',
                    'identity_tolerance', 'divisor_threshold']
        bad = [name for name in positive if getattr(self, name, 0) <= 0]
        if bad:
            raise ValueError(f"Configuration values must be positive: {', '.join(bad)}")

        if self.default_precision < 64:
            raise ValueError("default_precision must be at least 64 bits")

        if self.bt_ord_mode not in ("td", "tdd"):
            raise ValueError("bt_ord_mode must be 'td' or 'tdd'")

        if self.petersson_model not in ("sl2", "gamma"):
            raise ValueError("petersson_model must be 'sl2' or 'gamma'")

    def as_dict(self) -> Dict[str, Any]:
        """Settings that influence numerical results (used in cache keys)."""
        return {
            'bt_ord_mode': self.bt_ord_mode,
            'petersson_model': self.petersson_model,
            'xi_height_factor': self.xi_height_factor,
            'tail_tolerance': self.tail_tolerance,
        }

    def reload(self):
        """Reload configuration (tests change env vars between cases)."""
        self.env = os.getenv("BIGCM_ENV", self.env).lower()
        self._load_env_config()
        self._validate_config()


# Global config instance
config = Config()

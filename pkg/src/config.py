"""Configuration management for the Floquet rigidity toolkit."""
import json
import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
env_path = Path(__file__).parent.parent / '.env'
load_dotenv(dotenv_path=env_path)

logger = logging.getLogger(__name__)

# Used when config/rigidity_defaults.json is missing or unreadable
_BUILTIN_SUITE_DEFAULTS = {
    "main2": {"trials": 50, "tolerance": 1e-9},
    "main3": {"trials": 25, "tolerance": 1e-8},
    "key": {"trials": 50, "tolerance": 1e-9},
    "tri": {"trials": 25, "tolerance": 1e-9},
}


class Config:
    """Toolkit configuration loaded from environment variables."""

    # Seeds
    FLOQUET_SEED: int = int(os.getenv('FLOQUET_SEED', '7') or '7')

    # Tolerances (all relative to a scale, see the modules that use them)
    ISOSPECTRAL_TOL: float = float(os.getenv('FLOQUET_TOL', '1e-9') or '1e-9')
    SEPARABILITY_TOL: float = float(os.getenv('FLOQUET_SEPARABILITY_TOL', '1e-9') or '1e-9')
    INTERP_TOL: float = float(os.getenv('FLOQUET_INTERP_TOL', '1e-10') or '1e-10')
    EXTRACT_TOL: float = float(os.getenv('FLOQUET_EXTRACT_TOL', '1e-8') or '1e-8')
    # Coefficients below CHOP_TOL * scale are dropped from recovered polynomials
    CHOP_TOL: float = float(os.getenv('FLOQUET_CHOP_TOL', '1e-13') or '1e-13')

    # Extra roots-of-unity samples on each side of a degree window (0 = minimal grid)
    GRID_PAD: int = int(os.getenv('FLOQUET_GRID_PAD', '1') or '1')

    # Experiments
    TRIALS: int = int(os.getenv('FLOQUET_TRIALS', '50') or '50')

    # Logging
    LOG_LEVEL: str = os.getenv('FLOQUET_LOG_LEVEL', 'INFO')
    LOG_FILE: str = os.getenv('FLOQUET_LOG_FILE', '')

    # Paths
    BASE_DIR: Path = Path(__file__).parent.parent
    CONFIG_DIR: Path = BASE_DIR / 'config'
    RIGIDITY_DEFAULTS_FILE: Path = CONFIG_DIR / 'rigidity_defaults.json'

    @classmethod
    def validate(cls) -> bool:
        """Validate that numeric configuration is usable."""
        return not cls.get_invalid_config()

    @classmethod
    def get_invalid_config(cls) -> list[str]:
        """Get list of configuration keys holding unusable values."""
        invalid = []
        for key in ('ISOSPECTRAL_TOL', 'SEPARABILITY_TOL', 'INTERP_TOL', 'EXTRACT_TOL', 'CHOP_TOL'):
            if not getattr(cls, key) > 0:
                invalid.append(key)
        if cls.GRID_PAD < 0:
            invalid.append('GRID_PAD')
        if cls.TRIALS < 1:
            invalid.append('TRIALS')
        return invalid

    @classmethod
    def suite_defaults(cls, suite: str) -> dict:
        """
        Per-suite defaults (trials, tolerance) from the JSON defaults file.

        Falls back to built-in values when the file is missing or malformed.
        """
        defaults = dict(_BUILTIN_SUITE_DEFAULTS.get(suite, {"trials": cls.TRIALS, "tolerance": cls.ISOSPECTRAL_TOL}))
        try:
            if cls.RIGIDITY_DEFAULTS_FILE.exists():
                with open(cls.RIGIDITY_DEFAULTS_FILE, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                defaults.update(data.get(suite, {}))
            else:
                logger.warning(f"Rigidity defaults file not found: {cls.RIGIDITY_DEFAULTS_FILE}")
        except Exception as e:
            logger.error(f"Error loading rigidity defaults: {e}", exc_info=True)
        return defaults

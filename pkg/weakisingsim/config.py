"""Configuration access for the numerical modules.

Thin lazy wrapper around the settings system so that importing a numerical
module never reads YAML or prints anything.
"""

from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

_settings = None


def _get_settings():
    """Lazy load settings."""
    global _settings
    if _settings is None:
        from weakisingsim.settings import get_settings

        _settings = get_settings()
    return _settings


def reset_config():
    """Drop the cached settings (after get_settings(reload=True) in tests)."""
    global _settings
    _settings = None


# Project paths
PROJECT_ROOT = Path(__file__).parent.parent
ARTIFACTS_DIR = PROJECT_ROOT / "artifacts"
RESULTS_DIR = ARTIFACTS_DIR / "results"
LOGS_DIR = ARTIFACTS_DIR / "logs"


class _ConfigProxy:
    """Proxy for lazy config loading."""

    def __init__(self, section: str):
        self._section = section

    def _data(self) -> dict:
        return getattr(_get_settings(), self._section).model_dump()

    def __getitem__(self, key):
        return self._data()[key]

    def __contains__(self, key):
        return key in self._data()

    def get(self, key, default=None):
        return self._data().get(key, default)


NUMERICS_CONFIG = _ConfigProxy("numerics")
FIT_CONFIG = _ConfigProxy("fit")
RUN_CONFIG = _ConfigProxy("run")

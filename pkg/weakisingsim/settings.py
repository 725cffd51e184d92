"""Settings loaded from an optional YAML file with validated defaults."""

import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field


class NumericsSettings(BaseModel):
    """Tolerances of the Gaussian engine and the dense oracle."""

    purity_tolerance: float = Field(default=1e-8, gt=0.0, le=1e-4)  # warn level
    purity_failure: float = Field(default=1e-6, gt=0.0, le=1e-2)  # hard failure
    antisymmetry_tolerance: float = Field(default=1e-10, gt=0.0, le=1e-4)
    impossible_probability: float = Field(default=1e-12, ge=0.0, le=1e-6)
    oracle_impossible_probability: float = Field(default=1e-14, ge=0.0, le=1e-6)
    underflow_log: float = Field(default=-700.0, le=0.0)
    dense_diagonalization_max: int = Field(default=12, ge=2, le=14)
    lanczos_tolerance: float = Field(default=1e-12, gt=0.0, le=1e-6)
    max_oracle_length: int = Field(default=16, ge=2, le=20)


class FitSettings(BaseModel):
    """Default windows of the entropy and correlator fits."""

    window_low_fraction: float = Field(default=0.125, ge=0.0, lt=0.5)
    window_high_fraction: float = Field(default=0.875, gt=0.5, le=1.0)
    min_points: int = Field(default=4, ge=2)
    power_law_r_min: int = Field(default=8, ge=1)
    power_law_r_max_fraction: float = Field(default=0.125, gt=0.0, le=0.5)


class RunSettings(BaseModel):
    """Experiment harness behaviour."""

    threads: Optional[int] = Field(default=None, ge=1)  # None = all cores
    seed: int = Field(default=20240101, ge=0, lt=2**64)
    verbose: bool = True
    progress: bool = True
    results_dir: str = "artifacts/results"
    lambda_grid: str = "0:0.9:10"


class ExperimentDefaults(BaseModel):
    """Command parameters that may be fixed in YAML; flags still win."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    length: Optional[int] = Field(default=None, ge=2)
    lengths: Optional[list[int]] = None
    lam: Optional[float] = Field(default=None, ge=0.0, le=1.0, alias="lambda")
    scheme: Optional[str] = None
    p_plus: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    delta_p: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    sign: Optional[Literal[1, -1]] = None
    trajectories: Optional[int] = Field(default=None, ge=1)
    cuts: Optional[list[int]] = None
    format: Optional[Literal["csv", "json"]] = None
    axis: Optional[Literal["x", "z"]] = None
    curve: Optional[str] = None
    zz_max_separation: Optional[int] = Field(default=None, ge=1)

    def overrides(self) -> dict:
        return self.model_dump(exclude_none=True)


class Settings:
    """Main settings: YAML overrides on top of validated defaults."""

    def __init__(self, config_path: Optional[Path] = None, quiet: bool = False):
        """Initialize settings.

        Args:
            config_path: Path to a YAML file; defaults to $WEAKISINGSIM_CONFIG
                or config.yaml at the project root
            quiet: Suppress the banner even when verbose is configured
        """
        self.config_path = self._resolve_path(config_path)
        user_config = self._load_yaml(self.config_path)

        self.numerics = NumericsSettings(**user_config.get("numerics", {}))
        self.fit = FitSettings(**user_config.get("fit", {}))
        self.run = RunSettings(**user_config.get("run", {}))
        self.experiment = ExperimentDefaults(**user_config.get("experiment", {}))

        if self.run.verbose and not quiet:
            self._print_banner()

    @staticmethod
    def _resolve_path(config_path: Optional[Path]) -> Optional[Path]:
        if config_path is not None:
            return Path(config_path)
        env_path = os.getenv("WEAKISINGSIM_CONFIG")
        if env_path:
            return Path(env_path)
        return Path(__file__).parent.parent / "config.yaml"

    @staticmethod
    def _load_yaml(config_path: Optional[Path]) -> dict:
        """Load YAML config file if it exists."""
        if config_path is not None and config_path.exists():
            with open(config_path) as f:
                return yaml.safe_load(f) or {}
        return {}

    def as_dict(self) -> dict:
        return {
            "numerics": self.numerics.model_dump(),
            "fit": self.fit.model_dump(),
            "run": self.run.model_dump(),
            "experiment": self.experiment.overrides(),
        }

    def _print_banner(self):
        """Print configuration banner."""
        threads = self.run.threads or os.cpu_count()
        print("=" * 70)
        print("🧲 weakisingsim - weak measurements on the critical Ising chain")
        print("=" * 70)
        print(f"📄 Config: {self.config_path}")
        print(f"🎲 Default seed: {self.run.seed}")
        print(f"🧵 Threads: {threads}")
        print(
            f"🎯 Fit window: [{self.fit.window_low_fraction:.3f}, "
            f"{self.fit.window_high_fraction:.3f}] of L"
        )
        print("=" * 70)
        print()


# Singleton
_settings: Optional[Settings] = None


def get_settings(
    config_path: Optional[Path] = None, reload: bool = False, quiet: bool = True
) -> Settings:
    """Get or create the settings instance.

    Args:
        config_path: Path to a YAML config file
        reload: Force reload of settings
        quiet: Suppress the banner
    """
    global _settings

    if _settings is None or reload:
        _settings = Settings(config_path, quiet=quiet)

    return _settings

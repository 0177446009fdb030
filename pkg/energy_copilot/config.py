"""
Configuration Management for Energy Copilot
=============================================
Loads settings from environment variables with sensible defaults.
Uses pydantic-settings for validation and type safety.
"""

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # --- Reproducibility ---
    default_seed: int = Field(default=42, description="Seed used when none is given")

    # --- Machine (characterization grid) ---
    freq_min_ghz: float = Field(default=1.2, description="Lowest admissible core frequency")
    freq_max_ghz: float = Field(default=2.2, description="Highest admissible core frequency")
    freq_step_ghz: float = Field(default=0.1, description="Frequency grid step")
    cores_per_socket: int = Field(default=16, description="Physical cores per socket")
    num_sockets: int = Field(default=2, description="Sockets on the node")

    # --- Performance model (epsilon-SVR) ---
    svr_c: float = Field(default=1e4, description="SVR penalty C")
    svr_gamma: float = Field(default=0.5, description="RBF kernel width")
    svr_epsilon: float = Field(default=0.01, description="Tube half-width, standardized units")
    svr_tol: float = Field(default=1e-3, description="Duality gap and residual tolerance for accepting the solver")
    svr_max_iter: int = Field(default=100, description="Interior-point iteration cap")
    kfold: int = Field(default=10, description="Cross-validation folds")
    train_fraction: float = Field(default=0.9, description="Holdout split train share")
    grid_jobs: int = Field(default=1, description="Concurrent grid-search workers")

    # --- Power measurements ---
    warmup_s: float = Field(default=0.0, description="Seconds dropped from each power trace")

    # --- Synthetic bench ---
    synth_w0_ghz_s: float = Field(default=400.0, description="Base work per input-size unit")
    synth_samples_per_config: int = Field(default=60, description="Samples per synthetic power trace")

    # --- Logging ---
    log_level: str = Field(default="INFO", description="Logging level")
    log_format: str = Field(default="text", description="Logging format: json or text")

    model_config = {"env_file": ".env", "env_file_encoding": "utf-8", "extra": "ignore"}

    def machine(self):
        """Build the default MachineSpec from the machine fields."""
        from energy_copilot.models.power_model import MachineSpec

        return MachineSpec.from_range(
            self.freq_min_ghz,
            self.freq_max_ghz,
            self.freq_step_ghz,
            cores_per_socket=self.cores_per_socket,
            num_sockets=self.num_sockets,
        )


# Singleton instance
settings = Settings()

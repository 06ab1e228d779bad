import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from src.core.constants import Constants
from src.core.exceptions import ConfigError
from src.models.config import AblationConfig, RunConfig


class Config:
    """Holds the process-wide settings."""

    def __init__(self):
        # Load all settings from environment variables first as a base default
        self.log_level: str = os.environ.get("LOG_LEVEL", "INFO")
        self.data_dir: str = os.environ.get("PALORA_DATA_DIR", "data")
        self.output_dir: str = os.environ.get("PALORA_OUTPUT_DIR", "runs")
        self.eval_workers: int = int(os.environ.get("PALORA_EVAL_WORKERS", 1))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "LOG_LEVEL": self.log_level,
            "PALORA_DATA_DIR": self.data_dir,
            "PALORA_OUTPUT_DIR": self.output_dir,
            "PALORA_EVAL_WORKERS": self.eval_workers,
        }


class ConfigManager:
    """Loads JSON run configs and layers them over the environment settings."""

    def __init__(self):
        self.config = Config()

    def _read_json(self, path: Union[str, Path]) -> Dict[str, Any]:
        try:
            with open(path, "r") as f:
                return json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Config file '{path}' not found")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file '{path}' is not valid JSON: {e}")

    def resolve_data_path(self, path: str) -> str:
        """Relative dataset paths are taken against PALORA_DATA_DIR."""
        if os.path.isabs(path) or os.path.exists(path):
            return path
        return os.path.join(self.config.data_dir, path)

    def parse_run_config(
        self,
        data: Dict[str, Any],
        seed_override: Optional[int] = None,
        out_override: Optional[str] = None,
    ) -> RunConfig:
        data = json.loads(json.dumps(data))
        if seed_override is not None:
            data.setdefault("train", {})["seed"] = seed_override
            schedule = data["train"].get("schedule")
            if isinstance(schedule, dict):
                schedule["seed"] = None
        if out_override is not None:
            data["outputs"] = out_override
        try:
            run_config = RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid run config: {e}")
        self.validate_paths(run_config)
        return run_config

    def validate_paths(self, run_config: RunConfig):
        if run_config.data.kind != Constants.DATA_MULTIMNIST:
            return
        spec = run_config.data.multimnist
        spec.images_path = self.resolve_data_path(spec.images_path)
        spec.labels_path = self.resolve_data_path(spec.labels_path)
        for path in (spec.images_path, spec.labels_path):
            if not os.path.exists(path):
                raise ConfigError(f"Dataset file '{path}' does not exist")

    def load_run_config(
        self,
        path: Union[str, Path],
        seed_override: Optional[int] = None,
        out_override: Optional[str] = None,
    ) -> RunConfig:
        return self.parse_run_config(self._read_json(path), seed_override, out_override)

    def load_ablation_config(self, path: Union[str, Path]) -> AblationConfig:
        data = self._read_json(path)
        try:
            ablation = AblationConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid ablation config: {e}")
        self.validate_paths(ablation.base)
        return ablation


# Global instance of the ConfigManager
config_manager = ConfigManager()
config = config_manager.config

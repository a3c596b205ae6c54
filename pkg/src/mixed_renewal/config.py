"""Experiment configuration files."""

import copy
import logging
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from mixed_renewal.constant import DEFAULT_EXPERIMENT
from mixed_renewal.exchangeable import DirichletProcess, ErlangGamma, ModelSpec, model_from_dict
from mixed_renewal.renewal_equation import DriftFunction

logger = logging.getLogger(__name__)


def _merge(base: dict, update: dict) -> dict:
    """Recursively overlay ``update`` on ``base``; mappings replace only the keys they name."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ExperimentConfig:
    """Experiment settings loaded over the defaults."""

    def __init__(self, yaml_path: str | Path | None = None) -> None:
        """Load a YAML file, or keep the defaults when no path is given."""
        self.path = Path(yaml_path) if yaml_path is not None else None
        data: dict = {}
        if self.path is not None:
            with open(self.path, "r") as config_file:
                data = yaml.safe_load(config_file) or {}
            if not isinstance(data, dict):
                raise ValueError(f"{self.path} must hold a mapping at the top level")
            logger.debug(f"Loaded experiment config {self.path}")
        self.data = _merge(DEFAULT_EXPERIMENT, data)

    def override(self, **flags: Any) -> "ExperimentConfig":
        """Replace settings by command-line values that are not None.

        Dotted names address nested keys, for example ``grid.stop``.
        """
        for name, value in flags.items():
            if value is None:
                continue
            node = self.data
            *parents, leaf = name.split(".")
            for parent in parents:
                node = node.setdefault(parent, {})
            node[leaf] = value
        return self

    def get_model(self) -> ModelSpec:
        """Get the model specification."""
        return model_from_dict(self.data["model"])

    def get_grid(self) -> np.ndarray:
        """Get the time grid start, start + step, ..., stop."""
        grid = self.data["grid"]
        start, stop, step = float(grid["start"]), float(grid["stop"]), float(grid["step"])
        if not step > 0:
            raise ValueError(f"grid step must be positive, got {step}")
        if stop < start or start < 0:
            raise ValueError(f"grid needs 0 <= start <= stop, got start={start}, stop={stop}")
        count = int(round((stop - start) / step)) + 1
        return start + step * np.arange(count)

    def get_lengths(self) -> list[int]:
        """Get the sequence lengths used by simulations."""
        lengths = [int(n) for n in self.data["lengths"]]
        if not lengths or min(lengths) < 1:
            raise ValueError("every sequence length must be at least 1")
        return lengths

    def get_replicates(self) -> int:
        """Get the number of Monte Carlo replicates."""
        replicates = int(self.data["replicates"])
        if replicates < 1:
            raise ValueError(f"replicates must be at least 1, got {replicates}")
        return replicates

    def get_seed(self) -> int:
        """Get the master seed."""
        return int(self.data["seed"])

    def get_tolerance(self, kind: str) -> float:
        """Get the series tolerance ('series' or 'dp')."""
        tol = float(self.data["tolerance"][kind])
        if not tol > 0:
            raise ValueError(f"{kind} tolerance must be positive, got {tol}")
        return tol

    def get_m_range(self) -> tuple[int, int]:
        """Get the range of Erlang shapes profiled by the fit."""
        return int(self.data["fit"]["m_min"]), int(self.data["fit"]["m_max"])

    def get_drift(self) -> DriftFunction:
        """Get the drift function a(t) = 1 - exp(-beta t) of the renewal equation."""
        beta = self.data.get("drift", {}).get("beta")
        if beta is None:
            raise ValueError("the renewal equation needs drift.beta (set it in the config or pass --beta)")
        return DriftFunction.exp_saturating(float(beta))

    def get_true_model(self) -> ErlangGamma:
        """Get the model of a Monte Carlo study, which must be Erlang-Gamma."""
        model = self.get_model()
        if not isinstance(model, ErlangGamma):
            raise ValueError("Monte Carlo studies fit the Erlang-Gamma model; configure kind 'erlang-gamma'")
        return model

    def get_dirichlet_model(self) -> DirichletProcess:
        """Get the model of the Dirichlet-process tables, which must be kind 'dirichlet'."""
        model = self.get_model()
        if not isinstance(model, DirichletProcess):
            raise ValueError("the Dirichlet-process tables need model kind 'dirichlet'")
        return model

    def save(self, path: str | Path) -> None:
        """Write the current settings as YAML."""
        with open(path, "w") as config_file:
            yaml.safe_dump(self.data, config_file, sort_keys=False)


def create_default_config(path: str | Path) -> None:
    """Create default configuration file."""
    with open(path, "w") as config_file:
        yaml.safe_dump(copy.deepcopy(DEFAULT_EXPERIMENT), config_file, sort_keys=False)

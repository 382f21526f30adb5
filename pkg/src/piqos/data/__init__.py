"""Bundled example dataset: the six-domain network with its SLA register."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from piqos.registry import RegistrySnapshot, load_registry

EXAMPLE_SECRETS = {d: f"secret-{d}" for d in ("1", "2", "3", "4", "5", "6")}


def example_registry_path() -> Path:
    return Path(str(resources.files(__name__).joinpath("example_registry.json")))


def example_credentials_path() -> Path:
    return Path(str(resources.files(__name__).joinpath("example_credentials.json")))


def load_example() -> RegistrySnapshot:
    return load_registry(example_registry_path().read_text(encoding="utf-8"))

"""Runtime configuration: data directory, provider selection, journal dir."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .graph import KnowledgeGraph, build_graph
from .idtable import EntryStore, load_idtable, merge_stores
from .llm import LiveConfig, LiveProvider, MockProvider, Provider, load_fixture_file


class ConfigError(ValueError):
    pass


@dataclass
class ServiceConfig:
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8000
    provider: str = "mock"
    fixtures_path: Optional[str] = None
    endpoint: Optional[str] = None
    model: Optional[str] = None
    requests_per_minute: Optional[int] = None
    journal_dir: Optional[str] = None
    default_shots: int = 5
    context_max_entries: int = 40
    extra_table_files: tuple[str, ...] = field(default=())
    ui_dir: Optional[str] = None

    def validate(self) -> None:
        if self.provider not in ("mock", "live"):
            raise ConfigError(f"provider must be mock or live, got {self.provider!r}")
        if self.provider == "live" and (not self.endpoint or not self.model):
            raise ConfigError("live provider requires --endpoint and --model")
        if self.default_shots not in (0, 1, 3, 5):
            raise ConfigError("default shots must be one of 0, 1, 3, 5")


def load_data_dir(data_dir: str, extra_files: tuple[str, ...] = ()) -> EntryStore:
    """Load and merge every .csv IDTABLE file found in *data_dir*."""
    paths = sorted(Path(data_dir).glob("*.csv"))
    paths.extend(Path(p) for p in extra_files)
    if not paths:
        raise ConfigError(f"no IDTABLE files (*.csv) found in {data_dir!r}")
    stores = []
    for path in paths:
        with open(path, "rb") as fh:
            try:
                stores.append(load_idtable(fh))
            except Exception as exc:
                raise ConfigError(f"{path}: {exc}") from exc
    return merge_stores(stores)


def make_provider(config: ServiceConfig) -> Provider:
    if config.provider == "mock":
        fixtures = load_fixture_file(config.fixtures_path) if config.fixtures_path else {}
        return MockProvider(fixtures)
    return LiveProvider(
        LiveConfig(
            endpoint=config.endpoint or "",
            model=config.model or "",
            requests_per_minute=config.requests_per_minute,
        )
    )


def build_runtime(config: ServiceConfig) -> tuple[EntryStore, KnowledgeGraph, Provider]:
    config.validate()
    store = load_data_dir(config.data_dir, config.extra_table_files)
    graph = build_graph(store)
    provider = make_provider(config)
    return store, graph, provider

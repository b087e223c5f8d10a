"""Engine configuration: defaults, JSON file loading, strict key validation.

A config file is a JSON object mirroring the dataclass tree below, e.g.

    {
      "store_path": "graph.json",
      "embedding": {"provider": "hashing", "dim": 256},
      "recall": {"k": 50, "merge_weights": {"vector": 0.5, "fulltext": 0.3, "tag": 0.2}}
    }

Unknown keys are rejected so typos fail loudly. The file path comes from
an explicit argument or the IREC_CONFIG environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError

ENV_CONFIG = "IREC_CONFIG"


@dataclass
class EmbeddingConfig:
    provider: str = "hashing"        # hashing | external
    dim: int = 256
    endpoint: str = ""               # external provider only


@dataclass
class LlmConfig:
    provider: str = "stub"           # stub | external
    endpoint: str = ""
    model: str = ""
    fixtures_dir: str = ""           # scripted stub fixture directory
    assess_top_k: int = 10           # reranked results sent for similarity assessment


@dataclass
class MergeWeightsConfig:
    vector: float = 0.5
    fulltext: float = 0.3
    tag: float = 0.2


@dataclass
class RecallConfig:
    k: int = 50
    merge_weights: MergeWeightsConfig = field(default_factory=MergeWeightsConfig)
    multi_match_bonus: float = 0.1
    tag_entry_threshold: float = 0.6
    tag_depth_decay: float = 0.8


@dataclass
class FilterConfig:
    strict_threshold: int = 2
    loose_threshold: int = 3


@dataclass
class TimeoutConfig:
    # Seconds per stage. On expiry the stage degrades (channel skipped,
    # assessment fail-open) instead of failing the session.
    embed: float = 10.0
    llm: float = 30.0
    recall: float = 5.0


@dataclass
class IrecConfig:
    store_path: str = ""
    api_address: str = "127.0.0.1:8750"
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    recall: RecallConfig = field(default_factory=RecallConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    timeouts: TimeoutConfig = field(default_factory=TimeoutConfig)


def _merge(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config key(s) at {path or 'top level'}: {', '.join(sorted(unknown))}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        f = fields[name]
        sub_path = f"{path}.{name}" if path else name
        if f.default_factory is not dataclasses.MISSING and dataclasses.is_dataclass(f.default_factory):
            kwargs[name] = _merge(f.default_factory, value, sub_path)
        else:
            expected = type(getattr(defaults, name))
            if expected is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, expected) or isinstance(value, bool) and expected is not bool:
                raise ConfigError(
                    f"config key {sub_path}: expected {expected.__name__}, got {type(value).__name__}"
                )
            kwargs[name] = value
    return dataclasses.replace(defaults, **kwargs)


def load_config(path: str | None = None) -> IrecConfig:
    """Load config from a JSON file, or return defaults when no file is set.

    Raises ConfigError on unknown keys, wrong value types, or unparseable JSON.
    """
    path = path or os.environ.get(ENV_CONFIG, "")
    if not path:
        return IrecConfig()
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return _merge(IrecConfig, data, "")

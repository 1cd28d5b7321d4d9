"""Pipeline configuration: dataclasses plus a strict TOML loader.

Unknown keys are rejected rather than ignored, so a typo in a config file
fails loudly instead of silently running with defaults. All paths are
resolved relative to the config file's directory. Seeds are explicit;
nothing in the package reads the clock for randomness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import InputError

__all__ = [
    "InputSettings",
    "TokenizerSettings",
    "LdaSettings",
    "CoherenceSettings",
    "LstmSettings",
    "AnalyticsSettings",
    "PipelineConfig",
    "load_config",
    "config_hash",
]


@dataclass
class InputSettings:
    corpus: str = ""
    keywords: str | None = None
    include_terms: str | None = None
    exclude_terms: str | None = None
    labeled_sentiment: str | None = None


@dataclass
class TokenizerSettings:
    min_df: int = 5
    max_features: int | None = None
    stopwords: str | None = None  # path; None means the built-in list


@dataclass
class LdaSettings:
    n_topics: int = 10
    alpha: float | str = 0.01
    eta: float = 0.1
    sweeps: int = 500
    k_grid: list[int] = field(default_factory=list)
    alpha_grid: list[float | str] = field(default_factory=list)
    eta_grid: list[float] = field(default_factory=list)
    strategy: str = "staged"


@dataclass
class CoherenceSettings:
    top_n: int = 10
    epsilon: float = 1e-12
    validation_fraction: float = 0.2
    convention: str = "paper"


@dataclass
class LstmSettings:
    d_embed: int = 128
    d_hidden: int = 196
    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 7
    max_features: int = 2000
    clip_norm: float = 5.0
    holdout_fraction: float = 1 / 3


@dataclass
class AnalyticsSettings:
    top_k: int = 10
    n_classes: int = 5


@dataclass
class PipelineConfig:
    input: InputSettings = field(default_factory=InputSettings)
    tokenizer: TokenizerSettings = field(default_factory=TokenizerSettings)
    lda: LdaSettings = field(default_factory=LdaSettings)
    coherence: CoherenceSettings = field(default_factory=CoherenceSettings)
    lstm: LstmSettings = field(default_factory=LstmSettings)
    analytics: AnalyticsSettings = field(default_factory=AnalyticsSettings)
    output_dir: str = "out"
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "input": InputSettings,
    "tokenizer": TokenizerSettings,
    "lda": LdaSettings,
    "coherence": CoherenceSettings,
    "lstm": LstmSettings,
    "analytics": AnalyticsSettings,
}
_TOP_LEVEL_SCALARS = {"output_dir", "seed"}


def _build_section(cls, table: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise InputError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    return cls(**table)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a TOML pipeline config."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"config parse error in {path}: {exc}") from exc
    unknown = set(raw) - set(_SECTIONS) - _TOP_LEVEL_SCALARS
    if unknown:
        raise InputError(f"unknown top-level config key(s): {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        table = raw.get(name, {})
        if not isinstance(table, dict):
            raise InputError(f"[{name}] must be a table")
        kwargs[name] = _build_section(cls, table, name)
    config = PipelineConfig(
        output_dir=raw.get("output_dir", "out"),
        seed=int(raw.get("seed", 0)),
        **kwargs,
    )
    base = path.parent
    _resolve_paths(config, base)
    validate_config(config)
    return config


def _resolve_paths(config: PipelineConfig, base: Path) -> None:
    inp = config.input
    for name in ("corpus", "keywords", "include_terms", "exclude_terms", "labeled_sentiment"):
        value = getattr(inp, name)
        if value:
            setattr(inp, name, str((base / value) if not Path(value).is_absolute() else Path(value)))
    if config.tokenizer.stopwords:
        sw = Path(config.tokenizer.stopwords)
        config.tokenizer.stopwords = str((base / sw) if not sw.is_absolute() else sw)
    out = Path(config.output_dir)
    config.output_dir = str((base / out) if not out.is_absolute() else out)


def validate_config(config: PipelineConfig) -> None:
    if not config.input.corpus:
        raise InputError("input.corpus is required")
    for name in ("corpus", "keywords", "include_terms", "exclude_terms", "labeled_sentiment"):
        value = getattr(config.input, name)
        if value and not Path(value).exists():
            raise InputError(f"input.{name} does not exist: {value}")
    if config.tokenizer.stopwords and not Path(config.tokenizer.stopwords).exists():
        raise InputError(f"tokenizer.stopwords does not exist: {config.tokenizer.stopwords}")
    if config.tokenizer.min_df < 1:
        raise InputError("tokenizer.min_df must be >= 1")
    if config.lda.n_topics < 1:
        raise InputError("lda.n_topics must be >= 1")
    if config.lda.sweeps < 1:
        raise InputError("lda.sweeps must be >= 1")
    if config.lda.strategy not in ("staged", "full"):
        raise InputError(f"lda.strategy must be staged or full, got {config.lda.strategy!r}")
    if not 0 < config.coherence.validation_fraction < 1:
        raise InputError("coherence.validation_fraction must be in (0,1)")
    if config.coherence.convention not in ("paper", "umass"):
        raise InputError(f"coherence.convention must be paper or umass, got {config.coherence.convention!r}")
    if not 0 <= config.lstm.holdout_fraction < 1:
        raise InputError("lstm.holdout_fraction must be in [0,1)")
    if config.analytics.top_k < 1 or config.analytics.n_classes < 1:
        raise InputError("analytics.top_k and n_classes must be >= 1")


def config_hash(config: PipelineConfig) -> str:
    """Stable hash of the resolved configuration (paths as configured).

    output_dir is excluded: it says where results land, not what they are,
    so rerunning into a different directory keeps the same hash.
    """
    payload = config.to_dict()
    payload.pop("output_dir", None)
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()

"""Run configuration: dataclass defaults < JSON file < command-line flags < environment.

The resolved :class:`RunConfig` is written as ``run_config.json`` next to
every artifact so a run can be repeated from it.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .data.synthetic import SyntheticSpec
from .errors import ConfigError
from .evaluation import DEFAULT_DELTAS
from .model import ModelConfig
from .pooling import PoolSpec, TemporalWindow
from .training import TrainConfig
from .validation import dataclass_keys, validate_keys

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = "run_config.json"
THREADS_ENV = "TEMPORAL_SPOTTING_THREADS"


@dataclass(frozen=True)
class ModelSection:
    """
    Architecture settings. ``input_dim`` stays None until a dataset fixes it;
    ``before_s``/``after_s`` default to half of ``window_s`` each.
    """

    input_dim: int | None = None
    reduced_dim: int = 512
    kind: str = "netvlad"
    temporally_aware: bool = True
    clusters: int = 64
    clusters_before: int | None = None
    clusters_after: int | None = None
    feature_norm: bool = True
    post_norm: bool = False
    dropout: float = 0.4
    use_projection: bool = True
    frame_rate: float = 2.0
    window_s: float = 15.0
    before_s: float | None = None
    after_s: float | None = None

    def __post_init__(self) -> None:
        before = self.window_s / 2.0 if self.before_s is None else self.before_s
        after = self.window_s - before if self.after_s is None else self.after_s
        if abs(before + after - self.window_s) > 1e-9:
            raise ConfigError(
                f"before_s + after_s must equal window_s ({before} + {after} != {self.window_s})"
            )
        object.__setattr__(self, "before_s", before)
        object.__setattr__(self, "after_s", after)
        try:
            self.pool_spec()
            self.window()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def pool_spec(self) -> PoolSpec:
        return PoolSpec(
            kind=self.kind,
            temporally_aware=self.temporally_aware,
            clusters=self.clusters,
            clusters_before=self.clusters_before,
            clusters_after=self.clusters_after,
            feature_norm=self.feature_norm,
            post_norm=self.post_norm,
        )

    def window(self) -> TemporalWindow:
        return TemporalWindow(self.frame_rate, self.before_s, self.after_s)

    def model_config(self, class_names: list[str], seed: int) -> ModelConfig:
        """
        Model architecture for a vocabulary; one extra output for background.

        Raises:
            ConfigError: If ``input_dim`` is still unresolved
        """
        if self.input_dim is None:
            raise ConfigError("model.input_dim is unresolved; set it or load a dataset first")
        names = (*class_names, "__background__")
        return ModelConfig(
            input_dim=self.input_dim,
            reduced_dim=self.reduced_dim if self.use_projection else self.input_dim,
            pool=self.pool_spec(),
            num_classes=len(names),
            dropout=self.dropout,
            window=self.window(),
            use_projection=self.use_projection,
            class_names=names,
            seed=seed,
        )


@dataclass(frozen=True)
class SpotSection:
    nms_window_s: float = 30.0
    nms_threshold: float | None = None
    batch_size: int = 256

    def __post_init__(self) -> None:
        if self.nms_window_s <= 0:
            raise ConfigError(f"spot.nms_window_s must be positive, got {self.nms_window_s}")


@dataclass(frozen=True)
class EvalSection:
    deltas: tuple[float, ...] = DEFAULT_DELTAS

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if not self.deltas or min(self.deltas) <= 0:
            raise ConfigError("eval.deltas must be a nonempty list of positive seconds")


@dataclass(frozen=True)
class RunConfig:
    """
    Every setting a command needs, fully resolved.

    ``seed`` drives model initialization, training shuffles and the synthetic
    generator; the per-section seeds are derived from it.
    """

    seed: int = 0
    threads: int = 1
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    spot: SpotSection = field(default_factory=SpotSection)
    eval: EvalSection = field(default_factory=EvalSection)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        object.__setattr__(self, "train", replace(self.train, seed=self.seed))
        object.__setattr__(self, "synthetic", replace(self.synthetic, seed=self.seed))

    def with_input_dim(self, input_dim: int) -> "RunConfig":
        return replace(self, model=replace(self.model, input_dim=input_dim))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["synthetic"] = self.synthetic.to_dict()
        data["eval"]["deltas"] = list(self.eval.deltas)
        # seeds live at the top level only
        del data["train"]["seed"]
        del data["synthetic"]["seed"]
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        """
        Build from a (possibly partial) nested mapping.

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        validate_keys(data, dataclass_keys(cls), "run")
        sections = {
            "model": (ModelSection, dataclass_keys(ModelSection)),
            "train": (TrainConfig, dataclass_keys(TrainConfig) - {"seed"}),
            "spot": (SpotSection, dataclass_keys(SpotSection)),
            "eval": (EvalSection, dataclass_keys(EvalSection)),
            "synthetic": (SyntheticSpec, dataclass_keys(SyntheticSpec) - {"seed"}),
        }
        kwargs: dict[str, Any] = {k: data[k] for k in ("seed", "threads") if k in data}
        try:
            for name, (section_cls, allowed) in sections.items():
                section = data.get(name)
                validate_keys(section, allowed, name)
                if section is None:
                    continue
                if section_cls is SyntheticSpec:
                    kwargs[name] = SyntheticSpec.from_dict(section)
                else:
                    kwargs[name] = section_cls(**section)
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid configuration: {e}") from e


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _nest(overrides: dict[str, Any]) -> dict[str, Any]:
    """Turn {'train.initial_lr': x} into {'train': {'initial_lr': x}}; None values are skipped."""
    nested: dict[str, Any] = {}
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = nested
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


def load_config_file(path: str | Path) -> dict[str, Any]:
    """
    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If it is not a JSON object
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: a config file must hold a JSON object")
    return data


def resolve_run_config(
    config_file: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    env: dict[str, str] | None = None,
    defaults: dict[str, Any] | None = None,
) -> RunConfig:
    """
    Layer the configuration sources.

    Args:
        config_file: Optional JSON file (partial configs are fine)
        overrides: Command-line values keyed by dotted path, e.g. ``train.initial_lr``;
            None values mean "flag not given"
        env: Environment to read process-level knobs from (defaults to ``os.environ``)
        defaults: Command-specific defaults keyed by dotted path; they sit above the
            dataclass defaults and below the config file

    Returns:
        The resolved configuration

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    env = os.environ if env is None else env
    data: dict[str, Any] = _deep_merge({"threads": os.cpu_count() or 1}, _nest(defaults or {}))
    if config_file is not None:
        data = _deep_merge(data, load_config_file(config_file))
    data = _deep_merge(data, _nest(overrides or {}))
    if env.get(THREADS_ENV):
        try:
            data["threads"] = int(env[THREADS_ENV])
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{env[THREADS_ENV]}'") from e
    config = RunConfig.from_dict(data)
    logger.debug("resolved run config seed=%d threads=%d", config.seed, config.threads)
    return config


def write_run_config(config: RunConfig, directory: str | Path) -> Path:
    """Write ``run_config.json`` (sorted keys, 2-space indent) into ``directory``."""
    path = Path(directory) / RUN_CONFIG_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return path

"""Run configuration.

A run is fully described by one ``RunConfig``: corpus generation, report
labelling, both trainers, and evaluation.  Configs round-trip through YAML;
``config_hash`` over the canonical dump is embedded in checkpoints so a
saved model can be traced back to the exact settings that produced it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

CLASS_NAMES = ("Normal", "Lesion", "Others")


@dataclass
class GenConfig:
    """Synthetic corpus settings.

    Difficulty is controlled by the clutter amplitude and the lesion
    contrast/radius ranges; everything else is layout and bookkeeping.
    """

    image_size: tuple[int, int] = (128, 128)
    counts: dict[str, int] = field(
        default_factory=lambda: {"Normal": 400, "Lesion": 400, "Others": 200}
    )
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    annotated_fraction: float = 0.09
    lesion_radius_range: tuple[float, float] = (4.0, 10.0)
    lesion_contrast_range: tuple[float, float] = (0.25, 0.45)
    lesion_count_range: tuple[int, int] = (1, 3)
    clutter_amplitude: float = 0.10
    clutter_count_range: tuple[int, int] = (3, 8)
    min_box_mean_contrast: float = 0.05
    typo_rate: float = 0.05
    extra_negation_rate: float = 0.30
    mm_per_pixel: float | None = None  # sizes are reported in pixels unless set
    seed: int | None = None  # None: fall back to the run seed

    def validate(self) -> None:
        h, w = self.image_size
        if h < 32 or w < 32:
            raise ConfigError(f"image_size must be at least 32x32, got {self.image_size}")
        if set(self.counts) != set(CLASS_NAMES):
            raise ConfigError(f"counts must have exactly the keys {CLASS_NAMES}")
        for name, n in self.counts.items():
            if int(n) <= 0:
                raise ConfigError(f"counts[{name!r}] must be positive, got {n}")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9 or any(
            f < 0 for f in self.split_fractions
        ):
            raise ConfigError(f"split_fractions must be nonnegative and sum to 1, got {self.split_fractions}")
        if not 0.0 <= self.annotated_fraction <= 1.0:
            raise ConfigError(f"annotated_fraction must lie in [0, 1], got {self.annotated_fraction}")
        rmin, rmax = self.lesion_radius_range
        if not 2 <= rmin <= rmax:
            raise ConfigError(f"lesion_radius_range must satisfy 2 <= min <= max, got {self.lesion_radius_range}")
        # a box can span 2*rmax+1 pixels; it must fit inside the image
        if 2 * rmax + 1 > min(h, w):
            raise ConfigError(f"lesion radius {rmax} does not fit a {h}x{w} image")
        cmin, cmax = self.lesion_contrast_range
        if not 0 < cmin <= cmax <= 0.6:
            raise ConfigError(f"lesion_contrast_range must lie in (0, 0.6], got {self.lesion_contrast_range}")
        nmin, nmax = self.lesion_count_range
        if not 1 <= nmin <= nmax:
            raise ConfigError(f"lesion_count_range must satisfy 1 <= min <= max, got {self.lesion_count_range}")
        if not 0.0 <= self.clutter_amplitude <= 0.2:
            raise ConfigError(f"clutter_amplitude must lie in [0, 0.2], got {self.clutter_amplitude}")
        for rate_name in ("typo_rate", "extra_negation_rate"):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{rate_name} must lie in [0, 1], got {rate}")
        if self.mm_per_pixel is not None and self.mm_per_pixel <= 0:
            raise ConfigError(f"mm_per_pixel must be positive, got {self.mm_per_pixel}")


@dataclass
class NlpConfig:
    """Report labeller settings."""

    fuzzy_threshold: float = 0.85
    negation_window: int = 6
    noise_rate: float = 0.0
    noise_seed: int | None = None  # None: derive from the run seed

    def validate(self) -> None:
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise ConfigError(f"fuzzy_threshold must lie in (0, 1], got {self.fuzzy_threshold}")
        if self.negation_window < 1:
            raise ConfigError(f"negation_window must be >= 1, got {self.negation_window}")
        if not 0.0 <= self.noise_rate <= 0.5:
            raise ConfigError(f"noise_rate must lie in [0, 0.5], got {self.noise_rate}")


@dataclass
class ConafConfig:
    """Soft-attention trainer settings."""

    channels: tuple[int, int, int, int] = (16, 32, 64, 128)
    convs_per_block: int = 2
    lambda1: float = 10.0
    lambda2: float = 0.1
    alpha: float = 1.1
    sigma: float = 0.25
    mix_weak_prob: float = 0.8
    batch_size: int = 32
    optimizer: str = "adadelta"
    learning_rate: float = 0.03
    max_steps: int = 400
    eval_every: int = 25
    task: str = "lesion-vs-normal"
    deterministic: bool = True

    def validate(self) -> None:
        if len(self.channels) != 4 or any(int(c) <= 0 for c in self.channels):
            raise ConfigError(f"channels must be four positive integers (one per pooling block), got {self.channels}")
        if self.convs_per_block < 1:
            raise ConfigError(f"convs_per_block must be >= 1, got {self.convs_per_block}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("loss weights lambda1 and lambda2 must be nonnegative")
        if self.alpha <= 1.0:
            raise ConfigError(f"alpha must exceed 1 so the localisation denominator never vanishes, got {self.alpha}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.mix_weak_prob <= 1.0:
            raise ConfigError(f"mix_weak_prob must lie in [0, 1], got {self.mix_weak_prob}")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ConfigError(f"batch_size must be a positive even number (half Lesion, half negative), got {self.batch_size}")
        if self.optimizer not in ("adadelta", "adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_steps < 1 or self.eval_every < 1:
            raise ConfigError("max_steps and eval_every must be >= 1")
        if self.task not in ("lesion-vs-normal", "lesion-vs-rest"):
            raise ConfigError(f"unknown task {self.task!r}")


@dataclass
class RamafConfig:
    """Hard-attention trainer settings."""

    num_glimpses: int = 7
    patch_size: int = 20
    enc_maps: int = 16
    hidden_size: int = 64
    loc_embed_dim: int = 32
    sigma_sq: float = 0.22
    sigma_mode: str = "variance"  # "variance": 0.22 is sigma^2; "stdev": 0.22 is sigma
    batch_size: int = 40
    learning_rate: float = 1e-4
    annotated_min: int = 5
    annotated_max: int = 20
    epochs: int = 15
    steps_per_epoch: int | None = None  # None: one pass over the weak training pool
    init_range: float = 0.1
    intermediate_reward: float = 2.0
    use_spatial_reward: bool = True
    pretrain: bool = True
    pretrain_steps: int = 150
    pretrain_lr: float = 1e-3
    pretrain_batch: int = 64
    deterministic: bool = True

    def validate(self) -> None:
        if self.num_glimpses < 1:
            raise ConfigError(f"num_glimpses must be >= 1, got {self.num_glimpses}")
        if self.patch_size < 4 or self.patch_size % 2 != 0:
            raise ConfigError(f"patch_size must be an even integer >= 4 (it is pooled twice), got {self.patch_size}")
        if self.enc_maps < 1 or self.hidden_size < 1 or self.loc_embed_dim < 1:
            raise ConfigError("encoder and core sizes must be positive")
        if self.sigma_sq <= 0:
            raise ConfigError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if self.sigma_mode not in ("variance", "stdev"):
            raise ConfigError(f"sigma_mode must be 'variance' or 'stdev', got {self.sigma_mode!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0 or self.pretrain_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if not 0 <= self.annotated_min <= self.annotated_max <= self.batch_size:
            raise ConfigError("annotated_min/annotated_max must satisfy 0 <= min <= max <= batch_size")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ConfigError("steps_per_epoch must be >= 1 when given")
        if self.init_range <= 0:
            raise ConfigError(f"init_range must be positive, got {self.init_range}")
        if self.intermediate_reward < 0:
            raise ConfigError(f"intermediate_reward must be nonnegative, got {self.intermediate_reward}")
        if self.pretrain_steps < 1 or self.pretrain_batch < 1:
            raise ConfigError("pretrain_steps and pretrain_batch must be >= 1")


@dataclass
class EvalConfig:
    """Evaluation settings shared by both models."""

    detection_thresholds: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    overlap_threshold: float = 0.25
    decile_count: int = 10
    hit_mode: str = "patch"  # "patch": glimpse window intersects a box; "center": center inside

    def validate(self) -> None:
        if not self.detection_thresholds:
            raise ConfigError("detection_thresholds must be nonempty")
        if any(not 0.0 < t < 1.0 for t in self.detection_thresholds):
            raise ConfigError(f"detection thresholds must lie in (0, 1), got {self.detection_thresholds}")
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ConfigError(f"overlap_threshold must lie in (0, 1], got {self.overlap_threshold}")
        if self.decile_count < 2:
            raise ConfigError(f"decile_count must be >= 2, got {self.decile_count}")
        if self.hit_mode not in ("patch", "center"):
            raise ConfigError(f"hit_mode must be 'patch' or 'center', got {self.hit_mode!r}")


@dataclass
class RunConfig:
    seed: int = 0
    gen: GenConfig = field(default_factory=GenConfig)
    nlp: NlpConfig = field(default_factory=NlpConfig)
    conaf: ConafConfig = field(default_factory=ConafConfig)
    ramaf: RamafConfig = field(default_factory=RamafConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        for section in (self.gen, self.nlp, self.conaf, self.ramaf, self.eval):
            section.validate()
        h, w = self.gen.image_size
        if h % 16 != 0 or w % 16 != 0:
            raise ConfigError(f"image_size must be divisible by 16 (four 2x2 pools), got {self.gen.image_size}")
        if 2 * self.ramaf.patch_size > min(h, w):
            raise ConfigError(f"the coarse glimpse (2 x patch_size = {2 * self.ramaf.patch_size}) must fit inside a {h}x{w} image")

    @property
    def gen_seed(self) -> int:
        return self.seed if self.gen.seed is None else self.gen.seed


_SECTION_TYPES = {
    "gen": GenConfig,
    "nlp": NlpConfig,
    "conaf": ConafConfig,
    "ramaf": RamafConfig,
    "eval": EvalConfig,
}


def _coerce(value: Any, target_type: Any, where: str) -> Any:
    """Coerce a YAML value to the declared dataclass field type."""
    origin = getattr(target_type, "__origin__", None)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a sequence, got {value!r}")
        args = target_type.__args__
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], where) for v in value)
        if len(value) != len(args):
            raise ConfigError(f"{where}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(v, t, where) for v, t in zip(value, args))
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        _, vt = target_type.__args__
        return {str(k): _coerce(v, vt, f"{where}[{k}]") for k, v in value.items()}
    if target_type in (int, "int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if target_type in (float, "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if target_type in (bool, "bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if target_type in (str, "str"):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def _build_section(cls: type, data: dict, where: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {data!r}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        ftype = hints[name]
        args = typing.get_args(ftype)
        if type(None) in args:  # Optional[X]
            if value is None:
                kwargs[name] = None
                continue
            ftype = next(a for a in args if a is not type(None))
        kwargs[name] = _coerce(value, ftype, f"{where}.{name}")
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - (set(_SECTION_TYPES) | {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level config keys {sorted(unknown)}")
    cfg = RunConfig()
    if "seed" in data:
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
            raise ConfigError(f"seed must be an integer, got {data['seed']!r}")
        cfg.seed = data["seed"]
    for key, cls in _SECTION_TYPES.items():
        if key in data:
            setattr(cfg, key, _build_section(cls, data[key], key))
    cfg.validate()
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    def clean(obj: Any) -> Any:
        if isinstance(obj, tuple):
            return [clean(v) for v in obj]
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        return obj

    return clean(dataclasses.asdict(cfg))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if data is None:
        data = {}
    return config_from_dict(data)


def canonical_dump(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_dump(cfg))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_dump(cfg).encode("utf-8")).hexdigest()

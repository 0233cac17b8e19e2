"""
Run configuration: flat key=value files, --set overrides and typed access

    # comment
    head=noah
    groups=4
    key_ratio=1/8
"""

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from backbones.toy_backbone import BackboneConfig
from config.settings import HEAD_KINDS, RUN_DEFAULTS
from data_collectors.quadrant_collector import QuadrantSpec
from heads.noah_config import GapConfig, NoahConfig
from training.trainer import TrainConfig
from utils.errors import ConfigurationError, UsageError

SUBCOMMANDS = ("train", "eval", "cost", "bench", "viz")
DATASETS = ("quadrant", "idx")
DEFAULT_OUT = "results"
TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


def split_assignment(line: str, source: str) -> Tuple[str, str]:
    if "=" not in line:
        raise ConfigurationError(f"{source}: expected key=value, got {line!r}")
    key, value = line.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"{source}: empty key in {line!r}")
    return key, value.strip()


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = split_assignment(line, f"{source}:{number}")
        entries[key] = value
    return entries


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as error:
        raise ConfigurationError(f"{path}: config must be UTF-8 ({error})") from error
    return parse_config_text(text, str(path))


def coerce(key: str, raw: str):
    """Parse `raw` with the type of the key's default"""
    if key not in RUN_DEFAULTS:
        raise ConfigurationError(f"unknown config key {key!r}")
    default = RUN_DEFAULTS[key]
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in TRUE_WORDS:
                return True
            if lowered in FALSE_WORDS:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(Fraction(raw))
    except (ValueError, ZeroDivisionError) as error:
        raise ConfigurationError(f"{key}={raw!r} is not a valid {type(default).__name__}") from error
    return raw


def _int_list(key: str, raw: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError as error:
        raise ConfigurationError(f"{key}={raw!r} must be a comma separated list of ints") from error


@dataclass
class RunSpec:
    """Resolved settings of one CLI invocation"""

    subcommand: str
    values: Dict = field(default_factory=lambda: dict(RUN_DEFAULTS))
    out_dir: Path = Path(DEFAULT_OUT)
    config_path: Optional[Path] = None
    explicit_out: bool = False

    @classmethod
    def build(cls, subcommand: str, config_path: Optional[Union[str, Path]] = None,
              overrides: Iterable[str] = (), seed: Optional[int] = None,
              out_dir: Optional[Union[str, Path]] = None) -> "RunSpec":
        """Defaults, then the config file, then --set overrides, then --seed"""
        if subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
        values = dict(RUN_DEFAULTS)
        if config_path is not None:
            for key, raw in load_config_file(config_path).items():
                values[key] = coerce(key, raw)
        for assignment in overrides:
            key, raw = split_assignment(assignment, "--set")
            values[key] = coerce(key, raw)
        if seed is not None:
            if seed < 0 or seed >= 2 ** 64:
                raise UsageError(f"--seed must be an unsigned 64-bit integer, got {seed}")
            values["seed"] = seed
        spec = cls(subcommand=subcommand, values=values, out_dir=Path(out_dir or DEFAULT_OUT),
                   config_path=Path(config_path) if config_path is not None else None,
                   explicit_out=out_dir is not None)
        spec.validate()
        return spec

    def __getitem__(self, key: str):
        return self.values[key]

    def validate(self):
        if self["head"] not in HEAD_KINDS:
            raise ConfigurationError(f"head must be one of {HEAD_KINDS}, got {self['head']!r}")
        if self["dataset"] not in DATASETS:
            raise ConfigurationError(f"dataset must be one of {DATASETS}, got {self['dataset']!r}")
        if self.out_dir.exists() and not self.out_dir.is_dir():
            raise UsageError(f"output path exists and is not a directory: {self.out_dir}")
        for path in self.required_paths():
            if not path.is_file():
                raise UsageError(f"input file not found: {path}")

    def required_paths(self) -> List[Path]:
        """Files this subcommand reads, checked before any work starts"""
        paths = []
        if self.subcommand in ("eval", "viz"):
            if not self["checkpoint"]:
                raise UsageError(f"{self.subcommand} needs --checkpoint or checkpoint=PATH")
            paths.append(Path(self["checkpoint"]))
        if self["dataset"] == "idx" and self.subcommand in ("train", "eval", "viz"):
            keys = ["eval_images", "eval_labels"]
            if self.subcommand == "train":
                keys = ["train_images", "train_labels"] + (keys if self["eval_images"] else [])
            for key in keys:
                if not self[key]:
                    raise UsageError(f"dataset=idx needs {key}")
                paths.append(Path(self[key]))
        return paths

    def int_list(self, key: str) -> Tuple[int, ...]:
        return _int_list(key, str(self[key]))

    def quadrant_spec(self, noise: Optional[float] = None) -> QuadrantSpec:
        glyphs = tuple(g.strip() for g in self["glyphs"].split(",") if g.strip())
        return QuadrantSpec(image_size=self["image_size"], glyphs=glyphs,
                            noise=self["noise"] if noise is None else noise,
                            jitter=self["jitter"], seed=self["seed"])

    def backbone_config(self) -> BackboneConfig:
        return BackboneConfig(kind=self["backbone"], widths=self.int_list("backbone_widths"),
                              strides=self.int_list("backbone_strides"), seed=self["seed"])

    def noah_config(self) -> NoahConfig:
        return NoahConfig(num_classes=self["num_classes"], num_groups=self["groups"],
                          key_ratio=self["key_ratio"], attention_axis=self["attention_axis"],
                          activation=self["activation"], merge=self["merge"],
                          shared_single_attention=self["shared_attention"],
                          second_split=self["second_split"], use_bias=self["use_bias"])

    def gap_config(self) -> GapConfig:
        return GapConfig(num_classes=self["num_classes"], use_bias=self["use_bias"])

    def head_config(self) -> Union[NoahConfig, GapConfig]:
        return self.noah_config() if self["head"] == "noah" else self.gap_config()

    def train_config(self) -> TrainConfig:
        if self["dataset"] == "quadrant" and self.quadrant_spec().num_classes != self["num_classes"]:
            raise ConfigurationError(
                f"num_classes={self['num_classes']} but the quadrant dataset has "
                f"{self.quadrant_spec().num_classes} classes")
        return TrainConfig(
            head=self.head_config(), backbone=self.backbone_config(),
            epochs=self["epochs"], batch_size=self["batch_size"], lr=self["lr"],
            momentum=self["momentum"], weight_decay=self["weight_decay"], seed=self["seed"],
            lr_schedule=self["lr_schedule"], lr_step_epochs=self["lr_step_epochs"],
            lr_decay=self["lr_decay"], freeze_backbone_epochs=self["freeze_backbone_epochs"],
            log_wall_time=self["log_wall_time"], verbose=self["verbose"])

    def categories(self) -> Optional[List[int]]:
        """Explicit viz categories, or None to use each sample's label"""
        return list(self.int_list("categories")) or None

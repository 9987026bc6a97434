"""Plain-text run configuration: sections, key = value lines, # comments.

Unknown sections or keys are rejected by name; type errors carry the line
number; every scalar invariant is re-checked after parsing. An empty file
yields the standard defaults (confidence threshold 0.9, EMA decay 0.999,
temperature 0.25, unsupervised weight 1.0, translation probabilities 0.5,
k 4, style weight 0.1).
"""

import re
from dataclasses import dataclass, fields

from .augment import ColorJitterSpec
from .trainer import HyperParams


class ConfigError(ValueError):
    """Unparseable or invariant-violating configuration."""


@dataclass
class Config:
    # [data]
    data_root: str = "runs/toy"
    image_size: int = 96
    train_count: int = 200
    val_count: int = 50
    num_classes: int = 5
    data_seed: int = 7
    # [styler]
    styler_checkpoint: str = "runs/styler.bsd"
    styler_ae_steps: int = 1500
    styler_steps: int = 1500
    styler_lr: float = 1e-3
    style_weight: float = 0.1
    styler_seed: int = 7
    # [train]
    out_dir: str = "runs/train"
    steps: int = 3000
    eval_every: int = 500
    crop: int = 64
    optimizer: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 5e-4
    tau: float = 0.9
    eta: float = 0.999
    temp: float = 0.25
    k: int = 4
    lambda_u: float = 1.0
    p_s2t: float = 0.5
    p_t2s: float = 0.5
    lambda_rw: float = 1.0
    gamma_rw: float = 0.5
    epsilon: float = 1e-5
    alpha_lo: float = 0.0
    alpha_hi: float = 1.0
    gate_pre_sharpen: bool = True
    train_seed: int = 7
    # [augment]
    brightness_lo: float = 0.8
    brightness_hi: float = 1.2
    shift_lo: float = -0.1
    shift_hi: float = 0.1
    per_channel: bool = True
    # [ablate]
    s2t: bool = True
    t2s: bool = True
    pseudo_label: bool = True
    self_ensemble: bool = True

    def validate(self):
        try:
            self.hyperparams()
            self.jitter_spec()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.image_size % 4 or self.crop % 4:
            raise ConfigError("image_size and crop must be divisible by 4")
        if self.crop > self.image_size:
            raise ConfigError(f"crop {self.crop} exceeds image_size {self.image_size}")
        if self.train_count < 1 or self.val_count < 1:
            raise ConfigError("train_count and val_count must be positive")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2")
        if self.steps < 0 or self.styler_steps < 0 or self.styler_ae_steps < 0:
            raise ConfigError("step counts must be non-negative")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be at least 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        for name in ("lr", "styler_lr"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.style_weight <= 0:
            raise ConfigError("style_weight must be positive")
        return self

    def hyperparams(self):
        return HyperParams(
            tau=self.tau, eta=self.eta, temp=self.temp, k=self.k,
            lambda_u=self.lambda_u, p_s2t=self.p_s2t, p_t2s=self.p_t2s,
            lambda_rw=self.lambda_rw, gamma_rw=self.gamma_rw,
            epsilon=self.epsilon, alpha_lo=self.alpha_lo, alpha_hi=self.alpha_hi,
            gate_pre_sharpen=self.gate_pre_sharpen,
            use_pseudo_label=self.pseudo_label,
            use_self_ensemble=self.self_ensemble,
            s2t=self.s2t, t2s=self.t2s,
        ).validate()

    def jitter_spec(self):
        return ColorJitterSpec(
            brightness_lo=self.brightness_lo, brightness_hi=self.brightness_hi,
            shift_lo=self.shift_lo, shift_hi=self.shift_hi,
            per_channel=self.per_channel,
        ).validate()


# (section, key) -> dataclass attribute
SCHEMA = {
    ("data", "root"): "data_root",
    ("data", "image_size"): "image_size",
    ("data", "train_count"): "train_count",
    ("data", "val_count"): "val_count",
    ("data", "num_classes"): "num_classes",
    ("data", "seed"): "data_seed",
    ("styler", "checkpoint"): "styler_checkpoint",
    ("styler", "ae_steps"): "styler_ae_steps",
    ("styler", "steps"): "styler_steps",
    ("styler", "lr"): "styler_lr",
    ("styler", "style_weight"): "style_weight",
    ("styler", "seed"): "styler_seed",
    ("train", "out_dir"): "out_dir",
    ("train", "steps"): "steps",
    ("train", "eval_every"): "eval_every",
    ("train", "crop"): "crop",
    ("train", "optimizer"): "optimizer",
    ("train", "lr"): "lr",
    ("train", "momentum"): "momentum",
    ("train", "beta2"): "beta2",
    ("train", "weight_decay"): "weight_decay",
    ("train", "tau"): "tau",
    ("train", "eta"): "eta",
    ("train", "temp"): "temp",
    ("train", "k"): "k",
    ("train", "lambda_u"): "lambda_u",
    ("train", "p_s2t"): "p_s2t",
    ("train", "p_t2s"): "p_t2s",
    ("train", "lambda_rw"): "lambda_rw",
    ("train", "gamma_rw"): "gamma_rw",
    ("train", "epsilon"): "epsilon",
    ("train", "alpha_lo"): "alpha_lo",
    ("train", "alpha_hi"): "alpha_hi",
    ("train", "gate_pre_sharpen"): "gate_pre_sharpen",
    ("train", "seed"): "train_seed",
    ("augment", "brightness_lo"): "brightness_lo",
    ("augment", "brightness_hi"): "brightness_hi",
    ("augment", "shift_lo"): "shift_lo",
    ("augment", "shift_hi"): "shift_hi",
    ("augment", "per_channel"): "per_channel",
    ("ablate", "s2t"): "s2t",
    ("ablate", "t2s"): "t2s",
    ("ablate", "pseudo_label"): "pseudo_label",
    ("ablate", "self_ensemble"): "self_ensemble",
}

_FIELD_TYPES = {f.name: (f.type if isinstance(f.type, str) else f.type.__name__)
                for f in fields(Config)}
_ATTR_TO_KEY = {attr: key for key, attr in SCHEMA.items()}
_SECTION_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")


def _convert(raw, type_name, lineno):
    if type_name == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: expected an integer, got {raw!r}") from None
    if type_name == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: expected a number, got {raw!r}") from None
    if type_name == "bool":
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {lineno}: expected true or false, got {raw!r}")
    return raw


def parse_config(text):
    """Parse config text into a validated Config (defaults fill omissions)."""
    values = {}
    section = None
    known_sections = {s for s, _ in SCHEMA}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in known_sections:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw_line.strip()!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if section is None:
            raise ConfigError(f"line {lineno}: key {key!r} appears before any [section]")
        attr = SCHEMA.get((section, key))
        if attr is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{section}]")
        values[attr] = _convert(raw, _FIELD_TYPES[attr], lineno)
    return Config(**values).validate()


def load_config(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def serialize_config(cfg):
    """Render the fully resolved config, one section at a time."""
    by_section = {}
    for f in fields(Config):
        section, key = _ATTR_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        by_section.setdefault(section, []).append(f"{key} = {rendered}")
    blocks = []
    for section in ("data", "styler", "train", "augment", "ablate"):
        blocks.append(f"[{section}]")
        blocks.extend(by_section[section])
        blocks.append("")
    return "\n".join(blocks)

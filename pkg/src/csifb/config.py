"""Flat key=value experiment configuration files.

Grammar: UTF-8 text, one `key = value` per line, `#` starts a comment,
blank lines ignored. Unknown keys are rejected so typos fail loudly.
snr_db is the only stored dB quantity; everything downstream uses the
linear rho = 10^(snr_db/10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .chanmodel import ChannelGenConfig
from .trainharness import TrainConfig

MODEL_KINDS = ("csifbnet-s", "csifbnet-m", "baseline-ae", "baseline-bf")


class ConfigError(ValueError):
    """Raised for unknown keys, bad values, or missing required keys."""


def _parse_int(text):
    return int(text, 0)


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _parse_str(text):
    return text


def _parse_int_list(text):
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


def _parse_pair_list(text):
    pairs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        left, sep, right = part.partition(":")
        if not sep:
            raise ValueError(f"expected elements_h:elements_g, got {part!r}")
        pairs.append((int(left), int(right)))
    return tuple(pairs)


_PARSERS = {
    # channel
    "nt": _parse_int,
    "nc": _parse_int,
    "ns": _parse_int,
    "spread": _parse_float,
    "spacing_ratio": _parse_float,
    "seed": _parse_int,
    # model
    "model": _parse_str,
    "beta": _parse_int,
    "elements_h": _parse_int,
    "elements_g": _parse_int,
    "bits": _parse_int,
    "leaky_slope": _parse_float,
    "loss_variant": _parse_str,
    # training
    "batch_size": _parse_int,
    "epochs": _parse_int,
    "lr_init": _parse_float,
    "plateau_epochs": _parse_int,
    "lr_decay": _parse_float,
    "loss": _parse_str,
    # metrics
    "alpha": _parse_float,
    "snr_db": _parse_float,
    # sweeps
    "bit_list": _parse_int_list,
    "alloc_list": _parse_pair_list,
}


@dataclass
class ExperimentConfig:
    nt: int | None = None
    nc: int = 3
    ns: int = 20
    spread: float = math.radians(7.5)
    spacing_ratio: float = 0.5
    seed: int = 0
    model: str | None = None
    beta: int | None = None
    elements_h: int | None = None
    elements_g: int | None = None
    bits: int = 4
    leaky_slope: float = 0.2
    loss_variant: str = "abs2"
    batch_size: int = 500
    epochs: int = 200
    lr_init: float = 1e-3
    plateau_epochs: int = 40
    lr_decay: float = 0.5
    loss: str | None = None
    alpha: float = 0.0
    snr_db: float | None = None
    bit_list: tuple | None = None
    alloc_list: tuple | None = None

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{source}:{lineno}: expected `key = value`, got {raw!r}")
            key = key.strip()
            value = value.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = _PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        cfg = cls(**values)
        cfg._validate()
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read(), source=path)

    def _validate(self):
        if self.model is not None and self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODEL_KINDS}")
        if self.loss is not None and self.loss not in ("loss_s", "loss_m", "mse"):
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.loss_variant not in ("abs2", "re"):
            raise ConfigError(f"unknown loss_variant {self.loss_variant!r}")
        if self.bits < 1:
            raise ConfigError(f"bits must be >= 1, got {self.bits}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def rho(self) -> float | None:
        if self.snr_db is None:
            return None
        return 10.0 ** (self.snr_db / 10.0)

    def require(self, *keys):
        for key in keys:
            if getattr(self, key) is None:
                raise ConfigError(f"config key {key!r} is required for this command")
        return self

    def channel_config(self, nc: int | None = None, seed: int | None = None) -> ChannelGenConfig:
        self.require("nt")
        return ChannelGenConfig(
            n_t=self.nt, n_c=self.nc if nc is None else nc, n_s=self.ns,
            spacing_ratio=self.spacing_ratio, angular_spread=self.spread,
            seed=self.seed if seed is None else seed)

    def default_loss(self) -> str:
        if self.loss is not None:
            return self.loss
        if self.model == "csifbnet-s":
            return "loss_s"
        if self.model == "csifbnet-m":
            return "loss_m"
        if self.model == "baseline-ae":
            return "mse"
        if self.model == "baseline-bf":
            return "loss_m" if self.elements_g is not None else "loss_s"
        raise ConfigError("config key 'model' is required to derive a loss")

    def train_config(self, loss: str | None = None, seed: int | None = None,
                     alpha: float | None = None, rho: float | None = None) -> TrainConfig:
        loss = loss or self.default_loss()
        if rho is None:
            rho = self.rho
        return TrainConfig(
            loss=loss, epochs=self.epochs, batch_size=self.batch_size,
            lr_init=self.lr_init, plateau_epochs=self.plateau_epochs,
            lr_decay=self.lr_decay, seed=self.seed if seed is None else seed,
            alpha=self.alpha if alpha is None else alpha, rho=rho)

    def single_elements(self) -> int:
        """Codeword element count for single-stream models (beta or elements_h)."""
        from .models import elements_from_beta, validate_elements
        self.require("nt")
        if self.elements_h is not None:
            return validate_elements(self.nt, self.elements_h)
        if self.beta is not None:
            return elements_from_beta(self.nt, self.beta)
        raise ConfigError("one of 'beta' or 'elements_h' is required")

    def pair_elements(self) -> tuple:
        """(elements_h, elements_g) for two-stream models."""
        from .models import validate_elements
        self.require("nt")
        if self.elements_h is not None and self.elements_g is not None:
            return (validate_elements(self.nt, self.elements_h),
                    validate_elements(self.nt, self.elements_g))
        if self.beta is not None:
            from .models import elements_from_beta
            e = elements_from_beta(self.nt, self.beta)
            return e, e
        raise ConfigError("'elements_h' and 'elements_g' (or 'beta') are required")

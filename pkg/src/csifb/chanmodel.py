"""Synthetic multipath MISO channel generation and binary dataset persistence.

Each channel realization draws cluster center angles uniformly on
[-pi/2, pi/2], per-cluster sub-path angle offsets within a configurable
half-width, and i.i.d. circularly symmetric complex sub-path gains scaled so
that the expected squared channel norm equals the antenna count.

Generation is deterministic: every sample is produced from its own RNG
sub-stream derived from (dataset seed, stream id, sample index), so datasets
are reproducible bit-for-bit and samples may be generated in any order or in
parallel.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

DATASET_MAGIC = b"CSFB"
DATASET_VERSION = 1
FLAG_PAIRED = 0x0001

TRAIN_FRACTION = 0.8
VAL_FRACTION = 0.1

# header: magic, format version, flags, n_t, record count, seed
_HEADER = struct.Struct("<4sHHIQQ")

# RNG sub-stream ids (first element of the SeedSequence spawn key)
STREAM_H = 0
STREAM_G = 1
STREAM_SPLIT = 2


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not match the expected binary layout."""


@dataclass(frozen=True)
class ChannelGenConfig:
    """Parameters of the clustered multipath channel generator.

    angular_spread is the half-width (radians) of the uniform sub-path offset
    around each cluster center.
    """

    n_t: int
    n_c: int = 3
    n_s: int = 20
    spacing_ratio: float = 0.5
    angular_spread: float = math.radians(7.5)
    seed: int = 0

    def __post_init__(self):
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")
        if self.n_c < 1:
            raise ValueError(f"n_c must be >= 1, got {self.n_c}")
        if self.n_s < 1:
            raise ValueError(f"n_s must be >= 1, got {self.n_s}")
        if not (self.spacing_ratio > 0 and math.isfinite(self.spacing_ratio)):
            raise ValueError(f"spacing_ratio must be positive and finite, got {self.spacing_ratio}")
        if not (self.angular_spread >= 0 and math.isfinite(self.angular_spread)):
            raise ValueError(f"angular_spread must be >= 0 and finite, got {self.angular_spread}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")


def steering_vector(theta: float, n_t: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """ULA steering vector: entry k is exp(-j*2*pi*spacing_ratio*k*sin(theta))."""
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta}")
    if n_t < 1:
        raise ValueError(f"n_t must be >= 1, got {n_t}")
    if not (spacing_ratio > 0 and math.isfinite(spacing_ratio)):
        raise ValueError(f"spacing_ratio must be positive and finite, got {spacing_ratio}")
    k = np.arange(n_t)
    return np.exp(-2j * np.pi * spacing_ratio * math.sin(theta) * k)


def sample_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Deterministic per-(stream, sample) generator derived from a dataset seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.PCG64(ss))


def draw_path_params(config: ChannelGenConfig, rng: np.random.Generator):
    """Draw (angles, gains) for one realization, both shaped (n_c, n_s).

    Draw order is fixed (centers, offsets, gains) so the stream layout is part
    of the determinism contract. Gains are circularly symmetric complex
    Gaussian with variance 1/(n_c*n_s).
    """
    centers = rng.uniform(-np.pi / 2, np.pi / 2, size=config.n_c)
    offsets = rng.uniform(-config.angular_spread, config.angular_spread,
                          size=(config.n_c, config.n_s))
    angles = centers[:, None] + offsets
    reim = rng.standard_normal((config.n_c, config.n_s, 2))
    scale = math.sqrt(0.5 / (config.n_c * config.n_s))
    gains = (reim[..., 0] + 1j * reim[..., 1]) * scale
    return angles, gains


def channel_from_paths(angles: np.ndarray, gains: np.ndarray, n_t: int,
                       spacing_ratio: float) -> np.ndarray:
    """Superpose steering vectors: h = sum_p gains_p * a(angles_p)."""
    flat_angles = np.asarray(angles, dtype=np.float64).reshape(-1)
    flat_gains = np.asarray(gains, dtype=np.complex128).reshape(-1)
    k = np.arange(n_t)
    phases = -2j * np.pi * spacing_ratio * np.sin(flat_angles)[:, None] * k
    return flat_gains @ np.exp(phases)


def sample_channel(config: ChannelGenConfig, rng: np.random.Generator) -> np.ndarray:
    """One channel realization as a complex vector of length n_t."""
    angles, gains = draw_path_params(config, rng)
    return channel_from_paths(angles, gains, config.n_t, config.spacing_ratio)


def split_indices(count: int, seed: int):
    """Deterministic (train, val, test) index partition: 80/10/10 after a seeded shuffle."""
    rng = sample_rng(seed, STREAM_SPLIT, 0)
    perm = rng.permutation(count)
    n_train = int(count * TRAIN_FRACTION)
    n_val = int(count * VAL_FRACTION)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass
class Dataset:
    """In-memory channel dataset. h (and g when paired) are (count, n_t) complex64."""

    n_t: int
    seed: int
    h: np.ndarray
    g: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.h.shape[0]

    @property
    def paired(self) -> bool:
        return self.g is not None

    def splits(self):
        return split_indices(self.count, self.seed)


def generate_dataset(config: ChannelGenConfig, count: int, paired: bool = False,
                     out_path: str | None = None) -> Dataset:
    """Generate `count` samples (pairs when paired) and optionally persist them.

    The h-stream and g-stream use distinct RNG sub-streams, so the two halves
    of a paired dataset are statistically independent yet individually
    reproducible.
    """
    if count < 10:
        raise ValueError(f"count must be >= 10 for a non-degenerate 80/10/10 split, got {count}")
    h = np.empty((count, config.n_t), dtype=np.complex64)
    for i in range(count):
        h[i] = sample_channel(config, sample_rng(config.seed, STREAM_H, i))
    g = None
    if paired:
        g = np.empty((count, config.n_t), dtype=np.complex64)
        for i in range(count):
            g[i] = sample_channel(config, sample_rng(config.seed, STREAM_G, i))
    ds = Dataset(n_t=config.n_t, seed=config.seed, h=h, g=g)
    if out_path is not None:
        write_dataset(ds, out_path)
    return ds


def write_dataset(ds: Dataset, path: str) -> None:
    """Persist a dataset; the file appears atomically (write to temp, rename)."""
    flags = FLAG_PAIRED if ds.paired else 0
    header = _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, flags, ds.n_t, ds.count, ds.seed)
    h = np.ascontiguousarray(ds.h, dtype="<c8")
    if ds.paired:
        body = np.ascontiguousarray(np.stack([h, np.asarray(ds.g, dtype="<c8")], axis=1))
    else:
        body = h
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(body.tobytes())
    os.replace(tmp, path)


def read_dataset(path: str) -> Dataset:
    """Load a dataset written by write_dataset."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated header")
    magic, version, flags, n_t, count, seed = _HEADER.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise DatasetFormatError(f"{path}: unsupported format version {version}")
    paired = bool(flags & FLAG_PAIRED)
    per_record = (2 if paired else 1) * n_t
    expected = _HEADER.size + count * per_record * 8
    if len(raw) != expected:
        raise DatasetFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if paired:
        body = body.reshape(count, 2, n_t)
        return Dataset(n_t=n_t, seed=seed, h=body[:, 0].copy(), g=body[:, 1].copy())
    return Dataset(n_t=n_t, seed=seed, h=body.reshape(count, n_t).copy())
